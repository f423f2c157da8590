//! Output formats: CSV tables with a config-hash comment line and the
//! plain-text splitting-certificate report.
//!
//! Every numeric file starts with `# config <hash> seed <seed>` followed by
//! a header row.
//! Floats are written in shortest round-trip form, so identical runs produce
//! byte-identical files.

use std::fmt::Write as _;
use std::io::{self, Write};

use crate::error::StabilityError;
use crate::impulse::StationaryStateDistribution;
use crate::operator::{IterationDiagnostics, ProductMeasure};
use crate::simulate::{EmpiricalCdf, Trajectory};
use crate::stability::SplittingCertificate;

pub fn write_ecdf_csv<W: Write>(
    w: &mut W,
    hash: &str,
    seed: u64,
    ecdf: &EmpiricalCdf,
) -> io::Result<()> {
    writeln!(w, "# config {hash} seed {seed}")?;
    writeln!(w, "x,cdf")?;
    let n = ecdf.len() as f64;
    for (i, x) in ecdf.values().iter().enumerate() {
        writeln!(w, "{x},{}", (i + 1) as f64 / n)?;
    }
    Ok(())
}

pub fn write_trajectory_csv<W: Write>(
    w: &mut W,
    hash: &str,
    seed: u64,
    t: &Trajectory,
) -> io::Result<()> {
    writeln!(w, "# config {hash} seed {seed}")?;
    writeln!(w, "n,countdown,x")?;
    for (n, (k, x)) in t.states.iter().enumerate() {
        writeln!(w, "{n},{k},{x}")?;
    }
    Ok(())
}

pub fn write_measure_csv<W: Write>(
    w: &mut W,
    hash: &str,
    seed: u64,
    mu: &ProductMeasure,
) -> io::Result<()> {
    writeln!(w, "# config {hash} seed {seed}")?;
    writeln!(w, "# tail_mass {}", mu.tail_mass())?;
    writeln!(w, "state,bin_lo,bin_hi,mass")?;
    let grid = mu.grid();
    for (j, row) in mu.rows().iter().enumerate() {
        for (b, mass) in row.iter().enumerate() {
            let iv = grid.bin_interval(b);
            writeln!(w, "{j},{},{},{mass}", iv.lo(), iv.hi())?;
        }
    }
    Ok(())
}

pub fn write_diagnostics_csv<W: Write>(
    w: &mut W,
    hash: &str,
    seed: u64,
    steps: &[IterationDiagnostics],
) -> io::Result<()> {
    writeln!(w, "# config {hash} seed {seed}")?;
    writeln!(w, "n,tv_state,sup_cdf_delta")?;
    for d in steps {
        writeln!(w, "{},{},{}", d.step, d.tv_state, d.sup_cdf_delta)?;
    }
    Ok(())
}

pub fn write_stationary_csv<W: Write>(
    w: &mut W,
    hash: &str,
    seed: u64,
    m: &StationaryStateDistribution,
) -> io::Result<()> {
    writeln!(w, "# config {hash} seed {seed}")?;
    writeln!(w, "# tail_mass {}", m.tail_mass)?;
    writeln!(w, "state,weight")?;
    for (i, weight) in m.weights.iter().enumerate() {
        writeln!(w, "{i},{weight}")?;
    }
    Ok(())
}

/// Comparison table behind the distribution plots: closed-form, operator and
/// empirical CDF columns at the same abscissas. Missing columns stay empty.
pub fn write_cdf_table_csv<W: Write>(
    w: &mut W,
    hash: &str,
    seed: u64,
    xs: &[f64],
    closed: Option<&dyn Fn(f64) -> f64>,
    operator: Option<&dyn Fn(f64) -> f64>,
    empirical: Option<&EmpiricalCdf>,
) -> io::Result<()> {
    writeln!(w, "# config {hash} seed {seed}")?;
    writeln!(w, "a,cdf_closed,cdf_operator,cdf_empirical")?;
    for a in xs {
        let mut line = String::new();
        write!(line, "{a},").unwrap();
        if let Some(f) = closed {
            write!(line, "{}", f(*a)).unwrap();
        }
        line.push(',');
        if let Some(f) = operator {
            write!(line, "{}", f(*a)).unwrap();
        }
        line.push(',');
        if let Some(e) = empirical {
            write!(line, "{}", e.eval(*a)).unwrap();
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

const CERT_HEADER: &str = "impulse splitting certificate v1";

/// Self-contained text form of a splitting certificate. Parsed back by
/// [`parse_certificate`] and re-checked against the system.
pub fn format_certificate(hash: &str, cert: &SplittingCertificate) -> String {
    let seq = |s: &[usize]| {
        s.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
    };
    let mut out = String::new();
    writeln!(out, "# {CERT_HEADER}").unwrap();
    writeln!(out, "config: {hash}").unwrap();
    writeln!(out, "seq_a: {}", seq(&cert.seq_a)).unwrap();
    writeln!(out, "seq_b: {}", seq(&cert.seq_b)).unwrap();
    writeln!(out, "image_a: {},{}", cert.image_a.lo(), cert.image_a.hi()).unwrap();
    writeln!(out, "image_b: {},{}", cert.image_b.lo(), cert.image_b.hi()).unwrap();
    writeln!(out, "gap: {}", cert.gap).unwrap();
    writeln!(out, "prob_a: {}", cert.prob_a).unwrap();
    writeln!(out, "prob_b: {}", cert.prob_b).unwrap();
    writeln!(out, "reversed_prob_a: {}", cert.reversed_prob_a).unwrap();
    writeln!(out, "reversed_prob_b: {}", cert.reversed_prob_b).unwrap();
    out
}

/// Parses the text form produced by [`format_certificate`]. Only the two
/// sequences are authoritative; every numeric field is recomputed during
/// validation.
pub fn parse_certificate(text: &str) -> Result<SplittingCertificate, StabilityError> {
    let mut seq_a: Option<Vec<usize>> = None;
    let mut seq_b: Option<Vec<usize>> = None;
    let parse_seq = |value: &str| -> Result<Vec<usize>, StabilityError> {
        value
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<usize>()
                    .map_err(|e| StabilityError::InvalidCertificate(format!("bad symbol: {e}")))
            })
            .collect()
    };
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once(':') else {
            continue;
        };
        match key.trim() {
            "seq_a" => seq_a = Some(parse_seq(value)?),
            "seq_b" => seq_b = Some(parse_seq(value)?),
            _ => {}
        }
    }
    let seq_a = seq_a.ok_or_else(|| StabilityError::InvalidCertificate("missing seq_a".into()))?;
    let seq_b = seq_b.ok_or_else(|| StabilityError::InvalidCertificate("missing seq_b".into()))?;
    if seq_a.is_empty() || seq_b.is_empty() {
        return Err(StabilityError::InvalidCertificate("empty sequence".into()));
    }
    Ok(SplittingCertificate {
        seq_a,
        seq_b,
        image_a: crate::maps::Interval::point(0.0),
        image_b: crate::maps::Interval::point(0.0),
        gap: 0.0,
        prob_a: 0.0,
        prob_b: 0.0,
        reversed_prob_a: 0.0,
        reversed_prob_b: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::Interval;

    #[test]
    fn ecdf_csv_shape() {
        let e = EmpiricalCdf::from_samples(vec![0.5, 0.25]);
        let mut buf = Vec::new();
        write_ecdf_csv(&mut buf, "cafe", 7, &e).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# config cafe seed 7");
        assert_eq!(lines[1], "x,cdf");
        assert_eq!(lines[2], "0.25,0.5");
        assert_eq!(lines[3], "0.5,1");
    }

    #[test]
    fn certificate_roundtrip() {
        let cert = SplittingCertificate {
            seq_a: vec![0, 0],
            seq_b: vec![2, 1, 0],
            image_a: Interval::new(0.0, 1.0).unwrap(),
            image_b: Interval::new(1.5, 2.0).unwrap(),
            gap: 0.5,
            prob_a: 0.25,
            prob_b: 0.125,
            reversed_prob_a: 0.25,
            reversed_prob_b: 0.0,
        };
        let text = format_certificate("beef", &cert);
        let parsed = parse_certificate(&text).unwrap();
        assert_eq!(parsed.seq_a, cert.seq_a);
        assert_eq!(parsed.seq_b, cert.seq_b);
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(parse_certificate("nothing here").is_err());
        assert!(parse_certificate("seq_a: 1,x\nseq_b: 0").is_err());
    }
}
