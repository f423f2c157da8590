//! Stability certificates for the impulse system.
//!
//! Two sufficient conditions are machine-checked: an average-contraction
//! threshold on the Lipschitz constants, and a splitting certificate — two
//! admissible words with the same final symbol whose exact composed images
//! of the domain are disjoint. A Monte-Carlo synchronization test estimates
//! how often reversed-chain map compositions collapse the domain to a point.

use serde::Serialize;

use crate::error::StabilityError;
use crate::impulse::Cylinder;
use crate::maps::{compose_image, Interval, IntervalMap, DISJOINT_GAP};
use crate::rng::stream_rng;
use crate::simulate::ImpulseSystem;

/// Average-contraction report for the two-constant reduction: `L0` bounds the
/// impulse map, `L1` the ordinary map, `mean_time` is the expected number of
/// ordinary steps between impulses.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionReport {
    pub l0: f64,
    pub l1: f64,
    pub mean_time: f64,
    /// Normalized log form of the threshold comparison:
    /// `(log L1 + E·log L0) / (1 + E)`; negative exactly when `satisfied`.
    pub expectation: f64,
    /// `L0^{−E}`; the criterion is `L1 < threshold`.
    pub threshold: f64,
    pub satisfied: bool,
    /// Largest admissible mean time when the impulse map expands
    /// (`−log_{L0} L1` for `L0 > 1`); see [`max_expected_gap`].
    pub max_mean_time: Option<f64>,
    /// Stationary mean of `log L_{F}` under the countdown chain's invariant
    /// law, `(log L0 + E·log L1) / (1 + E)` — the long-run time average of
    /// per-step log-Lipschitz factors reported by the synchronization test.
    pub stationary_log_mean: f64,
}

/// Evaluates the two-constant average-contraction criterion `L1 < L0^{−E}`.
/// Zero constants (constant maps) count as satisfied with expectation `−∞`.
pub fn average_contraction(l0: f64, l1: f64, mean_time: f64) -> Result<ContractionReport, StabilityError> {
    if !(l0 >= 0.0 && l1 >= 0.0 && mean_time >= 0.0)
        || !l0.is_finite()
        || !l1.is_finite()
        || !mean_time.is_finite()
    {
        return Err(StabilityError::BadArguments);
    }
    let e = mean_time;
    let threshold = l0.powf(-e);
    let satisfied = l1 < threshold;
    // 0·ln(0) would be NaN; a zero mean simply drops the weighted term.
    let weighted = |l: f64| if e == 0.0 { 0.0 } else { e * l.ln() };
    let expectation = (l1.ln() + weighted(l0)) / (1.0 + e);
    let stationary_log_mean = (l0.ln() + weighted(l1)) / (1.0 + e);
    let max_mean_time = if l0 > 1.0 && l1 > 0.0 && l1 < 1.0 {
        Some(-(l1.ln() / l0.ln()))
    } else {
        None
    };
    Ok(ContractionReport {
        l0,
        l1,
        mean_time,
        expectation,
        threshold,
        satisfied,
        max_mean_time,
        stationary_log_mean,
    })
}

/// Range of admissible mean impulse times when the impulse map expands.
/// For `L0 > 1` the criterion holds for some impulse-time law iff
/// `log_{L0} L1 < 0`, in which case any mean below `−log_{L0} L1` works.
/// `L0 = 1` admits any mean iff `L1 < 1` (returned as `+∞`).
pub fn max_expected_gap(l0: f64, l1: f64) -> Result<Option<f64>, StabilityError> {
    if !(l0.is_finite() && l1.is_finite() && l0 >= 0.0 && l1 >= 0.0) {
        return Err(StabilityError::BadArguments);
    }
    if l0 == 1.0 {
        return Ok((l1 < 1.0).then_some(f64::INFINITY));
    }
    if l0 < 1.0 {
        return Err(StabilityError::GapRequiresExpandingImpulse);
    }
    if l1 <= 0.0 {
        return Ok(Some(f64::INFINITY));
    }
    let log_ratio = l1.ln() / l0.ln();
    Ok((log_ratio < 0.0).then_some(-log_ratio))
}

/// Splitting certificate: two admissible words (chain order, first symbol
/// applied first) with equal final symbols whose exact composed images of
/// the domain are disjoint with a safety gap.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplittingCertificate {
    pub seq_a: Vec<usize>,
    pub seq_b: Vec<usize>,
    pub image_a: Interval,
    pub image_b: Interval,
    pub gap: f64,
    /// Cylinder probabilities under the stationary forward chain.
    pub prob_a: f64,
    pub prob_b: f64,
    /// Same words under the reversed chain, recorded for reference; the
    /// admissibility requirement is the forward one.
    pub reversed_prob_a: f64,
    pub reversed_prob_b: f64,
}

/// Image of a word under the system maps: symbols in chain order, the first
/// symbol's map applied first, so the final symbol's map is outermost.
pub fn word_image(sys: &ImpulseSystem, word: &[usize]) -> Interval {
    let maps: Vec<&IntervalMap> = word.iter().rev().map(|s| sys.map_for_state(*s)).collect();
    compose_image(&maps, &sys.domain())
}

fn word_forward_prob(sys: &ImpulseSystem, word: &[usize]) -> f64 {
    Cylinder::new(word.to_vec())
        .map(|c| sys.times().cylinder_prob_forward(&c))
        .unwrap_or(0.0)
}

fn word_reversed_prob(sys: &ImpulseSystem, word: &[usize]) -> f64 {
    Cylinder::new(word.to_vec())
        .map(|c| sys.times().cylinder_prob_reversed(&c))
        .unwrap_or(0.0)
}

fn build_certificate(
    sys: &ImpulseSystem,
    seq_a: Vec<usize>,
    seq_b: Vec<usize>,
) -> Option<SplittingCertificate> {
    let image_a = word_image(sys, &seq_a);
    let image_b = word_image(sys, &seq_b);
    let gap = image_a.gap_to(&image_b);
    if gap <= DISJOINT_GAP {
        return None;
    }
    let prob_a = word_forward_prob(sys, &seq_a);
    let prob_b = word_forward_prob(sys, &seq_b);
    if prob_a <= 0.0 || prob_b <= 0.0 {
        return None;
    }
    let reversed_prob_a = word_reversed_prob(sys, &seq_a);
    let reversed_prob_b = word_reversed_prob(sys, &seq_b);
    Some(SplittingCertificate {
        seq_a,
        seq_b,
        image_a,
        image_b,
        gap,
        prob_a,
        prob_b,
        reversed_prob_a,
        reversed_prob_b,
    })
}

/// Re-derives every field of a certificate from the system: symbol equality,
/// admissibility under the forward chain, and image disjointness with the
/// safety gap. A certificate that validates is sound evidence; absence of
/// one never disproves anything.
pub fn validate_certificate(
    sys: &ImpulseSystem,
    cert: &SplittingCertificate,
) -> Result<SplittingCertificate, StabilityError> {
    if cert.seq_a.is_empty() || cert.seq_b.is_empty() {
        return Err(StabilityError::InvalidCertificate("empty sequence".into()));
    }
    if cert.seq_a.last() != cert.seq_b.last() {
        return Err(StabilityError::InvalidCertificate(
            "final symbols differ".into(),
        ));
    }
    if !(sys.f().is_injective() && sys.g().is_injective()) {
        return Err(StabilityError::NotInjective);
    }
    let rebuilt = build_certificate(sys, cert.seq_a.clone(), cert.seq_b.clone()).ok_or_else(|| {
        StabilityError::InvalidCertificate(
            "images not disjoint or sequences inadmissible on recomputation".into(),
        )
    })?;
    Ok(rebuilt)
}

/// Breadth-first search for a splitting certificate over admissible words of
/// length at most `max_len`, shortest first and lexicographic within a
/// length. Nodes are deduplicated by (final symbol, exact image) and the
/// search carries an overall node budget; `None` means the bounded search
/// found nothing, not that no certificate exists.
pub fn find_splitting(
    sys: &ImpulseSystem,
    max_len: usize,
) -> Result<Option<SplittingCertificate>, StabilityError> {
    const NODE_BUDGET: usize = 200_000;
    if !(sys.f().is_injective() && sys.g().is_injective()) {
        return Err(StabilityError::NotInjective);
    }
    let max_len = max_len.min(64);
    let dist = sys.times();

    // Symbols worth considering: renewal targets with positive probability
    // and countdown entry points with positive stationary weight.
    let state_cap = max_len;
    let renewals: Vec<usize> = (0..=state_cap).filter(|j| dist.pmf(*j) > 0.0).collect();

    #[derive(Clone)]
    struct Node {
        word: Vec<usize>,
        image: Interval,
    }

    let mut frontier: Vec<Node> = Vec::new();
    for s in 0..=state_cap {
        if dist.stationary_weight(s) > 0.0 {
            frontier.push(Node {
                word: vec![s],
                image: word_image(sys, &[s]),
            });
        }
    }

    // Per final symbol: list of (image, word) seen so far.
    let mut seen: std::collections::HashMap<usize, Vec<(Interval, Vec<usize>)>> =
        std::collections::HashMap::new();
    let mut visited: std::collections::HashSet<(usize, u64, u64)> = std::collections::HashSet::new();

    let key = |s: usize, iv: &Interval| (s, iv.lo().to_bits(), iv.hi().to_bits());

    let mut expanded = 0usize;
    for _len in 1..=max_len {
        let mut next: Vec<Node> = Vec::new();
        for node in &frontier {
            let last = *node.word.last().unwrap();
            if !visited.insert(key(last, &node.image)) {
                continue;
            }
            expanded += 1;
            if expanded > NODE_BUDGET {
                return Ok(None);
            }
            // Try to pair with an earlier word sharing the final symbol.
            let entry = seen.entry(last).or_default();
            for (other_image, other_word) in entry.iter() {
                if node.image.gap_to(other_image) > DISJOINT_GAP {
                    let a = other_word.clone();
                    let b = node.word.clone();
                    if let Some(cert) = build_certificate(sys, a, b) {
                        return Ok(Some(cert));
                    }
                }
            }
            entry.push((node.image, node.word.clone()));

            if node.word.len() == max_len {
                continue;
            }
            // Extend by one chain step: countdown, or renewal from zero.
            if last >= 1 {
                let mut word = node.word.clone();
                word.push(last - 1);
                let image = sys.map_for_state(last - 1).image(&node.image);
                next.push(Node { word, image });
            } else {
                for j in &renewals {
                    let mut word = node.word.clone();
                    word.push(*j);
                    let image = sys.map_for_state(*j).image(&node.image);
                    next.push(Node { word, image });
                }
            }
        }
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    Ok(None)
}

/// Diagnostics from the attracting-fixed-point construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPointDiagnostics {
    pub fixed_point_f: Option<f64>,
    pub fixed_point_g: Option<f64>,
    pub separation_steps: Option<usize>,
    pub note: String,
}

const FP_MAX_ITER: usize = 100_000;
const FP_BRACKET_TOL: f64 = 1e-10;

/// Iterates `map` from a starting point until successive values settle.
fn orbit_limit(map: &IntervalMap, mut x: f64) -> Option<f64> {
    let scale = map.domain().diam().max(1.0);
    for _ in 0..FP_MAX_ITER {
        let y = map.eval(x).ok()?;
        if (y - x).abs() < 1e-14 * scale {
            return Some(y);
        }
        x = y;
    }
    None
}

/// Operational "unique attracting fixed point": orbits started just inside
/// both domain endpoints converge to a common limit. (Orbits start slightly
/// inside because an endpoint can itself be a repelling fixed point that
/// traps its exact orbit.)
fn attracting_fixed_point(map: &IntervalMap) -> Option<f64> {
    let dom = map.domain();
    let offset = dom.diam() * 1e-3;
    let a = orbit_limit(map, dom.lo() + offset)?;
    let b = orbit_limit(map, dom.hi() - offset)?;
    ((a - b).abs() < FP_BRACKET_TOL).then_some(0.5 * (a + b))
}

/// Splitting certificate via the attracting-fixed-point construction: when
/// `f` and `g` have unique attracting fixed points `a`, `b` with `g(a) ≠ b`,
/// some `n` separates `g(fⁿ(I))` from `gⁿ(I)`. The words are then a block of
/// `n` zeros against the countdown `n, n−1, …, 0`. Returns the certificate
/// with diagnostics; `None` with diagnostics when the construction fails.
pub fn fixed_point_splitting(
    sys: &ImpulseSystem,
) -> Result<(Option<SplittingCertificate>, FixedPointDiagnostics), StabilityError> {
    if !(sys.f().is_injective() && sys.g().is_injective()) {
        return Err(StabilityError::NotInjective);
    }
    let mut diag = FixedPointDiagnostics {
        fixed_point_f: None,
        fixed_point_g: None,
        separation_steps: None,
        note: String::new(),
    };
    let Some(a) = attracting_fixed_point(sys.f()) else {
        diag.note = "no unique attracting fixed point for the ordinary map".into();
        return Ok((None, diag));
    };
    diag.fixed_point_f = Some(a);
    let Some(b) = attracting_fixed_point(sys.g()) else {
        diag.note = "no unique attracting fixed point for the impulse map".into();
        return Ok((None, diag));
    };
    diag.fixed_point_g = Some(b);
    let ga = sys.g().eval(a).map_err(|e| {
        StabilityError::InvalidCertificate(format!("impulse map undefined at fixed point: {e}"))
    })?;
    if (ga - b).abs() <= DISJOINT_GAP {
        diag.note = "impulse image of the ordinary fixed point coincides with the impulse fixed point".into();
        return Ok((None, diag));
    }

    // Search the separation step among admissible block lengths.
    let max_n = match sys.times().support_bound() {
        Some(s) => s.min(128),
        None => 128,
    };
    let domain = sys.domain();
    let mut f_image = domain;
    let mut g_image = domain;
    for n in 1..=max_n {
        f_image = sys.f().image(&f_image);
        g_image = sys.g().image(&g_image);
        let gfn = sys.g().image(&f_image);
        if gfn.gap_to(&g_image) > DISJOINT_GAP {
            // Zeros block (image gⁿ(I)) against the countdown n, n−1, …, 0
            // (image g(fⁿ(I))); both end in symbol 0.
            let seq_a = vec![0usize; n];
            let seq_b: Vec<usize> = (0..=n).rev().collect();
            if let Some(cert) = build_certificate(sys, seq_a, seq_b) {
                diag.separation_steps = Some(n);
                return Ok((Some(cert), diag));
            }
        }
    }
    diag.note = "image separation not reached within the admissible block lengths".into();
    Ok((None, diag))
}

/// Result of the Monte-Carlo synchronization test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynchronizationReport {
    pub paths: usize,
    pub path_len: usize,
    pub tol: f64,
    /// Fraction of sampled reversed-chain words whose composed image of the
    /// domain has diameter at most `tol`.
    pub fraction_synchronized: f64,
    /// Mean over paths of the per-step average log-Lipschitz factor, when
    /// both maps declare constants. Compare with
    /// [`ContractionReport::stationary_log_mean`].
    pub mean_log_lipschitz: Option<f64>,
}

/// Samples reversed-chain words and measures how often the composed map
/// images collapse. The reversed chain is the relevant sampling measure for
/// the synchronization set; word symbol `ξ_k` contributes the map `f_{ξ_k}`
/// with `ξ_{len−1}` applied first.
pub fn synchronization_test(
    sys: &ImpulseSystem,
    n_paths: usize,
    path_len: usize,
    tol: f64,
    master_seed: u64,
) -> SynchronizationReport {
    let lips = match (sys.g().lipschitz(), sys.f().lipschitz()) {
        (Some(l0), Some(l1)) => Some((l0, l1)),
        _ => None,
    };
    let mut synchronized = 0usize;
    let mut log_sum = 0.0f64;
    for i in 0..n_paths {
        let mut rng = stream_rng(master_seed, i as u64);
        let path = sys.times().sample_reversed_path(&mut rng, path_len);
        let mut image = sys.domain();
        for s in path.iter().rev() {
            image = sys.map_for_state(*s).image(&image);
        }
        if image.diam() <= tol {
            synchronized += 1;
        }
        if let Some((l0, l1)) = lips {
            let acc: f64 = path
                .iter()
                .map(|s| if *s == 0 { l0.ln() } else { l1.ln() })
                .sum();
            log_sum += acc / path_len as f64;
        }
    }
    SynchronizationReport {
        paths: n_paths,
        path_len,
        tol,
        fraction_synchronized: synchronized as f64 / n_paths as f64,
        mean_log_lipschitz: lips.map(|_| log_sum / n_paths as f64),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::impulse::ImpulseTimeDistribution;
    use crate::maps::BranchRule;
    use rand::Rng;

    fn unit() -> Interval {
        Interval::domain(0.0, 1.0).unwrap()
    }

    fn two() -> Interval {
        Interval::domain(0.0, 2.0).unwrap()
    }

    /// Affine attraction toward 2 against the square root, on [0, 2].
    fn sqrt_system() -> ImpulseSystem {
        let slope = 1.0 - 2.0f64.sqrt() / 2.0;
        let f = IntervalMap::affine(two(), slope, 2.0f64.sqrt()).unwrap();
        let g = IntervalMap::power(two(), 0.5).unwrap();
        ImpulseSystem::new(f, g, ImpulseTimeDistribution::geometric(0.5).unwrap()).unwrap()
    }

    #[test]
    fn contraction_thresholds_match_worked_examples() {
        // Contracting impulse (L0 = 1/8) against an expanding map (L1 = 8):
        // satisfied exactly for mean time above one.
        let r = average_contraction(0.125, 8.0, 2.0).unwrap();
        assert!(r.satisfied);
        let r = average_contraction(0.125, 8.0, 0.5).unwrap();
        assert!(!r.satisfied);
        // Swapped roles: satisfied exactly below one.
        let r = average_contraction(8.0, 0.125, 0.5).unwrap();
        assert!(r.satisfied);
        let r = average_contraction(8.0, 0.125, 2.0).unwrap();
        assert!(!r.satisfied);
    }

    #[test]
    fn contraction_boundary_not_satisfied() {
        let r = average_contraction(1.0, 1.0, 3.0).unwrap();
        assert!(!r.satisfied);
        assert_eq!(r.expectation, 0.0);
    }

    #[test]
    fn contraction_constant_map_convention() {
        let r = average_contraction(0.0, 1.0, 1.0).unwrap();
        assert!(r.satisfied);
        assert!(r.expectation.is_infinite() && r.expectation < 0.0);
        // Degenerate always-impulse corner stays finite and consistent.
        let r = average_contraction(0.0, 0.5, 0.0).unwrap();
        assert!(r.satisfied);
        assert!(!r.expectation.is_nan());
        assert_eq!(r.satisfied, r.expectation < 0.0);
    }

    #[test]
    fn expectation_sign_matches_threshold() {
        let mut rng = stream_rng(404, 0);
        for _ in 0..10_000 {
            let l0 = 0.05 + 10.0 * rng.gen::<f64>();
            let l1 = 0.05 + 10.0 * rng.gen::<f64>();
            let e = 5.0 * rng.gen::<f64>();
            let r = average_contraction(l0, l1, e).unwrap();
            if (l1 - r.threshold).abs() <= 1e-12 || r.expectation.abs() <= 1e-12 {
                continue; // ties excluded
            }
            assert_eq!(r.satisfied, r.expectation < 0.0, "l0={l0} l1={l1} e={e}");
            assert_eq!(r.satisfied, l1 < r.threshold);
        }
    }

    #[test]
    fn gap_bounds() {
        assert!((max_expected_gap(8.0, 0.125).unwrap().unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(max_expected_gap(2.0, 2.0).unwrap(), None);
        assert_eq!(max_expected_gap(1.0, 0.5).unwrap(), Some(f64::INFINITY));
        assert_eq!(max_expected_gap(1.0, 1.5).unwrap(), None);
        assert!(max_expected_gap(0.5, 0.5).is_err());
    }

    #[test]
    fn distinct_affine_pairs_always_contract() {
        // Random distinct affine self-maps of the unit interval have slope
        // moduli below one, so the criterion holds for any positive mean.
        let mut rng = stream_rng(11, 0);
        for _ in 0..500 {
            let a0: f64 = 1.9 * rng.gen::<f64>() - 0.95;
            let a1: f64 = 1.9 * rng.gen::<f64>() - 0.95;
            // Offsets keeping the image inside [0,1].
            let b0 = if a0 >= 0.0 { (1.0 - a0) * rng.gen::<f64>() } else { -a0 + (1.0 + a0) * rng.gen::<f64>() };
            let b1 = if a1 >= 0.0 { (1.0 - a1) * rng.gen::<f64>() } else { -a1 + (1.0 + a1) * rng.gen::<f64>() };
            let g = IntervalMap::affine(unit(), a0, b0).unwrap();
            let f = IntervalMap::affine(unit(), a1, b1).unwrap();
            if (a0 - a1).abs() < 1e-9 && (b0 - b1).abs() < 1e-9 {
                continue;
            }
            let l0 = g.lipschitz_estimate(8);
            let l1 = f.lipschitz_estimate(8);
            let e = 4.0 * rng.gen::<f64>() + 1e-3;
            let r = average_contraction(l0, l1, e).unwrap();
            assert!(r.satisfied, "a0={a0} a1={a1} e={e}");
        }
    }

    #[test]
    fn contracting_impulse_admits_some_mean() {
        // Whenever L0 < 1 there is a mean time making the report satisfied.
        let mut rng = stream_rng(12, 0);
        for _ in 0..500 {
            let l0 = 0.999 * rng.gen::<f64>() + 1e-4;
            let l1 = 10.0 * rng.gen::<f64>() + 1e-4;
            // Threshold L0^{−E} grows without bound in E, so a large enough
            // mean always clears L1.
            let e = if l1 < 1.0 { 0.5 } else { l1.ln() / -l0.ln() + 1.0 };
            let r = average_contraction(l0, l1, e).unwrap();
            assert!(r.satisfied, "l0={l0} l1={l1} e={e}");
        }
    }

    #[test]
    fn splitting_found_for_sqrt_system() {
        let sys = sqrt_system();
        let cert = find_splitting(&sys, 32).unwrap().expect("certificate");
        assert_eq!(cert.seq_a.last(), cert.seq_b.last());
        assert!(cert.gap > DISJOINT_GAP);
        assert!(cert.prob_a > 0.0 && cert.prob_b > 0.0);
        let revalidated = validate_certificate(&sys, &cert).unwrap();
        assert_eq!(revalidated.seq_a, cert.seq_a);
    }

    #[test]
    fn identity_maps_never_split() {
        let f = IntervalMap::identity(unit()).unwrap();
        let g = IntervalMap::identity(unit()).unwrap();
        let sys =
            ImpulseSystem::new(f, g, ImpulseTimeDistribution::geometric(0.5).unwrap()).unwrap();
        assert!(find_splitting(&sys, 12).unwrap().is_none());
    }

    #[test]
    fn constant_maps_rejected() {
        let f = IntervalMap::constant(unit(), 0.8).unwrap();
        let g = IntervalMap::constant(unit(), 0.2).unwrap();
        let sys =
            ImpulseSystem::new(f, g, ImpulseTimeDistribution::bernoulli(0.5).unwrap()).unwrap();
        assert!(matches!(find_splitting(&sys, 8), Err(StabilityError::NotInjective)));
    }

    #[test]
    fn fixed_point_splitting_sqrt_system() {
        let sys = sqrt_system();
        let (cert, diag) = fixed_point_splitting(&sys).unwrap();
        let cert = cert.expect("certificate");
        assert!((diag.fixed_point_f.unwrap() - 2.0).abs() < 1e-6);
        // The impulse map's attracting fixed point: orbits of sqrt converge
        // to 1 from any interior start.
        assert!((diag.fixed_point_g.unwrap() - 1.0).abs() < 1e-6);
        // Certificate also passes the search validator.
        assert!(validate_certificate(&sys, &cert).is_ok());
        // Zeros block against a countdown block ending at the same symbol.
        assert!(cert.seq_a.iter().all(|s| *s == 0));
        assert_eq!(cert.seq_a.last(), cert.seq_b.last());
    }

    #[test]
    fn fixed_point_splitting_affine_pair() {
        // f = x/2 (fixed point 0), g = x/2 + 1/2 (fixed point 1): g(0) = 1/2 ≠ 1.
        let f = IntervalMap::affine(unit(), 0.5, 0.0).unwrap();
        let g = IntervalMap::affine(unit(), 0.5, 0.5).unwrap();
        let sys =
            ImpulseSystem::new(f, g, ImpulseTimeDistribution::geometric(0.5).unwrap()).unwrap();
        let (cert, diag) = fixed_point_splitting(&sys).unwrap();
        assert!((diag.fixed_point_f.unwrap() - 0.0).abs() < 1e-8);
        assert!((diag.fixed_point_g.unwrap() - 1.0).abs() < 1e-8);
        assert!(cert.is_some());
    }

    #[test]
    fn shared_fixed_point_yields_absent() {
        // f = g: the impulse image of f's fixed point is the fixed point of g.
        let f = IntervalMap::affine(unit(), 0.5, 0.25).unwrap();
        let g = IntervalMap::affine(unit(), 0.5, 0.25).unwrap();
        let sys =
            ImpulseSystem::new(f, g, ImpulseTimeDistribution::geometric(0.5).unwrap()).unwrap();
        let (cert, diag) = fixed_point_splitting(&sys).unwrap();
        assert!(cert.is_none());
        assert!(!diag.note.is_empty());
    }

    #[test]
    fn synchronization_identity_zero_constant_one() {
        let id_sys = {
            let f = IntervalMap::identity(unit()).unwrap();
            let g = IntervalMap::identity(unit()).unwrap();
            ImpulseSystem::new(f, g, ImpulseTimeDistribution::bernoulli(0.5).unwrap()).unwrap()
        };
        let r = synchronization_test(&id_sys, 200, 50, 1e-6, 3);
        assert_eq!(r.fraction_synchronized, 0.0);

        let collapse_sys = {
            let f = IntervalMap::identity(unit()).unwrap();
            let g = IntervalMap::constant(unit(), 0.4).unwrap();
            ImpulseSystem::new(f, g, ImpulseTimeDistribution::bernoulli(0.5).unwrap()).unwrap()
        };
        let r = synchronization_test(&collapse_sys, 200, 50, 1e-6, 3);
        assert_eq!(r.fraction_synchronized, 1.0);
    }

    #[test]
    fn synchronization_log_mean_matches_stationary_average() {
        // Long-run average of per-step log-Lipschitz factors converges to
        // the stationary mean (log L0 + E log L1) / (1 + E).
        let dom = two();
        let f = IntervalMap::from_branches(
            dom,
            vec![
                (
                    Interval::new(0.0, 1.0).unwrap(),
                    BranchRule::Affine { slope: 1.0, intercept: 1.0 },
                ),
                (
                    Interval::new(1.0, 2.0).unwrap(),
                    BranchRule::Constant { value: 2.0 },
                ),
            ],
        )
        .unwrap()
        .with_lipschitz(1.0)
        .unwrap();
        let g = IntervalMap::affine(dom, 0.5, 0.0).unwrap().with_lipschitz(0.5).unwrap();
        let sys =
            ImpulseSystem::new(f, g, ImpulseTimeDistribution::bernoulli(0.5).unwrap()).unwrap();
        let r = synchronization_test(&sys, 400, 400, 1e-6, 17);
        let report = average_contraction(0.5, 1.0, 0.5).unwrap();
        let mean = r.mean_log_lipschitz.unwrap();
        assert!(
            (mean - report.stationary_log_mean).abs() < 0.02,
            "mean {mean} vs {}",
            report.stationary_log_mean
        );
        assert!(report.satisfied);
    }
}
