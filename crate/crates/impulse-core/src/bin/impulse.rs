//! Experiment runner for impulse-driven interval dynamics.
//!
//! Subcommands map onto the library layers: Monte-Carlo simulation, transfer
//! operator iteration, stability certificates, the collapsed/lifted
//! stationary construction, and the built-in verification suite. All outputs
//! are deterministic for a fixed `(config, seed)` pair and carry the config
//! hash.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use impulse_core::config::ExperimentConfig;
use impulse_core::io;
use impulse_core::operator::{
    initial_pair_measure, iterate_to_convergence, BinnedMeasure, GridSpec,
};
use impulse_core::simulate::{simulate_ensemble_from, simulate_trajectory};
use impulse_core::stability::{
    average_contraction, find_splitting, fixed_point_splitting, synchronization_test,
    validate_certificate,
};
use impulse_core::stationary::{
    collapsed_stationary, example_cdf, fixed_point_residual, lift_stationary, CollapsedIfs,
};
use impulse_core::suite;

const EXIT_OK: u8 = 0;
const EXIT_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NONCONVERGED: u8 = 3;
const EXIT_NO_CERTIFICATE: u8 = 4;

#[derive(Parser)]
#[command(name = "impulse", version, about = "Interval dynamics with randomly timed impulses")]
struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed; overrides the config and the IMPULSE_SEED variable.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (results are thread-count invariant).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ensemble simulation: empirical CDF of the time-n marginal.
    Simulate,
    /// Transfer-operator iteration with convergence diagnostics.
    Evolve,
    /// Average-contraction certificate from Lipschitz constants.
    CheckContraction {
        /// Impulse-map Lipschitz constant (default: the declared one).
        #[arg(long)]
        l0: Option<f64>,
        /// Ordinary-map Lipschitz constant (default: the declared one).
        #[arg(long)]
        l1: Option<f64>,
        /// Mean impulse time (default: from the configured distribution).
        #[arg(long)]
        mean: Option<f64>,
    },
    /// Bounded search for a splitting certificate.
    FindSplitting {
        #[arg(long)]
        max_len: Option<usize>,
    },
    /// Re-check a previously written splitting certificate.
    ValidateCertificate {
        #[arg(long)]
        certificate: PathBuf,
    },
    /// Collapsed stationary law, its lift, and the CDF comparison table.
    Stationary {
        /// Include the bundled closed-form CDF column.
        #[arg(long)]
        closed_form: bool,
        /// Also simulate an ensemble for the empirical column.
        #[arg(long)]
        empirical: bool,
    },
    /// Monte-Carlo synchronization fractions over reversed paths.
    SyncTest,
    /// One sampled trajectory dump.
    Trajectory {
        #[arg(long, default_value_t = 0.5)]
        x0: f64,
        #[arg(long, default_value_t = 0)]
        stream: u64,
    },
    /// Run the built-in verification suite and print one line per criterion.
    ReproducePaper,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, String> {
    let Some(path) = &cli.config else {
        return Err("--config is required for this subcommand".into());
    };
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let cfg = ExperimentConfig::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    cfg.build_system().map_err(|e| format!("invalid system: {e}"))?;
    Ok(cfg)
}

fn resolve_seed(cli: &Cli, cfg: &ExperimentConfig) -> u64 {
    cli.seed
        .or(cfg.simulation.seed)
        .or_else(|| std::env::var("IMPULSE_SEED").ok().and_then(|v| v.parse().ok()))
        .unwrap_or(0)
}

fn out_dir(cli: &Cli, cfg: &ExperimentConfig) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.dir))
}

fn write_manifest(
    dir: &Path,
    cfg: &ExperimentConfig,
    seed: u64,
    command: &str,
) -> std::io::Result<()> {
    #[derive(serde::Serialize)]
    struct Manifest<'a> {
        command: &'a str,
        config_hash: String,
        seed: u64,
        notes: Vec<String>,
        resolved_config: &'a ExperimentConfig,
    }
    let manifest = Manifest {
        command,
        config_hash: cfg.hash(),
        seed,
        notes: cfg.notes(),
        resolved_config: cfg,
    };
    fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }

    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

fn run(cli: &Cli) -> Result<u8, String> {
    if let Command::ReproducePaper = cli.command {
        return reproduce_paper(cli);
    }
    let cfg = load_config(cli)?;
    let sys = cfg.build_system().map_err(|e| e.to_string())?;
    let seed = resolve_seed(cli, &cfg);
    let hash = cfg.hash();
    let dir = out_dir(cli, &cfg);
    fs::create_dir_all(&dir).map_err(|e| format!("{}: {e}", dir.display()))?;

    match &cli.command {
        Command::Simulate => {
            write_manifest(&dir, &cfg, seed, "simulate").map_err(|e| e.to_string())?;
            let ecdf = simulate_ensemble_from(
                &sys,
                cfg.simulation.initial,
                cfg.simulation.countdown,
                cfg.simulation.steps,
                cfg.simulation.count,
                seed,
            )
            .map_err(|e| e.to_string())?;
            let mut buf = Vec::new();
            io::write_ecdf_csv(&mut buf, &hash, seed, &ecdf).map_err(|e| e.to_string())?;
            fs::write(dir.join("ecdf.csv"), buf).map_err(|e| e.to_string())?;
            println!("wrote {} samples to {}", ecdf.len(), dir.join("ecdf.csv").display());
            Ok(EXIT_OK)
        }
        Command::Evolve => {
            write_manifest(&dir, &cfg, seed, "evolve").map_err(|e| e.to_string())?;
            let grid = GridSpec::new(sys.domain(), cfg.grid.bins).map_err(|e| e.to_string())?;
            let states = cfg.grid.resolve_states(sys.times());
            let mu0 = initial_pair_measure(&sys, &BinnedMeasure::uniform(grid), states)
                .map_err(|e| e.to_string())?;
            let run = iterate_to_convergence(&sys, mu0, cfg.operator.max_iter, cfg.operator.tol);
            let mut buf = Vec::new();
            io::write_diagnostics_csv(&mut buf, &hash, seed, &run.diagnostics)
                .map_err(|e| e.to_string())?;
            fs::write(dir.join("diagnostics.csv"), buf).map_err(|e| e.to_string())?;
            let mut buf = Vec::new();
            io::write_measure_csv(&mut buf, &hash, seed, &run.measure).map_err(|e| e.to_string())?;
            fs::write(dir.join("measure.csv"), buf).map_err(|e| e.to_string())?;
            println!(
                "{} after {} steps (sup-CDF delta tolerance {})",
                if run.converged { "converged" } else { "not converged" },
                run.diagnostics.len(),
                cfg.operator.tol
            );
            Ok(if run.converged { EXIT_OK } else { EXIT_NONCONVERGED })
        }
        Command::CheckContraction { l0, l1, mean } => {
            write_manifest(&dir, &cfg, seed, "check-contraction").map_err(|e| e.to_string())?;
            let l0 = l0
                .or_else(|| sys.g().lipschitz())
                .ok_or("impulse map has no declared Lipschitz constant; pass --l0")?;
            let l1 = l1
                .or_else(|| sys.f().lipschitz())
                .ok_or("ordinary map has no declared Lipschitz constant; pass --l1")?;
            let mean = mean.unwrap_or_else(|| sys.times().mean());
            let report = average_contraction(l0, l1, mean).map_err(|e| e.to_string())?;
            let text = serde_json::to_string_pretty(&report).expect("report serializes");
            fs::write(dir.join("contraction.json"), &text).map_err(|e| e.to_string())?;
            println!("{text}");
            Ok(EXIT_OK)
        }
        Command::FindSplitting { max_len } => {
            write_manifest(&dir, &cfg, seed, "find-splitting").map_err(|e| e.to_string())?;
            let max_len = max_len.unwrap_or(cfg.stability.max_len);
            let found = find_splitting(&sys, max_len).map_err(|e| e.to_string())?;
            let constructed = fixed_point_splitting(&sys).map_err(|e| e.to_string())?;
            let cert = match (found, constructed.0) {
                (Some(c), _) => c,
                (None, Some(c)) => c,
                (None, None) => {
                    println!("no certificate found (bounded search; not a disproof)");
                    return Ok(EXIT_NO_CERTIFICATE);
                }
            };
            let text = io::format_certificate(&hash, &cert);
            fs::write(dir.join("certificate.txt"), &text).map_err(|e| e.to_string())?;
            println!("{text}");
            Ok(EXIT_OK)
        }
        Command::ValidateCertificate { certificate } => {
            let text = fs::read_to_string(certificate)
                .map_err(|e| format!("{}: {e}", certificate.display()))?;
            let cert = io::parse_certificate(&text).map_err(|e| e.to_string())?;
            match validate_certificate(&sys, &cert) {
                Ok(valid) => {
                    println!(
                        "certificate valid: gap {} probabilities {} / {}",
                        valid.gap, valid.prob_a, valid.prob_b
                    );
                    Ok(EXIT_OK)
                }
                Err(e) => {
                    println!("certificate INVALID: {e}");
                    Ok(EXIT_NO_CERTIFICATE)
                }
            }
        }
        Command::Stationary { closed_form, empirical } => {
            write_manifest(&dir, &cfg, seed, "stationary").map_err(|e| e.to_string())?;
            let cifs = CollapsedIfs::new(&sys);
            let collapsed =
                collapsed_stationary(&cifs, cfg.grid.bins / 2, cfg.operator.max_iter.max(400), cfg.operator.tol)
                    .map_err(|e| e.to_string())?;
            let grid = GridSpec::new(sys.domain(), cfg.grid.bins).map_err(|e| e.to_string())?;
            let states = cfg.grid.resolve_states(sys.times());
            let ld = lift_stationary(&sys, &collapsed.measure, states, grid)
                .map_err(|e| e.to_string())?;
            let residual = fixed_point_residual(&sys, &ld);

            let mut buf = Vec::new();
            io::write_measure_csv(&mut buf, &hash, seed, &ld.mu_star).map_err(|e| e.to_string())?;
            fs::write(dir.join("mu_star.csv"), buf).map_err(|e| e.to_string())?;

            let m = sys.times().stationary(states);
            let mut buf = Vec::new();
            io::write_stationary_csv(&mut buf, &hash, seed, &m).map_err(|e| e.to_string())?;
            fs::write(dir.join("stationary_states.csv"), buf).map_err(|e| e.to_string())?;

            let xs: Vec<f64> = (0..=400)
                .map(|i| sys.domain().lo() + sys.domain().diam() * i as f64 / 400.0)
                .collect();
            let nu = ld.nu.clone();
            let op_cdf = move |a: f64| {
                let dom = nu.grid().domain();
                nu.measure_interval(
                    &impulse_core::maps::Interval::new(dom.lo(), a.clamp(dom.lo(), dom.hi()))
                        .expect("valid interval"),
                )
            };
            let emp = if *empirical {
                Some(
                    simulate_ensemble_from(
                        &sys,
                        cfg.simulation.initial,
                        cfg.simulation.countdown,
                        cfg.simulation.steps,
                        cfg.simulation.count,
                        seed,
                    )
                    .map_err(|e| e.to_string())?,
                )
            } else {
                None
            };
            let mut buf = Vec::new();
            io::write_cdf_table_csv(
                &mut buf,
                &hash,
                seed,
                &xs,
                closed_form.then_some(&example_cdf as &dyn Fn(f64) -> f64),
                Some(&op_cdf as &dyn Fn(f64) -> f64),
                emp.as_ref(),
            )
            .map_err(|e| e.to_string())?;
            fs::write(dir.join("cdf_table.csv"), buf).map_err(|e| e.to_string())?;

            println!(
                "collapsed iterations {} (residual {:.2e}); lift fixed-point residual {:.2e}",
                collapsed.iterations, collapsed.residual, residual
            );
            Ok(if collapsed.converged { EXIT_OK } else { EXIT_NONCONVERGED })
        }
        Command::SyncTest => {
            write_manifest(&dir, &cfg, seed, "sync-test").map_err(|e| e.to_string())?;
            let r = synchronization_test(
                &sys,
                cfg.stability.paths,
                cfg.stability.path_len,
                cfg.stability.tol,
                seed,
            );
            let text = serde_json::to_string_pretty(&r).expect("report serializes");
            fs::write(dir.join("sync.json"), &text).map_err(|e| e.to_string())?;
            println!("{text}");
            Ok(EXIT_OK)
        }
        Command::Trajectory { x0, stream } => {
            write_manifest(&dir, &cfg, seed, "trajectory").map_err(|e| e.to_string())?;
            let t = simulate_trajectory(&sys, *x0, cfg.simulation.steps, seed, *stream)
                .map_err(|e| e.to_string())?;
            let mut buf = Vec::new();
            io::write_trajectory_csv(&mut buf, &hash, seed, &t).map_err(|e| e.to_string())?;
            fs::write(dir.join("trajectory.csv"), buf).map_err(|e| e.to_string())?;
            println!("wrote {} states", t.states.len());
            Ok(EXIT_OK)
        }
        Command::ReproducePaper => unreachable!("handled above"),
    }
}

fn reproduce_paper(cli: &Cli) -> Result<u8, String> {
    let results = suite::run_all();
    let mut all_passed = true;
    let mut lines = String::new();
    for r in &results {
        let line = r.line();
        println!("{line}");
        lines.push_str(&line);
        lines.push('\n');
        all_passed &= r.passed;
    }
    if let Some(dir) = &cli.out {
        fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
        fs::write(dir.join("suite_summary.txt"), lines).map_err(|e| e.to_string())?;
    }
    println!(
        "{}/{} criteria passed",
        results.iter().filter(|r| r.passed).count(),
        results.len()
    );
    Ok(if all_passed { EXIT_OK } else { EXIT_FAILED })
}
