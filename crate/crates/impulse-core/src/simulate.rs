//! Monte-Carlo engine for the impulse process and its two-dimensional
//! companion chain `(countdown, position)`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MapError, SystemError};
use crate::impulse::ImpulseTimeDistribution;
use crate::maps::{Interval, IntervalMap};
use crate::rng::stream_rng;

/// The full model: ordinary map `f`, impulse map `g`, impulse-time law, and
/// the shared compact domain. Indexing convention: `f_0 ≡ g`, `f_k ≡ f` for
/// `k ≥ 1`.
#[derive(Debug, Clone, Serialize)]
pub struct ImpulseSystem {
    f: IntervalMap,
    g: IntervalMap,
    times: ImpulseTimeDistribution,
    domain: Interval,
}

impl ImpulseSystem {
    pub fn new(
        f: IntervalMap,
        g: IntervalMap,
        times: ImpulseTimeDistribution,
    ) -> Result<Self, SystemError> {
        if f.domain() != g.domain() {
            return Err(SystemError::DomainMismatch);
        }
        let domain = f.domain();
        Ok(Self { f, g, times, domain })
    }

    pub fn f(&self) -> &IntervalMap {
        &self.f
    }

    pub fn g(&self) -> &IntervalMap {
        &self.g
    }

    pub fn times(&self) -> &ImpulseTimeDistribution {
        &self.times
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    /// `f_k`: the impulse map for `k = 0`, the ordinary map otherwise.
    pub fn map_for_state(&self, k: usize) -> &IntervalMap {
        if k == 0 {
            &self.g
        } else {
            &self.f
        }
    }
}

/// How the starting position of a trajectory is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialPosition {
    Point { x: f64 },
    Uniform,
}

impl InitialPosition {
    fn draw<R: Rng + ?Sized>(&self, domain: Interval, rng: &mut R) -> f64 {
        match self {
            InitialPosition::Point { x } => *x,
            InitialPosition::Uniform => domain.lo() + domain.diam() * rng.gen::<f64>(),
        }
    }
}

/// How the starting countdown is chosen: from the impulse-time law itself
/// (the model's convention) or from the stationary countdown law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountdownInit {
    #[default]
    TimeDistribution,
    Stationary,
}

impl CountdownInit {
    fn draw<R: Rng + ?Sized>(&self, times: &ImpulseTimeDistribution, rng: &mut R) -> usize {
        match self {
            CountdownInit::TimeDistribution => times.sample_time(rng),
            CountdownInit::Stationary => {
                let k = times.default_truncation();
                let m = times.stationary(k);
                let total: f64 = m.weights.iter().sum();
                let mut u = rng.gen::<f64>() * total;
                for (i, w) in m.weights.iter().enumerate() {
                    if u < *w {
                        return i;
                    }
                    u -= w;
                }
                k - 1
            }
        }
    }
}

/// One step of the pair chain. From `(k, x)` with `k ≥ 1` the next state is
/// `k − 1` and the position moves by `f_{k−1}` (the impulse map exactly when
/// `k = 1`); from `(0, x)` a fresh countdown `j` is drawn and `f_j` applies.
pub fn step<R: Rng + ?Sized>(
    sys: &ImpulseSystem,
    k: usize,
    x: f64,
    rng: &mut R,
) -> Result<(usize, f64), MapError> {
    let next = if k >= 1 {
        k - 1
    } else {
        sys.times.sample_time(rng)
    };
    let y = sys.map_for_state(next).eval(x)?;
    Ok((next, y))
}

/// Sampled trajectory of the pair chain: entries are `(F_n, X_n)` for
/// `n = 0..=steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<(usize, f64)>,
    pub master_seed: u64,
    pub stream: u64,
}

impl Trajectory {
    pub fn positions(&self) -> impl Iterator<Item = f64> + '_ {
        self.states.iter().map(|s| s.1)
    }

    pub fn final_position(&self) -> f64 {
        self.states.last().expect("nonempty trajectory").1
    }
}

/// Simulates `steps` transitions from `x0`, drawing the initial countdown
/// from the impulse-time law. Deterministic given the seed pair.
pub fn simulate_trajectory(
    sys: &ImpulseSystem,
    x0: f64,
    steps: usize,
    master_seed: u64,
    stream: u64,
) -> Result<Trajectory, MapError> {
    let mut rng = stream_rng(master_seed, stream);
    simulate_trajectory_with(sys, x0, steps, CountdownInit::TimeDistribution, &mut rng).map(
        |states| Trajectory {
            states,
            master_seed,
            stream,
        },
    )
}

/// Trajectory driver over a caller-supplied RNG (used by the ensemble runner
/// and by tests that script the randomness). Entry `n` records the countdown
/// and position at time `n`; the position moves by the map of the countdown
/// just left behind (`X_{n+1} = f_{F_n}(X_n)`).
pub fn simulate_trajectory_with<R: Rng + ?Sized>(
    sys: &ImpulseSystem,
    x0: f64,
    steps: usize,
    countdown: CountdownInit,
    rng: &mut R,
) -> Result<Vec<(usize, f64)>, MapError> {
    let mut x = x0;
    if !sys.domain.contains(x) {
        if x >= sys.domain.lo() - crate::maps::DOMAIN_CLAMP_TOL
            && x <= sys.domain.hi() + crate::maps::DOMAIN_CLAMP_TOL
        {
            x = sys.domain.clamp(x);
        } else {
            return Err(MapError::OutsideDomain {
                x,
                lo: sys.domain.lo(),
                hi: sys.domain.hi(),
            });
        }
    }
    let mut state = countdown.draw(&sys.times, rng);
    let mut states = Vec::with_capacity(steps + 1);
    states.push((state, x));
    for _ in 0..steps {
        x = sys.map_for_state(state).eval(x)?;
        state = if state == 0 {
            sys.times.sample_time(rng)
        } else {
            state - 1
        };
        states.push((state, x));
    }
    Ok(states)
}

/// Empirical CDF of a sample; values are kept sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    values: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn from_samples(mut values: Vec<f64>) -> Self {
        values.sort_by(f64::total_cmp);
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `F̂(x)` = fraction of samples `≤ x`.
    pub fn eval(&self, x: f64) -> f64 {
        let idx = self.values.partition_point(|v| *v <= x);
        idx as f64 / self.values.len() as f64
    }
}

/// Kolmogorov distance `sup |F̂ − F|`, evaluated at the sample points and
/// their left limits. The reference left limit is taken a relative epsilon
/// below the sample point, so step-function references compare correctly.
pub fn ks_distance<F: Fn(f64) -> f64>(ecdf: &EmpiricalCdf, cdf: F) -> f64 {
    let n = ecdf.values.len() as f64;
    let mut sup = 0.0f64;
    for (i, x) in ecdf.values.iter().enumerate() {
        sup = sup.max(((i + 1) as f64 / n - cdf(*x)).abs());
        let left = x - (x.abs() * 1e-12).max(1e-300);
        sup = sup.max((cdf(left) - i as f64 / n).abs());
    }
    sup
}

/// Two-sample Kolmogorov distance.
pub fn ks_distance_two_sample(a: &EmpiricalCdf, b: &EmpiricalCdf) -> f64 {
    let mut sup = 0.0f64;
    for x in a.values.iter().chain(b.values.iter()) {
        sup = sup.max((a.eval(*x) - b.eval(*x)).abs());
    }
    sup
}

/// `∫ |F̂ − F|` over `domain` by the midpoint rule on a uniform grid.
pub fn wasserstein1<F: Fn(f64) -> f64>(
    ecdf: &EmpiricalCdf,
    cdf: F,
    domain: Interval,
    grid: usize,
) -> f64 {
    let grid = grid.max(2);
    let width = domain.diam() / grid as f64;
    (0..grid)
        .map(|i| {
            let mid = domain.lo() + (i as f64 + 0.5) * width;
            (ecdf.eval(mid) - cdf(mid)).abs() * width
        })
        .sum()
}

/// Ensemble of independent trajectories; returns the empirical CDF of the
/// time-`steps` marginal. Each trajectory owns stream `(master_seed, index)`,
/// so the result does not depend on the worker count.
pub fn simulate_ensemble(
    sys: &ImpulseSystem,
    init: InitialPosition,
    steps: usize,
    count: usize,
    master_seed: u64,
) -> Result<EmpiricalCdf, MapError> {
    simulate_ensemble_from(sys, init, CountdownInit::TimeDistribution, steps, count, master_seed)
}

pub fn simulate_ensemble_from(
    sys: &ImpulseSystem,
    init: InitialPosition,
    countdown: CountdownInit,
    steps: usize,
    count: usize,
    master_seed: u64,
) -> Result<EmpiricalCdf, MapError> {
    let samples: Result<Vec<f64>, MapError> = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(master_seed, i);
            let x0 = init.draw(sys.domain, &mut rng);
            let states = simulate_trajectory_with(sys, x0, steps, countdown, &mut rng)?;
            Ok(states.last().expect("nonempty").1)
        })
        .collect();
    Ok(EmpiricalCdf::from_samples(samples?))
}

/// Plain two-map iterated function system: applies `f` with probability
/// `prob_f`, else `g`. Used to cross-validate the geometric-times model.
pub fn simulate_ifs_ensemble(
    f: &IntervalMap,
    g: &IntervalMap,
    prob_f: f64,
    init: InitialPosition,
    steps: usize,
    count: usize,
    master_seed: u64,
) -> Result<EmpiricalCdf, MapError> {
    let domain = f.domain();
    let samples: Result<Vec<f64>, MapError> = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(master_seed, i);
            let mut x = init.draw(domain, &mut rng);
            for _ in 0..steps {
                x = if rng.gen::<f64>() < prob_f {
                    f.eval(x)?
                } else {
                    g.eval(x)?
                };
            }
            Ok(x)
        })
        .collect();
    Ok(EmpiricalCdf::from_samples(samples?))
}

/// Outcome of a conditional-probability experiment.
#[derive(Debug, Clone, PartialEq)]
pub enum ConditionalOutcome {
    Estimate {
        probability: f64,
        std_error: f64,
        conditioning_events: usize,
    },
    /// The conditioning event never occurred.
    Inconclusive,
}

/// Estimates `Pr(X_{m+1} ≈ target | X_1 ≈ cond_1, …, X_m ≈ cond_m)` by
/// simulation, matching positions within `1e-9`. Returns the conditional
/// relative frequency with its binomial standard error.
pub fn conditional_probability_estimate(
    sys: &ImpulseSystem,
    x0: f64,
    condition: &[f64],
    target: f64,
    count: usize,
    master_seed: u64,
) -> Result<ConditionalOutcome, MapError> {
    const MATCH_TOL: f64 = 1e-9;
    let m = condition.len();
    let tallies: Result<Vec<(usize, usize)>, MapError> = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(master_seed, i);
            let states = simulate_trajectory_with(
                sys,
                x0,
                m + 1,
                CountdownInit::TimeDistribution,
                &mut rng,
            )?;
            let holds = condition
                .iter()
                .enumerate()
                .all(|(j, c)| (states[j + 1].1 - c).abs() <= MATCH_TOL);
            if holds {
                let hit = (states[m + 1].1 - target).abs() <= MATCH_TOL;
                Ok((1, usize::from(hit)))
            } else {
                Ok((0, 0))
            }
        })
        .collect();
    let (events, hits) = tallies?
        .into_iter()
        .fold((0usize, 0usize), |acc, t| (acc.0 + t.0, acc.1 + t.1));
    if events == 0 {
        return Ok(ConditionalOutcome::Inconclusive);
    }
    let p = hits as f64 / events as f64;
    let std_error = (p * (1.0 - p) / events as f64).sqrt();
    Ok(ConditionalOutcome::Estimate {
        probability: p,
        std_error,
        conditioning_events: events,
    })
}
