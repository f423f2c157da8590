//! Closed-form limit-distribution construction.
//!
//! Watching the impulse system only at impulse times collapses it to an
//! iterated function system with maps `g∘f^k` chosen with probability `p_k`.
//! Its stationary law `ν̃` lifts to the stationary law of the pair chain:
//! row zero is `ν̃/(1+E)`, row `k` is `Σ_j p_{k+j}/(1+E) · ν̃(f^{−j−1}(·))`,
//! and the space marginal of the lift is the limit law of the positions.

use serde::Serialize;

use crate::error::OperatorError;
use crate::maps::{Interval, DISJOINT_GAP};
use crate::operator::{apply_transfer, BinnedMeasure, GridSpec, ProductMeasure, RowMeasure};
use crate::simulate::ImpulseSystem;

/// Inner-sum truncation for the lift: per state, the renewal tail beyond the
/// truncated sum stays below this bound.
const LIFT_TAIL: f64 = 1e-10;

/// The impulse system observed at impulse times: maps `g∘f^k` applied with
/// probability `p_k`. Preimages are taken through the factor maps, so no
/// symbolic composition is ever built.
#[derive(Debug, Clone)]
pub struct CollapsedIfs<'a> {
    system: &'a ImpulseSystem,
    truncation: usize,
}

impl<'a> CollapsedIfs<'a> {
    pub fn new(system: &'a ImpulseSystem) -> Self {
        // The truncated operator leaks the pmf tail each application; keep
        // it far below the iteration tolerances.
        let truncation = system.times().pmf_truncation(1e-13);
        Self { system, truncation }
    }

    pub fn with_truncation(system: &'a ImpulseSystem, truncation: usize) -> Self {
        Self { system, truncation: truncation.max(1) }
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    /// The collapsed maps all land in the impulse image of the domain; the
    /// stationary law lives there, so grids are restricted to it.
    pub fn absorbing_interval(&self) -> Interval {
        self.system.g().image(&self.system.domain())
    }

    /// One application of the collapsed transfer operator
    /// `ν ↦ Σ_k p_k ν((g∘f^k)⁻¹ ·)`. The preimage chain through `f` is shared
    /// across `k`.
    pub fn apply(&self, nu: &BinnedMeasure) -> BinnedMeasure {
        let grid = nu.grid();
        let view = RowMeasure::of(nu);
        let weights: Vec<f64> = (0..grid.bins())
            .map(|b| {
                let bin = grid.bin_interval(b);
                let mut set = self.system.g().preimage(&bin);
                let mut mass = 0.0;
                for k in 0..self.truncation {
                    let pk = self.system.times().pmf(k);
                    if pk > 0.0 {
                        mass += pk * view.set(&set);
                    }
                    if k + 1 < self.truncation {
                        set = self.system.f().preimage_of_set(&set);
                        if set.is_empty() {
                            break;
                        }
                    }
                }
                mass
            })
            .collect();
        BinnedMeasure::new(grid, weights).expect("nonnegative masses")
    }
}

/// Outcome of the collapsed-operator fixed-point iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapsedStationary {
    pub measure: BinnedMeasure,
    /// Kolmogorov distance moved by one further operator application.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Iterates the collapsed operator from the uniform law on the absorbing
/// interval until the Kolmogorov step change drops below `tol`, renormalizing
/// each iterate (the truncated operator leaks the pmf tail). Uniqueness of
/// the limit is a hypothesis of the construction, not something checked here.
pub fn collapsed_stationary(
    cifs: &CollapsedIfs,
    bins: usize,
    max_iter: usize,
    tol: f64,
) -> Result<CollapsedStationary, OperatorError> {
    let absorbing = cifs.absorbing_interval();
    // A constant impulse map collapses the absorbing interval to a point;
    // fall back to the full domain so the grid stays well formed.
    let base = if absorbing.diam() > DISJOINT_GAP {
        absorbing
    } else {
        cifs.system.domain()
    };
    let grid = GridSpec::new(base, bins)?;
    let mut nu = BinnedMeasure::uniform(grid);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let mut next = cifs.apply(&nu);
        let total = next.total();
        if total > 0.0 {
            next = next.scaled(1.0 / total);
        }
        iterations += 1;
        let delta = next.sup_cdf_distance(&nu)?;
        nu = next;
        if delta < tol {
            converged = true;
            break;
        }
    }
    let residual = cifs.apply(&nu).sup_cdf_distance(&nu)?;
    Ok(CollapsedStationary { measure: nu, residual, iterations, converged })
}

/// Stationary law of the pair chain together with its space marginal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitDistribution {
    pub mu_star: ProductMeasure,
    pub nu: BinnedMeasure,
}

/// Lifts a collapsed stationary law to the pair chain per the closed form:
/// `μ⋆({0}×A) = ν̃(A)/(1+E)`,
/// `μ⋆({k}×A) = Σ_j p_{k+j}/(1+E)·ν̃(f^{−j−1}(A))`, inner sum truncated once
/// the renewal tail drops below `1e-10`. The space marginal sums the rows;
/// truncation losses are reported as the product measure's tail mass.
pub fn lift_stationary(
    sys: &ImpulseSystem,
    nu_tilde: &BinnedMeasure,
    states: usize,
    grid: GridSpec,
) -> Result<LimitDistribution, OperatorError> {
    if states == 0 {
        return Err(OperatorError::BadTruncation);
    }
    let one_plus_e = 1.0 + sys.times().mean();

    // Depth of the inner sum: smallest J with Σ_{j≥J} p_{1+j} < LIFT_TAIL;
    // deeper states only need shallower sums.
    let mut depth = 0usize;
    while sys.times().tail_sum(1 + depth) >= LIFT_TAIL && depth < 4096 {
        depth += 1;
    }

    // chained[j][b] = ν̃(f^{−j−1}(bin b)), shared across states.
    let view = RowMeasure::of(nu_tilde);
    let mut chained: Vec<Vec<f64>> = Vec::with_capacity(depth);
    let mut sets: Vec<Vec<Interval>> = (0..grid.bins())
        .map(|b| sys.f().preimage(&grid.bin_interval(b)))
        .collect();
    for _ in 0..depth {
        chained.push(sets.iter().map(|s| view.set(s)).collect());
        sets = sets
            .iter()
            .map(|s| sys.f().preimage_of_set(s))
            .collect();
    }

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(states);
    // Row 0: ν̃ rebinned onto the product grid, scaled by 1/(1+E).
    rows.push(
        (0..grid.bins())
            .map(|b| view.interval(&grid.bin_interval(b)) / one_plus_e)
            .collect(),
    );
    for k in 1..states {
        let row = (0..grid.bins())
            .map(|b| {
                let mut acc = 0.0;
                for (j, vals) in chained.iter().enumerate() {
                    let p = sys.times().pmf(k + j);
                    if p > 0.0 {
                        acc += p * vals[b];
                    }
                }
                acc / one_plus_e
            })
            .collect();
        rows.push(row);
    }

    let total: f64 = rows.iter().map(|r| r.iter().sum::<f64>()).sum();
    let mu_star = ProductMeasure::from_parts(grid, rows, (1.0 - total).max(0.0));
    let nu = mu_star.space_marginal();
    Ok(LimitDistribution { mu_star, nu })
}

/// Total-variation distance between `μ⋆` and its image under one operator
/// step: half the summed cell differences plus the tail difference. For a
/// true fixed point this is the discretization budget.
pub fn fixed_point_residual(sys: &ImpulseSystem, ld: &LimitDistribution) -> f64 {
    let next = apply_transfer(sys, &ld.mu_star);
    let mut acc = 0.0;
    for (ra, rb) in ld.mu_star.rows().iter().zip(next.rows()) {
        for (a, b) in ra.iter().zip(rb) {
            acc += (a - b).abs();
        }
    }
    acc += (ld.mu_star.tail_mass() - next.tail_mass()).abs();
    0.5 * acc
}

/// Closed-form limit CDF of the bundled worked system (`g(x) = x/2`,
/// `f(x) = x+1` clipped at 2, impulse times Bernoulli(1/2) on `[0, 2]`):
/// `F(a) = (2/3)a` on `[0,1)`, `(a+1)/3` on `[1,2)`, with 0 and 1 outside.
pub fn example_cdf(a: f64) -> f64 {
    if a < 0.0 {
        0.0
    } else if a < 1.0 {
        2.0 * a / 3.0
    } else if a < 2.0 {
        (a + 1.0) / 3.0
    } else {
        1.0
    }
}
