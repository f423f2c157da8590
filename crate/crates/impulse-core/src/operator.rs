//! Discretized Markov operator on measures over `{states} × interval`.
//!
//! Measures are stored as bin masses on a uniform grid. One operator step
//! moves the mass of row `j` by exact branch preimages of each bin, with
//! within-bin uniform (linear CDF) allocation, so total mass is conserved to
//! rounding and the n-step path-sum oracle matches iterated application
//! exactly rather than approximately.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::OperatorError;
use crate::maps::{Interval, IntervalMap};
use crate::simulate::ImpulseSystem;

/// Uniform binning of a compact interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    domain: Interval,
    bins: usize,
}

impl GridSpec {
    pub fn new(domain: Interval, bins: usize) -> Result<Self, OperatorError> {
        if bins < 2 {
            return Err(OperatorError::BadGrid);
        }
        Ok(Self { domain, bins })
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn width(&self) -> f64 {
        self.domain.diam() / self.bins as f64
    }

    pub fn edge(&self, i: usize) -> f64 {
        if i >= self.bins {
            return self.domain.hi();
        }
        self.domain.lo() + self.domain.diam() * i as f64 / self.bins as f64
    }

    pub fn bin_interval(&self, b: usize) -> Interval {
        Interval::hull_of(self.edge(b), self.edge(b + 1))
    }

    pub fn bin_of(&self, x: f64) -> usize {
        if x >= self.domain.hi() {
            return self.bins - 1;
        }
        let t = (x - self.domain.lo()) / self.domain.diam();
        ((t * self.bins as f64) as usize).min(self.bins - 1)
    }

    pub fn midpoint(&self, b: usize) -> f64 {
        0.5 * (self.edge(b) + self.edge(b + 1))
    }
}

/// Nonnegative bin masses on a grid (a sub-probability measure on the interval).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinnedMeasure {
    grid: GridSpec,
    weights: Vec<f64>,
}

impl BinnedMeasure {
    pub fn new(grid: GridSpec, weights: Vec<f64>) -> Result<Self, OperatorError> {
        if weights.len() != grid.bins() || weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(OperatorError::BadWeights);
        }
        Ok(Self { grid, weights })
    }

    pub fn zero(grid: GridSpec) -> Self {
        Self {
            weights: vec![0.0; grid.bins()],
            grid,
        }
    }

    pub fn uniform(grid: GridSpec) -> Self {
        Self {
            weights: vec![1.0 / grid.bins() as f64; grid.bins()],
            grid,
        }
    }

    pub fn point_mass(grid: GridSpec, x: f64) -> Result<Self, OperatorError> {
        if !grid.domain().contains(x) {
            return Err(OperatorError::MassOutsideDomain(1.0));
        }
        let mut m = Self::zero(grid);
        m.weights[grid.bin_of(x)] = 1.0;
        Ok(m)
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            grid: self.grid,
            weights: self.weights.iter().map(|w| w * factor).collect(),
        }
    }

    /// Measure of an interval under within-bin uniform allocation.
    pub fn measure_interval(&self, iv: &Interval) -> f64 {
        cumulative_between(&self.grid, &self.weights, iv.lo(), iv.hi())
    }

    /// Measure of an interior-disjoint union.
    pub fn measure_set(&self, set: &[Interval]) -> f64 {
        set.iter().map(|iv| self.measure_interval(iv)).sum()
    }

    /// CDF sampled at all bin edges (length `bins + 1`).
    pub fn cdf_at_edges(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.grid.bins() + 1);
        let mut acc = 0.0;
        out.push(0.0);
        for w in &self.weights {
            acc += w;
            out.push(acc);
        }
        out
    }

    /// Kolmogorov distance between two measures on the same grid (evaluated
    /// at bin edges; both CDFs are linear within bins).
    pub fn sup_cdf_distance(&self, other: &BinnedMeasure) -> Result<f64, OperatorError> {
        if self.grid != other.grid {
            return Err(OperatorError::GridMismatch);
        }
        let a = self.cdf_at_edges();
        let b = other.cdf_at_edges();
        Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
    }

    /// Kolmogorov distance to a reference CDF, evaluated at bin edges and
    /// midpoints.
    pub fn sup_cdf_distance_to<F: Fn(f64) -> f64>(&self, cdf: F) -> f64 {
        let own = self.cdf_at_edges();
        let mut sup = 0.0f64;
        for b in 0..self.grid.bins() {
            sup = sup.max((own[b] - cdf(self.grid.edge(b))).abs());
            let mid_own = 0.5 * (own[b] + own[b + 1]);
            sup = sup.max((mid_own - cdf(self.grid.midpoint(b))).abs());
        }
        sup = sup.max((own[self.grid.bins()] - cdf(self.grid.domain().hi())).abs());
        sup
    }
}

fn cumulative_at(grid: &GridSpec, prefix: &[f64], weights: &[f64], x: f64) -> f64 {
    if x <= grid.domain().lo() {
        return 0.0;
    }
    if x >= grid.domain().hi() {
        return prefix[grid.bins()];
    }
    let b = grid.bin_of(x);
    let frac = (x - grid.edge(b)) / grid.width();
    prefix[b] + weights[b] * frac.clamp(0.0, 1.0)
}

fn cumulative_between(grid: &GridSpec, weights: &[f64], lo: f64, hi: f64) -> f64 {
    let mut prefix = Vec::with_capacity(weights.len() + 1);
    let mut acc = 0.0;
    prefix.push(0.0);
    for w in weights {
        acc += w;
        prefix.push(acc);
    }
    (cumulative_at(grid, &prefix, weights, hi) - cumulative_at(grid, &prefix, weights, lo)).max(0.0)
}

/// Row view with a precomputed prefix for O(1) interval measures.
pub(crate) struct RowMeasure<'a> {
    grid: GridSpec,
    weights: &'a [f64],
    prefix: Vec<f64>,
}

impl<'a> RowMeasure<'a> {
    pub(crate) fn new(grid: GridSpec, weights: &'a [f64]) -> Self {
        let mut prefix = Vec::with_capacity(weights.len() + 1);
        let mut acc = 0.0;
        prefix.push(0.0);
        for w in weights {
            acc += w;
            prefix.push(acc);
        }
        Self { grid, weights, prefix }
    }

    pub(crate) fn of(measure: &'a BinnedMeasure) -> Self {
        Self::new(measure.grid, &measure.weights)
    }

    pub(crate) fn interval(&self, iv: &Interval) -> f64 {
        (cumulative_at(&self.grid, &self.prefix, self.weights, iv.hi())
            - cumulative_at(&self.grid, &self.prefix, self.weights, iv.lo()))
        .max(0.0)
    }

    pub(crate) fn set(&self, set: &[Interval]) -> f64 {
        set.iter().map(|iv| self.interval(iv)).sum()
    }
}

/// Measure on `{0,…,K−1} × interval` as K rows of bin masses plus explicit
/// tail mass for everything outside the truncation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductMeasure {
    grid: GridSpec,
    rows: Vec<Vec<f64>>,
    tail_mass: f64,
}

impl ProductMeasure {
    pub fn new(grid: GridSpec, rows: Vec<Vec<f64>>, tail_mass: f64) -> Result<Self, OperatorError> {
        if rows.is_empty() {
            return Err(OperatorError::BadTruncation);
        }
        let mut total = tail_mass;
        for row in &rows {
            if row.len() != grid.bins() || row.iter().any(|w| *w < 0.0 || !w.is_finite()) {
                return Err(OperatorError::BadWeights);
            }
            total += row.iter().sum::<f64>();
        }
        if tail_mass < 0.0 || (total - 1.0).abs() > 1e-12 {
            return Err(OperatorError::BadWeights);
        }
        Ok(Self { grid, rows, tail_mass })
    }

    /// Construction for internally derived measures (operator output, lifted
    /// stationary measures) where truncation losses are tracked by the caller.
    pub(crate) fn from_parts(grid: GridSpec, rows: Vec<Vec<f64>>, tail_mass: f64) -> Self {
        Self { grid, rows, tail_mass: tail_mass.max(0.0) }
    }

    /// Product of a state-weight vector with a single spatial measure.
    pub fn product(
        grid: GridSpec,
        state_weights: &[f64],
        space: &BinnedMeasure,
        tail_mass: f64,
    ) -> Result<Self, OperatorError> {
        if space.grid() != grid {
            return Err(OperatorError::GridMismatch);
        }
        let rows = state_weights
            .iter()
            .map(|s| space.weights().iter().map(|w| w * s).collect())
            .collect();
        Self::new(grid, rows, tail_mass)
    }

    /// All mass at a single pair `(state, x)`.
    pub fn point_mass(
        grid: GridSpec,
        states: usize,
        state: usize,
        x: f64,
    ) -> Result<Self, OperatorError> {
        if states == 0 || state >= states {
            return Err(OperatorError::BadTruncation);
        }
        if !grid.domain().contains(x) {
            return Err(OperatorError::MassOutsideDomain(1.0));
        }
        let mut rows = vec![vec![0.0; grid.bins()]; states];
        rows[state][grid.bin_of(x)] = 1.0;
        Self::new(grid, rows, 0.0)
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn states(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn total_mass(&self) -> f64 {
        self.rows.iter().map(|r| r.iter().sum::<f64>()).sum::<f64>() + self.tail_mass
    }

    /// Measure of `{state} × iv`.
    pub fn slice_measure(&self, state: usize, iv: &Interval) -> f64 {
        match self.rows.get(state) {
            Some(row) => cumulative_between(&self.grid, row, iv.lo(), iv.hi()),
            None => 0.0,
        }
    }

    /// Row totals `μ_j(I)`.
    pub fn state_marginal(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().sum()).collect()
    }

    /// Column sums over states; excludes the truncation tail.
    pub fn space_marginal(&self) -> BinnedMeasure {
        let mut weights = vec![0.0; self.grid.bins()];
        for row in &self.rows {
            for (w, r) in weights.iter_mut().zip(row) {
                *w += r;
            }
        }
        BinnedMeasure { grid: self.grid, weights }
    }
}

/// Per-state test function used for weak-convergence diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceFunction {
    /// `c₀ + c₁ x + c₂ x² + …`
    Polynomial { coeffs: Vec<f64> },
    /// Continuous ramp approximation of `1_{[lo, hi]}` with the given width.
    IndicatorSmooth { lo: f64, hi: f64, width: f64 },
    /// Piecewise-linear interpolation; constant beyond the breakpoints.
    PiecewiseLinear { points: Vec<(f64, f64)> },
}

impl SpaceFunction {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            SpaceFunction::Polynomial { coeffs } => {
                coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
            }
            SpaceFunction::IndicatorSmooth { lo, hi, width } => {
                let rise = ((x - lo) / width).clamp(0.0, 1.0);
                let fall = ((hi - x) / width).clamp(0.0, 1.0);
                rise.min(fall)
            }
            SpaceFunction::PiecewiseLinear { points } => {
                let n = points.len();
                if x <= points[0].0 {
                    return points[0].1;
                }
                if x >= points[n - 1].0 {
                    return points[n - 1].1;
                }
                let idx = points.partition_point(|p| p.0 <= x).clamp(1, n - 1);
                let (x0, y0) = points[idx - 1];
                let (x1, y1) = points[idx];
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }
        }
    }
}

/// Bounded continuous test function on the product space: one spatial
/// function per state, with a default for states beyond the list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub per_state: Vec<SpaceFunction>,
    pub default_fn: SpaceFunction,
}

impl TestFunction {
    pub fn uniform(f: SpaceFunction) -> Self {
        Self { per_state: Vec::new(), default_fn: f }
    }

    fn state_fn(&self, j: usize) -> &SpaceFunction {
        self.per_state.get(j).unwrap_or(&self.default_fn)
    }
}

/// One application of the pair-chain Markov operator:
/// row `j` of the output is `μ_{j+1}(f_j⁻¹ ·) + p_j · μ_0(f_j⁻¹ ·)`.
/// Mass that renews beyond the truncation joins the tail; inflow from the
/// truncated row `K` is unknown and stays in the tail as well.
pub fn apply_transfer(sys: &ImpulseSystem, mu: &ProductMeasure) -> ProductMeasure {
    let k = mu.states();
    let grid = mu.grid();
    let row0 = &mu.rows[0];
    let rows: Vec<Vec<f64>> = (0..k)
        .into_par_iter()
        .map(|j| {
            let map = sys.map_for_state(j);
            let pj = sys.times().pmf(j);
            // Source for row j: μ_{j+1} + p_j μ_0, measured through f_j⁻¹.
            let src: Vec<f64> = match mu.rows.get(j + 1) {
                Some(next) => next
                    .iter()
                    .zip(row0)
                    .map(|(n, z)| n + pj * z)
                    .collect(),
                None => row0.iter().map(|z| pj * z).collect(),
            };
            let view = RowMeasure::new(grid, &src);
            (0..grid.bins())
                .map(|b| {
                    let pre = map.preimage(&grid.bin_interval(b));
                    view.set(&pre)
                })
                .collect()
        })
        .collect();

    let renewal_tail = sys.times().tail_sum(k);
    let row0_total: f64 = row0.iter().sum();
    let tail_mass = mu.tail_mass + row0_total * renewal_tail;
    ProductMeasure { grid, rows, tail_mass }
}

/// Binned pushforward of a spatial measure: bin `b` of the output receives
/// the input measure of `map⁻¹(bin b)`.
pub fn push_forward_binned(map: &IntervalMap, nu: &BinnedMeasure) -> BinnedMeasure {
    let grid = nu.grid();
    let view = RowMeasure::of(nu);
    let weights = (0..grid.bins())
        .map(|b| view.set(&map.preimage(&grid.bin_interval(b))))
        .collect();
    BinnedMeasure { grid, weights }
}

/// `n`-step value of a single slice by explicit path enumeration: sum over
/// admissible state paths `(ξ_1, …, ξ_n)` into `j` of the path probability
/// times the row `μ_{ξ_n}` pushed forward through `f_{ξ_{n−1}}, …, f_{ξ_1},
/// f_j`, rebinned after every map exactly like `apply_transfer`, then
/// measured on `c`. Paths through states at or beyond the truncation are
/// excluded, mirroring the operator's tail bookkeeping, so the two routes
/// agree to rounding. Kept to small `n`; the path count doubles per step.
pub fn n_step_direct(
    sys: &ImpulseSystem,
    mu: &ProductMeasure,
    n: usize,
    j: usize,
    c: &Interval,
) -> Result<f64, OperatorError> {
    const MAX_DEPTH: usize = 6;
    if n > MAX_DEPTH {
        return Err(OperatorError::PathSumTooDeep { requested: n, max: MAX_DEPTH });
    }
    if n == 0 {
        return Ok(mu.slice_measure(j, c));
    }
    let mut acc = 0.0;
    let mut path = Vec::with_capacity(n);
    enumerate_paths(sys, mu, j, j, 1, n, 1.0, &mut path, c, &mut acc);
    Ok(acc)
}

/// Depth-first enumeration of predecessors. `path` holds `(ξ_1, …, ξ_{d−1})`
/// chosen so far; `prev` is the most recent state (`ξ_0 ≡ target`). At depth
/// `n` the leaf state selects the source row, which is pushed through
/// `f_{ξ_{n−1}}, …, f_{ξ_1}, f_target` in that order.
#[allow(clippy::too_many_arguments)]
fn enumerate_paths(
    sys: &ImpulseSystem,
    mu: &ProductMeasure,
    target: usize,
    prev: usize,
    depth: usize,
    n: usize,
    prob: f64,
    path: &mut Vec<usize>,
    c: &Interval,
    acc: &mut f64,
) {
    // Predecessors of `prev`: state `prev + 1` (probability 1, inside the
    // truncation) and state 0 (probability p_prev, when positive).
    let candidates: [(usize, f64); 2] = [(prev + 1, 1.0), (0, sys.times().pmf(prev))];
    for (state, factor) in candidates {
        if factor <= 0.0 || state >= mu.states() {
            continue;
        }
        if depth == n {
            let mut pushed = BinnedMeasure {
                grid: mu.grid,
                weights: mu.rows[state].clone(),
            };
            for s in path.iter().rev() {
                pushed = push_forward_binned(sys.map_for_state(*s), &pushed);
            }
            pushed = push_forward_binned(sys.map_for_state(target), &pushed);
            *acc += prob * factor * RowMeasure::of(&pushed).interval(c);
        } else {
            path.push(state);
            enumerate_paths(sys, mu, target, state, depth + 1, n, prob * factor, path, c, acc);
            path.pop();
        }
    }
}

/// Midpoint-rule integral `Σ_j Σ_b h_j(mid_b) · μ_j(bin b)` (O(width) bias).
pub fn integrate(mu: &ProductMeasure, h: &TestFunction) -> f64 {
    let grid = mu.grid();
    mu.rows
        .iter()
        .enumerate()
        .map(|(j, row)| {
            let hj = h.state_fn(j);
            row.iter()
                .enumerate()
                .map(|(b, w)| hj.eval(grid.midpoint(b)) * w)
                .sum::<f64>()
        })
        .sum()
}

/// Per-step convergence diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationDiagnostics {
    pub step: usize,
    /// Total-variation distance of the state marginal from the stationary
    /// countdown law (truncated comparison plus tail difference).
    pub tv_state: f64,
    /// Kolmogorov distance between consecutive space marginals.
    pub sup_cdf_delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRun {
    pub measure: ProductMeasure,
    pub diagnostics: Vec<IterationDiagnostics>,
    pub converged: bool,
}

/// TV distance between the state marginal of `mu` and the stationary law.
pub fn state_marginal_tv(sys: &ImpulseSystem, mu: &ProductMeasure) -> f64 {
    let marginal = mu.state_marginal();
    let k = mu.states();
    let mut acc = 0.0;
    for (j, w) in marginal.iter().enumerate() {
        acc += (w - sys.times().stationary_weight(j)).abs();
    }
    let m_tail = sys.times().stationary(k).tail_mass;
    acc += (mu.tail_mass - m_tail).abs();
    0.5 * acc
}

/// Iterates the operator until the space-marginal Kolmogorov change drops
/// below `tol` or `max_n` steps elapse. Non-convergence is reported, not an
/// error: the best iterate is still returned.
pub fn iterate_to_convergence(
    sys: &ImpulseSystem,
    mu0: ProductMeasure,
    max_n: usize,
    tol: f64,
) -> ConvergenceRun {
    let mut mu = mu0;
    let mut diagnostics = Vec::new();
    let mut converged = false;
    for step in 1..=max_n {
        let next = apply_transfer(sys, &mu);
        let delta = next
            .space_marginal()
            .sup_cdf_distance(&mu.space_marginal())
            .expect("same grid");
        let tv = state_marginal_tv(sys, &next);
        diagnostics.push(IterationDiagnostics { step, tv_state: tv, sup_cdf_delta: delta });
        mu = next;
        if delta < tol {
            converged = true;
            break;
        }
    }
    ConvergenceRun { measure: mu, diagnostics, converged }
}

/// Transfer step of the plain two-map iterated function system:
/// `ν ↦ prob_f · ν(f⁻¹ ·) + (1 − prob_f) · ν(g⁻¹ ·)`.
pub fn ifs_apply(
    f: &IntervalMap,
    g: &IntervalMap,
    prob_f: f64,
    nu: &BinnedMeasure,
) -> BinnedMeasure {
    let grid = nu.grid();
    let view = RowMeasure::new(grid, nu.weights());
    let weights = (0..grid.bins())
        .map(|b| {
            let bin = grid.bin_interval(b);
            prob_f * view.set(&f.preimage(&bin)) + (1.0 - prob_f) * view.set(&g.preimage(&bin))
        })
        .collect();
    BinnedMeasure { grid, weights }
}

/// Pair-measure seed matching a start `X₀ ~ ν₀` with countdown drawn from the
/// impulse-time law: row `j` is `p_j · ν₀(f_j⁻¹ ·)` — the distribution of the
/// pair chain after its first transition.
pub fn initial_pair_measure(
    sys: &ImpulseSystem,
    nu0: &BinnedMeasure,
    states: usize,
) -> Result<ProductMeasure, OperatorError> {
    if states == 0 {
        return Err(OperatorError::BadTruncation);
    }
    let grid = nu0.grid();
    let view = RowMeasure::new(grid, nu0.weights());
    let rows: Vec<Vec<f64>> = (0..states)
        .map(|j| {
            let pj = sys.times().pmf(j);
            let map = sys.map_for_state(j);
            (0..grid.bins())
                .map(|b| pj * view.set(&map.preimage(&grid.bin_interval(b))))
                .collect()
        })
        .collect();
    let tail_mass = sys.times().tail_sum(states) * nu0.total();
    Ok(ProductMeasure { grid, rows, tail_mass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::impulse::ImpulseTimeDistribution;
    use crate::simulate::{simulate_ensemble, InitialPosition};

    fn unit() -> Interval {
        Interval::domain(0.0, 1.0).unwrap()
    }

    fn grid(bins: usize) -> GridSpec {
        GridSpec::new(unit(), bins).unwrap()
    }

    fn identity_system() -> ImpulseSystem {
        let f = IntervalMap::identity(unit()).unwrap();
        let g = IntervalMap::identity(unit()).unwrap();
        ImpulseSystem::new(f, g, ImpulseTimeDistribution::finite(vec![1.0]).unwrap()).unwrap()
    }

    fn logistic_half_system() -> ImpulseSystem {
        let f = IntervalMap::logistic(unit(), 4.0).unwrap();
        let g = IntervalMap::affine(unit(), 0.5, 0.0).unwrap();
        ImpulseSystem::new(f, g, ImpulseTimeDistribution::finite(vec![0.5, 0.3, 0.2]).unwrap())
            .unwrap()
    }

    #[test]
    fn discretize_point_mass_single_cell() {
        let m = ProductMeasure::point_mass(grid(16), 3, 0, 0.5).unwrap();
        let nonzero: usize = m.rows().iter().flatten().filter(|w| **w > 0.0).count();
        assert_eq!(nonzero, 1);
        assert_eq!(m.slice_measure(0, &unit()), 1.0);
    }

    #[test]
    fn discretize_uniform_rows() {
        let b = BinnedMeasure::uniform(grid(8));
        let m = ProductMeasure::product(grid(8), &[1.0], &b, 0.0).unwrap();
        for w in &m.rows()[0] {
            assert!((w - 0.125).abs() < 1e-15);
        }
    }

    #[test]
    fn discretize_stationary_product() {
        let d = ImpulseTimeDistribution::bernoulli(0.5).unwrap();
        let m = d.stationary(2);
        let b = BinnedMeasure::uniform(grid(4));
        let pm = ProductMeasure::product(grid(4), &m.weights, &b, m.tail_mass).unwrap();
        assert!((pm.rows()[0][0] - (2.0 / 3.0) / 4.0).abs() < 1e-15);
        assert!((pm.rows()[1][0] - (1.0 / 3.0) / 4.0).abs() < 1e-15);
    }

    #[test]
    fn transfer_conserves_mass() {
        let sys = logistic_half_system();
        let mut mu = ProductMeasure::product(
            grid(32),
            &[0.5, 0.25, 0.25],
            &BinnedMeasure::uniform(grid(32)),
            0.0,
        )
        .unwrap();
        for _ in 0..10 {
            mu = apply_transfer(&sys, &mu);
            assert!((mu.total_mass() - 1.0).abs() < 1e-12, "mass {}", mu.total_mass());
        }
    }

    #[test]
    fn degenerate_identity_fixed_point() {
        // p_0 = 1 and g = identity: a state-0 measure is fixed.
        let sys = identity_system();
        let mu = ProductMeasure::product(
            grid(16),
            &[1.0],
            &BinnedMeasure::uniform(grid(16)),
            0.0,
        )
        .unwrap();
        let out = apply_transfer(&sys, &mu);
        for (a, b) in mu.rows()[0].iter().zip(&out.rows()[0]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn point_mass_spreads_per_renewal() {
        // One application of a state-0 point mass sends mass p_j to state j,
        // landing inside the (bin-resolved) image of the seeding bin under
        // f_j. The seed occupies a bin, so the arrival is an interval.
        let sys = logistic_half_system();
        let g = grid(64);
        let mu = ProductMeasure::point_mass(g, 3, 0, 0.3).unwrap();
        let seed_bin = g.bin_interval(g.bin_of(0.3));
        let out = apply_transfer(&sys, &mu);
        for j in 0..3 {
            let arrival = sys.map_for_state(j).image(&seed_bin);
            // Widen to whole bins: sub-bin placement is not representable.
            let hull = Interval::hull_of(
                g.edge(g.bin_of(arrival.lo())),
                g.edge(g.bin_of(arrival.hi()) + 1),
            );
            let m = out.slice_measure(j, &hull);
            assert!(
                (m - sys.times().pmf(j)).abs() < 1e-12,
                "state {j}: got {m}, want {}",
                sys.times().pmf(j)
            );
            assert!((out.state_marginal()[j] - sys.times().pmf(j)).abs() < 1e-12);
        }
    }

    #[test]
    fn transfer_matches_simulation_tv() {
        // Cross-check one operator application against a large simulated
        // ensemble for the same initial law (uniform position, countdown
        // from the impulse-time law): the one-step pair seed's space
        // marginal is the law of X₁.
        let sys = logistic_half_system();
        let g = grid(16);
        let pair = initial_pair_measure(&sys, &BinnedMeasure::uniform(g), 8).unwrap();
        let space = pair.space_marginal();

        let e = simulate_ensemble(&sys, InitialPosition::Uniform, 1, 1_000_000, 5).unwrap();
        let n = e.len() as f64;
        let mut tv = 0.0;
        for b in 0..g.bins() {
            let iv = g.bin_interval(b);
            // Count samples in [lo, hi) — the top bin is closed above.
            let lo_idx = e.values().partition_point(|v| *v < iv.lo());
            let hi_idx = if b + 1 == g.bins() {
                e.len()
            } else {
                e.values().partition_point(|v| *v < iv.hi())
            };
            let emp = (hi_idx - lo_idx) as f64 / n;
            tv += (space.weights()[b] - emp).abs();
        }
        assert!(0.5 * tv <= 0.01, "tv {}", 0.5 * tv);
    }

    #[test]
    fn path_sum_zero_steps_is_slice() {
        let sys = logistic_half_system();
        let mu = ProductMeasure::product(
            grid(8),
            &[0.6, 0.4],
            &BinnedMeasure::uniform(grid(8)),
            0.0,
        )
        .unwrap();
        let c = Interval::new(0.25, 0.5).unwrap();
        let v = n_step_direct(&sys, &mu, 0, 1, &c).unwrap();
        assert!((v - mu.slice_measure(1, &c)).abs() < 1e-15);
    }

    #[test]
    fn path_sum_one_step_formula() {
        let sys = logistic_half_system();
        let g = grid(16);
        let mu = ProductMeasure::product(
            g,
            &[0.3, 0.3, 0.2, 0.2],
            &BinnedMeasure::uniform(g),
            0.0,
        )
        .unwrap();
        let c = Interval::new(0.0, 0.375).unwrap();
        for j in 0..3 {
            let direct = n_step_direct(&sys, &mu, 1, j, &c).unwrap();
            let pre = sys.map_for_state(j).preimage(&c);
            let expect = mu
                .rows()
                .get(j + 1)
                .map(|_| {
                    let row = RowMeasure::new(g, &mu.rows()[j + 1]);
                    row.set(&pre)
                })
                .unwrap_or(0.0)
                + sys.times().pmf(j) * RowMeasure::new(g, &mu.rows()[0]).set(&pre);
            assert!((direct - expect).abs() < 1e-14, "j={j}: {direct} vs {expect}");
        }
    }

    #[test]
    fn path_sum_matches_iterated_transfer() {
        let sys = logistic_half_system();
        let g = grid(32);
        let mu = ProductMeasure::product(
            g,
            &[0.4, 0.3, 0.2, 0.1],
            &BinnedMeasure::uniform(g),
            0.0,
        )
        .unwrap();
        let mut iter = mu.clone();
        for n in 1..=4usize {
            iter = apply_transfer(&sys, &iter);
            for j in [0usize, 1, 2] {
                for b in [0usize, 7, 20, 31] {
                    let c = g.bin_interval(b);
                    let direct = n_step_direct(&sys, &mu, n, j, &c).unwrap();
                    let slice = iter.slice_measure(j, &c);
                    assert!(
                        (direct - slice).abs() <= 1e-12,
                        "n={n} j={j} b={b}: {direct} vs {slice}"
                    );
                }
            }
        }
    }

    #[test]
    fn path_sum_depth_limited() {
        let sys = logistic_half_system();
        let mu =
            ProductMeasure::product(grid(8), &[1.0], &BinnedMeasure::uniform(grid(8)), 0.0)
                .unwrap();
        assert!(matches!(
            n_step_direct(&sys, &mu, 7, 0, &unit()),
            Err(OperatorError::PathSumTooDeep { .. })
        ));
    }

    #[test]
    fn marginals() {
        let d = ImpulseTimeDistribution::bernoulli(0.5).unwrap();
        let m = d.stationary(2);
        let pm = ProductMeasure::product(
            grid(8),
            &m.weights,
            &BinnedMeasure::uniform(grid(8)),
            0.0,
        )
        .unwrap();
        let sm = pm.state_marginal();
        assert!((sm[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((sm[1] - 1.0 / 3.0).abs() < 1e-12);
        assert!((pm.space_marginal().total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn integrate_constant_is_total() {
        let pm = ProductMeasure::product(
            grid(16),
            &[0.7, 0.3],
            &BinnedMeasure::uniform(grid(16)),
            0.0,
        )
        .unwrap();
        let one = TestFunction::uniform(SpaceFunction::Polynomial { coeffs: vec![1.0] });
        assert!((integrate(&pm, &one) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn convergence_to_point_mass() {
        // g = x/2 applied every step contracts everything to 0.
        let f = IntervalMap::identity(unit()).unwrap();
        let g_map = IntervalMap::affine(unit(), 0.5, 0.0).unwrap();
        let sys = ImpulseSystem::new(
            f,
            g_map,
            ImpulseTimeDistribution::finite(vec![1.0]).unwrap(),
        )
        .unwrap();
        let mu = ProductMeasure::product(
            grid(64),
            &[1.0],
            &BinnedMeasure::uniform(grid(64)),
            0.0,
        )
        .unwrap();
        let run = iterate_to_convergence(&sys, mu, 500, 1e-12);
        assert!(run.converged);
        let first_bin = run.measure.slice_measure(0, &grid(64).bin_interval(0));
        assert!(first_bin > 1.0 - 1e-9, "mass at origin {first_bin}");
    }

    #[test]
    fn state_marginal_convergence_records_diagnostics() {
        let sys = logistic_half_system();
        let mu = ProductMeasure::point_mass(grid(32), 4, 2, 0.7).unwrap();
        let run = iterate_to_convergence(&sys, mu, 300, 0.0);
        // tol = 0 never converges; diagnostics recorded every step.
        assert_eq!(run.diagnostics.len(), 300);
        let last_tv = run.diagnostics.last().unwrap().tv_state;
        assert!(last_tv <= 1e-6, "tv {last_tv}");
    }

    #[test]
    fn limit_independent_of_initial_measure() {
        // Distinct starting measures land on limits within twice the
        // stopping tolerance of each other.
        let sys = logistic_half_system();
        let g = grid(64);
        let tol = 1e-9;
        let from_point = iterate_to_convergence(
            &sys,
            ProductMeasure::point_mass(g, 4, 0, 0.1).unwrap(),
            2000,
            tol,
        );
        let from_spread = iterate_to_convergence(
            &sys,
            ProductMeasure::product(g, &[0.25; 4], &BinnedMeasure::uniform(g), 0.0).unwrap(),
            2000,
            tol,
        );
        assert!(from_point.converged && from_spread.converged);
        let d = from_point
            .measure
            .space_marginal()
            .sup_cdf_distance(&from_spread.measure.space_marginal())
            .unwrap();
        // Stopping at successive change < tol leaves each iterate within
        // tol/(1−rate) of the limit; the observed contraction rate here is
        // well below 1/2, so 2·tol bounds the disagreement.
        assert!(d <= 2.0 * tol, "limits differ by {d}");
    }
}
