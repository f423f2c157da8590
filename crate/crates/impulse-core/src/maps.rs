//! Exact interval algebra for piecewise-monotone self-maps of a compact interval.
//!
//! Maps are declared as an ordered list of monotone branches drawn from a small
//! closed-form catalog (affine, logistic family, power, constant, monotone
//! lookup table). Keeping every branch monotone with an analytically known
//! range makes images and preimages exact up to rounding, which is what the
//! certificate and transfer-operator code relies on.

use serde::{Deserialize, Serialize};

use crate::error::MapError;

/// Absolute tolerance for clamping arguments that sit just outside the domain.
pub const DOMAIN_CLAMP_TOL: f64 = 1e-12;

/// Minimum gap required before two intervals count as disjoint in certificates.
pub const DISJOINT_GAP: f64 = 1e-9;

/// Closed interval `[lo, hi]` with `lo <= hi`, both finite. Degenerate
/// (singleton) intervals are allowed; map domains additionally require
/// `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInterval")]
pub struct Interval {
    lo: f64,
    hi: f64,
}

#[derive(Deserialize)]
struct RawInterval {
    lo: f64,
    hi: f64,
}

impl TryFrom<RawInterval> for Interval {
    type Error = MapError;

    fn try_from(raw: RawInterval) -> Result<Self, Self::Error> {
        Interval::new(raw.lo, raw.hi)
    }
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, MapError> {
        if !lo.is_finite() || !hi.is_finite() || lo > hi {
            return Err(MapError::BadInterval { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    /// Interval suitable as a map domain (`lo < hi` strictly).
    pub fn domain(lo: f64, hi: f64) -> Result<Self, MapError> {
        let iv = Self::new(lo, hi)?;
        if iv.lo == iv.hi {
            return Err(MapError::BadInterval { lo, hi });
        }
        Ok(iv)
    }

    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    /// Hull of two endpoint values given in any order.
    pub fn hull_of(a: f64, b: f64) -> Self {
        Self {
            lo: a.min(b),
            hi: a.max(b),
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn diam(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    /// Distance between the intervals; `0` when they touch or overlap.
    pub fn gap_to(&self, other: &Interval) -> f64 {
        if self.hi < other.lo {
            other.lo - self.hi
        } else if other.hi < self.lo {
            self.lo - other.hi
        } else {
            0.0
        }
    }

    /// `self ⊆ other` up to an absolute slack on each endpoint.
    pub fn subset_of(&self, other: &Interval, tol: f64) -> bool {
        self.lo >= other.lo - tol && self.hi <= other.hi + tol
    }
}

/// Closed-form rule of a single branch. Every rule must be monotone on the
/// branch sub-interval; the constructor splits logistic and table branches so
/// this holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BranchRule {
    /// `x ↦ slope·x + intercept`
    Affine { slope: f64, intercept: f64 },
    /// `x ↦ rate·x·(1 − x)`, vertex at `x = 1/2`
    Logistic { rate: f64 },
    /// `x ↦ x^exponent` with `exponent > 0`, branch must lie in `[0, ∞)`
    Power { exponent: f64 },
    /// `x ↦ value`
    Constant { value: f64 },
    /// Monotone piecewise-linear interpolation of `(x, y)` breakpoints.
    Table { points: Vec<(f64, f64)> },
}

impl BranchRule {
    fn eval(&self, x: f64) -> f64 {
        match self {
            BranchRule::Affine { slope, intercept } => slope * x + intercept,
            BranchRule::Logistic { rate } => rate * x * (1.0 - x),
            BranchRule::Power { exponent } => x.max(0.0).powf(*exponent),
            BranchRule::Constant { value } => *value,
            BranchRule::Table { points } => {
                // Binary search for the segment containing x, then lerp.
                let n = points.len();
                if x <= points[0].0 {
                    return points[0].1;
                }
                if x >= points[n - 1].0 {
                    return points[n - 1].1;
                }
                let mut idx = points.partition_point(|p| p.0 <= x);
                idx = idx.clamp(1, n - 1);
                let (x0, y0) = points[idx - 1];
                let (x1, y1) = points[idx];
                if x1 == x0 {
                    y0
                } else {
                    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
                }
            }
        }
    }
}

/// Direction of a monotone branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Direction {
    Increasing,
    Decreasing,
    Flat,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Branch {
    piece: Interval,
    rule: BranchRule,
}

impl Branch {
    pub fn piece(&self) -> Interval {
        self.piece
    }

    pub fn rule(&self) -> &BranchRule {
        &self.rule
    }

    fn direction(&self) -> Result<Direction, MapError> {
        let dir = match &self.rule {
            BranchRule::Affine { slope, .. } => {
                if *slope > 0.0 {
                    Direction::Increasing
                } else if *slope < 0.0 {
                    Direction::Decreasing
                } else {
                    Direction::Flat
                }
            }
            BranchRule::Logistic { rate } => {
                // Monotone only on one side of the vertex (the constructor
                // splits straddling pieces).
                if self.piece.hi <= 0.5 {
                    if *rate >= 0.0 {
                        Direction::Increasing
                    } else {
                        Direction::Decreasing
                    }
                } else if self.piece.lo >= 0.5 {
                    if *rate >= 0.0 {
                        Direction::Decreasing
                    } else {
                        Direction::Increasing
                    }
                } else {
                    return Err(MapError::NonMonotoneBranch {
                        lo: self.piece.lo,
                        hi: self.piece.hi,
                    });
                }
            }
            BranchRule::Power { .. } => Direction::Increasing,
            BranchRule::Constant { .. } => Direction::Flat,
            BranchRule::Table { points } => {
                let mut incr = true;
                let mut decr = true;
                for w in points.windows(2) {
                    if w[1].1 > w[0].1 {
                        decr = false;
                    }
                    if w[1].1 < w[0].1 {
                        incr = false;
                    }
                }
                match (incr, decr) {
                    (true, true) => Direction::Flat,
                    (true, false) => Direction::Increasing,
                    (false, true) => Direction::Decreasing,
                    (false, false) => {
                        return Err(MapError::NonMonotoneBranch {
                            lo: self.piece.lo,
                            hi: self.piece.hi,
                        })
                    }
                }
            }
        };
        Ok(dir)
    }

    /// Exact range over `sub ⊆ piece` (monotone, so endpoint hull).
    fn range_over(&self, sub: &Interval) -> Interval {
        Interval::hull_of(self.rule.eval(sub.lo), self.rule.eval(sub.hi))
    }

    fn range(&self) -> Interval {
        self.range_over(&self.piece)
    }

    /// Exact `{x ∈ piece : rule(x) ∈ c}` — a single interval per monotone
    /// branch, or `None` when the branch range misses `c`.
    fn preimage(&self, c: &Interval) -> Option<Interval> {
        let target = self.range().intersect(c)?;
        let iv = match &self.rule {
            BranchRule::Affine { slope, intercept } => {
                if *slope == 0.0 {
                    self.piece
                } else {
                    Interval::hull_of(
                        (target.lo - intercept) / slope,
                        (target.hi - intercept) / slope,
                    )
                }
            }
            BranchRule::Constant { .. } => self.piece,
            BranchRule::Power { exponent } => Interval::hull_of(
                target.lo.max(0.0).powf(1.0 / exponent),
                target.hi.max(0.0).powf(1.0 / exponent),
            ),
            BranchRule::Logistic { rate } => {
                // Solve rate·x·(1−x) = y on the monotone side of the vertex:
                // x = (1 ∓ sqrt(1 − 4y/rate)) / 2.
                let solve = |y: f64, upper: bool| -> f64 {
                    let disc = (1.0 - 4.0 * y / rate).max(0.0).sqrt();
                    if upper {
                        0.5 * (1.0 + disc)
                    } else {
                        0.5 * (1.0 - disc)
                    }
                };
                let upper_side = self.piece.lo >= 0.5;
                Interval::hull_of(solve(target.lo, upper_side), solve(target.hi, upper_side))
            }
            BranchRule::Table { points } => {
                // Monotone table: gather the x-extent of every segment whose
                // value range meets the target; contiguity follows from
                // monotonicity.
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for w in points.windows(2) {
                    let (x0, y0) = w[0];
                    let (x1, y1) = w[1];
                    let seg = Interval::hull_of(y0, y1);
                    let Some(sub) = seg.intersect(&target) else {
                        continue;
                    };
                    if y1 == y0 {
                        lo = lo.min(x0);
                        hi = hi.max(x1);
                    } else {
                        let t0 = x0 + (sub.lo - y0) * (x1 - x0) / (y1 - y0);
                        let t1 = x0 + (sub.hi - y0) * (x1 - x0) / (y1 - y0);
                        lo = lo.min(t0.min(t1));
                        hi = hi.max(t0.max(t1));
                    }
                }
                if lo > hi {
                    return None;
                }
                Interval { lo, hi }
            }
        };
        // Clamp rounding excursions back into the branch piece.
        iv.intersect(&self.piece).or(Some(Interval::point(
            self.piece.clamp(iv.midpoint()),
        )))
    }
}

/// Piecewise-monotone self-map of a compact interval with exact image and
/// preimage computations. Serializable for reports; rebuilding a map goes
/// through the validating constructors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalMap {
    domain: Interval,
    branches: Vec<Branch>,
    monotone: bool,
    lipschitz: Option<f64>,
}

/// Grid size used when validating a declared Lipschitz constant.
const LIPSCHITZ_VALIDATION_GRID: usize = 4096;
/// Continuity tolerance across branch junctions.
const CONTINUITY_TOL: f64 = 1e-9;

impl IntervalMap {
    /// Builds a map from ordered `(piece, rule)` branches. Pieces must tile
    /// the domain exactly; logistic pieces straddling the vertex and
    /// non-monotone tables are split into monotone branches.
    pub fn from_branches(
        domain: Interval,
        branches: Vec<(Interval, BranchRule)>,
    ) -> Result<Self, MapError> {
        if domain.lo >= domain.hi {
            return Err(MapError::BadInterval {
                lo: domain.lo,
                hi: domain.hi,
            });
        }
        if branches.is_empty() {
            return Err(MapError::EmptyBranches);
        }

        let mut split = Vec::new();
        for (piece, rule) in branches {
            match &rule {
                BranchRule::Logistic { .. } if piece.lo < 0.5 && piece.hi > 0.5 => {
                    split.push(Branch {
                        piece: Interval { lo: piece.lo, hi: 0.5 },
                        rule: rule.clone(),
                    });
                    split.push(Branch {
                        piece: Interval { lo: 0.5, hi: piece.hi },
                        rule,
                    });
                }
                BranchRule::Table { points } => {
                    split.extend(split_table(&piece, points)?);
                }
                BranchRule::Power { exponent } => {
                    if *exponent <= 0.0 || piece.lo < 0.0 {
                        return Err(MapError::BadRule(
                            "power rule requires exponent > 0 and a nonnegative piece".into(),
                        ));
                    }
                    split.push(Branch { piece, rule });
                }
                _ => split.push(Branch { piece, rule }),
            }
        }

        // Pieces must partition the domain with no gaps or overlaps.
        if split[0].piece.lo != domain.lo || split.last().unwrap().piece.hi != domain.hi {
            return Err(MapError::BranchesDontTile);
        }
        for w in split.windows(2) {
            if w[0].piece.hi != w[1].piece.lo {
                return Err(MapError::BranchesDontTile);
            }
        }
        for b in &split {
            if b.piece.lo >= b.piece.hi && split.len() > 1 {
                return Err(MapError::BranchesDontTile);
            }
        }

        // Continuity across junctions (the maps modelled here are continuous;
        // exact ranges via endpoint hulls depend on it).
        for w in split.windows(2) {
            let left = w[0].rule.eval(w[0].piece.hi);
            let right = w[1].rule.eval(w[1].piece.lo);
            if (left - right).abs() > CONTINUITY_TOL {
                return Err(MapError::DiscontinuousAt {
                    x: w[0].piece.hi,
                    left,
                    right,
                });
            }
        }

        // Self-map containment, checked per branch with endpoint/vertex
        // analysis (the vertex is an endpoint after splitting).
        for b in &split {
            let range = b.range();
            if !range.subset_of(&domain, DOMAIN_CLAMP_TOL) {
                return Err(MapError::NotSelfMap {
                    lo: range.lo,
                    hi: range.hi,
                });
            }
        }

        let mut directions = Vec::with_capacity(split.len());
        for b in &split {
            directions.push(b.direction()?);
        }
        let has_incr = directions.contains(&Direction::Increasing);
        let has_decr = directions.contains(&Direction::Decreasing);
        let monotone = !(has_incr && has_decr);

        Ok(Self {
            domain,
            branches: split,
            monotone,
            lipschitz: None,
        })
    }

    /// Declares a Lipschitz constant; validated against a dense-grid estimate.
    pub fn with_lipschitz(mut self, l: f64) -> Result<Self, MapError> {
        if !(l.is_finite() && l >= 0.0) {
            return Err(MapError::BadLipschitz { declared: l, estimate: f64::NAN });
        }
        let est = self.lipschitz_estimate(LIPSCHITZ_VALIDATION_GRID);
        if est > l + 1e-9 {
            return Err(MapError::BadLipschitz { declared: l, estimate: est });
        }
        self.lipschitz = Some(l);
        Ok(self)
    }

    pub fn affine(domain: Interval, slope: f64, intercept: f64) -> Result<Self, MapError> {
        Self::from_branches(domain, vec![(domain, BranchRule::Affine { slope, intercept })])
    }

    pub fn logistic(domain: Interval, rate: f64) -> Result<Self, MapError> {
        Self::from_branches(domain, vec![(domain, BranchRule::Logistic { rate })])
    }

    pub fn power(domain: Interval, exponent: f64) -> Result<Self, MapError> {
        Self::from_branches(domain, vec![(domain, BranchRule::Power { exponent })])
    }

    pub fn constant(domain: Interval, value: f64) -> Result<Self, MapError> {
        Self::from_branches(domain, vec![(domain, BranchRule::Constant { value })])
    }

    pub fn identity(domain: Interval) -> Result<Self, MapError> {
        Self::affine(domain, 1.0, 0.0)
    }

    pub fn table(domain: Interval, points: Vec<(f64, f64)>) -> Result<Self, MapError> {
        Self::from_branches(domain, vec![(domain, BranchRule::Table { points })])
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn is_monotone(&self) -> bool {
        self.monotone
    }

    /// Strict monotonicity over the whole domain (no flat pieces, junctions
    /// strictly ordered) — the setting of the splitting certificates.
    pub fn is_injective(&self) -> bool {
        if !self.monotone {
            return false;
        }
        let mut prev = self.eval(self.domain.lo).unwrap_or(f64::NAN);
        let n = 257;
        let mut increasing = None;
        for i in 1..=n {
            let x = self.domain.lo + self.domain.diam() * i as f64 / n as f64;
            let y = match self.eval(x) {
                Ok(v) => v,
                Err(_) => return false,
            };
            if y == prev {
                return false;
            }
            let up = y > prev;
            match increasing {
                None => increasing = Some(up),
                Some(dir) if dir != up => return false,
                _ => {}
            }
            prev = y;
        }
        true
    }

    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    fn branch_for(&self, x: f64) -> &Branch {
        let idx = self
            .branches
            .partition_point(|b| b.piece.hi < x)
            .min(self.branches.len() - 1);
        &self.branches[idx]
    }

    /// Evaluates the map. Arguments within `1e-12` of the domain are clamped;
    /// anything farther out is a hard error.
    pub fn eval(&self, x: f64) -> Result<f64, MapError> {
        if !self.domain.contains(x) {
            if x >= self.domain.lo - DOMAIN_CLAMP_TOL && x <= self.domain.hi + DOMAIN_CLAMP_TOL {
                return self.eval(self.domain.clamp(x));
            }
            return Err(MapError::OutsideDomain {
                x,
                lo: self.domain.lo,
                hi: self.domain.hi,
            });
        }
        Ok(self.domain.clamp(self.branch_for(x).rule.eval(x)))
    }

    /// Exact range of the map over `j ⊆ domain`.
    pub fn image(&self, j: &Interval) -> Interval {
        let j = j.intersect(&self.domain).unwrap_or_else(|| {
            Interval::point(self.domain.clamp(j.midpoint()))
        });
        let mut out: Option<Interval> = None;
        for b in &self.branches {
            if let Some(sub) = b.piece.intersect(&j) {
                let r = b.range_over(&sub);
                out = Some(match out {
                    Some(acc) => acc.hull(&r),
                    None => r,
                });
            }
        }
        let raw = out.unwrap_or_else(|| Interval::point(self.eval(j.midpoint()).unwrap()));
        raw.intersect(&self.domain).unwrap_or(raw)
    }

    /// Exact `f⁻¹(c)` as interior-disjoint intervals, one per branch that
    /// meets `c`, in branch order.
    pub fn preimage(&self, c: &Interval) -> Vec<Interval> {
        let mut out = Vec::new();
        for b in &self.branches {
            if let Some(iv) = b.preimage(c) {
                out.push(iv);
            }
        }
        out
    }

    /// Preimage of a union of intervals; pieces stay interior-disjoint when
    /// the input pieces are. Touching pieces are merged, which keeps chained
    /// preimage sets from growing through branchy maps.
    pub fn preimage_of_set(&self, set: &[Interval]) -> Vec<Interval> {
        let mut out = Vec::new();
        for c in set {
            out.extend(self.preimage(c));
        }
        merge_touching(&mut out);
        out
    }

    /// Max difference quotient over adjacent grid points (breakpoints
    /// included). Converges to the smallest Lipschitz constant for the
    /// piecewise-C¹ catalog.
    pub fn lipschitz_estimate(&self, grid_size: usize) -> f64 {
        let grid_size = grid_size.max(2);
        let mut xs: Vec<f64> = (0..=grid_size)
            .map(|i| self.domain.lo + self.domain.diam() * i as f64 / grid_size as f64)
            .collect();
        for b in &self.branches {
            xs.push(b.piece.lo);
            xs.push(b.piece.hi);
            if let BranchRule::Table { points } = &b.rule {
                xs.extend(points.iter().map(|p| p.0));
            }
        }
        xs.retain(|x| self.domain.contains(*x));
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let mut best = 0.0f64;
        for w in xs.windows(2) {
            let dx = w[1] - w[0];
            if dx < 1e-15 {
                continue;
            }
            let dy = (self.eval(w[1]).unwrap() - self.eval(w[0]).unwrap()).abs();
            best = best.max(dy / dx);
        }
        best
    }
}

/// Splits a lookup-table rule into monotone runs, one branch per run.
fn split_table(piece: &Interval, points: &[(f64, f64)]) -> Result<Vec<Branch>, MapError> {
    if points.len() < 2 {
        return Err(MapError::BadRule("table rule needs at least two points".into()));
    }
    for w in points.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(MapError::BadRule("table x-coordinates must be strictly increasing".into()));
        }
    }
    if points[0].0 != piece.lo || points.last().unwrap().0 != piece.hi {
        return Err(MapError::BadRule("table must span its piece exactly".into()));
    }

    let sign = |a: f64, b: f64| -> i8 {
        if b > a {
            1
        } else if b < a {
            -1
        } else {
            0
        }
    };

    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut start = 0usize;
    let mut dir: i8 = 0;
    for i in 0..points.len() - 1 {
        let s = sign(points[i].1, points[i + 1].1);
        if dir == 0 {
            dir = s;
        } else if s != 0 && s != dir {
            runs.push((start, i));
            start = i;
            dir = s;
        }
    }
    runs.push((start, points.len() - 1));

    Ok(runs
        .into_iter()
        .map(|(a, b)| Branch {
            piece: Interval {
                lo: points[a].0,
                hi: points[b].0,
            },
            rule: BranchRule::Table {
                points: points[a..=b].to_vec(),
            },
        })
        .collect())
}

/// Sorts intervals and merges overlapping or touching neighbours in place.
/// Measure-preserving for interior-disjoint inputs.
pub fn merge_touching(set: &mut Vec<Interval>) {
    if set.len() < 2 {
        return;
    }
    set.sort_by(|a, b| a.lo().total_cmp(&b.lo()));
    let mut merged: Vec<Interval> = Vec::with_capacity(set.len());
    for iv in set.iter() {
        match merged.last_mut() {
            Some(last) if iv.lo() <= last.hi() => {
                *last = Interval {
                    lo: last.lo,
                    hi: last.hi.max(iv.hi),
                };
            }
            _ => merged.push(*iv),
        }
    }
    *set = merged;
}

/// Image of a composition `maps[0] ∘ maps[1] ∘ … ∘ maps[n−1]` over `j`; the
/// last list element is applied first. An empty list returns `j`.
pub fn compose_image(maps: &[&IntervalMap], j: &Interval) -> Interval {
    maps.iter().rev().fold(*j, |acc, m| m.image(&acc))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Interval {
        Interval::domain(0.0, 1.0).unwrap()
    }

    fn two() -> Interval {
        Interval::domain(0.0, 2.0).unwrap()
    }

    #[test]
    fn eval_logistic_vertex() {
        let f = IntervalMap::logistic(unit(), 4.0).unwrap();
        assert_eq!(f.eval(0.5).unwrap(), 1.0);
    }

    #[test]
    fn eval_affine_eighth() {
        let g = IntervalMap::affine(unit(), 0.125, 0.0).unwrap();
        assert_eq!(g.eval(1.0).unwrap(), 0.125);
    }

    #[test]
    fn eval_square_root() {
        let g = IntervalMap::power(two(), 0.5).unwrap();
        assert!((g.eval(2.0).unwrap() - 2.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn eval_clamps_near_domain_and_rejects_far() {
        let g = IntervalMap::affine(unit(), 0.125, 0.0).unwrap();
        assert!(g.eval(1.0 + 5e-13).is_ok());
        assert!(matches!(g.eval(1.1), Err(MapError::OutsideDomain { .. })));
    }

    #[test]
    fn image_full_logistic_is_onto() {
        let f = IntervalMap::logistic(unit(), 4.0).unwrap();
        let img = f.image(&unit());
        assert_eq!((img.lo(), img.hi()), (0.0, 1.0));
    }

    #[test]
    fn image_affine_endpoints() {
        let g = IntervalMap::affine(unit(), 0.125, 0.0).unwrap();
        let img = g.image(&unit());
        assert_eq!((img.lo(), img.hi()), (0.0, 0.125));
    }

    #[test]
    fn image_sqrt_endpoint() {
        let g = IntervalMap::power(two(), 0.5).unwrap();
        let img = g.image(&two());
        assert_eq!(img.lo(), 0.0);
        assert!((img.hi() - 2.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn compose_empty_returns_input() {
        let j = Interval::new(0.25, 0.75).unwrap();
        assert_eq!(compose_image(&[], &j), j);
    }

    #[test]
    fn compose_double_sqrt() {
        let g = IntervalMap::power(two(), 0.5).unwrap();
        let img = compose_image(&[&g, &g], &two());
        assert!((img.hi() - 2.0f64.powf(0.25)).abs() < 1e-15);
        assert_eq!(img.lo(), 0.0);
    }

    #[test]
    fn compose_applies_innermost_last() {
        let f = IntervalMap::logistic(unit(), 4.0).unwrap();
        let g = IntervalMap::affine(unit(), 0.125, 0.0).unwrap();
        // g(f([0,1])) = g([0,1]) = [0, 0.125]
        let img = compose_image(&[&g, &f], &unit());
        assert_eq!((img.lo(), img.hi()), (0.0, 0.125));
    }

    #[test]
    fn preimage_clipped_affine() {
        // x+1 on [0,1], constant 2 on [1,2]; preimage of [0, 1.5] is [0, 0.5].
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
        .unwrap();
        let pre = f.preimage(&Interval::new(0.0, 1.5).unwrap());
        assert_eq!(pre.len(), 1);
        assert_eq!((pre[0].lo(), pre[0].hi()), (0.0, 0.5));
    }

    #[test]
    fn preimage_identity() {
        let id = IntervalMap::identity(unit()).unwrap();
        let c = Interval::new(0.2, 0.7).unwrap();
        let pre = id.preimage(&c);
        assert_eq!(pre.len(), 1);
        assert!((pre[0].lo() - 0.2).abs() < 1e-15 && (pre[0].hi() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn preimage_logistic_two_branches() {
        let f = IntervalMap::logistic(unit(), 4.0).unwrap();
        let pre = f.preimage(&Interval::new(0.75, 1.0).unwrap());
        // 4x(1-x) = 3/4 at x = 1/4 and 3/4; two abutting pieces around the vertex.
        assert_eq!(pre.len(), 2);
        assert!((pre[0].lo() - 0.25).abs() < 1e-12);
        assert!((pre[0].hi() - 0.5).abs() < 1e-12);
        assert!((pre[1].lo() - 0.5).abs() < 1e-12);
        assert!((pre[1].hi() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn lipschitz_estimates() {
        let g = IntervalMap::affine(unit(), 0.125, 0.0).unwrap();
        assert!((g.lipschitz_estimate(64) - 0.125).abs() < 1e-12);

        let f = IntervalMap::logistic(unit(), 4.0).unwrap();
        let est = f.lipschitz_estimate(4096);
        assert!(est <= 4.0 + 1e-9 && est > 3.99, "estimate {est}");

        let c = IntervalMap::constant(unit(), 0.3).unwrap();
        assert_eq!(c.lipschitz_estimate(64), 0.0);
    }

    #[test]
    fn declared_lipschitz_validation() {
        let f = IntervalMap::logistic(unit(), 4.0).unwrap();
        // A loose constant is accepted, a too-small one is rejected.
        assert!(f.clone().with_lipschitz(8.0).is_ok());
        assert!(f.with_lipschitz(3.5).is_err());
    }

    #[test]
    fn self_map_violation_rejected() {
        assert!(matches!(
            IntervalMap::affine(unit(), 2.0, 0.0),
            Err(MapError::NotSelfMap { .. })
        ));
    }

    #[test]
    fn non_monotone_table_is_split() {
        let m = IntervalMap::table(
            unit(),
            vec![(0.0, 0.0), (0.5, 1.0), (1.0, 0.25)],
        )
        .unwrap();
        assert_eq!(m.branches().len(), 2);
        assert!(!m.is_monotone());
        let pre = m.preimage(&Interval::new(0.5, 1.0).unwrap());
        assert_eq!(pre.len(), 2);
    }

    #[test]
    fn injectivity_detection() {
        let id = IntervalMap::identity(unit()).unwrap();
        assert!(id.is_injective());
        let c = IntervalMap::constant(unit(), 0.5).unwrap();
        assert!(!c.is_injective());
        let f = IntervalMap::logistic(unit(), 4.0).unwrap();
        assert!(!f.is_injective());
    }

    #[test]
    fn degenerate_image_is_eval() {
        let f = IntervalMap::logistic(unit(), 4.0).unwrap();
        let img = f.image(&Interval::point(0.3));
        let y = f.eval(0.3).unwrap();
        assert_eq!((img.lo(), img.hi()), (y, y));
    }
}
