//! Impulse-time distributions and the induced countdown Markov chain.
//!
//! The chain lives on `{0, 1, 2, …}`: state `k ≥ 1` moves to `k − 1` with
//! probability one, state `0` renews to `j` with probability `p_j`. Its
//! stationary law is `m_i = (Σ_{j≥i} p_j) / (1 + E)` with `E` the mean
//! impulse time, and the time reversal has kernel `q_ij = (m_j / m_i) p_ji`,
//! which leaves exactly two nonzero entries per row: up one state, or back
//! to zero.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::DistError;

/// Stationary-tail threshold used by the default state truncation.
pub const TRUNCATION_TAIL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PmfKind {
    /// `p_k = (1 − p)·p^k`; mean `p / (1 − p)`, unbounded support.
    Geometric { p: f64 },
    /// Explicit finite pmf `p_0 … p_n`.
    Finite { probs: Vec<f64> },
    /// Truncated pmf with a declared (small) tail mass beyond the listed terms.
    Custom { probs: Vec<f64>, tail_mass: f64 },
}

/// Distribution of the number of ordinary steps between consecutive impulses.
/// Serializable for reports; construction always goes through the validating
/// constructors so the derived tables exist.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImpulseTimeDistribution {
    kind: PmfKind,
    mean: f64,
    support_unbounded: bool,
    /// Suffix sums for list-backed pmfs: `suffix[i] = Σ_{j≥i} p_j` including
    /// any declared tail. Empty for the geometric closed form.
    #[serde(skip)]
    suffix: Vec<f64>,
    /// Cumulative table for inverse-CDF sampling of list-backed pmfs.
    #[serde(skip)]
    cumulative: Vec<f64>,
}

impl ImpulseTimeDistribution {
    pub fn geometric(p: f64) -> Result<Self, DistError> {
        if !(p > 0.0 && p < 1.0) {
            return Err(DistError::BadGeometricParameter(p));
        }
        Ok(Self {
            kind: PmfKind::Geometric { p },
            mean: p / (1.0 - p),
            support_unbounded: true,
            suffix: Vec::new(),
            cumulative: Vec::new(),
        })
    }

    pub fn finite(probs: Vec<f64>) -> Result<Self, DistError> {
        Self::from_list(probs, 0.0, false)
    }

    /// Two-point impulse times `Pr(T = 0) = 1 − p`, `Pr(T = 1) = p`.
    pub fn bernoulli(p: f64) -> Result<Self, DistError> {
        Self::finite(vec![1.0 - p, p])
    }

    pub fn custom(probs: Vec<f64>, tail_mass: f64) -> Result<Self, DistError> {
        Self::from_list(probs, tail_mass, true)
    }

    fn from_list(probs: Vec<f64>, tail_mass: f64, custom: bool) -> Result<Self, DistError> {
        if probs.is_empty() || probs.iter().any(|p| !p.is_finite() || *p < 0.0) || tail_mass < 0.0 {
            return Err(DistError::BadPmf);
        }
        if probs[0] <= 0.0 {
            return Err(DistError::ZeroAtOrigin);
        }
        let total: f64 = probs.iter().sum::<f64>() + tail_mass;
        if (total - 1.0).abs() > 1e-12 {
            return Err(DistError::NotNormalized(total));
        }
        let mean: f64 = probs.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
        if !mean.is_finite() {
            return Err(DistError::DivergentMean);
        }
        // Right-to-left suffix sums keep the reversed-kernel rows stochastic
        // to rounding: suffix[i] = p_i + suffix[i+1] exactly as computed.
        let mut suffix = vec![0.0; probs.len() + 1];
        suffix[probs.len()] = tail_mass;
        for i in (0..probs.len()).rev() {
            suffix[i] = probs[i] + suffix[i + 1];
        }
        let mut cumulative = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for p in &probs {
            acc += p;
            cumulative.push(acc);
        }
        let kind = if custom {
            PmfKind::Custom { probs, tail_mass }
        } else {
            PmfKind::Finite { probs }
        };
        Ok(Self {
            kind,
            mean,
            support_unbounded: false,
            suffix,
            cumulative,
        })
    }

    pub fn kind(&self) -> &PmfKind {
        &self.kind
    }

    /// `Pr(T = n)`.
    pub fn pmf(&self, n: usize) -> f64 {
        match &self.kind {
            PmfKind::Geometric { p } => (1.0 - p) * p.powi(n as i32),
            PmfKind::Finite { probs } | PmfKind::Custom { probs, .. } => {
                probs.get(n).copied().unwrap_or(0.0)
            }
        }
    }

    /// `Σ_{j≥i} p_j`, exact for the geometric closed form.
    pub fn tail_sum(&self, i: usize) -> f64 {
        match &self.kind {
            PmfKind::Geometric { p } => p.powi(i as i32),
            _ => self.suffix.get(i).copied().unwrap_or_else(|| {
                *self.suffix.last().expect("suffix table present")
            }),
        }
    }

    /// `E(T)`.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn support_unbounded(&self) -> bool {
        self.support_unbounded
    }

    /// Largest state with positive stationary weight, if the support is bounded.
    pub fn support_bound(&self) -> Option<usize> {
        match &self.kind {
            PmfKind::Geometric { .. } => None,
            PmfKind::Finite { probs } => {
                Some(probs.iter().rposition(|p| *p > 0.0).unwrap_or(0))
            }
            PmfKind::Custom { probs, tail_mass } => {
                if *tail_mass > 0.0 {
                    None
                } else {
                    Some(probs.iter().rposition(|p| *p > 0.0).unwrap_or(0))
                }
            }
        }
    }

    /// Smallest truncation whose stationary tail mass is below `TRUNCATION_TAIL`.
    pub fn default_truncation(&self) -> usize {
        match &self.kind {
            PmfKind::Geometric { p } => {
                // Stationary tail beyond K is exactly p^K.
                let k = (TRUNCATION_TAIL.ln() / p.ln()).ceil() as usize;
                k.max(1)
            }
            _ => self.support_bound().map(|s| s + 1).unwrap_or(self.suffix.len()),
        }
    }

    /// Smallest truncation whose pmf tail `Σ_{k≥K} p_k` drops below `bound`.
    pub fn pmf_truncation(&self, bound: f64) -> usize {
        let mut k = 1usize;
        while self.tail_sum(k) >= bound && k < 100_000 {
            k += 1;
        }
        k
    }

    /// Countdown-chain transition probability `p_{ij}`.
    pub fn transition_prob(&self, i: usize, j: usize) -> f64 {
        if i == 0 {
            self.pmf(j)
        } else if j + 1 == i {
            1.0
        } else {
            0.0
        }
    }

    /// Stationary weight `m_i = (Σ_{j≥i} p_j) / (1 + E)`.
    pub fn stationary_weight(&self, i: usize) -> f64 {
        self.tail_sum(i) / (1.0 + self.mean)
    }

    /// Truncated stationary distribution with explicit tail bookkeeping.
    pub fn stationary(&self, truncation: usize) -> StationaryStateDistribution {
        let truncation = truncation.max(1);
        let weights: Vec<f64> = (0..truncation).map(|i| self.stationary_weight(i)).collect();
        // Tail of m beyond K: Σ_{i≥K} tail_sum(i) / (1+E).
        let tail_mass = match &self.kind {
            PmfKind::Geometric { p } => {
                // Σ_{i≥K} p^i (1−p) = p^K
                p.powi(truncation as i32)
            }
            _ => {
                let upper = self.suffix.len();
                let sum: f64 = (truncation..upper).map(|i| self.tail_sum(i)).sum();
                (sum / (1.0 + self.mean)).max(0.0)
            }
        };
        StationaryStateDistribution {
            weights,
            truncation,
            tail_mass,
        }
    }

    /// Reversed-chain transition probability `q_{ij} = (m_j / m_i)·p_{ji}`.
    /// Only `q_{i,i+1} = m_{i+1}/m_i` and `q_{i,0} = m_0 p_i / m_i` are nonzero.
    pub fn reversed_prob(&self, i: usize, j: usize) -> Result<f64, DistError> {
        let tail_i = self.tail_sum(i);
        if tail_i <= 0.0 {
            return Err(DistError::UndefinedState(i));
        }
        Ok(if j == i + 1 {
            self.tail_sum(i + 1) / tail_i
        } else if j == 0 {
            // m_0 p_i / m_i with m_0 = 1/(1+E) cancels to p_i / tail_i.
            self.pmf(i) / tail_i
        } else {
            0.0
        })
    }

    /// `P([ξ_0, …, ξ_{n−1}]) = m_{ξ_0} · p_{ξ_0 ξ_1} · … · p_{ξ_{n−2} ξ_{n−1}}`.
    pub fn cylinder_prob_forward(&self, cylinder: &Cylinder) -> f64 {
        let symbols = cylinder.symbols();
        let mut prob = self.stationary_weight(symbols[0]);
        for w in symbols.windows(2) {
            if prob == 0.0 {
                return 0.0;
            }
            prob *= self.transition_prob(w[0], w[1]);
        }
        prob
    }

    /// Same under the reversed kernel; equals the forward probability of the
    /// reversed word.
    pub fn cylinder_prob_reversed(&self, cylinder: &Cylinder) -> f64 {
        let symbols = cylinder.symbols();
        let mut prob = self.stationary_weight(symbols[0]);
        for w in symbols.windows(2) {
            if prob == 0.0 {
                return 0.0;
            }
            match self.reversed_prob(w[0], w[1]) {
                Ok(q) => prob *= q,
                Err(_) => return 0.0,
            }
        }
        prob
    }

    /// Draws one impulse time. Closed-form inversion for the geometric law,
    /// cumulative-table lookup otherwise.
    pub fn sample_time<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        match &self.kind {
            PmfKind::Geometric { p } => {
                // Smallest k with 1 − p^{k+1} > u.
                let k = ((1.0 - u).ln() / p.ln()).floor();
                if k.is_finite() && k >= 0.0 {
                    k as usize
                } else {
                    0
                }
            }
            _ => {
                let idx = self.cumulative.partition_point(|c| *c <= u);
                idx.min(self.cumulative.len() - 1)
            }
        }
    }

    /// Forward countdown path of length `len`, starting from the impulse-time
    /// law itself (`Pr(F_0 = k) = p_k`).
    pub fn sample_forward_path<R: Rng + ?Sized>(&self, rng: &mut R, len: usize) -> Vec<usize> {
        let mut path = Vec::with_capacity(len);
        let mut state = self.sample_time(rng);
        for _ in 0..len {
            path.push(state);
            state = if state == 0 {
                self.sample_time(rng)
            } else {
                state - 1
            };
        }
        path
    }

    /// Reversed-chain path of length `len`: the start is drawn from the
    /// truncated stationary law (renormalized; truncation per
    /// `default_truncation`), each step moves up with probability
    /// `m_{i+1}/m_i` and renews to zero otherwise.
    pub fn sample_reversed_path<R: Rng + ?Sized>(&self, rng: &mut R, len: usize) -> Vec<usize> {
        let k = self.default_truncation();
        let m = self.stationary(k);
        let total: f64 = m.weights.iter().sum();
        let mut u: f64 = rng.gen::<f64>() * total;
        let mut state = k - 1;
        for (i, w) in m.weights.iter().enumerate() {
            if u < *w {
                state = i;
                break;
            }
            u -= w;
        }
        let mut path = Vec::with_capacity(len);
        for _ in 0..len {
            path.push(state);
            let up = self.tail_sum(state + 1) / self.tail_sum(state);
            state = if rng.gen::<f64>() < up { state + 1 } else { 0 };
        }
        path
    }
}

/// Truncated stationary distribution of the countdown chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryStateDistribution {
    pub weights: Vec<f64>,
    pub truncation: usize,
    pub tail_mass: f64,
}

impl StationaryStateDistribution {
    pub fn weight(&self, i: usize) -> f64 {
        self.weights.get(i).copied().unwrap_or(0.0)
    }
}

/// Finite word of countdown states.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Cylinder(Vec<usize>);

impl Cylinder {
    pub fn new(symbols: Vec<usize>) -> Result<Self, DistError> {
        if symbols.is_empty() {
            return Err(DistError::EmptyCylinder);
        }
        Ok(Self(symbols))
    }

    pub fn symbols(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn reversed(&self) -> Cylinder {
        let mut s = self.0.clone();
        s.reverse();
        Cylinder(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn bernoulli_half() -> ImpulseTimeDistribution {
        ImpulseTimeDistribution::bernoulli(0.5).unwrap()
    }

    #[test]
    fn means() {
        assert_eq!(bernoulli_half().mean(), 0.5);
        assert_eq!(ImpulseTimeDistribution::finite(vec![1.0]).unwrap().mean(), 0.0);
        let geo = ImpulseTimeDistribution::geometric(0.5).unwrap();
        assert!((geo.mean() - 1.0).abs() < 1e-15);
        // p_k = (1/2)^{k+1}
        assert!((geo.pmf(2) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn transition_matrix_shape() {
        let d = bernoulli_half();
        assert_eq!(d.transition_prob(0, 3), d.pmf(3));
        assert_eq!(d.transition_prob(5, 4), 1.0);
        assert_eq!(d.transition_prob(5, 3), 0.0);
    }

    #[test]
    fn stationary_bernoulli() {
        let m = bernoulli_half().stationary(2);
        assert!((m.weights[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.weights[1] - 1.0 / 3.0).abs() < 1e-15);
        assert!(m.tail_mass.abs() < 1e-15);
    }

    #[test]
    fn stationary_degenerate() {
        let d = ImpulseTimeDistribution::finite(vec![1.0]).unwrap();
        let m = d.stationary(1);
        assert_eq!(m.weights, vec![1.0]);
        assert_eq!(m.tail_mass, 0.0);
    }

    #[test]
    fn stationary_geometric_closed_form() {
        let d = ImpulseTimeDistribution::geometric(0.25).unwrap();
        for i in 0..20 {
            let expect = 0.75 * 0.25f64.powi(i as i32);
            assert!((d.stationary_weight(i) - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn stationarity_fixed_point() {
        // Σ_i m_i p_{ij} = m_j on the truncation.
        for d in [
            bernoulli_half(),
            ImpulseTimeDistribution::geometric(0.7).unwrap(),
            ImpulseTimeDistribution::finite(vec![0.3, 0.3, 0.4]).unwrap(),
        ] {
            let k = d.default_truncation().max(8);
            for j in 0..k - 1 {
                let mut acc = 0.0;
                for i in 0..=k.max(j + 2) {
                    acc += d.stationary_weight(i) * d.transition_prob(i, j);
                }
                assert!(
                    (acc - d.stationary_weight(j)).abs() < 1e-12,
                    "stationarity failed at {j}"
                );
            }
        }
    }

    #[test]
    fn reversed_rows_bernoulli() {
        let d = bernoulli_half();
        assert!((d.reversed_prob(1, 0).unwrap() - 1.0).abs() < 1e-15);
        assert!((d.reversed_prob(0, 0).unwrap() - 0.5).abs() < 1e-15);
        assert!((d.reversed_prob(0, 1).unwrap() - 0.5).abs() < 1e-15);
        assert!(d.reversed_prob(2, 0).is_err());
    }

    #[test]
    fn reversed_rows_stochastic() {
        let d = ImpulseTimeDistribution::geometric(0.6).unwrap();
        for i in 0..40 {
            let sum = d.reversed_prob(i, i + 1).unwrap() + d.reversed_prob(i, 0).unwrap();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn q_stationarity() {
        // Σ_i m_i q_{ij} = m_j.
        let d = ImpulseTimeDistribution::geometric(0.5).unwrap();
        let k = 60;
        for j in 0..8usize {
            let mut acc = 0.0;
            for i in 0..k {
                let q = d.reversed_prob(i, j).unwrap_or(0.0);
                acc += d.stationary_weight(i) * q;
            }
            assert!((acc - d.stationary_weight(j)).abs() < 1e-12);
        }
    }

    #[test]
    fn cylinder_probabilities() {
        let geo = ImpulseTimeDistribution::geometric(0.5).unwrap();
        // [2,1,0]: m_2 · 1 · 1 = (1−p) p² = 1/8
        let c = Cylinder::new(vec![2, 1, 0]).unwrap();
        assert!((geo.cylinder_prob_forward(&c) - 0.125).abs() < 1e-15);
        // [1,1] impossible
        let c = Cylinder::new(vec![1, 1]).unwrap();
        assert_eq!(geo.cylinder_prob_forward(&c), 0.0);
        // [0,k] = m_0 p_k
        let c = Cylinder::new(vec![0, 3]).unwrap();
        let expect = geo.stationary_weight(0) * geo.pmf(3);
        assert!((geo.cylinder_prob_forward(&c) - expect).abs() < 1e-16);
    }

    #[test]
    fn reversed_cylinder_identities() {
        let d = bernoulli_half();
        // reversed([0,1,2]) = forward([2,1,0]) = 0 here (m_2 = 0)
        let c = Cylinder::new(vec![0, 1, 2]).unwrap();
        assert_eq!(d.cylinder_prob_reversed(&c), d.cylinder_prob_forward(&c.reversed()));
        // reversed single-symbol = m_j
        let c = Cylinder::new(vec![1]).unwrap();
        assert!((d.cylinder_prob_reversed(&c) - 1.0 / 3.0).abs() < 1e-15);
        // reversed([0,0]) = m_0 q_00 = 2/3 · 1/2 = 1/3
        let c = Cylinder::new(vec![0, 0]).unwrap();
        assert!((d.cylinder_prob_reversed(&c) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn reversal_identity_random_cylinders() {
        let dists = [
            ImpulseTimeDistribution::geometric(0.5).unwrap(),
            ImpulseTimeDistribution::geometric(0.85).unwrap(),
            ImpulseTimeDistribution::finite(vec![0.3, 0.3, 0.4]).unwrap(),
            bernoulli_half(),
        ];
        let mut rng = stream_rng(20240, 0);
        for trial in 0..1000 {
            let d = &dists[trial % dists.len()];
            let len = 1 + rng.gen_range(0..12);
            let mut symbols = Vec::with_capacity(len);
            let mut state = rng.gen_range(0..6usize);
            for _ in 0..len {
                symbols.push(state);
                // Mostly admissible steps, occasionally arbitrary.
                state = if state > 0 && rng.gen::<f64>() < 0.8 {
                    state - 1
                } else {
                    rng.gen_range(0..6)
                };
            }
            let c = Cylinder::new(symbols).unwrap();
            let lhs = d.cylinder_prob_reversed(&c);
            let rhs = d.cylinder_prob_forward(&c.reversed());
            assert!(
                (lhs - rhs).abs() <= 1e-12,
                "reversal identity violated: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn forward_path_counts_down() {
        let d = ImpulseTimeDistribution::geometric(0.5).unwrap();
        let mut rng = stream_rng(7, 0);
        let path = d.sample_forward_path(&mut rng, 200);
        for w in path.windows(2) {
            if w[0] >= 1 {
                assert_eq!(w[1], w[0] - 1);
            }
        }
    }

    #[test]
    fn degenerate_reversed_path_is_zero() {
        let d = ImpulseTimeDistribution::finite(vec![1.0]).unwrap();
        let mut rng = stream_rng(7, 1);
        let path = d.sample_reversed_path(&mut rng, 50);
        assert!(path.iter().all(|s| *s == 0));
    }

    #[test]
    fn forward_path_frequencies_match_stationary() {
        let d = bernoulli_half();
        let mut rng = stream_rng(99, 0);
        let path = d.sample_forward_path(&mut rng, 1_000_000);
        let mut counts = [0usize; 2];
        for s in &path {
            counts[*s] += 1;
        }
        let tv = 0.5
            * ((counts[0] as f64 / path.len() as f64 - 2.0 / 3.0).abs()
                + (counts[1] as f64 / path.len() as f64 - 1.0 / 3.0).abs());
        assert!(tv < 0.01, "tv {tv}");
    }

    #[test]
    fn normalization_required() {
        assert!(ImpulseTimeDistribution::finite(vec![0.5, 0.4]).is_err());
        assert!(ImpulseTimeDistribution::finite(vec![0.0, 1.0]).is_err());
        assert!(ImpulseTimeDistribution::geometric(1.0).is_err());
    }
}
