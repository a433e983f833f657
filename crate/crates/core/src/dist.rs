//! Inter-arrival laws, grid CDFs and their convolution algebra.
//!
//! A [`StepCDF`] stores `F(j·h)` for `j = 0..=N` on a uniform grid. It is read
//! as the CDF of a lattice law whose atoms sit on grid points, so evaluation
//! between grid points takes the value at the grid point to the left. An atom
//! of the underlying law at `a` lands on the first grid point `>= a`.
//!
//! Convolution is the Stieltjes sum
//! `(a * b)(x_j) = sum_{i<=j} b(x_{j-i}) (a(x_i) - a(x_{i-1}))`,
//! evaluated directly in `O(nnz(da) * N)`. Mass that leaves `[0, N·h]` is
//! dropped and shows up as [`StepCDF::lost_mass`].

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::SimRng;

/// Relative slack used to snap values onto grid points.
const GRID_SNAP: f64 = 1e-9;
/// Rounding slack tolerated (and repaired) when building a `StepCDF`.
const CDF_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistError {
    #[error("invalid distribution parameter: {0}")]
    InvalidSpec(String),
    #[error("invalid grid: step {h}, horizon {horizon}")]
    InvalidGrid { h: f64, horizon: f64 },
    #[error("grid mismatch: ({h_a}, {n_a} points) vs ({h_b}, {n_b} points)")]
    GridMismatch {
        h_a: f64,
        n_a: usize,
        h_b: f64,
        n_b: usize,
    },
    #[error("value {value} at grid index {index} breaks CDF monotonicity or range")]
    NotACdf { index: usize, value: f64 },
    #[error("convolution power must be at least 1")]
    ZeroPower,
    #[error("empirical sample is empty")]
    EmptySample,
    #[error("sample value {0} is negative or not finite")]
    BadSample(f64),
}

/// Parametric description of a nonnegative law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionSpec {
    Exponential {
        rate: f64,
    },
    Deterministic {
        value: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// Number of Bernoulli(p) trials up to and including the first success.
    Geometric {
        p: f64,
    },
    /// Finite law given as `(value, probability)` pairs.
    Discrete {
        pairs: Vec<(f64, f64)>,
    },
    Erlang {
        shape: u32,
        rate: f64,
    },
}

fn positive(name: &str, v: f64) -> Result<(), DistError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(DistError::InvalidSpec(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

impl DistributionSpec {
    fn has_atoms(&self) -> bool {
        matches!(
            self,
            Self::Deterministic { .. } | Self::Geometric { .. } | Self::Discrete { .. }
        )
    }

    pub fn exponential(rate: f64) -> Self {
        Self::Exponential { rate }
    }

    pub fn deterministic(value: f64) -> Self {
        Self::Deterministic { value }
    }

    pub fn uniform(lo: f64, hi: f64) -> Self {
        Self::Uniform { lo, hi }
    }

    pub fn geometric(p: f64) -> Self {
        Self::Geometric { p }
    }

    pub fn validate(&self) -> Result<(), DistError> {
        match self {
            Self::Exponential { rate } => positive("rate", *rate),
            Self::Deterministic { value } => positive("value", *value),
            Self::Uniform { lo, hi } => {
                positive("lo", *lo)?;
                positive("hi", *hi)?;
                if lo < hi {
                    Ok(())
                } else {
                    Err(DistError::InvalidSpec(format!(
                        "uniform needs lo < hi, got [{lo}, {hi}]"
                    )))
                }
            }
            Self::Geometric { p } => {
                if p.is_finite() && *p > 0.0 && *p <= 1.0 {
                    Ok(())
                } else {
                    Err(DistError::InvalidSpec(format!(
                        "geometric p must lie in (0, 1], got {p}"
                    )))
                }
            }
            Self::Discrete { pairs } => {
                if pairs.is_empty() {
                    return Err(DistError::InvalidSpec("discrete law has no atoms".into()));
                }
                let mut total = 0.0;
                for &(v, p) in pairs {
                    positive("atom", v)?;
                    if !(0.0..=1.0).contains(&p) {
                        return Err(DistError::InvalidSpec(format!(
                            "atom probability {p} outside [0, 1]"
                        )));
                    }
                    total += p;
                }
                if (total - 1.0).abs() > 1e-12 {
                    return Err(DistError::InvalidSpec(format!(
                        "discrete probabilities sum to {total}"
                    )));
                }
                Ok(())
            }
            Self::Erlang { shape, rate } => {
                if *shape == 0 {
                    return Err(DistError::InvalidSpec("erlang shape must be >= 1".into()));
                }
                positive("rate", *rate)
            }
        }
    }

    /// `P(X <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x.is_nan() || x <= 0.0 {
            return 0.0;
        }
        match self {
            Self::Exponential { rate } => -(-rate * x).exp_m1(),
            Self::Deterministic { value } => {
                if x >= *value {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Self::Geometric { p } => {
                let k = x.floor();
                if *p >= 1.0 {
                    1.0
                } else {
                    -(k * (-p).ln_1p()).exp_m1()
                }
            }
            Self::Discrete { pairs } => pairs
                .iter()
                .filter(|(v, _)| *v <= x)
                .map(|(_, p)| p)
                .sum::<f64>()
                .min(1.0),
            Self::Erlang { shape, rate } => erlang_cdf(*shape, *rate, x),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::Exponential { rate } => 1.0 / rate,
            Self::Deterministic { value } => *value,
            Self::Uniform { lo, hi } => 0.5 * (lo + hi),
            Self::Geometric { p } => 1.0 / p,
            Self::Discrete { pairs } => pairs.iter().map(|(v, p)| v * p).sum(),
            Self::Erlang { shape, rate } => f64::from(*shape) / rate,
        }
    }

    /// One draw. Geometric draws use inversion, so a shared uniform stream
    /// couples draws across different `p`.
    pub fn sample(&self, rng: &mut SimRng) -> f64 {
        match self {
            Self::Exponential { rate } => {
                let e: f64 = Exp1.sample(rng);
                e / rate
            }
            Self::Deterministic { value } => *value,
            Self::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            Self::Geometric { p } => {
                if *p >= 1.0 {
                    return 1.0;
                }
                // u in (0, 1]
                let u = 1.0 - rng.random::<f64>();
                (u.ln() / (-p).ln_1p()).ceil().max(1.0)
            }
            Self::Discrete { pairs } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for &(v, p) in pairs {
                    acc += p;
                    if u < acc {
                        return v;
                    }
                }
                pairs.last().map(|&(v, _)| v).unwrap_or(0.0)
            }
            Self::Erlang { shape, rate } => {
                let total: f64 = (0..*shape).map(|_| -> f64 { Exp1.sample(rng) }).sum();
                total / rate
            }
        }
    }
}

/// `1 - e^{-mu x} sum_{j<k} (mu x)^j / j!`, the CDF of a sum of `k`
/// independent exponential(`mu`) variables.
pub fn erlang_cdf(k: u32, mu: f64, x: f64) -> f64 {
    if x <= 0.0 || k == 0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let z = mu * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 1..k {
        term *= z / f64::from(j);
        sum += term;
    }
    (1.0 - (-z).exp() * sum).clamp(0.0, 1.0)
}

/// A CDF tabulated on the grid `x_j = j·h`, `j = 0..=N`, `N = ceil(T/h)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepCDF {
    h: f64,
    horizon: f64,
    values: Vec<f64>,
}

/// Number of grid intervals covering `[0, horizon]`.
pub fn grid_len(h: f64, horizon: f64) -> Result<usize, DistError> {
    if !(h.is_finite() && h > 0.0 && horizon.is_finite() && horizon >= h * (1.0 - GRID_SNAP)) {
        return Err(DistError::InvalidGrid { h, horizon });
    }
    Ok((horizon / h - GRID_SNAP).ceil().max(1.0) as usize)
}

impl StepCDF {
    /// Checks the CDF invariants; sub-`1e-12` rounding defects are repaired.
    pub fn new(h: f64, horizon: f64, mut values: Vec<f64>) -> Result<Self, DistError> {
        let n = grid_len(h, horizon)?;
        if values.len() != n + 1 {
            return Err(DistError::InvalidGrid { h, horizon });
        }
        let mut prev = 0.0;
        for (index, v) in values.iter_mut().enumerate() {
            if !v.is_finite() || *v < -CDF_SLACK || *v > 1.0 + CDF_SLACK || *v < prev - CDF_SLACK {
                return Err(DistError::NotACdf { index, value: *v });
            }
            *v = v.clamp(prev, 1.0);
            prev = *v;
        }
        Ok(Self { h, horizon, values })
    }

    /// Point mass at zero: the identity of convolution.
    pub fn point_mass_at_zero(h: f64, horizon: f64) -> Result<Self, DistError> {
        let n = grid_len(h, horizon)?;
        Ok(Self {
            h,
            horizon,
            values: vec![1.0; n + 1],
        })
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Last grid point `N·h` (>= horizon).
    pub fn last_point(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.h
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Probability mass beyond the last grid point.
    pub fn lost_mass(&self) -> f64 {
        1.0 - self.values[self.values.len() - 1]
    }

    /// Grid index holding `x`, i.e. `floor(x/h)` with rounding slack, clamped to `N`.
    pub fn index_of(&self, x: f64) -> usize {
        if x <= 0.0 {
            return 0;
        }
        let j = (x / self.h + GRID_SNAP).floor();
        (j as usize).min(self.values.len() - 1)
    }

    /// Right-continuous step evaluation; `0` left of the origin, `F[N]` past the grid.
    pub fn eval(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else {
            self.values[self.index_of(x)]
        }
    }

    /// Increments `F[0], F[1]-F[0], ...` of the lattice law.
    pub fn increments(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.values
            .iter()
            .map(|&v| {
                let d = v - prev;
                prev = v;
                d
            })
            .collect()
    }

    /// Same law restricted to the grid prefix `[0, j_max·h]`.
    pub fn truncated(&self, j_max: usize) -> Self {
        let j = j_max.min(self.values.len() - 1).max(1);
        Self {
            h: self.h,
            horizon: j as f64 * self.h,
            values: self.values[..=j].to_vec(),
        }
    }

    pub fn same_grid(&self, other: &StepCDF) -> bool {
        self.values.len() == other.values.len()
            && (self.h - other.h).abs() <= 1e-12 * self.h.max(other.h)
    }

    pub(crate) fn check_grid(&self, other: &StepCDF) -> Result<(), DistError> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(DistError::GridMismatch {
                h_a: self.h,
                n_a: self.values.len(),
                h_b: other.h,
                n_b: other.values.len(),
            })
        }
    }

    /// CSV with header `x,F`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,F\n");
        for (j, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{},{}\n", j as f64 * self.h, v));
        }
        out
    }
}

/// `result[j] = sum_{i<=j} f[j-i] * dF[i]`: Stieltjes integration of `f`
/// against the increments of a CDF on a shared grid.
pub(crate) fn stieltjes(increments: &[f64], f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    for (i, &d) in increments.iter().enumerate().take(n) {
        if d == 0.0 {
            continue;
        }
        for (r, &fv) in out[i..].iter_mut().zip(&f[..n - i]) {
            *r += d * fv;
        }
    }
    out
}

/// Tabulates `spec` on the grid `(h, horizon)`.
pub fn discretize(spec: &DistributionSpec, h: f64, horizon: f64) -> Result<StepCDF, DistError> {
    spec.validate()?;
    let n = grid_len(h, horizon)?;
    // atoms sitting on a grid point up to rounding are moved onto it
    let slack = if spec.has_atoms() { GRID_SNAP } else { 0.0 };
    let values = (0..=n).map(|j| spec.cdf((j as f64 + slack) * h)).collect();
    StepCDF::new(h, horizon, values)
}

/// Law of the sum of independent draws from `a` and `b`.
pub fn convolve(a: &StepCDF, b: &StepCDF) -> Result<StepCDF, DistError> {
    a.check_grid(b)?;
    let values = stieltjes(&a.increments(), &b.values);
    StepCDF::new(a.h, a.horizon, values)
}

/// `k`-fold self-convolution by left-to-right iteration:
/// `a^{*(k+1)} = convolve(a^{*k}, a)`.
pub fn convolve_power(a: &StepCDF, k: u32) -> Result<StepCDF, DistError> {
    if k == 0 {
        return Err(DistError::ZeroPower);
    }
    let mut acc = a.clone();
    for _ in 1..k {
        acc = convolve(&acc, a)?;
    }
    Ok(acc)
}

/// Empirical CDF of a nonnegative sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCDF {
    sorted: Vec<f64>,
}

impl EmpiricalCDF {
    pub fn new(mut sample: Vec<f64>) -> Result<Self, DistError> {
        if sample.is_empty() {
            return Err(DistError::EmptySample);
        }
        if let Some(&bad) = sample.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(DistError::BadSample(bad));
        }
        sample.sort_by(f64::total_cmp);
        Ok(Self { sorted: sample })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn max(&self) -> f64 {
        self.sorted[self.sorted.len() - 1]
    }

    /// `#{values <= x} / n`.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    /// Sample quantiles at the given levels (nearest-rank).
    pub fn quantiles(&self, levels: &[f64]) -> Vec<f64> {
        let n = self.sorted.len();
        levels
            .iter()
            .map(|&q| {
                let rank = ((q * n as f64).ceil() as usize).clamp(1, n);
                self.sorted[rank - 1]
            })
            .collect()
    }
}

/// Kolmogorov–Smirnov distance together with how many sample points fell
/// beyond the reference grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsDistance {
    pub distance: f64,
    pub beyond_horizon: usize,
}

impl KsDistance {
    pub fn truncated(&self) -> bool {
        self.beyond_horizon > 0
    }
}

/// `sup_x |emp(x) - ref(x)|`, taken over every sample point and grid point.
///
/// Both functions are right-continuous steps that only jump at those points,
/// so the supremum over the union of breakpoints is exact.
pub fn ks_distance(emp: &EmpiricalCDF, reference: &StepCDF) -> KsDistance {
    let n = emp.len() as f64;
    let sorted = emp.sorted();
    let mut sup: f64 = 0.0;
    // sample breakpoints
    let mut i = 0;
    while i < sorted.len() {
        let x = sorted[i];
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == x {
            j += 1;
        }
        sup = sup.max((j as f64 / n - reference.eval(x)).abs());
        i = j;
    }
    // grid breakpoints
    let mut below = 0;
    for (j, &f) in reference.values.iter().enumerate() {
        let x = j as f64 * reference.h;
        while below < sorted.len() && sorted[below] <= x {
            below += 1;
        }
        sup = sup.max((below as f64 / n - f).abs());
    }
    let beyond = sorted.len() - sorted.partition_point(|&v| v <= reference.last_point());
    KsDistance {
        distance: sup.clamp(0.0, 1.0),
        beyond_horizon: beyond,
    }
}

/// Total-variation distance `1/2 sum |p_k - q_k|`, padding the shorter pmf with zeros.
pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len().max(q.len());
    let get = |v: &[f64], k: usize| v.get(k).copied().unwrap_or(0.0);
    (0.5 * (0..n).map(|k| (get(p, k) - get(q, k)).abs()).sum::<f64>()).clamp(0.0, 1.0)
}

/// Poisson(`mean`) pmf on `0..=k_max`.
pub fn poisson_pmf(mean: f64, k_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(k_max + 1);
    let mut p = (-mean).exp();
    for k in 0..=k_max {
        out.push(p);
        p *= mean / (k + 1) as f64;
    }
    out
}

/// Normalized histogram of nonnegative integer counts.
pub fn empirical_pmf(counts: &[usize]) -> Vec<f64> {
    let k_max = counts.iter().copied().max().unwrap_or(0);
    let mut pmf = vec![0.0; k_max + 1];
    for &c in counts {
        pmf[c] += 1.0;
    }
    let n = counts.len().max(1) as f64;
    pmf.iter_mut().for_each(|p| *p /= n);
    pmf
}
