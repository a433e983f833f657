//! Limit laws of the rarefied counting process.
//!
//! For a delayed renewal process (first interval `R1`, later intervals `R2`)
//! the generating-function slice `F(t, s) = E[s^{N(t)}]` of the undelayed
//! process solves `F = 1 - R2 + s (R2 * F)`, and the delayed slice is
//! `g = 1 - R1 + s (R1 * F)`. Here `*` integrates a function against the
//! increments of a grid CDF, the same Stieltjes sum used by
//! [`convolve`](crate::dist::convolve), so every route below is exact on the
//! grid up to truncation and rounding.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{convolve, stieltjes, DistError, StepCDF};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("s must lie in (0, 1], got {0}")]
    BadS(f64),
    #[error("no convergence after {iterations} iterations, residual {residual:e}")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("argument {x} lies beyond the grid end {end}")]
    BeyondHorizon { x: f64, end: f64 },
    #[error("{0} must be at least 1")]
    ZeroIndex(&'static str),
}

/// How [`solve_f`] evaluates the fixed point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMode {
    /// `F^0 = 1 - R2`, `F^{j+1} = 1 - R2 + s R2 * F^j`.
    Iteration,
    /// `sum_d s^d (R2^{*d} - R2^{*(d+1)})`.
    Series,
}

/// Which law enters the convolution of the delayed equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayedForm {
    /// `g = 1 - R1 + s (R1 * F)`: the delayed-renewal equation.
    FirstInterval,
    /// `g = 1 - R1 + s (R2 * F)`, kept for comparison.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub max_terms: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 100_000,
            max_terms: 100_000,
        }
    }
}

/// `t -> E[s^{N(t)}]` on a grid, for one fixed `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GFSlice {
    pub s: f64,
    pub h: f64,
    pub horizon: f64,
    pub values: Vec<f64>,
}

impl GFSlice {
    fn new(s: f64, grid: &StepCDF, mut values: Vec<f64>) -> Self {
        values.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
        Self {
            s,
            h: grid.step(),
            horizon: grid.horizon(),
            values,
        }
    }

    /// Value at the grid point holding `t`.
    pub fn value_at(&self, t: f64) -> f64 {
        let j = if t <= 0.0 {
            0
        } else {
            ((t / self.h + 1e-9).floor() as usize).min(self.values.len() - 1)
        };
        self.values[j]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,value\n");
        for (j, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{},{}\n", j as f64 * self.h, v));
        }
        out
    }
}

fn check_s(s: f64) -> Result<(), SolverError> {
    if s > 0.0 && s <= 1.0 {
        Ok(())
    } else {
        Err(SolverError::BadS(s))
    }
}

pub fn solve_f(r2: &StepCDF, s: f64, mode: SolveMode) -> Result<GFSlice, SolverError> {
    solve_f_with(r2, s, mode, &SolverOptions::default())
}

/// Solves `F = 1 - R2 + s (R2 * F)` on the grid of `r2`.
pub fn solve_f_with(
    r2: &StepCDF,
    s: f64,
    mode: SolveMode,
    opts: &SolverOptions,
) -> Result<GFSlice, SolverError> {
    check_s(s)?;
    let survival: Vec<f64> = r2.values().iter().map(|v| 1.0 - v).collect();
    let values = match mode {
        SolveMode::Iteration => {
            let dr = r2.increments();
            let mut f = survival.clone();
            let mut residual = f64::INFINITY;
            let mut converged = false;
            for _ in 0..opts.max_iterations {
                let conv = stieltjes(&dr, &f);
                let next: Vec<f64> = survival.iter().zip(&conv).map(|(a, c)| a + s * c).collect();
                residual = next
                    .iter()
                    .zip(&f)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                f = next;
                if residual < opts.tolerance {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(SolverError::NoConvergence {
                    iterations: opts.max_iterations,
                    residual,
                });
            }
            f
        }
        SolveMode::Series => {
            let n = r2.len();
            let mut acc = vec![0.0; n];
            let mut power = StepCDF::point_mass_at_zero(r2.step(), r2.horizon())?;
            let mut weight = 1.0;
            let mut converged = false;
            for _ in 0..opts.max_terms {
                let next = convolve(&power, r2)?;
                for ((a, p), q) in acc.iter_mut().zip(power.values()).zip(next.values()) {
                    *a += weight * (p - q);
                }
                weight *= s;
                let tail = weight * next.values()[n - 1];
                power = next;
                if tail < opts.tolerance {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(SolverError::NoConvergence {
                    iterations: opts.max_terms,
                    residual: weight * power.values()[n - 1],
                });
            }
            acc
        }
    };
    Ok(GFSlice::new(s, r2, values))
}

pub fn solve_g(
    r1: &StepCDF,
    r2: &StepCDF,
    s: f64,
    mode: SolveMode,
) -> Result<GFSlice, SolverError> {
    solve_g_with(
        r1,
        r2,
        s,
        mode,
        DelayedForm::FirstInterval,
        &SolverOptions::default(),
    )
}

/// `g = 1 - R1 + s (K * F)` with `K = R1` or, for [`DelayedForm::Literal`], `K = R2`.
pub fn solve_g_with(
    r1: &StepCDF,
    r2: &StepCDF,
    s: f64,
    mode: SolveMode,
    form: DelayedForm,
    opts: &SolverOptions,
) -> Result<GFSlice, SolverError> {
    r1.check_grid(r2)?;
    let f = solve_f_with(r2, s, mode, opts)?;
    let kernel = match form {
        DelayedForm::FirstInterval => r1,
        DelayedForm::Literal => r2,
    };
    let conv = stieltjes(&kernel.increments(), &f.values);
    let values = r1
        .values()
        .iter()
        .zip(&conv)
        .map(|(a, c)| 1.0 - a + s * c)
        .collect();
    Ok(GFSlice::new(s, r1, values))
}

/// Law of `N(t)` on `0..=k_max`, plus the mass not covered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountPmf {
    pub t: f64,
    pub probs: Vec<f64>,
    pub tail_mass: f64,
}

/// Tail mass above which a truncated pmf is flagged.
pub const TAIL_FLAG: f64 = 0.01;

impl CountPmf {
    pub fn flagged(&self) -> bool {
        self.tail_mass > TAIL_FLAG
    }
}

fn grid_index(cdf: &StepCDF, x: f64) -> Result<usize, SolverError> {
    let end = cdf.last_point();
    if x > end * (1.0 + 1e-12) {
        return Err(SolverError::BeyondHorizon { x, end });
    }
    Ok(cdf.index_of(x))
}

/// `P(N(t) = 0) = 1 - R1(t)`,
/// `P(N(t) = k) = (R1 * R2^{*(k-1)})(t) - (R1 * R2^{*k})(t)`.
pub fn limit_count_pmf(
    r1: &StepCDF,
    r2: &StepCDF,
    t: f64,
    k_max: usize,
) -> Result<CountPmf, SolverError> {
    r1.check_grid(r2)?;
    if k_max == 0 {
        return Err(SolverError::ZeroIndex("k_max"));
    }
    let j = grid_index(r1, t)?;
    // everything below only needs the grid prefix [0, t]
    let (a, b) = (r1.truncated(j), r2.truncated(j));
    let mut probs = Vec::with_capacity(k_max + 1);
    let mut cdf_k = a.values()[j]; // (R1 * R2^{*(k-1)})(t) for k = 1
    probs.push(1.0 - cdf_k);
    let mut current = a;
    for _ in 1..=k_max {
        if cdf_k == 0.0 {
            probs.push(0.0);
            continue;
        }
        current = convolve(&current, &b)?;
        let next = current.values()[j];
        probs.push((cdf_k - next).max(0.0));
        cdf_k = next;
    }
    Ok(CountPmf {
        t,
        probs,
        tail_mass: cdf_k.max(0.0),
    })
}

/// `R1 * R2^{*(k-1)}` on the whole grid: the limit law of the `k`-th kept event.
pub fn kth_event_limit_law(r1: &StepCDF, r2: &StepCDF, k: u32) -> Result<StepCDF, SolverError> {
    r1.check_grid(r2)?;
    if k == 0 {
        return Err(SolverError::ZeroIndex("k"));
    }
    let mut current = r1.clone();
    for _ in 1..k {
        current = convolve(&current, r2)?;
    }
    Ok(current)
}

/// `(R1 * R2^{*(k-1)})(x * mu)`.
pub fn kth_event_limit_cdf(
    r1: &StepCDF,
    r2: &StepCDF,
    k: u32,
    mu: f64,
    x: f64,
) -> Result<f64, SolverError> {
    r1.check_grid(r2)?;
    if k == 0 {
        return Err(SolverError::ZeroIndex("k"));
    }
    let arg = x * mu;
    let j = grid_index(r1, arg)?;
    let law = kth_event_limit_law(&r1.truncated(j), &r2.truncated(j), k)?;
    Ok(law.values()[j])
}

/// `sum_k pmf[k] s^k` with an error bar equal to the uncovered tail mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PgfValue {
    pub value: f64,
    pub error_bar: f64,
}

pub fn pgf_from_pmf(pmf: &CountPmf, s: f64) -> PgfValue {
    let mut power = 1.0;
    let mut value = 0.0;
    for p in &pmf.probs {
        value += p * power;
        power *= s;
    }
    PgfValue {
        value,
        error_bar: pmf.tail_mass,
    }
}
