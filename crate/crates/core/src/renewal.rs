//! Renewal process paths and the counting / overshoot queries on them.
//!
//! Counting uses the strict convention `N(t) = sup{n : tau_n < t}`. The
//! overshoot `gamma+(t)` is the distance from `t` to the first renewal point
//! strictly greater than `t`, so it stays positive when `t` is itself a
//! renewal epoch.

use thiserror::Error;

use crate::dist::{DistError, DistributionSpec};
use crate::rng::SimRng;

/// Expected-arrival cap for a single path.
pub const MAX_ARRIVALS: f64 = 1e8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PathError {
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("horizon must be positive and finite, got {0}")]
    BadHorizon(f64),
    #[error("about {expected:.3e} arrivals expected on the horizon, cap is {MAX_ARRIVALS:e}")]
    TooManyArrivals { expected: f64 },
    #[error("query time {t} lies beyond the path horizon {horizon}")]
    BeyondHorizon { t: f64, horizon: f64 },
    #[error("index {index} beyond the {len} realized renewal points")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("inter-arrival {0} is not positive")]
    NonPositiveInterArrival(f64),
    #[error("path ends at {last} before its horizon {horizon}")]
    ShortPath { last: f64, horizon: f64 },
    #[error("no renewal point beyond t = {0} has been realized")]
    Exhausted(f64),
}

/// One realization `tau_0 = 0 < tau_1 < ... < tau_I` with `tau_I >= horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct RenewalPath {
    interarrivals: Vec<f64>,
    partials: Vec<f64>,
    horizon: f64,
}

fn check_horizon(horizon: f64) -> Result<(), PathError> {
    if horizon.is_finite() && horizon > 0.0 {
        Ok(())
    } else {
        Err(PathError::BadHorizon(horizon))
    }
}

impl RenewalPath {
    /// Draws i.i.d. inter-arrivals from `spec` until the partial sum reaches `horizon`.
    pub fn sample(
        spec: &DistributionSpec,
        horizon: f64,
        rng: &mut SimRng,
    ) -> Result<Self, PathError> {
        spec.validate()?;
        check_horizon(horizon)?;
        let expected = horizon / spec.mean();
        if expected > MAX_ARRIVALS {
            return Err(PathError::TooManyArrivals { expected });
        }
        let mut path = Self {
            interarrivals: Vec::with_capacity(expected.ceil() as usize + 2),
            partials: vec![0.0],
            horizon,
        };
        while path.last() < horizon {
            path.push(spec.sample(rng));
            if path.interarrivals.len() as f64 > 2.0 * MAX_ARRIVALS {
                return Err(PathError::TooManyArrivals { expected });
            }
        }
        Ok(path)
    }

    /// Builds a path from explicit inter-arrivals; they must reach `horizon`.
    pub fn from_interarrivals(interarrivals: Vec<f64>, horizon: f64) -> Result<Self, PathError> {
        check_horizon(horizon)?;
        let mut path = Self {
            interarrivals: Vec::with_capacity(interarrivals.len()),
            partials: vec![0.0],
            horizon,
        };
        for eta in interarrivals {
            if !(eta.is_finite() && eta > 0.0) {
                return Err(PathError::NonPositiveInterArrival(eta));
            }
            path.push(eta);
        }
        if path.last() < horizon {
            return Err(PathError::ShortPath {
                last: path.last(),
                horizon,
            });
        }
        Ok(path)
    }

    fn push(&mut self, eta: f64) {
        self.interarrivals.push(eta);
        let next = self.last() + eta;
        self.partials.push(next);
    }

    /// Appends one fresh inter-arrival drawn from `spec`.
    pub fn extend_one(&mut self, spec: &DistributionSpec, rng: &mut SimRng) {
        self.push(spec.sample(rng));
    }

    fn last(&self) -> f64 {
        self.partials[self.partials.len() - 1]
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of realized renewal points `I`.
    pub fn len(&self) -> usize {
        self.interarrivals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interarrivals.is_empty()
    }

    pub fn interarrivals(&self) -> &[f64] {
        &self.interarrivals
    }

    /// `tau_0 .. tau_I`.
    pub fn partials(&self) -> &[f64] {
        &self.partials
    }

    /// Renewal points `tau_1 .. tau_I`.
    pub fn points(&self) -> &[f64] {
        &self.partials[1..]
    }

    /// `N(t) = sup{n : tau_n < t}`, with `N(0) = 0`.
    pub fn count_at(&self, t: f64) -> Result<usize, PathError> {
        if t > self.horizon {
            return Err(PathError::BeyondHorizon {
                t,
                horizon: self.horizon,
            });
        }
        if t <= 0.0 {
            return Ok(0);
        }
        Ok(self.partials.partition_point(|&tau| tau < t) - 1)
    }

    /// `gamma+(t)`: time from `t` to the first renewal point strictly after `t`.
    pub fn overshoot(&self, t: f64) -> Result<f64, PathError> {
        let idx = self.partials.partition_point(|&tau| tau <= t);
        match self.partials.get(idx) {
            Some(&tau) => Ok(tau - t),
            None => Err(PathError::Exhausted(t)),
        }
    }

    /// Like [`overshoot`](Self::overshoot) but extends the path with fresh
    /// draws from `spec` when the next point has not been realized yet.
    pub fn overshoot_extending(
        &mut self,
        spec: &DistributionSpec,
        t: f64,
        rng: &mut SimRng,
    ) -> Result<f64, PathError> {
        spec.validate()?;
        while self.last() <= t {
            self.extend_one(spec, rng);
        }
        self.overshoot(t)
    }

    /// `tau_i`.
    pub fn partial_sum(&self, i: usize) -> Result<f64, PathError> {
        self.partials
            .get(i)
            .copied()
            .ok_or(PathError::IndexOutOfRange {
                index: i,
                len: self.interarrivals.len(),
            })
    }

    /// CSV with columns `i,eta,tau`; row 0 is the origin.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,eta,tau\n0,,0\n");
        for (i, (eta, tau)) in self
            .interarrivals
            .iter()
            .zip(&self.partials[1..])
            .enumerate()
        {
            out.push_str(&format!("{},{},{}\n", i + 1, eta, tau));
        }
        out
    }
}
