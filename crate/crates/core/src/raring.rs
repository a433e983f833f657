//! Rarefied index sequences.
//!
//! A [`XiSource`] emits the integer gaps `xi(t) >= 1` at sites `t = 0, 1, ...`;
//! the kept indices follow `beta(1) = xi(0)`, `beta(m+1) = beta(m) + xi(beta(m))`
//! and the rarefied counting function is `v(t) = max{m : beta(m) <= t}`
//! (taken as `0` when `beta(1) > t`).
//!
//! The module also carries the union bound
//! `P(beta(m) < x) <= max_{t<=x} P(xi(t) < x/m) * (floor(x) + 1)`,
//! the capped source `min(xi, c - r)`, and a Monte Carlo estimator of the
//! mixing coefficient restricted to a finite family of threshold events.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{DistError, DistributionSpec};
use crate::interaction::MarkingSource;
use crate::rng::SimRng;

/// Hard cap on realized sequence length.
pub const MAX_BETA_LEN: usize = 50_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RaringError {
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("source emitted xi({site}) = {value}; values must be >= 1")]
    InvalidXi { site: u64, value: u64 },
    #[error("realization ends at beta = {last}, which does not exceed t = {t}")]
    InsufficientLength { t: f64, last: u64 },
    #[error("sequence length cap {0} reached")]
    LengthCap(usize),
    #[error("m_max must be at least 1")]
    EmptyRequest,
    #[error("truncation needs r < c, got c = {c}, r = {r}")]
    BadTruncation { c: u64, r: u64 },
    #[error("probability {0} outside (0, 1]")]
    BadProbability(f64),
    #[error("at least {min} samples required, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("event family is empty")]
    EmptyFamily,
    #[error(
        "event pair {index}: future site {future} is closer than lag {lag} to past site {past}"
    )]
    PairTooClose {
        index: usize,
        past: u64,
        future: u64,
        lag: u64,
    },
    #[error("source {0} has no closed-form law for the bound")]
    NoClosedForm(String),
    #[error("realization holds no marked point after site {0}")]
    NoMarkBeyond(u64),
    #[error("source realization exceeded {0} renewal points")]
    SourceCap(usize),
}

/// A generator of `xi(t)`, one realization at a time.
///
/// Within a realization repeated queries of the same site must agree;
/// [`reset`](XiSource::reset) starts a fresh realization.
pub trait XiSource: Send {
    fn xi(&mut self, site: u64, rng: &mut SimRng) -> Result<u64, RaringError>;

    fn reset(&mut self) {}

    /// `P(xi(site) < y)` when it is known in closed form.
    fn lt_prob(&self, _site: u64, _y: f64) -> Option<f64> {
        None
    }

    /// `max_{t <= max_site} P(xi(t) < y)`.
    fn max_lt_prob(&self, max_site: u64, y: f64) -> Option<f64> {
        let mut best: f64 = 0.0;
        for site in 0..=max_site {
            best = best.max(self.lt_prob(site, y)?);
        }
        Some(best)
    }

    fn describe(&self) -> String;
}

fn to_gap(x: f64) -> u64 {
    x.ceil().max(1.0) as u64
}

/// `P(ceil(X) < y)` for a positive law.
fn ceil_lt_prob(law: &DistributionSpec, y: f64) -> f64 {
    let k = y.ceil() - 1.0;
    if k < 1.0 {
        0.0
    } else {
        law.cdf(k)
    }
}

/// `xi` identically equal to a constant.
#[derive(Debug, Clone)]
pub struct ConstantSource {
    value: u64,
}

impl ConstantSource {
    pub fn new(value: u64) -> Result<Self, RaringError> {
        if value == 0 {
            return Err(RaringError::InvalidXi { site: 0, value });
        }
        Ok(Self { value })
    }
}

impl XiSource for ConstantSource {
    fn xi(&mut self, _site: u64, _rng: &mut SimRng) -> Result<u64, RaringError> {
        Ok(self.value)
    }

    fn lt_prob(&self, _site: u64, y: f64) -> Option<f64> {
        Some(if (self.value as f64) < y { 1.0 } else { 0.0 })
    }

    fn max_lt_prob(&self, _max_site: u64, y: f64) -> Option<f64> {
        self.lt_prob(0, y)
    }

    fn describe(&self) -> String {
        format!("constant({})", self.value)
    }
}

/// Independent sites; site 0 follows `first`, every later site follows `rest`.
/// Real-valued draws are rounded up to the next integer (and at least 1).
#[derive(Debug, Clone)]
pub struct ParametricSource {
    first: DistributionSpec,
    rest: DistributionSpec,
}

impl ParametricSource {
    pub fn new(first: DistributionSpec, rest: DistributionSpec) -> Result<Self, RaringError> {
        first.validate()?;
        rest.validate()?;
        Ok(Self { first, rest })
    }

    pub fn iid(law: DistributionSpec) -> Result<Self, RaringError> {
        Self::new(law.clone(), law)
    }

    fn law(&self, site: u64) -> &DistributionSpec {
        if site == 0 {
            &self.first
        } else {
            &self.rest
        }
    }
}

impl XiSource for ParametricSource {
    fn xi(&mut self, site: u64, rng: &mut SimRng) -> Result<u64, RaringError> {
        Ok(to_gap(self.law(site).sample(rng)))
    }

    fn lt_prob(&self, site: u64, y: f64) -> Option<f64> {
        Some(ceil_lt_prob(self.law(site), y))
    }

    fn max_lt_prob(&self, max_site: u64, y: f64) -> Option<f64> {
        let first = ceil_lt_prob(&self.first, y);
        Some(if max_site == 0 {
            first
        } else {
            first.max(ceil_lt_prob(&self.rest, y))
        })
    }

    fn describe(&self) -> String {
        if self.first == self.rest {
            format!(
                "iid({})",
                serde_json::to_string(&self.first).unwrap_or_default()
            )
        } else {
            format!(
                "parametric(first={}, rest={})",
                serde_json::to_string(&self.first).unwrap_or_default(),
                serde_json::to_string(&self.rest).unwrap_or_default()
            )
        }
    }
}

/// I.i.d. geometric(`p`) gaps on `{1, 2, ...}`.
pub fn geometric_source(p: f64) -> Result<ParametricSource, RaringError> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(RaringError::BadProbability(p));
    }
    ParametricSource::iid(DistributionSpec::geometric(p))
}

/// Fully dependent source: `xi(t) = xi(0)` for every site.
#[derive(Debug, Clone)]
pub struct CoupledSource {
    law: DistributionSpec,
    current: Option<u64>,
}

impl CoupledSource {
    pub fn new(law: DistributionSpec) -> Result<Self, RaringError> {
        law.validate()?;
        Ok(Self { law, current: None })
    }
}

impl XiSource for CoupledSource {
    fn xi(&mut self, _site: u64, rng: &mut SimRng) -> Result<u64, RaringError> {
        let law = &self.law;
        Ok(*self.current.get_or_insert_with(|| to_gap(law.sample(rng))))
    }

    fn reset(&mut self) {
        self.current = None;
    }

    fn lt_prob(&self, _site: u64, y: f64) -> Option<f64> {
        Some(ceil_lt_prob(&self.law, y))
    }

    fn max_lt_prob(&self, _max_site: u64, y: f64) -> Option<f64> {
        self.lt_prob(0, y)
    }

    fn describe(&self) -> String {
        format!(
            "coupled({})",
            serde_json::to_string(&self.law).unwrap_or_default()
        )
    }
}

/// `min(xi(t), c - r)` over a wrapped source.
pub struct TruncatedSource {
    inner: Box<dyn XiSource>,
    cap: u64,
}

impl TruncatedSource {
    pub fn cap(&self) -> u64 {
        self.cap
    }
}

/// Wraps `source` so it never emits more than `c - r`.
pub fn truncate_source(
    source: Box<dyn XiSource>,
    c: u64,
    r: u64,
) -> Result<TruncatedSource, RaringError> {
    if r >= c {
        return Err(RaringError::BadTruncation { c, r });
    }
    Ok(TruncatedSource {
        inner: source,
        cap: c - r,
    })
}

impl XiSource for TruncatedSource {
    fn xi(&mut self, site: u64, rng: &mut SimRng) -> Result<u64, RaringError> {
        Ok(self.inner.xi(site, rng)?.min(self.cap))
    }

    fn reset(&mut self) {
        self.inner.reset();
    }

    fn lt_prob(&self, site: u64, y: f64) -> Option<f64> {
        if y > self.cap as f64 {
            Some(1.0)
        } else {
            self.inner.lt_prob(site, y)
        }
    }

    fn max_lt_prob(&self, max_site: u64, y: f64) -> Option<f64> {
        if y > self.cap as f64 {
            Some(1.0)
        } else {
            self.inner.max_lt_prob(max_site, y)
        }
    }

    fn describe(&self) -> String {
        format!("truncated({}, cap={})", self.inner.describe(), self.cap)
    }
}

/// Configuration form of a source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum XiSourceSpec {
    Constant {
        value: u64,
    },
    Geometric {
        p: f64,
    },
    Parametric {
        first: DistributionSpec,
        rest: DistributionSpec,
    },
    Coupled {
        law: DistributionSpec,
    },
    Truncated {
        inner: Box<XiSourceSpec>,
        c: u64,
        r: u64,
    },
    /// Gaps between `H`-renewal points marked by `Z`.
    Marking {
        h: DistributionSpec,
        z: DistributionSpec,
    },
}

impl XiSourceSpec {
    pub fn build(&self) -> Result<Box<dyn XiSource>, RaringError> {
        Ok(match self {
            Self::Constant { value } => Box::new(ConstantSource::new(*value)?),
            Self::Geometric { p } => Box::new(geometric_source(*p)?),
            Self::Parametric { first, rest } => {
                Box::new(ParametricSource::new(first.clone(), rest.clone())?)
            }
            Self::Coupled { law } => Box::new(CoupledSource::new(law.clone())?),
            Self::Truncated { inner, c, r } => Box::new(truncate_source(inner.build()?, *c, *r)?),
            Self::Marking { h, z } => Box::new(MarkingSource::new(h.clone(), z.clone())?),
        })
    }
}

/// Realized kept indices `beta(1..=M)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaSequence {
    beta: Vec<u64>,
    source: String,
}

impl BetaSequence {
    pub fn as_slice(&self) -> &[u64] {
        &self.beta
    }

    pub fn len(&self) -> usize {
        self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.is_empty()
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// `beta(m)`, 1-based.
    pub fn get(&self, m: usize) -> Option<u64> {
        m.checked_sub(1).and_then(|i| self.beta.get(i).copied())
    }

    /// Gaps `beta(1), beta(2) - beta(1), ...`; equal to the `xi` values read by the recursion.
    pub fn gaps(&self) -> Vec<u64> {
        let mut prev = 0;
        self.beta
            .iter()
            .map(|&b| {
                let g = b - prev;
                prev = b;
                g
            })
            .collect()
    }

    /// Strictly increasing with `beta(m) >= m`.
    pub fn is_well_formed(&self) -> bool {
        self.beta.windows(2).all(|w| w[0] < w[1])
            && self.beta.iter().enumerate().all(|(i, &b)| b > i as u64)
    }

    /// `v(t) = max{m : beta(m) <= t}`, `0` when `beta(1) > t`.
    pub fn rare_count(&self, t: f64) -> Result<usize, RaringError> {
        match self.beta.last() {
            Some(&last) if (last as f64) > t => Ok(self.beta.partition_point(|&b| b as f64 <= t)),
            last => Err(RaringError::InsufficientLength {
                t,
                last: last.copied().unwrap_or(0),
            }),
        }
    }
}

fn next_gap(source: &mut dyn XiSource, site: u64, rng: &mut SimRng) -> Result<u64, RaringError> {
    let value = source.xi(site, rng)?;
    if value == 0 {
        return Err(RaringError::InvalidXi { site, value });
    }
    Ok(value)
}

/// Runs the recursion for `m_max` steps, querying sites `0, beta(1), ..., beta(m_max - 1)`.
pub fn beta_sequence(
    source: &mut dyn XiSource,
    m_max: usize,
    rng: &mut SimRng,
) -> Result<BetaSequence, RaringError> {
    if m_max == 0 {
        return Err(RaringError::EmptyRequest);
    }
    if m_max > MAX_BETA_LEN {
        return Err(RaringError::LengthCap(MAX_BETA_LEN));
    }
    let mut beta = Vec::with_capacity(m_max);
    let mut current = 0u64;
    for _ in 0..m_max {
        current += next_gap(source, current, rng)?;
        beta.push(current);
    }
    let seq = BetaSequence {
        beta,
        source: source.describe(),
    };
    debug_assert!(seq.is_well_formed());
    Ok(seq)
}

/// Runs the recursion until `beta(M) > t`, so that `v(t)` is determined.
pub fn beta_covering(
    source: &mut dyn XiSource,
    t: f64,
    rng: &mut SimRng,
) -> Result<BetaSequence, RaringError> {
    let mut beta = Vec::new();
    let mut current = 0u64;
    while (current as f64) <= t {
        if beta.len() >= MAX_BETA_LEN {
            return Err(RaringError::LengthCap(MAX_BETA_LEN));
        }
        current += next_gap(source, current, rng)?;
        beta.push(current);
    }
    Ok(BetaSequence {
        beta,
        source: source.describe(),
    })
}

/// `max_{t<=x} P(xi(t) < x/m) * (floor(x) + 1)`. This is a bound and may exceed 1.
///
/// `xi_lt_sup(max_site, y)` must return `max_{t <= max_site} P(xi(t) < y)`.
pub fn statement_bound_rhs(xi_lt_sup: impl Fn(u64, f64) -> f64, m: u64, x: f64) -> f64 {
    let sup = xi_lt_sup(x.max(0.0).floor() as u64, x / m as f64);
    (sup * (x.floor() + 1.0)).max(0.0)
}

/// Monte Carlo check of the union bound on `P(beta(m) < x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub source: String,
    pub m: u64,
    pub x: f64,
    pub n_samples: usize,
    pub empirical: f64,
    pub stderr: f64,
    pub bound: f64,
    /// `empirical <= bound + 3 * stderr`.
    pub pass: bool,
}

pub fn check_statement_bound(
    source: &mut dyn XiSource,
    m: u64,
    x: f64,
    n_samples: usize,
    rng: &mut SimRng,
) -> Result<BoundCheck, RaringError> {
    if n_samples < 1000 {
        return Err(RaringError::TooFewSamples {
            min: 1000,
            got: n_samples,
        });
    }
    if m == 0 {
        return Err(RaringError::EmptyRequest);
    }
    let max_site = x.max(0.0).floor() as u64;
    let lt = source
        .max_lt_prob(max_site, x / m as f64)
        .ok_or_else(|| RaringError::NoClosedForm(source.describe()))?;
    let bound = statement_bound_rhs(|_, _| lt, m, x);
    let mut hits = 0usize;
    for _ in 0..n_samples {
        source.reset();
        let mut current = 0u64;
        let mut reached = 0;
        while reached < m && (current as f64) < x {
            current += next_gap(source, current, rng)?;
            reached += 1;
        }
        // beta(m) >= beta(reached) >= x whenever the loop stopped early
        if reached == m && (current as f64) < x {
            hits += 1;
        }
    }
    let p = hits as f64 / n_samples as f64;
    let stderr = (p * (1.0 - p) / n_samples as f64).sqrt();
    Ok(BoundCheck {
        source: source.describe(),
        m,
        x,
        n_samples,
        empirical: p,
        stderr,
        bound,
        pass: p <= bound + 3.0 * stderr,
    })
}

/// Comparison used by a threshold event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventOp {
    Le,
    Eq,
}

/// The event `{xi(site) <= level}` or `{xi(site) = level}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdEvent {
    pub site: u64,
    pub op: EventOp,
    pub level: u64,
}

impl ThresholdEvent {
    pub fn le(site: u64, level: u64) -> Self {
        Self {
            site,
            op: EventOp::Le,
            level,
        }
    }

    pub fn eq(site: u64, level: u64) -> Self {
        Self {
            site,
            op: EventOp::Eq,
            level,
        }
    }

    fn holds(&self, value: u64) -> bool {
        match self.op {
            EventOp::Le => value <= self.level,
            EventOp::Eq => value == self.level,
        }
    }
}

/// A past event `A` and a future event `B` at least `lag` sites later.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventPair {
    pub past: ThresholdEvent,
    pub future: ThresholdEvent,
}

/// Estimate of `max |P(AB) - P(A)P(B)|` over a finite family. Because the
/// true coefficient takes a supremum over whole sigma-algebras, this is a
/// lower-bound estimate of `alpha(lag)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingEstimate {
    pub lag: u64,
    pub family_size: usize,
    pub estimate: f64,
    pub stderr: f64,
    pub n_samples: usize,
    /// Index of the pair attaining the maximum.
    pub argmax: usize,
    /// Always `"lower_bound"`.
    pub kind: String,
}

impl MixingEstimate {
    pub fn within(&self, sigmas: f64) -> bool {
        self.estimate <= sigmas * self.stderr
    }
}

pub fn estimate_mixing(
    source: &mut dyn XiSource,
    lag: u64,
    family: &[EventPair],
    n_samples: usize,
    rng: &mut SimRng,
) -> Result<MixingEstimate, RaringError> {
    if family.is_empty() {
        return Err(RaringError::EmptyFamily);
    }
    if n_samples < 2 {
        return Err(RaringError::TooFewSamples {
            min: 2,
            got: n_samples,
        });
    }
    for (index, pair) in family.iter().enumerate() {
        if pair.future.site < pair.past.site + lag {
            return Err(RaringError::PairTooClose {
                index,
                past: pair.past.site,
                future: pair.future.site,
                lag,
            });
        }
    }
    let sites: Vec<u64> = family
        .iter()
        .flat_map(|p| [p.past.site, p.future.site])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let slot = |site: u64| sites.binary_search(&site).expect("site collected above");

    // per pair: (#A, #B, #AB) and indicator vectors for the influence-function variance
    let mut a_hits = vec![vec![false; n_samples]; family.len()];
    let mut b_hits = vec![vec![false; n_samples]; family.len()];
    let mut values = vec![0u64; sites.len()];
    for s in 0..n_samples {
        source.reset();
        for (v, &site) in values.iter_mut().zip(&sites) {
            *v = source.xi(site, rng)?;
        }
        for (k, pair) in family.iter().enumerate() {
            a_hits[k][s] = pair.past.holds(values[slot(pair.past.site)]);
            b_hits[k][s] = pair.future.holds(values[slot(pair.future.site)]);
        }
    }

    let n = n_samples as f64;
    let mut best = (0usize, -1.0f64, 0.0f64);
    for k in 0..family.len() {
        let pa = a_hits[k].iter().filter(|&&x| x).count() as f64 / n;
        let pb = b_hits[k].iter().filter(|&&x| x).count() as f64 / n;
        let pab = a_hits[k]
            .iter()
            .zip(&b_hits[k])
            .filter(|(a, b)| **a && **b)
            .count() as f64
            / n;
        let d = pab - pa * pb;
        // influence function of pab - pa*pb
        let psi = |a: bool, b: bool| {
            f64::from(u8::from(a && b)) - pb * f64::from(u8::from(a)) - pa * f64::from(u8::from(b))
        };
        let mean_psi = pab - 2.0 * pa * pb;
        let var = a_hits[k]
            .iter()
            .zip(&b_hits[k])
            .map(|(&a, &b)| (psi(a, b) - mean_psi).powi(2))
            .sum::<f64>()
            / (n - 1.0);
        let se = (var / n).sqrt();
        if d.abs() > best.1 {
            best = (k, d.abs(), se);
        }
    }
    Ok(MixingEstimate {
        lag,
        family_size: family.len(),
        estimate: best.1.clamp(0.0, 1.0),
        stderr: best.2,
        n_samples,
        argmax: best.0,
        kind: "lower_bound".to_string(),
    })
}
