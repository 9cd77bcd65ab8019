//! Evaluation of entangled chains and their multi-Cesàro means.

mod chain;
mod dp;
mod enumerate;
mod schedule;
mod sum;

pub use chain::{ChainConfig, ChainSpec, ExponentPoly};
pub use enumerate::brute_force_average;
pub use schedule::{run_schedule, AverageMode, AverageResult, Distance, DistanceBasis, RunRequest};
pub use sum::FunctionSum;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::apply_operator;
use crate::space::{FunctionRep, SamplePoints};
use crate::systems::{flow_apply, koopman_apply};

pub const DEFAULT_CACHE_BYTES: usize = 256 << 20;

/// Lattice indices per parallel chunk. Fixed so that partial sums, and hence
/// results, do not depend on the number of workers.
pub(crate) const CHUNK: u64 = 64;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Naive,
    #[default]
    Cached,
    Factorized,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EngineOptions {
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
    pub cache_bytes: usize,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self { workers: None, cache_bytes: DEFAULT_CACHE_BYTES }
    }
}

impl EngineOptions {
    pub fn with_workers(workers: usize) -> Self {
        Self { workers: Some(workers), ..Self::default() }
    }

    pub(crate) fn install<R: Send>(&self, op: impl FnOnce() -> R + Send) -> Result<R> {
        match self.workers {
            None => Ok(op()),
            Some(0) => Err(Error::InvalidArgument("worker count must be positive".into())),
            Some(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
                Ok(pool.install(op))
            }
        }
    }
}

/// How lattice index `n` (1-based) of a slot turns into a Koopman power.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Steps<'a> {
    Discrete(&'a ChainSpec),
    /// Midpoint nodes `t = (n − ½)·step`.
    Flow { chain: &'a ChainSpec, step: f64 },
}

impl<'a> Steps<'a> {
    pub(crate) fn chain(&self) -> &'a ChainSpec {
        match self {
            Steps::Discrete(c) | Steps::Flow { chain: c, .. } => c,
        }
    }

    pub(crate) fn power(&self, slot: usize, n: u64, g: &FunctionRep) -> Result<FunctionRep> {
        let chain = self.chain();
        let sys = &chain.systems()[slot];
        match self {
            Steps::Discrete(_) => {
                let e = chain.exponent(chain.class_of(slot), n)?;
                koopman_apply(sys, sys.effective_exponent(e, &g.shape()), g)
            }
            Steps::Flow { step, .. } => flow_apply(sys, (n as f64 - 0.5) * step, g),
        }
    }

    /// `T^{e(n) − e(prev)} g` when that is a valid step from the power at `prev`.
    pub(crate) fn advance(&self, slot: usize, prev: u64, n: u64, g: &FunctionRep) -> Result<Option<FunctionRep>> {
        let chain = self.chain();
        let sys = &chain.systems()[slot];
        match self {
            Steps::Discrete(_) => {
                let class = chain.class_of(slot);
                let (a, b) = (chain.exponent(class, prev)?, chain.exponent(class, n)?);
                if b < a {
                    return Ok(None);
                }
                koopman_apply(sys, sys.effective_exponent(b - a, &g.shape()), g).map(Some)
            }
            Steps::Flow { step, .. } => flow_apply(sys, (n - prev) as f64 * step, g).map(Some),
        }
    }

    pub(crate) fn power_sum(&self, slot: usize, n: u64, g: &FunctionSum) -> Result<FunctionSum> {
        g.map_terms(|t| self.power(slot, n, t))
    }

    pub(crate) fn advance_sum(&self, slot: usize, prev: u64, n: u64, g: &FunctionSum) -> Result<FunctionSum> {
        g.map_terms(|t| match self.advance(slot, prev, n, t)? {
            Some(v) => Ok(v),
            None => Err(Error::Strategy("non-monotone exponent in incremental step".into())),
        })
    }

    pub(crate) fn monotone(&self, slot: usize, n_max: u64) -> Result<bool> {
        match self {
            Steps::Flow { .. } => Ok(true),
            Steps::Discrete(chain) => {
                let class = chain.class_of(slot);
                let mut prev = chain.exponent(class, 1)?;
                for n in 2..=n_max {
                    let e = chain.exponent(class, n)?;
                    if e < prev {
                        return Ok(false);
                    }
                    prev = e;
                }
                Ok(true)
            }
        }
    }

    /// Apply the operator preceding `slot` (none before the first slot).
    pub(crate) fn operator_sum(&self, slot: usize, g: &FunctionSum) -> Result<FunctionSum> {
        if slot == 0 {
            return Ok(g.clone());
        }
        let op = &self.chain().operators()[slot - 1];
        g.map_terms(|t| apply_operator(op, t))
    }
}

/// One summand of the chain at the given exponent tuple (one entry per class).
pub fn evaluate_chain(chain: &ChainSpec, exponents: &[u64]) -> Result<FunctionRep> {
    if chain.is_continuous() {
        return Err(Error::Kind("evaluate_chain needs a discrete chain".into()));
    }
    if exponents.len() != chain.k() {
        return Err(Error::InvalidArgument(format!("{} exponents for k = {}", exponents.len(), chain.k())));
    }
    let mut g = chain.input().clone();
    for slot in 0..chain.m() {
        if slot > 0 {
            g = apply_operator(&chain.operators()[slot - 1], &g)?;
        }
        let sys = &chain.systems()[slot];
        let e = exponents[chain.class_of(slot)];
        let e = match chain.polys() {
            Some(p) => p[chain.class_of(slot)].eval(e)?,
            None => e,
        };
        g = koopman_apply(sys, sys.effective_exponent(e, &g.shape()), &g)?;
    }
    Ok(g)
}

/// Chain evaluation with the lattice index `n` of each class, the exponent
/// polynomials applied.
pub(crate) fn evaluate_at_indices(steps: &Steps, indices: &[u64]) -> Result<FunctionRep> {
    let chain = steps.chain();
    let mut g = chain.input().clone();
    for slot in 0..chain.m() {
        if slot > 0 {
            g = apply_operator(&chain.operators()[slot - 1], &g)?;
        }
        g = steps.power(slot, indices[chain.class_of(slot)], &g)?;
    }
    Ok(g)
}

fn check_discrete(chain: &ChainSpec, n: u64) -> Result<()> {
    if chain.is_continuous() {
        return Err(Error::Kind("continuous chain: use flow_entangled_average".into()));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("N must be positive".into()));
    }
    chain.check_schedule(n)
}

/// The entangled average as a sum of terms, exact for every representation.
pub fn entangled_average_terms(
    chain: &ChainSpec,
    n: u64,
    strategy: Strategy,
    options: &EngineOptions,
) -> Result<FunctionSum> {
    check_discrete(chain, n)?;
    let steps = Steps::Discrete(chain);
    match strategy {
        Strategy::Naive => enumerate::naive(&steps, n),
        Strategy::Cached => options.install(|| dp::eliminate(&steps, n, options.cache_bytes))?,
        Strategy::Factorized => dp::factorized(&steps, n),
    }
}

/// `(1/N^k) Σ T_m^{q(n_α(m))} A_{m−1} ⋯ A_1 T_1^{q(n_α(1))} f` over the used
/// index classes.
pub fn entangled_average(
    chain: &ChainSpec,
    n: u64,
    strategy: Strategy,
    options: &EngineOptions,
) -> Result<FunctionRep> {
    entangled_average_terms(chain, n, strategy, options)?.into_function()
}

pub fn entangled_average_at(
    chain: &ChainSpec,
    n: u64,
    strategy: Strategy,
    options: &EngineOptions,
    points: &SamplePoints,
) -> Result<Vec<crate::space::C64>> {
    entangled_average_terms(chain, n, strategy, options)?.eval_at(points)
}

/// Average of the pointwise moduli of the summands. Fourier summands are
/// synthesized on a grid of `resolution` points.
pub fn entangled_average_abs(
    chain: &ChainSpec,
    n: u64,
    resolution: Option<usize>,
    options: &EngineOptions,
) -> Result<FunctionRep> {
    check_discrete(chain, n)?;
    let steps = Steps::Discrete(chain);
    options.install(|| enumerate::abs_average(&steps, n, resolution))?
}

pub fn entangled_average_abs_at(
    chain: &ChainSpec,
    n: u64,
    points: &SamplePoints,
    options: &EngineOptions,
) -> Result<Vec<f64>> {
    check_discrete(chain, n)?;
    let steps = Steps::Discrete(chain);
    options.install(|| enumerate::abs_average_at(&steps, n, points))?
}

/// Number of midpoint nodes on `[0, horizon]`.
pub fn flow_nodes(horizon: f64, step: f64) -> Result<u64> {
    if !(horizon > 0.0 && horizon.is_finite() && step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidArgument("horizon and step must be positive".into()));
    }
    if step >= horizon {
        return Err(Error::InvalidArgument(format!("step {step} must be smaller than the horizon {horizon}")));
    }
    let nodes = (horizon / step).round();
    if (nodes * step - horizon).abs() > 1e-9 * horizon.max(1.0) {
        return Err(Error::InvalidArgument(format!("step {step} does not divide the horizon {horizon}")));
    }
    Ok(nodes as u64)
}

/// Midpoint-rule value of `(1/𝒯^k) ∫_{[0,𝒯]^k} T_m^{t_α(m)} A_{m−1} ⋯ T_1^{t_α(1)} f`.
pub fn flow_entangled_average(
    chain: &ChainSpec,
    horizon: f64,
    step: f64,
    options: &EngineOptions,
) -> Result<FunctionRep> {
    flow_entangled_average_terms(chain, horizon, step, options)?.into_function()
}

pub fn flow_entangled_average_terms(
    chain: &ChainSpec,
    horizon: f64,
    step: f64,
    options: &EngineOptions,
) -> Result<FunctionSum> {
    if !chain.is_continuous() {
        return Err(Error::Kind("flow averages need a continuous chain".into()));
    }
    let nodes = flow_nodes(horizon, step)?;
    let steps = Steps::Flow { chain, step };
    if chain.alpha_injective() {
        dp::factorized(&steps, nodes)
    } else {
        options.install(|| dp::eliminate(&steps, nodes, options.cache_bytes))?
    }
}
