//! Direct enumeration of the index lattice `[1, N]^u` over the used classes,
//! in lexicographic order with the smallest class most significant.

use rayon::prelude::*;

use super::{evaluate_at_indices, ChainSpec, FunctionSum, Steps, CHUNK};
use crate::error::{Error, Result};
use crate::operators::OperatorSpec;
use crate::space::{evaluate_at, FunctionRep, SamplePoints, C64};
use crate::systems::SystemKind;

pub const BRUTE_FORCE_BUDGET: u64 = 1_000_000;

fn lattice_size(n: u64, used: usize) -> Result<u64> {
    n.checked_pow(used as u32)
        .ok_or_else(|| Error::Budget(format!("{n}^{used} lattice points overflow")))
}

/// Per-class lattice indices of the `idx`-th tuple.
fn decode(mut idx: u64, n: u64, used: &[usize], k: usize) -> Vec<u64> {
    let mut out = vec![1; k];
    for &c in used.iter().rev() {
        out[c] = idx % n + 1;
        idx /= n;
    }
    out
}

pub(crate) fn naive(steps: &Steps, n: u64) -> Result<FunctionSum> {
    let chain = steps.chain();
    let used = chain.used_classes();
    let total = lattice_size(n, used.len())?;
    let mut acc = FunctionSum::new();
    for idx in 0..total {
        acc.push_owned(evaluate_at_indices(steps, &decode(idx, n, &used, chain.k()))?)?;
    }
    acc.scale(C64::new(1.0 / total as f64, 0.0));
    Ok(acc)
}

fn chunked<T: Send>(
    total: u64,
    zero: impl Fn() -> T + Sync,
    add: impl Fn(&mut T, u64) -> Result<()> + Sync,
) -> Result<Vec<T>> {
    (0..total.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut part = zero();
            for idx in c * CHUNK..((c + 1) * CHUNK).min(total) {
                add(&mut part, idx)?;
            }
            Ok(part)
        })
        .collect()
}

fn pointwise(f: &FunctionRep, resolution: Option<usize>) -> Result<Vec<C64>> {
    match f {
        FunctionRep::Grid { values } | FunctionRep::Finite { values } => Ok(values.clone()),
        FunctionRep::Fourier { .. } => {
            let m = resolution.ok_or_else(|| {
                Error::InvalidArgument("averaging moduli of Fourier summands needs a grid resolution".into())
            })?;
            f.grid_values(m)
        }
        FunctionRep::Cylinder { .. } => Err(Error::Unrepresentable(
            "moduli of cylinder summands are only available at sample points".into(),
        )),
    }
}

pub(crate) fn abs_average(steps: &Steps, n: u64, resolution: Option<usize>) -> Result<FunctionRep> {
    let chain = steps.chain();
    let used = chain.used_classes();
    let total = lattice_size(n, used.len())?;
    let len = match chain.input() {
        FunctionRep::Fourier { .. } => resolution.unwrap_or(0),
        f => f.data().len(),
    };
    let parts = chunked(
        total,
        || vec![0.0f64; len],
        |acc, idx| {
            let g = evaluate_at_indices(steps, &decode(idx, n, &used, chain.k()))?;
            let values = pointwise(&g, resolution)?;
            if values.len() != acc.len() {
                return Err(Error::Incompatible("summands changed resolution".into()));
            }
            acc.iter_mut().zip(&values).for_each(|(a, v)| *a += v.norm());
            Ok(())
        },
    )?;
    let mut sum = vec![0.0; len];
    for p in parts {
        sum.iter_mut().zip(p).for_each(|(a, b)| *a += b);
    }
    let values: Vec<C64> = sum.into_iter().map(|v| C64::new(v / total as f64, 0.0)).collect();
    match chain.input() {
        FunctionRep::Finite { .. } => FunctionRep::finite(values),
        _ => FunctionRep::grid(values),
    }
}

pub(crate) fn abs_average_at(steps: &Steps, n: u64, points: &SamplePoints) -> Result<Vec<f64>> {
    let chain = steps.chain();
    let used = chain.used_classes();
    let total = lattice_size(n, used.len())?;
    let parts = chunked(
        total,
        || vec![0.0f64; points.len()],
        |acc, idx| {
            let g = evaluate_at_indices(steps, &decode(idx, n, &used, chain.k()))?;
            acc.iter_mut().zip(evaluate_at(&g, points)?).for_each(|(a, v)| *a += v.norm());
            Ok(())
        },
    )?;
    let mut sum = vec![0.0; points.len()];
    for p in parts {
        sum.iter_mut().zip(p).for_each(|(a, b)| *a += b);
    }
    Ok(sum.into_iter().map(|v| v / total as f64).collect())
}

/// Reference average for chains of finite cyclic systems: plain vectors, no
/// caching, the same traversal order as the naive strategy.
pub fn brute_force_average(chain: &ChainSpec, n: u64) -> Result<FunctionRep> {
    let q = match chain.input() {
        FunctionRep::Finite { values } => values.len(),
        _ => return Err(Error::Kind("brute force needs finite cyclic systems".into())),
    };
    if chain.systems().iter().any(|s| !matches!(s.kind(), SystemKind::FiniteCyclic { .. })) {
        return Err(Error::Kind("brute force needs finite cyclic systems".into()));
    }
    if chain.is_continuous() || n == 0 {
        return Err(Error::InvalidArgument("brute force needs a discrete chain and N >= 1".into()));
    }
    let used = chain.used_classes();
    let total = n
        .checked_pow(used.len() as u32)
        .filter(|&t| t <= BRUTE_FORCE_BUDGET)
        .ok_or_else(|| Error::Budget(format!("{n}^{} exceeds {BRUTE_FORCE_BUDGET} tuples", used.len())))?;
    chain.check_schedule(n)?;

    let mut acc: Option<Vec<C64>> = None;
    for idx in 0..total {
        let mut ns = vec![1u64; chain.k()];
        let mut rest = idx;
        for &c in used.iter().rev() {
            ns[c] = rest % n + 1;
            rest /= n;
        }
        let mut v = chain.input().data().to_vec();
        for slot in 0..chain.m() {
            if slot > 0 {
                v = apply_raw(&chain.operators()[slot - 1], &v)?;
            }
            let class = chain.class_of(slot);
            let e = match chain.polys() {
                Some(p) => p[class].eval(ns[class])?,
                None => ns[class],
            };
            let shift = ((e % q as u64) % q as u64) as usize;
            v = (0..q).map(|x| v[(x + shift) % q]).collect();
        }
        match acc.as_mut() {
            None => acc = Some(v),
            Some(a) => a.iter_mut().zip(&v).for_each(|(a, b)| *a += b),
        }
    }
    let scale = C64::new(1.0 / total as f64, 0.0);
    let values = acc.unwrap_or_default().into_iter().map(|v| v * scale).collect();
    FunctionRep::finite(values)
}

fn apply_raw(op: &OperatorSpec, v: &[C64]) -> Result<Vec<C64>> {
    let q = v.len();
    match op {
        OperatorSpec::Identity => Ok(v.to_vec()),
        OperatorSpec::Matrix { rows } => Ok(rows
            .iter()
            .map(|row| {
                let mut acc = C64::new(0.0, 0.0);
                for (m, x) in row.iter().zip(v) {
                    acc += m * x;
                }
                acc
            })
            .collect()),
        OperatorSpec::Multiplication { g } => Ok(v.iter().zip(g.data()).map(|(x, w)| x * w).collect()),
        OperatorSpec::FiniteRank { pairs } => {
            let mut out: Option<Vec<C64>> = None;
            for (u, w) in pairs {
                let s: C64 = v.iter().zip(u.data()).map(|(a, b)| a * b.conj()).sum();
                let coef = s / q as f64;
                match out.as_mut() {
                    None => out = Some(w.data().iter().map(|x| x * coef).collect()),
                    Some(o) => o.iter_mut().zip(w.data()).for_each(|(a, b)| *a += coef * b),
                }
            }
            Ok(out.unwrap_or_else(|| vec![C64::new(0.0, 0.0); q]))
        }
        OperatorSpec::Volterra { .. } => {
            Err(Error::UnsupportedOperator("volterra does not act on finite systems".into()))
        }
    }
}
