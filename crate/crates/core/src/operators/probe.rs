//! Empirical probes for twisted compactness and joint sup-norm boundedness.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{apply_operator, OperatorSpec};
use crate::error::{Error, Result};
use crate::space::{inner_product, norm, FunctionRep, Norm, C64};
use crate::systems::{koopman_apply, SystemDescriptor};

/// Relative cutoff below which Gram eigen-directions are treated as null.
const NULL_DIRECTION: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub finite_rank_dim: usize,
    /// Best max-over-n sup residual over the nested dominant subspaces of
    /// dimension at most `finite_rank_dim`.
    pub max_residual_sup: f64,
    /// Residual of the subspace of dimension exactly `finite_rank_dim`.
    pub residual_sup_exact_dim: f64,
    pub joint_bound_estimate: f64,
    pub n_tested: usize,
    pub f_tested: Vec<String>,
}

fn describe(f: &FunctionRep) -> String {
    let s = f.shape();
    let nonzero = f.data().iter().filter(|v| v.norm() > 0.0).count();
    format!("{}[{}] nnz={nonzero} sup={:.6e}", s.variant_name(), s.len(), norm(f, Norm::Sup))
}

/// Orbit `A T^n f` for `n = 1..=n_max`, with `T^n f` built incrementally.
fn orbit(op: &OperatorSpec, system: &SystemDescriptor, f: &FunctionRep, n_max: usize) -> Result<Vec<FunctionRep>> {
    if !system.acts_on(&f.shape()) {
        return Err(Error::Incompatible(format!("{} does not act on {:?}", system.name(), f.shape())));
    }
    if !op.accepts(&f.shape()) {
        return Err(Error::Incompatible(format!("{} does not act on {:?}", op.name(), f.shape())));
    }
    let mut powers = Vec::with_capacity(n_max);
    let mut g = f.clone();
    for _ in 0..n_max {
        g = koopman_apply(system, 1, &g)?;
        powers.push(g.clone());
    }
    powers.par_iter().map(|p| apply_operator(op, p)).collect()
}

pub fn probe_twisted_compactness(
    op: &OperatorSpec,
    system: &SystemDescriptor,
    f: &FunctionRep,
    dim: usize,
    n_max: usize,
) -> Result<ProbeReport> {
    if dim == 0 || n_max == 0 {
        return Err(Error::InvalidArgument("dim and n_max must be positive".into()));
    }
    if dim > n_max {
        return Err(Error::DegenerateProbe(format!("dim {dim} exceeds orbit size {n_max}")));
    }
    let f_sup = norm(f, Norm::Sup);
    let orbit = orbit(op, system, f, n_max)?;

    let gram = gram_matrix(&orbit)?;
    let eig = gram.symmetric_eigen();
    let mut order: Vec<usize> = (0..n_max).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let mu_max = eig.eigenvalues[order[0]].max(0.0);

    let mut basis = Vec::new();
    for &i in order.iter().take(dim) {
        let mu = eig.eigenvalues[i];
        if mu <= NULL_DIRECTION * mu_max || mu <= 0.0 {
            break;
        }
        let col = eig.eigenvectors.column(i);
        let mut u = FunctionRep::zeros(orbit[0].shape())?;
        for (w, c) in orbit.iter().zip(col.iter()) {
            u.axpy(*c, w)?;
        }
        basis.push(u.scaled(C64::new(1.0 / mu.sqrt(), 0.0)));
    }

    // residuals after removing one more basis direction at a time
    let per_n: Vec<Vec<f64>> = orbit
        .par_iter()
        .map(|w| -> Result<Vec<f64>> {
            let mut r = w.clone();
            let mut out = Vec::with_capacity(dim);
            for d in 0..dim {
                if let Some(u) = basis.get(d) {
                    let c = inner_product(&r, u)?;
                    r.axpy(-c, u)?;
                }
                out.push(norm(&r, Norm::Sup));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let by_dim: Vec<f64> = (0..dim).map(|d| per_n.iter().map(|r| r[d]).fold(0.0, f64::max)).collect();
    let best = by_dim.iter().copied().fold(f64::INFINITY, f64::min);
    let joint = if f_sup > 0.0 {
        orbit.iter().map(|w| norm(w, Norm::Sup) / f_sup).fold(0.0, f64::max)
    } else {
        0.0
    };
    Ok(ProbeReport {
        finite_rank_dim: dim,
        max_residual_sup: best,
        residual_sup_exact_dim: by_dim[dim - 1],
        joint_bound_estimate: joint,
        n_tested: n_max,
        f_tested: vec![describe(f)],
    })
}

fn gram_matrix(orbit: &[FunctionRep]) -> Result<DMatrix<C64>> {
    let n = orbit.len();
    let mut g = DMatrix::<C64>::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            // G[a][b] = ⟨w_b, w_a⟩ so that G = W^* W
            let v = inner_product(&orbit[b], &orbit[a])?;
            g[(a, b)] = v;
            g[(b, a)] = v.conj();
        }
    }
    Ok(g)
}

/// Largest observed `‖A_j T_j^n f‖_∞ / ‖f‖_∞` over `j`, `1 <= n <= n_max`
/// and the test set.
pub fn probe_joint_bound(
    ops: &[OperatorSpec],
    systems: &[SystemDescriptor],
    test_functions: &[FunctionRep],
    n_max: usize,
) -> Result<f64> {
    if test_functions.is_empty() {
        return Err(Error::InvalidArgument("empty test set".into()));
    }
    if ops.len() != systems.len() || ops.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "{} operators paired with {} systems",
            ops.len(),
            systems.len()
        )));
    }
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be positive".into()));
    }
    let mut best: f64 = 0.0;
    for f in test_functions {
        let f_sup = norm(f, Norm::Sup);
        if f_sup <= 0.0 {
            return Err(Error::InvalidArgument("test functions must have nonzero sup norm".into()));
        }
        for (op, system) in ops.iter().zip(systems) {
            for w in orbit(op, system, f, n_max)? {
                best = best.max(norm(&w, Norm::Sup) / f_sup);
            }
        }
    }
    Ok(best)
}
