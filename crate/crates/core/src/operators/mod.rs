//! Bounded operators placed between the Koopman slots of a chain.

mod probe;

pub use probe::{probe_joint_bound, probe_twisted_compactness, ProbeReport};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{inner_product, FunctionRep, Shape, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    /// `(Vf)(x) = ∫_0^x f`, applied `power` times.
    Volterra { power: u32 },
    /// `A f = Σ_j ⟨f, u_j⟩ v_j`, pairs given as `[u_j, v_j]`.
    FiniteRank { pairs: Vec<(FunctionRep, FunctionRep)> },
    /// Pointwise multiplication by `g`.
    Multiplication { g: FunctionRep },
    /// `(Af)(x) = Σ_y M[x][y] f(y)` on `Z_q`.
    Matrix { rows: Vec<Vec<C64>> },
    Identity,
}

impl OperatorSpec {
    pub fn volterra(power: u32) -> Self {
        OperatorSpec::Volterra { power }
    }

    pub fn finite_rank(pairs: Vec<(FunctionRep, FunctionRep)>) -> Result<Self> {
        let op = OperatorSpec::FiniteRank { pairs };
        op.validate()?;
        Ok(op)
    }

    pub fn matrix(rows: Vec<Vec<C64>>) -> Result<Self> {
        let op = OperatorSpec::Matrix { rows };
        op.validate()?;
        Ok(op)
    }

    pub fn name(&self) -> String {
        match self {
            OperatorSpec::Volterra { power } => format!("volterra^{power}"),
            OperatorSpec::FiniteRank { pairs } => format!("finite_rank({})", pairs.len()),
            OperatorSpec::Multiplication { .. } => "multiplication".into(),
            OperatorSpec::Matrix { rows } => format!("matrix({}x{})", rows.len(), rows.len()),
            OperatorSpec::Identity => "identity".into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            OperatorSpec::Volterra { power } if *power == 0 => {
                Err(Error::InvalidArgument("volterra power must be >= 1".into()))
            }
            OperatorSpec::FiniteRank { pairs } => {
                let Some((u0, _)) = pairs.first() else { return Ok(()) };
                let reference = u0.shape();
                for (u, v) in pairs {
                    u.validate()?;
                    v.validate()?;
                    for s in [u.shape(), v.shape()] {
                        let ok = match (reference, s) {
                            (Shape::Cylinder { .. }, Shape::Cylinder { .. }) => true,
                            (a, b) => a == b,
                        };
                        if !ok {
                            return Err(Error::Incompatible(format!(
                                "finite-rank pairs mix {reference:?} and {s:?}"
                            )));
                        }
                    }
                }
                Ok(())
            }
            OperatorSpec::Multiplication { g } => g.validate(),
            OperatorSpec::Matrix { rows } => {
                let q = rows.len();
                if q == 0 || rows.iter().any(|r| r.len() != q) {
                    return Err(Error::InvalidArgument("matrix operator must be square and nonempty".into()));
                }
                if rows.iter().flatten().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
                    return Err(Error::InvalidArgument("matrix entries must be finite".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Whether the operator can act on functions of this shape.
    pub fn accepts(&self, shape: &Shape) -> bool {
        match self {
            OperatorSpec::Volterra { .. } => matches!(shape, Shape::Grid { .. } | Shape::Fourier { .. }),
            OperatorSpec::Matrix { rows } => matches!(shape, Shape::Finite { q } if *q == rows.len()),
            OperatorSpec::FiniteRank { pairs } => pairs.first().is_none_or(|(u, _)| u.shape().same_variant(shape)),
            OperatorSpec::Multiplication { g } => g.shape().same_variant(shape),
            OperatorSpec::Identity => true,
        }
    }
}

/// Apply `op` to `f`.
pub fn apply_operator(op: &OperatorSpec, f: &FunctionRep) -> Result<FunctionRep> {
    match op {
        OperatorSpec::Identity => Ok(f.clone()),
        OperatorSpec::Volterra { power } => {
            if *power == 0 {
                return Err(Error::InvalidArgument("volterra power must be >= 1".into()));
            }
            let mut g = f.clone();
            for _ in 0..*power {
                g = match &g {
                    FunctionRep::Grid { values } => FunctionRep::Grid { values: volterra_grid(values) },
                    FunctionRep::Fourier { coeffs } => FunctionRep::Fourier { coeffs: volterra_fourier(coeffs) },
                    other => {
                        return Err(Error::UnsupportedOperator(format!(
                            "volterra acts on functions of [0,1), not {}",
                            other.shape().variant_name()
                        )))
                    }
                };
            }
            Ok(g)
        }
        OperatorSpec::FiniteRank { pairs } => {
            if !op.accepts(&f.shape()) {
                return Err(Error::Incompatible(format!("{} cannot act on {:?}", op.name(), f.shape())));
            }
            let mut out: Option<FunctionRep> = None;
            for (u, v) in pairs {
                let coef = inner_product(f, u)?;
                match out.as_mut() {
                    None => out = Some(v.scaled(coef)),
                    Some(acc) => acc.axpy(coef, v)?,
                }
            }
            match out {
                Some(g) => Ok(g),
                None => FunctionRep::zeros(f.shape()),
            }
        }
        OperatorSpec::Multiplication { g } => multiply(g, f),
        OperatorSpec::Matrix { rows } => {
            let FunctionRep::Finite { values } = f else {
                return Err(Error::UnsupportedOperator(format!(
                    "matrix operators act on finite functions, not {}",
                    f.shape().variant_name()
                )));
            };
            if values.len() != rows.len() {
                return Err(Error::Incompatible(format!("{}x{} matrix on Z_{}", rows.len(), rows.len(), values.len())));
            }
            let values = rows
                .iter()
                .map(|row| {
                    let mut acc = C64::new(0.0, 0.0);
                    for (m, v) in row.iter().zip(values) {
                        acc += m * v;
                    }
                    acc
                })
                .collect();
            Ok(FunctionRep::Finite { values })
        }
    }
}

/// Cumulative trapezoid on left-endpoint samples, `(Vf)(0) = 0`.
fn volterra_grid(values: &[C64]) -> Vec<C64> {
    let h = 1.0 / values.len() as f64;
    let mut out = Vec::with_capacity(values.len());
    let mut acc = C64::new(0.0, 0.0);
    out.push(acc);
    for w in values.windows(2) {
        acc += (w[0] + w[1]) * (0.5 * h);
        out.push(acc);
    }
    out
}

/// Exact action on the truncated basis: `V e_j = (e_j − e_0)/(2πij)` for
/// `j ≠ 0`, and `V e_0 = x = ½ e_0 − Σ_{0<|l|<=K} e_l/(2πil)`.
fn volterra_fourier(coeffs: &[C64]) -> Vec<C64> {
    let k = (coeffs.len() / 2) as i64;
    let c0 = coeffs[k as usize];
    let mut out = vec![C64::new(0.0, 0.0); coeffs.len()];
    let mut zero_mode = c0 * 0.5;
    for j in (-k..=k).filter(|&j| j != 0) {
        let idx = (j + k) as usize;
        let inv = C64::new(0.0, -1.0 / (2.0 * PI * j as f64)); // 1/(2πij)
        out[idx] = (coeffs[idx] - c0) * inv;
        zero_mode -= coeffs[idx] * inv;
    }
    out[k as usize] = zero_mode;
    out
}

fn multiply(g: &FunctionRep, f: &FunctionRep) -> Result<FunctionRep> {
    match (g, f) {
        (FunctionRep::Fourier { coeffs: gc }, FunctionRep::Fourier { coeffs: fc }) => {
            // product of trigonometric polynomials, truncated at f's cutoff
            let (kg, kf) = ((gc.len() / 2) as i64, (fc.len() / 2) as i64);
            let mut out = vec![C64::new(0.0, 0.0); fc.len()];
            for (a, gv) in gc.iter().enumerate() {
                let ja = a as i64 - kg;
                for (b, fv) in fc.iter().enumerate() {
                    let j = ja + b as i64 - kf;
                    if j.abs() <= kf {
                        out[(j + kf) as usize] += gv * fv;
                    }
                }
            }
            Ok(FunctionRep::Fourier { coeffs: out })
        }
        (FunctionRep::Cylinder { window: wg, .. }, FunctionRep::Cylinder { window: wf, .. }) => {
            let hull = wg.hull(wf)?;
            let (g, f) = (g.widen(hull)?, f.widen(hull)?);
            let table = g.data().iter().zip(f.data()).map(|(a, b)| a * b).collect();
            Ok(FunctionRep::Cylinder { window: hull, table })
        }
        _ if g.shape() == f.shape() => {
            let mut out = f.clone();
            out.data_mut().iter_mut().zip(g.data()).for_each(|(v, w)| *v *= w);
            Ok(out)
        }
        _ => Err(Error::Incompatible(format!("multiplier {:?} on {:?}", g.shape(), f.shape()))),
    }
}
