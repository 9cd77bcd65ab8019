use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{FunctionRep, Shape, C64};
use crate::systems::{koopman_apply, SystemDescriptor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassTag {
    AlmostPeriodic,
    ClassN,
}

/// `a_n = Σ_j q_j γ_j^n` with unimodular `γ_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSequence {
    pub terms: Vec<(C64, C64)>,
    #[serde(default)]
    pub class_tags: Vec<ClassTag>,
    #[serde(default)]
    pub horizon: Option<u64>,
}

pub fn almost_periodic_weight(terms: Vec<(C64, C64)>) -> Result<WeightSequence> {
    if let Some((g, _)) = terms.iter().find(|(g, _)| (g.norm() - 1.0).abs() > 1e-12) {
        return Err(Error::InvalidArgument(format!("|γ| = {} is not 1", g.norm())));
    }
    let mut class_tags = vec![ClassTag::AlmostPeriodic];
    if terms.iter().all(|(_, q)| q.norm() == 0.0) {
        class_tags.push(ClassTag::ClassN);
    }
    Ok(WeightSequence { terms, class_tags, horizon: None })
}

impl WeightSequence {
    pub fn constant(c: C64) -> Self {
        almost_periodic_weight(vec![(C64::new(1.0, 0.0), c)]).expect("1 is unimodular")
    }

    pub fn value(&self, n: u64) -> C64 {
        self.terms
            .iter()
            .map(|(g, q)| {
                let turns = g.arg() / (2.0 * std::f64::consts::PI);
                q * crate::systems::turn(n as f64, turns)
            })
            .sum()
    }

    /// Elementwise product, generated by all pairwise term products.
    pub fn product(&self, other: &WeightSequence) -> Result<WeightSequence> {
        let terms = self
            .terms
            .iter()
            .flat_map(|(g1, q1)| other.terms.iter().map(move |(g2, q2)| (g1 * g2 / (g1 * g2).norm(), q1 * q2)))
            .collect();
        let mut w = almost_periodic_weight(terms)?;
        w.horizon = match (self.horizon, other.horizon) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        Ok(w)
    }
}

/// A scalar sequence indexed from `n = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum Sequence {
    Weight { weight: WeightSequence },
    /// `values[i]` is `a_{i+1}`.
    Explicit { values: Vec<C64> },
}

impl Sequence {
    fn available(&self, n_max: u64) -> u64 {
        match self {
            Sequence::Weight { .. } => n_max,
            Sequence::Explicit { values } => n_max.min(values.len() as u64),
        }
    }

    fn value(&self, n: u64) -> C64 {
        match self {
            Sequence::Weight { weight } => weight.value(n),
            Sequence::Explicit { values } => values[(n - 1) as usize],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassNReport {
    pub member: bool,
    /// `(N, (1/N) Σ_{n<=N} |a_n|)` along the schedule `16, 32, …, N_max`.
    pub curve: Vec<(u64, f64)>,
}

/// Finite-horizon test for `(1/N) Σ |a_n| → 0`: the last value is below `tol`
/// and the last three schedule points do not increase.
pub fn is_class_n(a: &Sequence, n_max: u64, tol: f64) -> Result<ClassNReport> {
    if n_max < 16 {
        return Err(Error::InvalidArgument("N_max must be at least 16".into()));
    }
    let n_max = a.available(n_max);
    let mut points = Vec::new();
    let mut p = 16u64;
    while p <= n_max {
        points.push(p);
        p = p.saturating_mul(2);
    }
    if points.last() != Some(&n_max) {
        points.push(n_max);
    }
    let mut curve = Vec::with_capacity(points.len());
    let mut acc = 0.0;
    let mut n = 0u64;
    for &p in &points {
        while n < p {
            n += 1;
            acc += a.value(n).norm();
        }
        curve.push((p, acc / p as f64));
    }
    let last = curve.last().map_or(f64::INFINITY, |c| c.1);
    let tail = &curve[curve.len().saturating_sub(3)..];
    let trend = tail.windows(2).all(|w| w[1].1 <= w[0].1);
    Ok(ClassNReport { member: last < tol && trend, curve })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    /// 1-based indices `n` with `|a_n| <= tol`.
    pub indices: Vec<u64>,
    /// `(N, |J ∩ [1, N]| / N)` along `16, 32, …` and the full length.
    pub densities: Vec<(u64, f64)>,
    /// Set when the input does not pass [`is_class_n`] at the same tolerance.
    pub class_n_warning: bool,
}

pub fn density_one_subsequence(a: &[C64], tol: f64) -> DensityReport {
    let indices: Vec<u64> = a.iter().enumerate().filter(|(_, v)| v.norm() <= tol).map(|(i, _)| i as u64 + 1).collect();
    let len = a.len() as u64;
    let mut points = Vec::new();
    let mut p = 16u64;
    while p < len {
        points.push(p);
        p *= 2;
    }
    if len > 0 {
        points.push(len);
    }
    let densities = points
        .iter()
        .map(|&p| (p, indices.partition_point(|&i| i <= p) as f64 / p as f64))
        .collect();
    let class_n_warning = !(len >= 16
        && is_class_n(&Sequence::Explicit { values: a.to_vec() }, len, tol.max(f64::MIN_POSITIVE))
            .map(|r| r.member)
            .unwrap_or(false));
    DensityReport { indices, densities, class_n_warning }
}

/// Largest cylinder table the weighted average may widen to.
const MAX_AVERAGE_TABLE: usize = 1 << 16;

/// `(1/N) Σ_{n=1}^N a_n T^n f`.
///
/// Cylinder inputs under a shift fail with [`Error::Unrepresentable`] once the
/// shifted windows no longer fit one table of `2^16` entries.
pub fn weighted_birkhoff_average(
    system: &SystemDescriptor,
    w: &WeightSequence,
    f: &FunctionRep,
    n: u64,
) -> Result<FunctionRep> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be positive".into()));
    }
    if let FunctionRep::Cylinder { window, .. } = f {
        let last = koopman_apply(system, n, f)?;
        let spread = match last.shape() {
            Shape::Cylinder { window: w } => window.hull(&w).ok().filter(|h| h.table_len() <= MAX_AVERAGE_TABLE),
            _ => None,
        };
        if spread.is_none() {
            return Err(Error::Unrepresentable(format!(
                "the windows of T^n f for n <= {n} do not fit one cylinder table"
            )));
        }
    }
    let mut acc = FunctionRep::zeros(f.shape())?;
    let mut cur = f.clone();
    for i in 1..=n {
        cur = koopman_apply(system, 1, &cur)?;
        acc.axpy(w.value(i), &cur)?;
    }
    Ok(acc.scaled(C64::new(1.0 / n as f64, 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn weight_values_and_products() {
        let w = almost_periodic_weight(vec![(c(0.0, 1.0), c(1.0, 0.0)), (c(0.0, -1.0), c(1.0, 0.0))]).unwrap();
        assert!((w.value(1)).norm() < 1e-15);
        assert!((w.value(2) - c(-2.0, 0.0)).norm() < 1e-15);
        assert!((w.value(4) - c(2.0, 0.0)).norm() < 1e-15);
        assert!(almost_periodic_weight(vec![(c(1.1, 0.0), c(1.0, 0.0))]).is_err());
        let g = C64::from_polar(1.0, 0.7);
        let a = almost_periodic_weight(vec![(g, c(1.0, 0.0))]).unwrap();
        let b = almost_periodic_weight(vec![(g.conj(), c(1.0, 0.0))]).unwrap();
        let p = a.product(&b).unwrap();
        for n in [1, 5, 1000] {
            assert!((p.value(n) - c(1.0, 0.0)).norm() < 1e-12);
        }
        assert!(p.class_tags.contains(&ClassTag::AlmostPeriodic));
    }
}
