//! Predicted limits of entangled averages, and weight sequences.

mod weights;

pub use weights::{
    almost_periodic_weight, density_one_subsequence, is_class_n, weighted_birkhoff_average, ClassNReport,
    ClassTag, DensityReport, Sequence, WeightSequence,
};

use serde::{Deserialize, Serialize};

use crate::engine::ChainSpec;
use crate::error::{Error, Result};
use crate::operators::apply_operator;
use crate::space::{inner_product, mean, FunctionRep, C64};
use crate::systems::{turn, ReversibleRank, SystemDescriptor, SystemKind};

/// An eigenvalue product counts as 1 within this distance.
pub const RESONANCE_TOL: f64 = 1e-9;

/// Largest root-of-unity order searched when averaging polynomial phases.
const MAX_ROOT_ORDER: u64 = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predictor {
    WeakMixing,
    ProjectionChain,
    Resonance,
    None,
}

/// Limit of the chosen predictor, `None` for [`Predictor::None`].
pub fn predict(predictor: Predictor, chain: &ChainSpec) -> Result<Option<FunctionRep>> {
    match predictor {
        Predictor::WeakMixing => predicted_limit_weak_mixing(chain).map(Some),
        Predictor::ProjectionChain => predicted_limit_projection_chain(chain).map(Some),
        Predictor::Resonance => predicted_limit_resonance(chain).map(Some),
        Predictor::None => Ok(None),
    }
}

/// `⟨f, 1⟩ ∏ ⟨A_i 1, 1⟩ · 1`.
pub fn predicted_limit_weak_mixing(chain: &ChainSpec) -> Result<FunctionRep> {
    if let Some(s) = chain.systems().iter().find(|s| !s.weakly_mixing()) {
        return Err(Error::NotApplicable(format!("{} is not weakly mixing", s.name())));
    }
    let shape = chain.input().shape();
    let one = FunctionRep::one(shape)?;
    let mut value = mean(chain.input());
    for op in chain.operators() {
        value *= mean(&apply_operator(op, &one)?);
    }
    FunctionRep::constant(shape, value)
}

/// Projection onto the fixed space of the Koopman operator (of every time
/// `t` for flows).
pub fn mean_ergodic_projection(system: &SystemDescriptor, f: &FunctionRep) -> Result<FunctionRep> {
    projection(system, f, true)
}

fn projection(system: &SystemDescriptor, f: &FunctionRep, flow_as_flow: bool) -> Result<FunctionRep> {
    if !system.acts_on(&f.shape()) {
        return Err(Error::Incompatible(format!("{} cannot act on {:?}", system.name(), f.shape())));
    }
    let keep_modes = |fixed: &dyn Fn(i64) -> bool| -> Result<FunctionRep> {
        let k = (f.data().len() / 2) as i64;
        let coeffs =
            f.data().iter().enumerate().map(|(i, c)| if fixed(i as i64 - k) { *c } else { C64::new(0.0, 0.0) }).collect();
        FunctionRep::fourier(coeffs)
    };
    match system.kind() {
        SystemKind::Rotation { theta } => keep_modes(&|j| (turn(j as f64, theta) - 1.0).norm() < RESONANCE_TOL),
        SystemKind::TorusFlow { theta } if !flow_as_flow => {
            keep_modes(&|j| (turn(j as f64, theta) - 1.0).norm() < RESONANCE_TOL)
        }
        SystemKind::TorusFlow { theta } => keep_modes(&|j| (j as f64 * theta).abs() < RESONANCE_TOL),
        SystemKind::Doubling | SystemKind::BernoulliShift | SystemKind::FiniteCyclic { .. } => {
            FunctionRep::constant(f.shape(), mean(f))
        }
    }
}

/// `P_m A_{m−1} P_{m−1} ⋯ A_1 P_1 f` for injective `α`.
pub fn predicted_limit_projection_chain(chain: &ChainSpec) -> Result<FunctionRep> {
    if !chain.alpha_injective() {
        return Err(Error::NotApplicable(format!(
            "projection chain needs injective alpha, got {:?}",
            chain.alpha()
        )));
    }
    let flows = chain.is_continuous();
    let mut g = projection(&chain.systems()[0], chain.input(), flows)?;
    for (op, sys) in chain.operators().iter().zip(&chain.systems()[1..]) {
        g = projection(sys, &apply_operator(op, &g)?, flows)?;
    }
    Ok(g)
}

struct Basis {
    eigenvalues: Vec<C64>,
    functions: Vec<FunctionRep>,
}

fn basis(system: &SystemDescriptor, shape_of: &FunctionRep) -> Result<Basis> {
    if !matches!(crate::systems::reversible_rank(system), ReversibleRank::Full)
        || matches!(system.kind(), SystemKind::Doubling | SystemKind::BernoulliShift)
    {
        return Err(Error::NotApplicable(format!("{} has no discrete eigenbasis", system.name())));
    }
    if system.representation() != shape_of.shape() {
        return Err(Error::Incompatible(format!(
            "eigenbasis of {} lives on {:?}, function on {:?}",
            system.name(),
            system.representation(),
            shape_of.shape()
        )));
    }
    let data = system.eigen_data();
    Ok(Basis {
        eigenvalues: data.iter().map(|p| p.eigenvalue).collect(),
        functions: data.iter().map(|p| p.eigenfunction.clone()).collect(),
    })
}

/// Limit of `(1/N) Σ_n Λ^{p(n)}` as `N → ∞`.
fn phase_average(lambda: C64, poly: Option<&crate::engine::ExponentPoly>) -> C64 {
    if (lambda - 1.0).norm() < RESONANCE_TOL {
        return C64::new(1.0, 0.0);
    }
    let Some(p) = poly else { return C64::new(0.0, 0.0) };
    let arg = lambda.arg() / (2.0 * std::f64::consts::PI);
    for d in 2..=MAX_ROOT_ORDER {
        if (turn(d as f64, arg) - 1.0).norm() < RESONANCE_TOL {
            let r = (d as f64 * arg).round() as i64;
            let sum: C64 = (0..d)
                .map(|n| {
                    let e = p.eval_mod(n, d);
                    turn((r.rem_euclid(d as i64) as u64 * e % d) as f64, 1.0 / d as f64)
                })
                .sum();
            return sum / d as f64;
        }
    }
    C64::new(0.0, 0.0)
}

/// Eigen-expansion of the chain, keeping the index tuples whose Cesàro phase
/// averages survive for every class.
pub fn predicted_limit_resonance(chain: &ChainSpec) -> Result<FunctionRep> {
    if chain.is_continuous() {
        return Err(Error::NotApplicable("resonance predictor is for discrete chains".into()));
    }
    let m = chain.m();
    let mut shape_ref = chain.input().clone();
    let mut bases = Vec::with_capacity(m);
    for s in 0..m {
        bases.push(basis(&chain.systems()[s], &shape_ref)?);
        if s + 1 < m {
            shape_ref = apply_operator(&chain.operators()[s], &shape_ref)?;
        }
    }
    // coefficients of f, and matrices ⟨A φ_j, ψ_i⟩ between consecutive bases
    let coeffs: Vec<C64> =
        bases[0].functions.iter().map(|phi| inner_product(chain.input(), phi)).collect::<Result<_>>()?;
    let mut mats: Vec<Vec<Vec<(usize, C64)>>> = Vec::with_capacity(m - 1);
    for s in 0..m - 1 {
        let op = &chain.operators()[s];
        let cols = bases[s]
            .functions
            .iter()
            .map(|phi| {
                let image = apply_operator(op, phi)?;
                let mut col = Vec::new();
                for (i, psi) in bases[s + 1].functions.iter().enumerate() {
                    let v = inner_product(&image, psi)?;
                    if v.norm() > 1e-15 {
                        col.push((i, v));
                    }
                }
                Ok(col)
            })
            .collect::<Result<Vec<_>>>()?;
        mats.push(cols);
    }
    let alpha: Vec<usize> = chain.alpha().iter().map(|a| a - 1).collect();
    let last: Vec<usize> = (0..m).map(|s| alpha.iter().rposition(|&a| a == alpha[s]).unwrap_or(s)).collect();

    let mut out = vec![C64::new(0.0, 0.0); bases[m - 1].functions.len()];
    let mut products = vec![C64::new(1.0, 0.0); chain.k()];
    let ctx = Walk { chain, bases: &bases, mats: &mats, alpha: &alpha, last: &last };
    for (i, &c) in coeffs.iter().enumerate() {
        if c.norm() > 0.0 {
            ctx.descend(0, i, c, &mut products, &mut out);
        }
    }
    let mut result = FunctionRep::zeros(bases[m - 1].functions[0].shape())?;
    for (c, phi) in out.iter().zip(&bases[m - 1].functions) {
        if c.norm() > 0.0 {
            result.axpy(*c, phi)?;
        }
    }
    Ok(result)
}

struct Walk<'a> {
    chain: &'a ChainSpec,
    bases: &'a [Basis],
    mats: &'a [Vec<Vec<(usize, C64)>>],
    alpha: &'a [usize],
    last: &'a [usize],
}

impl Walk<'_> {
    fn descend(&self, s: usize, idx: usize, amp: C64, products: &mut [C64], out: &mut [C64]) {
        let class = self.alpha[s];
        let saved = products[class];
        products[class] *= self.bases[s].eigenvalues[idx];
        let mut amp = amp;
        if self.last[s] == s {
            let poly = self.chain.polys().map(|p| &p[class]);
            amp *= phase_average(products[class], poly);
        }
        if amp.norm() > 0.0 {
            if s + 1 == self.alpha.len() {
                out[idx] += amp;
            } else {
                for &(next, v) in &self.mats[s][idx] {
                    self.descend(s + 1, next, amp * v, products, out);
                }
            }
        }
        products[class] = saved;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{brute_force_average, ExponentPoly};
    use crate::operators::OperatorSpec;
    use crate::space::{norm, Norm, Shape, Window};
    use crate::systems::GOLDEN_MEAN;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn weak_mixing_examples() {
        let f = FunctionRep::fourier_modes(4, &[(0, c(2.0, 0.0)), (1, c(1.0, 0.0))]).unwrap();
        let chain =
            ChainSpec::uniform(1, &[1, 1], SystemDescriptor::doubling(4), vec![OperatorSpec::volterra(1)], f).unwrap();
        let lim = predicted_limit_weak_mixing(&chain).unwrap();
        assert!((lim.coeff(0).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        assert!(norm(&lim, Norm::L2) - 1.0 < 1e-15);

        let w = Window::new(0, 1).unwrap();
        let one = FunctionRep::one(Shape::Cylinder { window: w }).unwrap();
        let g = FunctionRep::cylinder(w, vec![c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)]).unwrap();
        let op = OperatorSpec::finite_rank(vec![(one, g)]).unwrap();
        let f = FunctionRep::cylinder(w, vec![c(4.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        let chain = ChainSpec::uniform(1, &[1, 1, 1], SystemDescriptor::bernoulli_shift(), vec![op.clone(), op], f).unwrap();
        let lim = predicted_limit_weak_mixing(&chain).unwrap();
        assert!(lim.data().iter().all(|v| (v - c(1.0 * 1.5 * 1.5, 0.0)).norm() < 1e-15));

        let zero_mean = chain.with_input(FunctionRep::cylinder(w, vec![c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap()).unwrap();
        assert!(predicted_limit_weak_mixing(&zero_mean).unwrap().is_zero());

        let rot = ChainSpec::uniform(
            1,
            &[1, 1],
            SystemDescriptor::golden_rotation(1),
            vec![OperatorSpec::Identity],
            FunctionRep::basis(1, 0).unwrap(),
        )
        .unwrap();
        assert!(matches!(predicted_limit_weak_mixing(&rot), Err(Error::NotApplicable(_))));
    }

    #[test]
    fn projection_examples() {
        let one = FunctionRep::one(Shape::Fourier { cutoff: 3 }).unwrap();
        let doubling = SystemDescriptor::doubling(3);
        assert_eq!(mean_ergodic_projection(&doubling, &one).unwrap(), one);
        assert!(mean_ergodic_projection(&doubling, &FunctionRep::basis(3, 1).unwrap()).unwrap().is_zero());
        let cyc = SystemDescriptor::finite_cyclic(3).unwrap();
        let p = mean_ergodic_projection(&cyc, &FunctionRep::finite_real(&[1.0, 0.0, 0.0]).unwrap()).unwrap();
        assert!(p.data().iter().all(|v| (v - c(1.0 / 3.0, 0.0)).norm() < 1e-16));
        let rational = SystemDescriptor::rotation(0.25, 8).unwrap();
        let f = FunctionRep::fourier_modes(8, &[(4, c(1.0, 0.0)), (3, c(1.0, 0.0)), (-8, c(2.0, 0.0))]).unwrap();
        let p = mean_ergodic_projection(&rational, &f).unwrap();
        assert_eq!(p, FunctionRep::fourier_modes(8, &[(4, c(1.0, 0.0)), (-8, c(2.0, 0.0))]).unwrap());
    }

    #[test]
    fn projection_chain_examples() {
        let f = FunctionRep::fourier_modes(5, &[(0, c(3.0, 0.0)), (2, c(1.0, 0.0))]).unwrap();
        let chain = ChainSpec::uniform(
            3,
            &[1, 2, 3],
            SystemDescriptor::golden_rotation(5),
            vec![OperatorSpec::Identity; 2],
            f.clone(),
        )
        .unwrap();
        assert_eq!(predicted_limit_projection_chain(&chain).unwrap(), FunctionRep::constant(f.shape(), c(3.0, 0.0)).unwrap());
        let v = ChainSpec::uniform(2, &[1, 2], SystemDescriptor::doubling(5), vec![OperatorSpec::volterra(1)], f.clone())
            .unwrap();
        let lim = predicted_limit_projection_chain(&v).unwrap();
        assert!((lim.coeff(0).unwrap() - c(1.5, 0.0)).norm() < 1e-15);
        assert!((predicted_limit_weak_mixing(&v).unwrap().sub(&lim).unwrap()).data().iter().all(|x| x.norm() < 1e-10));
        let bad = ChainSpec::uniform(1, &[1, 1], SystemDescriptor::doubling(5), vec![OperatorSpec::volterra(1)], f).unwrap();
        assert!(matches!(predicted_limit_projection_chain(&bad), Err(Error::NotApplicable(_))));
    }

    #[test]
    fn resonance_examples() {
        let rot = SystemDescriptor::golden_rotation(4);
        let chain =
            ChainSpec::uniform(1, &[1, 1], rot, vec![OperatorSpec::Identity], FunctionRep::basis(4, 1).unwrap()).unwrap();
        assert!(predicted_limit_resonance(&chain).unwrap().is_zero());
        let e0 = chain.with_input(FunctionRep::basis(4, 0).unwrap()).unwrap();
        assert_eq!(predicted_limit_resonance(&e0).unwrap(), FunctionRep::basis(4, 0).unwrap());

        let cyc = ChainSpec::uniform(
            1,
            &[1, 1],
            SystemDescriptor::finite_cyclic(2).unwrap(),
            vec![OperatorSpec::Identity],
            FunctionRep::finite_real(&[1.0, -1.0]).unwrap(),
        )
        .unwrap();
        let lim = predicted_limit_resonance(&cyc).unwrap();
        assert!(lim.sub(&FunctionRep::finite_real(&[1.0, -1.0]).unwrap()).unwrap().data().iter().all(|v| v.norm() < 1e-12));

        let mixing = ChainSpec::uniform(
            1,
            &[1, 1],
            SystemDescriptor::doubling(2),
            vec![OperatorSpec::Identity],
            FunctionRep::basis(2, 0).unwrap(),
        )
        .unwrap();
        assert!(matches!(predicted_limit_resonance(&mixing), Err(Error::NotApplicable(_))));
    }

    #[test]
    fn volterra_rotation_resonance_keeps_half_the_mean() {
        let f = FunctionRep::fourier_modes(8, &[(0, c(2.0, 0.0)), (1, c(1.0, 1.0)), (-3, c(0.5, 0.0))]).unwrap();
        for alpha in [&[1, 1][..], &[1, 2]] {
            let chain = ChainSpec::uniform(2, alpha, SystemDescriptor::rotation(GOLDEN_MEAN, 8).unwrap(), vec![OperatorSpec::volterra(1)], f.clone())
                .unwrap();
            let lim = predicted_limit_resonance(&chain).unwrap();
            assert!((lim.sub(&FunctionRep::basis(8, 0).unwrap()).unwrap()).data().iter().all(|v| v.norm() < 1e-12));
        }
    }

    #[test]
    fn no_false_resonances_for_the_golden_mean() {
        // |jθ mod 1| stays far above the tolerance for every |j| <= 3·2·64
        for j in 1..=384 {
            assert!((turn(j as f64, GOLDEN_MEAN) - 1.0).norm() > 1e-4, "j = {j}");
        }
    }

    #[test]
    fn resonance_matches_periodic_brute_force() {
        let q = 4;
        let m = OperatorSpec::matrix(
            (0..q).map(|i| (0..q).map(|j| c(((i * 3 + j * 5) % 7) as f64 / 7.0 - 0.4, (i as f64 - j as f64) / 9.0)).collect()).collect(),
        )
        .unwrap();
        let f = FunctionRep::finite(vec![c(1.0, 0.0), c(0.0, 2.0), c(-1.0, 0.0), c(0.5, 0.5)]).unwrap();
        let polys = [None, Some(ExponentPoly::new(vec![0, 1, 1]).unwrap())];
        for poly in polys {
            for alpha in [&[1, 1, 1][..], &[1, 2, 1], &[1, 1, 2]] {
                let mut chain = ChainSpec::uniform(2, alpha, SystemDescriptor::finite_cyclic(q).unwrap(), vec![m.clone(), m.clone()], f.clone()).unwrap();
                if let Some(p) = &poly {
                    chain = chain.with_polys(vec![p.clone(); 2]).unwrap();
                }
                let lim = predicted_limit_resonance(&chain).unwrap();
                for n in [q as u64, 2 * q as u64, 4 * q as u64] {
                    let brute = brute_force_average(&chain, n).unwrap();
                    let d = norm(&brute.sub(&lim).unwrap(), Norm::L2);
                    assert!(d < 1e-8, "alpha {alpha:?} poly {poly:?} N {n}: {d}");
                }
            }
        }
    }
}
