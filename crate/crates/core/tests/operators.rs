use entangled_core::operators::{probe_joint_bound, probe_twisted_compactness};
use entangled_core::space::{inner_product, norm, Norm};
use entangled_core::systems::koopman_apply;
use entangled_core::{apply_operator, FunctionRep, OperatorSpec, Shape, SystemDescriptor, Window, C64};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn complex() -> impl Strategy<Value = C64> {
    (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(a, b)| C64::new(a, b))
}

fn finite(q: usize) -> impl Strategy<Value = FunctionRep> {
    prop::collection::vec(complex(), q).prop_map(|v| FunctionRep::finite(v).unwrap())
}

fn op_and_inputs() -> impl Strategy<Value = (OperatorSpec, FunctionRep, FunctionRep)> {
    prop_oneof![
        (1u32..3, prop::collection::vec(complex(), 9), prop::collection::vec(complex(), 9)).prop_map(|(d, a, b)| (
            OperatorSpec::volterra(d),
            FunctionRep::fourier(a).unwrap(),
            FunctionRep::fourier(b).unwrap()
        )),
        (1u32..3, prop::collection::vec(complex(), 32), prop::collection::vec(complex(), 32)).prop_map(|(d, a, b)| (
            OperatorSpec::volterra(d),
            FunctionRep::grid(a).unwrap(),
            FunctionRep::grid(b).unwrap()
        )),
        (1usize..7).prop_flat_map(|q| (
            prop::collection::vec((finite(q), finite(q)), 0..3),
            finite(q),
            finite(q)
        ))
        .prop_map(|(pairs, f, g)| (OperatorSpec::finite_rank(pairs).unwrap(), f, g)),
        (1usize..7).prop_flat_map(|q| (prop::collection::vec(prop::collection::vec(complex(), q), q), finite(q), finite(q)))
            .prop_map(|(rows, f, g)| (OperatorSpec::matrix(rows).unwrap(), f, g)),
        (1usize..7).prop_flat_map(|q| (finite(q), finite(q), finite(q)))
            .prop_map(|(m, f, g)| (OperatorSpec::Multiplication { g: m }, f, g)),
        (prop::collection::vec(complex(), 7), prop::collection::vec(complex(), 11), prop::collection::vec(complex(), 11))
            .prop_map(|(m, f, g)| (
                OperatorSpec::Multiplication { g: FunctionRep::fourier(m).unwrap() },
                FunctionRep::fourier(f).unwrap(),
                FunctionRep::fourier(g).unwrap()
            )),
        (prop::collection::vec(complex(), 4), prop::collection::vec(complex(), 8), prop::collection::vec(complex(), 8))
            .prop_map(|(u, f, g)| {
                let w = Window::new(0, 2).unwrap();
                let u = FunctionRep::cylinder(Window::new(1, 2).unwrap(), u).unwrap();
                let v = FunctionRep::one(Shape::Cylinder { window: Window::new(-1, 0).unwrap() }).unwrap();
                (
                    OperatorSpec::finite_rank(vec![(u, v)]).unwrap(),
                    FunctionRep::cylinder(w, f).unwrap(),
                    FunctionRep::cylinder(w, g).unwrap(),
                )
            }),
    ]
}

proptest! {
    #[test]
    fn operators_are_linear((op, f, g) in op_and_inputs(), a in complex(), b in complex()) {
        let mut combo = f.scaled(a);
        combo.axpy(b, &g).unwrap();
        let lhs = apply_operator(&op, &combo).unwrap();
        let mut rhs = apply_operator(&op, &f).unwrap().scaled(a);
        rhs.axpy(b, &apply_operator(&op, &g).unwrap()).unwrap();
        let scale = 1.0 + norm(&lhs, Norm::L2);
        prop_assert!(norm(&lhs.sub(&rhs).unwrap(), Norm::L2) <= 1e-10 * scale);
    }

    #[test]
    fn probe_residual_never_grows_with_dim(d in 1u32..3, j in 1i64..5, n_max in 4usize..24) {
        let sys = SystemDescriptor::golden_rotation(8);
        let f = FunctionRep::basis(8, j).unwrap().add(&FunctionRep::basis(8, -1).unwrap()).unwrap();
        let op = OperatorSpec::volterra(d);
        let mut prev = f64::INFINITY;
        for dim in 1..=n_max.min(6) {
            let r = probe_twisted_compactness(&op, &sys, &f, dim, n_max).unwrap();
            prop_assert!(r.max_residual_sup <= prev + 1e-10);
            prop_assert!(r.max_residual_sup >= 0.0 && r.joint_bound_estimate >= 0.0 && r.n_tested >= 1);
            prev = r.max_residual_sup;
        }
    }
}

/// Oracle: SVD of the explicit orbit matrix (coefficient columns), with the
/// residual of each orbit element after removing its projection onto the
/// leading left singular vectors.
fn svd_residuals(orbit: &[FunctionRep], dims: &[usize]) -> Vec<f64> {
    let rows = orbit[0].data().len();
    let w = DMatrix::from_fn(rows, orbit.len(), |i, j| orbit[j].data()[i]);
    let svd = w.clone().svd(true, false);
    let u = svd.u.unwrap();
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    dims.iter()
        .map(|&d| {
            let cols: Vec<usize> = order
                .iter()
                .copied()
                .take(d)
                .filter(|&i| svd.singular_values[i] > 1e-6 * svd.singular_values[order[0]])
                .collect();
            let basis = u.select_columns(&cols);
            let proj = &basis * (basis.adjoint() * &w);
            let resid = &w - proj;
            (0..orbit.len())
                .map(|j| {
                    let coeffs: Vec<C64> = resid.column(j).iter().copied().collect();
                    norm(&FunctionRep::fourier(coeffs).unwrap(), Norm::Sup)
                })
                .fold(0.0, f64::max)
        })
        .collect()
}

#[test]
fn volterra_doubling_probe_matches_svd_oracle() {
    let sys = SystemDescriptor::doubling(64);
    let f = FunctionRep::basis(64, 1).unwrap();
    let op = OperatorSpec::volterra(1);
    let mut orbit = Vec::new();
    let mut g = f.clone();
    for _ in 0..32 {
        g = koopman_apply(&sys, 1, &g).unwrap();
        orbit.push(apply_operator(&op, &g).unwrap());
    }
    let dims = [1, 2, 4, 8];
    let oracle = svd_residuals(&orbit, &dims);
    let mut best = f64::INFINITY;
    let mut prev = f64::INFINITY;
    for (dim, want) in dims.iter().zip(&oracle) {
        let r = probe_twisted_compactness(&op, &sys, &f, *dim, 32).unwrap();
        best = best.min(*want);
        assert!((r.residual_sup_exact_dim - want).abs() < 1e-9, "dim {dim}: {} vs {want}", r.residual_sup_exact_dim);
        assert!((r.max_residual_sup - best).abs() < 1e-9);
        assert!(r.max_residual_sup <= prev + 1e-10);
        prev = r.max_residual_sup;
        println!("volterra/doubling dim {dim}: residual {:.6e}", r.max_residual_sup);
    }
}

#[test]
fn volterra_rotation_probe_matches_svd_oracle() {
    let sys = SystemDescriptor::golden_rotation(16);
    let f = FunctionRep::fourier_modes(16, &[(1, C64::new(1.0, 0.0)), (-5, C64::new(0.0, 0.5))]).unwrap();
    let op = OperatorSpec::volterra(2);
    let mut orbit = Vec::new();
    let mut g = f.clone();
    for _ in 0..20 {
        g = koopman_apply(&sys, 1, &g).unwrap();
        orbit.push(apply_operator(&op, &g).unwrap());
    }
    let dims = [1, 2, 3];
    let oracle = svd_residuals(&orbit, &dims);
    for (dim, want) in dims.iter().zip(&oracle) {
        let r = probe_twisted_compactness(&op, &sys, &f, *dim, 20).unwrap();
        assert!((r.residual_sup_exact_dim - want).abs() < 1e-8, "dim {dim}: {} vs {want}", r.residual_sup_exact_dim);
    }
}

#[test]
fn joint_bound_of_volterra_is_at_most_one_on_grid_inputs() {
    // ‖V g‖_∞ <= ‖g‖_1 <= ‖g‖_∞ on the grid
    let sys = SystemDescriptor::golden_rotation(8);
    let tests: Vec<FunctionRep> = (1..4).map(|j| FunctionRep::basis(8, j).unwrap()).collect();
    let c = probe_joint_bound(&[OperatorSpec::volterra(1), OperatorSpec::volterra(2)], &[sys.clone(), sys], &tests, 16)
        .unwrap();
    assert!(c.is_finite() && c <= 1.0);
    let one = FunctionRep::one(Shape::Fourier { cutoff: 8 }).unwrap();
    assert!(inner_product(&one, &one).unwrap().re == 1.0);
}
