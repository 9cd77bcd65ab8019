//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::process::ExitCode;
use std::time::Instant;

use entangled_core::engine::{
    brute_force_average, entangled_average, entangled_average_abs_at, entangled_average_terms,
    flow_entangled_average, ChainSpec, EngineOptions, ExponentPoly, Strategy,
};
use entangled_core::limits::{
    almost_periodic_weight, density_one_subsequence, is_class_n, predicted_limit_projection_chain,
    predicted_limit_resonance, predicted_limit_weak_mixing, weighted_birkhoff_average, Sequence, WeightSequence,
};
use entangled_core::operators::{probe_joint_bound, probe_twisted_compactness};
use entangled_core::oracle::geometric_cesaro;
use entangled_core::space::{mean, norm, SamplePoints};
use entangled_core::systems::GOLDEN_MEAN;
use entangled_core::{FunctionRep, Norm, OperatorSpec, Shape, SystemDescriptor, Window, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn l2(a: &FunctionRep, b: &FunctionRep) -> f64 {
    norm(&a.sub(b).unwrap(), Norm::L2)
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn nonincreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0])
}

fn fmt(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

// ---------------------------------------------------------------- criterion 1

fn random_cyclic_chain(seed: u64) -> (ChainSpec, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = rng.gen_range(1..=8);
    let m = rng.gen_range(2..=3);
    let k = rng.gen_range(1..=2);
    let alpha: Vec<usize> = (0..m).map(|_| rng.gen_range(1..=k)).collect();
    let entry = |rng: &mut ChaCha8Rng| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) / 2f64.sqrt();
    let ops = (0..m - 1)
        .map(|_| OperatorSpec::matrix((0..q).map(|_| (0..q).map(|_| entry(&mut rng)).collect()).collect()).unwrap())
        .collect();
    let f = FunctionRep::finite((0..q).map(|_| entry(&mut rng)).collect()).unwrap();
    let n = rng.gen_range(1..=30);
    (ChainSpec::uniform(k, &alpha, SystemDescriptor::finite_cyclic(q).unwrap(), ops, f).unwrap(), n)
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let opts = EngineOptions::default();
    let (mut worst, mut injective) = (0.0f64, 0);
    let chains = 64;
    for seed in 0..chains {
        let (chain, n) = random_cyclic_chain(1000 + seed);
        let brute = brute_force_average(&chain, n).map_err(|e| e.to_string())?;
        let mut strategies = vec![Strategy::Naive, Strategy::Cached];
        if chain.alpha_injective() {
            strategies.push(Strategy::Factorized);
            injective += 1;
        }
        for s in strategies {
            let avg = entangled_average(&chain, n, s, &opts).map_err(|e| e.to_string())?;
            worst = worst.max(l2(&avg, &brute));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst <= 1e-10 && secs < 60.0,
        format!("{chains} chains ({injective} injective), max L2 gap {worst:.2e} (tol 1e-10), {secs:.1}s (limit 60s)"),
    )
}

// ------------------------------------------------------------ criteria 2 and 3

const MIXING_THRESHOLD: f64 = 0.05;

fn bernoulli_chains(seed: u64) -> Vec<(String, ChainSpec)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = Window::new(0, 2).unwrap();
    let mut table = |scale: f64| (0..8).map(|_| c(scale * rng.gen::<f64>(), 0.0)).collect::<Vec<_>>();
    let mut rank_two = || {
        let pairs = (0..2)
            .map(|_| (FunctionRep::cylinder(w, table(1.0)).unwrap(), FunctionRep::cylinder(w, table(1.0)).unwrap()))
            .collect();
        OperatorSpec::finite_rank(pairs).unwrap()
    };
    let ops = [rank_two(), rank_two()];
    // mean-2 input on [0,3]: values 2 + (antisymmetric zero-mean perturbation)
    let fw = Window::new(0, 3).unwrap();
    let mut frng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let half: Vec<f64> = (0..8).map(|_| frng.gen_range(-1.0..1.0)).collect();
    let f_table: Vec<C64> = (0..16).map(|i| c(2.0 + if i < 8 { half[i] } else { -half[i - 8] }, 0.0)).collect();
    let f = FunctionRep::cylinder(fw, f_table).unwrap();
    assert!((mean(&f) - c(2.0, 0.0)).norm() < 1e-12);
    let sys = SystemDescriptor::bernoulli_shift();
    let configs: [(usize, &[usize]); 4] = [(1, &[1, 1]), (2, &[1, 2]), (1, &[1, 1, 1]), (2, &[1, 2, 1])];
    configs
        .iter()
        .map(|&(k, alpha)| {
            let chain = ChainSpec::uniform(k, alpha, sys.clone(), ops[..alpha.len() - 1].to_vec(), f.clone()).unwrap();
            (format!("m={} k={k} alpha={alpha:?}", alpha.len()), chain)
        })
        .collect()
}

fn mixing_limit(poly: Option<ExponentPoly>) -> Outcome {
    let start = Instant::now();
    let opts = EngineOptions::default();
    let schedule = [1u64 << 6, 1 << 8, 1 << 10, 1 << 12];
    let points = SamplePoints::Sequences { seed: 64, count: 64 };
    let mut lines = Vec::new();
    let mut ok = true;
    for (label, chain) in bernoulli_chains(2024) {
        let chain = match &poly {
            Some(p) => chain.clone().with_polys(vec![p.clone(); chain.k()]).unwrap(),
            None => chain,
        };
        let limit = mean(&predicted_limit_weak_mixing(&chain).map_err(|e| e.to_string())?);
        let mut dist = Vec::new();
        for &n in &schedule {
            let vals = entangled_average_terms(&chain, n, Strategy::Cached, &opts)
                .and_then(|s| s.eval_at(&points))
                .map_err(|e| format!("{label} N={n}: {e}"))?;
            dist.push(vals.iter().map(|v| (v - limit).norm()).fold(0.0, f64::max));
        }
        let good = nonincreasing(&dist) && *dist.last().unwrap() <= MIXING_THRESHOLD;
        ok &= good;
        lines.push(format!("{label}: limit {:.4} sup dist {}", limit.re, fmt(&dist)));
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 300.0;
    check(ok, format!("threshold {MIXING_THRESHOLD}, {secs:.1}s; {}", lines.join("; ")))
}

// ---------------------------------------------------------------- criterion 4

fn discrete_spectrum() -> Outcome {
    let opts = EngineOptions::default();
    let schedule: Vec<u64> = (0..5).map(|i| 1u64 << (6 + 2 * i)).collect();
    let f = FunctionRep::fourier_modes(
        32,
        &[(0, c(1.0, 0.0)), (1, c(0.5, 0.25)), (-1, c(0.3, 0.0)), (3, c(0.0, 0.4)), (-7, c(0.2, -0.1))],
    )
    .unwrap();
    let mut ok = true;
    let mut lines = Vec::new();
    for (k, alpha) in [(1usize, vec![1usize, 1]), (2, vec![1, 2])] {
        let chain = ChainSpec::uniform(
            k,
            &alpha,
            SystemDescriptor::golden_rotation(32),
            vec![OperatorSpec::volterra(1)],
            f.clone(),
        )
        .unwrap();
        let limit = predicted_limit_resonance(&chain).map_err(|e| e.to_string())?;
        let dist: Vec<f64> = schedule
            .iter()
            .map(|&n| entangled_average(&chain, n, Strategy::Cached, &opts).map(|a| l2(&a, &limit)))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let good = *dist.last().unwrap() <= 1e-2 && nonincreasing(&dist[dist.len() - 3..]);
        ok &= good;
        lines.push(format!("k={k}: L2 dist {} at N={schedule:?}", fmt(&dist)));
    }
    check(ok, lines.join("; "))
}

// ---------------------------------------------------------------- criterion 5

fn stable_part_decay() -> Outcome {
    let opts = EngineOptions::default();
    let chain = ChainSpec::uniform(
        1,
        &[1, 1],
        SystemDescriptor::doubling(64),
        vec![OperatorSpec::volterra(1)],
        FunctionRep::basis(64, 1).unwrap(),
    )
    .unwrap();
    let points = SamplePoints::grid_lattice(512, 64);
    let schedule = [1u64 << 6, 1 << 8, 1 << 10, 1 << 12];
    let mut sups = Vec::new();
    let mut per_point: Vec<Vec<f64>> = Vec::new();
    for &n in &schedule {
        let v = entangled_average_abs_at(&chain, n, &points, &opts).map_err(|e| e.to_string())?;
        sups.push(v.iter().copied().fold(0.0, f64::max));
        per_point.push(v);
    }
    let pointwise_decrease =
        (0..points.len()).all(|i| per_point.windows(2).all(|w| w[1][i] <= w[0][i]));
    check(
        nonincreasing(&sups) && pointwise_decrease && *sups.last().unwrap() <= 0.05,
        format!(
            "max over 64 lattice points {} (tol 0.05); doubling truncated at K=64 leaves T^n e_1 = 0 for n >= {}",
            fmt(&sups),
            SystemDescriptor::mixing_horizon(64)
        ),
    )
}

// ---------------------------------------------------------------- criterion 6

fn volterra_probes() -> Outcome {
    let sys = SystemDescriptor::doubling(64);
    let e1 = FunctionRep::basis(64, 1).unwrap();
    let tests = vec![e1.clone(), e1.add(&FunctionRep::basis(64, 3).unwrap()).unwrap()];
    let mut ok = true;
    let mut lines = Vec::new();
    for d in [1u32, 2] {
        let op = OperatorSpec::volterra(d);
        for (fi, f) in tests.iter().enumerate() {
            let res: Vec<f64> = [1usize, 2, 4, 8, 16]
                .iter()
                .map(|&dim| probe_twisted_compactness(&op, &sys, f, dim, 64).map(|r| r.max_residual_sup))
                .collect::<Result<_, _>>()
                .map_err(|e| e.to_string())?;
            ok &= nonincreasing(&res) && res[4] <= 0.1;
            lines.push(format!("d={d} f#{fi}: {}", fmt(&res)));
        }
    }
    let ops = [OperatorSpec::volterra(1), OperatorSpec::volterra(2)];
    let bound = probe_joint_bound(&ops, &[sys.clone(), sys], &tests, 64).map_err(|e| e.to_string())?;
    ok &= bound.is_finite() && bound <= 4.0;
    check(ok, format!("residuals over dims [1,2,4,8,16]: {}; joint bound {bound:.4} (tol 4)", lines.join("; ")))
}

// ---------------------------------------------------------------- criterion 7

fn continuous_engine() -> Outcome {
    let opts = EngineOptions::default();
    let horizon = 1024.0;
    let steps = [0.25, 0.125, 0.0625, 0.03125];
    let f = FunctionRep::fourier_modes(4, &[(0, c(1.5, 0.0)), (1, c(0.5, -0.5)), (-3, c(0.25, 0.0))]).unwrap();
    let g = FunctionRep::fourier_modes(4, &[(0, c(1.0, 0.0)), (2, c(0.5, 0.0))]).unwrap();
    let flow = SystemDescriptor::torus_flow(GOLDEN_MEAN, 4).unwrap();
    let configs = [
        ("m=2", vec![1usize, 2], vec![OperatorSpec::volterra(1)]),
        ("m=3", vec![1, 2, 3], vec![OperatorSpec::volterra(1), OperatorSpec::Multiplication { g }]),
    ];
    let mut ok = true;
    let mut lines = Vec::new();
    for (label, alpha, ops) in configs {
        let chain = ChainSpec::uniform(alpha.len(), &alpha, flow.clone(), ops, f.clone())
            .and_then(ChainSpec::into_continuous)
            .map_err(|e| e.to_string())?;
        let limit = predicted_limit_projection_chain(&chain).map_err(|e| e.to_string())?;
        let avgs: Vec<FunctionRep> = steps
            .iter()
            .map(|&h| flow_entangled_average(&chain, horizon, h, &opts))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        // gap between step h and h/2, fitted through the origin
        let gaps: Vec<f64> = avgs.windows(2).map(|w| l2(&w[0], &w[1])).collect();
        let hs = &steps[..gaps.len()];
        let slope = gaps.iter().zip(hs).map(|(d, h)| d * h).sum::<f64>() / hs.iter().map(|h| h * h).sum::<f64>();
        let within = gaps.iter().zip(hs).all(|(d, h)| *d <= 2.0 * slope * h);
        let dist = l2(avgs.last().unwrap(), &limit);
        ok &= within && dist <= 1e-2;
        lines.push(format!("{label}: h-gaps {} slope {slope:.3e}, dist to limit {dist:.3e}", fmt(&gaps)));
    }
    check(ok, format!("horizon {horizon}, steps {steps:?}; {}", lines.join("; ")))
}

// ---------------------------------------------------------------- criterion 8

fn weights_and_classes() -> Outcome {
    let mut failures = Vec::new();
    let mut expect = |name: &str, ok: bool| {
        if !ok {
            failures.push(name.to_string());
        }
    };
    let one = c(1.0, 0.0);
    let lam = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * 0.3);
    let squares: Vec<C64> = (1..=1usize << 16)
        .map(|i| {
            let r = (i as f64).sqrt().round() as usize;
            c((r * r == i) as u8 as f64, 0.0)
        })
        .collect();

    let ones = Sequence::Weight { weight: WeightSequence::constant(one) };
    expect("class_N(1) false", !is_class_n(&ones, 4096, 0.01).unwrap().member);
    let geo = Sequence::Weight { weight: almost_periodic_weight(vec![(lam, one)]).unwrap() };
    expect("class_N(lambda^n) false", !is_class_n(&geo, 4096, 0.01).unwrap().member);
    expect(
        "class_N(squares) true",
        is_class_n(&Sequence::Explicit { values: squares.clone() }, 1 << 16, 0.01).unwrap().member,
    );

    let w1 = almost_periodic_weight(vec![(one, one)]).unwrap();
    expect("weight [(1,1)] constant", (1..50).all(|n| w1.value(n) == one));
    let g = C64::from_polar(1.0, 0.9);
    let p = almost_periodic_weight(vec![(g, one)]).unwrap().product(&almost_periodic_weight(vec![(g.conj(), one)]).unwrap()).unwrap();
    expect("product with conjugate is 1", (1..50).all(|n| (p.value(n) - one).norm() < 1e-12));
    let w = almost_periodic_weight(vec![(c(0.0, 1.0), one), (c(0.0, -1.0), one)]).unwrap();
    expect(
        "i^n + (-i)^n",
        w.value(1).norm() < 1e-12 && (w.value(2) + 2.0).norm() < 1e-12 && (w.value(4) - 2.0).norm() < 1e-12,
    );
    expect("non-unimodular rejected", almost_periodic_weight(vec![(c(1.5, 0.0), one)]).is_err());

    let zeros = density_one_subsequence(&vec![c(0.0, 0.0); 64], 1e-12);
    expect("density zeros", zeros.indices.len() == 64 && zeros.densities.iter().all(|d| d.1 == 1.0));
    let ones_d = density_one_subsequence(&vec![one; 64], 0.5);
    expect("density ones", ones_d.indices.is_empty() && ones_d.densities.iter().all(|d| d.1 == 0.0));
    let sq = density_one_subsequence(&squares, 0.5);
    let ds: Vec<f64> = sq.densities.iter().map(|d| d.1).collect();
    expect(
        "density squares -> 1",
        sq.indices.len() == squares.len() - 256
            && ds.windows(2).all(|w| w[1] >= w[0])
            && *ds.last().unwrap() > 0.99,
    );

    expect("geometric lambda=1", geometric_cesaro(one, 37) == one);
    expect("geometric lambda=-1 N even", geometric_cesaro(c(-1.0, 0.0), 10).norm() < 1e-15);
    expect("geometric lambda=i N=3", (geometric_cesaro(c(0.0, 1.0), 3) - c(-1.0 / 3.0, 0.0)).norm() < 1e-15);

    // dichotomy at N = 2^12 on rotation eigenfunctions
    let rot = SystemDescriptor::golden_rotation(4);
    let n = 1 << 12;
    let mut gaps = Vec::new();
    for j in [1i64, 2, -3] {
        let h = FunctionRep::basis(4, j).unwrap();
        let lambda = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 * GOLDEN_MEAN);
        let res = weighted_birkhoff_average(&rot, &almost_periodic_weight(vec![(lambda.conj(), one)]).unwrap(), &h, n)
            .unwrap();
        let non = weighted_birkhoff_average(&rot, &WeightSequence::constant(one), &h, n).unwrap();
        gaps.push(l2(&res, &h).max(norm(&non, Norm::L2)));
    }
    let worst = gaps.iter().copied().fold(0.0, f64::max);
    expect("weighted Birkhoff dichotomy", worst <= 1e-2);
    let avg = weighted_birkhoff_average(&rot, &WeightSequence::constant(one), &FunctionRep::one(Shape::Fourier { cutoff: 4 }).unwrap(), 10).unwrap();
    expect("weighted Birkhoff of 1", l2(&avg, &FunctionRep::one(Shape::Fourier { cutoff: 4 }).unwrap()) < 1e-12);

    if failures.is_empty() {
        Ok(format!("all examples hold; dichotomy worst gap {worst:.2e} (tol 1e-2)"))
    } else {
        Err(format!("failed: {}", failures.join(", ")))
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("oracle equivalence", oracle_equivalence),
        ("weak-mixing limit", || mixing_limit(None)),
        ("polynomial exponents n^2+n", || mixing_limit(Some(ExponentPoly::new(vec![0, 1, 1]).unwrap()))),
        ("discrete spectrum", discrete_spectrum),
        ("stable-part decay", stable_part_decay),
        ("volterra probes", volterra_probes),
        ("continuous engine", continuous_engine),
        ("weights and classes", weights_and_classes),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {} ({name}) [{secs:.1}s]: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {} ({name}) [{secs:.1}s]: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
