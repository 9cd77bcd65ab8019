//! The subcommands. Each returns whether its checks passed; errors are
//! configuration or I/O problems.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use entangled_core::engine::{run_schedule, Distance, DistanceBasis, EngineOptions, RunRequest, DEFAULT_CACHE_BYTES};
use entangled_core::limits::{density_one_subsequence, is_class_n, predict, Sequence, WeightSequence};
use entangled_core::operators::{probe_joint_bound, probe_twisted_compactness};
use entangled_core::oracle::{fixture_paths, generate_fixture, load_fixture, regenerate_fixture, save_fixture};
use entangled_core::space::{inner_product, norm, SamplePoints};
use entangled_core::systems::jgl_decompose;
use entangled_core::{FunctionRep, Norm};
use serde::Serialize;
use serde_json::json;

use crate::config::{self, DecomposeConfig, ExperimentConfig, ProbeConfig, SampleSpec, WeightsConfig};

/// Settings from flags or the environment; they override the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub workers: Option<usize>,
    pub cache_mb: Option<usize>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

/// Result of a subcommand whose inputs were valid.
#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub passed: bool,
    pub out_dir: PathBuf,
}

fn out_dir(flag: &Option<PathBuf>, config: &Option<PathBuf>, config_path: &Path) -> Result<PathBuf> {
    let dir = flag.clone().or_else(|| config.clone()).unwrap_or_else(|| {
        let stem = config_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        PathBuf::from("results").join(stem)
    });
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn csv_writer(path: &Path, header: &str) -> Result<BufWriter<File>> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    writeln!(w, "{header}")?;
    Ok(w)
}

#[derive(Serialize)]
struct CheckLine {
    name: String,
    pass: bool,
    detail: String,
}

fn check(name: &str, pass: bool, detail: String) -> CheckLine {
    CheckLine { name: name.into(), pass, detail }
}

fn sample_points(spec: &Option<SampleSpec>, seed: Option<u64>, f: &FunctionRep) -> Option<SamplePoints> {
    match spec {
        Some(SampleSpec::Seeded { count, seed: s }) => Some(SamplePoints::seeded(&f.shape(), *count, seed.unwrap_or(*s))),
        Some(SampleSpec::Explicit { points }) => Some(points.clone()),
        None => None,
    }
}

/// `run <config>`: averages along the schedule, distances to the predicted
/// limit, `report.json`, `convergence.csv`, `timings.csv` and, with sample
/// points, `samples.csv`.
pub fn run(config_path: &Path, ov: &Overrides) -> Result<Verdict> {
    let cfg: ExperimentConfig = config::load(config_path)?;
    cfg.validate()?;
    let dir = out_dir(&ov.out, &cfg.output, config_path)?;
    let schedule = cfg.schedule.points()?;
    let workers = ov.workers.or(cfg.workers);
    let cache_mb = ov.cache_mb.or(cfg.cache_mb);
    let options = EngineOptions {
        workers,
        cache_bytes: cache_mb.map_or(DEFAULT_CACHE_BYTES, |mb| mb.saturating_mul(1 << 20)),
    };
    let predicted = predict(cfg.predictor, &cfg.chain)?;
    let points = sample_points(&cfg.samples, ov.seed, cfg.chain.input());

    let mut convergence = csv_writer(&dir.join("convergence.csv"), "n,sup_distance,l2_distance")?;
    let mut timings = csv_writer(&dir.join("timings.csv"), "n,wall_seconds")?;
    let mut samples = match &points {
        Some(_) => Some(csv_writer(&dir.join("samples.csv"), "n,point,re,im")?),
        None => None,
    };

    let mut distances: Vec<Distance> = Vec::new();
    let mut basis: Option<DistanceBasis> = None;
    let mut error: Option<anyhow::Error> = None;
    let mut completed = 0;
    for &point in &schedule {
        let req = RunRequest {
            chain: &cfg.chain,
            schedule: &[point],
            mode: cfg.mode,
            strategy: cfg.strategy,
            options: options.clone(),
            points: points.as_ref(),
            predicted: predicted.as_ref(),
        };
        let res = match run_schedule(&req) {
            Ok(r) => r,
            Err(e) => {
                error = Some(anyhow::Error::new(e).context(format!("schedule point {point}")));
                break;
            }
        };
        let d = res.distances.as_ref().and_then(|d| d.first().copied());
        match d {
            Some(d) => writeln!(convergence, "{point},{},{}", d.sup, d.l2)?,
            None => writeln!(convergence, "{point},,")?,
        }
        writeln!(timings, "{point},{}", res.wall_times[0])?;
        if let (Some(w), Some(values)) = (samples.as_mut(), res.sample_values.first()) {
            for (i, v) in values.iter().enumerate() {
                writeln!(w, "{point},{i},{},{}", v.re, v.im)?;
            }
        }
        convergence.flush()?;
        timings.flush()?;
        if let Some(w) = samples.as_mut() {
            w.flush()?;
        }
        distances.extend(d);
        basis = basis.or(res.distance_basis);
        completed += 1;
    }

    let mut checks = Vec::new();
    let c = &cfg.checks;
    if error.is_none() && (c.final_sup_at_most.is_some() || c.final_l2_at_most.is_some() || c.sup_nonincreasing) {
        if distances.is_empty() {
            checks.push(check("distances", false, "checks need a predictor".into()));
        }
        if let Some(last) = distances.last() {
            if let Some(t) = c.final_sup_at_most {
                checks.push(check("final_sup", last.sup <= t, format!("{:e} <= {t:e}", last.sup)));
            }
            if let Some(t) = c.final_l2_at_most {
                checks.push(check("final_l2", last.l2 <= t, format!("{:e} <= {t:e}", last.l2)));
            }
            if c.sup_nonincreasing {
                let ok = distances.windows(2).all(|w| w[1].sup <= w[0].sup);
                checks.push(check("sup_nonincreasing", ok, format!("{} points", distances.len())));
            }
        }
    }
    let passed = checks.iter().all(|c| c.pass);
    let report = json!({
        "schema_version": config::SCHEMA_VERSION,
        "config": cfg,
        "effective": { "workers": workers, "cache_mb": cache_mb, "seed": ov.seed, "out": dir },
        "schedule": schedule,
        "completed_points": completed,
        "predicted_limit": predicted,
        "distance_basis": basis,
        "distances": distances,
        "checks": checks,
        "error": error.as_ref().map(|e| format!("{e:#}")),
    });
    write_json(&dir.join("report.json"), &report)?;
    for c in &checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if let Some(e) = error {
        return Err(e);
    }
    Ok(Verdict { passed, out_dir: dir })
}

/// `decompose <config>`: the reversible and stable parts of `f`.
pub fn decompose(config_path: &Path, ov: &Overrides) -> Result<Verdict> {
    let cfg: DecomposeConfig = config::load(config_path)?;
    let dir = out_dir(&ov.out, &cfg.output, config_path)?;
    let (r, s) = jgl_decompose(&cfg.system, &cfg.f)?;
    let overlap = inner_product(&r, &s)?.norm();
    let rebuild = norm(&r.add(&s)?.sub(&cfg.f)?, Norm::L2);
    let checks = vec![
        check("orthogonal", overlap <= 1e-10, format!("|<f_r, f_s>| = {overlap:e}")),
        check("sum", rebuild <= 1e-10, format!("|f_r + f_s - f| = {rebuild:e}")),
    ];
    let passed = checks.iter().all(|c| c.pass);
    write_json(
        &dir.join("decompose.json"),
        &json!({
            "schema_version": config::SCHEMA_VERSION,
            "config": cfg,
            "reversible": r,
            "stable": s,
            "norms": { "reversible_l2": norm(&r, Norm::L2), "stable_l2": norm(&s, Norm::L2) },
            "checks": checks,
        }),
    )?;
    println!("reversible L2 {:e}, stable L2 {:e}", norm(&r, Norm::L2), norm(&s, Norm::L2));
    Ok(Verdict { passed, out_dir: dir })
}

/// `probe <config>`: residuals over the requested dims, optional joint bound.
pub fn probe(config_path: &Path, ov: &Overrides) -> Result<Verdict> {
    let cfg: ProbeConfig = config::load(config_path)?;
    let dir = out_dir(&ov.out, &cfg.output, config_path)?;
    anyhow::ensure!(!cfg.dims.is_empty(), "dims is empty");
    let mut csv = csv_writer(&dir.join("probe.csv"), "dim,max_residual_sup,residual_sup_exact_dim,joint_bound_estimate")?;
    let mut reports = Vec::new();
    for &dim in &cfg.dims {
        let r = probe_twisted_compactness(&cfg.operator, &cfg.system, &cfg.f, dim, cfg.n_max)?;
        writeln!(csv, "{dim},{},{},{}", r.max_residual_sup, r.residual_sup_exact_dim, r.joint_bound_estimate)?;
        reports.push(r);
    }
    csv.flush()?;
    let residuals: Vec<f64> = reports.iter().map(|r| r.max_residual_sup).collect();
    let mut checks = vec![check(
        "residual_nonincreasing",
        residuals.windows(2).all(|w| w[1] <= w[0]),
        format!("{residuals:?}"),
    )];
    if let Some(t) = cfg.final_residual_at_most {
        let last = *residuals.last().unwrap_or(&f64::INFINITY);
        checks.push(check("final_residual", last <= t, format!("{last:e} <= {t:e}")));
    }
    let joint = match &cfg.joint {
        Some(j) => {
            let c = probe_joint_bound(&j.operators, &j.systems, &j.test_functions, cfg.n_max)?;
            if let Some(t) = j.at_most {
                checks.push(check("joint_bound", c.is_finite() && c <= t, format!("{c:e} <= {t:e}")));
            }
            Some(c)
        }
        None => None,
    };
    let passed = checks.iter().all(|c| c.pass);
    write_json(
        &dir.join("probe.json"),
        &json!({
            "schema_version": config::SCHEMA_VERSION,
            "config": cfg,
            "reports": reports,
            "joint_bound": joint,
            "checks": checks,
        }),
    )?;
    for c in &checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(Verdict { passed, out_dir: dir })
}

/// `fixtures <dir>`: regenerate every stored fixture and compare. With
/// `update`, rewrite the stored references instead.
pub fn fixtures(dir: &Path, update: bool) -> Result<Verdict> {
    let paths = fixture_paths(dir)?;
    anyhow::ensure!(!paths.is_empty(), "no fixture files in {}", dir.display());
    let mut passed = true;
    for path in paths {
        let fx = load_fixture(&path)?;
        if update {
            let fresh = generate_fixture(&fx.name, fx.seed, fx.config.clone(), fx.schedule.clone())?;
            save_fixture(&fresh, &path)?;
            println!("UPDATED {}", fx.name);
            continue;
        }
        match regenerate_fixture(&fx) {
            Ok(r) => {
                passed &= r.pass;
                println!("{} {}: max |diff| {:e}", if r.pass { "PASS" } else { "FAIL" }, r.name, r.max_abs_diff);
            }
            Err(e) => {
                passed = false;
                println!("FAIL {}: {e}", fx.name);
            }
        }
    }
    Ok(Verdict { passed, out_dir: dir.to_path_buf() })
}

/// `weights <config>`: class-𝒩 curve and, for explicit sequences, the
/// small-value index set.
pub fn weights(config_path: &Path, ov: &Overrides) -> Result<Verdict> {
    let mut cfg: WeightsConfig = config::load(config_path)?;
    if let Sequence::Weight { weight } = &cfg.sequence {
        // rebuild through the checked constructor to validate and tag it
        let mut w: WeightSequence = entangled_core::limits::almost_periodic_weight(weight.terms.clone())?;
        w.horizon = weight.horizon;
        cfg.sequence = Sequence::Weight { weight: w };
    }
    let dir = out_dir(&ov.out, &cfg.output, config_path)?;
    let report = is_class_n(&cfg.sequence, cfg.n_max, cfg.tol)?;
    let mut csv = csv_writer(&dir.join("class_n.csv"), "n,cesaro_abs_mean")?;
    for (n, v) in &report.curve {
        writeln!(csv, "{n},{v}")?;
    }
    csv.flush()?;
    let density = match (&cfg.sequence, cfg.density_tol) {
        (Sequence::Explicit { values }, Some(t)) => Some(density_one_subsequence(values, t)),
        _ => None,
    };
    let mut checks = Vec::new();
    if let Some(want) = cfg.expect_member {
        checks.push(check("class_n", report.member == want, format!("member = {}, expected {want}", report.member)));
    }
    let passed = checks.iter().all(|c| c.pass);
    write_json(
        &dir.join("weights.json"),
        &json!({
            "schema_version": config::SCHEMA_VERSION,
            "config": cfg,
            "class_n": report,
            "density": density.as_ref().map(|d| json!({
                "count": d.indices.len(),
                "densities": d.densities,
                "class_n_warning": d.class_n_warning,
            })),
            "checks": checks,
        }),
    )?;
    println!("class N member: {} (final Cesàro mean {:e})", report.member, report.curve.last().map_or(f64::NAN, |c| c.1));
    for c in &checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(Verdict { passed, out_dir: dir })
}
