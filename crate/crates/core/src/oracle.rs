//! Closed forms and stored reference values.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{brute_force_average, ChainSpec};
use crate::error::{Error, Result};
use crate::operators::OperatorSpec;
use crate::space::{FunctionRep, C64};
use crate::systems::SystemDescriptor;

pub const GENERATOR_VERSION: u32 = 1;
pub const FIXTURE_TOL: f64 = 1e-10;

/// `(1/N) Σ_{n=1}^N λ^n` in closed form.
pub fn geometric_cesaro(lambda: C64, n: u64) -> C64 {
    if (lambda - 1.0).norm() == 0.0 {
        return C64::new(1.0, 0.0);
    }
    let power = if lambda.norm() == 1.0 || (lambda.norm() - 1.0).abs() < 1e-12 {
        crate::systems::turn(n as f64, lambda.arg() / (2.0 * std::f64::consts::PI)) * lambda.norm().powf(n as f64)
    } else {
        lambda.powf(n as f64)
    };
    lambda * (power - 1.0) / (lambda - 1.0) / n as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FixtureConfig {
    /// Finite cyclic chain with seeded random matrices between the slots.
    SeededCyclic { q: usize, k: usize, alpha: Vec<usize> },
    /// An explicit chain of finite cyclic systems.
    Chain { chain: ChainSpec },
    GeometricCesaro { lambdas: Vec<C64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledValue {
    pub label: String,
    pub value: C64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fixture {
    pub name: String,
    pub generator_version: u32,
    pub seed: u64,
    pub config: FixtureConfig,
    pub schedule: Vec<u64>,
    pub reference: Vec<LabeledValue>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixtureReport {
    pub name: String,
    pub max_abs_diff: f64,
    pub pass: bool,
}

/// Random matrices with entries of modulus at most 1.
pub fn seeded_cyclic_chain(seed: u64, q: usize, k: usize, alpha: &[usize]) -> Result<ChainSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entry = |rng: &mut ChaCha8Rng| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) / 2f64.sqrt();
    let ops = (1..alpha.len())
        .map(|_| OperatorSpec::matrix((0..q).map(|_| (0..q).map(|_| entry(&mut rng)).collect()).collect()))
        .collect::<Result<Vec<_>>>()?;
    let f = FunctionRep::finite((0..q).map(|_| entry(&mut rng)).collect())?;
    ChainSpec::uniform(k, alpha, SystemDescriptor::finite_cyclic(q)?, ops, f)
}

fn compute(config: &FixtureConfig, seed: u64, schedule: &[u64]) -> Result<Vec<LabeledValue>> {
    let chain = match config {
        FixtureConfig::SeededCyclic { q, k, alpha } => Some(seeded_cyclic_chain(seed, *q, *k, alpha)?),
        FixtureConfig::Chain { chain } => Some(chain.clone()),
        FixtureConfig::GeometricCesaro { .. } => None,
    };
    let mut out = Vec::new();
    match (config, chain) {
        (_, Some(chain)) => {
            for &n in schedule {
                let avg = brute_force_average(&chain, n)?;
                for (x, v) in avg.data().iter().enumerate() {
                    out.push(LabeledValue { label: format!("N={n}/x={x}"), value: *v });
                }
            }
        }
        (FixtureConfig::GeometricCesaro { lambdas }, None) => {
            for (i, l) in lambdas.iter().enumerate() {
                for &n in schedule {
                    out.push(LabeledValue { label: format!("lambda[{i}]/N={n}"), value: geometric_cesaro(*l, n) });
                }
            }
        }
        _ => unreachable!("every config has a generator"),
    }
    Ok(out)
}

pub fn generate_fixture(name: &str, seed: u64, config: FixtureConfig, schedule: Vec<u64>) -> Result<Fixture> {
    let reference = compute(&config, seed, &schedule)?;
    Ok(Fixture { name: name.into(), generator_version: GENERATOR_VERSION, seed, config, schedule, reference })
}

/// Recompute the reference values and compare with the stored ones.
pub fn regenerate_fixture(fixture: &Fixture) -> Result<FixtureReport> {
    if fixture.generator_version != GENERATOR_VERSION {
        return Err(Error::Schema(format!(
            "fixture {} was generated by version {}, current is {GENERATOR_VERSION}",
            fixture.name, fixture.generator_version
        )));
    }
    let fresh = compute(&fixture.config, fixture.seed, &fixture.schedule)?;
    if fresh.len() != fixture.reference.len()
        || fresh.iter().zip(&fixture.reference).any(|(a, b)| a.label != b.label)
    {
        return Err(Error::Schema(format!("fixture {} labels no longer match its config", fixture.name)));
    }
    let max_abs_diff =
        fresh.iter().zip(&fixture.reference).map(|(a, b)| (a.value - b.value).norm()).fold(0.0, f64::max);
    Ok(FixtureReport { name: fixture.name.clone(), max_abs_diff, pass: max_abs_diff <= FIXTURE_TOL })
}

pub fn load_fixture(path: &Path) -> Result<Fixture> {
    let text = fs::read_to_string(path).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
}

pub fn save_fixture(fixture: &Fixture, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(fixture).map_err(|e| Error::Schema(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
}

/// Fixture files (`*.json`) in a directory, sorted by name.
pub fn fixture_paths(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::Schema(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    Ok(paths)
}

/// The fixtures shipped with the crate.
pub fn builtin_fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}
