//! Writes the reference fixtures shipped in `fixtures/`.

use entangled_core::oracle::{builtin_fixture_dir, generate_fixture, save_fixture, FixtureConfig};
use entangled_core::C64;

fn main() -> entangled_core::Result<()> {
    let dir = builtin_fixture_dir();
    let fixtures = [
        generate_fixture(
            "cyclic_q4_m3_k2",
            20240611,
            FixtureConfig::SeededCyclic { q: 4, k: 2, alpha: vec![1, 2, 1] },
            vec![8],
        )?,
        generate_fixture(
            "cyclic_q5_m2_k1",
            7,
            FixtureConfig::SeededCyclic { q: 5, k: 1, alpha: vec![1, 1] },
            vec![1, 5, 12],
        )?,
        generate_fixture(
            "geometric_cesaro",
            0,
            FixtureConfig::GeometricCesaro {
                lambdas: vec![C64::new(0.0, 1.0), C64::new(-1.0, 0.0), C64::from_polar(1.0, 1.0), C64::new(0.5, 0.25)],
            },
            vec![1, 3, 10, 1000],
        )?,
    ];
    for fx in &fixtures {
        save_fixture(fx, &dir.join(format!("{}.json", fx.name)))?;
    }
    Ok(())
}
