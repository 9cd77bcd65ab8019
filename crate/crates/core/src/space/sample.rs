use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{FunctionRep, Shape, Window, C64};
use crate::error::{Error, Result};

/// Seeded points of the two-sided binary shift space.
///
/// Coordinates are generated lazily: the bit at coordinate `c` of sample `s`
/// comes from a ChaCha stream keyed by `(seed, s)` at block `c div 64`, so a
/// shifted window `[a+n, b+n]` costs one or two block evaluations regardless
/// of `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitSequences {
    pub seed: u64,
    pub count: usize,
}

const BLOCK_OFFSET: i128 = 1 << 62;

impl BitSequences {
    pub fn new(seed: u64, count: usize) -> Self {
        Self { seed, count }
    }

    fn block(&self, sample: usize, block: i64) -> u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(sample as u64);
        rng.set_word_pos(((block as i128 + BLOCK_OFFSET) as u128) * 2);
        rng.next_u64()
    }

    pub fn bit(&self, sample: usize, coord: i64) -> u8 {
        let word = self.block(sample, coord.div_euclid(64));
        ((word >> coord.rem_euclid(64)) & 1) as u8
    }

    /// Table index of the bit pattern on `window` (coordinate `lo` most significant).
    pub fn pattern(&self, sample: usize, window: Window) -> usize {
        let mut idx = 0usize;
        let mut cached: Option<(i64, u64)> = None;
        for coord in window.lo..=window.hi {
            let b = coord.div_euclid(64);
            let word = match cached {
                Some((cb, w)) if cb == b => w,
                _ => {
                    let w = self.block(sample, b);
                    cached = Some((b, w));
                    w
                }
            };
            idx = (idx << 1) | ((word >> coord.rem_euclid(64)) & 1) as usize;
        }
        idx
    }
}

/// Points at which functions are evaluated pointwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "points", rename_all = "snake_case")]
pub enum SamplePoints {
    /// Points `x ∈ [0,1)` for grid and Fourier functions. A grid function is
    /// read at its left-endpoint sample `floor(x M)`.
    Unit { x: Vec<f64> },
    /// Sites of `Z_q`.
    Sites { sites: Vec<usize> },
    /// Seeded bit sequences for cylinder functions.
    Sequences { seed: u64, count: usize },
}

impl SamplePoints {
    pub fn len(&self) -> usize {
        match self {
            SamplePoints::Unit { x } => x.len(),
            SamplePoints::Sites { sites } => sites.len(),
            SamplePoints::Sequences { count, .. } => *count,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `count` evenly spaced lattice points `floor(i M / count) / M` of a grid.
    pub fn grid_lattice(resolution: usize, count: usize) -> Self {
        let x = (0..count)
            .map(|i| (i * resolution / count) as f64 / resolution as f64)
            .collect();
        SamplePoints::Unit { x }
    }

    /// Seeded random points appropriate for the given shape.
    pub fn seeded(shape: &Shape, count: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match *shape {
            Shape::Grid { resolution } => SamplePoints::Unit {
                x: (0..count).map(|_| rng.gen_range(0..resolution) as f64 / resolution as f64).collect(),
            },
            Shape::Fourier { .. } => SamplePoints::Unit { x: (0..count).map(|_| rng.gen::<f64>()).collect() },
            Shape::Finite { q } => SamplePoints::Sites { sites: (0..count).map(|_| rng.gen_range(0..q)).collect() },
            Shape::Cylinder { .. } => SamplePoints::Sequences { seed, count },
        }
    }
}

/// Evaluate `f` at every sample point.
pub fn evaluate_at(f: &FunctionRep, points: &SamplePoints) -> Result<Vec<C64>> {
    match (f, points) {
        (FunctionRep::Grid { values }, SamplePoints::Unit { x }) => {
            let m = values.len();
            Ok(x.iter()
                .map(|&x| values[((x * m as f64 + 1e-9).floor() as i64).rem_euclid(m as i64) as usize])
                .collect())
        }
        (FunctionRep::Fourier { coeffs }, SamplePoints::Unit { x }) => {
            let cutoff = (coeffs.len() / 2) as i64;
            Ok(x.iter()
                .map(|&x| {
                    let step = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * x);
                    let mut phase = C64::from_polar(1.0, -2.0 * std::f64::consts::PI * x * cutoff as f64);
                    let mut acc = C64::new(0.0, 0.0);
                    for c in coeffs {
                        acc += c * phase;
                        phase *= step;
                    }
                    acc
                })
                .collect())
        }
        (FunctionRep::Finite { values }, SamplePoints::Sites { sites }) => sites
            .iter()
            .map(|&s| {
                values
                    .get(s)
                    .copied()
                    .ok_or_else(|| Error::InvalidArgument(format!("site {s} outside Z_{}", values.len())))
            })
            .collect(),
        (FunctionRep::Cylinder { window, table }, SamplePoints::Sequences { seed, count }) => {
            let seqs = BitSequences::new(*seed, *count);
            Ok((0..*count).map(|s| table[seqs.pattern(s, *window)]).collect())
        }
        _ => Err(Error::Incompatible(format!(
            "cannot evaluate a {} function at {:?} points",
            f.shape().variant_name(),
            std::mem::discriminant(points)
        ))),
    }
}
