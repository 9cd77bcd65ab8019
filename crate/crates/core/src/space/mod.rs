//! Functions on the concrete probability spaces used by the laboratory.
//!
//! Four representations are supported:
//!
//! * `Grid`: left-endpoint samples `f(i/M)` on `[0,1)` with measure `1/M` per sample.
//! * `Fourier`: coefficients of `e_j(x) = exp(2πi j x)` for `|j| <= K`.
//! * `Finite`: values on `Z_q` with the uniform measure.
//! * `Cylinder`: a function of the coordinates `lo..=hi` of the two-sided
//!   Bernoulli(1/2, 1/2) shift, tabulated over all bit patterns of the window.
//!
//! Cylinder tables are indexed with coordinate `lo` as the most significant bit,
//! so the pattern `(x_lo, ..., x_hi)` lives at `Σ x_c 2^(hi - c)`.

mod fft;
mod sample;

pub use sample::{evaluate_at, BitSequences, SamplePoints};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Largest admissible `hi - lo` for a cylinder window.
pub const MAX_WINDOW_SPAN: i64 = 30;

/// Integer coordinate window `[lo, hi]` of a cylinder function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Window {
    pub lo: i64,
    pub hi: i64,
}

impl Window {
    pub fn new(lo: i64, hi: i64) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidFunction(format!("window [{lo},{hi}] has lo > hi")));
        }
        if hi - lo > MAX_WINDOW_SPAN {
            return Err(Error::InvalidFunction(format!(
                "window [{lo},{hi}] spans {} coordinates, cap is {}",
                hi - lo + 1,
                MAX_WINDOW_SPAN + 1
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn width(&self) -> u32 {
        (self.hi - self.lo + 1) as u32
    }

    pub fn table_len(&self) -> usize {
        1usize << self.width()
    }

    pub fn shifted(&self, n: i64) -> Self {
        Self { lo: self.lo + n, hi: self.hi + n }
    }

    pub fn contains(&self, other: &Window) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn overlaps(&self, other: &Window) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    /// Smallest window containing both; fails when it would exceed the cap.
    pub fn hull(&self, other: &Window) -> Result<Window> {
        Window::new(self.lo.min(other.lo), self.hi.max(other.hi))
    }
}

/// Shape of a representation: its variant plus the size parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "rep", rename_all = "snake_case")]
pub enum Shape {
    Grid { resolution: usize },
    Fourier { cutoff: usize },
    Finite { q: usize },
    Cylinder { window: Window },
}

impl Shape {
    pub fn variant_name(&self) -> &'static str {
        match self {
            Shape::Grid { .. } => "grid",
            Shape::Fourier { .. } => "fourier",
            Shape::Finite { .. } => "finite",
            Shape::Cylinder { .. } => "cylinder",
        }
    }

    pub fn same_variant(&self, other: &Shape) -> bool {
        std::mem::discriminant(self) == std::mem::discriminant(other)
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Shape::Grid { resolution } if resolution < 2 => {
                Err(Error::InvalidFunction(format!("grid resolution {resolution} < 2")))
            }
            Shape::Finite { q } if q < 1 => Err(Error::InvalidFunction("finite q must be >= 1".into())),
            Shape::Cylinder { window } => Window::new(window.lo, window.hi).map(|_| ()),
            _ => Ok(()),
        }
    }

    /// Number of stored values for a function of this shape.
    pub fn len(&self) -> usize {
        match *self {
            Shape::Grid { resolution } => resolution,
            Shape::Fourier { cutoff } => 2 * cutoff + 1,
            Shape::Finite { q } => q,
            Shape::Cylinder { window } => window.table_len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Which discrete `L^p` norm to take.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Norm {
    L1,
    L2,
    Sup,
}

/// A function on one of the supported probability spaces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFunction", into = "RawFunction")]
pub enum FunctionRep {
    Grid { values: Vec<C64> },
    /// Coefficients for `j = -K..=K`, stored at index `j + K`.
    Fourier { coeffs: Vec<C64> },
    Finite { values: Vec<C64> },
    Cylinder { window: Window, table: Vec<C64> },
}

fn check_finite(values: &[C64]) -> Result<()> {
    if values.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidFunction("non-finite value".into()))
    }
}

impl FunctionRep {
    pub fn grid(values: Vec<C64>) -> Result<Self> {
        Shape::Grid { resolution: values.len() }.validate()?;
        check_finite(&values)?;
        Ok(FunctionRep::Grid { values })
    }

    pub fn grid_real(values: &[f64]) -> Result<Self> {
        Self::grid(values.iter().map(|&v| C64::new(v, 0.0)).collect())
    }

    /// Sample a closure at `x_i = i/M`.
    pub fn grid_from_fn(resolution: usize, f: impl Fn(f64) -> C64) -> Result<Self> {
        Self::grid((0..resolution).map(|i| f(i as f64 / resolution as f64)).collect())
    }

    pub fn fourier(coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() % 2 == 0 {
            return Err(Error::InvalidFunction(format!(
                "fourier coefficient vector must have odd length 2K+1, got {}",
                coeffs.len()
            )));
        }
        check_finite(&coeffs)?;
        Ok(FunctionRep::Fourier { coeffs })
    }

    /// Build a Fourier function from a sparse list of `(j, c_j)` modes.
    pub fn fourier_modes(cutoff: usize, modes: &[(i64, C64)]) -> Result<Self> {
        let mut coeffs = vec![C64::new(0.0, 0.0); 2 * cutoff + 1];
        for &(j, c) in modes {
            if j.unsigned_abs() as usize > cutoff {
                return Err(Error::InvalidFunction(format!("mode {j} exceeds cutoff {cutoff}")));
            }
            coeffs[(j + cutoff as i64) as usize] += c;
        }
        Self::fourier(coeffs)
    }

    /// The basis function `e_j` at cutoff `K`.
    pub fn basis(cutoff: usize, j: i64) -> Result<Self> {
        Self::fourier_modes(cutoff, &[(j, C64::new(1.0, 0.0))])
    }

    pub fn finite(values: Vec<C64>) -> Result<Self> {
        Shape::Finite { q: values.len() }.validate()?;
        check_finite(&values)?;
        Ok(FunctionRep::Finite { values })
    }

    pub fn finite_real(values: &[f64]) -> Result<Self> {
        Self::finite(values.iter().map(|&v| C64::new(v, 0.0)).collect())
    }

    pub fn cylinder(window: Window, table: Vec<C64>) -> Result<Self> {
        let window = Window::new(window.lo, window.hi)?;
        if table.len() != window.table_len() {
            return Err(Error::InvalidFunction(format!(
                "cylinder window [{},{}] needs {} table entries, got {}",
                window.lo,
                window.hi,
                window.table_len(),
                table.len()
            )));
        }
        check_finite(&table)?;
        Ok(FunctionRep::Cylinder { window, table })
    }

    pub fn zeros(shape: Shape) -> Result<Self> {
        Self::constant(shape, C64::new(0.0, 0.0))
    }

    pub fn one(shape: Shape) -> Result<Self> {
        Self::constant(shape, C64::new(1.0, 0.0))
    }

    /// The constant function `c` in the given shape.
    pub fn constant(shape: Shape, c: C64) -> Result<Self> {
        shape.validate()?;
        check_finite(&[c])?;
        Ok(match shape {
            Shape::Grid { resolution } => FunctionRep::Grid { values: vec![c; resolution] },
            Shape::Fourier { cutoff } => {
                let mut coeffs = vec![C64::new(0.0, 0.0); 2 * cutoff + 1];
                coeffs[cutoff] = c;
                FunctionRep::Fourier { coeffs }
            }
            Shape::Finite { q } => FunctionRep::Finite { values: vec![c; q] },
            Shape::Cylinder { window } => {
                FunctionRep::Cylinder { window, table: vec![c; window.table_len()] }
            }
        })
    }

    pub fn shape(&self) -> Shape {
        match self {
            FunctionRep::Grid { values } => Shape::Grid { resolution: values.len() },
            FunctionRep::Fourier { coeffs } => Shape::Fourier { cutoff: coeffs.len() / 2 },
            FunctionRep::Finite { values } => Shape::Finite { q: values.len() },
            FunctionRep::Cylinder { window, .. } => Shape::Cylinder { window: *window },
        }
    }

    /// Raw stored values (samples, coefficients or table).
    pub fn data(&self) -> &[C64] {
        match self {
            FunctionRep::Grid { values } | FunctionRep::Finite { values } => values,
            FunctionRep::Fourier { coeffs } => coeffs,
            FunctionRep::Cylinder { table, .. } => table,
        }
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        match self {
            FunctionRep::Grid { values } | FunctionRep::Finite { values } => values,
            FunctionRep::Fourier { coeffs } => coeffs,
            FunctionRep::Cylinder { table, .. } => table,
        }
    }

    pub fn cutoff(&self) -> Option<usize> {
        match self {
            FunctionRep::Fourier { coeffs } => Some(coeffs.len() / 2),
            _ => None,
        }
    }

    /// Fourier coefficient `c_j`; zero outside the cutoff.
    pub fn coeff(&self, j: i64) -> Option<C64> {
        let cutoff = self.cutoff()? as i64;
        if j.abs() > cutoff {
            return Some(C64::new(0.0, 0.0));
        }
        Some(self.data()[(j + cutoff) as usize])
    }

    pub fn is_zero(&self) -> bool {
        self.data().iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }

    pub fn scaled(&self, c: C64) -> Self {
        let mut out = self.clone();
        out.data_mut().iter_mut().for_each(|v| *v *= c);
        out
    }

    pub fn map_values(&self, op: impl Fn(C64) -> C64) -> Self {
        let mut out = self.clone();
        out.data_mut().iter_mut().for_each(|v| *v = op(*v));
        out
    }

    /// `self += c * other`. Cylinders on different windows are first widened to
    /// their hull, which must respect the window cap.
    pub fn axpy(&mut self, c: C64, other: &FunctionRep) -> Result<()> {
        if let (FunctionRep::Cylinder { window: w1, .. }, FunctionRep::Cylinder { window: w2, .. }) =
            (&*self, other)
        {
            if w1 != w2 {
                let hull = w1.hull(w2)?;
                if hull != *w1 {
                    *self = self.widen(hull)?;
                }
                let widened = other.widen(hull)?;
                return self.axpy(c, &widened);
            }
        }
        check_same_shape(self, other)?;
        for (a, b) in self.data_mut().iter_mut().zip(other.data()) {
            *a += c * b;
        }
        Ok(())
    }

    /// Elementwise `self += other` with no scaling; the summation primitive of
    /// the enumeration strategies.
    pub fn add_assign(&mut self, other: &FunctionRep) -> Result<()> {
        if self.shape() != other.shape() {
            return self.axpy(C64::new(1.0, 0.0), other);
        }
        for (a, b) in self.data_mut().iter_mut().zip(other.data()) {
            *a += b;
        }
        Ok(())
    }

    pub fn add(&self, other: &FunctionRep) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(C64::new(1.0, 0.0), other)?;
        Ok(out)
    }

    pub fn sub(&self, other: &FunctionRep) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(C64::new(-1.0, 0.0), other)?;
        Ok(out)
    }

    /// Re-tabulate a cylinder function on a larger window; new coordinates are ignored.
    pub fn widen(&self, target: Window) -> Result<Self> {
        let FunctionRep::Cylinder { window, table } = self else {
            return Err(Error::Conversion(format!("cannot widen a {} function", self.shape().variant_name())));
        };
        let target = Window::new(target.lo, target.hi)?;
        if !target.contains(window) {
            return Err(Error::Conversion(format!(
                "target window [{},{}] does not contain [{},{}]",
                target.lo, target.hi, window.lo, window.hi
            )));
        }
        let drop_low = (target.hi - window.hi) as u32;
        let mask = window.table_len() - 1;
        let table = (0..target.table_len()).map(|idx| table[(idx >> drop_low) & mask]).collect();
        Ok(FunctionRep::Cylinder { window: target, table })
    }

    /// Values on the uniform grid `i/M`. Fourier functions are synthesized
    /// exactly (modes fold modulo `M`); grids must already have resolution `M`.
    pub fn grid_values(&self, resolution: usize) -> Result<Vec<C64>> {
        match self {
            FunctionRep::Fourier { coeffs } => Ok(fft::synthesize(coeffs, resolution)),
            FunctionRep::Grid { values } if values.len() == resolution => Ok(values.clone()),
            _ => Err(Error::Conversion(format!(
                "no grid values at resolution {resolution} for a {} function",
                self.shape().variant_name()
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.shape().validate()?;
        if let FunctionRep::Fourier { coeffs } = self {
            if coeffs.len() % 2 == 0 {
                return Err(Error::InvalidFunction("fourier length must be odd".into()));
            }
        }
        check_finite(self.data())
    }
}

fn check_same_shape(f: &FunctionRep, g: &FunctionRep) -> Result<()> {
    let (a, b) = (f.shape(), g.shape());
    if a == b {
        Ok(())
    } else {
        Err(Error::Incompatible(format!("{a:?} vs {b:?}")))
    }
}

/// Number of points used to approximate the sup norm of a Fourier function.
pub fn sup_grid_points(cutoff: usize) -> usize {
    8 * cutoff + 8
}

/// The `L^2(μ)` inner product, conjugate-linear in the second argument.
///
/// Cylinder functions on different windows are compared on the hull of the
/// windows when they overlap; on disjoint windows the two functions depend on
/// disjoint coordinates and are independent under the product measure, so the
/// inner product factorizes into the product of means.
pub fn inner_product(f: &FunctionRep, g: &FunctionRep) -> Result<C64> {
    if let (FunctionRep::Cylinder { window: w1, .. }, FunctionRep::Cylinder { window: w2, .. }) = (f, g) {
        if w1 != w2 {
            if !w1.overlaps(w2) {
                return Ok(mean(f) * mean(g).conj());
            }
            let hull = w1.hull(w2)?;
            return inner_product(&f.widen(hull)?, &g.widen(hull)?);
        }
    }
    check_same_shape(f, g)?;
    let sum: C64 = f.data().iter().zip(g.data()).map(|(a, b)| a * b.conj()).sum();
    Ok(match f {
        FunctionRep::Fourier { .. } => sum,
        _ => sum / f.data().len() as f64,
    })
}

/// Discrete `L^p` norm under the representation's probability measure.
///
/// For Fourier functions the `L^2` norm is exact (Parseval) while `L^1` and
/// the sup norm are taken on a uniform grid of `8K + 8` points.
pub fn norm(f: &FunctionRep, p: Norm) -> f64 {
    let sampled;
    let values: &[C64] = match f {
        FunctionRep::Fourier { coeffs } => {
            if p == Norm::L2 {
                return coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            }
            sampled = fft::synthesize(coeffs, sup_grid_points(coeffs.len() / 2));
            &sampled
        }
        _ => f.data(),
    };
    let len = values.len() as f64;
    match p {
        Norm::L1 => values.iter().map(|v| v.norm()).sum::<f64>() / len,
        Norm::L2 => (values.iter().map(|v| v.norm_sqr()).sum::<f64>() / len).sqrt(),
        Norm::Sup => values.iter().map(|v| v.norm()).fold(0.0, f64::max),
    }
}

/// `⟨f, 1⟩`, the integral of `f`.
pub fn mean(f: &FunctionRep) -> C64 {
    match f {
        FunctionRep::Fourier { coeffs } => coeffs[coeffs.len() / 2],
        _ => f.data().iter().sum::<C64>() / f.data().len() as f64,
    }
}

/// Convert between representations.
///
/// Supported: Fourier to grid (evaluation), grid to Fourier (discrete
/// transform, `K <= M/2 - 1`), cylinder window widening, and the identity on
/// any shape.
pub fn convert(f: &FunctionRep, target: &Shape) -> Result<FunctionRep> {
    if f.shape() == *target {
        return Ok(f.clone());
    }
    match (f, *target) {
        (FunctionRep::Fourier { coeffs }, Shape::Grid { resolution }) => {
            target.validate()?;
            FunctionRep::grid(fft::synthesize(coeffs, resolution))
        }
        (FunctionRep::Grid { values }, Shape::Fourier { cutoff }) => {
            let m = values.len();
            if 2 * cutoff + 2 > m {
                return Err(Error::Resolution(format!(
                    "cutoff {cutoff} needs at least {} grid points, have {m}",
                    2 * cutoff + 2
                )));
            }
            FunctionRep::fourier(fft::analyze(values, cutoff))
        }
        (FunctionRep::Cylinder { .. }, Shape::Cylinder { window }) => f.widen(window),
        _ => Err(Error::Conversion(format!(
            "{} -> {} is not supported",
            f.shape().variant_name(),
            target.variant_name()
        ))),
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "rep", rename_all = "snake_case")]
enum RawFunction {
    Grid {
        resolution: usize,
        values: Vec<[f64; 2]>,
    },
    Fourier {
        cutoff: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        values: Option<Vec<[f64; 2]>>,
        /// Sparse alternative accepted on input: `[j, re, im]` triples.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        modes: Option<Vec<(i64, f64, f64)>>,
    },
    Finite {
        q: usize,
        values: Vec<[f64; 2]>,
    },
    Cylinder {
        window: [i64; 2],
        values: Vec<[f64; 2]>,
    },
}

fn pairs_to_complex(values: &[[f64; 2]]) -> Vec<C64> {
    values.iter().map(|[re, im]| C64::new(*re, *im)).collect()
}

fn complex_to_pairs(values: &[C64]) -> Vec<[f64; 2]> {
    values.iter().map(|c| [c.re, c.im]).collect()
}

fn expect_len(what: &str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Schema(format!("{what}: expected {expected} values, got {got}")))
    }
}

impl TryFrom<RawFunction> for FunctionRep {
    type Error = Error;

    fn try_from(raw: RawFunction) -> Result<Self> {
        match raw {
            RawFunction::Grid { resolution, values } => {
                expect_len("grid", resolution, values.len())?;
                FunctionRep::grid(pairs_to_complex(&values))
            }
            RawFunction::Fourier { cutoff, values, modes } => match (values, modes) {
                (Some(values), None) => {
                    expect_len("fourier", 2 * cutoff + 1, values.len())?;
                    FunctionRep::fourier(pairs_to_complex(&values))
                }
                (None, Some(modes)) => {
                    let modes: Vec<_> = modes.into_iter().map(|(j, re, im)| (j, C64::new(re, im))).collect();
                    FunctionRep::fourier_modes(cutoff, &modes)
                }
                _ => Err(Error::Schema("fourier needs exactly one of `values` or `modes`".into())),
            },
            RawFunction::Finite { q, values } => {
                expect_len("finite", q, values.len())?;
                FunctionRep::finite(pairs_to_complex(&values))
            }
            RawFunction::Cylinder { window, values } => {
                FunctionRep::cylinder(Window::new(window[0], window[1])?, pairs_to_complex(&values))
            }
        }
    }
}

impl From<FunctionRep> for RawFunction {
    fn from(f: FunctionRep) -> Self {
        match f {
            FunctionRep::Grid { values } => {
                RawFunction::Grid { resolution: values.len(), values: complex_to_pairs(&values) }
            }
            FunctionRep::Fourier { coeffs } => RawFunction::Fourier {
                cutoff: coeffs.len() / 2,
                values: Some(complex_to_pairs(&coeffs)),
                modes: None,
            },
            FunctionRep::Finite { values } => {
                RawFunction::Finite { q: values.len(), values: complex_to_pairs(&values) }
            }
            FunctionRep::Cylinder { window, table } => {
                RawFunction::Cylinder { window: [window.lo, window.hi], values: complex_to_pairs(&table) }
            }
        }
    }
}
