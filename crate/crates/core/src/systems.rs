//! Measure-preserving maps and flows, their Koopman action `Sg = g ∘ S`, and
//! the spectral metadata of the reversible part.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{mean, FunctionRep, Shape, Window, C64};

/// `frac((√5 − 1)/2)`, the default irrational rotation number.
pub const GOLDEN_MEAN: f64 = 0.618_033_988_749_894_9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemKind {
    /// `x ↦ x + θ mod 1`.
    Rotation { theta: f64 },
    /// `x ↦ 2x mod 1`.
    Doubling,
    /// `x ↦ x + 1 mod q` on `Z_q`.
    FiniteCyclic { q: usize },
    /// Left shift on `{0,1}^Z` with the Bernoulli(1/2,1/2) product measure.
    BernoulliShift,
    /// `x ↦ x + tθ mod 1`, continuous in `t`.
    TorusFlow { theta: f64 },
}

/// Unimodular eigenvalue together with a normalized eigenfunction.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenPair {
    pub eigenvalue: C64,
    pub eigenfunction: FunctionRep,
}

/// Rank of the reversible part `E_r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReversibleRank {
    Finite(usize),
    Full,
}

/// A concrete system with the representation it acts on and the representable
/// part of its point spectrum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SystemConfig", into = "SystemConfig")]
pub struct SystemDescriptor {
    kind: SystemKind,
    representation: Shape,
    eigen_data: Vec<EigenPair>,
}

/// `exp(2πi x θ)` with the fractional part of `xθ` formed from an exact
/// two-product, so large integer `x` keeps full phase accuracy.
pub(crate) fn turn(x: f64, theta: f64) -> C64 {
    let p = x * theta;
    let err = x.mul_add(theta, -p);
    let frac = (p - p.floor()) + err;
    C64::from_polar(1.0, 2.0 * PI * frac)
}

fn bit_length(k: usize) -> u64 {
    (usize::BITS - k.leading_zeros()) as u64
}

impl SystemDescriptor {
    pub fn rotation(theta: f64, cutoff: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&theta) {
            return Err(Error::InvalidArgument(format!("rotation number {theta} not in [0,1)")));
        }
        Self::build(SystemKind::Rotation { theta }, Shape::Fourier { cutoff })
    }

    pub fn golden_rotation(cutoff: usize) -> Self {
        Self::rotation(GOLDEN_MEAN, cutoff).expect("golden mean is a valid rotation number")
    }

    pub fn doubling(cutoff: usize) -> Self {
        Self::build(SystemKind::Doubling, Shape::Fourier { cutoff }).expect("doubling is always valid")
    }

    pub fn finite_cyclic(q: usize) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidArgument("finite cyclic system needs q >= 1".into()));
        }
        Self::build(SystemKind::FiniteCyclic { q }, Shape::Finite { q })
    }

    pub fn bernoulli_shift() -> Self {
        Self::bernoulli_shift_on(Window { lo: 0, hi: 0 }).expect("unit window is valid")
    }

    /// Bernoulli shift whose constant eigenfunction is tabulated on `window`.
    pub fn bernoulli_shift_on(window: Window) -> Result<Self> {
        Self::build(SystemKind::BernoulliShift, Shape::Cylinder { window: Window::new(window.lo, window.hi)? })
    }

    pub fn torus_flow(theta: f64, cutoff: usize) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::InvalidArgument("flow speed must be finite".into()));
        }
        Self::build(SystemKind::TorusFlow { theta }, Shape::Fourier { cutoff })
    }

    fn build(kind: SystemKind, representation: Shape) -> Result<Self> {
        let one = C64::new(1.0, 0.0);
        let eigen_data = match (kind, representation) {
            (SystemKind::Rotation { theta } | SystemKind::TorusFlow { theta }, Shape::Fourier { cutoff }) => {
                let k = cutoff as i64;
                (-k..=k)
                    .map(|j| {
                        Ok(EigenPair { eigenvalue: turn(j as f64, theta), eigenfunction: FunctionRep::basis(cutoff, j)? })
                    })
                    .collect::<Result<Vec<_>>>()?
            }
            (SystemKind::FiniteCyclic { q }, _) => (0..q)
                .map(|k| {
                    let chi = (0..q).map(|x| turn((k * x) as f64, 1.0 / q as f64)).collect();
                    Ok(EigenPair { eigenvalue: turn(k as f64, 1.0 / q as f64), eigenfunction: FunctionRep::finite(chi)? })
                })
                .collect::<Result<Vec<_>>>()?,
            (SystemKind::Doubling | SystemKind::BernoulliShift, shape) => {
                vec![EigenPair { eigenvalue: one, eigenfunction: FunctionRep::one(shape)? }]
            }
            _ => return Err(Error::InvalidArgument(format!("{kind:?} cannot act on {representation:?}"))),
        };
        Ok(Self { kind, representation, eigen_data })
    }

    pub fn kind(&self) -> SystemKind {
        self.kind
    }

    /// Reference shape: the representation the eigen data lives in.
    pub fn representation(&self) -> Shape {
        self.representation
    }

    /// Whether the Koopman operator acts on functions of this shape.
    pub fn acts_on(&self, shape: &Shape) -> bool {
        self.representation.same_variant(shape)
            && match (self.kind, shape) {
                (SystemKind::FiniteCyclic { q }, Shape::Finite { q: fq }) => q == *fq,
                _ => true,
            }
    }

    pub fn weakly_mixing(&self) -> bool {
        matches!(self.kind, SystemKind::Doubling | SystemKind::BernoulliShift)
    }

    pub fn is_flow(&self) -> bool {
        matches!(self.kind, SystemKind::TorusFlow { .. })
    }

    pub fn eigen_data(&self) -> &[EigenPair] {
        &self.eigen_data
    }

    pub fn name(&self) -> String {
        match self.kind {
            SystemKind::Rotation { theta } => format!("rotation(theta={theta})"),
            SystemKind::Doubling => "doubling".into(),
            SystemKind::FiniteCyclic { q } => format!("finite_cyclic(q={q})"),
            SystemKind::BernoulliShift => "bernoulli_shift".into(),
            SystemKind::TorusFlow { theta } => format!("torus_flow(theta={theta})"),
        }
    }

    /// Smallest exponent beyond which the doubling map has pushed every
    /// nonzero mode of a cutoff-`K` function past the cutoff.
    pub fn mixing_horizon(cutoff: usize) -> u64 {
        bit_length(cutoff)
    }

    /// Reduce an exponent to an equivalent one that is cheap and safe to
    /// apply to a function of the given shape: `e mod q` on finite systems,
    /// `min(e, horizon)` for the doubling map.
    pub fn effective_exponent(&self, e: u64, shape: &Shape) -> u64 {
        match (self.kind, shape) {
            (SystemKind::FiniteCyclic { q }, _) => e % q as u64,
            (SystemKind::Doubling, Shape::Fourier { cutoff }) => e.min(Self::mixing_horizon(*cutoff)),
            _ => e,
        }
    }

    fn check_acts_on(&self, f: &FunctionRep) -> Result<()> {
        if self.acts_on(&f.shape()) {
            Ok(())
        } else {
            Err(Error::Incompatible(format!("{} cannot act on {:?}", self.name(), f.shape())))
        }
    }
}

/// `T^n f`.
///
/// The doubling map sends mode `j` to `2^n j` and drops it once it leaves the
/// cutoff. When `2^n K` does not fit a machine integer the call fails; callers
/// reduce the exponent first with [`SystemDescriptor::effective_exponent`].
pub fn koopman_apply(system: &SystemDescriptor, n: u64, f: &FunctionRep) -> Result<FunctionRep> {
    system.check_acts_on(f)?;
    match (system.kind, f) {
        (SystemKind::Rotation { theta } | SystemKind::TorusFlow { theta }, FunctionRep::Fourier { coeffs }) => {
            let k = (coeffs.len() / 2) as i64;
            let coeffs = coeffs
                .iter()
                .enumerate()
                .map(|(idx, c)| {
                    let j = idx as i64 - k;
                    let x = (j as i128 * n as i128) as f64;
                    c * turn(x, theta)
                })
                .collect();
            Ok(FunctionRep::Fourier { coeffs })
        }
        (SystemKind::Doubling, FunctionRep::Fourier { coeffs }) => {
            let cutoff = coeffs.len() / 2;
            if cutoff > 0 && bit_length(cutoff) + n > 63 {
                return Err(Error::ExponentOverflow(format!("2^{n} * {cutoff} does not fit in 63 bits")));
            }
            let k = cutoff as i64;
            let mut out = vec![C64::new(0.0, 0.0); coeffs.len()];
            out[cutoff] = coeffs[cutoff];
            for (idx, c) in coeffs.iter().enumerate() {
                let j = idx as i64 - k;
                if j == 0 {
                    continue;
                }
                let target = j << n;
                if target.abs() <= k {
                    out[(target + k) as usize] += c;
                }
            }
            Ok(FunctionRep::Fourier { coeffs: out })
        }
        (SystemKind::FiniteCyclic { q }, FunctionRep::Finite { values }) => {
            let shift = (n % q as u64) as usize;
            Ok(FunctionRep::Finite { values: (0..q).map(|x| values[(x + shift) % q]).collect() })
        }
        (SystemKind::BernoulliShift, FunctionRep::Cylinder { window, table }) => {
            let n = i64::try_from(n)
                .ok()
                .filter(|&n| window.hi.checked_add(n).is_some())
                .ok_or_else(|| Error::ExponentOverflow(format!("shift by {n} leaves the coordinate range")))?;
            Ok(FunctionRep::Cylinder { window: window.shifted(n), table: table.clone() })
        }
        _ => unreachable!("acts_on checked"),
    }
}

/// `T(t) f` for a flow: `c_j ↦ exp(2πi j t θ) c_j`.
pub fn flow_apply(system: &SystemDescriptor, t: f64, f: &FunctionRep) -> Result<FunctionRep> {
    let SystemKind::TorusFlow { theta } = system.kind else {
        return Err(Error::Kind(format!("{} is not a flow", system.name())));
    };
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("flow time {t} must be finite and nonnegative")));
    }
    system.check_acts_on(f)?;
    let k = (f.data().len() / 2) as i64;
    let speed = t * theta;
    let coeffs = f
        .data()
        .iter()
        .enumerate()
        .map(|(idx, c)| c * turn((idx as i64 - k) as f64, speed))
        .collect();
    Ok(FunctionRep::Fourier { coeffs })
}

/// Split `f = f_r + f_s` into its reversible and stable parts.
pub fn jgl_decompose(system: &SystemDescriptor, f: &FunctionRep) -> Result<(FunctionRep, FunctionRep)> {
    system.check_acts_on(f)?;
    let shape = f.shape();
    match system.kind {
        SystemKind::Rotation { .. } | SystemKind::TorusFlow { .. } | SystemKind::FiniteCyclic { .. } => {
            Ok((f.clone(), FunctionRep::zeros(shape)?))
        }
        SystemKind::Doubling => {
            let cutoff = shape.len() / 2;
            let reversible = FunctionRep::constant(shape, f.data()[cutoff])?;
            let mut stable = f.clone();
            stable.data_mut()[cutoff] = C64::new(0.0, 0.0);
            Ok((reversible, stable))
        }
        SystemKind::BernoulliShift => {
            let m = mean(f);
            Ok((FunctionRep::constant(shape, m)?, f.map_values(|v| v - m)))
        }
    }
}

pub fn reversible_rank(system: &SystemDescriptor) -> ReversibleRank {
    if system.weakly_mixing() {
        ReversibleRank::Finite(1)
    } else {
        ReversibleRank::Full
    }
}

fn default_theta() -> f64 {
    GOLDEN_MEAN
}

/// Config form of a system: `{ kind, θ or q, cutoff or window }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemConfig {
    Rotation {
        #[serde(default = "default_theta")]
        theta: f64,
        cutoff: usize,
    },
    Doubling {
        cutoff: usize,
    },
    FiniteCyclic {
        q: usize,
    },
    BernoulliShift {
        #[serde(default)]
        window: Option<[i64; 2]>,
    },
    TorusFlow {
        #[serde(default = "default_theta")]
        theta: f64,
        cutoff: usize,
    },
}

impl TryFrom<SystemConfig> for SystemDescriptor {
    type Error = Error;

    fn try_from(c: SystemConfig) -> Result<Self> {
        match c {
            SystemConfig::Rotation { theta, cutoff } => SystemDescriptor::rotation(theta, cutoff),
            SystemConfig::Doubling { cutoff } => Ok(SystemDescriptor::doubling(cutoff)),
            SystemConfig::FiniteCyclic { q } => SystemDescriptor::finite_cyclic(q),
            SystemConfig::BernoulliShift { window } => {
                let [lo, hi] = window.unwrap_or([0, 0]);
                SystemDescriptor::bernoulli_shift_on(Window::new(lo, hi)?)
            }
            SystemConfig::TorusFlow { theta, cutoff } => SystemDescriptor::torus_flow(theta, cutoff),
        }
    }
}

impl From<SystemDescriptor> for SystemConfig {
    fn from(s: SystemDescriptor) -> Self {
        let cutoff = match s.representation {
            Shape::Fourier { cutoff } => cutoff,
            _ => 0,
        };
        match s.kind {
            SystemKind::Rotation { theta } => SystemConfig::Rotation { theta, cutoff },
            SystemKind::Doubling => SystemConfig::Doubling { cutoff },
            SystemKind::FiniteCyclic { q } => SystemConfig::FiniteCyclic { q },
            SystemKind::BernoulliShift => {
                let window = match s.representation {
                    Shape::Cylinder { window } => Some([window.lo, window.hi]),
                    _ => None,
                };
                SystemConfig::BernoulliShift { window }
            }
            SystemKind::TorusFlow { theta } => SystemConfig::TorusFlow { theta, cutoff },
        }
    }
}
