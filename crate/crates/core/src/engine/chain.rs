use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::OperatorSpec;
use crate::space::FunctionRep;
use crate::systems::SystemDescriptor;

/// Integer polynomial `Σ c_i n^i`, coefficients in ascending degree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct ExponentPoly(Vec<i64>);

impl ExponentPoly {
    pub fn new(mut coeffs: Vec<i64>) -> Result<Self> {
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        if coeffs.len() < 2 {
            return Err(Error::InvalidArgument("exponent polynomial must be nonconstant".into()));
        }
        Ok(Self(coeffs))
    }

    pub fn identity() -> Self {
        Self(vec![0, 1])
    }

    pub fn coefficients(&self) -> &[i64] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len() - 1
    }

    /// Value at `n`, which must be a nonnegative integer that fits in `u64`.
    pub fn eval(&self, n: u64) -> Result<u64> {
        let x = n as i128;
        let mut acc: i128 = 0;
        for &c in self.0.iter().rev() {
            acc = acc
                .checked_mul(x)
                .and_then(|v| v.checked_add(c as i128))
                .ok_or_else(|| Error::ExponentOverflow(format!("{self} at n = {n}")))?;
        }
        u64::try_from(acc).map_err(|_| {
            if acc < 0 {
                Error::InvalidArgument(format!("{self} is negative at n = {n}"))
            } else {
                Error::ExponentOverflow(format!("{self} at n = {n}"))
            }
        })
    }

    /// Value modulo `d`, exact for any `n`.
    pub fn eval_mod(&self, n: u64, d: u64) -> u64 {
        let (x, d) = ((n % d) as i128, d as i128);
        let mut acc: i128 = 0;
        for &c in self.0.iter().rev() {
            acc = (acc * x + (c as i128).rem_euclid(d)) % d;
        }
        acc as u64
    }
}

impl std::fmt::Display for ExponentPoly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(i, c)| match i {
                0 => format!("{c}"),
                1 => format!("{c}n"),
                _ => format!("{c}n^{i}"),
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl TryFrom<Vec<i64>> for ExponentPoly {
    type Error = Error;
    fn try_from(v: Vec<i64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ExponentPoly> for Vec<i64> {
    fn from(p: ExponentPoly) -> Self {
        p.0
    }
}

/// Configuration form of a chain. `alpha` is 1-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    pub k: usize,
    pub alpha: Vec<usize>,
    pub systems: Vec<SystemDescriptor>,
    pub operators: Vec<OperatorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent_polys: Option<Vec<ExponentPoly>>,
    pub f: FunctionRep,
    #[serde(default)]
    pub continuous: bool,
}

/// A validated chain `T_m A_{m−1} ⋯ A_1 T_1` with entanglement map `α` and input `f`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChainConfig", into = "ChainConfig")]
pub struct ChainSpec {
    k: usize,
    /// 0-based classes.
    alpha: Vec<usize>,
    systems: Vec<SystemDescriptor>,
    operators: Vec<OperatorSpec>,
    polys: Option<Vec<ExponentPoly>>,
    f: FunctionRep,
    continuous: bool,
}

impl ChainSpec {
    /// `alpha` uses classes `1..=k`.
    pub fn new(
        k: usize,
        alpha: &[usize],
        systems: Vec<SystemDescriptor>,
        operators: Vec<OperatorSpec>,
        f: FunctionRep,
    ) -> Result<Self> {
        ChainConfig { m: None, k, alpha: alpha.to_vec(), systems, operators, exponent_polys: None, f, continuous: false }
            .try_into()
    }

    /// The same system in every slot and the identity exponent.
    pub fn uniform(
        k: usize,
        alpha: &[usize],
        system: SystemDescriptor,
        operators: Vec<OperatorSpec>,
        f: FunctionRep,
    ) -> Result<Self> {
        Self::new(k, alpha, vec![system; alpha.len()], operators, f)
    }

    pub fn with_polys(self, polys: Vec<ExponentPoly>) -> Result<Self> {
        let mut cfg = ChainConfig::from(self);
        cfg.exponent_polys = Some(polys);
        cfg.try_into()
    }

    pub fn into_continuous(self) -> Result<Self> {
        let mut cfg = ChainConfig::from(self);
        cfg.continuous = true;
        cfg.try_into()
    }

    pub fn with_input(&self, f: FunctionRep) -> Result<Self> {
        let mut cfg = ChainConfig::from(self.clone());
        cfg.f = f;
        cfg.try_into()
    }

    pub fn m(&self) -> usize {
        self.alpha.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// The entanglement map with 1-based classes.
    pub fn alpha(&self) -> Vec<usize> {
        self.alpha.iter().map(|a| a + 1).collect()
    }

    pub(crate) fn class_of(&self, slot: usize) -> usize {
        self.alpha[slot]
    }

    pub fn systems(&self) -> &[SystemDescriptor] {
        &self.systems
    }

    pub fn operators(&self) -> &[OperatorSpec] {
        &self.operators
    }

    pub fn polys(&self) -> Option<&[ExponentPoly]> {
        self.polys.as_deref()
    }

    pub fn input(&self) -> &FunctionRep {
        &self.f
    }

    pub fn is_continuous(&self) -> bool {
        self.continuous
    }

    /// 0-based classes that occur in `α`, ascending.
    pub fn used_classes(&self) -> Vec<usize> {
        let mut c = self.alpha.clone();
        c.sort_unstable();
        c.dedup();
        c
    }

    pub fn alpha_injective(&self) -> bool {
        self.used_classes().len() == self.alpha.len()
    }

    /// Koopman exponent of a 0-based class at lattice index `n`.
    pub fn exponent(&self, class: usize, n: u64) -> Result<u64> {
        match &self.polys {
            Some(p) => p[class].eval(n),
            None => Ok(n),
        }
    }

    /// Every exponent polynomial is a positive integer on `1..=n_max`.
    pub fn check_schedule(&self, n_max: u64) -> Result<()> {
        let Some(polys) = &self.polys else { return Ok(()) };
        for &class in &self.used_classes() {
            for n in 1..=n_max {
                if polys[class].eval(n)? == 0 {
                    return Err(Error::InvalidArgument(format!("{} vanishes at n = {n}", polys[class])));
                }
            }
        }
        Ok(())
    }
}

impl TryFrom<ChainConfig> for ChainSpec {
    type Error = Error;

    fn try_from(c: ChainConfig) -> Result<Self> {
        let m = c.alpha.len();
        if m < 2 {
            return Err(Error::InvalidChain(format!("m = {m}, need m >= 2")));
        }
        if let Some(declared) = c.m {
            if declared != m {
                return Err(Error::InvalidChain(format!("m = {declared} but alpha has {m} entries")));
            }
        }
        if c.k == 0 {
            return Err(Error::InvalidChain("k must be >= 1".into()));
        }
        if let Some(&bad) = c.alpha.iter().find(|&&a| a == 0 || a > c.k) {
            return Err(Error::InvalidChain(format!("alpha entry {bad} outside 1..={}", c.k)));
        }
        if c.systems.len() != m {
            return Err(Error::InvalidChain(format!("{} systems for m = {m}", c.systems.len())));
        }
        if c.operators.len() != m - 1 {
            return Err(Error::InvalidChain(format!("{} operators for m = {m}", c.operators.len())));
        }
        if let Some(p) = &c.exponent_polys {
            if p.len() != c.k {
                return Err(Error::InvalidChain(format!("{} exponent polynomials for k = {}", p.len(), c.k)));
            }
        }
        c.f.validate()?;
        let shape = c.f.shape();
        for sys in &c.systems {
            if !sys.acts_on(&shape) {
                return Err(Error::Incompatible(format!("{} cannot act on {shape:?}", sys.name())));
            }
        }
        for op in &c.operators {
            op.validate()?;
            if !op.accepts(&shape) {
                return Err(Error::Incompatible(format!("{} cannot act on {shape:?}", op.name())));
            }
        }
        if c.continuous && !c.systems.iter().all(SystemDescriptor::is_flow) {
            return Err(Error::Kind("continuous chains need flows in every slot".into()));
        }
        Ok(ChainSpec {
            k: c.k,
            alpha: c.alpha.iter().map(|a| a - 1).collect(),
            systems: c.systems,
            operators: c.operators,
            polys: c.exponent_polys,
            f: c.f,
            continuous: c.continuous,
        })
    }
}

impl From<ChainSpec> for ChainConfig {
    fn from(c: ChainSpec) -> Self {
        ChainConfig {
            m: Some(c.alpha.len()),
            k: c.k,
            alpha: c.alpha.iter().map(|a| a + 1).collect(),
            systems: c.systems,
            operators: c.operators,
            exponent_polys: c.polys,
            f: c.f,
            continuous: c.continuous,
        }
    }
}
