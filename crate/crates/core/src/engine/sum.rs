use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{evaluate_at, FunctionRep, SamplePoints, Shape, Window, C64};

/// Widest cylinder hull a sum is collapsed into (a table of `2^20` values).
const MAX_COLLAPSED_WIDTH: i64 = 20;

/// A finite linear combination of functions, one term per distinct shape.
///
/// Averages of shifted cylinder functions spread over many windows and have no
/// single bounded-window table; they stay exact as a sum of terms.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct FunctionSum {
    terms: Vec<FunctionRep>,
    #[serde(skip)]
    index: HashMap<Shape, usize>,
}

impl FunctionSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_function(f: FunctionRep) -> Self {
        let mut s = Self::new();
        s.index.insert(f.shape(), 0);
        s.terms.push(f);
        s
    }

    pub fn terms(&self) -> &[FunctionRep] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn reindex(&mut self) {
        self.index = self.terms.iter().enumerate().map(|(i, t)| (t.shape(), i)).collect();
    }

    pub fn push(&mut self, f: &FunctionRep) -> Result<()> {
        if self.index.len() != self.terms.len() {
            self.reindex();
        }
        match self.index.get(&f.shape()) {
            Some(&i) => self.terms[i].add_assign(f),
            None => {
                self.index.insert(f.shape(), self.terms.len());
                self.terms.push(f.clone());
                Ok(())
            }
        }
    }

    pub fn push_owned(&mut self, f: FunctionRep) -> Result<()> {
        if self.index.len() != self.terms.len() {
            self.reindex();
        }
        match self.index.get(&f.shape()) {
            Some(&i) => self.terms[i].add_assign(&f),
            None => {
                self.index.insert(f.shape(), self.terms.len());
                self.terms.push(f);
                Ok(())
            }
        }
    }

    pub fn extend(&mut self, other: &FunctionSum) -> Result<()> {
        other.terms.iter().try_for_each(|t| self.push(t))
    }

    pub fn scale(&mut self, c: C64) {
        for t in &mut self.terms {
            t.data_mut().iter_mut().for_each(|v| *v *= c);
        }
    }

    pub fn map_terms(&self, mut op: impl FnMut(&FunctionRep) -> Result<FunctionRep>) -> Result<FunctionSum> {
        let mut out = FunctionSum::new();
        for t in &self.terms {
            out.push_owned(op(t)?)?;
        }
        Ok(out)
    }

    /// Approximate heap footprint, used by the memo budget.
    pub fn bytes(&self) -> usize {
        self.terms.iter().map(|t| t.data().len() * std::mem::size_of::<C64>() + 64).sum::<usize>() + 64
    }

    /// Collapse to a single function. Fourier terms are padded to the largest
    /// cutoff and cylinder terms widened to the hull of their windows.
    pub fn into_function(self) -> Result<FunctionRep> {
        let mut terms = self.terms.into_iter();
        let Some(first) = terms.next() else {
            return Err(Error::Unrepresentable("empty sum".into()));
        };
        let rest: Vec<FunctionRep> = terms.collect();
        if rest.is_empty() {
            return Ok(first);
        }
        if let FunctionRep::Cylinder { window, .. } = &first {
            let (lo, hi) = rest.iter().fold((window.lo, window.hi), |(lo, hi), t| match t {
                FunctionRep::Cylinder { window: w, .. } => (lo.min(w.lo), hi.max(w.hi)),
                _ => (lo, hi),
            });
            if hi - lo >= MAX_COLLAPSED_WIDTH {
                return Err(Error::Unrepresentable(format!(
                    "cylinder terms spread over [{lo}, {hi}], wider than {MAX_COLLAPSED_WIDTH} coordinates"
                )));
            }
            let hull = Window::new(lo, hi)?;
            let mut acc = first.widen(hull)?;
            for t in &rest {
                acc.add_assign(&t.widen(hull)?)?;
            }
            return Ok(acc);
        }
        let mut acc = match &first {
            FunctionRep::Fourier { .. } => {
                let k = rest.iter().chain([&first]).map(|t| t.cutoff().unwrap_or(0)).max().unwrap_or(0);
                pad_fourier(&first, k)?
            }
            _ => first,
        };
        for t in rest {
            match (&acc, &t) {
                (FunctionRep::Fourier { .. }, FunctionRep::Fourier { .. }) => {
                    let padded = pad_fourier(&t, acc.cutoff().unwrap_or(0))?;
                    acc.add_assign(&padded)?;
                }
                _ => acc.add_assign(&t)?,
            }
        }
        Ok(acc)
    }

    pub fn eval_at(&self, points: &SamplePoints) -> Result<Vec<C64>> {
        let mut out = vec![C64::new(0.0, 0.0); points.len()];
        for t in &self.terms {
            for (o, v) in out.iter_mut().zip(evaluate_at(t, points)?) {
                *o += v;
            }
        }
        Ok(out)
    }
}

fn pad_fourier(f: &FunctionRep, cutoff: usize) -> Result<FunctionRep> {
    let k = f.cutoff().unwrap_or(0);
    if k == cutoff {
        return Ok(f.clone());
    }
    let mut coeffs = vec![C64::new(0.0, 0.0); 2 * cutoff + 1];
    coeffs[cutoff - k..=cutoff + k].copy_from_slice(f.data());
    FunctionRep::fourier(coeffs)
}

impl PartialEq for FunctionSum {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms
    }
}

impl From<FunctionRep> for FunctionSum {
    fn from(f: FunctionRep) -> Self {
        FunctionSum::from_function(f)
    }
}
