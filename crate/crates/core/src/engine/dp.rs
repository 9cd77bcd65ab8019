//! Cached strategy: the multi-average is evaluated slot by slot, averaging
//! each index class right after the last slot that uses it.
//!
//! With `H_{−1} = f`, the state after slot `s` is a function of the classes
//! that appeared at or before `s` and are used again later:
//!
//! ```text
//! H_s(key) = T_s^{e(n_α(s))} A_{s−1} H_{s−1}(key)              if α(s) is used later
//! H_s(key) = (1/N) Σ_n T_s^{e(n)} A_{s−1} H_{s−1}(key, α(s)=n)  otherwise
//! ```
//!
//! and the average is `H_{m−1}()`. Values `A_s H_s(key)` are memoized under
//! `(slot, key)` in an LRU with a byte budget; evicted entries are recomputed.

use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex};

use lru::LruCache;
use rayon::prelude::*;

use super::{FunctionSum, Steps, CHUNK};
use crate::error::{Error, Result};
use crate::space::C64;

struct Plan {
    /// Classes carried in the key after each slot, ascending.
    carried: Vec<Vec<usize>>,
    /// Whether the slot's own class is averaged at that slot.
    closes: Vec<bool>,
}

impl Plan {
    fn new(alpha: &[usize]) -> Self {
        let m = alpha.len();
        let last = |c: usize| alpha.iter().rposition(|&a| a == c).unwrap_or(0);
        let mut carried = Vec::with_capacity(m);
        let mut closes = Vec::with_capacity(m);
        for s in 0..m {
            let mut r: Vec<usize> = alpha[..=s].iter().copied().filter(|&c| last(c) > s).collect();
            r.sort_unstable();
            r.dedup();
            carried.push(r);
            closes.push(last(alpha[s]) == s);
        }
        Self { carried, closes }
    }
}

type Key = (usize, Vec<u64>);

struct Memo {
    cache: LruCache<Key, Arc<FunctionSum>>,
    bytes: usize,
}

struct Eliminator<'a> {
    steps: &'a Steps<'a>,
    n: u64,
    plan: Plan,
    input: Arc<FunctionSum>,
    memo: Mutex<Memo>,
    budget: usize,
    monotone: Vec<bool>,
}

impl Eliminator<'_> {
    fn class(&self, slot: usize) -> usize {
        self.steps.chain().class_of(slot)
    }

    /// Key of slot `s − 1` from the key of slot `s` and, when slot `s`
    /// averages its class, the current value of that class.
    fn restrict(&self, s: usize, key: &[u64], own: Option<u64>) -> Vec<u64> {
        let here = &self.plan.carried[s];
        let class = self.class(s);
        self.plan.carried[s - 1]
            .iter()
            .map(|c| match (own, here.iter().position(|x| x == c)) {
                (Some(n), _) if *c == class => n,
                (_, Some(pos)) => key[pos],
                _ => unreachable!("carried classes are nested"),
            })
            .collect()
    }

    /// `A_{s−1} H_{s−1}(key)`, or `f` for the first slot.
    fn incoming(&self, s: usize, key: Vec<u64>) -> Result<Arc<FunctionSum>> {
        if s == 0 {
            return Ok(self.input.clone());
        }
        let id = (s - 1, key);
        if let Some(v) = self.memo.lock().expect("memo lock").cache.get(&id) {
            return Ok(v.clone());
        }
        let h = self.state(s - 1, &id.1)?;
        let value = Arc::new(self.steps.operator_sum(s, &h)?);
        let size = value.bytes();
        if size <= self.budget {
            let mut memo = self.memo.lock().expect("memo lock");
            if memo.cache.put(id, value.clone()).is_none() {
                memo.bytes += size;
            }
            while memo.bytes > self.budget {
                match memo.cache.pop_lru() {
                    Some((_, v)) => memo.bytes = memo.bytes.saturating_sub(v.bytes()),
                    None => break,
                }
            }
        }
        Ok(value)
    }

    fn state(&self, s: usize, key: &[u64]) -> Result<FunctionSum> {
        if !self.plan.closes[s] {
            let pos = self.plan.carried[s].iter().position(|&c| c == self.class(s)).expect("carried own class");
            let n = key[pos];
            let prev = if s == 0 { Vec::new() } else { self.restrict(s, key, None) };
            let g = self.incoming(s, prev)?;
            return self.steps.power_sum(s, n, &g);
        }
        let mut total = self.partial(s, key, 1, self.n)?;
        total.scale(C64::new(1.0 / self.n as f64, 0.0));
        Ok(total)
    }

    /// `Σ_{n=lo}^{hi} T_s^{e(n)} A_{s−1} H_{s−1}(key, α(s)=n)`, unscaled.
    fn partial(&self, s: usize, key: &[u64], lo: u64, hi: u64) -> Result<FunctionSum> {
        let class = self.class(s);
        let varies = s > 0 && self.plan.carried[s - 1].contains(&class);
        let mut total = FunctionSum::new();
        if varies {
            for n in lo..=hi {
                let g = self.incoming(s, self.restrict(s, key, Some(n)))?;
                total.extend(&self.steps.power_sum(s, n, &g)?)?;
            }
            return Ok(total);
        }
        let prev_key = if s == 0 { Vec::new() } else { self.restrict(s, key, None) };
        let g = self.incoming(s, prev_key)?;
        let mut cur = self.steps.power_sum(s, lo, &g)?;
        total.extend(&cur)?;
        for n in lo + 1..=hi {
            cur = if self.monotone[s] { self.steps.advance_sum(s, n - 1, n, &cur)? } else { self.steps.power_sum(s, n, &g)? };
            total.extend(&cur)?;
        }
        Ok(total)
    }
}

pub(crate) fn eliminate(steps: &Steps, n: u64, budget: usize) -> Result<FunctionSum> {
    let chain = steps.chain();
    let m = chain.m();
    let monotone = (0..m).map(|s| steps.monotone(s, n)).collect::<Result<Vec<_>>>()?;
    let cap = NonZeroUsize::new(1 << 20).expect("nonzero");
    let el = Eliminator {
        steps,
        n,
        plan: Plan::new(&(0..m).map(|s| chain.class_of(s)).collect::<Vec<_>>()),
        input: Arc::new(FunctionSum::from_function(chain.input().clone())),
        memo: Mutex::new(Memo { cache: LruCache::new(cap), bytes: 0 }),
        budget,
        monotone,
    };
    let top = m - 1;
    debug_assert!(el.plan.carried[top].is_empty() && el.plan.closes[top]);
    // a shared incoming state is computed once before the parallel sweep
    if top > 0 && !el.plan.carried[top - 1].contains(&el.class(top)) {
        el.incoming(top, el.restrict(top, &[], None))?;
    }
    let chunks: Vec<(u64, u64)> = (0..n.div_ceil(CHUNK)).map(|c| (c * CHUNK + 1, ((c + 1) * CHUNK).min(n))).collect();
    let partials = chunks
        .par_iter()
        .map(|&(lo, hi)| el.partial(top, &[], lo, hi))
        .collect::<Result<Vec<_>>>()?;
    let mut total = FunctionSum::new();
    for p in &partials {
        total.extend(p)?;
    }
    total.scale(C64::new(1.0 / n as f64, 0.0));
    Ok(total)
}

/// Nested single Cesàro means, valid when every class is used once.
pub(crate) fn factorized(steps: &Steps, n: u64) -> Result<FunctionSum> {
    let chain = steps.chain();
    if !chain.alpha_injective() {
        return Err(Error::Strategy(format!("factorized strategy needs injective alpha, got {:?}", chain.alpha())));
    }
    let mut g = FunctionSum::from_function(chain.input().clone());
    for s in 0..chain.m() {
        g = steps.operator_sum(s, &g)?;
        let monotone = steps.monotone(s, n)?;
        let mut cur = steps.power_sum(s, 1, &g)?;
        let mut total = cur.clone();
        for i in 2..=n {
            cur = if monotone { steps.advance_sum(s, i - 1, i, &cur)? } else { steps.power_sum(s, i, &g)? };
            total.extend(&cur)?;
        }
        total.scale(C64::new(1.0 / n as f64, 0.0));
        g = total;
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_for_interleaved_classes() {
        let p = Plan::new(&[0, 1, 0]);
        assert_eq!(p.carried, vec![vec![0], vec![0], vec![]]);
        assert_eq!(p.closes, vec![false, true, true]);
        let p = Plan::new(&[0, 1, 0, 1]);
        assert_eq!(p.carried, vec![vec![0], vec![0, 1], vec![1], vec![]]);
        assert_eq!(p.closes, vec![false, false, true, true]);
        let p = Plan::new(&[0, 0]);
        assert_eq!(p.carried, vec![vec![0], vec![]]);
    }
}
