use std::cell::RefCell;

use rustfft::FftPlanner;

use super::C64;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Evaluate `Σ_j c_j exp(2πi j i/M)` at `i = 0..M`. Modes fold modulo `M`,
/// which is exact on the grid.
pub(crate) fn synthesize(coeffs: &[C64], resolution: usize) -> Vec<C64> {
    let cutoff = (coeffs.len() / 2) as i64;
    let m = resolution as i64;
    let mut buf = vec![C64::new(0.0, 0.0); resolution];
    for (idx, c) in coeffs.iter().enumerate() {
        let j = idx as i64 - cutoff;
        buf[j.rem_euclid(m) as usize] += c;
    }
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(resolution).process(&mut buf));
    buf
}

/// Discrete Fourier coefficients `(1/M) Σ_i f_i exp(-2πi j i/M)` for `|j| <= K`.
pub(crate) fn analyze(values: &[C64], cutoff: usize) -> Vec<C64> {
    let m = values.len();
    let mut buf = values.to_vec();
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(m).process(&mut buf));
    let k = cutoff as i64;
    (-k..=k).map(|j| buf[j.rem_euclid(m as i64) as usize] / m as f64).collect()
}
