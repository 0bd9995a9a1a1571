//! Discrete Fourier transform with the analysis convention used throughout
//! the crate: `x̂[k] = Σ_t x[t] e^{-2iπkt/L}`, inverse scaled by `1/L`.

use std::cell::RefCell;
use std::f64::consts::PI;

use rustfft::FftPlanner;

use crate::C64;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Forward transform in place.
pub fn dft_in_place(buf: &mut [C64]) {
    if buf.len() <= 1 {
        return;
    }
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()));
    fft.process(buf);
}

/// Inverse transform in place, including the `1/L` factor.
pub fn idft_in_place(buf: &mut [C64]) {
    if buf.len() <= 1 {
        return;
    }
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()));
    fft.process(buf);
    let scale = 1.0 / buf.len() as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
}

pub fn dft(x: &[C64]) -> Vec<C64> {
    let mut out = x.to_vec();
    dft_in_place(&mut out);
    out
}

pub fn idft(x: &[C64]) -> Vec<C64> {
    let mut out = x.to_vec();
    idft_in_place(&mut out);
    out
}

/// Direct `O(L²)` evaluation of the forward transform. Kept as a reference
/// for the fast path.
pub fn dft_direct(x: &[C64]) -> Vec<C64> {
    let len = x.len();
    (0..len)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(t, &v)| {
                    // reduce k*t mod L first to keep the phase argument small
                    let kt = (k * t) % len;
                    v * C64::from_polar(1.0, -2.0 * PI * kt as f64 / len as f64)
                })
                .sum()
        })
        .collect()
}

/// Rotate a sequence so that `out[i] = x[(i + shift) mod L]`.
pub fn rotate(x: &[C64], shift: i64) -> Vec<C64> {
    let len = x.len();
    if len == 0 {
        return Vec::new();
    }
    let s = shift.rem_euclid(len as i64) as usize;
    let mut out = Vec::with_capacity(len);
    out.extend_from_slice(&x[s..]);
    out.extend_from_slice(&x[..s]);
    out
}
