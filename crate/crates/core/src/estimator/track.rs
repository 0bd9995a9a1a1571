//! Frame-rate shift estimates to per-sample modulation laws.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::gabor::GaborSystem;
use crate::model::{integrate, modulation_factor};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    Linear,
    /// Catmull-Rom cubic.
    Cubic,
}

impl FromStr for Interpolation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Self::Linear),
            "cubic" => Ok(Self::Cubic),
            other => Err(Error::Parameter(format!("unknown interpolation '{other}'"))),
        }
    }
}

impl fmt::Display for Interpolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Linear => "linear",
            Self::Cubic => "cubic",
        })
    }
}

/// Estimated modulation at frame and sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulationTrack {
    /// `γ̂'(an) / b`, real-valued coarse-grid shift.
    pub frame_delta: Vec<f64>,
    /// `γ̂'(an)` in `[0, L)`.
    pub frame_gamma_prime: Vec<f64>,
    /// Offset `c` that produced each frame estimate.
    pub offsets: Vec<usize>,
    /// Interpolated `γ̂'(t)`; continuous across frames, so it may leave
    /// `[0, L)` where the frame track wraps.
    pub sample_gamma_prime: Vec<f64>,
    /// Discrete integral of `sample_gamma_prime` with `γ̂(0) = 0`.
    pub sample_gamma: Vec<f64>,
}

impl ModulationTrack {
    /// Integer coarse shift `(round(γ̂') - c) / b` for each frame.
    pub fn frame_coarse(&self, stride: usize) -> Vec<i64> {
        self.frame_gamma_prime
            .iter()
            .zip(&self.offsets)
            .map(|(g, &c)| (g.round() as i64 - c as i64).div_euclid(stride as i64))
            .collect()
    }
}

/// Interpolate frame-rate `γ̂'(an)` to every sample (circular boundary) and
/// integrate. Frame values are unwrapped mod `L` before interpolation.
pub fn track_from_frames(frame_gamma_prime: &[f64], sys: &GaborSystem, interp: Interpolation) -> Result<ModulationTrack> {
    let frames = frame_gamma_prime.len();
    if frames < 2 || frames != sys.num_frames() {
        return Err(Error::Length { expected: sys.num_frames().max(2), actual: frames });
    }
    let len = sys.len();
    let l = len as f64;
    let b = sys.stride();
    let wrapped: Vec<f64> = frame_gamma_prime.iter().map(|v| v.rem_euclid(l)).collect();
    let offsets = wrapped.iter().map(|v| (v.round() as i64).rem_euclid(b as i64) as usize).collect();
    let unwrapped = unwrap(&wrapped, l);
    let sample_gamma_prime = interpolate(&unwrapped, sys.hop(), len, interp);
    let sample_gamma = integrate(&sample_gamma_prime);
    Ok(ModulationTrack {
        frame_delta: wrapped.iter().map(|v| v / b as f64).collect(),
        frame_gamma_prime: wrapped,
        offsets,
        sample_gamma_prime,
        sample_gamma,
    })
}

fn unwrap(values: &[f64], period: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut prev: Option<f64> = None;
    for &v in values {
        let u = match prev {
            Some(p) => v + period * ((p - v) / period).round(),
            None => v,
        };
        out.push(u);
        prev = Some(u);
    }
    out
}

/// Periodic extension of the frame sequence: frames past the end continue
/// from the start, lifted by the multiple of `L` closest to continuity.
fn periodic_value(values: &[f64], i: i64, period: f64) -> f64 {
    let n = values.len() as i64;
    let q = i.div_euclid(n);
    let r = i.rem_euclid(n) as usize;
    if q == 0 {
        return values[r];
    }
    let lift = period * ((values[n as usize - 1] - values[0]) / period).round();
    values[r] + q as f64 * lift
}

fn interpolate(values: &[f64], hop: usize, len: usize, interp: Interpolation) -> Vec<f64> {
    let l = len as f64;
    (0..len)
        .map(|t| {
            let i = (t / hop) as i64;
            let x = (t % hop) as f64 / hop as f64;
            let p1 = periodic_value(values, i, l);
            let p2 = periodic_value(values, i + 1, l);
            match interp {
                Interpolation::Linear => p1 + x * (p2 - p1),
                Interpolation::Cubic => {
                    let p0 = periodic_value(values, i - 1, l);
                    let p3 = periodic_value(values, i + 2, l);
                    let x2 = x * x;
                    let x3 = x2 * x;
                    0.5 * (2.0 * p1
                        + (p2 - p0) * x
                        + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * x2
                        + (3.0 * p1 - p0 - 3.0 * p2 + p3) * x3)
                }
            }
        })
        .collect()
}

/// `U_t = Y_t e^{-2iπγ̂(t)/L}`.
pub fn demodulate(y: &[C64], gamma: &[f64]) -> Result<Vec<C64>> {
    if y.len() != gamma.len() {
        return Err(Error::Length { expected: y.len(), actual: gamma.len() });
    }
    let l = y.len() as f64;
    Ok(y.iter().zip(gamma).map(|(v, g)| v * modulation_factor(*g, l).conj()).collect())
}
