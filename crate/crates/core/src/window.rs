//! Dense, periodized analysis windows.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::dft::dft;
use crate::error::{Error, Result};
use crate::indexing::FrequencyIndexing;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowKind {
    Gauss,
    Hann,
    Rect,
}

impl FromStr for WindowKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gauss" => Ok(Self::Gauss),
            "hann" => Ok(Self::Hann),
            "rect" => Ok(Self::Rect),
            other => Err(Error::Window(format!("unknown window kind '{other}'"))),
        }
    }
}

impl fmt::Display for WindowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Gauss => "gauss",
            Self::Hann => "hann",
            Self::Rect => "rect",
        })
    }
}

/// A length-`L` window together with its DFT and energy.
#[derive(Debug, Clone)]
pub struct Window {
    samples: Vec<C64>,
    dft: Vec<C64>,
    energy: f64,
}

impl Window {
    pub fn new(samples: Vec<C64>) -> Result<Self> {
        let energy: f64 = samples.iter().map(|v| v.norm_sqr()).sum();
        if samples.is_empty() || !(energy > 0.0) || !energy.is_finite() {
            return Err(Error::Window("window must have positive finite energy".into()));
        }
        let dft = dft(&samples);
        Ok(Self { samples, dft, energy })
    }

    pub fn from_real(samples: &[f64]) -> Result<Self> {
        Self::new(samples.iter().map(|&v| C64::new(v, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    /// `ĝ`, the DFT of the samples.
    pub fn dft(&self) -> &[C64] {
        &self.dft
    }

    /// `‖g‖₂²`.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// Sample at a circular index.
    pub fn at(&self, t: i64) -> C64 {
        self.samples[t.rem_euclid(self.samples.len() as i64) as usize]
    }

    /// DFT value at a circular frequency index.
    pub fn dft_at(&self, k: i64) -> C64 {
        self.dft[k.rem_euclid(self.dft.len() as i64) as usize]
    }
}

/// Build an `L`-periodic window of the given family centred at sample 0 and
/// normalized to unit `ℓ²` norm.
///
/// `width` is in samples: the support for `hann` and `rect`, and the scale
/// `w` of `exp(-π t²/w²)` for `gauss`.
pub fn make_window(kind: WindowKind, len: usize, width: f64) -> Result<Window> {
    if len < 4 {
        return Err(Error::Window(format!("length {len} is below 4")));
    }
    if !(width > 0.0) || !width.is_finite() {
        return Err(Error::Window(format!("width must be positive, got {width}")));
    }
    let idx = FrequencyIndexing::new(len);
    let l = len as f64;
    let raw: Vec<f64> = (0..len as i64)
        .map(|t| {
            let tf = idx.fold(t) as f64;
            match kind {
                WindowKind::Gauss => {
                    // periodize over enough neighbours for the tail to vanish
                    let reps = (width * 6.0 / l).ceil() as i64 + 1;
                    (-reps..=reps)
                        .map(|p| {
                            let s = tf + p as f64 * l;
                            (-PI * s * s / (width * width)).exp()
                        })
                        .sum()
                }
                WindowKind::Hann => {
                    if tf.abs() < width / 2.0 {
                        (PI * tf / width).cos().powi(2)
                    } else {
                        0.0
                    }
                }
                WindowKind::Rect => {
                    if -width / 2.0 < tf && tf <= width / 2.0 {
                        1.0
                    } else {
                        0.0
                    }
                }
            }
        })
        .collect();
    let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(Error::Window(format!(
            "{kind} window of width {width} has no samples on a length-{len} grid"
        )));
    }
    Window::from_real(&raw.iter().map(|v| v / norm).collect::<Vec<_>>())
}
