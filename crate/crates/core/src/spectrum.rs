//! Power spectra on the positive frequency interval.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::indexing::FrequencyIndexing;

/// Nonnegative per-bin variances `S_X[k]` for `k ∈ I_L⁺`, zero at DC and,
/// for even `L`, at Nyquist.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrum {
    len: usize,
    values: Vec<f64>,
}

impl PowerSpectrum {
    pub fn new(len: usize, values: Vec<f64>) -> Result<Self> {
        if len == 0 {
            return Err(Error::Spectrum("signal length must be positive".into()));
        }
        let idx = FrequencyIndexing::new(len);
        if values.len() != idx.positive_count() {
            return Err(Error::Spectrum(format!(
                "expected {} positive-frequency values for L = {len}, got {}",
                idx.positive_count(),
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Spectrum(format!("value at bin {k} is negative or not finite")));
        }
        if values[0] != 0.0 {
            return Err(Error::Spectrum("power at DC must vanish".into()));
        }
        if idx.has_nyquist() && values[len / 2] != 0.0 {
            return Err(Error::Spectrum("power at Nyquist must vanish".into()));
        }
        Ok(Self { len, values })
    }

    pub fn zeros(len: usize) -> Self {
        Self { len, values: vec![0.0; len / 2 + 1] }
    }

    /// Unit-variance line spectrum concentrated at `bin`.
    pub fn single_line(len: usize, bin: usize, power: f64) -> Result<Self> {
        let mut values = vec![0.0; len / 2 + 1];
        if bin >= values.len() {
            return Err(Error::Spectrum(format!("bin {bin} outside the positive range")));
        }
        values[bin] = power;
        Self::new(len, values)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, bin: usize) -> f64 {
        self.values.get(bin).copied().unwrap_or(0.0)
    }

    /// `σ_Z² = Σ_k S_X[k]`.
    pub fn total_power(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Bins with nonzero power.
    pub fn support(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values.iter().copied().enumerate().filter(|(_, v)| *v > 0.0)
    }

    /// Power-weighted mean bin.
    pub fn centroid(&self) -> f64 {
        let total = self.total_power();
        if total == 0.0 {
            return 0.0;
        }
        self.support().map(|(k, v)| k as f64 * v).sum::<f64>() / total
    }
}

/// Generators for the experiment spectra.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectrumShape {
    /// Flat band `[lo, hi]` with raised-cosine edges `taper` bins wide.
    RaisedCosine { lo: usize, hi: usize, taper: usize },
    /// Exponentially distributed bin powers smoothed by a Hann kernel of
    /// `smooth` bins, under the same raised-cosine band mask.
    SmoothedRandom { lo: usize, hi: usize, taper: usize, smooth: usize },
    /// `count` flat sub-bands of random width and level inside `[lo, hi]`,
    /// separated by random gaps, each with raised-cosine edges.
    Bands { lo: usize, hi: usize, count: usize, taper: usize },
}

impl SpectrumShape {
    pub fn build(&self, len: usize, total_power: f64, seed: u64) -> Result<PowerSpectrum> {
        if !(total_power >= 0.0) {
            return Err(Error::Spectrum("total power must be nonnegative".into()));
        }
        let (lo, hi, taper) = match *self {
            Self::RaisedCosine { lo, hi, taper }
            | Self::SmoothedRandom { lo, hi, taper, .. }
            | Self::Bands { lo, hi, taper, .. } => (lo, hi, taper),
        };
        let top = (len - 1) / 2;
        if lo == 0 || hi > top || lo > hi {
            return Err(Error::Spectrum(format!(
                "band [{lo}, {hi}] must lie inside [1, {top}]"
            )));
        }
        if 2 * taper > hi - lo + 1 {
            return Err(Error::Spectrum(format!("taper {taper} is wider than half the band")));
        }
        let mut values = match *self {
            Self::Bands { count, .. } => random_bands(len, lo, hi, count, taper, seed)?,
            _ => band_mask(len, lo, hi, taper),
        };
        if let Self::SmoothedRandom { smooth, .. } = *self {
            if smooth == 0 {
                return Err(Error::Spectrum("smoothing width must be positive".into()));
            }
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let raw: Vec<f64> = (0..values.len()).map(|_| Exp1.sample(&mut rng)).collect();
            let kernel: Vec<f64> = (0..smooth)
                .map(|j| (PI * (j as f64 + 0.5) / smooth as f64).sin().powi(2))
                .collect();
            let ksum: f64 = kernel.iter().sum();
            let half = smooth / 2;
            for (k, v) in values.iter_mut().enumerate() {
                if *v == 0.0 {
                    continue;
                }
                let s: f64 = kernel
                    .iter()
                    .enumerate()
                    .map(|(j, w)| w * raw[(k + j + raw.len() - half) % raw.len()])
                    .sum();
                *v *= s / ksum;
            }
        }
        let sum: f64 = values.iter().sum();
        if sum > 0.0 {
            for v in &mut values {
                *v *= total_power / sum;
            }
        }
        PowerSpectrum::new(len, values)
    }
}

fn random_bands(len: usize, lo: usize, hi: usize, count: usize, taper: usize, seed: u64) -> Result<Vec<f64>> {
    let pieces = 2 * count.max(1) - 1;
    let min_width = 2 * taper + 2;
    let width = hi - lo + 1;
    if count == 0 || pieces * min_width > width {
        return Err(Error::Spectrum(format!("{count} bands with taper {taper} do not fit in [{lo}, {hi}]")));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let draws: Vec<f64> = (0..pieces).map(|_| Exp1.sample(&mut rng)).collect();
    let total: f64 = draws.iter().sum();
    let spare = (width - pieces * min_width) as f64;
    let mut values = vec![0.0; len / 2 + 1];
    let mut start = lo;
    let mut used = 0.0;
    for (i, d) in draws.iter().enumerate() {
        used += d;
        // cumulative rounding keeps the pieces contiguous and exactly filling the band
        let end = if i + 1 == pieces {
            hi
        } else {
            lo + (i + 1) * min_width + (spare * used / total).floor() as usize - 1
        };
        if i % 2 == 0 {
            let level = 0.5 + rng.random::<f64>();
            for (v, m) in values.iter_mut().zip(band_mask(len, start, end, taper)) {
                *v += level * m;
            }
        }
        start = end + 1;
    }
    Ok(values)
}

fn band_mask(len: usize, lo: usize, hi: usize, taper: usize) -> Vec<f64> {
    (0..=len / 2)
        .map(|k| {
            if k < lo || k > hi {
                0.0
            } else if taper > 0 && k < lo + taper {
                let x = (k - lo + 1) as f64 / (taper + 1) as f64;
                (0.5 * PI * x).sin().powi(2)
            } else if taper > 0 && k + taper > hi {
                let x = (hi - k + 1) as f64 / (taper + 1) as f64;
                (0.5 * PI * x).sin().powi(2)
            } else {
                1.0
            }
        })
        .collect()
}
