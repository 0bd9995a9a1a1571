//! Power spectrum estimates of a (demodulated, approximately stationary)
//! signal on the `L`-point frequency grid.

use std::f64::consts::PI;

use crate::dft::dft_in_place;
use crate::error::{Error, Result};
use crate::gabor::{frame_spectra, GaborSystem};
use crate::spectrum::PowerSpectrum;
use crate::window::{make_window, WindowKind};
use crate::C64;

#[derive(Debug, Clone, PartialEq)]
pub enum SpectrumMethod {
    /// Averaged tapered periodograms of `segment`-sample segments taken
    /// every `hop` samples around the circle, evaluated on the `L`-point grid.
    Welch { segment: usize, hop: usize, taper: SegmentTaper },
    /// Time average of the squared STFT on the analysis frames. `width`
    /// replaces the system window by a Gaussian of that width.
    Marginal { width: Option<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentTaper {
    Hann,
    Rect,
}

/// Per-bin variance estimate `Ŝ[k]` on `I_L⁺`, with DC and Nyquist zeroed.
///
/// Both methods divide the averaged `|·|²` by `L‖w‖²`, so that a white
/// process of variance `σ²` gives `σ²/L` per bin.
pub fn estimate_spectrum(u: &[C64], sys: &GaborSystem, method: &SpectrumMethod) -> Result<PowerSpectrum> {
    let len = sys.len();
    if u.len() != len {
        return Err(Error::Length { expected: len, actual: u.len() });
    }
    let power = match *method {
        SpectrumMethod::Welch { segment, hop, taper } => welch(u, segment, hop, taper)?,
        SpectrumMethod::Marginal { width } => {
            let local;
            let sys = match width {
                Some(w) => {
                    local = GaborSystem::new(len, sys.hop(), sys.stride(), make_window(WindowKind::Gauss, len, w)?)?;
                    &local
                }
                None => sys,
            };
            let spectra = frame_spectra(u, sys)?;
            let norm = spectra.len() as f64 * len as f64 * sys.window().energy();
            let mut acc = vec![0.0; len];
            for spec in &spectra {
                for (a, v) in acc.iter_mut().zip(spec) {
                    *a += v.norm_sqr();
                }
            }
            acc.iter().map(|v| v / norm).collect()
        }
    };
    let mut values: Vec<f64> = power[..=len / 2].to_vec();
    values[0] = 0.0;
    if len % 2 == 0 {
        values[len / 2] = 0.0;
    }
    PowerSpectrum::new(len, values)
}

fn welch(u: &[C64], segment: usize, hop: usize, taper: SegmentTaper) -> Result<Vec<f64>> {
    let len = u.len();
    if segment < 2 || segment > len {
        return Err(Error::Parameter(format!("Welch segment {segment} must lie in [2, {len}]")));
    }
    if hop == 0 || len % hop != 0 {
        return Err(Error::Parameter(format!("Welch hop {hop} must divide the length {len}")));
    }
    let w: Vec<f64> = (0..segment)
        .map(|s| match taper {
            SegmentTaper::Hann => (PI * (s as f64 + 0.5) / segment as f64).sin().powi(2),
            SegmentTaper::Rect => 1.0,
        })
        .collect();
    let energy: f64 = w.iter().map(|v| v * v).sum();
    let count = len / hop;
    let mut acc = vec![0.0; len];
    let mut buf = vec![C64::new(0.0, 0.0); len];
    for j in 0..count {
        buf.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        let start = j * hop;
        for (s, ws) in w.iter().enumerate() {
            buf[s] = u[(start + s) % len] * *ws;
        }
        dft_in_place(&mut buf);
        for (a, v) in acc.iter_mut().zip(&buf) {
            *a += v.norm_sqr();
        }
    }
    let norm = count as f64 * len as f64 * energy;
    Ok(acc.into_iter().map(|v| v / norm).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(len: usize) -> GaborSystem {
        GaborSystem::new(len, 8, 4, make_window(WindowKind::Gauss, len, 16.0).unwrap()).unwrap()
    }

    #[test]
    fn tone_peaks_at_its_bin() {
        let len = 256;
        let nu = 37;
        let u: Vec<C64> = (0..len)
            .map(|t| C64::from_polar(1.0, 2.0 * PI * (nu * t) as f64 / len as f64))
            .collect();
        let s = sys(len);
        for method in [
            SpectrumMethod::Welch { segment: 64, hop: 32, taper: SegmentTaper::Hann },
            SpectrumMethod::Marginal { width: None },
            SpectrumMethod::Marginal { width: Some(24.0) },
        ] {
            let est = estimate_spectrum(&u, &s, &method).unwrap();
            let peak = est.values().iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
            assert_eq!(peak, nu, "{method:?}");
        }
        // a full-length rectangular segment holds an integer number of periods
        let rect = SpectrumMethod::Welch { segment: len, hop: len, taper: SegmentTaper::Rect };
        let est = estimate_spectrum(&u, &s, &rect).unwrap();
        for (k, v) in est.values().iter().enumerate() {
            let expected = if k == nu { 1.0 } else { 0.0 };
            assert!((v - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_signal_zero_spectrum() {
        let s = sys(64);
        let u = vec![C64::new(0.0, 0.0); 64];
        for method in [SpectrumMethod::Welch { segment: 16, hop: 8, taper: SegmentTaper::Hann }, SpectrumMethod::Marginal { width: None }] {
            assert!(estimate_spectrum(&u, &s, &method).unwrap().values().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn white_noise_level() {
        // unit-variance complex white noise: σ²/L per bin on average
        let len = 1024;
        let mut rng = crate::model::stream_rng(4, 0);
        use rand_distr::{Distribution, StandardNormal};
        let u: Vec<C64> = (0..len)
            .map(|_| {
                let a: f64 = StandardNormal.sample(&mut rng);
                let b: f64 = StandardNormal.sample(&mut rng);
                C64::new(a, b) * std::f64::consts::FRAC_1_SQRT_2
            })
            .collect();
        let s = sys(len);
        for method in [SpectrumMethod::Welch { segment: 64, hop: 32, taper: SegmentTaper::Hann }, SpectrumMethod::Marginal { width: None }] {
            let est = estimate_spectrum(&u, &s, &method).unwrap();
            let mean = est.values()[1..len / 2].iter().sum::<f64>() / (len / 2 - 1) as f64;
            assert!((mean * len as f64 - 1.0).abs() < 0.1, "{method:?}: {}", mean * len as f64);
        }
    }

    #[test]
    fn welch_parameter_errors() {
        let s = sys(64);
        let u = vec![C64::new(1.0, 0.0); 64];
        assert!(estimate_spectrum(&u, &s, &SpectrumMethod::Welch { segment: 1, hop: 8, taper: SegmentTaper::Hann }).is_err());
        assert!(estimate_spectrum(&u, &s, &SpectrumMethod::Welch { segment: 128, hop: 8, taper: SegmentTaper::Hann }).is_err());
        assert!(estimate_spectrum(&u, &s, &SpectrumMethod::Welch { segment: 16, hop: 7, taper: SegmentTaper::Hann }).is_err());
        assert!(estimate_spectrum(&u[..10], &s, &SpectrumMethod::Marginal { width: None }).is_err());
    }
}
