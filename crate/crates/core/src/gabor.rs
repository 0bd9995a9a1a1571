//! Periodic short-time Fourier and Gabor analysis on frequency-shifted
//! lattices.
//!
//! The STFT phase is referenced to the window centre:
//! `V x(m, n) = Σ_t x[t] conj(g[t-n]) e^{-2iπ m (t-n)/L}`, so that one
//! column of the lattice transform is the DFT of `x[· + n] conj(g)`.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::dft::dft_in_place;
use crate::error::{Error, Result};
use crate::indexing::FrequencyIndexing;
use crate::window::Window;
use crate::C64;

/// Lattice `(a, b)` with window on a length-`L` circle.
#[derive(Debug, Clone)]
pub struct GaborSystem {
    len: usize,
    hop: usize,
    stride: usize,
    window: Arc<Window>,
    kg: f64,
}

impl GaborSystem {
    pub fn new(len: usize, hop: usize, stride: usize, window: Window) -> Result<Self> {
        if len == 0 || hop == 0 || stride == 0 {
            return Err(Error::Lattice("length, hop and stride must be positive".into()));
        }
        if len % hop != 0 {
            return Err(Error::Lattice(format!("hop {hop} does not divide length {len}")));
        }
        if len % stride != 0 {
            return Err(Error::Lattice(format!(
                "bin stride {stride} does not divide length {len}"
            )));
        }
        if window.len() != len {
            return Err(Error::Length { expected: len, actual: window.len() });
        }
        let kg = window_kg_of(&window, len / stride, stride);
        Ok(Self { len, hop, stride, window: Arc::new(window), kg })
    }

    /// Signal length `L`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Time hop `a`.
    pub fn hop(&self) -> usize {
        self.hop
    }

    /// Frequency stride `b`.
    pub fn stride(&self) -> usize {
        self.stride
    }

    /// `M = L/b`.
    pub fn num_bins(&self) -> usize {
        self.len / self.stride
    }

    /// `N = L/a`.
    pub fn num_frames(&self) -> usize {
        self.len / self.hop
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn indexing(&self) -> FrequencyIndexing {
        FrequencyIndexing::new(self.len)
    }

    /// Cached `K_g`, see [`window_kg`].
    pub fn kg(&self) -> f64 {
        self.kg
    }

    /// Same window and stride with a different time hop.
    pub fn with_hop(&self, hop: usize) -> Result<Self> {
        if hop == 0 || self.len % hop != 0 {
            return Err(Error::Lattice(format!("hop {hop} does not divide length {}", self.len)));
        }
        Ok(Self { hop, ..self.clone() })
    }

    fn check_offset(&self, offset: usize) -> Result<()> {
        if offset >= self.stride {
            return Err(Error::Offset { offset, stride: self.stride });
        }
        Ok(())
    }

    fn check_signal(&self, x: &[C64]) -> Result<()> {
        if x.len() != self.len {
            return Err(Error::Length { expected: self.len, actual: x.len() });
        }
        Ok(())
    }
}

/// Gabor coefficients `G^c[m, n] = V x(mb + c, na)` stored frame by frame.
#[derive(Debug, Clone)]
pub struct TFMatrix {
    coefficients: Vec<C64>,
    system: GaborSystem,
    offset: usize,
}

impl TFMatrix {
    /// Wrap coefficients laid out as `N` consecutive slices of length `M`.
    pub fn from_slices(system: GaborSystem, offset: usize, coefficients: Vec<C64>) -> Result<Self> {
        system.check_offset(offset)?;
        let expected = system.num_bins() * system.num_frames();
        if coefficients.len() != expected {
            return Err(Error::Length { expected, actual: coefficients.len() });
        }
        Ok(Self { coefficients, system, offset })
    }

    pub fn system(&self) -> &GaborSystem {
        &self.system
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn num_bins(&self) -> usize {
        self.system.num_bins()
    }

    pub fn num_frames(&self) -> usize {
        self.system.num_frames()
    }

    pub fn get(&self, bin: usize, frame: usize) -> C64 {
        self.coefficients[frame * self.num_bins() + bin]
    }

    /// Time slice at `frame`, indexed by bin.
    pub fn slice(&self, frame: usize) -> &[C64] {
        let m = self.num_bins();
        &self.coefficients[frame * m..(frame + 1) * m]
    }

    pub fn slices(&self) -> impl Iterator<Item = &[C64]> {
        self.coefficients.chunks_exact(self.num_bins())
    }
}

/// Single STFT coefficient by direct summation; indices are taken mod `L`.
pub fn stft(x: &[C64], window: &Window, bin: i64, time: i64) -> C64 {
    let len = x.len() as i64;
    assert_eq!(window.len() as i64, len, "window and signal lengths differ");
    let mut acc = C64::new(0.0, 0.0);
    for t in 0..len {
        let s = t - time;
        let phase = (bin * s).rem_euclid(len) as f64;
        acc += x[t as usize] * window.at(s).conj() * C64::from_polar(1.0, -2.0 * PI * phase / len as f64);
    }
    acc
}

/// Full-resolution spectra of all frames: for frame `n`, the length-`L`
/// DFT of `x[· + na] conj(g)`. Entry `k` of frame `n` is `V x(k, na)`.
pub fn frame_spectra(x: &[C64], sys: &GaborSystem) -> Result<Vec<Vec<C64>>> {
    sys.check_signal(x)?;
    let len = sys.len();
    let g = sys.window().samples();
    Ok((0..sys.num_frames())
        .map(|n| {
            let start = n * sys.hop();
            let mut buf: Vec<C64> = (0..len)
                .map(|s| x[(s + start) % len] * g[s].conj())
                .collect();
            dft_in_place(&mut buf);
            buf
        })
        .collect())
}

/// Gabor transform on the lattice shifted by `offset` bins.
pub fn gabor(x: &[C64], sys: &GaborSystem, offset: usize) -> Result<TFMatrix> {
    sys.check_offset(offset)?;
    let spectra = frame_spectra(x, sys)?;
    Ok(decimate(&spectra, sys, offset))
}

/// All `b` offset transforms from a single pass of frame spectra.
pub fn gabor_all_offsets(x: &[C64], sys: &GaborSystem) -> Result<Vec<TFMatrix>> {
    let spectra = frame_spectra(x, sys)?;
    Ok((0..sys.stride()).map(|c| decimate(&spectra, sys, c)).collect())
}

fn decimate(spectra: &[Vec<C64>], sys: &GaborSystem, offset: usize) -> TFMatrix {
    let m_bins = sys.num_bins();
    let b = sys.stride();
    let mut coefficients = Vec::with_capacity(m_bins * spectra.len());
    for spec in spectra {
        coefficients.extend((0..m_bins).map(|m| spec[m * b + offset]));
    }
    TFMatrix { coefficients, system: sys.clone(), offset }
}

/// `K_g = min_t Σ_{k<b} |g[t + kM]|²` for the system's lattice.
pub fn window_kg(sys: &GaborSystem) -> f64 {
    sys.kg()
}

fn window_kg_of(window: &Window, num_bins: usize, stride: usize) -> f64 {
    let len = window.len();
    let g = window.samples();
    (0..len)
        .map(|t| (0..stride).map(|k| g[(t + k * num_bins) % len].norm_sqr()).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::window::{make_window, WindowKind};

    fn impulse(len: usize) -> Window {
        let mut v = vec![C64::new(0.0, 0.0); len];
        v[0] = C64::new(1.0, 0.0);
        Window::new(v).unwrap()
    }

    fn test_signal(len: usize) -> Vec<C64> {
        (0..len)
            .map(|t| C64::new((0.3 * t as f64).sin() + 0.1 * t as f64, (1.7 * t as f64).cos()))
            .collect()
    }

    #[test]
    fn impulse_window_samples_signal() {
        let x = test_signal(8);
        let w = impulse(8);
        for n in 0..8 {
            for m in 0..8 {
                assert!((stft(&x, &w, m, n) - x[n as usize]).norm() < 1e-12);
            }
        }
        let sys = GaborSystem::new(8, 2, 2, w).unwrap();
        let tf = gabor(&x, &sys, 0).unwrap();
        for n in 0..4 {
            for m in 0..4 {
                assert!((tf.get(m, n) - x[2 * n]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn impulse_signal_gives_single_term() {
        let len = 16;
        let w = make_window(WindowKind::Hann, len, 6.0).unwrap();
        let t0 = 3i64;
        let mut x = vec![C64::new(0.0, 0.0); len];
        x[t0 as usize] = C64::new(1.0, 0.0);
        for n in 0..len as i64 {
            for m in 0..len as i64 {
                let expected = w.at(t0 - n).conj()
                    * C64::from_polar(1.0, -2.0 * PI * (m * (t0 - n)) as f64 / len as f64);
                assert!((stft(&x, &w, m, n) - expected).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn flat_window_on_pure_tone() {
        let len = 8usize;
        let w = Window::new(vec![C64::new(1.0, 0.0); len]).unwrap();
        for k in 0..len as i64 {
            let x: Vec<C64> = (0..len)
                .map(|t| C64::from_polar(1.0, 2.0 * PI * (k * t as i64) as f64 / len as f64))
                .collect();
            for m in 0..len as i64 {
                for n in 0..len as i64 {
                    let got = stft(&x, &w, m, n);
                    let expected = if m == k {
                        C64::from_polar(8.0, 2.0 * PI * (m * n) as f64 / 8.0)
                    } else {
                        C64::new(0.0, 0.0)
                    };
                    assert!((got - expected).norm() < 1e-12, "k={k} m={m} n={n}");
                }
            }
        }
    }

    #[test]
    fn offsets_interleave_into_dense_stft() {
        let len = 48;
        let x = test_signal(len);
        let w = make_window(WindowKind::Gauss, len, 8.0).unwrap();
        let sys = GaborSystem::new(len, 4, 3, w.clone()).unwrap();
        let all = gabor_all_offsets(&x, &sys).unwrap();
        for (c, tf) in all.iter().enumerate() {
            assert_eq!(tf.offset(), c);
            for n in 0..sys.num_frames() {
                for m in 0..sys.num_bins() {
                    let direct = stft(&x, &w, (m * 3 + c) as i64, (n * 4) as i64);
                    assert!((tf.get(m, n) - direct).norm() < 1e-10);
                }
            }
        }
        let single = gabor(&x, &sys, 2).unwrap();
        assert_eq!(single.slice(5), all[2].slice(5));
    }

    #[test]
    fn time_shift_rotates_frames() {
        let len = 32;
        let x = test_signal(len);
        let w = make_window(WindowKind::Gauss, len, 6.0).unwrap();
        let sys = GaborSystem::new(len, 4, 2, w).unwrap();
        // x(· - a)
        let shifted: Vec<C64> = (0..len).map(|t| x[(t + len - 4) % len]).collect();
        let a = gabor(&x, &sys, 1).unwrap();
        let b = gabor(&shifted, &sys, 1).unwrap();
        let frames = sys.num_frames();
        for n in 0..frames {
            for m in 0..sys.num_bins() {
                assert!((b.get(m, (n + 1) % frames) - a.get(m, n)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn lattice_validation() {
        let w = make_window(WindowKind::Gauss, 64, 8.0).unwrap();
        assert!(GaborSystem::new(64, 5, 4, w.clone()).is_err());
        assert!(GaborSystem::new(64, 4, 6, w.clone()).is_err());
        let sys = GaborSystem::new(64, 4, 4, w).unwrap();
        assert_eq!((sys.num_bins(), sys.num_frames()), (16, 16));
        let x = test_signal(64);
        assert!(matches!(gabor(&x, &sys, 4), Err(Error::Offset { .. })));
        assert!(gabor(&x[..10], &sys, 0).is_err());
    }

    #[test]
    fn kg_of_flat_and_impulse_windows() {
        let flat = Window::new(vec![C64::new(1.0, 0.0); 24]).unwrap();
        let sys = GaborSystem::new(24, 4, 3, flat).unwrap();
        assert_eq!(window_kg(&sys), 3.0);
        let sys = GaborSystem::new(24, 4, 3, impulse(24)).unwrap();
        assert_eq!(window_kg(&sys), 0.0);
    }

    #[test]
    fn kg_of_gaussian_matches_brute_force() {
        let len = 64;
        let b = 4;
        let m_bins = 16;
        let w = make_window(WindowKind::Gauss, len, 12.0).unwrap();
        let sys = GaborSystem::new(len, 4, b, w.clone()).unwrap();
        let mut best = f64::MAX;
        for t in 0..len as i64 {
            let mut s = 0.0;
            for k in 0..b as i64 {
                let v = w.at(t + k * m_bins as i64);
                s += v.re * v.re + v.im * v.im;
            }
            best = best.min(s);
        }
        assert!(best > 0.0);
        assert!((window_kg(&sys) - best).abs() < 1e-15);
    }
}
