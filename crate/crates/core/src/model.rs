//! Signal model: a circular stationary Gaussian analytic signal, frequency
//! modulated and observed in real white noise.

use std::f64::consts::{E, PI};

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dft::{dft, idft};
use crate::error::{Error, Result};
use crate::gabor::GaborSystem;
use crate::indexing::FrequencyIndexing;
use crate::spectrum::PowerSpectrum;
use crate::C64;

/// Seeded generator for one independent stream of a seed.
pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

const STREAM_SIGNAL: u64 = 0;
const STREAM_NOISE: u64 = 1;

/// Draw a circular stationary analytic signal with covariance
/// `C_Z(t,s) = Σ_ν S[ν] e^{2iπν(t-s)/L}`.
pub fn synthesize_stationary(spec: &PowerSpectrum, seed: u64) -> Vec<C64> {
    let mut rng = stream_rng(seed, STREAM_SIGNAL);
    synthesize_with(spec, &mut rng)
}

fn synthesize_with(spec: &PowerSpectrum, rng: &mut ChaCha20Rng) -> Vec<C64> {
    let len = spec.len();
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let mut coeffs = vec![C64::new(0.0, 0.0); len];
    for (k, &s) in spec.values().iter().enumerate() {
        // draw for every positive bin so the stream does not depend on the support
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        coeffs[k] = C64::new(re, im) * (scale * len as f64 * s.sqrt());
    }
    idft(&coeffs)
}

/// One-sided spectrum construction: doubles strictly positive frequencies,
/// keeps DC and Nyquist, and drops negative frequencies.
pub fn analytic_signal(x: &[f64]) -> Vec<C64> {
    let len = x.len();
    if len == 0 {
        return Vec::new();
    }
    let idx = FrequencyIndexing::new(len);
    let mut spec = dft(&x.iter().map(|&v| C64::new(v, 0.0)).collect::<Vec<_>>());
    let scale: f64 = spec.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let edge_tol = 1e-9 * scale.max(f64::MIN_POSITIVE);
    if spec[0].norm() > edge_tol || (idx.has_nyquist() && spec[len / 2].norm() > edge_tol) {
        warn!("analytic_signal: input has energy at DC or Nyquist");
    }
    let top = *idx.positive_range().end();
    for (k, v) in spec.iter_mut().enumerate() {
        let edge = k == 0 || (idx.has_nyquist() && k == len / 2);
        if edge {
            continue;
        } else if k <= top {
            *v *= 2.0;
        } else {
            *v = C64::new(0.0, 0.0);
        }
    }
    idft(&spec)
}

/// Parametric families of modulation laws, in DFT bins.
#[derive(Debug, Clone, PartialEq)]
pub enum ModulationKind {
    /// `γ'(t) = k`.
    Constant { k: f64 },
    /// `γ'(t) = k0 + rate·t`.
    LinearChirp { k0: f64, rate: f64 },
    /// `γ'(t) = k0 + amplitude·sin(2π cycles t/L + phase)`.
    SineFm { k0: f64, amplitude: f64, cycles: f64, phase: f64 },
}

/// Modulation phase `γ` (in cycles scaled by `L`) and its derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulationLaw {
    gamma: Vec<f64>,
    gamma_prime: Vec<f64>,
    gamma_second_sup: f64,
}

impl ModulationLaw {
    /// Integrate a per-sample frequency law with `γ(0) = 0`; `‖γ''‖∞` is the
    /// largest forward difference of `γ'`.
    pub fn from_gamma_prime(gamma_prime: Vec<f64>) -> Result<Self> {
        let sup = gamma_prime
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .fold(0.0, f64::max);
        Self::with_second_sup(gamma_prime, sup)
    }

    fn with_second_sup(gamma_prime: Vec<f64>, gamma_second_sup: f64) -> Result<Self> {
        let len = gamma_prime.len();
        if len == 0 {
            return Err(Error::Modulation("empty modulation law".into()));
        }
        let top = (len - 1) as f64;
        if let Some(t) = gamma_prime.iter().position(|&v| !(0.0..=top).contains(&v)) {
            return Err(Error::Modulation(format!(
                "γ'({t}) = {} leaves [0, {top}]",
                gamma_prime[t]
            )));
        }
        Ok(Self { gamma: integrate(&gamma_prime), gamma_prime, gamma_second_sup })
    }

    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn gamma_prime(&self) -> &[f64] {
        &self.gamma_prime
    }

    pub fn gamma_second_sup(&self) -> f64 {
        self.gamma_second_sup
    }
}

/// Discrete integral with `γ(0) = 0`, so that `γ(t+1) - γ(t) = γ'(t)`.
pub fn integrate(gamma_prime: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    gamma_prime
        .iter()
        .map(|&v| {
            let out = acc;
            acc += v;
            out
        })
        .collect()
}

pub fn make_modulation(len: usize, kind: &ModulationKind) -> Result<ModulationLaw> {
    if len == 0 {
        return Err(Error::Modulation("empty modulation law".into()));
    }
    let l = len as f64;
    let (gp, sup): (Vec<f64>, f64) = match *kind {
        ModulationKind::Constant { k } => (vec![k; len], 0.0),
        ModulationKind::LinearChirp { k0, rate } => {
            ((0..len).map(|t| k0 + rate * t as f64).collect(), rate.abs())
        }
        ModulationKind::SineFm { k0, amplitude, cycles, phase } => {
            let omega = 2.0 * PI * cycles / l;
            let gp = (0..len).map(|t| k0 + amplitude * (omega * t as f64 + phase).sin()).collect();
            // |Δ sin| ≤ 2 sin(ω/2)
            (gp, 2.0 * amplitude.abs() * (0.5 * omega).sin().abs())
        }
    };
    if gp.iter().any(|v| !v.is_finite()) {
        return Err(Error::Modulation("non-finite parameters".into()));
    }
    ModulationLaw::with_second_sup(gp, sup)
}

/// A synthesized observation together with its stationary component.
#[derive(Debug, Clone)]
pub struct ModelSignal {
    pub z: Vec<C64>,
    pub y: Vec<C64>,
    pub y_real: Vec<f64>,
    pub noise_sigma: f64,
    /// Variance of `Z`: `Σ S[k]` when built by [`synthesize`], otherwise the
    /// sample mean of `|Z_t|²`.
    pub sigma_z2: f64,
}

/// `Y_t = Z_t e^{2iπγ(t)/L} + N_t` with real white noise of standard
/// deviation `noise_sigma`.
pub fn synthesize_observation(
    z: &[C64],
    law: &ModulationLaw,
    noise_sigma: f64,
    seed: u64,
) -> Result<ModelSignal> {
    let mut rng = stream_rng(seed, STREAM_NOISE);
    let sigma_z2 = z.iter().map(|v| v.norm_sqr()).sum::<f64>() / z.len().max(1) as f64;
    observe_with(z, law, noise_sigma, sigma_z2, &mut rng)
}

/// Stationary draw plus observation, both from one seed.
pub fn synthesize(
    spec: &PowerSpectrum,
    law: &ModulationLaw,
    noise_sigma: f64,
    seed: u64,
) -> Result<ModelSignal> {
    let z = synthesize_stationary(spec, seed);
    let mut rng = stream_rng(seed, STREAM_NOISE);
    observe_with(&z, law, noise_sigma, spec.total_power(), &mut rng)
}

fn observe_with(
    z: &[C64],
    law: &ModulationLaw,
    noise_sigma: f64,
    sigma_z2: f64,
    rng: &mut ChaCha20Rng,
) -> Result<ModelSignal> {
    if z.len() != law.len() {
        return Err(Error::Length { expected: law.len(), actual: z.len() });
    }
    if !(noise_sigma >= 0.0) {
        return Err(Error::Parameter(format!("noise sigma must be nonnegative, got {noise_sigma}")));
    }
    let len = z.len() as f64;
    let y: Vec<C64> = z
        .iter()
        .zip(law.gamma())
        .map(|(&zt, &g)| {
            let n: f64 = StandardNormal.sample(rng);
            zt * modulation_factor(g, len) + noise_sigma * n
        })
        .collect();
    let y_real = y.iter().map(|v| v.re).collect();
    Ok(ModelSignal { z: z.to_vec(), y, y_real, noise_sigma, sigma_z2 })
}

/// `e^{2iπγ/L}`, reducing `γ` mod `L` first to keep the argument small.
pub(crate) fn modulation_factor(gamma: f64, len: f64) -> C64 {
    C64::from_polar(1.0, 2.0 * PI * gamma.rem_euclid(len) / len)
}

/// Remainder bound of the local frequency-shift approximation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RemainderBound {
    /// Half-width `T = √(L / (π‖γ''‖∞))`; infinite for affine `γ`.
    pub t_half: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub bound: f64,
}

/// `σ_Z² (πe/L ‖γ''‖∞ μ₂ + 2μ₁)²` with window sums split at `T`.
///
/// Not monotone in `‖γ''‖∞`: each time `T` drops past a sample, that sample
/// moves from the `μ₂` term (weight `e|g|` at the crossing) to `2μ₁`.
pub fn remainder_bound(sys: &GaborSystem, sigma_z2: f64, gamma_second_sup: f64) -> RemainderBound {
    let len = sys.len();
    let l = len as f64;
    let idx = sys.indexing();
    let t_half = if gamma_second_sup > 0.0 {
        (l / (PI * gamma_second_sup)).sqrt()
    } else {
        f64::INFINITY
    };
    let (mut mu1, mut mu2) = (0.0, 0.0);
    for t in idx.full_range() {
        let g = sys.window().at(t).norm();
        let tf = t as f64;
        if tf.abs() <= t_half {
            mu2 += tf * tf * g;
        } else {
            mu1 += g;
        }
    }
    let inner = PI * E / l * gamma_second_sup * mu2 + 2.0 * mu1;
    RemainderBound { t_half, mu1, mu2, bound: sigma_z2 * inner * inner }
}

/// Stationary-signal part of the frequency-shifted slice at `frame`:
/// `Σ_t Z_t conj(g[t-na]) e^{-2iπ(mb + c - shift)(t-na)/L}` with `t - na`
/// folded into `I_L`. `shift` is in fine bins.
pub fn shifted_slice(z: &[C64], sys: &GaborSystem, frame: usize, shift: f64, offset: usize) -> Vec<C64> {
    let len = sys.len();
    let idx = sys.indexing();
    let centre = (frame * sys.hop()) as i64;
    (0..sys.num_bins())
        .map(|m| {
            let freq = (m * sys.stride() + offset) as f64 - shift;
            (0..len as i64)
                .map(|t| {
                    let s = idx.fold(t - centre) as f64;
                    z[t as usize]
                        * sys.window().at(t - centre).conj()
                        * C64::from_polar(1.0, -2.0 * PI * freq * s / len as f64)
                })
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::window::{make_window, WindowKind};

    #[test]
    fn zero_spectrum_gives_zero_signal() {
        let z = synthesize_stationary(&PowerSpectrum::zeros(32), 3);
        assert!(z.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn synthesis_is_analytic_and_seeded() {
        let spec = crate::spectrum::SpectrumShape::RaisedCosine { lo: 3, hi: 12, taper: 2 }
            .build(32, 1.0, 0)
            .unwrap();
        let z = synthesize_stationary(&spec, 11);
        assert_eq!(z, synthesize_stationary(&spec, 11));
        assert_ne!(z, synthesize_stationary(&spec, 12));
        let zh = dft(&z);
        for k in 17..32 {
            assert!(zh[k].norm() < 1e-12);
        }
        assert!(zh[0].norm() < 1e-12);
    }

    #[test]
    fn analytic_pair_of_cosine() {
        let len = 32;
        let k = 5.0;
        let x: Vec<f64> = (0..len).map(|t| (2.0 * PI * k * t as f64 / len as f64).cos()).collect();
        let z = analytic_signal(&x);
        for (t, v) in z.iter().enumerate() {
            let expected = C64::from_polar(1.0, 2.0 * PI * k * t as f64 / len as f64);
            assert!((v - expected).norm() < 1e-12);
        }
        assert!(analytic_signal(&vec![0.0; 16]).iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn analytic_round_trip_of_synthesized_signal() {
        let spec = crate::spectrum::SpectrumShape::RaisedCosine { lo: 4, hi: 40, taper: 4 }
            .build(97, 2.0, 0)
            .unwrap();
        let z = synthesize_stationary(&spec, 5);
        let re: Vec<f64> = z.iter().map(|v| v.re).collect();
        let back = analytic_signal(&re);
        for (a, b) in z.iter().zip(&back) {
            assert!((a - b).norm() < 1e-10);
        }
        // idempotence
        let again = analytic_signal(&back.iter().map(|v| v.re).collect::<Vec<_>>());
        for (a, b) in again.iter().zip(&back) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn modulation_families() {
        let c = make_modulation(64, &ModulationKind::Constant { k: 3.0 }).unwrap();
        assert_eq!(c.gamma_second_sup(), 0.0);
        for (t, g) in c.gamma().iter().enumerate() {
            assert_eq!(*g, 3.0 * t as f64);
        }
        let r = 0.25;
        let ch = make_modulation(64, &ModulationKind::LinearChirp { k0: 0.0, rate: r }).unwrap();
        assert_eq!(ch.gamma_second_sup(), r);
        for (t, g) in ch.gamma().iter().enumerate() {
            let t = t as f64;
            assert!((g - r * t * (t - 1.0) / 2.0).abs() < 1e-9);
        }
        for t in 0..63 {
            assert!((ch.gamma()[t + 1] - ch.gamma()[t] - ch.gamma_prime()[t]).abs() < 1e-12);
        }
    }

    #[test]
    fn sine_fm_curvature_closed_form() {
        let len = 512;
        let kind = ModulationKind::SineFm { k0: 100.0, amplitude: 30.0, cycles: 3.0, phase: 0.4 };
        let law = make_modulation(len, &kind).unwrap();
        let numeric = law
            .gamma_prime()
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .fold(0.0, f64::max);
        let continuous = 30.0 * 2.0 * PI * 3.0 / len as f64;
        assert!(numeric <= law.gamma_second_sup() + 1e-12);
        assert!((law.gamma_second_sup() - numeric) / numeric < 1e-3);
        assert!((law.gamma_second_sup() - continuous).abs() / continuous < 1e-3);
    }

    #[test]
    fn modulation_range_is_enforced() {
        assert!(make_modulation(64, &ModulationKind::Constant { k: 64.0 }).is_err());
        assert!(make_modulation(64, &ModulationKind::LinearChirp { k0: 1.0, rate: -0.5 }).is_err());
        let kind = ModulationKind::SineFm { k0: 5.0, amplitude: 10.0, cycles: 1.0, phase: 0.0 };
        assert!(make_modulation(64, &kind).is_err());
    }

    #[test]
    fn identity_modulation_without_noise() {
        let spec = crate::spectrum::SpectrumShape::RaisedCosine { lo: 2, hi: 10, taper: 1 }
            .build(32, 1.0, 0)
            .unwrap();
        let z = synthesize_stationary(&spec, 1);
        let law = make_modulation(32, &ModulationKind::Constant { k: 0.0 }).unwrap();
        let obs = synthesize_observation(&z, &law, 0.0, 9).unwrap();
        assert_eq!(obs.y, z);
        assert_eq!(obs.y_real, z.iter().map(|v| v.re).collect::<Vec<_>>());
    }

    #[test]
    fn integer_modulation_shifts_dft() {
        let spec = crate::spectrum::SpectrumShape::RaisedCosine { lo: 2, hi: 10, taper: 1 }
            .build(32, 1.0, 0)
            .unwrap();
        let z = synthesize_stationary(&spec, 1);
        let law = make_modulation(32, &ModulationKind::Constant { k: 7.0 }).unwrap();
        let obs = synthesize_observation(&z, &law, 0.0, 9).unwrap();
        let zh = dft(&z);
        let yh = dft(&obs.y);
        for k in 0..32 {
            assert!((yh[(k + 7) % 32] - zh[k]).norm() < 1e-10);
        }
    }

    #[test]
    fn modulation_preserves_power_pointwise() {
        let spec = crate::spectrum::SpectrumShape::RaisedCosine { lo: 2, hi: 20, taper: 2 }
            .build(64, 1.0, 0)
            .unwrap();
        let kind = ModulationKind::SineFm { k0: 12.0, amplitude: 5.0, cycles: 2.0, phase: 0.0 };
        let law = make_modulation(64, &kind).unwrap();
        let z = synthesize_stationary(&spec, 2);
        let obs = synthesize_observation(&z, &law, 0.0, 3).unwrap();
        for (a, b) in obs.y.iter().zip(&z) {
            assert!((a.norm() - b.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn remainder_bound_edge_cases() {
        let w = make_window(WindowKind::Gauss, 128, 16.0).unwrap();
        let sys = GaborSystem::new(128, 8, 4, w).unwrap();
        let zero = remainder_bound(&sys, 1.0, 0.0);
        assert_eq!(zero.bound, 0.0);
        assert_eq!(zero.mu1, 0.0);
        assert!(zero.t_half.is_infinite());
        // Monotone while the split of the window at T is unchanged; when T
        // passes a sample its weight drops from e|g| to 2|g|, so the bound
        // can step down there.
        let grid: Vec<RemainderBound> = (1..=20).map(|i| remainder_bound(&sys, 1.0, 0.05 * i as f64)).collect();
        for pair in grid.windows(2) {
            if pair[0].mu1 == pair[1].mu1 {
                assert!(pair[1].bound >= pair[0].bound);
            }
        }
        assert!(grid[19].bound > grid[0].bound);
    }

    #[test]
    fn remainder_bound_matches_direct_sums() {
        let len = 128;
        let w = make_window(WindowKind::Gauss, len, 24.0).unwrap();
        let sys = GaborSystem::new(len, 8, 4, w.clone()).unwrap();
        let curvature = 4.0;
        let rb = remainder_bound(&sys, 2.0, curvature);
        let t = (len as f64 / (PI * curvature)).sqrt();
        assert!(t < 24.0);
        let (mut mu1, mut mu2) = (0.0, 0.0);
        for s in -63i64..=64 {
            let g = w.at(s).norm();
            if (s as f64).abs() <= t {
                mu2 += (s * s) as f64 * g;
            } else {
                mu1 += g;
            }
        }
        assert!(mu1 > 0.0);
        assert!((rb.mu1 - mu1).abs() < 1e-12 && (rb.mu2 - mu2).abs() < 1e-9);
        let expected = 2.0 * (PI * E / len as f64 * curvature * mu2 + 2.0 * mu1).powi(2);
        assert!((rb.bound - expected).abs() < 1e-9 * expected);
    }
}
