//! Alternating covariance / modulation estimation loop.

use log::{debug, info, warn};

use crate::covariance::{empirical_slice_cov, noise_cov, shifted_total_cov, signal_cov, SliceCovariance};
use crate::error::{Error, Result};
use crate::gabor::{gabor, gabor_all_offsets, GaborSystem};
use crate::spectrum::PowerSpectrum;
use crate::C64;

use super::init::{init_center_of_mass, smooth_periodic};
use super::search::{candidates_for_offset, ml_shift_refined};
use super::spectral::{estimate_spectrum, SegmentTaper, SpectrumMethod};
use super::track::{demodulate, track_from_frames, Interpolation, ModulationTrack};

/// Where the unshifted slice covariance comes from at each iteration.
#[derive(Debug, Clone, PartialEq)]
pub enum CovarianceSource {
    /// Sample covariance of the offset-0 Gabor slices of the demodulated
    /// signal, taken every `hop` samples (`None`: the system hop).
    Empirical { hop: Option<usize> },
    /// Model covariance built from a Welch estimate of the demodulated
    /// spectrum (Hann segments of length `segment`, half overlap) plus the
    /// white-noise term for the known noise level.
    Spectral { segment: usize },
}

/// Constraint fixing the additive constant of `γ̂'`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnchorPolicy {
    /// Start from the raw centre of mass; the demodulated spectrum ends up
    /// centred at DC.
    CentreOfMass,
    /// Start from the centre of mass minus `L/4`. After every iteration the
    /// new estimates are shifted by a whole number of bins so that their
    /// median change from the previous iterate is zero, and, if the band
    /// occupied by the demodulated signal has left the positive half of the
    /// spectrum, so that it is centred at `L/4` again. Without this the free
    /// constant jumps between iterations and drifts the band across DC or
    /// Nyquist, where the positive-band template truncates it.
    QuarterBand,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    pub epsilon: f64,
    pub max_iter: usize,
    pub ridge_rel: f64,
    pub interpolation: Interpolation,
    /// Admissible fine-grid `γ'` values, inclusive; `None` for `[0, L-1]`.
    pub search_range: Option<(usize, usize)>,
    pub covariance: CovarianceSource,
    pub spectrum_method: SpectrumMethod,
    pub anchor: AnchorPolicy,
    /// Low-pass the initial centre-of-mass track to this many Fourier
    /// harmonics over the frames; `None` keeps it raw.
    pub init_harmonics: Option<usize>,
    /// Highest signal-to-noise ratio (dB) the model covariance assumes: the
    /// noise term is at least `mean|Y|² / 10^(snr/10)`. `None` trusts the
    /// given noise level, however small.
    pub max_snr_db: Option<f64>,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            max_iter: 50,
            ridge_rel: 1e-6,
            interpolation: Interpolation::Cubic,
            search_range: None,
            covariance: CovarianceSource::Spectral { segment: 1024 },
            spectrum_method: SpectrumMethod::Welch { segment: 64, hop: 32, taper: SegmentTaper::Hann },
            anchor: AnchorPolicy::QuarterBand,
            init_harmonics: Some(2),
            max_snr_db: Some(30.0),
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::Parameter(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.max_iter == 0 {
            return Err(Error::Parameter("max_iter must be at least 1".into()));
        }
        if !(self.ridge_rel >= 0.0) {
            return Err(Error::Parameter(format!("ridge must be nonnegative, got {}", self.ridge_rel)));
        }
        if let Some(db) = self.max_snr_db {
            if !db.is_finite() {
                return Err(Error::Parameter(format!("max_snr_db must be finite, got {db}")));
            }
        }
        if let CovarianceSource::Spectral { segment } = self.covariance {
            if segment < 2 {
                return Err(Error::Parameter(format!("template segment must be at least 2, got {segment}")));
            }
        }
        if let Some((lo, hi)) = self.search_range {
            if lo > hi {
                return Err(Error::Parameter(format!("empty search range [{lo}, {hi}]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct IterationLog {
    /// Criterion after each completed iteration.
    pub criteria: Vec<f64>,
    /// `tracks[0]` is the initialization, `tracks[k]` the estimate after
    /// iteration `k`.
    pub tracks: Vec<ModulationTrack>,
    pub converged: bool,
    pub spectrum: PowerSpectrum,
    /// Final demodulated signal.
    pub demodulated: Vec<C64>,
    pub config: EstimatorConfig,
    pub noise_sigma: Option<f64>,
    pub seed: Option<u64>,
}

impl IterationLog {
    pub fn iterations(&self) -> usize {
        self.criteria.len()
    }

    pub fn final_track(&self) -> &ModulationTrack {
        self.tracks.last().expect("log holds at least the initialization")
    }
}

/// `‖prev - next‖₂ / ‖next‖₂`; `+∞` when `next` vanishes.
pub fn stopping_criterion(prev: &[f64], next: &[f64]) -> f64 {
    let den = next.iter().map(|v| v * v).sum::<f64>().sqrt();
    if den == 0.0 {
        warn!("stopping criterion: all-zero shift track");
        return f64::INFINITY;
    }
    let num = prev.iter().zip(next).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    num / den
}

/// Joint estimation of the modulation and the stationary covariance.
///
/// Frame shifts start from the spectral centre of mass of the observation.
/// Each iteration interpolates them to a per-sample law, demodulates,
/// estimates the offset-0 slice covariance of the demodulated signal, and
/// re-estimates every frame shift by the two-stage search over the `b`
/// offset transforms of the observation, all compared against that one
/// covariance. The loop stops when the relative change of the shifts drops
/// below `epsilon` or after `max_iter` iterations.
pub fn run_algorithm1(
    y: &[C64],
    sys: &GaborSystem,
    noise_sigma: Option<f64>,
    cfg: &EstimatorConfig,
) -> Result<IterationLog> {
    cfg.validate()?;
    if y.len() != sys.len() {
        return Err(Error::Length { expected: sys.len(), actual: y.len() });
    }
    let len = sys.len();
    let b = sys.stride();
    let observed = gabor_all_offsets(y, sys)?;
    let range = cfg.search_range.unwrap_or((0, len - 1));
    let candidates: Vec<Vec<usize>> =
        (0..b).map(|c| candidates_for_offset(sys.num_bins(), b, c, range)).collect();
    if candidates.iter().all(Vec::is_empty) {
        return Err(Error::EmptyCandidates);
    }
    let noise_model = match cfg.covariance {
        CovarianceSource::Spectral { .. } => {
            let floor = cfg.max_snr_db.map_or(0.0, |db| {
                let power = y.iter().map(|v| v.norm_sqr()).sum::<f64>() / len as f64;
                (power / 10f64.powf(db / 10.0)).sqrt()
            });
            Some(noise_cov(sys, noise_sigma.unwrap_or(0.0).max(floor)))
        }
        CovarianceSource::Empirical { .. } => None,
    };

    let anchor = match cfg.anchor {
        AnchorPolicy::CentreOfMass => 0.0,
        AnchorPolicy::QuarterBand => len as f64 / 4.0,
    };
    let mut com = init_center_of_mass(&observed[0]);
    if let Some(h) = cfg.init_harmonics {
        com = smooth_periodic(&com, h);
    }
    let mut frame_gp: Vec<f64> = com
        .into_iter()
        .map(|com| (com * b as f64 - anchor).rem_euclid(len as f64))
        .collect();
    let mut track = track_from_frames(&frame_gp, sys, cfg.interpolation)?;
    let mut tracks = vec![track.clone()];
    let mut criteria = Vec::new();
    let mut converged = false;

    for iter in 1..=cfg.max_iter {
        let u = demodulate(y, &track.sample_gamma)?;
        let cov = slice_covariance(&u, sys, cfg, noise_model.as_ref())?;
        let covs = vec![&cov; b];
        let mut next = Vec::with_capacity(frame_gp.len());
        let mut offsets = Vec::with_capacity(frame_gp.len());
        for n in 0..sys.num_frames() {
            let slices: Vec<&[C64]> = observed.iter().map(|tf| tf.slice(n)).collect();
            if slices.iter().all(|s| s.iter().all(|v| v.norm_sqr() == 0.0)) {
                warn!("frame {n} is all zero; keeping the neighbouring estimate");
                let keep = next.last().copied().unwrap_or(frame_gp[n]);
                next.push(keep);
                offsets.push(track.offsets[n]);
                continue;
            }
            let best = ml_shift_refined(&slices, &covs, &candidates)?;
            next.push(best.gamma_prime);
            offsets.push(best.offset);
        }
        if cfg.anchor == AnchorPolicy::QuarterBand {
            let shift = recentring_shift(&u) - median_change(&frame_gp, &next, len).round();
            if shift != 0.0 {
                debug!("iteration {iter}: shifting estimates by {shift} bins");
                for (g, c) in next.iter_mut().zip(offsets.iter_mut()) {
                    *g = (*g + shift).rem_euclid(len as f64);
                    *c = (g.round() as usize) % b;
                }
            }
        }
        let prev_delta = track.frame_delta.clone();
        track = track_from_frames(&next, sys, cfg.interpolation)?;
        track.offsets = offsets;
        let crit = stopping_criterion(&prev_delta, &track.frame_delta);
        debug!("iteration {iter}: criterion {crit:e}");
        criteria.push(crit);
        tracks.push(track.clone());
        frame_gp = next;
        if crit < cfg.epsilon {
            converged = true;
            break;
        }
    }
    if converged {
        info!("converged after {} iterations", criteria.len());
    } else {
        info!("no convergence after {} iterations (last criterion {:e})", criteria.len(), criteria.last().unwrap());
    }
    let demodulated = demodulate(y, &track.sample_gamma)?;
    let spectrum = estimate_spectrum(&demodulated, sys, &cfg.spectrum_method)?;
    Ok(IterationLog {
        criteria,
        tracks,
        converged,
        spectrum,
        demodulated,
        config: cfg.clone(),
        noise_sigma,
        seed: None,
    })
}

/// Median of `next - prev` with each difference taken mod `L` in
/// `(-L/2, L/2]`.
fn median_change(prev: &[f64], next: &[f64], len: usize) -> f64 {
    let l = len as f64;
    let mut d: Vec<f64> = prev
        .iter()
        .zip(next)
        .map(|(p, n)| {
            let d = (n - p).rem_euclid(l);
            if d > l / 2.0 { d - l } else { d }
        })
        .collect();
    d.sort_by(f64::total_cmp);
    d[d.len() / 2]
}

/// Share of `|û|²` that defines the occupied band.
const BAND_SHARE: f64 = 0.95;

/// Shortest circular arc of `|û|²` holding [`BAND_SHARE`] of the power, as
/// `(start, width)` in bins.
fn occupied_band(u: &[C64]) -> (usize, usize) {
    let len = u.len();
    let power: Vec<f64> = crate::dft::dft(u).iter().map(|v| v.norm_sqr()).collect();
    let total: f64 = power.iter().sum();
    if total == 0.0 {
        return (0, len);
    }
    let target = BAND_SHARE * total;
    let (mut best, mut acc, mut end) = ((0, len), 0.0, 0);
    for start in 0..len {
        while acc < target && end < start + len {
            acc += power[end % len];
            end += 1;
        }
        if acc >= target && end - start < best.1 {
            best = (start, end - start);
        }
        acc -= power[start];
    }
    best
}

/// Whole-bin shift of `γ̂'` that centres the occupied band of `u` at `L/4`,
/// or 0 when the band already lies inside `[guard, L/2 - guard]`.
fn recentring_shift(u: &[C64]) -> f64 {
    let len = u.len();
    let guard = len / 128;
    let (start, width) = occupied_band(u);
    let end = start + width;
    if start >= guard && end + guard <= len / 2 {
        return 0.0;
    }
    let mid = start as f64 + width as f64 / 2.0;
    // nearest representative of the arc midpoint around L/4
    let quarter = len as f64 / 4.0;
    let delta = (mid - quarter).rem_euclid(len as f64);
    let delta = if delta > len as f64 / 2.0 { delta - len as f64 } else { delta };
    delta.round()
}

fn slice_covariance(
    u: &[C64],
    sys: &GaborSystem,
    cfg: &EstimatorConfig,
    noise: Option<&SliceCovariance>,
) -> Result<SliceCovariance> {
    match (&cfg.covariance, noise) {
        (CovarianceSource::Spectral { segment }, Some(noise)) => {
            let method = SpectrumMethod::Welch {
                segment: (*segment).min(sys.len()),
                hop: (*segment / 2).max(1),
                taper: SegmentTaper::Hann,
            };
            let spec = estimate_spectrum(u, sys, &method)?;
            let signal = signal_cov(sys, &spec, 0)?;
            let total = shifted_total_cov(&signal, noise, 0)?;
            let m = total.dim();
            let ridge = cfg.ridge_rel * total.trace() / m as f64;
            let mut matrix = total.matrix().clone();
            for i in 0..m {
                matrix[(i, i)].re += ridge;
            }
            let cov = SliceCovariance::from_matrix(matrix, total.kind(), 0, ridge)?;
            if !cov.is_factorized() {
                return Err(Error::NotPositiveDefinite("model slice covariance".into()));
            }
            Ok(cov)
        }
        (CovarianceSource::Empirical { hop }, _) => {
            let cov_sys = match hop {
                Some(h) if *h != sys.hop() => sys.with_hop(*h)?,
                _ => sys.clone(),
            };
            empirical_slice_cov(&gabor(u, &cov_sys, 0)?, cfg.ridge_rel)
        }
        (CovarianceSource::Spectral { .. }, None) => unreachable!("noise model is built for the spectral source"),
    }
}
