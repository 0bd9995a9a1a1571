//! Error measures that ignore the additive constant left undetermined in
//! `γ'` (equivalently, the frequency origin of the spectrum).

use crate::error::{Error, Result};
use crate::gabor::GaborSystem;
use crate::model::ModulationLaw;
use crate::spectrum::PowerSpectrum;

use super::track::ModulationTrack;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackMetrics {
    /// RMSE of per-sample `γ̂'` after removing the best constant.
    pub rmse: f64,
    pub max_error: f64,
    pub raw_rmse: f64,
    pub raw_max_error: f64,
    /// Constant removed, `mean(γ̂' - γ')`.
    pub offset: f64,
}

/// Differences `est - truth` reduced mod `L` around their circular mean so
/// that a wrapped estimate is not mistaken for a large error.
fn aligned_differences(est: &[f64], truth: &[f64], len: f64) -> Vec<f64> {
    let (s, c) = est.iter().zip(truth).fold((0.0, 0.0), |(s, c), (e, t)| {
        let ang = 2.0 * std::f64::consts::PI * (e - t) / len;
        (s + ang.sin(), c + ang.cos())
    });
    let centre = s.atan2(c) * len / (2.0 * std::f64::consts::PI);
    est.iter()
        .zip(truth)
        .map(|(e, t)| {
            let d = e - t;
            d - len * ((d - centre) / len).round()
        })
        .collect()
}

pub fn evaluate_track(estimated: &ModulationTrack, truth: &ModulationLaw) -> Result<TrackMetrics> {
    let est = &estimated.sample_gamma_prime;
    let tru = truth.gamma_prime();
    if est.len() != tru.len() {
        return Err(Error::Length { expected: tru.len(), actual: est.len() });
    }
    let n = est.len() as f64;
    let raw: Vec<f64> = est.iter().zip(tru).map(|(e, t)| e - t).collect();
    let diffs = aligned_differences(est, tru, n);
    let offset = diffs.iter().sum::<f64>() / n;
    let rms = |d: &mut dyn Iterator<Item = f64>| (d.map(|v| v * v).sum::<f64>() / n).sqrt();
    Ok(TrackMetrics {
        rmse: rms(&mut diffs.iter().map(|d| d - offset)),
        max_error: diffs.iter().map(|d| (d - offset).abs()).fold(0.0, f64::max),
        raw_rmse: rms(&mut raw.iter().copied()),
        raw_max_error: raw.iter().map(|d| d.abs()).fold(0.0, f64::max),
        offset,
    })
}

/// Fraction of frames whose `γ̂'(an)` is within `tol` bins of the truth
/// after removing the median frame difference.
pub fn frame_accuracy(estimated: &ModulationTrack, truth: &ModulationLaw, sys: &GaborSystem, tol: f64) -> Result<f64> {
    if truth.len() != sys.len() || estimated.frame_gamma_prime.len() != sys.num_frames() {
        return Err(Error::Length { expected: sys.num_frames(), actual: estimated.frame_gamma_prime.len() });
    }
    let truth_frames: Vec<f64> = (0..sys.num_frames()).map(|n| truth.gamma_prime()[n * sys.hop()]).collect();
    let mut diffs = aligned_differences(&estimated.frame_gamma_prime, &truth_frames, sys.len() as f64);
    let mut sorted = diffs.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    diffs.iter_mut().for_each(|d| *d -= median);
    // estimates sit on an integer grid, so an error of exactly `tol` must
    // not be lost to rounding in the median subtraction
    let tol = tol + 1e-9;
    Ok(diffs.iter().filter(|d| d.abs() <= tol).count() as f64 / diffs.len() as f64)
}

/// `Σ_band |Ŝ[k - shift] - S[k]| / Σ_band S[k]` over the support of `truth`,
/// indices mod `L`. `shift` re-aligns an estimate whose frequency origin
/// differs by an integer number of bins; for a demodulated signal it is the
/// rounded track offset.
pub fn spectrum_error(estimate: &PowerSpectrum, truth: &PowerSpectrum, shift: i64) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(Error::Length { expected: truth.len(), actual: estimate.len() });
    }
    let (num, den) = truth.support().fold((0.0, 0.0), |(num, den), (k, s)| {
        let j = (k as i64 - shift).rem_euclid(estimate.len() as i64) as usize;
        let e = estimate.get(j);
        (num + (e - s).abs(), den + s)
    });
    if den == 0.0 {
        return Err(Error::Spectrum("reference spectrum is identically zero".into()));
    }
    Ok(num / den)
}
