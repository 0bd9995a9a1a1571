//! Exhaustive maximum-likelihood search for the frequency shift of one slice.

use crate::covariance::SliceCovariance;
use crate::error::{Error, Result};
use crate::C64;

/// Best coarse shift and its score `v* C_δ⁻¹ v` over `candidates`.
///
/// `cov0` is the unshifted covariance; `C_δ` is its circular shift by `δ`
/// bins. The log-determinant is the same for every `δ` and is left out. Ties
/// go to the smaller shift.
pub fn ml_shift_slice(slice: &[C64], cov0: &SliceCovariance, candidates: &[usize]) -> Result<(usize, f64)> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let m = cov0.dim();
    if let Some(&bad) = candidates.iter().find(|&&d| d >= m) {
        return Err(Error::Parameter(format!("candidate shift {bad} outside [0, {m})")));
    }
    if candidates.len() == 1 {
        // nothing to compare against
        let d = candidates[0];
        return Ok((d, cov0.quad_form(&crate::dft::rotate(slice, d as i64))?));
    }
    let scores = cov0.shift_scores(slice)?;
    let mut best = (usize::MAX, f64::INFINITY);
    for &d in candidates {
        let s = scores[d];
        if s < best.1 || (s == best.1 && d < best.0) {
            best = (d, s);
        }
    }
    Ok(best)
}

/// Outcome of the two-stage search at one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinedShift {
    /// `b·δ + c`, in `[0, L)`.
    pub gamma_prime: f64,
    pub coarse: usize,
    pub offset: usize,
    pub score: f64,
}

/// Coarse shifts `δ` whose fine position `bδ + c` lies in `[lo, hi]`.
pub fn candidates_for_offset(num_bins: usize, stride: usize, offset: usize, range: (usize, usize)) -> Vec<usize> {
    (0..num_bins)
        .filter(|d| {
            let fine = d * stride + offset;
            fine >= range.0 && fine <= range.1
        })
        .collect()
}

/// Run the coarse search on every offset transform and keep the offset with
/// the lowest score. `slices[c]` and `covs[c]` belong to offset `c`; the
/// stride `b` is `slices.len()`.
pub fn ml_shift_refined(
    slices: &[&[C64]],
    covs: &[&SliceCovariance],
    candidates: &[Vec<usize>],
) -> Result<RefinedShift> {
    let stride = slices.len();
    if stride == 0 || covs.len() != stride || candidates.len() != stride {
        return Err(Error::Parameter(format!(
            "need one slice, covariance and candidate set per offset (got {}, {}, {})",
            slices.len(),
            covs.len(),
            candidates.len()
        )));
    }
    let mut best: Option<RefinedShift> = None;
    for c in 0..stride {
        if candidates[c].is_empty() {
            continue;
        }
        let (coarse, score) = ml_shift_slice(slices[c], covs[c], &candidates[c])?;
        if best.map_or(true, |b| score < b.score) {
            best = Some(RefinedShift { gamma_prime: (coarse * stride + c) as f64, coarse, offset: c, score });
        }
    }
    best.ok_or(Error::EmptyCandidates)
}
