//! Covariances of Gabor time slices: the exact model matrices for the noise
//! and stationary-signal parts, circular frequency shifts of the latter,
//! empirical estimates, and Cholesky-based quadratic forms.

use std::io::Write;
use std::sync::OnceLock;

use faer::linalg::solvers::DenseSolveCore;
use faer::linalg::triangular_solve::solve_lower_triangular_in_place;
use faer::linalg::solvers::Llt;
use faer::{Mat, Par, Side};

use crate::dft::{dft_in_place, idft_in_place};
use crate::error::{Error, Result};
use crate::gabor::{GaborSystem, TFMatrix};
use crate::spectrum::PowerSpectrum;
use crate::C64;

/// Pivots below this fraction of the largest diagonal entry are treated as
/// zero when deciding positive definiteness.
const PIVOT_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceKind {
    ModelNoise,
    ModelSignal,
    ModelTotal,
    Empirical,
}

/// Hermitian `M×M` slice covariance with an eagerly computed Cholesky
/// factor when the matrix is numerically positive definite.
#[derive(Debug, Clone)]
pub struct SliceCovariance {
    matrix: Mat<C64>,
    kind: CovarianceKind,
    offset: usize,
    ridge: f64,
    factor: Option<Llt<C64>>,
    scan: OnceLock<ShiftScan>,
}

impl SliceCovariance {
    /// Wrap a Hermitian matrix. Fails only on shape or symmetry errors; a
    /// singular matrix is accepted but has no factorization.
    pub fn from_matrix(matrix: Mat<C64>, kind: CovarianceKind, offset: usize, ridge: f64) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::Length { expected: matrix.nrows(), actual: matrix.ncols() });
        }
        let scale = matrix.norm_max();
        let asym = (0..matrix.nrows())
            .flat_map(|i| (0..=i).map(move |j| (i, j)))
            .map(|(i, j)| (matrix[(i, j)] - matrix[(j, i)].conj()).norm())
            .fold(0.0, f64::max);
        if asym > 1e-10 * scale.max(1.0) {
            return Err(Error::Parameter(format!("matrix is not Hermitian (defect {asym:e})")));
        }
        let factor = factorize(&matrix);
        Ok(Self { matrix, kind, offset, ridge, factor, scan: OnceLock::new() })
    }

    pub fn matrix(&self) -> &Mat<C64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn kind(&self) -> CovarianceKind {
        self.kind
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn is_factorized(&self) -> bool {
        self.factor.is_some()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).sum()
    }

    /// `v* C⁻¹ v` through the triangular factor.
    pub fn quad_form(&self, v: &[C64]) -> Result<f64> {
        let factor = self.factor.as_ref().ok_or(Error::Singular)?;
        if v.len() != self.dim() {
            return Err(Error::Length { expected: self.dim(), actual: v.len() });
        }
        let mut y = Mat::from_fn(v.len(), 1, |i, _| v[i]);
        solve_lower_triangular_in_place(factor.L(), y.as_mut(), Par::Seq);
        Ok(y.squared_norm_l2())
    }

    /// `log det C` from the factor.
    pub fn log_det(&self) -> Result<f64> {
        let factor = self.factor.as_ref().ok_or(Error::Singular)?;
        Ok(2.0 * (0..self.dim()).map(|i| factor.L()[(i, i)].re.ln()).sum::<f64>())
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        if self.dim() == 0 {
            return Vec::new();
        }
        // NaN-free Hermitian input always converges in practice
        let mut ev = self.matrix.self_adjoint_eigenvalues(Side::Lower).unwrap_or_default();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// Scores `q(δ) = v* C_δ⁻¹ v` for every circular shift `δ ∈ [0, M)`,
    /// where `C_δ[m,m'] = C[m-δ, m'-δ]`.
    ///
    /// Uses `q(δ) = w* C⁻¹ w` with `w[m] = v[m+δ]` and evaluates all shifts
    /// at once in the Fourier domain, `O(M²)` per call after an `O(M³)`
    /// setup cached on first use.
    pub fn shift_scores(&self, v: &[C64]) -> Result<Vec<f64>> {
        if v.len() != self.dim() {
            return Err(Error::Length { expected: self.dim(), actual: v.len() });
        }
        let scan = match self.scan.get() {
            Some(s) => s,
            None => {
                let built = ShiftScan::new(self)?;
                self.scan.get_or_init(|| built)
            }
        };
        Ok(scan.scores(v))
    }

    /// Row-major dump with `re+imi` entries.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for i in 0..self.dim() {
            let row: Vec<String> = (0..self.dim())
                .map(|j| {
                    let v = self.matrix[(i, j)];
                    format!("{}{:+}i", v.re, v.im)
                })
                .collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn factorize(matrix: &Mat<C64>) -> Option<Llt<C64>> {
    let n = matrix.nrows();
    let max_diag = (0..n).map(|i| matrix[(i, i)].re).fold(0.0, f64::max);
    if !(max_diag > 0.0) {
        return None;
    }
    let chol = matrix.llt(Side::Lower).ok()?;
    let l = chol.L();
    let min_pivot = (0..n).map(|i| l[(i, i)].re * l[(i, i)].re).fold(f64::INFINITY, f64::min);
    (min_pivot > PIVOT_TOL * max_diag).then_some(chol)
}

/// Fourier-domain form of `C⁻¹`: `Â = F C⁻¹ F*` with `F[g,m] = e^{-2iπgm/M}`.
#[derive(Debug, Clone)]
struct ShiftScan {
    dim: usize,
    /// Number of stored lags, `M/2 + 1`.
    lags: usize,
    /// `diag[g·lags + d] = Â[g, g+d]`; the remaining lags follow from
    /// Hermitian symmetry.
    diag: Vec<C64>,
}

impl ShiftScan {
    fn new(cov: &SliceCovariance) -> Result<Self> {
        let factor = cov.factor.as_ref().ok_or(Error::Singular)?;
        let inv = factor.inverse();
        let m = cov.dim();
        // F·A: transform every column
        let mut fa = Mat::<C64>::zeros(m, m);
        let mut col = vec![C64::new(0.0, 0.0); m];
        for j in 0..m {
            for (i, c) in col.iter_mut().enumerate() {
                *c = inv[(i, j)];
            }
            dft_in_place(&mut col);
            for (i, c) in col.iter().enumerate() {
                fa[(i, j)] = *c;
            }
        }
        // (F·A)·F*: M times the inverse transform of every row
        let lags = m / 2 + 1;
        let mut diag = vec![C64::new(0.0, 0.0); m * lags];
        let mut row = vec![C64::new(0.0, 0.0); m];
        for g in 0..m {
            for (j, r) in row.iter_mut().enumerate() {
                *r = fa[(g, j)];
            }
            idft_in_place(&mut row);
            for d in 0..lags {
                diag[g * lags + d] = row[(g + d) % m] * m as f64;
            }
        }
        Ok(Self { dim: m, lags, diag })
    }

    fn scores(&self, v: &[C64]) -> Vec<f64> {
        let m = self.dim;
        let lags = self.lags;
        let mut vh = v.to_vec();
        dft_in_place(&mut vh);
        let doubled: Vec<C64> = vh.iter().chain(vh.iter()).copied().collect();
        // h[d] = Σ_g conj(v̂[g]) Â[g, g+d] v̂[g+d], and h[M-d] = conj(h[d])
        let mut h = vec![C64::new(0.0, 0.0); m];
        for (g, vg) in vh.iter().enumerate() {
            let left = vg.conj();
            let row = &self.diag[g * lags..(g + 1) * lags];
            let right = &doubled[g..g + lags];
            for ((hd, a), r) in h[..lags].iter_mut().zip(row).zip(right) {
                *hd += a * (left * r);
            }
        }
        for d in lags..m {
            h[d] = h[m - d].conj();
        }
        idft_in_place(&mut h);
        h.iter().map(|v| (v.re / m as f64).max(0.0)).collect()
    }
}

/// Slice covariance of the Gabor transform of real white noise of standard
/// deviation `sigma`: `(σ²/L) Σ_k conj(ĝ[k]) ĝ[k - (m'-m)b]`, circulant in
/// `m' - m`.
pub fn noise_cov(sys: &GaborSystem, sigma: f64) -> SliceCovariance {
    let len = sys.len();
    let m = sys.num_bins();
    let b = sys.stride() as i64;
    let gh = sys.window().dft();
    let scale = sigma * sigma / len as f64;
    let row: Vec<C64> = (0..m as i64)
        .map(|d| {
            (0..len as i64)
                .map(|k| gh[k as usize].conj() * sys.window().dft_at(k - d * b))
                .sum::<C64>()
                * scale
        })
        .collect();
    let matrix = Mat::from_fn(m, m, |i, j| row[(j + m - i) % m]);
    SliceCovariance::from_matrix(matrix, CovarianceKind::ModelNoise, 0, 0.0)
        .expect("circulant construction is Hermitian")
}

/// Slice covariance of the Gabor transform (offset `c`) of the stationary
/// analytic signal: `Σ_k S[k] conj(ĝ[k - mb - c]) ĝ[k - m'b - c]`.
pub fn signal_cov(sys: &GaborSystem, spec: &PowerSpectrum, offset: usize) -> Result<SliceCovariance> {
    if offset >= sys.stride() {
        return Err(Error::Offset { offset, stride: sys.stride() });
    }
    if spec.len() != sys.len() {
        return Err(Error::Length { expected: sys.len(), actual: spec.len() });
    }
    let m = sys.num_bins();
    let b = sys.stride() as i64;
    let mut matrix = Mat::<C64>::zeros(m, m);
    // rank-one updates restricted to where the window spectrum is not negligible
    let peak = sys.window().dft().iter().map(|v| v.norm()).fold(0.0, f64::max);
    let floor = peak * 1e-16;
    let mut u: Vec<(usize, C64)> = Vec::with_capacity(m);
    for (k, s) in spec.support() {
        u.clear();
        for i in 0..m {
            let v = sys.window().dft_at(k as i64 - i as i64 * b - offset as i64);
            if v.norm() > floor {
                u.push((i, v));
            }
        }
        for &(j, vj) in &u {
            let uj = vj * s;
            for &(i, vi) in &u {
                matrix[(i, j)] += vi.conj() * uj;
            }
        }
    }
    SliceCovariance::from_matrix(matrix, CovarianceKind::ModelSignal, offset, 0.0)
}

/// `C[m,m'] = S[m-δ, m'-δ] + N[m,m']` with circular indices mod `M`.
pub fn shifted_total_cov(signal: &SliceCovariance, noise: &SliceCovariance, delta: i64) -> Result<SliceCovariance> {
    let m = signal.dim();
    if noise.dim() != m {
        return Err(Error::Length { expected: m, actual: noise.dim() });
    }
    let s = delta.rem_euclid(m.max(1) as i64) as usize;
    let matrix = Mat::from_fn(m, m, |i, j| {
        signal.matrix[((i + m - s) % m, (j + m - s) % m)] + noise.matrix[(i, j)]
    });
    let kind = if signal.kind == CovarianceKind::Empirical || noise.kind == CovarianceKind::Empirical {
        CovarianceKind::Empirical
    } else {
        CovarianceKind::ModelTotal
    };
    SliceCovariance::from_matrix(matrix, kind, signal.offset, signal.ridge + noise.ridge)
}

/// `(1/N) Σ_n G[·,n] G[·,n]*` plus a ridge `λ_rel · trace / M`.
pub fn empirical_slice_cov(tf: &TFMatrix, ridge_rel: f64) -> Result<SliceCovariance> {
    if tf.num_frames() < 2 {
        return Err(Error::Parameter("empirical covariance needs at least two frames".into()));
    }
    empirical_from_slices(tf.slices(), tf.num_bins(), tf.offset(), ridge_rel)
}

/// Empirical covariance pooled over arbitrary slices of a common length.
pub fn empirical_from_slices<'a, I>(slices: I, dim: usize, offset: usize, ridge_rel: f64) -> Result<SliceCovariance>
where
    I: IntoIterator<Item = &'a [C64]>,
{
    if !(ridge_rel >= 0.0) {
        return Err(Error::Parameter(format!("ridge must be nonnegative, got {ridge_rel}")));
    }
    let mut matrix = Mat::<C64>::zeros(dim, dim);
    let mut count = 0usize;
    for v in slices {
        if v.len() != dim {
            return Err(Error::Length { expected: dim, actual: v.len() });
        }
        for j in 0..dim {
            let vj = v[j].conj();
            for i in j..dim {
                matrix[(i, j)] += v[i] * vj;
            }
        }
        count += 1;
    }
    if count < 2 {
        return Err(Error::Parameter("empirical covariance needs at least two slices".into()));
    }
    let inv = 1.0 / count as f64;
    for j in 0..dim {
        for i in j..dim {
            let v = matrix[(i, j)] * inv;
            matrix[(i, j)] = v;
            matrix[(j, i)] = v.conj();
        }
        matrix[(j, j)].im = 0.0;
    }
    let trace: f64 = (0..dim).map(|j| matrix[(j, j)].re).sum();
    let ridge = ridge_rel * trace / dim as f64;
    for j in 0..dim {
        matrix[(j, j)].re += ridge;
    }
    let cov = SliceCovariance::from_matrix(matrix, CovarianceKind::Empirical, offset, ridge)?;
    if !cov.is_factorized() {
        return Err(Error::NotPositiveDefinite(format!(
            "{count} slices of dimension {dim} with ridge {ridge_rel:e}"
        )));
    }
    Ok(cov)
}

/// Whether the smallest eigenvalue reaches the floor `σ² K_g - 1e-8`.
pub fn min_eig_floor(cov: &SliceCovariance, sys: &GaborSystem, sigma: f64) -> bool {
    cov.min_eigenvalue() >= sigma * sigma * sys.kg() - 1e-8
}
