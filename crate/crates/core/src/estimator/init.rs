use log::warn;

use crate::gabor::TFMatrix;

/// Per-frame spectral centre of mass `Σ m |G[m,n]|² / Σ |G[m,n]|²` in
/// coarse bins. All-zero frames fall back to `M/2`.
pub fn init_center_of_mass(tf: &TFMatrix) -> Vec<f64> {
    let m_bins = tf.num_bins();
    tf.slices()
        .enumerate()
        .map(|(n, slice)| {
            let (num, den) = slice.iter().enumerate().fold((0.0, 0.0), |(num, den), (m, v)| {
                let p = v.norm_sqr();
                (num + m as f64 * p, den + p)
            });
            if den > 0.0 {
                num / den
            } else {
                warn!("frame {n} has no energy; centre of mass set to M/2");
                m_bins as f64 / 2.0
            }
        })
        .collect()
}

/// Keeps the DC term and the first `harmonics` Fourier harmonics of a
/// periodic frame sequence.
pub fn smooth_periodic(values: &[f64], harmonics: usize) -> Vec<f64> {
    let n = values.len();
    let mut spec = crate::dft::dft(&values.iter().map(|&v| crate::C64::new(v, 0.0)).collect::<Vec<_>>());
    for (k, v) in spec.iter_mut().enumerate() {
        if k.min(n - k) > harmonics {
            *v = crate::C64::new(0.0, 0.0);
        }
    }
    crate::dft::idft(&spec).iter().map(|v| v.re).collect()
}
