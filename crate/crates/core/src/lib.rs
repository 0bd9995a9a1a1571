//! Joint estimation of a smooth frequency modulation and the power spectrum
//! of a frequency-modulated wideband stationary Gaussian signal, from
//! fixed-time slices of its Gabor transform.

pub mod covariance;
pub mod dft;
pub mod estimator;
pub mod error;
pub mod gabor;
pub mod indexing;
pub mod io;
pub mod model;
pub mod spectrum;
pub mod window;

pub use num_complex::Complex64 as C64;

pub use covariance::{
    empirical_from_slices, empirical_slice_cov, min_eig_floor, noise_cov, shifted_total_cov, signal_cov,
    CovarianceKind, SliceCovariance,
};
pub use error::{Error, Result};
pub use gabor::{gabor, gabor_all_offsets, stft, window_kg, GaborSystem, TFMatrix};
pub use indexing::FrequencyIndexing;
pub use model::{
    analytic_signal, make_modulation, remainder_bound, synthesize, synthesize_observation, synthesize_stationary,
    ModelSignal, ModulationKind, ModulationLaw, RemainderBound,
};
pub use spectrum::{PowerSpectrum, SpectrumShape};
pub use window::{make_window, Window, WindowKind};
pub use estimator::{
    demodulate, estimate_spectrum, evaluate_track, init_center_of_mass, ml_shift_refined, ml_shift_slice,
    run_algorithm1, stopping_criterion, track_from_frames, AnchorPolicy, CovarianceSource, EstimatorConfig,
    Interpolation, IterationLog, ModulationTrack, SegmentTaper, SpectrumMethod, TrackMetrics,
};
