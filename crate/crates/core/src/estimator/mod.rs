//! Joint modulation and spectrum estimation from Gabor time slices.

mod algorithm;
mod init;
mod metrics;
mod search;
mod spectral;
mod track;

pub use algorithm::{
    run_algorithm1, stopping_criterion, AnchorPolicy, CovarianceSource, EstimatorConfig, IterationLog,
};
pub use init::{init_center_of_mass, smooth_periodic};
pub use metrics::{evaluate_track, frame_accuracy, spectrum_error, TrackMetrics};
pub use search::{candidates_for_offset, ml_shift_refined, ml_shift_slice, RefinedShift};
pub use spectral::{estimate_spectrum, SegmentTaper, SpectrumMethod};
pub use track::{demodulate, track_from_frames, Interpolation, ModulationTrack};
