//! Synthesis, estimation and Monte-Carlo drivers.
//!
//! Every driver computes its files in memory first; nothing touches the
//! output directory unless the whole computation succeeded.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use wbfm_core::estimator::{frame_accuracy, spectrum_error};
use wbfm_core::io::{self, format_float};
use wbfm_core::{
    evaluate_track, gabor, make_modulation, make_window, run_algorithm1, synthesize, GaborSystem, IterationLog,
    ModelSignal, ModulationLaw, PowerSpectrum, TrackMetrics, C64,
};

use crate::config::{ExperimentConfig, NoiseLevel, SignalFormat};
use crate::error::CliError;

pub const CONFIG_ECHO: &str = "config.txt";

/// Files to write, relative to the output directory, in write order.
#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Outputs {
    pub fn add(&mut self, name: impl Into<PathBuf>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    fn table<F>(&mut self, name: &str, fill: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut Vec<u8>) -> wbfm_core::Result<()>,
    {
        let mut buf = Vec::new();
        fill(&mut buf)?;
        self.add(name, buf);
        Ok(())
    }

    fn nest(&mut self, dir: &str, other: Outputs) {
        for (name, bytes) in other.files {
            self.files.push((Path::new(dir).join(name), bytes));
        }
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == Path::new(name)).map(|(_, b)| b.as_slice())
    }

    pub fn names(&self) -> impl Iterator<Item = &Path> {
        self.files.iter().map(|(n, _)| n.as_path())
    }

    /// Writes each file through a temporary sibling and a rename.
    pub fn write_to(&self, dir: &Path) -> Result<(), CliError> {
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            let parent = path.parent().unwrap_or(dir);
            fs::create_dir_all(parent).map_err(|e| CliError::Io(format!("{}: {e}", parent.display())))?;
            let mut tmp = path.clone().into_os_string();
            tmp.push(".tmp");
            fs::write(&tmp, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            fs::rename(&tmp, &path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        }
        Ok(())
    }
}

/// Objects derived from the config that do not depend on the seed.
#[derive(Debug, Clone)]
pub struct Setup {
    pub sys: GaborSystem,
    pub spectrum: PowerSpectrum,
    pub law: ModulationLaw,
    pub noise_sigma: f64,
}

impl Setup {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self, CliError> {
        let window = make_window(cfg.window, cfg.length, cfg.window_width)
            .map_err(|e| CliError::config("window_width", e.to_string()))?;
        let sys = GaborSystem::new(cfg.length, cfg.hop, cfg.stride, window)
            .map_err(|e| CliError::config("stride", e.to_string()))?;
        let spectrum = cfg
            .spectrum
            .build(cfg.length, cfg.spectrum_power, cfg.spectrum_seed)
            .map_err(|e| CliError::config("spectrum", e.to_string()))?;
        let law = make_modulation(cfg.length, &cfg.modulation).map_err(|e| CliError::config("modulation", e.to_string()))?;
        let noise_sigma = match cfg.noise {
            NoiseLevel::Sigma(s) => s,
            NoiseLevel::SnrDb(snr) => (spectrum.total_power() / 10f64.powf(snr / 10.0)).sqrt(),
        };
        Ok(Self { sys, spectrum, law, noise_sigma })
    }
}

/// Result of one estimation, with truth-based scores when a truth is known.
#[derive(Debug, Clone)]
pub struct Estimate {
    pub log: IterationLog,
    pub metrics: Option<TrackMetrics>,
    pub frame_accuracy: Option<f64>,
    pub spectrum_error: Option<f64>,
}

pub fn synth(cfg: &ExperimentConfig, setup: &Setup, seed: u64) -> Result<(ModelSignal, Outputs), CliError> {
    let signal = synthesize(&setup.spectrum, &setup.law, setup.noise_sigma, seed)?;
    let mut out = Outputs::default();
    let write = |y: &[C64], buf: &mut Vec<u8>| match cfg.signal_format {
        SignalFormat::Bin => io::write_signal(buf, y),
        SignalFormat::Csv => io::write_signal_csv(buf, y),
    };
    out.table(cfg.signal_format.file_name(), |buf| write(&signal.y, buf))?;
    out.table(cfg.signal_format.stationary_file_name(), |buf| write(&signal.z, buf))?;
    out.table("gamma_true.csv", |buf| {
        io::write_csv(
            buf,
            &["t", "gamma", "gamma_prime"],
            setup
                .law
                .gamma()
                .iter()
                .zip(setup.law.gamma_prime())
                .enumerate()
                .map(|(t, (g, gp))| vec![t.to_string(), format_float(*g), format_float(*gp)]),
        )
    })?;
    out.table("spectrum_true.csv", |buf| io::write_spectrum_csv(buf, &setup.spectrum, "S"))?;
    Ok((signal, out))
}

pub fn estimate(
    cfg: &ExperimentConfig,
    setup: &Setup,
    y: &[C64],
    truth: Option<&ModulationLaw>,
    spectrum_truth: Option<&PowerSpectrum>,
    spectrogram: bool,
) -> Result<(Estimate, Outputs), CliError> {
    if y.len() != cfg.length {
        return Err(CliError::config("length", format!("is {} but the signal has {} samples", cfg.length, y.len())));
    }
    let noise = cfg.known_noise.then_some(setup.noise_sigma);
    let log = run_algorithm1(y, &setup.sys, noise, &cfg.estimator)?;
    let metrics = truth.map(|law| evaluate_track(log.final_track(), law)).transpose()?;
    let frame_acc = truth.map(|law| frame_accuracy(log.final_track(), law, &setup.sys, 1.0)).transpose()?;
    let spec_err = match (spectrum_truth, metrics) {
        (Some(s), Some(m)) => Some(spectrum_error(&log.spectrum, s, m.offset.round() as i64)?),
        _ => None,
    };

    let mut out = Outputs::default();
    out.table("iterations.csv", |buf| io::write_iterations_csv(buf, &log))?;
    out.table("track.csv", |buf| io::write_track_csv(buf, &log, &setup.sys))?;
    out.table("spectrum.csv", |buf| io::write_spectrum_csv(buf, &log.spectrum, "S_hat"))?;
    if spectrogram {
        let tf = gabor(y, &setup.sys, 0)?;
        out.table("spectrogram.csv", |buf| io::write_spectrogram_csv(buf, &tf))?;
    }
    let est = Estimate { log, metrics, frame_accuracy: frame_acc, spectrum_error: spec_err };
    if truth.is_some() {
        out.table("metrics.csv", |buf| io::write_csv(buf, &["metric", "value"], metric_rows(&est)))?;
    }
    Ok((est, out))
}

fn metric_rows(est: &Estimate) -> Vec<Vec<String>> {
    let log = &est.log;
    let mut rows = vec![
        ("iterations", log.iterations() as f64),
        ("converged", if log.converged { 1.0 } else { 0.0 }),
        ("final_criterion", log.criteria.last().copied().unwrap_or(f64::NAN)),
    ];
    if let Some(m) = est.metrics {
        rows.extend([
            ("rmse", m.rmse),
            ("max_error", m.max_error),
            ("raw_rmse", m.raw_rmse),
            ("raw_max_error", m.raw_max_error),
            ("offset", m.offset),
        ]);
    }
    if let Some(f) = est.frame_accuracy {
        rows.push(("frame_accuracy", f));
    }
    if let Some(e) = est.spectrum_error {
        rows.push(("spectrum_error", e));
    }
    rows.into_iter().map(|(k, v)| vec![k.to_string(), format_float(v)]).collect()
}

fn echo(cfg: &ExperimentConfig, out: &mut Outputs) {
    out.add(CONFIG_ECHO, cfg.canonical().into_bytes());
}

pub fn cmd_synth(cfg: &ExperimentConfig) -> Result<Outputs, CliError> {
    let setup = Setup::new(cfg)?;
    let (_, mut out) = synth(cfg, &setup, cfg.seed)?;
    echo(cfg, &mut out);
    Ok(out)
}

/// Signal file by extension: `.csv` is the text format, anything else binary.
pub fn load_signal(path: &Path) -> Result<Vec<C64>, CliError> {
    let file = fs::File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut reader = BufReader::new(file);
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let y = if is_csv { io::read_signal_csv(reader) } else { io::read_signal(&mut reader) };
    y.map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Ground truth from a `t,gamma,gamma_prime` table.
pub fn load_truth(path: &Path) -> Result<ModulationLaw, CliError> {
    let file = fs::File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let rows = io::read_csv(BufReader::new(file), &["t", "gamma", "gamma_prime"])
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(ModulationLaw::from_gamma_prime(rows.iter().map(|r| r[2]).collect())?)
}

pub fn cmd_estimate(cfg: &ExperimentConfig) -> Result<Outputs, CliError> {
    let input = cfg.input.as_ref().ok_or_else(|| CliError::config("input", "estimate needs a signal file"))?;
    let setup = Setup::new(cfg)?;
    let y = load_signal(input)?;
    let truth = cfg.truth.as_deref().map(load_truth).transpose()?;
    if let Some(t) = &truth {
        if t.len() != y.len() {
            return Err(CliError::config("truth", format!("has {} samples, the signal {}", t.len(), y.len())));
        }
    }
    let (est, mut out) = estimate(cfg, &setup, &y, truth.as_ref(), None, true)?;
    report(&est);
    echo(cfg, &mut out);
    Ok(out)
}

pub fn cmd_run(cfg: &ExperimentConfig) -> Result<(Estimate, Outputs), CliError> {
    let setup = Setup::new(cfg)?;
    let (signal, mut out) = synth(cfg, &setup, cfg.seed)?;
    let (est, est_out) = estimate(cfg, &setup, &signal.y, Some(&setup.law), Some(&setup.spectrum), true)?;
    report(&est);
    out.nest("", est_out);
    echo(cfg, &mut out);
    Ok((est, out))
}

fn report(est: &Estimate) {
    let log = &est.log;
    info!(
        "{} after {} iterations",
        if log.converged { "converged" } else { "stopped" },
        log.iterations()
    );
    if let Some(m) = est.metrics {
        info!("corrected rmse {:.3} bins, max {:.3}, offset {:.2}", m.rmse, m.max_error, m.offset);
    }
}

/// One Monte-Carlo realization; `Err` holds the failure message.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub seed: u64,
    pub result: Result<Estimate, String>,
}

#[derive(Debug, Clone)]
pub struct MonteCarlo {
    pub runs: Vec<RunRecord>,
    /// `(mean, std)` of the criterion per iteration, from iteration 1.
    pub convergence: Vec<(f64, f64)>,
    /// Least-squares slope of `ln mean` against `ln iter` over iterations
    /// with a positive mean.
    pub loglog_slope: f64,
}

/// Mean and sample standard deviation of the criterion per iteration.
///
/// A run whose last criterion is exactly 0 reached a fixed point: every
/// further iteration would reproduce it, so it is extended with zeros.
/// Other runs stopped on `ε` or `max_iter`; rows go up to the shortest of
/// them (up to the longest run if all of them reached a fixed point).
pub fn aggregate_criteria(sequences: &[&[f64]]) -> Vec<(f64, f64)> {
    let fixed = |s: &[f64]| s.last() == Some(&0.0);
    let rows = sequences
        .iter()
        .filter(|s| !fixed(s))
        .map(|s| s.len())
        .min()
        .unwrap_or_else(|| sequences.iter().map(|s| s.len()).max().unwrap_or(0));
    (0..rows)
        .map(|k| {
            let vals: Vec<f64> = sequences.iter().map(|s| s.get(k).copied().unwrap_or(0.0)).collect();
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let var = if vals.len() > 1 { vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
            (mean, var.sqrt())
        })
        .collect()
}

pub fn loglog_slope(means: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = means
        .iter()
        .enumerate()
        .filter(|(_, m)| **m > 0.0)
        .map(|(k, m)| (((k + 1) as f64).ln(), m.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Minimum share of realizations that must complete.
pub const MIN_COMPLETED: f64 = 0.8;

pub fn montecarlo(cfg: &ExperimentConfig) -> Result<(MonteCarlo, Outputs), CliError> {
    if cfg.realizations < 2 {
        return Err(CliError::Usage(format!("montecarlo needs at least 2 realizations, got {}", cfg.realizations)));
    }
    let setup = Setup::new(cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} workers: {e}", cfg.workers)))?;
    let results: Vec<(RunRecord, Outputs)> = pool.install(|| {
        (0..cfg.realizations)
            .into_par_iter()
            .map(|r| {
                let seed = cfg.seed.wrapping_add(r as u64);
                let run = synth(cfg, &setup, seed).and_then(|(signal, _)| {
                    estimate(cfg, &setup, &signal.y, Some(&setup.law), Some(&setup.spectrum), false)
                });
                match run {
                    Ok((est, mut out)) => {
                        let mut run_cfg = cfg.clone();
                        run_cfg.seed = seed;
                        echo(&run_cfg, &mut out);
                        (RunRecord { seed, result: Ok(est) }, out)
                    }
                    Err(e) => {
                        warn!("realization {r} (seed {seed}) failed: {e}");
                        (RunRecord { seed, result: Err(e.to_string()) }, Outputs::default())
                    }
                }
            })
            .collect()
    });
    let completed = results.iter().filter(|(r, _)| r.result.is_ok()).count();
    if (completed as f64) < MIN_COMPLETED * cfg.realizations as f64 {
        return Err(CliError::Numerical(format!(
            "only {completed} of {} realizations completed",
            cfg.realizations
        )));
    }
    let sequences: Vec<&[f64]> =
        results.iter().filter_map(|(r, _)| r.result.as_ref().ok()).map(|e| e.log.criteria.as_slice()).collect();
    let convergence = aggregate_criteria(&sequences);
    let means: Vec<f64> = convergence.iter().map(|c| c.0).collect();
    let slope = loglog_slope(&means);
    info!("{completed}/{} realizations completed; log-log slope {slope:.3}", cfg.realizations);

    let mut out = Outputs::default();
    out.table("convergence.csv", |buf| {
        io::write_csv(
            buf,
            &["iter", "mean_criterion", "std_criterion"],
            convergence
                .iter()
                .enumerate()
                .map(|(k, (m, s))| vec![(k + 1).to_string(), format_float(*m), format_float(*s)]),
        )
    })?;
    out.table("runs.csv", |buf| {
        io::write_csv(
            buf,
            &["run", "seed", "status", "iterations", "converged", "final_criterion", "rmse", "max_error", "spectrum_error"],
            results.iter().enumerate().map(|(r, (rec, _))| {
                let mut row = vec![r.to_string(), rec.seed.to_string()];
                match &rec.result {
                    Ok(e) => {
                        let m = e.metrics.expect("monte-carlo runs know the truth");
                        row.extend([
                            "ok".to_string(),
                            e.log.iterations().to_string(),
                            u8::from(e.log.converged).to_string(),
                            format_float(*e.log.criteria.last().unwrap()),
                            format_float(m.rmse),
                            format_float(m.max_error),
                            format_float(e.spectrum_error.unwrap_or(f64::NAN)),
                        ]);
                    }
                    Err(_) => row.extend(["failed"].iter().chain(&["nan"; 6]).map(|s| s.to_string())),
                }
                row
            }),
        )
    })?;
    out.table("summary.csv", |buf| {
        io::write_csv(
            buf,
            &["metric", "value"],
            [
                ("realizations", cfg.realizations as f64),
                ("completed", completed as f64),
                ("iterations_reported", convergence.len() as f64),
                ("loglog_slope", slope),
            ]
            .iter()
            .map(|(k, v)| vec![k.to_string(), format_float(*v)]),
        )
    })?;
    let mut runs = Vec::with_capacity(results.len());
    for (r, (rec, run_out)) in results.into_iter().enumerate() {
        out.nest(&format!("run_{r:03}"), run_out);
        runs.push(rec);
    }
    echo(cfg, &mut out);
    Ok((MonteCarlo { runs, convergence, loglog_slope: slope }, out))
}
