//! Line-oriented `key = value` experiment configuration.
//!
//! Every key has a default, so an empty file is the reference experiment.
//! Blank lines and `#` comments are ignored. Unknown or repeated keys are
//! errors. [`ExperimentConfig::canonical`] prints every key with its resolved
//! value in a fixed order, and parsing that text gives back the same config.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::PathBuf;
use std::str::FromStr;

use wbfm_core::{
    AnchorPolicy, CovarianceSource, EstimatorConfig, Interpolation, ModulationKind, SegmentTaper, SpectrumMethod,
    SpectrumShape, WindowKind,
};

use crate::error::CliError;

/// Keys in canonical order with their defaults.
const KEYS: &[(&str, &str)] = &[
    ("length", "4096"),
    ("hop", "32"),
    ("stride", "8"),
    ("window", "gauss"),
    ("window_width", "128"),
    ("spectrum", "bands"),
    ("spectrum_lo", "100"),
    ("spectrum_hi", "2000"),
    ("spectrum_taper", "8"),
    ("spectrum_count", "4"),
    ("spectrum_smooth", "16"),
    ("spectrum_power", "1"),
    ("spectrum_seed", "0"),
    ("modulation", "sine"),
    ("mod_k0", "200"),
    ("mod_amplitude", "15"),
    ("mod_cycles", "1"),
    ("mod_phase", "0"),
    ("mod_rate", "0"),
    ("snr_db", "20"),
    ("noise_sigma", "none"),
    ("known_noise", "true"),
    ("epsilon", "0.001"),
    ("max_iter", "50"),
    ("ridge", "0.000001"),
    ("interpolation", "cubic"),
    ("covariance", "spectral"),
    ("template_segment", "1024"),
    ("empirical_hop", "none"),
    ("spectrum_method", "welch"),
    ("welch_segment", "64"),
    ("welch_hop", "32"),
    ("welch_taper", "hann"),
    ("marginal_width", "48"),
    ("anchor", "quarter_band"),
    ("init_harmonics", "2"),
    ("max_snr_db", "30"),
    ("search_lo", "none"),
    ("search_hi", "none"),
    ("seed", "0"),
    ("realizations", "20"),
    ("workers", "1"),
    ("signal_format", "bin"),
    ("input", "none"),
    ("truth", "none"),
    ("output", "out"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalFormat {
    Bin,
    Csv,
}

impl SignalFormat {
    pub fn file_name(self) -> &'static str {
        match self {
            Self::Bin => "signal.bin",
            Self::Csv => "signal.csv",
        }
    }

    pub fn stationary_file_name(self) -> &'static str {
        match self {
            Self::Bin => "stationary.bin",
            Self::Csv => "stationary.csv",
        }
    }
}

/// How the noise level is specified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseLevel {
    /// `σ₀² = σ_Z² / 10^(snr/10)` with `σ_Z²` the spectrum power.
    SnrDb(f64),
    Sigma(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub length: usize,
    pub hop: usize,
    pub stride: usize,
    pub window: WindowKind,
    pub window_width: f64,
    pub spectrum: SpectrumShape,
    pub spectrum_power: f64,
    pub spectrum_seed: u64,
    pub modulation: ModulationKind,
    pub noise: NoiseLevel,
    /// Hand the noise level to the estimator.
    pub known_noise: bool,
    pub estimator: EstimatorConfig,
    pub seed: u64,
    pub realizations: usize,
    pub workers: usize,
    pub signal_format: SignalFormat,
    pub input: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    pub output: PathBuf,
    /// Spectrum parameters not used by the selected shape, kept so the
    /// canonical echo is complete.
    unused: BTreeMap<&'static str, String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::parse("").expect("defaults parse")
    }
}

struct Raw {
    values: BTreeMap<&'static str, String>,
}

impl Raw {
    fn get(&self, key: &'static str) -> &str {
        &self.values[key]
    }

    fn parse<T: FromStr>(&self, key: &'static str) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        let v = self.get(key);
        v.parse().map_err(|e| CliError::config(key, format!("cannot parse {v:?}: {e}")))
    }

    fn optional<T: FromStr>(&self, key: &'static str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        if self.get(key) == "none" {
            Ok(None)
        } else {
            self.parse(key).map(Some)
        }
    }

    fn choice<'a>(&self, key: &'static str, options: &[&'a str]) -> Result<&'a str, CliError> {
        let v = self.get(key);
        options
            .iter()
            .find(|o| **o == v)
            .copied()
            .ok_or_else(|| CliError::config(key, format!("{v:?} is not one of {}", options.join(", "))))
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values: BTreeMap<&'static str, String> = KEYS.iter().map(|(k, v)| (*k, v.to_string())).collect();
        let mut seen = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = i + 1;
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {lineno}: expected key = value, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            let Some(&(name, _)) = KEYS.iter().find(|(k, _)| *k == key) else {
                return Err(CliError::config(key, format!("unknown key (line {lineno})")));
            };
            if let Some(prev) = seen.insert(name, lineno) {
                return Err(CliError::config(name, format!("set twice (lines {prev} and {lineno})")));
            }
            if value.is_empty() {
                return Err(CliError::config(name, format!("empty value (line {lineno})")));
            }
            values.insert(name, value.to_string());
        }
        if seen.contains_key("noise_sigma") && seen.contains_key("snr_db") && values["snr_db"] != "none" && values["noise_sigma"] != "none" {
            return Err(CliError::config("noise_sigma", "set together with snr_db; give only one"));
        }
        Self::from_raw(&Raw { values })
    }

    fn from_raw(raw: &Raw) -> Result<Self, CliError> {
        let length: usize = raw.parse("length")?;
        let hop: usize = raw.parse("hop")?;
        let stride: usize = raw.parse("stride")?;
        for (key, v) in [("hop", hop), ("stride", stride)] {
            if v == 0 || length % v != 0 {
                return Err(CliError::config(key, format!("{v} must be a positive divisor of length {length}")));
            }
        }
        let window: WindowKind = raw.parse("window")?;
        let window_width: f64 = raw.parse("window_width")?;

        let lo = raw.parse("spectrum_lo")?;
        let hi = raw.parse("spectrum_hi")?;
        let taper = raw.parse("spectrum_taper")?;
        let mut unused = BTreeMap::new();
        let keep = |unused: &mut BTreeMap<&'static str, String>, key: &'static str| {
            unused.insert(key, raw.get(key).to_string());
        };
        let spectrum = match raw.choice("spectrum", &["bands", "raised_cosine", "smoothed_random"])? {
            "bands" => {
                keep(&mut unused, "spectrum_smooth");
                SpectrumShape::Bands { lo, hi, taper, count: raw.parse("spectrum_count")? }
            }
            "raised_cosine" => {
                keep(&mut unused, "spectrum_smooth");
                keep(&mut unused, "spectrum_count");
                SpectrumShape::RaisedCosine { lo, hi, taper }
            }
            _ => {
                keep(&mut unused, "spectrum_count");
                SpectrumShape::SmoothedRandom { lo, hi, taper, smooth: raw.parse("spectrum_smooth")? }
            }
        };
        let spectrum_power: f64 = raw.parse("spectrum_power")?;
        if !(spectrum_power > 0.0) {
            return Err(CliError::config("spectrum_power", "must be positive"));
        }

        let k0 = raw.parse("mod_k0")?;
        let modulation = match raw.choice("modulation", &["sine", "chirp", "constant"])? {
            "sine" => {
                keep(&mut unused, "mod_rate");
                ModulationKind::SineFm {
                    k0,
                    amplitude: raw.parse("mod_amplitude")?,
                    cycles: raw.parse("mod_cycles")?,
                    phase: raw.parse("mod_phase")?,
                }
            }
            "chirp" => {
                for key in ["mod_amplitude", "mod_cycles", "mod_phase"] {
                    keep(&mut unused, key);
                }
                ModulationKind::LinearChirp { k0, rate: raw.parse("mod_rate")? }
            }
            _ => {
                for key in ["mod_amplitude", "mod_cycles", "mod_phase", "mod_rate"] {
                    keep(&mut unused, key);
                }
                ModulationKind::Constant { k: k0 }
            }
        };

        let noise = match (raw.optional::<f64>("noise_sigma")?, raw.optional::<f64>("snr_db")?) {
            (Some(s), _) if !(s >= 0.0) => return Err(CliError::config("noise_sigma", "must be nonnegative")),
            (Some(s), _) => NoiseLevel::Sigma(s),
            (None, Some(snr)) if snr.is_finite() => NoiseLevel::SnrDb(snr),
            (None, Some(_)) => return Err(CliError::config("snr_db", "must be finite")),
            (None, None) => return Err(CliError::config("snr_db", "either snr_db or noise_sigma is required")),
        };

        let covariance = match raw.choice("covariance", &["spectral", "empirical"])? {
            "spectral" => {
                keep(&mut unused, "empirical_hop");
                CovarianceSource::Spectral { segment: raw.parse("template_segment")? }
            }
            _ => {
                keep(&mut unused, "template_segment");
                CovarianceSource::Empirical { hop: raw.optional("empirical_hop")? }
            }
        };
        let spectrum_method = match raw.choice("spectrum_method", &["welch", "marginal"])? {
            "welch" => {
                keep(&mut unused, "marginal_width");
                SpectrumMethod::Welch {
                    segment: raw.parse("welch_segment")?,
                    hop: raw.parse("welch_hop")?,
                    taper: match raw.choice("welch_taper", &["hann", "rect"])? {
                        "hann" => SegmentTaper::Hann,
                        _ => SegmentTaper::Rect,
                    },
                }
            }
            _ => {
                for key in ["welch_segment", "welch_hop", "welch_taper"] {
                    keep(&mut unused, key);
                }
                SpectrumMethod::Marginal { width: raw.optional("marginal_width")? }
            }
        };
        let search_range = match (raw.optional::<usize>("search_lo")?, raw.optional::<usize>("search_hi")?) {
            (None, None) => None,
            (lo, hi) => Some((lo.unwrap_or(0), hi.unwrap_or(length - 1))),
        };
        let estimator = EstimatorConfig {
            epsilon: raw.parse("epsilon")?,
            max_iter: raw.parse("max_iter")?,
            ridge_rel: raw.parse("ridge")?,
            interpolation: raw.parse::<Interpolation>("interpolation")?,
            search_range,
            covariance,
            spectrum_method,
            anchor: match raw.choice("anchor", &["quarter_band", "centre_of_mass"])? {
                "quarter_band" => AnchorPolicy::QuarterBand,
                _ => AnchorPolicy::CentreOfMass,
            },
            init_harmonics: raw.optional("init_harmonics")?,
            max_snr_db: raw.optional("max_snr_db")?,
        };
        estimator.validate().map_err(|e| CliError::config("estimator", e.to_string()))?;

        let realizations: usize = raw.parse("realizations")?;
        if realizations == 0 {
            return Err(CliError::config("realizations", "must be at least 1"));
        }
        let workers: usize = raw.parse("workers")?;
        if workers == 0 {
            return Err(CliError::config("workers", "must be at least 1"));
        }
        let signal_format = match raw.choice("signal_format", &["bin", "csv"])? {
            "bin" => SignalFormat::Bin,
            _ => SignalFormat::Csv,
        };
        let path = |key: &'static str| -> Option<PathBuf> {
            Some(raw.get(key)).filter(|v| *v != "none").map(PathBuf::from)
        };
        Ok(Self {
            length,
            hop,
            stride,
            window,
            window_width,
            spectrum,
            spectrum_power,
            spectrum_seed: raw.parse("spectrum_seed")?,
            modulation,
            noise,
            known_noise: raw.parse("known_noise")?,
            estimator,
            seed: raw.parse("seed")?,
            realizations,
            workers,
            signal_format,
            input: path("input"),
            truth: path("truth"),
            output: path("output").ok_or_else(|| CliError::config("output", "an output directory is required"))?,
            unused,
        })
    }

    /// Every key with its resolved value, one `key = value` per line in a
    /// fixed order.
    pub fn canonical(&self) -> String {
        let mut v: BTreeMap<&'static str, String> = self.unused.clone();
        let mut set = |k: &'static str, s: String| {
            v.insert(k, s);
        };
        set("length", self.length.to_string());
        set("hop", self.hop.to_string());
        set("stride", self.stride.to_string());
        set("window", self.window.to_string());
        set("window_width", self.window_width.to_string());
        let (name, lo, hi, taper) = match self.spectrum {
            SpectrumShape::Bands { lo, hi, taper, count } => {
                set("spectrum_count", count.to_string());
                ("bands", lo, hi, taper)
            }
            SpectrumShape::RaisedCosine { lo, hi, taper } => ("raised_cosine", lo, hi, taper),
            SpectrumShape::SmoothedRandom { lo, hi, taper, smooth } => {
                set("spectrum_smooth", smooth.to_string());
                ("smoothed_random", lo, hi, taper)
            }
        };
        set("spectrum", name.into());
        set("spectrum_lo", lo.to_string());
        set("spectrum_hi", hi.to_string());
        set("spectrum_taper", taper.to_string());
        set("spectrum_power", self.spectrum_power.to_string());
        set("spectrum_seed", self.spectrum_seed.to_string());
        match self.modulation {
            ModulationKind::SineFm { k0, amplitude, cycles, phase } => {
                set("modulation", "sine".into());
                set("mod_k0", k0.to_string());
                set("mod_amplitude", amplitude.to_string());
                set("mod_cycles", cycles.to_string());
                set("mod_phase", phase.to_string());
            }
            ModulationKind::LinearChirp { k0, rate } => {
                set("modulation", "chirp".into());
                set("mod_k0", k0.to_string());
                set("mod_rate", rate.to_string());
            }
            ModulationKind::Constant { k } => {
                set("modulation", "constant".into());
                set("mod_k0", k.to_string());
            }
        }
        match self.noise {
            NoiseLevel::SnrDb(snr) => {
                set("snr_db", snr.to_string());
                set("noise_sigma", "none".into());
            }
            NoiseLevel::Sigma(s) => {
                set("snr_db", "none".into());
                set("noise_sigma", s.to_string());
            }
        }
        set("known_noise", self.known_noise.to_string());
        let e = &self.estimator;
        set("epsilon", e.epsilon.to_string());
        set("max_iter", e.max_iter.to_string());
        set("ridge", e.ridge_rel.to_string());
        set("interpolation", e.interpolation.to_string());
        match e.covariance {
            CovarianceSource::Spectral { segment } => {
                set("covariance", "spectral".into());
                set("template_segment", segment.to_string());
            }
            CovarianceSource::Empirical { hop } => {
                set("covariance", "empirical".into());
                set("empirical_hop", hop.map_or("none".into(), |h| h.to_string()));
            }
        }
        match e.spectrum_method {
            SpectrumMethod::Welch { segment, hop, taper } => {
                set("spectrum_method", "welch".into());
                set("welch_segment", segment.to_string());
                set("welch_hop", hop.to_string());
                set("welch_taper", if taper == SegmentTaper::Hann { "hann" } else { "rect" }.into());
            }
            SpectrumMethod::Marginal { width } => {
                set("spectrum_method", "marginal".into());
                set("marginal_width", width.map_or("none".into(), |w| w.to_string()));
            }
        }
        set(
            "anchor",
            match e.anchor {
                AnchorPolicy::QuarterBand => "quarter_band",
                AnchorPolicy::CentreOfMass => "centre_of_mass",
            }
            .into(),
        );
        set("init_harmonics", e.init_harmonics.map_or("none".into(), |h| h.to_string()));
        set("max_snr_db", e.max_snr_db.map_or("none".into(), |d| d.to_string()));
        let (lo, hi) = e.search_range.map_or(("none".into(), "none".into()), |(lo, hi)| (lo.to_string(), hi.to_string()));
        set("search_lo", lo);
        set("search_hi", hi);
        set("seed", self.seed.to_string());
        set("realizations", self.realizations.to_string());
        set("workers", self.workers.to_string());
        set("signal_format", if self.signal_format == SignalFormat::Bin { "bin" } else { "csv" }.into());
        let show = |p: &Option<PathBuf>| p.as_ref().map_or("none".into(), |p| p.display().to_string());
        set("input", show(&self.input));
        set("truth", show(&self.truth));
        set("output", self.output.display().to_string());

        let mut out = String::new();
        for (key, _) in KEYS {
            out.push_str(key);
            out.push_str(" = ");
            out.push_str(&v[key]);
            out.push('\n');
        }
        out
    }
}
