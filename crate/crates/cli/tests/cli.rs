use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use wbfm_core::io::read_signal;
use wbfm_core::C64;

/// A small lattice that runs in well under a second.
const SMALL: &str = "\
length = 1024
hop = 16
stride = 4
window_width = 64
spectrum_lo = 25
spectrum_hi = 500
spectrum_taper = 4
template_segment = 256
mod_k0 = 50
mod_amplitude = 4
max_iter = 5
";

fn wbfm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wbfm")).args(args).output().unwrap()
}

/// Writes `SMALL` with the keys in `extra` replaced or added.
fn config(dir: &Path, extra: &str) -> PathBuf {
    let key = |l: &str| l.split('=').next().unwrap().trim().to_string();
    let overridden: Vec<String> = extra.lines().map(key).collect();
    let mut text: String =
        SMALL.lines().filter(|l| !overridden.contains(&key(l))).map(|l| format!("{l}\n")).collect();
    text.push_str(extra);
    let path = dir.join("test.conf");
    fs::write(&path, text).unwrap();
    path
}

/// The echo without the output path, which naturally differs between directories.
fn echo_body(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().filter(|l| !l.starts_with("output =")).collect::<Vec<_>>().join("\n")
}

fn run_cmd(cmd: &str, conf: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, "--config", conf.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    wbfm(&args)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(files(&path));
        } else {
            out.push(path);
        }
    }
    out.sort();
    out
}

fn read_bin(path: &Path) -> Vec<C64> {
    read_signal(&mut fs::File::open(path).unwrap()).unwrap()
}

#[test]
fn unknown_key_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let conf = config(tmp.path(), "lenght = 2048\n");
    let out = tmp.path().join("out");
    let o = run_cmd("synth", &conf, &out, &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("lenght"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn usage_errors_exit_with_one() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(wbfm(&["run", "--bogus"]).status.code(), Some(1));
    assert_eq!(wbfm(&[]).status.code(), Some(1));
    let conf = config(tmp.path(), "");
    let o = run_cmd("montecarlo", &conf, &tmp.path().join("mc"), &["--workers", "0"]);
    assert_eq!(o.status.code(), Some(1));
    let conf = config(tmp.path(), "realizations = 1\n");
    let o = run_cmd("montecarlo", &conf, &tmp.path().join("mc"), &[]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(!tmp.path().join("mc").exists());
}

#[test]
fn missing_input_is_an_io_error_and_writes_nothing() {
    let tmp = TempDir::new().unwrap();
    let conf = config(tmp.path(), &format!("input = {}\n", tmp.path().join("nope.bin").display()));
    let out = tmp.path().join("out");
    let o = run_cmd("estimate", &conf, &out, &[]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(!out.exists());
    let missing_conf = tmp.path().join("absent.conf");
    assert_eq!(run_cmd("run", &missing_conf, &out, &[]).status.code(), Some(3));
}

#[test]
fn constant_noiseless_synthesis_is_a_modulated_copy() {
    let tmp = TempDir::new().unwrap();
    let conf = config(tmp.path(), "modulation = constant\nmod_k0 = 7\nsnr_db = none\nnoise_sigma = 0\n");
    let out = tmp.path().join("synth");
    let o = run_cmd("synth", &conf, &out, &["--seed", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let y = read_bin(&out.join("signal.bin"));
    let z = read_bin(&out.join("stationary.bin"));
    assert_eq!(y.len(), 1024);
    for t in 0..1024 {
        let ramp = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * 7.0 * t as f64 / 1024.0);
        assert!((y[t] - z[t] * ramp).norm() < 1e-12, "sample {t}");
    }
}

#[test]
fn signal_file_has_the_documented_layout() {
    let tmp = TempDir::new().unwrap();
    let conf = config(tmp.path(), "stride = 8\nwindow_width = 32\n");
    let out = tmp.path().join("synth");
    assert!(run_cmd("synth", &conf, &out, &[]).status.success());
    let bytes = fs::read(out.join("signal.bin")).unwrap();
    assert_eq!(bytes.len(), 16 + 16 * 1024);
    assert_eq!(&bytes[..4], b"WBFM");
    assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1024);
    let csv = tmp.path().join("csv");
    let conf = config(tmp.path(), "stride = 8\nwindow_width = 32\nsignal_format = csv\n");
    assert!(run_cmd("synth", &conf, &csv, &[]).status.success());
    let text = fs::read_to_string(csv.join("signal.csv")).unwrap();
    assert!(text.starts_with("t,re,im\n0,"));
    assert_eq!(text.lines().count(), 1025);
}

#[test]
fn every_output_directory_echoes_its_config() {
    let tmp = TempDir::new().unwrap();
    let conf = config(tmp.path(), "realizations = 2\nmax_iter = 3\n");
    for cmd in ["synth", "run", "montecarlo"] {
        let out = tmp.path().join(cmd);
        let o = run_cmd(cmd, &conf, &out, &["--seed", "11"]);
        assert!(o.status.success(), "{cmd}: {}", stderr(&o));
        let echo = fs::read_to_string(out.join("config.txt")).unwrap();
        assert!(echo.lines().any(|l| l == "seed = 11"), "{cmd}");
        assert!(echo.lines().any(|l| l == "length = 1024"), "{cmd}");
        // the echo is itself a complete config that reproduces the run
        let again = tmp.path().join(format!("{cmd}_again"));
        let o = run_cmd(cmd, &out.join("config.txt"), &again, &[]);
        assert!(o.status.success(), "{cmd}: {}", stderr(&o));
        assert_eq!(echo_body(&again.join("config.txt")), echo_body(&out.join("config.txt")));
    }
    let mc = tmp.path().join("montecarlo");
    for (r, seed) in [(0, 11), (1, 12)] {
        let echo = fs::read_to_string(mc.join(format!("run_{r:03}")).join("config.txt")).unwrap();
        assert!(echo.lines().any(|l| l == format!("seed = {seed}")));
    }
    for name in ["convergence.csv", "runs.csv", "summary.csv"] {
        assert!(mc.join(name).exists(), "{name}");
    }
}

#[test]
fn csv_tables_have_headers_and_unix_line_endings() {
    let tmp = TempDir::new().unwrap();
    let conf = config(tmp.path(), "");
    let out = tmp.path().join("run");
    assert!(run_cmd("run", &conf, &out, &[]).status.success());
    let csvs: Vec<PathBuf> = files(&out).into_iter().filter(|p| p.extension().is_some_and(|e| e == "csv")).collect();
    assert!(csvs.len() >= 6);
    for p in csvs {
        let text = fs::read_to_string(&p).unwrap();
        assert!(!text.contains('\r'), "{}", p.display());
        assert!(text.ends_with('\n'));
        let header = text.lines().next().unwrap();
        assert!(header.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == ','), "{header}");
    }
    let metrics = fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert!(metrics.starts_with("metric,value\n"));
    assert!(metrics.contains("\nrmse,"));
}

#[test]
fn same_seed_same_bytes() {
    let tmp = TempDir::new().unwrap();
    let conf = config(tmp.path(), "");
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    assert!(run_cmd("run", &conf, &a, &["--seed", "5"]).status.success());
    assert!(run_cmd("run", &conf, &b, &["--seed", "5"]).status.success());
    assert!(run_cmd("run", &conf, &c, &["--seed", "6"]).status.success());
    let (fa, fb) = (files(&a), files(&b));
    assert_eq!(fa.len(), fb.len());
    for (x, y) in fa.iter().zip(&fb) {
        if x.ends_with("config.txt") {
            assert_eq!(echo_body(x), echo_body(y));
            continue;
        }
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{}", x.display());
    }
    assert_ne!(fs::read(a.join("signal.bin")).unwrap(), fs::read(c.join("signal.bin")).unwrap());
}

#[test]
fn estimate_scores_against_a_given_truth() {
    let tmp = TempDir::new().unwrap();
    let conf = config(tmp.path(), "");
    let synth = tmp.path().join("synth");
    assert!(run_cmd("synth", &conf, &synth, &[]).status.success());
    let extra = format!(
        "input = {}\ntruth = {}\n",
        synth.join("signal.bin").display(),
        synth.join("gamma_true.csv").display()
    );
    let conf = config(tmp.path(), &extra);
    let out = tmp.path().join("est");
    let o = run_cmd("estimate", &conf, &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    for name in ["iterations.csv", "track.csv", "spectrum.csv", "spectrogram.csv", "metrics.csv", "config.txt"] {
        assert!(out.join(name).exists(), "{name}");
    }
    let track = fs::read_to_string(out.join("track.csv")).unwrap();
    assert!(track.starts_with("frame,time_sample,delta_coarse,offset_c,gamma_prime_hat\n"));
    assert_eq!(track.lines().count(), 1 + 1024 / 16);
}
