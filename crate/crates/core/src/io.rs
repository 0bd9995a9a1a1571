//! Signal files and CSV tables.
//!
//! The binary signal format is a 16-byte header (`b"WBFM"`, `u32` length,
//! `u32` reserved, 4 zero bytes of padding; little-endian) followed by `(re, im)` pairs of
//! little-endian `f64`. The CSV alternative has columns `t,re,im`. Every
//! table written here uses `,` separators, LF line endings, a header row and
//! floats with 9 significant digits.

use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};
use crate::estimator::IterationLog;
use crate::gabor::{GaborSystem, TFMatrix};
use crate::spectrum::PowerSpectrum;
use crate::C64;

pub const MAGIC: [u8; 4] = *b"WBFM";
pub const HEADER_LEN: usize = 16;

pub fn write_signal<W: Write>(w: &mut W, y: &[C64]) -> Result<()> {
    let len = u32::try_from(y.len()).map_err(|_| Error::Format(format!("signal of length {} too long", y.len())))?;
    w.write_all(&MAGIC)?;
    w.write_all(&len.to_le_bytes())?;
    w.write_all(&[0; 8])?;
    let mut buf = Vec::with_capacity(16 * y.len());
    for v in y {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_signal<R: Read>(r: &mut R) -> Result<Vec<C64>> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!("file is {} bytes, shorter than the {HEADER_LEN}-byte header", bytes.len())));
    }
    if bytes[..4] != MAGIC {
        return Err(Error::Format(format!("bad magic {:?} at byte 0, expected \"WBFM\"", &bytes[..4])));
    }
    let len = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let expected = HEADER_LEN + 16 * len;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "header at byte 4 declares {len} samples ({expected} bytes) but the file has {} bytes",
            bytes.len()
        )));
    }
    let f = |i: usize| f64::from_le_bytes(bytes[i..i + 8].try_into().unwrap());
    Ok((0..len).map(|t| HEADER_LEN + 16 * t).map(|i| C64::new(f(i), f(i + 8))).collect())
}

pub fn write_signal_csv<W: Write>(w: &mut W, y: &[C64]) -> Result<()> {
    write_csv(
        w,
        &["t", "re", "im"],
        y.iter().enumerate().map(|(t, v)| vec![t.to_string(), format_float(v.re), format_float(v.im)]),
    )
}

/// Reads a `t,re,im` table; `t` must run `0, 1, ...` in order.
pub fn read_signal_csv<R: BufRead>(r: R) -> Result<Vec<C64>> {
    let rows = read_csv(r, &["t", "re", "im"])?;
    rows.iter()
        .enumerate()
        .map(|(t, row)| {
            if row[0] != t as f64 {
                return Err(Error::Format(format!("line {}: sample index {} out of order, expected {t}", t + 2, row[0])));
            }
            Ok(C64::new(row[1], row[2]))
        })
        .collect()
}

/// Shortest of fixed or scientific notation carrying 9 significant digits,
/// trailing zeros removed. `-0` prints as `0`.
pub fn format_float(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() { "nan" } else if v > 0.0 { "inf" } else { "-inf" }.into();
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        trim_zeros(format!("{:.*}", (8 - exp) as usize, v))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn write_csv<W, I>(w: &mut W, header: &[&str], rows: I) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = Vec<String>>,
{
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::Format(format!("row has {} fields, header has {}", row.len(), header.len())));
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    w.write_all(out.as_bytes())?;
    Ok(())
}

/// Parses a numeric table whose header must equal `header`. Errors carry
/// the 1-based line and column.
pub fn read_csv<R: BufRead>(r: R, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut lines = r.lines();
    let first = lines.next().ok_or_else(|| Error::Format("line 1: empty file, expected a header".into()))??;
    let found: Vec<&str> = first.trim_end_matches('\r').split(',').map(str::trim).collect();
    if found != header {
        return Err(Error::Format(format!("line 1: header {found:?}, expected {header:?}")));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 2;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != header.len() {
            return Err(Error::Format(format!("line {lineno}: {} fields, expected {}", fields.len(), header.len())));
        }
        let row = fields
            .iter()
            .enumerate()
            .map(|(j, f)| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Format(format!("line {lineno}, column {}: cannot parse {f:?} as a number", j + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// `iter,criterion`, iterations counted from 1.
pub fn write_iterations_csv<W: Write>(w: &mut W, log: &IterationLog) -> Result<()> {
    write_csv(
        w,
        &["iter", "criterion"],
        log.criteria.iter().enumerate().map(|(i, c)| vec![(i + 1).to_string(), format_float(*c)]),
    )
}

/// `frame,time_sample,delta_coarse,offset_c,gamma_prime_hat` for the final track.
pub fn write_track_csv<W: Write>(w: &mut W, log: &IterationLog, sys: &GaborSystem) -> Result<()> {
    let track = log.final_track();
    let coarse = track.frame_coarse(sys.stride());
    write_csv(
        w,
        &["frame", "time_sample", "delta_coarse", "offset_c", "gamma_prime_hat"],
        (0..sys.num_frames()).map(|n| {
            vec![
                n.to_string(),
                (n * sys.hop()).to_string(),
                coarse[n].to_string(),
                track.offsets[n].to_string(),
                format_float(track.frame_gamma_prime[n]),
            ]
        }),
    )
}

/// `bin,S_hat` over the positive band `0..=L/2`.
pub fn write_spectrum_csv<W: Write>(w: &mut W, spectrum: &PowerSpectrum, column: &str) -> Result<()> {
    write_csv(
        w,
        &["bin", column],
        spectrum.values().iter().enumerate().map(|(k, v)| vec![k.to_string(), format_float(*v)]),
    )
}

/// `|G[m, n]|` with one row per bin and one column per frame.
pub fn write_spectrogram_csv<W: Write>(w: &mut W, tf: &TFMatrix) -> Result<()> {
    let names: Vec<String> = (0..tf.num_frames()).map(|n| format!("frame_{n}")).collect();
    let header: Vec<&str> = std::iter::once("bin").chain(names.iter().map(String::as_str)).collect();
    write_csv(
        w,
        &header,
        (0..tf.num_bins()).map(|m| {
            std::iter::once(m.to_string())
                .chain((0..tf.num_frames()).map(|n| format_float(tf.get(m, n).norm())))
                .collect()
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_round_trip_and_header() {
        let y: Vec<C64> = (0..37).map(|t| C64::new(t as f64 * 0.25 - 3.0, (t as f64).sin())).collect();
        let mut buf = Vec::new();
        write_signal(&mut buf, &y).unwrap();
        assert_eq!(buf.len(), 16 + 16 * 37);
        assert_eq!(&buf[..4], b"WBFM");
        assert_eq!(u32::from_le_bytes(buf[4..8].try_into().unwrap()), 37);
        assert_eq!(&buf[8..16], &[0; 8]);
        assert_eq!(read_signal(&mut buf.as_slice()).unwrap(), y);
    }

    #[test]
    fn binary_rejects_bad_files() {
        let mut buf = Vec::new();
        write_signal(&mut buf, &[C64::new(1.0, 2.0); 4]).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_signal(&mut bad.as_slice()), Err(Error::Format(_))));
        let short = &buf[..buf.len() - 3];
        assert!(matches!(read_signal(&mut &short[..]), Err(Error::Format(_))));
        assert!(matches!(read_signal(&mut &buf[..10]), Err(Error::Format(_))));
    }

    #[test]
    fn csv_signal_round_trip() {
        let y: Vec<C64> = (0..10).map(|t| C64::new(1.0 / (t as f64 + 1.0), -(t as f64))).collect();
        let mut buf = Vec::new();
        write_signal_csv(&mut buf, &y).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,re,im\n0,1,0\n1,0.5,-1\n"));
        assert!(!text.contains('\r'));
        let back = read_signal_csv(buf.as_slice()).unwrap();
        for (a, b) in back.iter().zip(&y) {
            assert!((a - b).norm() <= 1e-8 * b.norm());
        }
    }

    #[test]
    fn csv_errors_carry_positions() {
        let err = read_csv("a,b\n1,2\n3,x\n".as_bytes(), &["a", "b"]).unwrap_err().to_string();
        assert!(err.contains("line 3, column 2"), "{err}");
        let err = read_csv("a,c\n".as_bytes(), &["a", "b"]).unwrap_err().to_string();
        assert!(err.contains("line 1"), "{err}");
        let err = read_signal_csv("t,re,im\n1,0,0\n".as_bytes()).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn float_format() {
        assert_eq!(format_float(0.0), "0");
        assert_eq!(format_float(-0.0), "0");
        assert_eq!(format_float(1.0), "1");
        assert_eq!(format_float(-2.5), "-2.5");
        assert_eq!(format_float(1.0 / 3.0), "0.333333333");
        assert_eq!(format_float(123456789.0), "123456789");
        assert_eq!(format_float(1234567890.0), "1.23456789e9");
        assert_eq!(format_float(1.5e-7), "1.5e-7");
        assert_eq!(format_float(0.000123456789123), "0.000123456789");
        assert_eq!(format_float(99999999.99), "100000000");
        for v in [std::f64::consts::PI, -1e-300, 6.02214076e23, 0.1 + 0.2] {
            let back: f64 = format_float(v).parse().unwrap();
            assert!((back - v).abs() <= 5e-9 * v.abs(), "{v}");
        }
    }
}
