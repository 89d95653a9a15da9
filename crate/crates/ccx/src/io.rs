//! Text and image codecs for fields, masks and point lists.
//!
//! A field file starts with the grid line `nx,ny,x0,y0,h` followed by one `i,j,value` line per
//! node; a mask file has the same layout with values 0 or 1. Numbers are printed in the shortest
//! form that parses back to the same `f64`, never more than 17 significant digits. Images are
//! binary 8-bit PGM with the top row first.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{CcxError, Result};
use crate::field::{GridSpec, SampleMask, ScalarField};

fn bad(msg: impl Into<String>) -> CcxError {
    CcxError::Format(msg.into())
}

/// Shortest text that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn grid_csv(spec: &GridSpec, value: impl Fn(usize) -> String) -> String {
    let mut out = String::with_capacity(spec.len() * 24 + 64);
    out.push_str("nx,ny,x0,y0,h\n");
    let _ = writeln!(out, "{},{},{},{},{}", spec.nx, spec.ny, fmt_f64(spec.x0), fmt_f64(spec.y0), fmt_f64(spec.h));
    out.push_str("i,j,value\n");
    for k in 0..spec.len() {
        let (i, j) = spec.ij(k);
        let _ = writeln!(out, "{i},{j},{}", value(k));
    }
    out
}

pub fn field_to_csv(f: &ScalarField) -> String {
    grid_csv(&f.spec, |k| fmt_f64(f.values[k]))
}

pub fn mask_to_csv(member: &[bool], spec: &GridSpec) -> String {
    grid_csv(spec, |k| if member[k] { "1".into() } else { "0".into() })
}

/// Data lines of a CSV file; blank lines, `#` comments and lines starting with a letter
/// (column headers) are skipped.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(ln, line)| {
        let line = line.trim();
        let first = line.chars().next()?;
        if first == '#' || first.is_ascii_alphabetic() {
            return None;
        }
        Some((ln + 1, line.split(',').map(str::trim).collect()))
    })
}

fn parse_grid_csv(text: &str) -> Result<(GridSpec, Vec<f64>)> {
    let mut lines = data_lines(text);
    let (ln, head) = lines.next().ok_or_else(|| bad("missing grid line nx,ny,x0,y0,h"))?;
    let spec = match head[..] {
        [nx, ny, x0, y0, h] => {
            let int = |t: &str| t.parse::<usize>().map_err(|_| bad(format!("line {ln}: bad node count {t:?}")));
            let real = |t: &str| t.parse::<f64>().map_err(|_| bad(format!("line {ln}: bad number {t:?}")));
            GridSpec::new(int(nx)?, int(ny)?, real(x0)?, real(y0)?, real(h)?)?
        }
        _ => return Err(bad(format!("line {ln}: expected nx,ny,x0,y0,h"))),
    };
    let mut values: Vec<Option<f64>> = vec![None; spec.len()];
    for (ln, parts) in lines {
        let [i, j, v] = parts[..] else {
            return Err(bad(format!("line {ln}: expected i,j,value")));
        };
        let (i, j) = match (i.parse::<usize>(), j.parse::<usize>()) {
            (Ok(i), Ok(j)) if i < spec.nx && j < spec.ny => (i, j),
            _ => return Err(bad(format!("line {ln}: node ({i}, {j}) is not on the {}x{} grid", spec.nx, spec.ny))),
        };
        let v = v.parse::<f64>().map_err(|_| bad(format!("line {ln}: bad number {v:?}")))?;
        let slot = &mut values[spec.index(i, j)];
        if slot.replace(v).is_some() {
            return Err(bad(format!("line {ln}: node ({i}, {j}) is given twice")));
        }
    }
    let values = values
        .into_iter()
        .enumerate()
        .map(|(k, v)| {
            v.ok_or_else(|| {
                let (i, j) = spec.ij(k);
                bad(format!("node ({i}, {j}) has no value"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((spec, values))
}

pub fn field_from_csv(text: &str) -> Result<ScalarField> {
    let (spec, values) = parse_grid_csv(text)?;
    ScalarField::new(spec, values)
}

/// 0/1 flags of a mask file and its grid; the flags may be all zero.
pub fn flags_from_csv(text: &str) -> Result<(GridSpec, Vec<bool>)> {
    let (spec, values) = parse_grid_csv(text)?;
    let flags = values
        .into_iter()
        .map(|v| match v {
            0.0 => Ok(false),
            1.0 => Ok(true),
            _ => Err(bad(format!("mask entries must be 0 or 1, got {v}"))),
        })
        .collect::<Result<_>>()?;
    Ok((spec, flags))
}

pub fn mask_from_csv(text: &str) -> Result<SampleMask> {
    let (spec, flags) = flags_from_csv(text)?;
    SampleMask::new(spec, flags)
}

/// `x,y,value` lines; a header line is skipped when it does not parse.
pub fn points_from_csv(text: &str) -> Result<Vec<(f64, f64, f64)>> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        let nums: Option<Vec<f64>> = parts.iter().map(|t| t.parse().ok()).collect();
        match (nums, parts.len()) {
            (Some(v), 3) => out.push((v[0], v[1], v[2])),
            (None, _) if out.is_empty() && ln == 0 => continue,
            _ => return Err(bad(format!("line {}: expected x,y,value", ln + 1))),
        }
    }
    Ok(out)
}

pub fn points_to_csv(points: &[(f64, f64, f64)]) -> String {
    let mut out = String::from("x,y,value\n");
    for (x, y, v) in points {
        let _ = writeln!(out, "{},{},{}", fmt_f64(*x), fmt_f64(*y), fmt_f64(*v));
    }
    out
}

/// Decodes a binary 8-bit PGM into a unit-spacing grid whose row `j = 0` is the bottom image row.
pub fn pgm_decode(bytes: &[u8]) -> Result<ScalarField> {
    let mut pos = 0;
    let mut token = || -> Result<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated PGM header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if token()? != "P5" {
        return Err(bad("only binary PGM (P5) is supported"));
    }
    let num = |s: String| s.parse::<usize>().map_err(|_| bad(format!("bad PGM header value {s:?}")));
    let w = num(token()?)?;
    let h = num(token()?)?;
    let maxval = num(token()?)?;
    if maxval != 255 {
        return Err(bad(format!("only 8-bit PGM is supported, maxval {maxval}")));
    }
    // exactly one whitespace byte separates the header from the raster
    let data = bytes.get(pos + 1..).unwrap_or(&[]);
    if data.len() < w * h {
        return Err(bad(format!("PGM raster has {} bytes, expected {}", data.len(), w * h)));
    }
    let spec = GridSpec::new(w, h, 0.0, 0.0, 1.0)?;
    let mut values = vec![0.0; w * h];
    for r in 0..h {
        let j = h - 1 - r;
        for i in 0..w {
            values[spec.index(i, j)] = data[r * w + i] as f64;
        }
    }
    ScalarField::new(spec, values)
}

/// Encodes a field as binary 8-bit PGM, rounding and clamping to `[0, 255]`.
pub fn pgm_encode(f: &ScalarField) -> Vec<u8> {
    let (w, h) = (f.spec.nx, f.spec.ny);
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.reserve(w * h);
    for r in 0..h {
        let j = h - 1 - r;
        for i in 0..w {
            out.push(f.at(i, j).round().clamp(0.0, 255.0) as u8);
        }
    }
    out
}

pub fn read_pgm(path: &Path) -> Result<ScalarField> {
    pgm_decode(&std::fs::read(path)?)
}

/// The bundled 512x512 grey-scale photograph.
pub fn camera() -> ScalarField {
    pgm_decode(include_bytes!("../data/camera.pgm")).expect("bundled image decodes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trips_bit_exactly() {
        let spec = GridSpec::new(3, 2, -0.5, 0.25, 0.1).unwrap();
        let f = ScalarField::new(spec, vec![0.1, 1.0 / 3.0, -2.5e-300, 1e17, std::f64::consts::PI, -0.0]).unwrap();
        let text = field_to_csv(&f);
        assert!(text.starts_with("nx,ny,x0,y0,h\n3,2,-0.5,0.25,0.1\n"));
        assert_eq!(text.lines().count(), 9);
        let g = field_from_csv(&text).unwrap();
        assert_eq!(g.spec, spec);
        for (a, b) in f.values.iter().zip(&g.values) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn csv_rows_may_come_in_any_order() {
        let g = field_from_csv("2,1,0,0,1\n1,0,5\n0,0,4\n").unwrap();
        assert_eq!(g.values, vec![4.0, 5.0]);
    }

    #[test]
    fn csv_rejects_malformed_input() {
        assert!(field_from_csv("").is_err());
        assert!(field_from_csv("2,1,0,0,1\n0,0,1\n").is_err());
        assert!(field_from_csv("2,1,0,0,1\n0,0,1\n0,0,2\n1,0,1\n").is_err());
        assert!(field_from_csv("2,1,0,0,1\n0,0,1\n2,0,1\n").is_err());
        assert!(field_from_csv("2,1,0,0,1\n0,0,x\n1,0,1\n").is_err());
        assert!(field_from_csv("2,1,0,0\n").is_err());
    }

    #[test]
    fn masks_and_points() {
        let spec = GridSpec::new(2, 2, 0.0, 0.0, 1.0).unwrap();
        let m = vec![true, false, false, true];
        assert_eq!(flags_from_csv(&mask_to_csv(&m, &spec)).unwrap(), (spec, m));
        assert!(flags_from_csv("1,2,0,0,1\n0,0,0\n0,1,2\n").is_err());
        assert!(mask_from_csv(&mask_to_csv(&[false; 4], &spec)).is_err());
        let pts = vec![(0.5, 0.25, -1.0), (1.0, 0.0, 3.0)];
        assert_eq!(points_from_csv(&points_to_csv(&pts)).unwrap(), pts);
        assert!(points_from_csv("1,2\n").is_err());
    }

    #[test]
    fn pgm_round_trips_and_keeps_orientation() {
        let spec = GridSpec::new(3, 2, 0.0, 0.0, 1.0).unwrap();
        let f = ScalarField::new(spec, vec![0.0, 1.0, 2.0, 253.0, 254.0, 255.0]).unwrap();
        let bytes = pgm_encode(&f);
        // first raster byte is the top-left pixel, i.e. row j = 1
        assert_eq!(bytes[bytes.len() - 6], 253);
        assert_eq!(pgm_decode(&bytes).unwrap(), f);
        assert!(pgm_decode(b"P2\n1 1\n255\n0").is_err());
        assert!(pgm_decode(b"P5\n2 2\n255\n\x00").is_err());
        let c = camera();
        assert_eq!((c.spec.nx, c.spec.ny), (512, 512));
        assert!(c.min() >= 0.0 && c.max() <= 255.0);
    }
}
