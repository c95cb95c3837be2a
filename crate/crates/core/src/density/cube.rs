//! Gaussian cube volumetric format.
//!
//! Reader contract: two comment lines; "NAtoms Ox Oy Oz" (bohr); three axis
//! lines "Ni vx vy vz" (bohr, axis-aligned); NAtoms atom records (ignored
//! beyond the count); whitespace-separated values with the z index fastest,
//! then y, then x. Lengths are converted bohr -> nm on load; values are kept
//! exactly as stored. The writer emits six values per line in scientific
//! notation with six significant digits.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarGrid3D};
use crate::units::{BOHR_NM, nm_to_bohr};

#[derive(Debug, Clone)]
pub struct CubeFile {
    pub grid: ScalarGrid3D,
    pub comments: [String; 2],
    pub atom_count: usize,
}

pub fn read_cube(path: impl AsRef<Path>) -> Result<CubeFile> {
    let text = std::fs::read_to_string(path)?;
    read_cube_str(&text)
}

pub fn read_cube_str(text: &str) -> Result<CubeFile> {
    let lines: Vec<&str> = text.lines().collect();
    let parse_err = |line: usize, message: String| Error::CubeParse { line, message };

    if lines.len() < 6 {
        return Err(parse_err(lines.len(), "file ends before the axis records".into()));
    }
    let comments = [lines[0].to_string(), lines[1].to_string()];

    let head = tokens_of(lines[2], 3)?;
    if head.len() < 4 {
        return Err(parse_err(3, format!("expected 'NAtoms Ox Oy Oz', got {} tokens", head.len())));
    }
    let natoms_f = parse_f64(head[0], 3)?;
    if natoms_f < 0.0 {
        return Err(parse_err(3, "negative atom counts (orbital cubes) are not supported".into()));
    }
    if natoms_f.fract() != 0.0 {
        return Err(parse_err(3, format!("atom count must be an integer, got {}", head[0])));
    }
    let natoms = natoms_f as usize;
    let mut origin_bohr = [0.0; 3];
    for a in 0..3 {
        origin_bohr[a] = parse_f64(head[1 + a], 3)?;
    }

    let mut dims = [0usize; 3];
    let mut step_bohr = [0.0; 3];
    for a in 0..3 {
        let lno = 4 + a;
        let t = tokens_of(lines[3 + a], lno)?;
        if t.len() < 4 {
            return Err(parse_err(lno, format!("expected 'Ni vx vy vz', got {} tokens", t.len())));
        }
        let n = parse_f64(t[0], lno)?;
        if !(n >= 1.0) || n.fract() != 0.0 {
            return Err(parse_err(lno, format!("non-positive or fractional axis count {}", t[0])));
        }
        dims[a] = n as usize;
        for b in 0..3 {
            let v = parse_f64(t[1 + b], lno)?;
            if b == a {
                if v <= 0.0 {
                    return Err(parse_err(lno, format!("axis step must be positive, got {v}")));
                }
                step_bohr[a] = v;
            } else if v != 0.0 {
                return Err(parse_err(
                    lno,
                    format!("non-axis-aligned step vector (component {v} off the diagonal)"),
                ));
            }
        }
        if dims[a] < 2 {
            return Err(parse_err(lno, format!("axis needs at least 2 points, got {}", dims[a])));
        }
    }

    let first_value_line = 6 + natoms;
    if lines.len() < first_value_line {
        return Err(parse_err(
            lines.len(),
            format!("file ends inside the {natoms} atom records"),
        ));
    }

    let expected = dims[0] * dims[1] * dims[2];
    let mut values = Vec::with_capacity(expected);
    for (off, line) in lines[first_value_line..].iter().enumerate() {
        let lno = first_value_line + off + 1;
        for tok in line.split_whitespace() {
            if values.len() == expected {
                return Err(parse_err(
                    lno,
                    format!("expected {expected} values, found extra token '{tok}'"),
                ));
            }
            values.push(parse_f64(tok, lno)?);
        }
    }
    if values.len() != expected {
        return Err(parse_err(
            lines.len(),
            format!("expected {expected} values, got {} before end of input", values.len()),
        ));
    }

    let spec = GridSpec::new(
        [origin_bohr[0] * BOHR_NM, origin_bohr[1] * BOHR_NM, origin_bohr[2] * BOHR_NM],
        [step_bohr[0] * BOHR_NM, step_bohr[1] * BOHR_NM, step_bohr[2] * BOHR_NM],
        dims,
    )?;
    Ok(CubeFile { grid: ScalarGrid3D::new(spec, values)?, comments, atom_count: natoms })
}

fn tokens_of(line: &str, _lno: usize) -> Result<Vec<&str>> {
    Ok(line.split_whitespace().collect())
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>().map_err(|_| Error::CubeParse {
        line,
        message: format!("non-numeric token '{tok}'"),
    })
}

pub fn write_cube(path: impl AsRef<Path>, grid: &ScalarGrid3D, comments: [&str; 2]) -> Result<()> {
    std::fs::write(path, cube_string(grid, comments))?;
    Ok(())
}

pub fn cube_string(grid: &ScalarGrid3D, comments: [&str; 2]) -> String {
    let spec = grid.spec();
    let mut out = String::new();
    let _ = writeln!(out, "{}", comments[0]);
    let _ = writeln!(out, "{}", comments[1]);
    let o = spec.origin_nm();
    let _ = writeln!(
        out,
        "{:5} {:13.6} {:13.6} {:13.6}",
        0,
        nm_to_bohr(o[0]),
        nm_to_bohr(o[1]),
        nm_to_bohr(o[2])
    );
    for a in 0..3 {
        let s = nm_to_bohr(spec.spacing_nm()[a]);
        let v = [
            if a == 0 { s } else { 0.0 },
            if a == 1 { s } else { 0.0 },
            if a == 2 { s } else { 0.0 },
        ];
        let _ = writeln!(out, "{:5} {:13.6} {:13.6} {:13.6}", spec.dims()[a], v[0], v[1], v[2]);
    }
    for (i, v) in grid.values().iter().enumerate() {
        let _ = write!(out, "{}", fmt_e6(*v));
        if i % 6 == 5 || i + 1 == grid.values().len() {
            out.push('\n');
        } else {
            out.push(' ');
        }
    }
    out
}

/// Scientific notation with 6 significant digits and a signed two-digit exponent.
fn fmt_e6(v: f64) -> String {
    let s = format!("{:.5E}", v);
    let (mantissa, exp) = s.split_once('E').expect("exponent marker");
    let (sign, digits) = match exp.strip_prefix('-') {
        Some(d) => ('-', d),
        None => ('+', exp),
    };
    format!("{:>13}", format!("{mantissa}E{sign}{digits:0>2}"))
}
