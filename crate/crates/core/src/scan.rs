//! Constant-height rastering of the tip over a lateral pixel grid, and 2D
//! map operations (normalization, sums, rotations, profile cuts, CSV/PGM).
//!
//! Pixels are independent work items evaluated in parallel; each pixel's
//! reduction runs in a fixed order, so maps are bit-identical for any thread
//! count. Maps are stored raw and normalized only at output.

use rayon::prelude::*;

use crate::current::CurrentEngine;
use crate::density::{DensityForm, TransitionDensity};
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

/// Default clamp for zero pixels in log10 normalization.
pub const LOG10_FLOOR_DEFAULT: f64 = -12.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    Raw,
    Linear,
    Log10,
}

impl Normalization {
    pub fn as_str(&self) -> &'static str {
        match self {
            Normalization::Raw => "raw",
            Normalization::Linear => "linear",
            Normalization::Log10 => "log10",
        }
    }
}

/// Raster of values over tip lateral positions at fixed height.
/// Values are row-major: one row per y, x across (`values[iy * nx + ix]`).
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentMap2D {
    x_nm: Vec<f64>,
    y_nm: Vec<f64>,
    values: Vec<f64>,
    pub bias_v: f64,
    pub channel_labels: Vec<String>,
    pub tip_height_nm: f64,
    pub normalization: Normalization,
}

impl CurrentMap2D {
    pub fn new(
        x_nm: Vec<f64>,
        y_nm: Vec<f64>,
        values: Vec<f64>,
        bias_v: f64,
        channel_labels: Vec<String>,
        tip_height_nm: f64,
        normalization: Normalization,
    ) -> Result<Self> {
        check_axis(&x_nm, "x")?;
        check_axis(&y_nm, "y")?;
        if values.len() != x_nm.len() * y_nm.len() {
            return Err(Error::InvalidParameter(format!(
                "map needs {} values for {} x {} pixels, got {}",
                x_nm.len() * y_nm.len(),
                x_nm.len(),
                y_nm.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("map values must be finite".into()));
        }
        Ok(Self { x_nm, y_nm, values, bias_v, channel_labels, tip_height_nm, normalization })
    }

    pub fn x_nm(&self) -> &[f64] {
        &self.x_nm
    }

    pub fn y_nm(&self) -> &[f64] {
        &self.y_nm
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn nx(&self) -> usize {
        self.x_nm.len()
    }

    pub fn ny(&self) -> usize {
        self.y_nm.len()
    }

    #[inline]
    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.x_nm.len() + ix]
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::MIN, f64::max)
    }

    /// Pixel indices of the maximum value (first hit in row-major order).
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0usize, 0usize, f64::MIN);
        for iy in 0..self.ny() {
            for ix in 0..self.nx() {
                let v = self.value(ix, iy);
                if v > best.2 {
                    best = (ix, iy, v);
                }
            }
        }
        (best.0, best.1)
    }
}

fn check_axis(axis: &[f64], name: &str) -> Result<()> {
    if axis.is_empty() {
        return Err(Error::InvalidParameter(format!("{name} axis is empty")));
    }
    if axis.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("{name} axis has non-finite entries")));
    }
    if axis.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(format!("{name} axis must be strictly increasing")));
    }
    if axis.len() > 2 {
        let d0 = axis[1] - axis[0];
        if axis.windows(2).any(|w| ((w[1] - w[0]) - d0).abs() > 1e-9 * d0.abs()) {
            return Err(Error::InvalidParameter(format!("{name} axis must be uniform")));
        }
    }
    Ok(())
}

/// Uniform axis from `min` to `max` inclusive with `n` points.
pub fn axis_linspace(min_nm: f64, max_nm: f64, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidParameter("axis needs at least one point".into()));
    }
    if n == 1 {
        return Ok(vec![min_nm]);
    }
    if !(max_nm > min_nm) {
        return Err(Error::InvalidParameter(format!(
            "axis needs max > min, got [{min_nm}, {max_nm}]"
        )));
    }
    let step = (max_nm - min_nm) / (n - 1) as f64;
    Ok((0..n)
        .map(|i| if i == n - 1 { max_nm } else { min_nm + step * i as f64 })
        .collect())
}

/// Raster the total inelastic current over the pixel grid. Pixels run in
/// parallel on the current rayon pool; a failing pixel aborts the scan with
/// its coordinates attached.
pub fn scan_map(
    engine: &CurrentEngine,
    bias_v: f64,
    x_nm: &[f64],
    y_nm: &[f64],
    n_energy: usize,
) -> Result<CurrentMap2D> {
    check_axis(x_nm, "x")?;
    check_axis(y_nm, "y")?;
    let nx = x_nm.len();
    let values: Vec<f64> = (0..nx * y_nm.len())
        .into_par_iter()
        .map(|p| {
            let (ix, iy) = (p % nx, p / nx);
            let tip = [x_nm[ix], y_nm[iy]];
            engine
                .total_current(bias_v, tip, n_energy)
                .map(|r| r.total)
                .map_err(|e| at_pixel(e, tip))
        })
        .collect::<Result<Vec<f64>>>()?;
    CurrentMap2D::new(
        x_nm.to_vec(),
        y_nm.to_vec(),
        values,
        bias_v,
        engine.channels().iter().map(|c| c.label().to_string()).collect(),
        engine.model().tip_height_nm(),
        Normalization::Raw,
    )
}

fn at_pixel(e: Error, tip: [f64; 2]) -> Error {
    let ctx = format!("pixel ({:.6}, {:.6}) nm: {e}", tip[0], tip[1]);
    match e {
        Error::Config(_) => Error::Config(ctx),
        Error::Domain(_) => Error::Domain(ctx),
        Error::InvalidParameter(_) => Error::InvalidParameter(ctx),
        other => Error::Numerical(format!("pixel ({:.6}, {:.6}) nm: {other}", tip[0], tip[1])),
    }
}

/// Signed transition density sampled on the pixel axes at the z = 0 plane
/// (for profile comparisons against current maps). Gridded densities are
/// bilinearly interpolated on their plane nearest z = 0.
pub fn density_map(density: &TransitionDensity, x_nm: &[f64], y_nm: &[f64]) -> Result<CurrentMap2D> {
    check_axis(x_nm, "x")?;
    check_axis(y_nm, "y")?;
    let mut values = Vec::with_capacity(x_nm.len() * y_nm.len());
    match density.form() {
        DensityForm::Gaussian(p) => {
            for &y in y_nm {
                for &x in x_nm {
                    values.push(p.eval_plane(x, y));
                }
            }
        }
        DensityForm::Gridded(grid) => {
            let spec = grid.spec();
            let (k0, _) = spec.nearest_z_plane(0.0);
            if k0 < 0 || k0 as usize >= spec.dims()[2] {
                return Err(Error::Config("gridded density does not cover the z = 0 plane".into()));
            }
            let k0 = k0 as usize;
            let [nx, ny, _] = spec.dims();
            let interp = |x: f64, y: f64| -> f64 {
                let fx = (x - spec.origin_nm()[0]) / spec.spacing_nm()[0];
                let fy = (y - spec.origin_nm()[1]) / spec.spacing_nm()[1];
                let ix = fx.floor().clamp(0.0, (nx - 2) as f64) as usize;
                let iy = fy.floor().clamp(0.0, (ny - 2) as f64) as usize;
                let tx = (fx - ix as f64).clamp(0.0, 1.0);
                let ty = (fy - iy as f64).clamp(0.0, 1.0);
                let v00 = grid.get(ix, iy, k0);
                let v10 = grid.get(ix + 1, iy, k0);
                let v01 = grid.get(ix, iy + 1, k0);
                let v11 = grid.get(ix + 1, iy + 1, k0);
                v00 * (1.0 - tx) * (1.0 - ty)
                    + v10 * tx * (1.0 - ty)
                    + v01 * (1.0 - tx) * ty
                    + v11 * tx * ty
            };
            for &y in y_nm {
                for &x in x_nm {
                    values.push(interp(x, y));
                }
            }
        }
    }
    CurrentMap2D::new(
        x_nm.to_vec(),
        y_nm.to_vec(),
        values,
        0.0,
        vec![density.label().to_string()],
        0.0,
        Normalization::Raw,
    )
}

/// Normalize a map: linear divides by the maximum absolute value; log10 maps
/// value/max to log10, clamping non-positive pixels to `floor`. Raw returns
/// the input unchanged.
pub fn normalize_map(map: &CurrentMap2D, mode: Normalization) -> Result<CurrentMap2D> {
    normalize_map_with_floor(map, mode, LOG10_FLOOR_DEFAULT)
}

pub fn normalize_map_with_floor(
    map: &CurrentMap2D,
    mode: Normalization,
    log10_floor: f64,
) -> Result<CurrentMap2D> {
    if mode == Normalization::Raw {
        return Ok(map.clone());
    }
    if map.normalization == Normalization::Log10 {
        return Err(Error::Config("map is already log10-normalized".into()));
    }
    let max_abs = map.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(max_abs > 0.0) || map.values.iter().copied().fold(f64::MIN, f64::max) <= 0.0 {
        return Err(Error::Numerical(
            "normalization needs at least one strictly positive pixel".into(),
        ));
    }
    let values: Vec<f64> = match mode {
        Normalization::Linear => map.values.iter().map(|v| v / max_abs).collect(),
        Normalization::Log10 => map
            .values
            .iter()
            .map(|&v| if v > 0.0 { (v / max_abs).log10().max(log10_floor) } else { log10_floor })
            .collect(),
        Normalization::Raw => unreachable!(),
    };
    let mut out = map.clone();
    out.values = values;
    out.normalization = mode;
    Ok(out)
}

/// Pixelwise sum of raw maps on identical axes.
pub fn sum_maps(maps: &[CurrentMap2D]) -> Result<CurrentMap2D> {
    let first = maps
        .first()
        .ok_or_else(|| Error::Config("sum_maps needs at least one map".into()))?;
    let mut labels = Vec::new();
    for m in maps {
        if m.normalization != Normalization::Raw {
            return Err(Error::Config("sum_maps operates on raw (unnormalized) maps".into()));
        }
        if m.x_nm != first.x_nm || m.y_nm != first.y_nm {
            return Err(Error::Config("sum_maps needs identical axes".into()));
        }
        labels.extend(m.channel_labels.iter().cloned());
    }
    let mut values = vec![0.0f64; first.values.len()];
    for (i, v) in values.iter_mut().enumerate() {
        let mut acc = CompensatedSum::new();
        for m in maps {
            acc.add(m.values[i]);
        }
        *v = acc.value();
    }
    CurrentMap2D::new(
        first.x_nm.clone(),
        first.y_nm.clone(),
        values,
        first.bias_v,
        labels,
        first.tip_height_nm,
        Normalization::Raw,
    )
}

/// Quarter-turn of a map on a square grid with symmetric axes
/// (x and y axes equal, node set symmetric under negation):
/// out(x, y) = in(y, -x).
pub fn rotate90(map: &CurrentMap2D) -> Result<CurrentMap2D> {
    let n = map.nx();
    if map.ny() != n || map.x_nm != map.y_nm {
        return Err(Error::Config("rotate90 needs a square map with equal axes".into()));
    }
    for i in 0..n {
        if (map.x_nm[i] + map.x_nm[n - 1 - i]).abs() > 1e-12 {
            return Err(Error::Config("rotate90 needs axes symmetric about zero".into()));
        }
    }
    let mut values = vec![0.0f64; map.values.len()];
    for iy in 0..n {
        for ix in 0..n {
            // source point (y, -x)
            values[iy * n + ix] = map.value(iy, n - 1 - ix);
        }
    }
    let mut out = map.clone();
    out.values = values;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutAxis {
    /// Values along x at fixed y = offset.
    X,
    /// Values along y at fixed x = offset.
    Y,
}

/// 1D cut through a map, normalized to its own maximum absolute value.
#[derive(Debug, Clone)]
pub struct ProfileCut {
    pub positions_nm: Vec<f64>,
    pub values: Vec<f64>,
    /// Offset actually used after snapping to the nearest grid line.
    pub offset_nm: f64,
    pub snapped: bool,
}

pub fn profile_cut(map: &CurrentMap2D, axis: CutAxis, offset_nm: f64) -> Result<ProfileCut> {
    let (fixed_axis, positions) = match axis {
        CutAxis::X => (map.y_nm(), map.x_nm()),
        CutAxis::Y => (map.x_nm(), map.y_nm()),
    };
    let (idx, nearest) = fixed_axis
        .iter()
        .enumerate()
        .map(|(i, &v)| (i, v))
        .min_by(|a, b| {
            (a.1 - offset_nm).abs().partial_cmp(&(b.1 - offset_nm).abs()).unwrap()
        })
        .expect("axes are nonempty");
    let snapped = (nearest - offset_nm).abs() > 1e-9;
    if snapped {
        log::warn!(
            "profile_cut: offset {offset_nm} nm is not on a grid line, snapped to {nearest} nm"
        );
    }
    let raw: Vec<f64> = match axis {
        CutAxis::X => (0..map.nx()).map(|ix| map.value(ix, idx)).collect(),
        CutAxis::Y => (0..map.ny()).map(|iy| map.value(idx, iy)).collect(),
    };
    let max_abs = raw.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(max_abs > 0.0) {
        return Err(Error::Numerical("profile cut is identically zero".into()));
    }
    Ok(ProfileCut {
        positions_nm: positions.to_vec(),
        values: raw.iter().map(|v| v / max_abs).collect(),
        offset_nm: nearest,
        snapped,
    })
}

/// Map CSV: "# x_nm: ..." and "# y_nm: ..." headers, then one row per y
/// (x across), 15 significant digits.
pub fn map_csv_string(map: &CurrentMap2D, extra_header_lines: &[String]) -> String {
    let mut out = String::new();
    for line in extra_header_lines {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    out.push_str(&format!("# bias_V: {:.14e}\n", map.bias_v));
    out.push_str(&format!("# tip_height_nm: {:.14e}\n", map.tip_height_nm));
    out.push_str(&format!("# channels: {}\n", map.channel_labels.join(";")));
    out.push_str(&format!("# normalization: {}\n", map.normalization.as_str()));
    let fmt_axis =
        |axis: &[f64]| axis.iter().map(|v| format!("{v:.14e}")).collect::<Vec<_>>().join(",");
    out.push_str(&format!("# x_nm: {}\n", fmt_axis(&map.x_nm)));
    out.push_str(&format!("# y_nm: {}\n", fmt_axis(&map.y_nm)));
    for iy in 0..map.ny() {
        let row: Vec<String> =
            (0..map.nx()).map(|ix| format!("{:.14e}", map.value(ix, iy))).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_map_csv(
    path: impl AsRef<std::path::Path>,
    map: &CurrentMap2D,
    extra_header_lines: &[String],
) -> Result<()> {
    std::fs::write(path, map_csv_string(map, extra_header_lines))?;
    Ok(())
}

/// Read back a map CSV produced by [`map_csv_string`].
pub fn read_map_csv(path: impl AsRef<std::path::Path>) -> Result<CurrentMap2D> {
    let text = std::fs::read_to_string(path)?;
    parse_map_csv(&text)
}

pub fn parse_map_csv(text: &str) -> Result<CurrentMap2D> {
    let mut x_nm = None;
    let mut y_nm = None;
    let mut bias_v = 0.0;
    let mut tip_height_nm = 0.0;
    let mut channels = Vec::new();
    let mut normalization = Normalization::Raw;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let parse_axis = |s: &str| -> Result<Vec<f64>> {
        s.split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("bad axis entry '{t}' in map CSV")))
            })
            .collect()
    };
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(v) = rest.strip_prefix("x_nm:") {
                x_nm = Some(parse_axis(v)?);
            } else if let Some(v) = rest.strip_prefix("y_nm:") {
                y_nm = Some(parse_axis(v)?);
            } else if let Some(v) = rest.strip_prefix("bias_V:") {
                bias_v = v.trim().parse().unwrap_or(0.0);
            } else if let Some(v) = rest.strip_prefix("tip_height_nm:") {
                tip_height_nm = v.trim().parse().unwrap_or(0.0);
            } else if let Some(v) = rest.strip_prefix("channels:") {
                channels = v.trim().split(';').map(str::to_string).collect();
            } else if let Some(v) = rest.strip_prefix("normalization:") {
                normalization = match v.trim() {
                    "linear" => Normalization::Linear,
                    "log10" => Normalization::Log10,
                    _ => Normalization::Raw,
                };
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        rows.push(parse_axis(line)?);
    }
    let x_nm = x_nm.ok_or_else(|| Error::Config("map CSV is missing the x_nm header".into()))?;
    let y_nm = y_nm.ok_or_else(|| Error::Config("map CSV is missing the y_nm header".into()))?;
    if rows.len() != y_nm.len() || rows.iter().any(|r| r.len() != x_nm.len()) {
        return Err(Error::Config(format!(
            "map CSV row shape mismatch: {} rows of {:?} columns for {} x {} axes",
            rows.len(),
            rows.iter().map(|r| r.len()).collect::<Vec<_>>(),
            x_nm.len(),
            y_nm.len()
        )));
    }
    CurrentMap2D::new(
        x_nm,
        y_nm,
        rows.into_iter().flatten().collect(),
        bias_v,
        channels,
        tip_height_nm,
        normalization,
    )
}

/// 8-bit ASCII PGM (P2) quick-look of a normalized map. Rows run from the
/// top (largest y) down, image-style.
pub fn map_pgm_string(map: &CurrentMap2D) -> Result<String> {
    let (lo, hi) = match map.normalization {
        Normalization::Linear => (0.0, 1.0),
        Normalization::Log10 => {
            let lo = map.values.iter().copied().fold(f64::MAX, f64::min);
            (lo.min(-1e-12), 0.0)
        }
        Normalization::Raw => {
            return Err(Error::Config("PGM output needs a normalized map (linear or log10)".into()))
        }
    };
    let mut out = format!("P2\n# scale: [{lo:.6e}, {hi:.6e}]\n{} {}\n255\n", map.nx(), map.ny());
    for iy in (0..map.ny()).rev() {
        let row: Vec<String> = (0..map.nx())
            .map(|ix| {
                let v = ((map.value(ix, iy) - lo) / (hi - lo)).clamp(0.0, 1.0);
                format!("{}", (v * 255.0).round() as u8)
            })
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    Ok(out)
}

pub fn write_map_pgm(path: impl AsRef<std::path::Path>, map: &CurrentMap2D) -> Result<()> {
    std::fs::write(path, map_pgm_string(map)?)?;
    Ok(())
}
