//! Uniform 3D scalar grids, the carrier for densities and potentials.
//!
//! Geometry is in nm. Values are stored z-fastest (`index = (ix*ny + iy)*nz + iz`),
//! matching the cube-file value stream. Grids are immutable once built and can
//! be shared freely across threads.

use crate::error::{Error, Result};
use crate::numeric::{next_smooth, CompensatedSum};

/// Origin, spacing and point counts of a uniform axis-aligned grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    origin_nm: [f64; 3],
    spacing_nm: [f64; 3],
    dims: [usize; 3],
}

impl GridSpec {
    pub fn new(origin_nm: [f64; 3], spacing_nm: [f64; 3], dims: [usize; 3]) -> Result<Self> {
        for a in 0..3 {
            if !origin_nm[a].is_finite() || !spacing_nm[a].is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "grid origin/spacing must be finite, got origin {:?} spacing {:?}",
                    origin_nm, spacing_nm
                )));
            }
            if spacing_nm[a] <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "grid spacing must be positive on every axis, got {:?}",
                    spacing_nm
                )));
            }
            if dims[a] < 2 {
                return Err(Error::InvalidParameter(format!(
                    "grid needs at least 2 points per axis, got {:?}",
                    dims
                )));
            }
        }
        Ok(Self { origin_nm, spacing_nm, dims })
    }

    /// Symmetric grid: node set invariant under x -> -x and y -> -y, with
    /// `half_extent` covered on both sides of 0 and a node exactly at z = 0.
    ///
    /// The z axis runs from `z_bottom` (snapped down onto the lattice through
    /// z = 0) up to at least `z_top`.
    pub fn centered(
        half_extent_nm: f64,
        spacing_nm: f64,
        z_bottom_nm: f64,
        z_top_nm: f64,
    ) -> Result<Self> {
        if !(half_extent_nm > 0.0) || !(spacing_nm > 0.0) || !(z_top_nm > z_bottom_nm) {
            return Err(Error::InvalidParameter(format!(
                "centered grid needs half_extent > 0, spacing > 0, z_top > z_bottom \
                 (got {half_extent_nm}, {spacing_nm}, [{z_bottom_nm}, {z_top_nm}])"
            )));
        }
        let nxy = ((2.0 * half_extent_nm / spacing_nm).ceil() as usize + 1).max(2);
        let nxy = next_smooth(nxy);
        let off = (nxy - 1) as f64 / 2.0 * spacing_nm;
        let kb = (-z_bottom_nm / spacing_nm).ceil().max(1.0) as i64;
        let kt = (z_top_nm / spacing_nm).ceil().max(1.0) as i64;
        let nz = (kb + kt + 1) as usize;
        Self::new(
            [-off, -off, -(kb as f64) * spacing_nm],
            [spacing_nm; 3],
            [nxy, nxy, nz],
        )
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn origin_nm(&self) -> [f64; 3] {
        self.origin_nm
    }

    pub fn spacing_nm(&self) -> [f64; 3] {
        self.spacing_nm
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        debug_assert!(ix < self.dims[0] && iy < self.dims[1] && iz < self.dims[2]);
        (ix * self.dims[1] + iy) * self.dims[2] + iz
    }

    #[inline]
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        self.origin_nm[axis] + self.spacing_nm[axis] * i as f64
    }

    #[inline]
    pub fn point(&self, ix: usize, iy: usize, iz: usize) -> [f64; 3] {
        [self.coord(0, ix), self.coord(1, iy), self.coord(2, iz)]
    }

    pub fn cell_volume_nm3(&self) -> f64 {
        self.spacing_nm[0] * self.spacing_nm[1] * self.spacing_nm[2]
    }

    /// Same spec with dims rounded up to transform-friendly sizes
    /// (products of 2, 3, 5, 7); the origin is kept, new cells extend the
    /// high-index edge.
    pub fn with_smooth_dims(&self) -> Self {
        let mut s = self.clone();
        for a in 0..3 {
            s.dims[a] = next_smooth(s.dims[a]);
        }
        s
    }

    /// Integer index of `other`'s origin on this grid's lattice, if the two
    /// grids share spacing and lattice alignment.
    pub fn lattice_offset(&self, other: &GridSpec) -> Option<[i64; 3]> {
        let mut off = [0i64; 3];
        for a in 0..3 {
            let rel = self.spacing_nm[a].abs().max(1e-300);
            if (self.spacing_nm[a] - other.spacing_nm[a]).abs() > 1e-12 * rel {
                return None;
            }
            let shift = (other.origin_nm[a] - self.origin_nm[a]) / self.spacing_nm[a];
            let k = shift.round();
            if (shift - k).abs() > 1e-9 {
                return None;
            }
            off[a] = k as i64;
        }
        Some(off)
    }

    /// True if every node of `other` is a node of `self`.
    pub fn contains(&self, other: &GridSpec) -> bool {
        match self.lattice_offset(other) {
            None => false,
            Some(off) => (0..3).all(|a| {
                off[a] >= 0 && off[a] as usize + other.dims[a] <= self.dims[a]
            }),
        }
    }

    /// Index of the grid plane nearest `z = z_nm`, with the residual misalignment.
    pub fn nearest_z_plane(&self, z_nm: f64) -> (i64, f64) {
        let k = ((z_nm - self.origin_nm[2]) / self.spacing_nm[2]).round();
        let residual = z_nm - (self.origin_nm[2] + k * self.spacing_nm[2]);
        (k as i64, residual)
    }
}

/// Real scalar field on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarGrid3D {
    spec: GridSpec,
    values: Vec<f64>,
}

impl ScalarGrid3D {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::InvalidParameter(format!(
                "value count {} does not match grid dims {:?} (need {})",
                values.len(),
                spec.dims(),
                spec.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "grid values must be finite, found {v}"
            )));
        }
        Ok(Self { spec, values })
    }

    pub fn zeros(spec: GridSpec) -> Self {
        let n = spec.len();
        Self { spec, values: vec![0.0; n] }
    }

    /// Build by evaluating `f` at every node (x-outer, z-innermost order).
    pub fn from_fn(spec: GridSpec, mut f: impl FnMut(f64, f64, f64) -> f64) -> Result<Self> {
        let [nx, ny, nz] = spec.dims();
        let mut values = Vec::with_capacity(spec.len());
        for ix in 0..nx {
            let x = spec.coord(0, ix);
            for iy in 0..ny {
                let y = spec.coord(1, iy);
                for iz in 0..nz {
                    values.push(f(x, y, spec.coord(2, iz)));
                }
            }
        }
        Self::new(spec, values)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, ix: usize, iy: usize, iz: usize) -> f64 {
        self.values[self.spec.index(ix, iy, iz)]
    }

    /// Integral of the field (sum times cell volume), compensated.
    pub fn total(&self) -> f64 {
        let mut acc = CompensatedSum::new();
        for &v in &self.values {
            acc.add(v);
        }
        acc.value() * self.spec.cell_volume_nm3()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// First moments of the field: (integral of r * value, per axis).
    pub fn first_moment(&self) -> [f64; 3] {
        let [nx, ny, nz] = self.spec.dims();
        let mut acc = [CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new()];
        for ix in 0..nx {
            let x = self.spec.coord(0, ix);
            for iy in 0..ny {
                let y = self.spec.coord(1, iy);
                for iz in 0..nz {
                    let v = self.values[self.spec.index(ix, iy, iz)];
                    acc[0].add(x * v);
                    acc[1].add(y * v);
                    acc[2].add(self.spec.coord(2, iz) * v);
                }
            }
        }
        let dv = self.spec.cell_volume_nm3();
        [acc[0].value() * dv, acc[1].value() * dv, acc[2].value() * dv]
    }

    /// Copy of this field embedded into `target` (which must contain this
    /// grid's nodes); cells outside the source stay zero.
    pub fn embedded_into(&self, target: &GridSpec) -> Result<ScalarGrid3D> {
        let off = target.lattice_offset(self.spec()).ok_or_else(|| {
            Error::Config(format!(
                "grids are not commensurate: target spacing {:?} origin {:?} vs source spacing {:?} origin {:?}",
                target.spacing_nm(),
                target.origin_nm(),
                self.spec.spacing_nm(),
                self.spec.origin_nm()
            ))
        })?;
        if !target.contains(self.spec()) {
            return Err(Error::Config(format!(
                "target grid {:?} does not cover source grid {:?} (offset {:?})",
                target.dims(),
                self.spec.dims(),
                off
            )));
        }
        let mut out = vec![0.0; target.len()];
        let [nx, ny, nz] = self.spec.dims();
        for ix in 0..nx {
            for iy in 0..ny {
                for iz in 0..nz {
                    let t = target.index(
                        ix + off[0] as usize,
                        iy + off[1] as usize,
                        iz + off[2] as usize,
                    );
                    out[t] = self.values[self.spec.index(ix, iy, iz)];
                }
            }
        }
        ScalarGrid3D::new(target.clone(), out)
    }
}
