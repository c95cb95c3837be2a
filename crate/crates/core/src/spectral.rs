//! Discrete Fourier transforms scaled to the continuum convention
//! `rho(q) = (2*pi)^(-3/2) * integral rho(r) exp(+i q.r) d3r`, with
//! coordinates measured from the grid origin.
//!
//! Amplitudes are stored in FFT index order (z fastest); `wavevector` maps
//! indices to signed frequencies. Axis sizes must factor into {2, 3, 5, 7}.

use rustfft::num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarGrid3D};
use crate::numeric::is_smooth;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Complex amplitudes on the reciprocal grid of a [`ScalarGrid3D`].
#[derive(Debug, Clone)]
pub struct SpectralField {
    real_spec: GridSpec,
    amplitudes: Vec<Complex64>,
    dq_nm: [f64; 3],
}

impl SpectralField {
    /// Spec of the real-space grid this field was transformed from.
    pub fn real_spec(&self) -> &GridSpec {
        &self.real_spec
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Reciprocal-grid spacing (nm^-1) per axis.
    pub fn wavevector_spacing(&self) -> [f64; 3] {
        self.dq_nm
    }

    #[inline]
    pub fn amplitude(&self, ix: usize, iy: usize, iz: usize) -> Complex64 {
        self.amplitudes[self.real_spec.index(ix, iy, iz)]
    }

    /// Signed wavevector (nm^-1) of the amplitude at FFT index (ix, iy, iz).
    pub fn wavevector(&self, ix: usize, iy: usize, iz: usize) -> [f64; 3] {
        let dims = self.real_spec.dims();
        let idx = [ix, iy, iz];
        let mut q = [0.0; 3];
        for a in 0..3 {
            let n = dims[a];
            let signed = if idx[a] <= n / 2 {
                idx[a] as f64
            } else {
                idx[a] as f64 - n as f64
            };
            q[a] = signed * self.dq_nm[a];
        }
        q
    }

    /// Index holding the amplitude at -q for the amplitude at index i.
    #[inline]
    pub fn conjugate_index(i: usize, n: usize) -> usize {
        (n - i) % n
    }
}

/// Forward transform. Fails if any axis size is outside the transform size
/// policy (products of 2, 3, 5, 7).
pub fn fourier_transform(grid: &ScalarGrid3D) -> Result<SpectralField> {
    let spec = grid.spec().clone();
    let dims = spec.dims();
    for (a, &n) in dims.iter().enumerate() {
        if !is_smooth(n) {
            return Err(Error::Config(format!(
                "axis {a} has {n} points; transform sizes must factor into 2, 3, 5, 7 \
                 (rasterize pads grids to such sizes)"
            )));
        }
    }
    let mut buf: Vec<Complex64> = grid.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    // e^{+i q.r} convention
    fft3(&mut buf, dims, FftDirection::Inverse);
    let scale = spec.cell_volume_nm3() * TWO_PI.powf(-1.5);
    for v in &mut buf {
        *v *= scale;
    }
    let dq_nm = [
        TWO_PI / (dims[0] as f64 * spec.spacing_nm()[0]),
        TWO_PI / (dims[1] as f64 * spec.spacing_nm()[1]),
        TWO_PI / (dims[2] as f64 * spec.spacing_nm()[2]),
    ];
    Ok(SpectralField { real_spec: spec, amplitudes: buf, dq_nm })
}

/// Inverse transform back to a real grid. The imaginary residue of the
/// round trip is discarded (it is at rounding level for fields obtained
/// from [`fourier_transform`] of a real grid).
pub fn inverse_fourier(field: &SpectralField) -> Result<ScalarGrid3D> {
    let spec = field.real_spec.clone();
    let dims = spec.dims();
    let n_total = spec.len() as f64;
    let scale = 1.0 / (spec.cell_volume_nm3() * TWO_PI.powf(-1.5));
    let mut buf: Vec<Complex64> = field.amplitudes.iter().map(|&v| v * scale).collect();
    fft3(&mut buf, dims, FftDirection::Forward);
    let values: Vec<f64> = buf.iter().map(|v| v.re / n_total).collect();
    ScalarGrid3D::new(spec, values)
}

/// In-place 3D FFT over a z-fastest buffer. Unnormalized, like the 1D
/// transforms it is built from.
pub(crate) fn fft3(data: &mut [Complex64], dims: [usize; 3], direction: FftDirection) {
    assert_eq!(data.len(), dims[0] * dims[1] * dims[2]);
    let mut planner = FftPlanner::<f64>::new();

    // z lines are contiguous: one batched pass
    let fz = planner.plan_fft(dims[2], direction);
    let mut scratch = vec![Complex64::default(); fz.get_inplace_scratch_len()];
    fz.process_with_scratch(data, &mut scratch);

    let fy = planner.plan_fft(dims[1], direction);
    scratch.resize(fy.get_inplace_scratch_len().max(scratch.len()), Complex64::default());
    let mut line = vec![Complex64::default(); dims[1]];
    for ix in 0..dims[0] {
        for iz in 0..dims[2] {
            for iy in 0..dims[1] {
                line[iy] = data[(ix * dims[1] + iy) * dims[2] + iz];
            }
            fy.process_with_scratch(&mut line, &mut scratch);
            for iy in 0..dims[1] {
                data[(ix * dims[1] + iy) * dims[2] + iz] = line[iy];
            }
        }
    }

    let fx = planner.plan_fft(dims[0], direction);
    scratch.resize(fx.get_inplace_scratch_len().max(scratch.len()), Complex64::default());
    let mut line = vec![Complex64::default(); dims[0]];
    let plane = dims[1] * dims[2];
    for iy in 0..dims[1] {
        for iz in 0..dims[2] {
            for ix in 0..dims[0] {
                line[ix] = data[ix * plane + iy * dims[2] + iz];
            }
            fx.process_with_scratch(&mut line, &mut scratch);
            for ix in 0..dims[0] {
                data[ix * plane + iy * dims[2] + iz] = line[ix];
            }
        }
    }
}
