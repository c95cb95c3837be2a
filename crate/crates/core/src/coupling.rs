//! Electron-molecule transition matrix elements.
//!
//! The matrix element is the Coulomb-kernel convolution of the molecular
//! transition density with the tip-substrate pair density,
//! `N = e^2 * integral d3q rho_T(q) rho_pair(-q) 4*pi/q^2`, equal to the
//! real-space double integral of `rho_T(r) rho_pair(r') / |r - r'|`.
//!
//! The fast route evaluates the convolution with FFTs on a zero-padded grid
//! (>= 2x per axis) using the lattice free-space Coulomb kernel: the forward
//! transform of min-image-sampled `1/r` with the cell self-energy constant at
//! the origin. On the lattice this represents the same `4*pi/q^2` operator
//! without periodic-image wrap, and it reproduces the direct double sum to
//! rounding level, which is what the dual-route cross-check demands. The
//! independent oracle route, [`matrix_element_direct`], is a brute-force
//! O(N^2) sum over cell pairs.
//!
//! Grids carry nm geometry and charge-per-nm^3 values; matrix elements and
//! potentials come out in Hartree (e^2 = 1 a.u.).

use rustfft::num_complex::Complex64;
use rustfft::FftDirection;

use crate::density::{self, neutrality_ratio, TransitionDensity, DEFAULT_NEUTRALITY_TOL};
use crate::electrodes::PairDensity;
use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarGrid3D};
use crate::numeric::{next_smooth, CompensatedSum};
use crate::spectral::fft3;
use crate::units::BOHR_NM;

/// Mean inverse distance between two coincident uniformly filled unit cubes;
/// the self-interaction kernel of one grid cell is this over the cell scale.
pub const CELL_SELF_ENERGY: f64 = 1.882312644;

/// Default cap on the pair count of the direct double sum.
pub const DIRECT_PAIR_CAP: u128 = 4_000_000_000;

/// One evaluated transition matrix element (Hartree).
#[derive(Debug, Clone)]
pub struct MatrixElement {
    pub value_hartree: f64,
    pub transition_label: String,
    pub substrate_energy_ev: f64,
    pub tip_energy_ev: f64,
    pub tip_lateral_nm: [f64; 2],
}

/// Self-interaction kernel value (Hartree) for a cell of the given spacing.
/// Exact for cubic cells; mildly anisotropic cells use the geometric mean.
fn cell_self_kernel(spacing_nm: [f64; 3]) -> f64 {
    let h = (spacing_nm[0] * spacing_nm[1] * spacing_nm[2]).cbrt();
    CELL_SELF_ENERGY * BOHR_NM / h
}

fn padded_dims(dims: [usize; 3]) -> [usize; 3] {
    [next_smooth(2 * dims[0]), next_smooth(2 * dims[1]), next_smooth(2 * dims[2])]
}

/// Forward spectrum of the free-space Coulomb kernel sampled with the
/// min-image convention on the padded torus. Real by evenness.
fn kernel_spectrum(spacing_nm: [f64; 3], pdims: [usize; 3]) -> Vec<f64> {
    let [px, py, pz] = pdims;
    let mut ker = vec![Complex64::default(); px * py * pz];
    let self_kernel = cell_self_kernel(spacing_nm);
    let signed = |i: usize, n: usize| -> f64 {
        if i <= n / 2 {
            i as f64
        } else {
            i as f64 - n as f64
        }
    };
    let mut idx = 0;
    for ix in 0..px {
        let dx = signed(ix, px) * spacing_nm[0];
        for iy in 0..py {
            let dy = signed(iy, py) * spacing_nm[1];
            let lat2 = dx * dx + dy * dy;
            for iz in 0..pz {
                let dz = signed(iz, pz) * spacing_nm[2];
                let r = (lat2 + dz * dz).sqrt();
                let v = if r == 0.0 { self_kernel } else { BOHR_NM / r };
                ker[idx] = Complex64::new(v, 0.0);
                idx += 1;
            }
        }
    }
    fft3(&mut ker, pdims, FftDirection::Forward);
    // even kernel: spectrum is real
    debug_assert!(
        ker.iter().map(|c| c.im.abs()).fold(0.0, f64::max)
            <= 1e-9 * ker.iter().map(|c| c.re.abs()).fold(0.0, f64::max)
    );
    ker.into_iter().map(|c| c.re).collect()
}

/// Electrostatic potential of `source` on its own grid (Hartree per unit
/// charge), via the padded-FFT convolution. Non-neutral sources are allowed
/// but warned about: the monopole content acquires no periodic images, yet
/// any downstream q = 0 handling then biases absolute values.
pub fn coulomb_potential(source: &ScalarGrid3D) -> Result<ScalarGrid3D> {
    let (grid, _) = coulomb_potential_impl(source)?;
    Ok(grid)
}

pub(crate) fn coulomb_potential_impl(source: &ScalarGrid3D) -> Result<(ScalarGrid3D, f64)> {
    let ratio = neutrality_ratio(source);
    if ratio > DEFAULT_NEUTRALITY_TOL {
        log::warn!(
            "coulomb_potential: source is not charge-neutral \
             (|Q|/(max|rho|*dV*N) = {ratio:.3e}); absolute potentials carry a monopole background"
        );
    }
    let spec = source.spec();
    let dims = spec.dims();
    let pdims = padded_dims(dims);
    let kernel = kernel_spectrum(spec.spacing_nm(), pdims);

    let mut buf = vec![Complex64::default(); pdims[0] * pdims[1] * pdims[2]];
    for ix in 0..dims[0] {
        for iy in 0..dims[1] {
            let src_row = (ix * dims[1] + iy) * dims[2];
            let dst_row = (ix * pdims[1] + iy) * pdims[2];
            for iz in 0..dims[2] {
                buf[dst_row + iz] = Complex64::new(source.values()[src_row + iz], 0.0);
            }
        }
    }
    fft3(&mut buf, pdims, FftDirection::Forward);
    for (v, k) in buf.iter_mut().zip(&kernel) {
        *v *= k;
    }
    fft3(&mut buf, pdims, FftDirection::Inverse);

    let n_total = (pdims[0] * pdims[1] * pdims[2]) as f64;
    let dv = spec.cell_volume_nm3();
    let mut values = Vec::with_capacity(spec.len());
    let mut im_max = 0.0f64;
    for ix in 0..dims[0] {
        for iy in 0..dims[1] {
            let row = (ix * pdims[1] + iy) * pdims[2];
            for iz in 0..dims[2] {
                let c = buf[row + iz];
                im_max = im_max.max(c.im.abs());
                values.push(c.re * dv / n_total);
            }
        }
    }
    let im_residue = im_max * dv / n_total;
    Ok((ScalarGrid3D::new(spec.clone(), values)?, im_residue))
}

/// Cached Coulomb potential of one transition density on a fixed grid; the
/// per-evaluation work against a pair density is a single overlap sum.
#[derive(Debug, Clone)]
pub struct TransitionPotential {
    label: String,
    potential: ScalarGrid3D,
}

impl TransitionPotential {
    pub fn new(density: &TransitionDensity, spec: &GridSpec) -> Result<Self> {
        let rho = density::sample_onto(density, spec)?;
        let potential = coulomb_potential(&rho)?;
        Ok(Self { label: density.label().to_string(), potential })
    }

    pub fn spec(&self) -> &GridSpec {
        self.potential.spec()
    }

    pub fn potential(&self) -> &ScalarGrid3D {
        &self.potential
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// N = integral rho_pair * Phi_T, requiring the pair grid to match the
    /// grid this potential was built on.
    pub fn matrix_element(&self, pair: &PairDensity) -> Result<MatrixElement> {
        let spec = self.potential.spec();
        if pair.grid.spec() != spec {
            return Err(Error::Config(format!(
                "pair grid {:?} (origin {:?}) does not match the transition grid {:?} (origin {:?})",
                pair.grid.spec().dims(),
                pair.grid.spec().origin_nm(),
                spec.dims(),
                spec.origin_nm()
            )));
        }
        let mut acc = CompensatedSum::new();
        for (phi, rho) in self.potential.values().iter().zip(pair.grid.values()) {
            acc.add(phi * rho);
        }
        Ok(MatrixElement {
            value_hartree: acc.value() * spec.cell_volume_nm3(),
            transition_label: self.label.clone(),
            substrate_energy_ev: pair.substrate_energy_ev,
            tip_energy_ev: pair.tip_energy_ev,
            tip_lateral_nm: pair.tip_lateral_nm,
        })
    }
}

/// One-shot spectral-route matrix element: builds the transition potential on
/// the pair grid and overlaps. Prefer [`TransitionPotential`] in loops.
pub fn matrix_element(transition: &TransitionDensity, pair: &PairDensity) -> Result<MatrixElement> {
    TransitionPotential::new(transition, pair.grid.spec())?.matrix_element(pair)
}

/// Brute-force double sum over cell pairs with the exact 1/r kernel
/// (self-cells use the cell self-energy constant). Independent of the FFT
/// route; quadratic cost, refused above `max_pairs`.
pub fn matrix_element_direct(
    transition: &TransitionDensity,
    pair: &PairDensity,
) -> Result<MatrixElement> {
    matrix_element_direct_capped(transition, pair, DIRECT_PAIR_CAP)
}

pub fn matrix_element_direct_capped(
    transition: &TransitionDensity,
    pair: &PairDensity,
    max_pairs: u128,
) -> Result<MatrixElement> {
    let spec = pair.grid.spec();
    let rho_t = density::sample_onto(transition, spec)?;
    let value = direct_double_sum(&rho_t, &pair.grid, max_pairs)?;
    Ok(MatrixElement {
        value_hartree: value,
        transition_label: transition.label().to_string(),
        substrate_energy_ev: pair.substrate_energy_ev,
        tip_energy_ev: pair.tip_energy_ev,
        tip_lateral_nm: pair.tip_lateral_nm,
    })
}

/// Symmetric double sum `sum_{a,b} f(a) g(b) K(|r_a - r_b|) dV^2` in Hartree.
pub(crate) fn direct_double_sum(
    a: &ScalarGrid3D,
    b: &ScalarGrid3D,
    max_pairs: u128,
) -> Result<f64> {
    let spec = a.spec();
    if b.spec() != spec {
        return Err(Error::Config("direct sum needs both fields on the same grid".into()));
    }
    let nonzero = |g: &ScalarGrid3D| -> Vec<(usize, [f64; 3], f64)> {
        let [nx, ny, nz] = g.spec().dims();
        let mut out = Vec::new();
        let mut idx = 0;
        for ix in 0..nx {
            for iy in 0..ny {
                for iz in 0..nz {
                    let v = g.values()[idx];
                    if v != 0.0 {
                        out.push((idx, g.spec().point(ix, iy, iz), v));
                    }
                    idx += 1;
                }
            }
        }
        out
    };
    let src = nonzero(a);
    let dst = nonzero(b);
    let pairs = src.len() as u128 * dst.len() as u128;
    if pairs > max_pairs {
        return Err(Error::Config(format!(
            "direct double sum refused: {} x {} = {pairs} pairs exceeds the cap {max_pairs}",
            src.len(),
            dst.len()
        )));
    }
    let self_kernel = cell_self_kernel(spec.spacing_nm());
    let mut acc = CompensatedSum::new();
    for &(ia, pa, va) in &src {
        let mut inner = CompensatedSum::new();
        for &(ib, pb, vb) in &dst {
            let k = if ia == ib {
                self_kernel
            } else {
                let dx = pa[0] - pb[0];
                let dy = pa[1] - pb[1];
                let dz = pa[2] - pb[2];
                BOHR_NM / (dx * dx + dy * dy + dz * dz).sqrt()
            };
            inner.add(vb * k);
        }
        acc.add(va * inner.value());
    }
    let dv = spec.cell_volume_nm3();
    Ok(acc.value() * dv * dv)
}
