//! Molecular transition densities.
//!
//! Two forms are supported: the analytic planar two-lobe Gaussian model
//! (confined to z = 0, carried as a surface density with the delta factor
//! implicit) and gridded densities ingested from cube files. Gridded
//! densities of a proper transition are charge-neutral; the constructors
//! enforce that within a configurable tolerance.

pub mod cube;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarGrid3D};
use crate::units::e_nm_to_au;

/// Default neutrality tolerance: |total charge| <= tol * max|rho| * dV * point count.
pub const DEFAULT_NEUTRALITY_TOL: f64 = 1e-6;

/// Widths of the planar Gaussian model density (nm). The x profile is a
/// difference of two normalized Gaussians, so the total charge vanishes
/// identically and the density changes sign along x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianDensityParams {
    sigma_nm: f64,
    sigma1_nm: f64,
    sigma2_nm: f64,
}

impl GaussianDensityParams {
    pub fn new(sigma_nm: f64, sigma1_nm: f64, sigma2_nm: f64) -> Result<Self> {
        for (name, v) in [("sigma", sigma_nm), ("sigma1", sigma1_nm), ("sigma2", sigma2_nm)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be strictly positive, got {v}"
                )));
            }
        }
        if sigma1_nm == sigma2_nm {
            return Err(Error::InvalidParameter(
                "sigma1 must differ from sigma2 (equal widths give an identically zero density)"
                    .into(),
            ));
        }
        Ok(Self { sigma_nm, sigma1_nm, sigma2_nm })
    }

    pub fn sigma_nm(&self) -> f64 {
        self.sigma_nm
    }

    pub fn sigma1_nm(&self) -> f64 {
        self.sigma1_nm
    }

    pub fn sigma2_nm(&self) -> f64 {
        self.sigma2_nm
    }

    /// Surface density (nm^-2) of the in-plane factor at (x, y).
    #[inline]
    pub fn eval_plane(&self, x_nm: f64, y_nm: f64) -> f64 {
        let s = self.sigma_nm;
        let s1 = self.sigma1_nm;
        let s2 = self.sigma2_nm;
        1.0 / (2.0 * std::f64::consts::PI * s)
            * ((-x_nm * x_nm / (2.0 * s1 * s1)).exp() / s1
                - (-x_nm * x_nm / (2.0 * s2 * s2)).exp() / s2)
            * (-y_nm * y_nm / (2.0 * s * s)).exp()
    }

    /// Positive x where the in-plane factor changes sign along y = 0.
    pub fn zero_crossing_x_nm(&self) -> f64 {
        let (s1, s2) = (self.sigma1_nm, self.sigma2_nm);
        (2.0 * (s2 / s1).ln() * s1 * s1 * s2 * s2 / (s2 * s2 - s1 * s1)).sqrt()
    }
}

impl Default for GaussianDensityParams {
    /// Widths 2*sigma1 = sigma2 = sigma = 1 nm.
    fn default() -> Self {
        Self { sigma_nm: 1.0, sigma1_nm: 0.5, sigma2_nm: 1.0 }
    }
}

/// Surface density (nm^-2) at `point` in the molecular frame. The delta
/// factor confining the density to z = 0 is carried separately: the returned
/// value is the z = 0 surface density regardless of `point[2]`.
pub fn eval_gaussian_density(params: &GaussianDensityParams, point: [f64; 3]) -> Result<f64> {
    if point.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "evaluation point must be finite, got {point:?}"
        )));
    }
    Ok(params.eval_plane(point[0], point[1]))
}

#[derive(Debug, Clone)]
pub enum DensityForm {
    Gaussian(GaussianDensityParams),
    Gridded(ScalarGrid3D),
}

/// One molecular transition: its density (analytic or gridded, values in
/// charge per nm^3 for gridded form) and the transition energy gap.
#[derive(Debug, Clone)]
pub struct TransitionDensity {
    form: DensityForm,
    energy_gap_ev: f64,
    label: String,
}

impl TransitionDensity {
    pub fn gaussian(
        params: GaussianDensityParams,
        energy_gap_ev: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        check_gap(energy_gap_ev)?;
        Ok(Self { form: DensityForm::Gaussian(params), energy_gap_ev, label: label.into() })
    }

    pub fn gridded(
        grid: ScalarGrid3D,
        energy_gap_ev: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        Self::gridded_with_tolerance(grid, energy_gap_ev, label, DEFAULT_NEUTRALITY_TOL)
    }

    pub fn gridded_with_tolerance(
        grid: ScalarGrid3D,
        energy_gap_ev: f64,
        label: impl Into<String>,
        neutrality_tol: f64,
    ) -> Result<Self> {
        check_gap(energy_gap_ev)?;
        let ratio = neutrality_ratio(&grid);
        if ratio > neutrality_tol {
            return Err(Error::InvalidParameter(format!(
                "gridded transition density is not charge-neutral: \
                 |Q|/(max|rho|*dV*N) = {ratio:.3e} exceeds tolerance {neutrality_tol:.3e}"
            )));
        }
        Ok(Self { form: DensityForm::Gridded(grid), energy_gap_ev, label: label.into() })
    }

    /// Load a cube file (geometry converted bohr -> nm, values kept as stored)
    /// as a gridded transition density.
    pub fn from_cube(
        path: impl AsRef<std::path::Path>,
        energy_gap_ev: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        let file = cube::read_cube(path)?;
        Self::gridded(file.grid, energy_gap_ev, label)
    }

    pub fn form(&self) -> &DensityForm {
        &self.form
    }

    pub fn energy_gap_ev(&self) -> f64 {
        self.energy_gap_ev
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

fn check_gap(energy_gap_ev: f64) -> Result<()> {
    if !(energy_gap_ev > 0.0) || !energy_gap_ev.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "transition energy gap must be positive, got {energy_gap_ev} eV"
        )));
    }
    Ok(())
}

/// |total charge| normalized by max|rho| * cell volume * point count;
/// neutral densities stay below the configured tolerance.
pub fn neutrality_ratio(grid: &ScalarGrid3D) -> f64 {
    let scale = grid.max_abs() * grid.spec().cell_volume_nm3() * grid.values().len() as f64;
    if scale == 0.0 {
        return 0.0;
    }
    grid.total().abs() / scale
}

/// Sample a transition density onto `spec`. Dims are padded up to
/// transform-friendly sizes (products of 2, 3, 5, 7) with zero cells on the
/// high-index edges. The planar Gaussian form is deposited on the single grid
/// plane coinciding with z = 0, weighted 1/dz; a spec whose z planes miss
/// z = 0 by more than half a spacing is rejected.
pub fn rasterize(density: &TransitionDensity, spec: &GridSpec) -> Result<ScalarGrid3D> {
    sample_onto(density, &spec.with_smooth_dims())
}

/// `rasterize` without the size-policy padding: samples on exactly `spec`.
/// The coupling pipeline uses this so transition and pair grids stay
/// commensurate; its own Fourier work is padded internally.
pub(crate) fn sample_onto(density: &TransitionDensity, spec: &GridSpec) -> Result<ScalarGrid3D> {
    match density.form() {
        DensityForm::Gridded(grid) => grid.embedded_into(spec),
        DensityForm::Gaussian(params) => {
            let dz = spec.spacing_nm()[2];
            let (k0, residual) = spec.nearest_z_plane(0.0);
            if k0 < 0 || k0 as usize >= spec.dims()[2] || residual.abs() > 0.5 * dz * (1.0 + 1e-12) {
                return Err(Error::Config(format!(
                    "no grid plane coincides with the z = 0 molecular plane \
                     (nearest plane index {k0}, residual {residual:.3e} nm, dz {dz} nm)"
                )));
            }
            let k0 = k0 as usize;
            let [nx, ny, nz] = spec.dims();
            let mut values = vec![0.0; spec.len()];
            for ix in 0..nx {
                let x = spec.coord(0, ix);
                for iy in 0..ny {
                    let v = params.eval_plane(x, spec.coord(1, iy)) / dz;
                    values[(ix * ny + iy) * nz + k0] = v;
                }
            }
            ScalarGrid3D::new(spec.clone(), values)
        }
    }
}

/// Transition dipole vector in e*nm, with an atomic-units view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dipole {
    pub e_nm: [f64; 3],
}

impl Dipole {
    pub fn atomic_units(&self) -> [f64; 3] {
        [e_nm_to_au(self.e_nm[0]), e_nm_to_au(self.e_nm[1]), e_nm_to_au(self.e_nm[2])]
    }

    pub fn norm_e_nm(&self) -> f64 {
        self.e_nm.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// First moment of a gridded field, as a dipole (midpoint quadrature).
pub fn grid_dipole(grid: &ScalarGrid3D) -> Dipole {
    Dipole { e_nm: grid.first_moment() }
}

/// Transition dipole: exact zero for the planar Gaussian form (odd moments of
/// even/odd factors vanish), midpoint quadrature for gridded densities.
pub fn transition_dipole(density: &TransitionDensity) -> Dipole {
    match density.form() {
        DensityForm::Gaussian(_) => Dipole { e_nm: [0.0; 3] },
        DensityForm::Gridded(grid) => grid_dipole(grid),
    }
}

/// Total charge: exact zero for the analytic form (the two x Gaussians carry
/// equal weight), quadrature sum for gridded densities.
pub fn total_charge(density: &TransitionDensity) -> f64 {
    match density.form() {
        DensityForm::Gaussian(_) => 0.0,
        DensityForm::Gridded(grid) => grid.total(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::BOHR_NM;
    use approx::assert_relative_eq;

    fn default_density() -> TransitionDensity {
        TransitionDensity::gaussian(GaussianDensityParams::default(), 2.0, "dark").unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(GaussianDensityParams::new(1.0, 0.5, 1.0).is_ok());
        assert!(GaussianDensityParams::new(-1.0, 0.5, 1.0).is_err());
        assert!(GaussianDensityParams::new(1.0, 0.7, 0.7).is_err());
        assert!(GaussianDensityParams::new(1.0, f64::NAN, 0.7).is_err());
    }

    #[test]
    fn eval_at_origin_is_one_over_two_pi() {
        let p = GaussianDensityParams::default();
        let v = eval_gaussian_density(&p, [0.0, 0.0, 0.0]).unwrap();
        assert_relative_eq!(v, 1.0 / (2.0 * std::f64::consts::PI), max_relative = 1e-15);
    }

    #[test]
    fn eval_decays_to_zero() {
        let p = GaussianDensityParams::default();
        assert!(eval_gaussian_density(&p, [40.0, 0.0, 0.0]).unwrap().abs() < 1e-200);
        assert!(eval_gaussian_density(&p, [0.0, 40.0, 0.0]).unwrap().abs() < 1e-200);
    }

    #[test]
    fn eval_rejects_non_finite_point() {
        let p = GaussianDensityParams::default();
        assert!(eval_gaussian_density(&p, [f64::NAN, 0.0, 0.0]).is_err());
        assert!(eval_gaussian_density(&p, [0.0, f64::INFINITY, 0.0]).is_err());
    }

    #[test]
    fn zero_crossing_matches_bisection() {
        let p = GaussianDensityParams::default();
        // bisect eval(x, 0) between 0.5 and 0.9
        let (mut lo, mut hi) = (0.5, 0.9);
        assert!(p.eval_plane(lo, 0.0) > 0.0 && p.eval_plane(hi, 0.0) < 0.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if p.eval_plane(mid, 0.0) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let x_bis = 0.5 * (lo + hi);
        assert_relative_eq!(p.zero_crossing_x_nm(), x_bis, epsilon = 1e-10);
        assert_relative_eq!(p.zero_crossing_x_nm(), 0.680, epsilon = 5e-4);
    }

    #[test]
    fn rasterize_matches_pointwise_samples() {
        let d = default_density();
        let spec = GridSpec::centered(1.6, 0.1, -0.3, 0.5).unwrap();
        let grid = rasterize(&d, &spec).unwrap();
        let (k0, _) = grid.spec().nearest_z_plane(0.0);
        let p = GaussianDensityParams::default();
        let [nx, ny, nz] = grid.spec().dims();
        for ix in (0..nx).step_by(5) {
            for iy in (0..ny).step_by(5) {
                for iz in 0..nz {
                    let want = if iz == k0 as usize {
                        p.eval_plane(grid.spec().coord(0, ix), grid.spec().coord(1, iy)) / 0.1
                    } else {
                        0.0
                    };
                    assert_relative_eq!(grid.get(ix, iy, iz), want, max_relative = 1e-14);
                }
            }
        }
    }

    #[test]
    fn rasterize_rejects_misaligned_plane() {
        let d = default_density();
        // z nodes at 0.05 + 0.1k never hit 0 exactly
        let spec = GridSpec::new([-1.0, -1.0, 0.05], [0.1; 3], [21, 21, 6]).unwrap();
        // nearest plane is 0.05 away = dz/2, allowed; push further:
        let spec_bad = GridSpec::new([-1.0, -1.0, 0.2], [0.1; 3], [21, 21, 6]).unwrap();
        assert!(rasterize(&d, &spec).is_ok());
        assert!(rasterize(&d, &spec_bad).is_err());
    }

    #[test]
    fn rasterized_charge_is_neutral() {
        let d = default_density();
        let spec = GridSpec::centered(4.45, 0.1, -0.3, 1.0).unwrap();
        let grid = rasterize(&d, &spec).unwrap();
        assert!(neutrality_ratio(&grid) < 1e-6, "ratio {}", neutrality_ratio(&grid));
        assert_eq!(total_charge(&d), 0.0);
    }

    #[test]
    fn rasterize_pads_to_smooth_dims() {
        let d = default_density();
        let spec = GridSpec::new([-2.0, -2.0, -0.2], [0.1; 3], [41, 41, 11]).unwrap();
        let grid = rasterize(&d, &spec).unwrap();
        assert_eq!(grid.spec().dims(), [42, 42, 12]);
    }

    #[test]
    fn dipole_refinement_converges_to_center() {
        // single unit-charge Gaussian blob at r0: dipole -> r0 under refinement
        let r0 = [0.2, -0.1, 0.15];
        let sigma = 0.25;
        let blob = |x: f64, y: f64, z: f64| {
            let q = (x - r0[0]).powi(2) + (y - r0[1]).powi(2) + (z - r0[2]).powi(2);
            (2.0 * std::f64::consts::PI * sigma * sigma).powf(-1.5) * (-q / (2.0 * sigma * sigma)).exp()
        };
        let mut errs = Vec::new();
        for h in [0.1, 0.05] {
            let n = (3.2 / h) as usize + 1;
            let spec = GridSpec::new([-1.6 + r0[0], -1.6 + r0[1], -1.6 + r0[2]], [h; 3], [n, n, n]).unwrap();
            let g = ScalarGrid3D::from_fn(spec, blob).unwrap();
            let mu = grid_dipole(&g).e_nm;
            let err = (0..3).map(|a| (mu[a] - r0[a]).powi(2)).sum::<f64>().sqrt();
            errs.push(err);
        }
        assert!(errs[0] < 1e-6);
        assert!(errs[1] <= errs[0]);
    }

    #[test]
    fn dipole_of_two_point_deposits_is_one_au() {
        // +-1 charges at (0, 0, +-0.5 bohr) -> dipole (0, 0, 1) a.u.
        let h = BOHR_NM; // 1 bohr cells
        let spec = GridSpec::new([-2.5 * h, -2.5 * h, -2.5 * h], [h; 3], [6, 6, 6]).unwrap();
        let dv = spec.cell_volume_nm3();
        let mut v = vec![0.0; spec.len()];
        v[spec.index(2, 2, 3)] = 1.0 / dv; // z = +0.5 bohr
        v[spec.index(2, 2, 2)] = -1.0 / dv; // z = -0.5 bohr
        let g = ScalarGrid3D::new(spec, v).unwrap();
        let mu = grid_dipole(&g).atomic_units();
        assert_relative_eq!(mu[2], 1.0, max_relative = 1e-12);
        assert!(mu[0].abs() < 1e-12 && mu[1].abs() < 1e-12);
    }

    #[test]
    fn transition_dipole_of_gaussian_is_zero() {
        let d = default_density();
        assert_eq!(transition_dipole(&d).e_nm, [0.0; 3]);
    }

    #[test]
    fn odd_grid_has_zero_charge() {
        let spec = GridSpec::centered(1.5, 0.1, -0.5, 0.5).unwrap();
        let g = ScalarGrid3D::from_fn(spec, |x, y, z| {
            x * (-(x * x + y * y + z * z) / 0.5).exp()
        })
        .unwrap();
        assert!(neutrality_ratio(&g) < 1e-12);
        let d = TransitionDensity::gridded(g, 3.69, "odd").unwrap();
        assert!(total_charge(&d).abs() < 1e-12);
    }

    #[test]
    fn gridded_constructor_rejects_non_neutral() {
        let spec = GridSpec::centered(1.0, 0.1, -0.5, 0.5).unwrap();
        let g = ScalarGrid3D::from_fn(spec, |x, y, z| (-(x * x + y * y + z * z) / 0.1).exp()).unwrap();
        assert!(TransitionDensity::gridded(g.clone(), 2.0, "blob").is_err());
        // generous tolerance lets it through
        assert!(TransitionDensity::gridded_with_tolerance(g, 2.0, "blob", 1.0).is_ok());
    }

    #[test]
    fn gap_must_be_positive() {
        let p = GaussianDensityParams::default();
        assert!(TransitionDensity::gaussian(p, 0.0, "x").is_err());
        assert!(TransitionDensity::gaussian(p, -2.0, "x").is_err());
    }

    #[test]
    fn dipole_is_bilinear_in_scale() {
        let spec = GridSpec::centered(1.0, 0.1, -0.5, 0.5).unwrap();
        let g = ScalarGrid3D::from_fn(spec.clone(), |x, y, z| x * (-(x * x + y * y + z * z)).exp()).unwrap();
        let g3 = ScalarGrid3D::from_fn(spec, |x, y, z| 3.0 * x * (-(x * x + y * y + z * z)).exp()).unwrap();
        let m1 = grid_dipole(&g).e_nm;
        let m3 = grid_dipole(&g3).e_nm;
        for a in 0..3 {
            assert_relative_eq!(m3[a], 3.0 * m1[a], max_relative = 1e-12, epsilon = 1e-15);
        }
    }
}
