//! Model electrode states: an s-wave spherically decaying tip state and a
//! laterally uniform evanescent substrate state, plus their product "pair
//! density" for one tunneling channel.
//!
//! Amplitudes are relative (1 on the emitting surface); decay constants come
//! from the state's zero-bias energy measured from vacuum.

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarGrid3D};
use crate::units::{BOHR_NM, HARTREE_EV};

/// Tip sphere, substrate plane, Fermi level and densities of states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElectrodeModel {
    fermi_energy_ev: f64,
    tip_radius_nm: f64,
    tip_height_nm: f64,
    substrate_z_nm: f64,
    dos_tip: f64,
    dos_substrate: f64,
}

impl ElectrodeModel {
    pub fn new(
        fermi_energy_ev: f64,
        tip_radius_nm: f64,
        tip_height_nm: f64,
        substrate_z_nm: f64,
        dos_tip: f64,
        dos_substrate: f64,
    ) -> Result<Self> {
        if !(fermi_energy_ev < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "fermi energy must be negative (bound states), got {fermi_energy_ev} eV"
            )));
        }
        if !(tip_radius_nm > 0.0) || !(tip_height_nm > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tip radius and apex gap must be positive, got R={tip_radius_nm}, d={tip_height_nm}"
            )));
        }
        if !(substrate_z_nm <= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "substrate plane must sit at z <= 0, got {substrate_z_nm}"
            )));
        }
        if !(dos_tip > 0.0) || !(dos_substrate > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "densities of states must be positive, got tip={dos_tip}, substrate={dos_substrate}"
            )));
        }
        let m = Self {
            fermi_energy_ev,
            tip_radius_nm,
            tip_height_nm,
            substrate_z_nm,
            dos_tip,
            dos_substrate,
        };
        if m.as_array().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("electrode parameters must be finite".into()));
        }
        Ok(m)
    }

    fn as_array(&self) -> [f64; 6] {
        [
            self.fermi_energy_ev,
            self.tip_radius_nm,
            self.tip_height_nm,
            self.substrate_z_nm,
            self.dos_tip,
            self.dos_substrate,
        ]
    }

    pub fn fermi_energy_ev(&self) -> f64 {
        self.fermi_energy_ev
    }

    pub fn tip_radius_nm(&self) -> f64 {
        self.tip_radius_nm
    }

    /// Apex-to-molecular-plane gap d.
    pub fn tip_height_nm(&self) -> f64 {
        self.tip_height_nm
    }

    pub fn substrate_z_nm(&self) -> f64 {
        self.substrate_z_nm
    }

    pub fn dos_tip(&self) -> f64 {
        self.dos_tip
    }

    pub fn dos_substrate(&self) -> f64 {
        self.dos_substrate
    }

    /// z of the tip sphere center: apex gap + radius.
    pub fn sphere_center_z_nm(&self) -> f64 {
        self.tip_height_nm + self.tip_radius_nm
    }
}

impl Default for ElectrodeModel {
    /// Silver-like electrodes: mu0 = -4.64 eV, R = 0.5 nm, d = 1 nm,
    /// substrate surface at -0.3 nm, unit densities of states.
    fn default() -> Self {
        Self {
            fermi_energy_ev: -4.64,
            tip_radius_nm: 0.5,
            tip_height_nm: 1.0,
            substrate_z_nm: -0.3,
            dos_tip: 1.0,
            dos_substrate: 1.0,
        }
    }
}

/// Signed bias voltage; the tip state energies shift by e*Vb.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasConfig {
    bias_v: f64,
}

impl BiasConfig {
    pub fn new(bias_v: f64) -> Result<Self> {
        if !bias_v.is_finite() {
            return Err(Error::InvalidParameter(format!("bias must be finite, got {bias_v}")));
        }
        Ok(Self { bias_v })
    }

    pub fn bias_v(&self) -> f64 {
        self.bias_v
    }

    /// Bias-shifted tip eigenenergy (eV): xi + e*Vb.
    pub fn shifted_tip_energy_ev(&self, xi_k_ev: f64) -> f64 {
        xi_k_ev + self.bias_v
    }
}

/// Vacuum decay constant kappa = sqrt(2 m |E|)/hbar in nm^-1, for a bound
/// state at `energy_ev` below vacuum.
pub fn decay_constant(energy_ev: f64) -> Result<f64> {
    if !(energy_ev < 0.0) {
        return Err(Error::Domain(format!(
            "decay constant needs a bound-state energy below vacuum, got {energy_ev} eV"
        )));
    }
    Ok((2.0 * energy_ev.abs() / HARTREE_EV).sqrt() / BOHR_NM)
}

/// s-wave tip state: exp(-kappa (s - R)) * R / s from the sphere surface,
/// s the distance to the sphere center. Points inside the sphere clamp to
/// the surface value 1 (the pair-density builder excludes them instead).
pub fn tip_wavefunction(
    model: &ElectrodeModel,
    state_energy_ev: f64,
    tip_lateral_nm: [f64; 2],
    point_nm: [f64; 3],
) -> Result<f64> {
    let kappa = decay_constant(state_energy_ev)?;
    let r = model.tip_radius_nm;
    let dx = point_nm[0] - tip_lateral_nm[0];
    let dy = point_nm[1] - tip_lateral_nm[1];
    let dz = point_nm[2] - model.sphere_center_z_nm();
    let s = (dx * dx + dy * dy + dz * dz).sqrt();
    if s <= r {
        return Ok(1.0);
    }
    Ok((-kappa * (s - r)).exp() * r / s)
}

/// Laterally uniform evanescent substrate state: exp(-kappa (z - z_s)),
/// 1 on the substrate surface. Below-surface points clamp to 1.
pub fn substrate_wavefunction(
    model: &ElectrodeModel,
    state_energy_ev: f64,
    point_nm: [f64; 3],
) -> Result<f64> {
    let kappa = decay_constant(state_energy_ev)?;
    let dz = point_nm[2] - model.substrate_z_nm;
    if dz <= 0.0 {
        return Ok(1.0);
    }
    Ok((-kappa * dz).exp())
}

/// Product of tip and substrate states for one (E_n, xi_k) channel at one
/// tip position, sampled on a grid. Cells inside the tip sphere are excluded
/// from the support (set to zero) and counted in `clamped_points`, as are
/// below-surface cells evaluated at the clamped substrate value.
#[derive(Debug, Clone)]
pub struct PairDensity {
    pub grid: ScalarGrid3D,
    pub substrate_energy_ev: f64,
    pub tip_energy_ev: f64,
    pub tip_lateral_nm: [f64; 2],
    pub clamped_points: usize,
}

pub fn pair_density(
    model: &ElectrodeModel,
    substrate_energy_ev: f64,
    tip_energy_ev: f64,
    tip_lateral_nm: [f64; 2],
    spec: &GridSpec,
) -> Result<PairDensity> {
    let kappa_t = decay_constant(tip_energy_ev)?;
    let kappa_s = decay_constant(substrate_energy_ev)?;
    let radius = model.tip_radius_nm;
    let center_z = model.sphere_center_z_nm();
    let [nx, ny, nz] = spec.dims();

    // substrate factor depends on z only
    let mut clamped = 0usize;
    let mut sub = vec![0.0f64; nz];
    let mut sub_clamped = vec![false; nz];
    for iz in 0..nz {
        let dz = spec.coord(2, iz) - model.substrate_z_nm;
        if dz <= 0.0 {
            sub[iz] = 1.0;
            sub_clamped[iz] = true;
        } else {
            sub[iz] = (-kappa_s * dz).exp();
        }
    }

    let mut values = vec![0.0f64; spec.len()];
    let mut idx = 0;
    for ix in 0..nx {
        let dx = spec.coord(0, ix) - tip_lateral_nm[0];
        let dx2 = dx * dx;
        for iy in 0..ny {
            let dy = spec.coord(1, iy) - tip_lateral_nm[1];
            let lat2 = dx2 + dy * dy;
            for iz in 0..nz {
                let dz = spec.coord(2, iz) - center_z;
                let s = (lat2 + dz * dz).sqrt();
                if s < radius {
                    clamped += 1;
                } else {
                    values[idx] = (-kappa_t * (s - radius)).exp() * radius / s * sub[iz];
                    if sub_clamped[iz] {
                        clamped += 1;
                    }
                }
                idx += 1;
            }
        }
    }
    Ok(PairDensity {
        grid: ScalarGrid3D::new(spec.clone(), values)?,
        substrate_energy_ev,
        tip_energy_ev,
        tip_lateral_nm,
        clamped_points: clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn decay_constant_reference_value() {
        // mu0 = -4.64 eV: kappa = sqrt(2*4.64/27.211386) bohr^-1 ~ 0.5840 bohr^-1 ~ 11.04 nm^-1
        let k = decay_constant(-4.64).unwrap();
        assert_relative_eq!(k, 11.0356, max_relative = 1e-4);
        assert_relative_eq!(k * BOHR_NM, 0.58398, max_relative = 1e-4);
    }

    #[test]
    fn decay_constant_rejects_unbound() {
        assert!(decay_constant(0.0).is_err());
        assert!(decay_constant(1.3).is_err());
    }

    #[test]
    fn decay_constant_scaling_and_monotonicity() {
        let k1 = decay_constant(-1.0).unwrap();
        let k4 = decay_constant(-4.0).unwrap();
        assert_relative_eq!(k4, 2.0 * k1, max_relative = 1e-14);
        assert!(decay_constant(-2.0).unwrap() > k1);
        // kappa -> 0 as E -> 0-
        assert!(decay_constant(-1e-12).unwrap() < 1e-5);
    }

    #[test]
    fn tip_amplitude_on_surface_and_at_one_decay_length() {
        let m = ElectrodeModel::default();
        let e = -4.64;
        let k = decay_constant(e).unwrap();
        let cz = m.sphere_center_z_nm();
        // on-surface point directly below the center
        let on = tip_wavefunction(&m, e, [0.0, 0.0], [0.0, 0.0, cz - m.tip_radius_nm()]).unwrap();
        assert_relative_eq!(on, 1.0, max_relative = 1e-14);
        let s = m.tip_radius_nm() + 1.0 / k;
        let v = tip_wavefunction(&m, e, [0.0, 0.0], [0.0, 0.0, cz - s]).unwrap();
        assert_relative_eq!(v, (-1.0f64).exp() * m.tip_radius_nm() / s, max_relative = 1e-14);
    }

    #[test]
    fn tip_amplitude_monotone_in_distance_and_clamped_inside() {
        let m = ElectrodeModel::default();
        let cz = m.sphere_center_z_nm();
        let mut last = f64::INFINITY;
        for i in 0..40 {
            let s = m.tip_radius_nm() + 0.05 * (i as f64 + 1.0);
            let v = tip_wavefunction(&m, -4.64, [0.0, 0.0], [0.0, 0.0, cz - s]).unwrap();
            assert!(v < last && v > 0.0 && v <= 1.0);
            last = v;
        }
        let inside = tip_wavefunction(&m, -4.64, [0.0, 0.0], [0.0, 0.0, cz]).unwrap();
        assert_eq!(inside, 1.0);
    }

    #[test]
    fn substrate_amplitude_profile() {
        let m = ElectrodeModel::default();
        let e = -5.0;
        let k = decay_constant(e).unwrap();
        let zs = m.substrate_z_nm();
        assert_relative_eq!(
            substrate_wavefunction(&m, e, [3.0, -2.0, zs]).unwrap(),
            1.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            substrate_wavefunction(&m, e, [0.0, 0.0, zs + 1.0 / k]).unwrap(),
            (-1.0f64).exp(),
            max_relative = 1e-14
        );
        // lateral translation leaves it unchanged
        let a = substrate_wavefunction(&m, e, [0.0, 0.0, 0.4]).unwrap();
        let b = substrate_wavefunction(&m, e, [5.0, -7.0, 0.4]).unwrap();
        assert_eq!(a, b);
        // below the surface clamps
        assert_eq!(substrate_wavefunction(&m, e, [0.0, 0.0, zs - 0.2]).unwrap(), 1.0);
    }

    fn small_spec() -> GridSpec {
        GridSpec::centered(1.0, 0.1, -0.3, 1.0).unwrap()
    }

    #[test]
    fn pair_density_peaks_beneath_apex_on_plane() {
        let m = ElectrodeModel::default();
        let spec = small_spec();
        let tip = [0.35, -0.15];
        let p = pair_density(&m, -5.0, -4.5, tip, &spec).unwrap();
        let (k0, _) = spec.nearest_z_plane(0.0);
        let [nx, ny, _] = spec.dims();
        let mut best = (0usize, 0usize, f64::MIN);
        for ix in 0..nx {
            for iy in 0..ny {
                let v = p.grid.get(ix, iy, k0 as usize);
                if v > best.2 {
                    best = (ix, iy, v);
                }
            }
        }
        // nearest node to the tip position
        let want_ix = (0..nx).min_by(|&a, &b| {
            (spec.coord(0, a) - tip[0]).abs().partial_cmp(&(spec.coord(0, b) - tip[0]).abs()).unwrap()
        });
        let want_iy = (0..ny).min_by(|&a, &b| {
            (spec.coord(1, a) - tip[1]).abs().partial_cmp(&(spec.coord(1, b) - tip[1]).abs()).unwrap()
        });
        assert_eq!(Some(best.0), want_ix);
        assert_eq!(Some(best.1), want_iy);
    }

    #[test]
    fn pair_density_translates_with_tip() {
        let m = ElectrodeModel::default();
        let spec = small_spec();
        let dx = spec.spacing_nm()[0];
        let a = pair_density(&m, -5.0, -4.5, [0.0, 0.0], &spec).unwrap();
        let b = pair_density(&m, -5.0, -4.5, [dx, 0.0], &spec).unwrap();
        let [nx, ny, nz] = spec.dims();
        for ix in 0..nx - 1 {
            for iy in 0..ny {
                for iz in 0..nz {
                    let va = a.grid.get(ix, iy, iz);
                    let vb = b.grid.get(ix + 1, iy, iz);
                    assert!((va - vb).abs() <= 1e-12 * va.abs().max(1e-300));
                }
            }
        }
    }

    #[test]
    fn deeper_tip_gap_lowers_on_plane_values() {
        let near = ElectrodeModel::default();
        let far = ElectrodeModel::new(-4.64, 0.5, 2.0, -0.3, 1.0, 1.0).unwrap();
        let spec = small_spec();
        let (k0, _) = spec.nearest_z_plane(0.0);
        let a = pair_density(&near, -5.0, -4.5, [0.0, 0.0], &spec).unwrap();
        let b = pair_density(&far, -5.0, -4.5, [0.0, 0.0], &spec).unwrap();
        let [nx, ny, _] = spec.dims();
        for ix in 0..nx {
            for iy in 0..ny {
                assert!(b.grid.get(ix, iy, k0 as usize) < a.grid.get(ix, iy, k0 as usize));
            }
        }
    }

    #[test]
    fn pair_density_values_bounded_and_sphere_interior_excluded() {
        let m = ElectrodeModel::default();
        // grid reaching into the sphere (z up to 2 nm)
        let spec = GridSpec::centered(0.6, 0.1, -0.3, 2.0).unwrap();
        let p = pair_density(&m, -5.0, -4.5, [0.0, 0.0], &spec).unwrap();
        assert!(p.clamped_points > 0);
        for &v in p.grid.values() {
            assert!((0.0..=1.0).contains(&v));
        }
        // a node well inside the sphere is zero
        let (kc, _) = spec.nearest_z_plane(m.sphere_center_z_nm());
        let ix0 = spec.dims()[0] / 2;
        assert_eq!(p.grid.get(ix0, ix0, kc as usize), 0.0);
    }

    #[test]
    fn model_validation() {
        assert!(ElectrodeModel::new(4.0, 0.5, 1.0, -0.3, 1.0, 1.0).is_err());
        assert!(ElectrodeModel::new(-4.64, 0.0, 1.0, -0.3, 1.0, 1.0).is_err());
        assert!(ElectrodeModel::new(-4.64, 0.5, 1.0, 0.4, 1.0, 1.0).is_err());
        assert!(ElectrodeModel::new(-4.64, 0.5, 1.0, -0.3, 0.0, 1.0).is_err());
        assert!(BiasConfig::new(f64::NAN).is_err());
        assert_eq!(BiasConfig::new(-2.5).unwrap().shifted_tip_energy_ev(-4.5), -7.0);
    }
}
