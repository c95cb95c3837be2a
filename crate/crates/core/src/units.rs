//! Unit conversions. Interfaces speak nm, eV and volts; Coulomb matrix
//! elements are reported in Hartree (e^2 = 1 in atomic units).

pub const HARTREE_EV: f64 = 27.211386;
pub const BOHR_NM: f64 = 0.052917721;

#[inline]
pub fn ev_to_hartree(e_ev: f64) -> f64 {
    e_ev / HARTREE_EV
}

#[inline]
pub fn hartree_to_ev(e_ha: f64) -> f64 {
    e_ha * HARTREE_EV
}

#[inline]
pub fn nm_to_bohr(x_nm: f64) -> f64 {
    x_nm / BOHR_NM
}

#[inline]
pub fn bohr_to_nm(x_bohr: f64) -> f64 {
    x_bohr * BOHR_NM
}

/// Dipole moment conversion: e·nm -> atomic units (e·bohr).
#[inline]
pub fn e_nm_to_au(mu_e_nm: f64) -> f64 {
    mu_e_nm / BOHR_NM
}
