//! Simulation of inelastic-tunneling excitation of molecular transitions
//! under an STM tip.
//!
//! The pipeline: a molecular transition density (analytic planar Gaussian or
//! a cube file), model tip/substrate electrode states, the Coulomb transition
//! matrix element between them, energy-window integration into relative
//! inelastic currents, constant-height 2D current maps, and the three-level
//! pump-probe kinetics that turns a dark-state excitation rate into a photon
//! count rate.
//!
//! Conventions: grid geometry in nm, energies at interfaces in eV, matrix
//! elements in Hartree; currents and maps are relative quantities.

pub mod coupling;
pub mod current;
pub mod density;
pub mod electrodes;
pub mod error;
pub mod grid;
pub mod kinetics;
pub mod numeric;
pub mod scan;
pub mod spectral;
pub mod units;

pub use coupling::{matrix_element, matrix_element_direct, MatrixElement, TransitionPotential};
pub use current::{CurrentEngine, CurrentResult, TransitionChannel};
pub use density::{GaussianDensityParams, TransitionDensity};
pub use electrodes::{BiasConfig, ElectrodeModel, PairDensity};
pub use error::{Error, Result};
pub use grid::{GridSpec, ScalarGrid3D};
pub use kinetics::{Populations, RateModel};
pub use scan::{CurrentMap2D, Normalization};
pub use spectral::SpectralField;

/// Coupling grid for the default analytic-density setup: cubic cells, a node
/// set symmetric under lateral mirroring, one plane exactly at z = 0, z
/// spanning substrate surface to tip apex. The lateral half-extent must cover
/// both the density support and the scan range.
pub fn default_coupling_grid(
    model: &ElectrodeModel,
    half_extent_nm: f64,
    spacing_nm: f64,
) -> Result<GridSpec> {
    GridSpec::centered(
        half_extent_nm,
        spacing_nm,
        model.substrate_z_nm(),
        model.tip_height_nm(),
    )
}
