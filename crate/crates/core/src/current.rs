//! Inelastic tunneling currents.
//!
//! For each transition channel the current integrates |N|^2 over the window
//! of initial substrate states opened by the bias, with the partner tip-state
//! energy fixed by energy conservation:
//!
//! - negative bias: E_n from mu0 + e*Vb + E_eg up to mu0, xi_k = E_n - e*Vb - E_eg
//! - positive bias: E_n from mu0 up to mu0 + e*Vb - E_eg, xi_k = E_n - e*Vb + E_eg
//!
//! The window is empty (current exactly zero) whenever |e*Vb| <= E_eg, which
//! gives the threshold law for the total over channels: zero until |bias|
//! exceeds the smallest gap. Reported currents are relative: the 2*pi*e
//! prefactor and constant densities of states are kept symbolically but no
//! absolute calibration is attempted.

use crate::coupling::TransitionPotential;
use crate::density::TransitionDensity;
use crate::electrodes::{pair_density, ElectrodeModel};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::numeric::CompensatedSum;
use crate::units::ev_to_hartree;

/// Default number of trapezoid nodes over the energy window.
pub const DEFAULT_N_ENERGY: usize = 17;

/// Declared self-convergence tolerance of the energy quadrature at the
/// default node count: |I(n) - I(2n-1)| / I <= this for the default setup.
pub const QUADRATURE_CONVERGENCE_TOL: f64 = 2e-3;

/// One transition treated as an independent (incoherently summed) channel.
#[derive(Debug, Clone)]
pub struct TransitionChannel {
    density: TransitionDensity,
}

impl TransitionChannel {
    pub fn new(density: TransitionDensity) -> Self {
        Self { density }
    }

    pub fn density(&self) -> &TransitionDensity {
        &self.density
    }

    pub fn energy_gap_ev(&self) -> f64 {
        self.density.energy_gap_ev()
    }

    pub fn label(&self) -> &str {
        self.density.label()
    }
}

/// Substrate-energy integration window and the tip-energy constraint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyWindow {
    pub lo_ev: f64,
    pub hi_ev: f64,
    /// xi_k = E_n + xi_offset_ev
    pub xi_offset_ev: f64,
}

/// Integration window for one channel, or None when the bias cannot open it.
/// Emptiness is decided by the exact comparison hi > lo, so the threshold is
/// a hard zero rather than a small number.
pub fn energy_window(bias_v: f64, energy_gap_ev: f64, fermi_energy_ev: f64) -> Option<EnergyWindow> {
    if bias_v < 0.0 {
        let lo = fermi_energy_ev + bias_v + energy_gap_ev;
        let hi = fermi_energy_ev;
        (hi > lo).then_some(EnergyWindow { lo_ev: lo, hi_ev: hi, xi_offset_ev: -bias_v - energy_gap_ev })
    } else if bias_v > 0.0 {
        let lo = fermi_energy_ev;
        let hi = fermi_energy_ev + bias_v - energy_gap_ev;
        (hi > lo).then_some(EnergyWindow { lo_ev: lo, hi_ev: hi, xi_offset_ev: -bias_v + energy_gap_ev })
    } else {
        None
    }
}

/// Per-channel and total relative currents at one bias and tip position.
#[derive(Debug, Clone)]
pub struct CurrentResult {
    pub bias_v: f64,
    pub tip_lateral_nm: [f64; 2],
    pub per_channel: Vec<f64>,
    pub total: f64,
    pub n_energy: usize,
}

/// Channels with their cached transition potentials on a shared coupling
/// grid. Building one is the expensive step (one FFT solve per channel);
/// evaluations are cheap and reentrant.
#[derive(Debug, Clone)]
pub struct CurrentEngine {
    model: ElectrodeModel,
    spec: GridSpec,
    channels: Vec<TransitionChannel>,
    potentials: Vec<TransitionPotential>,
}

impl CurrentEngine {
    pub fn new(
        channels: Vec<TransitionChannel>,
        model: ElectrodeModel,
        spec: &GridSpec,
    ) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::Config("at least one transition channel is required".into()));
        }
        let potentials = channels
            .iter()
            .map(|c| TransitionPotential::new(c.density(), spec))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { model, spec: spec.clone(), channels, potentials })
    }

    pub fn model(&self) -> &ElectrodeModel {
        &self.model
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn channels(&self) -> &[TransitionChannel] {
        &self.channels
    }

    /// Smallest |bias| (V) with nonzero current: min over channel gaps.
    pub fn threshold_v(&self) -> f64 {
        self.channels
            .iter()
            .map(|c| c.energy_gap_ev())
            .fold(f64::INFINITY, f64::min)
    }

    /// Relative inelastic current of one channel.
    pub fn channel_current(
        &self,
        idx: usize,
        bias_v: f64,
        tip_lateral_nm: [f64; 2],
        n_energy: usize,
    ) -> Result<f64> {
        if !bias_v.is_finite() {
            return Err(Error::InvalidParameter(format!("bias must be finite, got {bias_v}")));
        }
        let gap = self.channels[idx].energy_gap_ev();
        let Some(w) = energy_window(bias_v, gap, self.model.fermi_energy_ev()) else {
            return Ok(0.0);
        };
        if n_energy < 2 {
            return Err(Error::Config(format!(
                "energy quadrature needs at least 2 nodes for a nonempty window, got {n_energy}"
            )));
        }
        let step_ev = (w.hi_ev - w.lo_ev) / (n_energy - 1) as f64;
        let mut acc = CompensatedSum::new();
        for i in 0..n_energy {
            let e_n = w.lo_ev + step_ev * i as f64;
            let xi_k = e_n + w.xi_offset_ev;
            let pair = pair_density(&self.model, e_n, xi_k, tip_lateral_nm, &self.spec)?;
            let m = self.potentials[idx].matrix_element(&pair)?;
            let weight = if i == 0 || i == n_energy - 1 { 0.5 } else { 1.0 };
            acc.add(weight * m.value_hartree * m.value_hartree);
        }
        Ok(2.0 * std::f64::consts::PI
            * self.model.dos_substrate()
            * self.model.dos_tip()
            * acc.value()
            * ev_to_hartree(step_ev))
    }

    /// Total over channels (incoherent sum); exactly zero inside the
    /// threshold window of every channel.
    pub fn total_current(
        &self,
        bias_v: f64,
        tip_lateral_nm: [f64; 2],
        n_energy: usize,
    ) -> Result<CurrentResult> {
        let mut per_channel = Vec::with_capacity(self.channels.len());
        for idx in 0..self.channels.len() {
            per_channel.push(self.channel_current(idx, bias_v, tip_lateral_nm, n_energy)?);
        }
        let mut acc = CompensatedSum::new();
        for &c in &per_channel {
            acc.add(c);
        }
        Ok(CurrentResult {
            bias_v,
            tip_lateral_nm,
            per_channel,
            total: acc.value(),
            n_energy,
        })
    }

    /// Total current over a list of biases.
    pub fn bias_sweep(
        &self,
        biases_v: &[f64],
        tip_lateral_nm: [f64; 2],
        n_energy: usize,
    ) -> Result<Vec<(f64, f64)>> {
        if let Some(b) = biases_v.iter().find(|b| !b.is_finite()) {
            return Err(Error::InvalidParameter(format!("bias list contains {b}")));
        }
        biases_v
            .iter()
            .map(|&b| Ok((b, self.total_current(b, tip_lateral_nm, n_energy)?.total)))
            .collect()
    }
}

/// One-shot negative-bias channel current. `bias_v` must be negative.
pub fn inelastic_current_negative(
    channel: &TransitionChannel,
    model: &ElectrodeModel,
    spec: &GridSpec,
    bias_v: f64,
    tip_lateral_nm: [f64; 2],
    n_energy: usize,
) -> Result<f64> {
    if !(bias_v < 0.0) {
        return Err(Error::Config(format!(
            "negative-bias current requires bias < 0, got {bias_v} V"
        )));
    }
    CurrentEngine::new(vec![channel.clone()], *model, spec)?
        .channel_current(0, bias_v, tip_lateral_nm, n_energy)
}

/// One-shot positive-bias channel current. `bias_v` must be positive.
pub fn inelastic_current_positive(
    channel: &TransitionChannel,
    model: &ElectrodeModel,
    spec: &GridSpec,
    bias_v: f64,
    tip_lateral_nm: [f64; 2],
    n_energy: usize,
) -> Result<f64> {
    if !(bias_v > 0.0) {
        return Err(Error::Config(format!(
            "positive-bias current requires bias > 0, got {bias_v} V"
        )));
    }
    CurrentEngine::new(vec![channel.clone()], *model, spec)?
        .channel_current(0, bias_v, tip_lateral_nm, n_energy)
}

/// One-shot total current over channels.
pub fn total_inelastic_current(
    channels: &[TransitionChannel],
    model: &ElectrodeModel,
    spec: &GridSpec,
    bias_v: f64,
    tip_lateral_nm: [f64; 2],
    n_energy: usize,
) -> Result<CurrentResult> {
    CurrentEngine::new(channels.to_vec(), *model, spec)?.total_current(bias_v, tip_lateral_nm, n_energy)
}

/// One-shot bias sweep.
pub fn bias_sweep(
    channels: &[TransitionChannel],
    model: &ElectrodeModel,
    spec: &GridSpec,
    biases_v: &[f64],
    tip_lateral_nm: [f64; 2],
    n_energy: usize,
) -> Result<Vec<(f64, f64)>> {
    CurrentEngine::new(channels.to_vec(), *model, spec)?.bias_sweep(biases_v, tip_lateral_nm, n_energy)
}

/// Curve CSV: comment headers, then "bias,current" rows at 15 significant digits.
pub fn curve_csv_string(curve: &[(f64, f64)], extra_header_lines: &[String]) -> String {
    let mut out = String::new();
    for line in extra_header_lines {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    out.push_str("# bias_V,current_rel\n");
    for (b, c) in curve {
        out.push_str(&format!("{b:.14e},{c:.14e}\n"));
    }
    out
}

pub fn write_curve_csv(
    path: impl AsRef<std::path::Path>,
    curve: &[(f64, f64)],
    extra_header_lines: &[String],
) -> Result<()> {
    std::fs::write(path, curve_csv_string(curve, extra_header_lines))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{GaussianDensityParams, TransitionDensity};
    use crate::grid::GridSpec;
    use approx::assert_relative_eq;

    fn small_spec() -> GridSpec {
        GridSpec::centered(1.6, 0.2, -0.3, 1.0).unwrap()
    }

    fn gaussian_channel(gap_ev: f64) -> TransitionChannel {
        TransitionChannel::new(
            TransitionDensity::gaussian(GaussianDensityParams::default(), gap_ev, "dark").unwrap(),
        )
    }

    fn engine_with_gap(gap_ev: f64) -> CurrentEngine {
        CurrentEngine::new(vec![gaussian_channel(gap_ev)], ElectrodeModel::default(), &small_spec())
            .unwrap()
    }

    #[test]
    fn window_algebra() {
        let w = energy_window(-2.5, 2.0, -4.64).unwrap();
        assert_relative_eq!(w.lo_ev, -5.14, max_relative = 1e-12);
        assert_relative_eq!(w.hi_ev, -4.64, max_relative = 1e-12);
        assert_relative_eq!(w.xi_offset_ev, 0.5, max_relative = 1e-12);
        let w = energy_window(2.5, 2.0, -4.64).unwrap();
        assert_relative_eq!(w.lo_ev, -4.64, max_relative = 1e-12);
        assert_relative_eq!(w.hi_ev, -4.14, max_relative = 1e-12);
        assert_relative_eq!(w.xi_offset_ev, -0.5, max_relative = 1e-12);
        assert!(energy_window(0.0, 2.0, -4.64).is_none());
        // hard zeros at and below the threshold
        assert!(energy_window(-2.0, 2.0, -4.64).is_none());
        assert!(energy_window(2.0, 2.0, -4.64).is_none());
        assert!(energy_window(-1.9, 2.0, -4.64).is_none());
    }

    #[test]
    fn below_threshold_is_exactly_zero() {
        let eng = engine_with_gap(2.0);
        for bias in [-1.9, -2.0, 0.0, 2.0, 1.9] {
            assert_eq!(eng.total_current(bias, [0.0, 0.0], 5).unwrap().total, 0.0);
        }
    }

    #[test]
    fn above_threshold_is_strictly_positive() {
        let eng = engine_with_gap(2.0);
        assert!(eng.total_current(-2.5, [0.0, 0.0], 9).unwrap().total > 0.0);
        assert!(eng.total_current(2.5, [0.0, 0.0], 9).unwrap().total > 0.0);
        assert!(eng.total_current(-2.1, [0.0, 0.0], 9).unwrap().total > 0.0);
    }

    #[test]
    fn negative_bias_beats_positive() {
        let eng = engine_with_gap(2.0);
        let neg = eng.total_current(-2.5, [0.0, 0.0], 9).unwrap().total;
        let pos = eng.total_current(2.5, [0.0, 0.0], 9).unwrap().total;
        assert!(neg / pos > 1.0, "ratio {}", neg / pos);
    }

    #[test]
    fn one_shot_wrappers_check_bias_sign() {
        let ch = gaussian_channel(2.0);
        let m = ElectrodeModel::default();
        let spec = small_spec();
        assert!(inelastic_current_negative(&ch, &m, &spec, 2.5, [0.0, 0.0], 5).is_err());
        assert!(inelastic_current_positive(&ch, &m, &spec, -2.5, [0.0, 0.0], 5).is_err());
        let i = inelastic_current_negative(&ch, &m, &spec, -2.5, [0.0, 0.0], 5).unwrap();
        assert!(i > 0.0);
    }

    #[test]
    fn quadrature_node_guard() {
        let eng = engine_with_gap(2.0);
        // empty window: n_energy irrelevant
        assert_eq!(eng.total_current(-1.0, [0.0, 0.0], 1).unwrap().total, 0.0);
        // nonempty window demands >= 2 nodes
        assert!(eng.total_current(-2.5, [0.0, 0.0], 1).is_err());
    }

    #[test]
    fn quadrature_second_order_self_convergence() {
        let eng = engine_with_gap(2.0);
        let i = |n: usize| eng.total_current(-2.5, [0.0, 0.0], n).unwrap().total;
        let (i5, i9, i17, i33) = (i(5), i(9), i(17), i(33));
        let r1 = (i5 - i9) / (i9 - i17);
        let r2 = (i9 - i17) / (i17 - i33);
        assert!((2.5..6.0).contains(&r1), "ratio {r1}");
        assert!((2.5..6.0).contains(&r2), "ratio {r2}");
        assert!(((i17 - i33) / i33).abs() < QUADRATURE_CONVERGENCE_TOL);
    }

    #[test]
    fn current_scales_quadratically_with_density() {
        // gridded channel so the amplitude can be scaled directly
        let spec = small_spec();
        let base = crate::density::rasterize(
            &TransitionDensity::gaussian(GaussianDensityParams::default(), 2.0, "g").unwrap(),
            &spec,
        )
        .unwrap();
        let scaled = crate::grid::ScalarGrid3D::new(
            base.spec().clone(),
            base.values().iter().map(|v| 2.0 * v).collect(),
        )
        .unwrap();
        let c1 = TransitionChannel::new(
            TransitionDensity::gridded_with_tolerance(base, 2.0, "g", 1e-3).unwrap(),
        );
        let c2 = TransitionChannel::new(
            TransitionDensity::gridded_with_tolerance(scaled, 2.0, "g2", 1e-3).unwrap(),
        );
        let m = ElectrodeModel::default();
        let i1 = total_inelastic_current(&[c1], &m, &spec, -2.5, [0.3, 0.1], 5).unwrap().total;
        let i2 = total_inelastic_current(&[c2], &m, &spec, -2.5, [0.3, 0.1], 5).unwrap().total;
        assert_relative_eq!(i2, 4.0 * i1, max_relative = 1e-11);
    }

    #[test]
    fn channels_sum_and_commute() {
        let spec = small_spec();
        let m = ElectrodeModel::default();
        let a = gaussian_channel(3.69);
        let b = gaussian_channel(2.0);
        let fwd = total_inelastic_current(&[a.clone(), b.clone()], &m, &spec, -4.0, [0.0, 0.0], 5).unwrap();
        let rev = total_inelastic_current(&[b, a], &m, &spec, -4.0, [0.0, 0.0], 5).unwrap();
        assert_eq!(fwd.total, rev.total);
        assert!(fwd.per_channel.iter().all(|&c| c > 0.0));
        let hand_sum: f64 = fwd.per_channel.iter().sum();
        assert_relative_eq!(fwd.total, hand_sum, max_relative = 1e-14);
    }

    #[test]
    fn degenerate_pair_both_contribute_at_minus_four_volts() {
        let spec = small_spec();
        let m = ElectrodeModel::default();
        let channels = [gaussian_channel(3.69), gaussian_channel(3.69)];
        let r = total_inelastic_current(&channels, &m, &spec, -4.0, [0.0, 0.0], 5).unwrap();
        assert_eq!(r.per_channel.len(), 2);
        assert!(r.per_channel[0] > 0.0 && r.per_channel[1] > 0.0);
        assert_relative_eq!(r.per_channel[0], r.per_channel[1], max_relative = 1e-14);
    }

    #[test]
    fn sweep_has_exact_zero_plateau() {
        let eng = engine_with_gap(2.0);
        let biases: Vec<f64> = (0..=12).map(|k| -3.0 + 0.5 * k as f64).collect();
        let curve = eng.bias_sweep(&biases, [0.0, 0.0], 5).unwrap();
        for (b, i) in &curve {
            if b.abs() <= 2.0 {
                assert_eq!(*i, 0.0, "bias {b}");
            } else {
                assert!(*i > 0.0, "bias {b}");
            }
        }
        assert!(eng.bias_sweep(&[f64::NAN], [0.0, 0.0], 5).is_err());
    }

    #[test]
    fn curve_csv_format() {
        let s = curve_csv_string(&[(-2.5, 1.0), (0.0, 0.0)], &["tool x".into()]);
        let mut lines = s.lines();
        assert_eq!(lines.next(), Some("# tool x"));
        assert_eq!(lines.next(), Some("# bias_V,current_rel"));
        let row = lines.next().unwrap();
        assert!(row.starts_with("-2.5"));
        assert_eq!(row.split(',').count(), 2);
        // 15 significant digits
        assert!(row.split(',').next().unwrap().len() >= 20);
    }
}
