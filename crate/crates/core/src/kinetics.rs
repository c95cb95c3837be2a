//! Three-level detection-cycle kinetics: ground state S0 pumped to the dark
//! state S3 by inelastic tunneling, laser-coupled to the bright state S17,
//! which decays back to S0 (collected photons) and S3.
//!
//! dP0/dt  = -(I/e) P0 + g0 P17
//! dP3/dt  = -eta P3 + (I/e) P0 + g3 P17
//! dP17/dt = -(g0 + g3) P17 + eta P3
//!
//! The steady-state photon rate is Gamma = g0 * P17_s.

use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

/// Cycle rates, all in 1/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateModel {
    /// Dark-state pumping rate I_ine/e from the inelastic current.
    pub pump_rate_ies: f64,
    /// Laser pump rate eta between S3 and S17.
    pub laser_pump: f64,
    /// Spontaneous S17 -> S0 rate (collected photons).
    pub gamma0: f64,
    /// Spontaneous S17 -> S3 rate.
    pub gamma3: f64,
}

impl RateModel {
    pub fn new(pump_rate_ies: f64, laser_pump: f64, gamma0: f64, gamma3: f64) -> Result<Self> {
        for (name, v) in [
            ("pump_rate_ies", pump_rate_ies),
            ("laser_pump", laser_pump),
            ("gamma0", gamma0),
            ("gamma3", gamma3),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "rate {name} must be finite and >= 0, got {v}"
                )));
            }
        }
        Ok(Self { pump_rate_ies, laser_pump, gamma0, gamma3 })
    }

    fn max_rate(&self) -> f64 {
        self.pump_rate_ies
            .max(self.laser_pump)
            .max(self.gamma0 + self.gamma3)
    }
}

/// Populations of (S0, S3, S17); each in [0, 1], summing to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Populations {
    pub p0: f64,
    pub p3: f64,
    pub p17: f64,
}

impl Populations {
    pub fn new(p0: f64, p3: f64, p17: f64) -> Result<Self> {
        let p = Self { p0, p3, p17 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("p0", self.p0), ("p3", self.p3), ("p17", self.p17)] {
            if !(-1e-12..=1.0 + 1e-12).contains(&v) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "population {name} must lie in [0, 1], got {v}"
                )));
            }
        }
        let sum = self.p0 + self.p3 + self.p17;
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "populations must sum to 1 (within 1e-12), got {sum}"
            )));
        }
        Ok(())
    }

    fn as_array(&self) -> [f64; 3] {
        [self.p0, self.p3, self.p17]
    }
}

/// Generator G with dP/dt = G P; every column sums to zero.
pub fn rate_generator(model: &RateModel) -> [[f64; 3]; 3] {
    let x = model.pump_rate_ies;
    let eta = model.laser_pump;
    let (g0, g3) = (model.gamma0, model.gamma3);
    [
        [-x, 0.0, g0],
        [x, -eta, g3],
        [0.0, eta, -(g0 + g3)],
    ]
}

fn apply(g: &[[f64; 3]; 3], p: [f64; 3]) -> [f64; 3] {
    [
        g[0][0] * p[0] + g[0][1] * p[1] + g[0][2] * p[2],
        g[1][0] * p[0] + g[1][1] * p[1] + g[1][2] * p[2],
        g[2][0] * p[0] + g[2][1] * p[1] + g[2][2] * p[2],
    ]
}

/// Classic fourth-order one-step integration of the kinetic equations.
/// Refuses time steps with dt * max_rate > 0.1, suggesting a stable one.
pub fn evolve(
    model: &RateModel,
    p_init: Populations,
    t_final_s: f64,
    dt_s: f64,
) -> Result<Vec<(f64, Populations)>> {
    p_init.validate()?;
    if !(dt_s > 0.0) || !(t_final_s >= 0.0) || !dt_s.is_finite() || !t_final_s.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "need dt > 0 and t_final >= 0, got dt={dt_s}, t_final={t_final_s}"
        )));
    }
    let max_rate = model.max_rate();
    if dt_s * max_rate > 0.1 {
        return Err(Error::Config(format!(
            "dt = {dt_s:.3e} s is unstable for the fastest rate {max_rate:.3e}/s; \
             use dt <= {:.3e} s",
            0.1 / max_rate
        )));
    }
    let g = rate_generator(model);
    let steps = (t_final_s / dt_s).ceil() as usize;
    let mut p = p_init.as_array();
    let mut out = Vec::with_capacity(steps + 1);
    out.push((0.0, p_init));
    for i in 0..steps {
        let k1 = apply(&g, p);
        let k2 = apply(&g, [p[0] + 0.5 * dt_s * k1[0], p[1] + 0.5 * dt_s * k1[1], p[2] + 0.5 * dt_s * k1[2]]);
        let k3 = apply(&g, [p[0] + 0.5 * dt_s * k2[0], p[1] + 0.5 * dt_s * k2[1], p[2] + 0.5 * dt_s * k2[2]]);
        let k4 = apply(&g, [p[0] + dt_s * k3[0], p[1] + dt_s * k3[1], p[2] + dt_s * k3[2]]);
        for a in 0..3 {
            p[a] += dt_s / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]);
        }
        out.push((dt_s * (i + 1) as f64, Populations { p0: p[0], p3: p[1], p17: p[2] }));
    }
    Ok(out)
}

/// Stationary populations: the null vector of the generator, normalized to
/// total probability 1. Errors name the state that blocks the cycle when no
/// stationary cycle exists.
pub fn steady_state(model: &RateModel) -> Result<Populations> {
    if model.pump_rate_ies == 0.0 {
        return Populations::new(1.0, 0.0, 0.0);
    }
    if model.laser_pump == 0.0 {
        return Err(Error::Numerical(
            "no stationary cycle: the dark state (S3) has no outgoing rate (laser pump is zero)"
                .into(),
        ));
    }
    if model.gamma0 + model.gamma3 == 0.0 {
        return Err(Error::Numerical(
            "no stationary cycle: the bright state (S17) has no decay path (gamma0 + gamma3 is zero)"
                .into(),
        ));
    }
    let g = rate_generator(model);
    // null space of a rank-2 generator: cross product of two rows
    let cross = |a: [f64; 3], b: [f64; 3]| {
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    };
    let candidates = [cross(g[0], g[1]), cross(g[0], g[2]), cross(g[1], g[2])];
    let norm = |v: &[f64; 3]| v.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let v = candidates
        .iter()
        .max_by(|a, b| norm(a).partial_cmp(&norm(b)).unwrap())
        .copied()
        .expect("three candidates");
    let sum = v[0] + v[1] + v[2];
    if sum == 0.0 || !sum.is_finite() {
        return Err(Error::Numerical("degenerate generator: no normalizable null vector".into()));
    }
    let mut p = [v[0] / sum, v[1] / sum, v[2] / sum];
    for c in &mut p {
        if *c < 0.0 {
            if *c < -1e-12 {
                return Err(Error::Numerical(format!(
                    "null vector has a negative component {c}; rates are inconsistent"
                )));
            }
            *c = 0.0;
        }
    }
    let renorm = p[0] + p[1] + p[2];
    Populations::new(p[0] / renorm, p[1] / renorm, p[2] / renorm)
}

/// Steady-state photon emission rate Gamma = gamma0 * P17_s (1/s) from the
/// null-space solve.
pub fn photon_emission_rate(model: &RateModel) -> Result<f64> {
    Ok(model.gamma0 * steady_state(model)?.p17)
}

/// The same rate through the closed form
/// Gamma = g0 (I/e) [g0 + (I/e)(g0+g3+eta)/eta]^-1; independent of the
/// null-space route and used to cross-check it.
pub fn photon_rate_closed_form(model: &RateModel) -> Result<f64> {
    let x = model.pump_rate_ies;
    if x == 0.0 {
        return Ok(0.0);
    }
    if model.laser_pump == 0.0 {
        return Err(Error::Numerical(
            "closed form undefined: laser pump is zero while the dark state is fed".into(),
        ));
    }
    let g0 = model.gamma0;
    Ok(g0 * x / (g0 + x * (g0 + model.gamma3 + model.laser_pump) / model.laser_pump))
}

/// Trajectory CSV: "# t_s,p0,p3,p17" then one row per sample.
pub fn trajectory_csv_string(
    trajectory: &[(f64, Populations)],
    extra_header_lines: &[String],
) -> String {
    let mut out = String::new();
    for line in extra_header_lines {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    out.push_str("# t_s,p0,p3,p17\n");
    for (t, p) in trajectory {
        out.push_str(&format!("{t:.14e},{:.14e},{:.14e},{:.14e}\n", p.p0, p.p3, p.p17));
    }
    out
}

/// Max deviation of the population sum from 1 along a trajectory.
pub fn conservation_defect(trajectory: &[(f64, Populations)]) -> f64 {
    trajectory
        .iter()
        .map(|(_, p)| {
            let mut acc = CompensatedSum::new();
            acc.add(p.p0);
            acc.add(p.p3);
            acc.add(p.p17);
            (acc.value() - 1.0).abs()
        })
        .fold(0.0, f64::max)
}
