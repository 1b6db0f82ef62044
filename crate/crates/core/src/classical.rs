//! Classical precession limit: damped, driven polarization dynamics with
//! anisotropy-induced nutation, and stroboscopic limit-cycle detection.
//!
//! The polarization vector obeys dP/dt = P x P_H - P_T with the effective
//! field
//!
//! ```text
//! P_H = ( -(w_K + w_A)/2 P_x - w_1 cos(w_T t),
//!         -(w_K - w_A)/2 P_y + w_1 sin(w_T t),
//!         w_0 )
//! ```
//!
//! and the relaxation term P_T = (P_x/T2, P_y/T2, (P_z - S_z0)/T1). The
//! anisotropy enters as the rate pair (w_K +- w_A)/2, which stays regular
//! at w_K = 0.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type Vec3 = [f64; 3];

/// Rates and relaxation constants of the classical model. Use
/// `t1 = t2 = f64::INFINITY` for undamped motion.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalParams {
    #[serde(default)]
    pub omega_0: f64,
    #[serde(default)]
    pub omega_k: f64,
    #[serde(default)]
    pub omega_a: f64,
    #[serde(default)]
    pub omega_1: f64,
    #[serde(default)]
    pub omega_t: f64,
    #[serde(default = "inf")]
    pub t1: f64,
    #[serde(default = "inf")]
    pub t2: f64,
    /// Equilibrium longitudinal polarization.
    #[serde(default)]
    pub s_z0: f64,
}

fn inf() -> f64 {
    f64::INFINITY
}

impl ClassicalParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.t1 > 0.0) || !(self.t2 > 0.0) {
            return Err(Error::InvalidParameter("T1 and T2 must be > 0".into()));
        }
        Ok(())
    }

    /// Drive period 2 pi / omega_T.
    pub fn drive_period(&self) -> Option<f64> {
        (self.omega_t != 0.0).then(|| std::f64::consts::TAU / self.omega_t.abs())
    }
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// dP/dt at time t.
pub fn classical_rhs(p: Vec3, t: f64, params: &ClassicalParams) -> Vec3 {
    let half_sum = 0.5 * (params.omega_k + params.omega_a);
    let half_diff = 0.5 * (params.omega_k - params.omega_a);
    let phase = params.omega_t * t;
    let p_h = [
        -half_sum * p[0] - params.omega_1 * phase.cos(),
        -half_diff * p[1] + params.omega_1 * phase.sin(),
        params.omega_0,
    ];
    let prec = cross(p, p_h);
    [
        prec[0] - p[0] / params.t2,
        prec[1] - p[1] / params.t2,
        prec[2] - (p[2] - params.s_z0) / params.t1,
    ]
}

fn rk4_step(p: Vec3, t: f64, dt: f64, params: &ClassicalParams) -> Vec3 {
    let add = |a: Vec3, b: Vec3, s: f64| [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]];
    let k1 = classical_rhs(p, t, params);
    let k2 = classical_rhs(add(p, k1, 0.5 * dt), t + 0.5 * dt, params);
    let k3 = classical_rhs(add(p, k2, 0.5 * dt), t + 0.5 * dt, params);
    let k4 = classical_rhs(add(p, k3, dt), t + dt, params);
    [
        p[0] + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        p[1] + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        p[2] + dt / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
    ]
}

/// Lab-frame trajectory (t, P) sampled every `stride` steps (the final
/// state is always included).
pub fn integrate_classical(
    p0: Vec3,
    params: &ClassicalParams,
    dt: f64,
    t_max: f64,
    stride: usize,
) -> Result<Vec<(f64, Vec3)>> {
    params.validate()?;
    if !(dt > 0.0) || !(t_max > 0.0) {
        return Err(Error::InvalidParameter("dt and t_max must be > 0".into()));
    }
    let stride = stride.max(1);
    let steps = (t_max / dt).ceil() as usize;
    let mut out = Vec::with_capacity(steps / stride + 2);
    let mut p = p0;
    out.push((0.0, p));
    for k in 0..steps {
        let t = k as f64 * dt;
        let next = rk4_step(p, t, dt, params);
        let hop = ((next[0] - p[0]).powi(2) + (next[1] - p[1]).powi(2) + (next[2] - p[2]).powi(2))
            .sqrt();
        if hop > 0.5 {
            return Err(Error::IntegrationInstability {
                min_eig: hop,
                tol: 0.5,
                t,
            });
        }
        p = next;
        if (k + 1) % stride == 0 || k + 1 == steps {
            out.push(((k + 1) as f64 * dt, p));
        }
    }
    Ok(out)
}

/// Rotate a trajectory into the frame co-rotating with the drive
/// (convenience output for plotting).
pub fn to_rotating_frame(traj: &[(f64, Vec3)], omega_t: f64) -> Vec<(f64, Vec3)> {
    traj.iter()
        .map(|&(t, p)| {
            let (s, c) = (omega_t * t).sin_cos();
            (t, [c * p[0] + s * p[1], -s * p[0] + c * p[1], p[2]])
        })
        .collect()
}

/// A detected stroboscopic limit cycle.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LimitCycle {
    /// Cycle period (the drive period).
    pub period: f64,
    /// Distance between the last two strobe points.
    pub closure_error: f64,
    /// max - min of |P_transverse| over the final cycle.
    pub wobble: f64,
}

/// Stroboscopic limit-cycle detection on a precomputed trajectory.
///
/// Samples the trajectory at multiples of the drive period (linear
/// interpolation between stored samples), declares a cycle once
/// successive strobe points approach below 1e-6, and measures the wobble
/// amplitude over the final period. Returns `None` without a drive or
/// without strobe convergence.
pub fn detect_limit_cycle(traj: &[(f64, Vec3)], params: &ClassicalParams) -> Option<LimitCycle> {
    let period = params.drive_period()?;
    if traj.len() < 2 {
        return None;
    }
    let t_end = traj.last().unwrap().0;
    let n_strobes = (t_end / period).floor() as usize;
    if n_strobes < 3 {
        return None;
    }
    let sample = |t: f64| -> Vec3 {
        // Trajectory timestamps are uniform; locate by division. Cubic
        // Hermite interpolation (slopes from the exact right-hand side)
        // keeps the strobe noise floor far below the 1e-6 closure
        // threshold even for fast drives.
        let dt = traj[1].0 - traj[0].0;
        let idx = (((t - traj[0].0) / dt).floor().max(0.0) as usize).min(traj.len() - 2);
        let (t0, p0) = traj[idx];
        let (t1, p1) = traj[idx + 1];
        let h = t1 - t0;
        let a = ((t - t0) / h).clamp(0.0, 1.0);
        let m0 = classical_rhs(p0, t0, params);
        let m1 = classical_rhs(p1, t1, params);
        let (a2, a3) = (a * a, a * a * a);
        let h00 = 2.0 * a3 - 3.0 * a2 + 1.0;
        let h10 = a3 - 2.0 * a2 + a;
        let h01 = -2.0 * a3 + 3.0 * a2;
        let h11 = a3 - a2;
        let mut out = [0.0; 3];
        for k in 0..3 {
            out[k] = h00 * p0[k] + h10 * h * m0[k] + h01 * p1[k] + h11 * h * m1[k];
        }
        out
    };
    let strobes: Vec<Vec3> = (1..=n_strobes)
        .map(|k| sample(k as f64 * period))
        .collect();
    let dist = |a: Vec3, b: Vec3| {
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
    };
    let closure_error = dist(strobes[n_strobes - 1], strobes[n_strobes - 2]);
    if closure_error >= 1e-6 {
        return None;
    }
    // Wobble over the final period.
    let t_last = n_strobes as f64 * period;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &(t, p) in traj {
        if t >= t_last - period && t <= t_last {
            let r = p[0].hypot(p[1]);
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    Some(LimitCycle {
        period,
        closure_error,
        wobble: hi - lo,
    })
}
