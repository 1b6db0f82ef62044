//! Intermodulation conversion gain of the mean-field spin model to lowest
//! nonvanishing order in the omega_A anisotropy.
//!
//! Sideband amplitudes around a steady operating point obey a linear 2x2
//! system with matrix entries W1 = i w_dK - 1/T2 and
//! W2 = (w_A^2 / 2) P_+^2 / (2 i w_T - 1/T1); the conversion gain at
//! sideband frequency w is
//!
//! ```text
//! g_IMD = | 2 gamma_1 W2 / ((lambda_+ - i w)(lambda_- - i w)) |^2
//! ```
//!
//! with lambda_pm the eigenvalues of the matrix. The trace is pinned at
//! T_W = -2/T2 independently of every other parameter.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::rd::{rd_roots, RdParams, RdPhysical, RdStability};
use crate::{Error, Result};

/// Steady operating point feeding the sideband linearization.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ImdOperatingPoint {
    pub p_z: f64,
    pub p_plus: (f64, f64),
    /// Pulled detuning w_dK = w_d - w_K P_z.
    pub omega_dk: f64,
}

/// Which stable branch to sit on when the operating point is bistable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchSelect {
    /// Smaller P_z/P_z0 (strongly driven branch).
    Low,
    /// Larger P_z/P_z0 (weakly driven branch).
    High,
}

/// Steady-state (P_+, P_z) of the mean-field model at physical rates.
///
/// Monostable points need no selector; bistable ones must name the branch
/// explicitly.
pub fn imd_operating_point(
    ph: &RdPhysical,
    branch: Option<BranchSelect>,
) -> Result<ImdOperatingPoint> {
    let params = RdParams::from_physical(*ph)?;
    let states = rd_roots(&params);
    let mut stable: Vec<f64> = states
        .iter()
        .filter(|s| s.stability == RdStability::Stable)
        .map(|s| s.z)
        .collect();
    stable.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let z = match (stable.len(), branch) {
        (0, _) => {
            return Err(Error::SingularResponse(
                "no stable steady state at the requested operating point".into(),
            ))
        }
        (1, _) => stable[0],
        (_, Some(BranchSelect::Low)) => stable[0],
        (_, Some(BranchSelect::High)) => *stable.last().unwrap(),
        (_, None) => {
            return Err(Error::AmbiguousBranch(format!(
                "{} stable branches; select one explicitly",
                stable.len()
            )))
        }
    };
    let p_z = z * ph.p_z0;
    let omega_dk = ph.omega_d - ph.omega_k * p_z;
    // P_+ = i w1 P_z / (i w_dK - 1/T2)
    let p_plus = C64::new(0.0, ph.omega_1 * p_z) / C64::new(-1.0 / ph.t2, omega_dk);
    Ok(ImdOperatingPoint {
        p_z,
        p_plus: (p_plus.re, p_plus.im),
        omega_dk,
    })
}

/// Sideband linearization matrix data and eigenvalues.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ImdState {
    pub w1: (f64, f64),
    pub w2: (f64, f64),
    /// Trace T_W = -2/T2 (exact).
    pub trace: f64,
    pub det: f64,
    pub lambda_plus: (f64, f64),
    pub lambda_minus: (f64, f64),
}

/// Conversion-gain spectrum over the supplied frequency grid.
#[derive(Debug, Clone, Serialize)]
pub struct ImdSpectrum {
    pub state: ImdState,
    pub points: Vec<(f64, f64)>,
    /// Set when |W2| exceeds half the transverse linewidth, where the
    /// lowest-order treatment degrades.
    pub perturbative_warning: bool,
}

/// Linearization data at an operating point.
pub fn imd_state(
    op: &ImdOperatingPoint,
    omega_a: f64,
    omega_t: f64,
    t1: f64,
    t2: f64,
) -> ImdState {
    let p_plus = C64::new(op.p_plus.0, op.p_plus.1);
    let w1 = C64::new(-1.0 / t2, op.omega_dk);
    let w2 = 0.5 * omega_a * omega_a * p_plus * p_plus / C64::new(-1.0 / t1, 2.0 * omega_t);
    let trace = -2.0 / t2;
    let det = op.omega_dk * op.omega_dk + 1.0 / (t2 * t2)
        - 0.25 * omega_a.powi(4) * p_plus.norm_sqr() * p_plus.norm_sqr()
            / (4.0 * omega_t * omega_t + 1.0 / (t1 * t1));
    let half = C64::new(0.5 * trace, 0.0);
    let rad = (half * half - C64::new(det, 0.0)).sqrt();
    let lp = half + rad;
    let lm = half - rad;
    ImdState {
        w1: (w1.re, w1.im),
        w2: (w2.re, w2.im),
        trace,
        det,
        lambda_plus: (lp.re, lp.im),
        lambda_minus: (lm.re, lm.im),
    }
}

/// g_IMD over `omega_grid`.
pub fn imd_gain(
    op: &ImdOperatingPoint,
    omega_a: f64,
    omega_t: f64,
    t1: f64,
    t2: f64,
    gamma_1: f64,
    omega_grid: &[f64],
) -> ImdSpectrum {
    let state = imd_state(op, omega_a, omega_t, t1, t2);
    let w2 = C64::new(state.w2.0, state.w2.1);
    let lp = C64::new(state.lambda_plus.0, state.lambda_plus.1);
    let lm = C64::new(state.lambda_minus.0, state.lambda_minus.1);
    let points = omega_grid
        .iter()
        .map(|&w| {
            let den = (lp - C64::new(0.0, w)) * (lm - C64::new(0.0, w));
            let g = (2.0 * gamma_1 * w2 / den).norm_sqr();
            (w, g)
        })
        .collect();
    ImdSpectrum {
        state,
        points,
        perturbative_warning: w2.norm() > 0.5 / t2,
    }
}

/// Symmetric default grid: +-10/T2 across 1001 points.
pub fn default_omega_grid(t2: f64) -> Vec<f64> {
    let span = 10.0 / t2;
    (0..1001)
        .map(|k| -span + 2.0 * span * k as f64 / 1000.0)
        .collect()
}
