//! Mean-field steady states of the driven spin ensemble: the cubic
//! polarization equation, stability of its branches, and the fold/cusp
//! analytics (peak, onset, jump curves, stability maps).
//!
//! Everything runs on the dimensionless triple (D, W, delta):
//! D = (omega_K T2 P_z0 / 4)^2, W = omega_1^2 T1 T2 / 2, delta = omega_d T2.
//! The normalized polarization z = P_z / P_z0 obeys
//!
//! ```text
//! F(z, delta) = z (1 + (delta - 4 sqrt(D) z)^2 + 2W) - 1 - (delta - 4 sqrt(D) z)^2 = 0
//! ```
//!
//! which is cubic in z; bistability requires D >= 1.

use num_complex::Complex64 as C64;

use crate::mapgrid::{linspace, StabilityMap};
use crate::numeric::{cubic_real_roots, dedupe_roots, monic_cubic_discriminant};
use crate::parallel::map_indexed;
use crate::{Error, Result};

/// Physical rates behind the dimensionless RD triple.
#[derive(Debug, Clone, Copy)]
pub struct RdPhysical {
    pub omega_k: f64,
    pub t1: f64,
    pub t2: f64,
    pub p_z0: f64,
    pub omega_1: f64,
    pub omega_d: f64,
}

/// RD model parameters; analytics run on the dimensionless form.
#[derive(Debug, Clone)]
pub struct RdParams {
    pub d: f64,
    pub w: f64,
    pub delta: f64,
    physical: Option<RdPhysical>,
    /// True when the physical tuple has omega_K T2 P_z0 < 0; the
    /// dimensionless detuning is mirrored so the canonical cubic applies.
    mirrored: bool,
}

impl RdParams {
    pub fn new(d: f64, w: f64, delta: f64) -> Result<Self> {
        if d < 0.0 || w < 0.0 {
            return Err(Error::InvalidParameter(
                "RD parameters require D >= 0 and W >= 0".into(),
            ));
        }
        Ok(Self {
            d,
            w,
            delta,
            physical: None,
            mirrored: false,
        })
    }

    /// Derive (D, W, delta) from physical rates.
    pub fn from_physical(ph: RdPhysical) -> Result<Self> {
        if ph.t1 <= 0.0 || ph.t2 <= 0.0 {
            return Err(Error::InvalidParameter("T1 and T2 must be > 0".into()));
        }
        let s4 = ph.omega_k * ph.t2 * ph.p_z0; // = 4 sqrt(D) up to sign
        let d = (s4 / 4.0).powi(2);
        let w = 0.5 * ph.omega_1.powi(2) * ph.t1 * ph.t2;
        let mirrored = s4 < 0.0;
        let delta = if mirrored { -ph.omega_d * ph.t2 } else { ph.omega_d * ph.t2 };
        Ok(Self {
            d,
            w,
            delta,
            physical: Some(ph),
            mirrored,
        })
    }

    pub fn physical(&self) -> Option<&RdPhysical> {
        self.physical.as_ref()
    }

    pub fn is_mirrored(&self) -> bool {
        self.mirrored
    }

    /// Canonical rates realizing (D, W, delta) with T1 = T2 = 1, P_z0 = 1.
    pub fn canonical_physical(&self) -> RdPhysical {
        RdPhysical {
            omega_k: 4.0 * self.d.sqrt(),
            t1: 1.0,
            t2: 1.0,
            p_z0: 1.0,
            omega_1: (2.0 * self.w).sqrt(),
            omega_d: self.delta,
        }
    }

    fn with_delta(&self, delta: f64) -> Self {
        let mut p = self.clone();
        p.delta = delta;
        p.physical = None;
        p.mirrored = false;
        p
    }

    fn with_w_delta(&self, w: f64, delta: f64) -> Self {
        let mut p = self.with_delta(delta);
        p.w = w;
        p
    }
}

/// F(z, delta) for the current (D, W).
pub fn rd_f(params: &RdParams, z: f64) -> f64 {
    let x = params.delta - 4.0 * params.d.sqrt() * z;
    z * (1.0 + x * x + 2.0 * params.w) - 1.0 - x * x
}

/// Monic cubic coefficients (p, q, r) of F(z) = 0 written as
/// z^3 + p z^2 + q z + r = 0 (valid for D > 0).
pub fn rd_monic_coeffs(params: &RdParams) -> Option<(f64, f64, f64)> {
    let s = 4.0 * params.d.sqrt();
    if s == 0.0 {
        return None;
    }
    let a = s * s;
    let b = -s * (2.0 * params.delta + s);
    let c = 1.0 + params.delta * params.delta + 2.0 * params.w + 2.0 * params.delta * s;
    let d0 = -(1.0 + params.delta * params.delta);
    Some((b / a, c / a, d0 / a))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RdStability {
    Stable,
    Unstable,
}

/// One steady-state branch point of the cubic.
#[derive(Debug, Clone)]
pub struct RdSteadyState {
    /// Normalized polarization P_z / P_z0 in [0, 1].
    pub z: f64,
    /// Transverse polarization at this root (physical rates when supplied,
    /// canonical ones otherwise).
    pub p_plus: C64,
    pub stability: RdStability,
}

/// Roots plus the count of cubic solutions discarded for leaving [0, 1].
#[derive(Debug, Clone)]
pub struct RdRootReport {
    pub states: Vec<RdSteadyState>,
    pub discarded: usize,
}

/// All steady states in z in [0, 1], each with stability from the
/// three-dimensional Jacobian of the transverse/longitudinal flow.
pub fn rd_roots(params: &RdParams) -> Vec<RdSteadyState> {
    rd_roots_detailed(params).states
}

pub fn rd_roots_detailed(params: &RdParams) -> RdRootReport {
    let s = 4.0 * params.d.sqrt();
    let raw = if s == 0.0 {
        // F degenerates to a linear equation.
        vec![(1.0 + params.delta * params.delta)
            / (1.0 + params.delta * params.delta + 2.0 * params.w)]
    } else {
        let a = s * s;
        let b = -s * (2.0 * params.delta + s);
        let c = 1.0 + params.delta * params.delta + 2.0 * params.w + 2.0 * params.delta * s;
        let d0 = -(1.0 + params.delta * params.delta);
        cubic_real_roots(a, b, c, d0)
    };
    let deduped = dedupe_roots(raw, 1e-9);
    let mut states = Vec::with_capacity(deduped.len());
    let mut discarded = 0usize;
    for z in deduped {
        if z < -1e-9 || z > 1.0 + 1e-9 {
            discarded += 1;
            continue;
        }
        let z = z.clamp(0.0, 1.0);
        states.push(classify_root(params, z));
    }
    RdRootReport { states, discarded }
}

/// Transverse polarization P_+ = i w1 T2 P_z / (i (w_d - w_K P_z) T2 - 1).
fn p_plus_at(ph: &RdPhysical, z: f64) -> C64 {
    let p_z = z * ph.p_z0;
    let w_dk = ph.omega_d - ph.omega_k * p_z;
    let num = C64::new(0.0, ph.omega_1 * ph.t2 * p_z);
    let den = C64::new(-1.0, w_dk * ph.t2);
    num / den
}

fn classify_root(params: &RdParams, z: f64) -> RdSteadyState {
    // Stability is evaluated in canonical rates; the mirrored physical
    // system is related by complex conjugation, which preserves the
    // eigenvalue real parts.
    let canon = params.canonical_physical();
    let p_plus_canon = p_plus_at(&canon, z);
    let jac = rd_jacobian(&canon, z, p_plus_canon);
    let stability = if routh_hurwitz_stable(&jac) {
        RdStability::Stable
    } else {
        RdStability::Unstable
    };
    let p_plus = match params.physical {
        Some(ref ph) => p_plus_at(ph, z),
        None => p_plus_canon,
    };
    RdSteadyState { z, p_plus, stability }
}

/// Jacobian of d/dt (Re P_+, Im P_+, P_z) at a steady state.
pub fn rd_jacobian(ph: &RdPhysical, z: f64, p_plus: C64) -> [[f64; 3]; 3] {
    let p_z = z * ph.p_z0;
    let w_dk = ph.omega_d - ph.omega_k * p_z;
    let (u, v) = (p_plus.re, p_plus.im);
    [
        [-1.0 / ph.t2, -w_dk, ph.omega_k * v],
        [w_dk, -1.0 / ph.t2, -ph.omega_k * u - ph.omega_1],
        [0.0, ph.omega_1, -1.0 / ph.t1],
    ]
}

/// Characteristic polynomial det(lambda I - J) = l^3 + c2 l^2 + c1 l + c0.
pub fn char_poly_3x3(j: &[[f64; 3]; 3]) -> (f64, f64, f64) {
    let tr = j[0][0] + j[1][1] + j[2][2];
    let m01 = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let m02 = j[0][0] * j[2][2] - j[0][2] * j[2][0];
    let m12 = j[1][1] * j[2][2] - j[1][2] * j[2][1];
    let det = j[0][0] * (j[1][1] * j[2][2] - j[1][2] * j[2][1])
        - j[0][1] * (j[1][0] * j[2][2] - j[1][2] * j[2][0])
        + j[0][2] * (j[1][0] * j[2][1] - j[1][1] * j[2][0]);
    (-tr, m01 + m02 + m12, -det)
}

/// All eigenvalue real parts negative (Routh-Hurwitz for a cubic).
fn routh_hurwitz_stable(j: &[[f64; 3]; 3]) -> bool {
    let (c2, c1, c0) = char_poly_3x3(j);
    c2 > 0.0 && c0 > 0.0 && c2 * c1 > c0
}

/// Peak point of the response branch: (delta_p, z_p) with
/// delta_p = 4 sqrt(D) / (1 + 2W) and z_p = 1 / (1 + 2W).
pub fn rd_peak_delta(d: f64, w: f64) -> (f64, f64) {
    let z_p = 1.0 / (1.0 + 2.0 * w);
    (4.0 * d.sqrt() * z_p, z_p)
}

/// A cusp of the fold curves in dimensionless coordinates.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct RdOnsetPoint {
    pub z: f64,
    pub delta: f64,
    pub w: f64,
}

/// Both bistability onset (cusp) points; `lower` carries the smaller W.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct RdOnset {
    pub lower: RdOnsetPoint,
    pub upper: RdOnsetPoint,
}

/// Residual of the onset condition 4 D (1-z)^2 (4z - 1) = 1.
fn onset_residual(d: f64, z: f64) -> f64 {
    4.0 * d * (1.0 - z) * (1.0 - z) * (4.0 * z - 1.0) - 1.0
}

fn onset_point(d: f64, z0: f64) -> RdOnsetPoint {
    // Newton polish; guarded because the two cusps merge into a double
    // root of the onset condition at D = 1.
    let mut z = z0;
    for _ in 0..4 {
        let g = onset_residual(d, z);
        let dg = 24.0 * d * (1.0 - z) * (1.0 - 2.0 * z);
        if dg.abs() < 1e-8 || !g.is_finite() {
            break;
        }
        let step = g / dg;
        if step.abs() > 0.1 {
            break;
        }
        z -= step;
    }
    RdOnsetPoint {
        z,
        delta: 2.0 * d.sqrt() * (3.0 * z - 1.0),
        // Equivalent to 6 D (1-z)^2 - 1/2 on the onset locus but free of
        // the catastrophic cancellation of that form at large D.
        w: 2.0 * (1.0 - z) / (4.0 * z - 1.0),
    }
}

/// Onset (cusp) points of the bistable region; `None` when D < 1.
pub fn rd_onset_points(d: f64) -> Result<Option<RdOnset>> {
    if !(d > 0.0) {
        return Err(Error::InvalidParameter("onset points need D > 0".into()));
    }
    if d < 1.0 {
        return Ok(None);
    }
    // z_pm = (3 + 2 cos((2 (phi +- pi)) / 3)) / 4 with phi = atan(sinh x),
    // D = cosh^2 x.
    let sinh_x = (d - 1.0).sqrt();
    let phi = sinh_x.atan();
    let z_at = |sign: f64| {
        let theta = 2.0 * (phi + sign * std::f64::consts::PI) / 3.0;
        (3.0 + 2.0 * theta.cos()) / 4.0
    };
    let upper = onset_point(d, z_at(1.0)); // z -> 1/4, large W
    let lower = onset_point(d, z_at(-1.0)); // z -> 1, small W
    Ok(Some(RdOnset { lower, upper }))
}

/// Low-onset drive estimate omega_1 ~ 4 T1^{-1/2} T2^{-3/2} / |omega_K|,
/// valid in the large-D limit.
pub fn rd_onset_drive_estimate(t1: f64, t2: f64, omega_k: f64) -> f64 {
    4.0 / (t1.sqrt() * t2.powf(1.5) * omega_k.abs())
}

/// One point of a fold (jump) curve, parametrized by the double root z.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct RdJumpPoint {
    pub z: f64,
    pub delta: f64,
    pub w: f64,
}

/// The two fold branches delta = 4 sqrt(D) z^2 +- sqrt(16 z^2 (z-1)^2 D - 1).
#[derive(Debug, Clone, serde::Serialize)]
pub struct RdJumpCurves {
    pub bistable: bool,
    pub plus: Vec<RdJumpPoint>,
    pub minus: Vec<RdJumpPoint>,
}

/// z range on which the fold parametrization is real:
/// 4 sqrt(D) z (1 - z) >= 1.
pub fn rd_jump_z_range(d: f64) -> Option<(f64, f64)> {
    if d < 1.0 {
        return None;
    }
    let disc = 1.0 - 1.0 / d.sqrt();
    if disc < 0.0 {
        return None;
    }
    let half = 0.5 * disc.sqrt();
    Some((0.5 - half, 0.5 + half))
}

fn jump_point(d: f64, z: f64, branch: f64) -> Option<RdJumpPoint> {
    let s = 4.0 * d.sqrt();
    let rad = 16.0 * z * z * (z - 1.0) * (z - 1.0) * d - 1.0;
    if rad < 0.0 {
        return None;
    }
    let delta = s * z * z + branch * rad.sqrt();
    let w = -0.5 * (1.0 + (delta - s * z) * (delta - s * (3.0 * z - 2.0)));
    if w < 0.0 {
        return None;
    }
    Some(RdJumpPoint { z, delta, w })
}

/// Fold curves along a caller-supplied z grid; entries with W < 0 or an
/// imaginary radical are dropped.
pub fn rd_jump_curves(d: f64, z_grid: &[f64]) -> RdJumpCurves {
    if d < 1.0 {
        return RdJumpCurves {
            bistable: false,
            plus: Vec::new(),
            minus: Vec::new(),
        };
    }
    let plus = z_grid.iter().filter_map(|&z| jump_point(d, z, 1.0)).collect();
    let minus = z_grid.iter().filter_map(|&z| jump_point(d, z, -1.0)).collect();
    RdJumpCurves {
        bistable: true,
        plus,
        minus,
    }
}

/// Fold curves on an automatic z grid spanning the admissible range.
///
/// The grid clusters toward the endpoints (cosine spacing): the fold
/// detuning grows like sqrt(z - z_end) there, so uniform-z sampling
/// would leave delta gaps near the branch junctions.
pub fn rd_jump_curves_auto(d: f64, n: usize) -> RdJumpCurves {
    match rd_jump_z_range(d) {
        None => RdJumpCurves {
            bistable: false,
            plus: Vec::new(),
            minus: Vec::new(),
        },
        Some((lo, hi)) => {
            let grid = cosine_grid(lo, hi, n.max(2));
            rd_jump_curves(d, &grid)
        }
    }
}

/// n points on [lo, hi] clustered quadratically toward both endpoints.
pub fn cosine_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let t = k as f64 / (n - 1) as f64;
            lo + (hi - lo) * 0.5 * (1.0 - (std::f64::consts::PI * t).cos())
        })
        .collect()
}

/// Root census over a (delta, W) rectangle.
pub fn rd_stability_map(
    d: f64,
    delta_range: (f64, f64),
    w_range: (f64, f64),
    n_delta: usize,
    n_w: usize,
) -> Result<StabilityMap> {
    let base = RdParams::new(d, 0.0, 0.0)?;
    let detuning = linspace(delta_range.0, delta_range.1, n_delta)?;
    let power = linspace(w_range.0, w_range.1, n_w)?;
    let nd = detuning.len();
    let cells = map_indexed(nd * power.len(), |k| {
        let (i, j) = (k % nd, k / nd);
        let p = base.with_w_delta(power[j], detuning[i]);
        let states = rd_roots(&p);
        let stable = states
            .iter()
            .filter(|s| s.stability == RdStability::Stable)
            .count();
        (states.len() as u8, stable as u8)
    });
    Ok(StabilityMap {
        detuning,
        power,
        n_roots: cells.iter().map(|c| c.0).collect(),
        n_stable: cells.iter().map(|c| c.1).collect(),
    })
}

/// One plotting branch of z(delta) at fixed W.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RdResponseBranch {
    pub points: Vec<RdResponsePoint>,
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct RdResponsePoint {
    pub delta: f64,
    pub z: f64,
    pub stable: bool,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct RdResponseCurve {
    pub w: f64,
    pub branches: Vec<RdResponseBranch>,
}

/// Branch-resolved z(delta) for each requested drive power, branches
/// separated by continuity in z along the delta grid.
pub fn rd_response_curves(d: f64, w_list: &[f64], delta_grid: &[f64]) -> Vec<RdResponseCurve> {
    w_list
        .iter()
        .map(|&w| {
            let base = RdParams::new(d, w.max(0.0), 0.0).expect("valid params");
            let mut open: Vec<(f64, Vec<RdResponsePoint>)> = Vec::new();
            let mut closed: Vec<Vec<RdResponsePoint>> = Vec::new();
            for &delta in delta_grid {
                let states = rd_roots(&base.with_delta(delta));
                let mut taken = vec![false; open.len()];
                let mut next: Vec<(f64, Vec<RdResponsePoint>)> = Vec::new();
                for st in &states {
                    let pt = RdResponsePoint {
                        delta,
                        z: st.z,
                        stable: st.stability == RdStability::Stable,
                    };
                    // Attach to the nearest untaken open branch.
                    let mut best: Option<(usize, f64)> = None;
                    for (bi, (last_z, _)) in open.iter().enumerate() {
                        if taken[bi] {
                            continue;
                        }
                        let gap = (st.z - last_z).abs();
                        if best.map_or(true, |(_, g)| gap < g) {
                            best = Some((bi, gap));
                        }
                    }
                    match best {
                        Some((bi, gap)) if gap < 0.12 => {
                            taken[bi] = true;
                            let mut pts = std::mem::take(&mut open[bi].1);
                            pts.push(pt);
                            next.push((st.z, pts));
                        }
                        _ => next.push((st.z, vec![pt])),
                    }
                }
                for (bi, (_, pts)) in open.into_iter().enumerate() {
                    if !taken[bi] && !pts.is_empty() {
                        closed.push(pts);
                    }
                }
                open = next;
            }
            closed.extend(open.into_iter().map(|(_, pts)| pts));
            closed.retain(|b| !b.is_empty());
            RdResponseCurve {
                w,
                branches: closed.into_iter().map(|points| RdResponseBranch { points }).collect(),
            }
        })
        .collect()
}

/// Monic-cubic discriminant of F at (D, W, delta); vanishes on folds.
pub fn rd_discriminant(params: &RdParams) -> f64 {
    match rd_monic_coeffs(params) {
        Some((p, q, r)) => monic_cubic_discriminant(p, q, r),
        None => {
            // Linear in z when D = 0: never a fold.
            1.0
        }
    }
}
