//! Measured-response ingestion, normalized theory curves for both
//! steady-state models, model fitting, and material-constant conversions.
//!
//! Measured peak and jump points (frequency, power) are normalized to
//! x = (f - f_p0) / (f_c - f_p0) and y = P / P_c, anchoring the
//! bistability onset at (1, 1). Both models' peak and fold curves are
//! re-expressed in the same coordinates by normalizing with their own
//! cusp; fitting then minimizes the RMS point-to-curve distance in
//! (x, ln y) space with a bounded Nelder-Mead simplex.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dk::{dk_onset, dk_peak, DkParams};
use crate::numeric::{nelder_mead, Bounds};
use crate::rd::{rd_jump_curves_auto, rd_onset_points, rd_peak_delta};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointKind {
    Peak,
    JumpUp,
    JumpDown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerUnit {
    Linear,
    Dbm,
}

pub fn to_linear(power: f64, unit: PowerUnit) -> f64 {
    match unit {
        PowerUnit::Linear => power,
        PowerUnit::Dbm => 10f64.powf(power / 10.0),
    }
}

/// One measured record.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MeasuredRecord {
    pub f_hz: f64,
    pub power: f64,
    pub power_unit: PowerUnit,
    pub kind: PointKind,
}

/// Normalization metadata: zero-power peak frequency, onset peak
/// frequency and onset power.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResponseMeta {
    pub f_p0: f64,
    pub f_c: f64,
    pub p_c: f64,
    pub p_c_unit: PowerUnit,
}

/// Measured sweep data plus its normalization anchors.
#[derive(Debug, Clone)]
pub struct MeasuredResponse {
    pub records: Vec<MeasuredRecord>,
    pub meta: ResponseMeta,
}

impl MeasuredResponse {
    pub fn validate(&self) -> Result<()> {
        if self.meta.f_c == self.meta.f_p0 {
            return Err(Error::IncompleteMetadata(
                "f_c must differ from f_p0".into(),
            ));
        }
        if to_linear(self.meta.p_c, self.meta.p_c_unit) <= 0.0 {
            return Err(Error::IncompleteMetadata("P_c must be positive".into()));
        }
        let peaks = self
            .records
            .iter()
            .filter(|r| r.kind == PointKind::Peak)
            .count();
        if peaks < 3 {
            return Err(Error::IncompleteMetadata(format!(
                "need at least 3 peak records to anchor f_p0, got {peaks}"
            )));
        }
        Ok(())
    }
}

/// A measured point in normalized coordinates.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NormalizedPoint {
    pub x: f64,
    pub y: f64,
    pub kind: PointKind,
}

/// Affine frequency map and power ratio; dBm converts to linear first.
pub fn normalize(data: &MeasuredResponse) -> Result<Vec<NormalizedPoint>> {
    data.validate()?;
    let f_dc = data.meta.f_c - data.meta.f_p0;
    let p_c = to_linear(data.meta.p_c, data.meta.p_c_unit);
    data.records
        .iter()
        .map(|r| {
            let y = to_linear(r.power, r.power_unit) / p_c;
            if y <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "nonpositive linear power {y} in record"
                )));
            }
            Ok(NormalizedPoint {
                x: (r.f_hz - data.meta.f_p0) / f_dc,
                y,
                kind: r.kind,
            })
        })
        .collect()
}

/// Inverse of [`normalize`] (linear power units).
pub fn denormalize(point: &NormalizedPoint, meta: &ResponseMeta) -> MeasuredRecord {
    MeasuredRecord {
        f_hz: meta.f_p0 + point.x * (meta.f_c - meta.f_p0),
        power: point.y * to_linear(meta.p_c, meta.p_c_unit),
        power_unit: PowerUnit::Linear,
        kind: point.kind,
    }
}

/// Model selector for fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelTag {
    Rd,
    Dk,
}

/// Theory curves in normalized (x, y) coordinates. Jump branches keep
/// their fold parametrization (plus/minus radical sign).
#[derive(Debug, Clone, Serialize)]
pub struct TheoryCurves {
    pub peak: Vec<(f64, f64)>,
    pub jump_plus: Vec<(f64, f64)>,
    pub jump_minus: Vec<(f64, f64)>,
}

impl TheoryCurves {
    pub fn has_jumps(&self) -> bool {
        !self.jump_plus.is_empty() || !self.jump_minus.is_empty()
    }
}

/// Curve-sampling control.
#[derive(Debug, Clone, Copy)]
pub struct CurveGrid {
    pub y_min: f64,
    pub y_max: f64,
    pub n: usize,
}

impl Default for CurveGrid {
    fn default() -> Self {
        Self {
            y_min: 0.05,
            y_max: 6.0,
            n: 400,
        }
    }
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (l0, l1) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| (l0 + (l1 - l0) * k as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Mean-field model curves normalized by the lower cusp (delta_-, W_-);
/// the cusp maps to (1, 1). Below D = 1 only the peak curve exists.
pub fn rd_theory_curves(d: f64, grid: &CurveGrid) -> Result<TheoryCurves> {
    if !(d > 0.0) {
        return Err(Error::InvalidParameter("theory curves need D > 0".into()));
    }
    let onset = rd_onset_points(d)?;
    let (delta_c, w_c) = match onset {
        Some(o) => (o.lower.delta, o.lower.w),
        None => {
            // No bistability: normalize by the zero-power peak scale so
            // the peak curve stays plottable.
            let (dp, _) = rd_peak_delta(d, 0.0);
            (dp, 1.0)
        }
    };
    let peak = log_grid(grid.y_min, grid.y_max, grid.n)
        .into_iter()
        .map(|y| {
            let (dp, _) = rd_peak_delta(d, y * w_c);
            (dp / delta_c, y)
        })
        .collect();
    let (jump_plus, jump_minus) = if onset.is_some() {
        let jc = rd_jump_curves_auto(d, 2 * grid.n);
        let keep = |pts: Vec<crate::rd::RdJumpPoint>| {
            pts.into_iter()
                .map(|p| (p.delta / delta_c, p.w / w_c))
                .filter(|&(_, y)| y > 0.0 && y <= grid.y_max)
                .collect::<Vec<_>>()
        };
        (keep(jc.plus), keep(jc.minus))
    } else {
        (Vec::new(), Vec::new())
    };
    Ok(TheoryCurves {
        peak,
        jump_plus,
        jump_minus,
    })
}

/// Duffing-Kerr curves normalized by the onset cusp (omega_dc, Omega_1c).
/// Takes rate ratios with gamma = gamma_1 + gamma_2 as the unit.
pub fn dk_theory_curves(
    gamma_1r: f64,
    omega_kr: f64,
    gamma_3r: f64,
    grid: &CurveGrid,
) -> Result<TheoryCurves> {
    let params = DkParams {
        gamma_1: gamma_1r,
        gamma_2: 1.0 - gamma_1r,
        gamma_3: gamma_3r,
        omega_k: omega_kr,
        omega_1: 0.0,
        omega_d: 0.0,
    };
    params.validate()?;
    if gamma_1r >= 1.0 {
        return Err(Error::InvalidParameter(
            "gamma_1/gamma must be < 1 (gamma_2 >= 0)".into(),
        ));
    }
    let onset = dk_onset(&params);
    let (omega_dc, omega_1c) = match onset {
        Some(o) => (o.omega_dc, o.omega_1c),
        None => {
            // Below the Kerr threshold only the peak curve survives;
            // normalize by the low-power pull scale.
            let g = params.gamma();
            let scale = omega_kr.abs().max(1e-12) / (g * g);
            (omega_kr.signum() * scale, 1.0)
        }
    };
    let peak = log_grid(grid.y_min, grid.y_max, grid.n)
        .into_iter()
        .map(|y| {
            let peak = dk_peak(&params.with_drive(0.0, y * omega_1c))?;
            Ok((peak.omega_dp / omega_dc, y))
        })
        .collect::<Result<Vec<_>>>()?;
    let (jump_plus, jump_minus) = match onset {
        Some(o) => {
            // Log-spaced energies make the nonuniform y(E) coverage
            // manageable. The near fold branch grows only linearly in E
            // (omega_d ~ omega_K E gives Omega_1 ~ E gamma^2 / 2 gamma_1),
            // so the ceiling must honor that scale as well as the cubic
            // far-branch one.
            let e_min = crate::dk::dk_jump_e_min(&params).expect("onset implies folds");
            let g = params.gamma();
            let e_linear = 2.4 * params.gamma_1 * grid.y_max * o.omega_1c / (g * g);
            let e_hi = (o.e_c * (3.0 * grid.y_max).cbrt().max(2.0) * 4.0)
                .max(e_linear)
                .max(2.0 * e_min);
            let n = 2 * grid.n;
            let e_grid: Vec<f64> = (0..n)
                .map(|k| {
                    let t = k as f64 / (n - 1) as f64;
                    e_min * (e_hi / e_min).powf(t)
                })
                .collect();
            let jc = crate::dk::dk_jump_curves(&params, &e_grid);
            let keep = |pts: Vec<crate::dk::DkJumpPoint>| {
                pts.into_iter()
                    .map(|p| (p.omega_d / omega_dc, p.omega_1 / omega_1c))
                    .filter(|&(_, y)| y > 0.0 && y <= grid.y_max)
                    .collect::<Vec<_>>()
            };
            (keep(jc.plus), keep(jc.minus))
        }
        None => (Vec::new(), Vec::new()),
    };
    Ok(TheoryCurves {
        peak,
        jump_plus,
        jump_minus,
    })
}

/// Squared distance from a point to a polyline in (x, ln y) space.
fn polyline_dist2(px: f64, py_ln: f64, curve: &[(f64, f64)]) -> f64 {
    if curve.is_empty() {
        return f64::INFINITY;
    }
    let mut best = f64::INFINITY;
    let mut prev: Option<(f64, f64)> = None;
    for &(cx, cy) in curve {
        let cy_ln = cy.ln();
        let d2 = (px - cx).powi(2) + (py_ln - cy_ln).powi(2);
        if d2 < best {
            best = d2;
        }
        if let Some((ax, ay)) = prev {
            // Segment projection.
            let (bx, by) = (cx, cy_ln);
            let (vx, vy) = (bx - ax, by - ay);
            let len2 = vx * vx + vy * vy;
            if len2 > 0.0 {
                let t = (((px - ax) * vx + (py_ln - ay) * vy) / len2).clamp(0.0, 1.0);
                let (qx, qy) = (ax + t * vx, ay + t * vy);
                let d2 = (px - qx).powi(2) + (py_ln - qy).powi(2);
                if d2 < best {
                    best = d2;
                }
            }
        }
        prev = Some((cx, cy_ln));
    }
    best
}

/// Per-point distance of normalized data to model curves; peaks match the
/// peak curve, jumps the nearer fold branch (ties broken by kind:
/// jump-up prefers the larger-x branch).
fn point_residuals(points: &[NormalizedPoint], curves: &TheoryCurves) -> Vec<f64> {
    // Mean x decides which parametric branch sits at larger detuning.
    let mean_x = |c: &[(f64, f64)]| {
        if c.is_empty() {
            f64::NEG_INFINITY
        } else {
            c.iter().map(|p| p.0).sum::<f64>() / c.len() as f64
        }
    };
    let plus_is_upper = mean_x(&curves.jump_plus) >= mean_x(&curves.jump_minus);
    points
        .iter()
        .map(|p| {
            let py_ln = p.y.ln();
            match p.kind {
                PointKind::Peak => polyline_dist2(p.x, py_ln, &curves.peak).sqrt(),
                kind => {
                    if !curves.has_jumps() {
                        return 1e3; // no fold exists for these parameters
                    }
                    let dp = polyline_dist2(p.x, py_ln, &curves.jump_plus);
                    let dm = polyline_dist2(p.x, py_ln, &curves.jump_minus);
                    if (dp - dm).abs() < 1e-24 {
                        // Tie: jump-up points belong to the upper-x branch.
                        let want_upper = kind == PointKind::JumpUp;
                        let pick_plus = want_upper == plus_is_upper;
                        if pick_plus { dp.sqrt() } else { dm.sqrt() }
                    } else {
                        dp.min(dm).sqrt()
                    }
                }
            }
        })
        .collect()
}

fn rms(v: &[f64]) -> f64 {
    (v.iter().map(|r| r * r).sum::<f64>() / v.len().max(1) as f64).sqrt()
}

/// Fit outcome.
#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub model: ModelTag,
    /// RD: [D]; DK: [gamma_1/gamma, omega_K/gamma, gamma_3/gamma].
    pub params: Vec<f64>,
    pub residual: f64,
    pub per_point: Vec<f64>,
    pub converged: bool,
    pub evals: usize,
    /// Best objective value per simplex iteration of the winning restart
    /// (non-increasing).
    pub history: Vec<f64>,
}

/// Default box bounds per model.
pub fn default_bounds(model: ModelTag) -> Bounds {
    match model {
        ModelTag::Rd => vec![(1.0001, 400.0)],
        ModelTag::Dk => vec![(0.05, 0.95), (-0.5, 0.5), (0.0, 0.2)],
    }
}

fn objective(model: ModelTag, grid: &CurveGrid, points: &[NormalizedPoint], x: &[f64]) -> f64 {
    let curves = match model {
        ModelTag::Rd => rd_theory_curves(x[0], grid),
        ModelTag::Dk => {
            // Exclude the no-onset region when jump data exists; the
            // residual then pushes the simplex back.
            dk_theory_curves(x[0], x[1], x[2], grid)
        }
    };
    match curves {
        Ok(c) => rms(&point_residuals(points, &c)),
        Err(_) => 1e6,
    }
}

/// Derivative-free fit of `model` to normalized points.
///
/// Multi-restart bounded Nelder-Mead; deterministic for a given seed.
/// Bounds with lo == hi pin a parameter (useful when a rate is known from
/// independent calibration).
pub fn fit_model(
    points: &[NormalizedPoint],
    model: ModelTag,
    bounds: &Bounds,
    restarts: usize,
    seed: u64,
) -> Result<FitResult> {
    if points.len() < 5 {
        return Err(Error::InvalidParameter(format!(
            "fit needs >= 5 normalized points, got {}",
            points.len()
        )));
    }
    let expect_dim = match model {
        ModelTag::Rd => 1,
        ModelTag::Dk => 3,
    };
    if bounds.len() != expect_dim {
        return Err(Error::InvalidParameter(format!(
            "{model:?} fit needs {expect_dim} bounds, got {}",
            bounds.len()
        )));
    }
    let y_max = points.iter().map(|p| p.y).fold(1.0f64, f64::max);
    let y_min = points.iter().map(|p| p.y).fold(1.0f64, f64::min);
    // Dense enough that the polyline-chord error stays well below the
    // 1e-6 self-fit residual scale, cheap enough for a few thousand
    // objective evaluations.
    let grid = CurveGrid {
        y_min: (0.5 * y_min).max(1e-3),
        y_max: (2.0 * y_max).max(4.0),
        n: 900,
    };
    let f = |x: &[f64]| objective(model, &grid, points, x);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<FitResult> = None;
    for _ in 0..restarts.max(1) {
        let x0: Vec<f64> = bounds
            .iter()
            .map(|&(lo, hi)| {
                if hi > lo {
                    rng.gen_range(lo..hi)
                } else {
                    lo
                }
            })
            .collect();
        let sol = nelder_mead(&f, &x0, bounds, 1e-15, 600);
        let replace = match &best {
            None => true,
            Some(b) => sol.fval < b.residual,
        };
        if replace {
            let curves = match model {
                ModelTag::Rd => rd_theory_curves(sol.x[0], &grid),
                ModelTag::Dk => dk_theory_curves(sol.x[0], sol.x[1], sol.x[2], &grid),
            };
            let per_point = curves
                .map(|c| point_residuals(points, &c))
                .unwrap_or_else(|_| vec![f64::INFINITY; points.len()]);
            best = Some(FitResult {
                model,
                params: sol.x.clone(),
                residual: sol.fval,
                per_point,
                converged: sol.converged,
                evals: sol.evals,
                history: sol.history.clone(),
            });
        }
    }
    let best = best.expect("at least one restart runs");
    if !best.residual.is_finite() || best.residual >= 1e6 {
        return Err(Error::FitNonConvergence {
            best: best.residual,
        });
    }
    Ok(best)
}

/// Sample synthetic normalized data from theory curves (peaks from the
/// peak curve, jump-up/down from the fold branches), with optional
/// multiplicative noise on x and y. Deterministic for a given seed.
pub fn sample_synthetic(
    curves: &TheoryCurves,
    n_peak: usize,
    n_jump: usize,
    noise: f64,
    seed: u64,
) -> Vec<NormalizedPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let pick = |v: &[(f64, f64)], k: usize, n: usize| -> (f64, f64) {
        let idx = (k * (v.len() - 1)) / n.max(1);
        v[idx.min(v.len() - 1)]
    };
    for k in 0..n_peak {
        let (x, y) = pick(&curves.peak, k, n_peak.saturating_sub(1).max(1));
        out.push(NormalizedPoint {
            x,
            y,
            kind: PointKind::Peak,
        });
    }
    let mean_x = |c: &[(f64, f64)]| {
        if c.is_empty() {
            f64::NEG_INFINITY
        } else {
            c.iter().map(|p| p.0).sum::<f64>() / c.len() as f64
        }
    };
    let plus_is_upper = mean_x(&curves.jump_plus) >= mean_x(&curves.jump_minus);
    for (branch, pts) in [(true, &curves.jump_plus), (false, &curves.jump_minus)] {
        if pts.is_empty() {
            continue;
        }
        let kind = if branch == plus_is_upper {
            PointKind::JumpUp
        } else {
            PointKind::JumpDown
        };
        for k in 0..n_jump {
            let (x, y) = pick(pts, k, n_jump.saturating_sub(1).max(1));
            out.push(NormalizedPoint { x, y, kind });
        }
    }
    if noise > 0.0 {
        for p in out.iter_mut() {
            // Box-Muller pairs; scale stays comparable for x and ln y.
            let u1: f64 = rng.gen_range(1e-12..1.0);
            let u2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let g1 = (-2.0 * u1.ln()).sqrt() * u2.cos();
            let g2 = (-2.0 * u1.ln()).sqrt() * u2.sin();
            p.x *= 1.0 + noise * g1;
            p.y *= 1.0 + noise * g2;
        }
    }
    out
}

/// Material-rate conversions. The gyromagnetic ratio enters as
/// gamma_e / 2 pi = 28 GHz/T; the published anisotropy value corresponds
/// to the Hz (cycles) convention, so both tagged values are returned.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MaterialRates {
    /// Total spin count N_s = (4 pi R_s^3 / 3) rho_s.
    pub n_s: f64,
    /// omega_K in Hz (cycles): 2 (gamma_e/2pi) K_c1 / (N_s M_s).
    pub omega_k_hz: f64,
    /// omega_K in rad/s: 2 pi times the Hz value.
    pub omega_k_rad: f64,
    /// Kittel frequency f_m = (gamma_e/2pi) mu_0 H_s in Hz, when H_s given
    /// (H_s in tesla).
    pub f_m_hz: Option<f64>,
    pub omega_m_rad: Option<f64>,
}

/// gamma_e / 2 pi in Hz per tesla.
pub const GAMMA_E_OVER_2PI: f64 = 28.0e9;

/// Anisotropy and Kittel rates from material constants:
/// `m_s` saturation magnetization (A/m), `k_c1` first anisotropy constant
/// (J/m^3), `rho_s` spin density (1/m^3), `r_s` sphere radius (m),
/// `h_s` static field in tesla.
pub fn material_rates(
    m_s: f64,
    k_c1: f64,
    rho_s: f64,
    r_s: f64,
    h_s: Option<f64>,
) -> Result<MaterialRates> {
    if m_s <= 0.0 || rho_s <= 0.0 || r_s <= 0.0 {
        return Err(Error::InvalidParameter(
            "material constants must be positive (K_c1 may be negative)".into(),
        ));
    }
    let volume = 4.0 / 3.0 * std::f64::consts::PI * r_s.powi(3);
    let n_s = volume * rho_s;
    let omega_k_hz = 2.0 * GAMMA_E_OVER_2PI * k_c1 / (n_s * m_s);
    let f_m_hz = h_s.map(|h| GAMMA_E_OVER_2PI * h);
    Ok(MaterialRates {
        n_s,
        omega_k_hz,
        omega_k_rad: std::f64::consts::TAU * omega_k_hz,
        f_m_hz,
        omega_m_rad: f_m_hz.map(|f| std::f64::consts::TAU * f),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn meta() -> ResponseMeta {
        ResponseMeta {
            f_p0: 3.0e9,
            f_c: 3.001e9,
            p_c: 15.0,
            p_c_unit: PowerUnit::Dbm,
        }
    }

    fn record(f_hz: f64, power: f64, unit: PowerUnit, kind: PointKind) -> MeasuredRecord {
        MeasuredRecord {
            f_hz,
            power,
            power_unit: unit,
            kind,
        }
    }

    #[test]
    fn normalization_anchors() {
        let m = meta();
        let data = MeasuredResponse {
            records: vec![
                record(m.f_c, 15.0, PowerUnit::Dbm, PointKind::Peak), // the onset record
                record(m.f_p0, 10f64.powf(1.5) / 2.0, PowerUnit::Linear, PointKind::Peak),
                record(3.0005e9, 18.0, PowerUnit::Dbm, PointKind::JumpUp),
                record(3.0002e9, 12.0, PowerUnit::Dbm, PointKind::Peak),
            ],
            meta: m,
        };
        let pts = normalize(&data).unwrap();
        // Onset record maps to (1, 1).
        assert_abs_diff_eq!(pts[0].x, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pts[0].y, 1.0, epsilon = 1e-12);
        // f = f_p0 at half the onset power maps to (0, 0.5).
        assert_abs_diff_eq!(pts[1].x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pts[1].y, 0.5, epsilon = 1e-12);
        // 18 dBm over P_c = 15 dBm: y = 10^0.3.
        assert_relative_eq!(pts[2].y, 10f64.powf(0.3), max_relative = 1e-12);
    }

    #[test]
    fn normalization_round_trips() {
        let m = meta();
        let data = MeasuredResponse {
            records: vec![
                record(3.0002e9, 13.0, PowerUnit::Dbm, PointKind::Peak),
                record(3.0007e9, 17.5, PowerUnit::Dbm, PointKind::JumpDown),
                record(2.9998e9, 3.2, PowerUnit::Linear, PointKind::Peak),
                record(3.0004e9, 1.0, PowerUnit::Linear, PointKind::Peak),
            ],
            meta: m,
        };
        for (r, p) in data.records.iter().zip(normalize(&data).unwrap()) {
            let back = denormalize(&p, &m);
            assert_relative_eq!(back.f_hz, r.f_hz, max_relative = 1e-12);
            assert_relative_eq!(
                back.power,
                to_linear(r.power, r.power_unit),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn normalization_requires_metadata() {
        let mut m = meta();
        m.f_c = m.f_p0;
        let data = MeasuredResponse {
            records: vec![record(3.0e9, 1.0, PowerUnit::Linear, PointKind::Peak); 3],
            meta: m,
        };
        assert!(normalize(&data).is_err());
    }

    #[test]
    fn scale_invariance_of_normalization() {
        let m = ResponseMeta {
            f_p0: 1e9,
            f_c: 1.002e9,
            p_c: 4.0,
            p_c_unit: PowerUnit::Linear,
        };
        let recs = vec![
            record(1.0005e9, 2.0, PowerUnit::Linear, PointKind::Peak),
            record(1.0015e9, 5.0, PowerUnit::Linear, PointKind::Peak),
            record(1.0018e9, 6.0, PowerUnit::Linear, PointKind::Peak),
            record(1.0021e9, 7.0, PowerUnit::Linear, PointKind::JumpUp),
        ];
        let a = normalize(&MeasuredResponse {
            records: recs.clone(),
            meta: m,
        })
        .unwrap();
        let scaled = MeasuredResponse {
            records: recs
                .iter()
                .map(|r| record(r.f_hz, r.power * 12.5, PowerUnit::Linear, r.kind))
                .collect(),
            meta: ResponseMeta {
                p_c: m.p_c * 12.5,
                ..m
            },
        };
        let b = normalize(&scaled).unwrap();
        for (p, q) in a.iter().zip(b.iter()) {
            assert_relative_eq!(p.x, q.x, max_relative = 1e-12);
            assert_relative_eq!(p.y, q.y, max_relative = 1e-12);
        }
    }

    #[test]
    fn rd_curves_cusp_at_unit_point() {
        // D = 1: the jump curves collapse to the cusp (1, 1) under the
        // cusp normalization.
        let c = rd_theory_curves(1.0, &CurveGrid::default()).unwrap();
        for &(x, y) in c.jump_plus.iter().chain(c.jump_minus.iter()) {
            assert_abs_diff_eq!(x, 1.0, epsilon = 1e-4);
            assert_abs_diff_eq!(y, 1.0, epsilon = 1e-4);
        }
    }

    #[test]
    fn rd_peak_at_onset_power_approaches_cusp_with_d() {
        // The peak detuning at onset power, 4 sqrt(D)/(1 + 2 W_-), sits
        // above the cusp detuning by 4/3 at D = 1 and converges to it as
        // D grows; under the cusp normalization the peak curve therefore
        // passes near (1,1) only away from D ~ 1.
        let x_at = |d: f64| {
            let onset = rd_onset_points(d).unwrap().unwrap();
            let (dp, _) = rd_peak_delta(d, onset.lower.w);
            dp / onset.lower.delta
        };
        assert_relative_eq!(x_at(1.0), 4.0 / 3.0, max_relative = 1e-9);
        let (x3, x10, x100) = (x_at(3.0), x_at(10.0), x_at(100.0));
        assert!(x3 - 1.0 < 0.05, "x(3) = {x3}");
        assert!(x10 - 1.0 < x3 - 1.0 && x100 - 1.0 < x10 - 1.0);
        assert!(x100 - 1.0 < 6e-3);
    }

    #[test]
    fn rd_curves_match_module_outputs() {
        let d = 3.0;
        let onset = rd_onset_points(d).unwrap().unwrap();
        let grid = CurveGrid::default();
        let c = rd_theory_curves(d, &grid).unwrap();
        // Denormalizing a jump sample must land on the fold locus:
        // delta = 4 sqrt(D) z^2 +- sqrt(...) for some admissible z.
        for &(x, y) in c.jump_plus.iter().step_by(50) {
            let delta = x * onset.lower.delta;
            let w = y * onset.lower.w;
            let p = crate::rd::RdParams::new(d, w, delta).unwrap();
            assert!(crate::rd::rd_discriminant(&p).abs() < 1e-6);
        }
    }

    #[test]
    fn dk_curves_cusp_at_unit_point() {
        let c = dk_theory_curves(0.4, -0.1, 0.01, &CurveGrid::default()).unwrap();
        // Fold branches touch (1, 1) at the cusp.
        let near = |pts: &[(f64, f64)]| {
            pts.iter()
                .map(|&(x, y)| ((x - 1.0).powi(2) + (y - 1.0).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min)
        };
        assert!(near(&c.jump_plus).min(near(&c.jump_minus)) < 2e-2);
    }

    #[test]
    fn dk_jump_curves_widen_with_power_when_gamma3_vanishes() {
        let c = dk_theory_curves(0.4, -0.1, 0.0, &CurveGrid { y_min: 0.05, y_max: 40.0, n: 1200 })
            .unwrap();
        // Width of the bistable x-window grows monotonically with y:
        // interpolate each branch's x at the target power.
        let x_at = |pts: &[(f64, f64)], y_target: f64| -> Option<f64> {
            let mut prev: Option<(f64, f64)> = None;
            for &(x, y) in pts {
                if let Some((px, py)) = prev {
                    if (py - y_target) * (y - y_target) <= 0.0 && py != y {
                        let t = (y_target - py) / (y - py);
                        return Some(px + t * (x - px));
                    }
                }
                prev = Some((x, y));
            }
            None
        };
        let width_at = |y: f64| -> f64 {
            let a = x_at(&c.jump_plus, y).expect("plus branch covers target");
            let b = x_at(&c.jump_minus, y).expect("minus branch covers target");
            (a - b).abs()
        };
        let (w2, w5, w15) = (width_at(2.0), width_at(5.0), width_at(15.0));
        assert!(w2 > 0.0 && w5 > w2 && w15 > w5, "{w2} {w5} {w15}");
    }

    #[test]
    fn dk_below_threshold_has_peak_only() {
        let c = dk_theory_curves(0.4, -0.01, 0.05, &CurveGrid::default()).unwrap();
        assert!(!c.has_jumps());
        assert!(!c.peak.is_empty());
    }

    #[test]
    fn rd_self_fit_recovers_d() {
        let truth = rd_theory_curves(3.0, &CurveGrid::default()).unwrap();
        let pts = sample_synthetic(&truth, 8, 6, 0.0, 1);
        let fit = fit_model(&pts, ModelTag::Rd, &default_bounds(ModelTag::Rd), 6, 42).unwrap();
        assert!(fit.residual < 1e-6, "residual {}", fit.residual);
        assert_relative_eq!(fit.params[0], 3.0, max_relative = 1e-3);
        // Monotone history.
        for w in fit.history.windows(2) {
            assert!(w[1] <= w[0] + 1e-15);
        }
    }

    #[test]
    fn noisy_rd_fit_within_five_percent() {
        let truth = rd_theory_curves(3.0, &CurveGrid::default()).unwrap();
        let pts = sample_synthetic(&truth, 10, 8, 0.01, 7);
        let fit = fit_model(&pts, ModelTag::Rd, &default_bounds(ModelTag::Rd), 6, 43).unwrap();
        assert!(
            (fit.params[0] / 3.0 - 1.0).abs() < 0.05,
            "D = {}",
            fit.params[0]
        );
    }

    #[test]
    fn cross_model_discrimination() {
        // Noiseless RD data: the RD fit nails it, the DK fit cannot get
        // within 10x of that residual.
        let truth = rd_theory_curves(3.0, &CurveGrid::default()).unwrap();
        let pts = sample_synthetic(&truth, 8, 6, 0.0, 2);
        let rd = fit_model(&pts, ModelTag::Rd, &default_bounds(ModelTag::Rd), 6, 11).unwrap();
        let dk = fit_model(&pts, ModelTag::Dk, &default_bounds(ModelTag::Dk), 8, 11).unwrap();
        assert!(rd.residual < 1e-6);
        assert!(
            dk.residual > 10.0 * rd.residual.max(1e-9),
            "dk residual {} vs rd {}",
            dk.residual,
            rd.residual
        );
    }

    #[test]
    fn fit_requires_enough_points() {
        let truth = rd_theory_curves(2.0, &CurveGrid::default()).unwrap();
        let pts = sample_synthetic(&truth, 2, 1, 0.0, 3);
        assert!(pts.len() < 5);
        assert!(fit_model(&pts, ModelTag::Rd, &default_bounds(ModelTag::Rd), 2, 1).is_err());
    }

    #[test]
    fn yig_material_rates() {
        // M_s = 140 kA/m, K_c1 = -610 J/m^3, rho_s = 4.2e21 cm^-3,
        // R_s = 125 um.
        let rates = material_rates(140e3, -610.0, 4.2e27, 125e-6, Some(0.1)).unwrap();
        assert_relative_eq!(rates.omega_k_hz, -7.1e-9, max_relative = 0.01);
        // Doubling the radius scales N_s by 8 and omega_K by 1/8.
        let big = material_rates(140e3, -610.0, 4.2e27, 250e-6, None).unwrap();
        assert_relative_eq!(big.n_s, 8.0 * rates.n_s, max_relative = 1e-12);
        assert_relative_eq!(big.omega_k_hz, rates.omega_k_hz / 8.0, max_relative = 1e-12);
        // H_s = 0.1 T -> f_m = 2.8 GHz.
        assert_relative_eq!(rates.f_m_hz.unwrap(), 2.8e9, max_relative = 1e-12);
        assert!(material_rates(-1.0, 1.0, 1.0, 1.0, None).is_err());
    }
}
