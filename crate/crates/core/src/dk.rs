//! Duffing-Kerr resonator model: steady-state cubic for the mode energy,
//! reflectivity, peak/onset/jump analytics, and the planar flow with its
//! basins of attraction.
//!
//! The complex mode amplitude C obeys
//!
//! ```text
//! dC/dt = (i w_d - gamma) C - (i w_K + gamma_3) |C|^2 C - i sqrt(2 gamma_1 Omega_1)
//! ```
//!
//! whose fixed points solve C = -i sqrt(2 g1 W1) / ((-i w_d + gamma) +
//! (i w_K + gamma_3) E) with E = |C|^2; E then satisfies a cubic with up to
//! three nonnegative roots. Small perturbations decay at rate gamma in the
//! linear limit, which fixes the sign convention of the flow.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::mapgrid::{linspace, StabilityMap};
use crate::numeric::{cubic_real_roots, dedupe_roots, monic_cubic_discriminant, quadratic_real_roots};
use crate::parallel::map_indexed;
use crate::{Error, Result};

/// Rates of the bosonized resonator model. `omega_1` is the drive power in
/// rate units; `omega_d` the drive detuning.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DkParams {
    /// Antenna (external) coupling rate.
    pub gamma_1: f64,
    /// Intrinsic linear damping rate.
    #[serde(default)]
    pub gamma_2: f64,
    /// Nonlinear damping rate.
    #[serde(default)]
    pub gamma_3: f64,
    /// Kerr coefficient.
    #[serde(default)]
    pub omega_k: f64,
    /// Drive power (rate units).
    #[serde(default)]
    pub omega_1: f64,
    /// Drive detuning.
    #[serde(default)]
    pub omega_d: f64,
}

impl DkParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_1 > 0.0) {
            return Err(Error::InvalidParameter("gamma_1 must be > 0".into()));
        }
        if self.gamma_2 < 0.0 || self.gamma_3 < 0.0 || self.omega_1 < 0.0 {
            return Err(Error::InvalidParameter(
                "gamma_2, gamma_3 and omega_1 must be >= 0".into(),
            ));
        }
        Ok(())
    }

    /// Total linewidth gamma = gamma_1 + gamma_2.
    pub fn gamma(&self) -> f64 {
        self.gamma_1 + self.gamma_2
    }

    /// gamma_minus = gamma_1 - gamma_2.
    pub fn gamma_minus(&self) -> f64 {
        self.gamma_1 - self.gamma_2
    }

    pub fn with_drive(&self, omega_d: f64, omega_1: f64) -> Self {
        Self {
            omega_d,
            omega_1,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DkStability {
    StableSpiral,
    StableNode,
    Saddle,
}

impl DkStability {
    pub fn is_stable(&self) -> bool {
        matches!(self, DkStability::StableSpiral | DkStability::StableNode)
    }
}

/// One steady state of the mode.
#[derive(Debug, Clone, Copy)]
pub struct DkSteadyState {
    /// Mode energy E = |C|^2.
    pub e: f64,
    /// Complex amplitude.
    pub c: C64,
    pub stability: DkStability,
    /// Reflection amplitude off the antenna at this root.
    pub r: C64,
}

/// Monic cubic coefficients (p, q, r) of the steady-state equation
/// E^3 + p E^2 + q E + r = 0; `None` for the degenerate linear resonator.
pub fn dk_monic_coeffs(params: &DkParams) -> Option<(f64, f64, f64)> {
    let k2 = params.omega_k * params.omega_k + params.gamma_3 * params.gamma_3;
    if k2 == 0.0 {
        return None;
    }
    let g = params.gamma();
    Some((
        2.0 * (g * params.gamma_3 - params.omega_d * params.omega_k) / k2,
        (params.omega_d * params.omega_d + g * g) / k2,
        -2.0 * params.gamma_1 * params.omega_1 / k2,
    ))
}

/// Amplitude of the fixed point with energy E.
pub fn dk_amplitude(params: &DkParams, e: f64) -> C64 {
    let den = C64::new(params.gamma(), -params.omega_d)
        + C64::new(params.gamma_3, params.omega_k) * e;
    -C64::i() * (2.0 * params.gamma_1 * params.omega_1).sqrt() / den
}

/// Flow right-hand side dC/dt.
pub fn dk_rhs(params: &DkParams, c: C64) -> C64 {
    let e = c.norm_sqr();
    C64::new(-params.gamma(), params.omega_d) * c
        - C64::new(params.gamma_3, params.omega_k) * e * c
        - C64::i() * (2.0 * params.gamma_1 * params.omega_1).sqrt()
}

/// Jacobian of the flow in (Re C, Im C) at amplitude `c`.
pub fn dk_jacobian(params: &DkParams, c: C64) -> [[f64; 2]; 2] {
    let (x, y) = (c.re, c.im);
    let e = x * x + y * y;
    let g = params.gamma();
    let (k, g3, wd) = (params.omega_k, params.gamma_3, params.omega_d);
    [
        [
            -g - g3 * e - 2.0 * x * (g3 * x - k * y),
            -wd + k * e - 2.0 * y * (g3 * x - k * y),
        ],
        [
            wd - k * e - 2.0 * x * (k * x + g3 * y),
            -g - g3 * e - 2.0 * y * (k * x + g3 * y),
        ],
    ]
}

fn classify(params: &DkParams, c: C64) -> DkStability {
    let j = dk_jacobian(params, c);
    let tr = j[0][0] + j[1][1];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    if det <= 0.0 {
        DkStability::Saddle
    } else if tr * tr < 4.0 * det {
        DkStability::StableSpiral
    } else {
        // tr = -2 gamma - 4 gamma_3 E < 0 for all fixed points, so det > 0
        // always means attraction.
        DkStability::StableNode
    }
}

/// All nonnegative steady-state energies with amplitude, stability and
/// reflectivity. The degenerate linear resonator (omega_k = gamma_3 = 0)
/// is served by its closed-form Lorentzian branch.
pub fn dk_roots(params: &DkParams) -> Result<Vec<DkSteadyState>> {
    params.validate()?;
    let g = params.gamma();
    let energies: Vec<f64> = match dk_monic_coeffs(params) {
        None => {
            vec![
                2.0 * params.gamma_1 * params.omega_1
                    / (params.omega_d * params.omega_d + g * g),
            ]
        }
        Some((p, q, r)) => {
            let raw = cubic_real_roots(1.0, p, q, r);
            let scale = 1e-9 * raw.iter().fold(1.0f64, |m, e| m.max(e.abs()));
            dedupe_roots(raw, scale)
                .into_iter()
                .filter(|&e| e >= -1e-12)
                .map(|e| e.max(0.0))
                .collect()
        }
    };
    energies
        .into_iter()
        .map(|e| {
            let c = dk_amplitude(params, e);
            Ok(DkSteadyState {
                e,
                c,
                stability: classify(params, c),
                r: dk_reflectivity(params, e)?,
            })
        })
        .collect()
}

/// Reflection amplitude off the antenna:
/// r = (-i w_d - gamma_minus + (i w_K + gamma_3) E) / (-i w_d + gamma + (i w_K + gamma_3) E).
pub fn dk_reflectivity(params: &DkParams, e: f64) -> Result<C64> {
    if e < 0.0 {
        return Err(Error::InvalidParameter("reflectivity needs E >= 0".into()));
    }
    let kerr = C64::new(params.gamma_3, params.omega_k) * e;
    let den = C64::new(params.gamma(), -params.omega_d) + kerr;
    if den.norm() < 1e-300 {
        return Err(Error::SingularResponse(format!(
            "reflectivity denominator vanishes at E={e}"
        )));
    }
    Ok((C64::new(-params.gamma_minus(), -params.omega_d) + kerr) / den)
}

/// Peak point of the response: the detuning where the driven branch
/// satisfies omega_d = omega_K E.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DkPeak {
    pub omega_dp: f64,
    /// Energy on the peak condition.
    pub e: f64,
    /// First-order expansion omega_K 2 gamma_1 Omega_1 / gamma^2.
    pub low_power: f64,
}

/// Solve the peak condition exactly: substituting omega_d = omega_K E into
/// the steady-state cubic leaves E (gamma + gamma_3 E)^2 = 2 gamma_1
/// Omega_1, monotone in E >= 0, hence a unique root.
pub fn dk_peak(params: &DkParams) -> Result<DkPeak> {
    params.validate()?;
    let g = params.gamma();
    let rhs = 2.0 * params.gamma_1 * params.omega_1;
    let e = if params.gamma_3 == 0.0 {
        rhs / (g * g)
    } else {
        let roots = cubic_real_roots(
            params.gamma_3 * params.gamma_3,
            2.0 * g * params.gamma_3,
            g * g,
            -rhs,
        );
        *roots
            .iter()
            .find(|&&e| e >= -1e-12)
            .ok_or_else(|| Error::BracketFailure {
                a: 0.0,
                b: f64::INFINITY,
                msg: "peak-condition cubic has no nonnegative root".into(),
            })?
    };
    let e = e.max(0.0);
    Ok(DkPeak {
        omega_dp: params.omega_k * e,
        e,
        low_power: params.omega_k * rhs / (g * g),
    })
}

/// The bistability onset (cusp) point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DkOnset {
    pub omega_dc: f64,
    pub omega_1c: f64,
    pub e_c: f64,
}

/// Closed-form cusp; `None` when |omega_K| <= sqrt(3) gamma_3 (at exact
/// threshold the cusp energy diverges).
pub fn dk_onset(params: &DkParams) -> Option<DkOnset> {
    let k = params.omega_k.abs();
    let s3 = 3f64.sqrt();
    if k <= s3 * params.gamma_3 {
        return None;
    }
    let g = params.gamma();
    let g3 = params.gamma_3;
    let e_c = 2.0 * g / (s3 * (k - s3 * g3));
    let k2 = params.omega_k * params.omega_k + g3 * g3;
    let omega_1c = k2 * e_c * e_c * e_c / (2.0 * params.gamma_1);
    let omega_dc = g * params.omega_k.signum() * (4.0 * g3 * k + s3 * k2)
        / (params.omega_k * params.omega_k - 3.0 * g3 * g3);
    Some(DkOnset {
        omega_dc,
        omega_1c,
        e_c,
    })
}

/// One point of a fold curve, parametrized by the double-root energy.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DkJumpPoint {
    pub e: f64,
    pub omega_d: f64,
    pub omega_1: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DkJumpCurves {
    pub bistable: bool,
    pub plus: Vec<DkJumpPoint>,
    pub minus: Vec<DkJumpPoint>,
}

/// Radicand of the fold parametrization:
/// ((w_K^2 - 3 g3^2) E - 4 gamma g3) E - gamma^2.
fn jump_radicand(params: &DkParams, e: f64) -> f64 {
    let g = params.gamma();
    ((params.omega_k * params.omega_k - 3.0 * params.gamma_3 * params.gamma_3) * e
        - 4.0 * g * params.gamma_3)
        * e
        - g * g
}

fn dk_jump_point(params: &DkParams, e: f64, branch: f64) -> Option<DkJumpPoint> {
    let rad = jump_radicand(params, e);
    if rad < 0.0 || e < 0.0 {
        return None;
    }
    let omega_d = 2.0 * params.omega_k * e + branch * rad.sqrt();
    let g = params.gamma();
    let omega_1 = e * ((omega_d - params.omega_k * e).powi(2) + (g + params.gamma_3 * e).powi(2))
        / (2.0 * params.gamma_1);
    Some(DkJumpPoint { e, omega_d, omega_1 })
}

/// Fold curves along a caller-supplied energy grid.
pub fn dk_jump_curves(params: &DkParams, e_grid: &[f64]) -> DkJumpCurves {
    let plus: Vec<_> = e_grid
        .iter()
        .filter_map(|&e| dk_jump_point(params, e, 1.0))
        .collect();
    let minus: Vec<_> = e_grid
        .iter()
        .filter_map(|&e| dk_jump_point(params, e, -1.0))
        .collect();
    DkJumpCurves {
        bistable: !plus.is_empty() || !minus.is_empty(),
        plus,
        minus,
    }
}

/// Smallest energy with a real fold parametrization.
pub fn dk_jump_e_min(params: &DkParams) -> Option<f64> {
    let a = params.omega_k * params.omega_k - 3.0 * params.gamma_3 * params.gamma_3;
    if a <= 0.0 {
        return None;
    }
    let g = params.gamma();
    quadratic_real_roots(a, -4.0 * g * params.gamma_3, -g * g)
        .into_iter()
        .find(|&e| e > 0.0)
}

/// Fold curves on an automatic energy grid from the fold birth up to
/// `e_max` (defaults to several cusp energies when available).
pub fn dk_jump_curves_auto(params: &DkParams, e_max: Option<f64>, n: usize) -> DkJumpCurves {
    let Some(e_min) = dk_jump_e_min(params) else {
        return DkJumpCurves {
            bistable: false,
            plus: Vec::new(),
            minus: Vec::new(),
        };
    };
    let e_hi = e_max.unwrap_or_else(|| {
        dk_onset(params)
            .map(|o| 8.0 * o.e_c)
            .unwrap_or(8.0 * e_min)
    });
    let grid = linspace(e_min, e_hi.max(e_min * 1.0001), n.max(2)).expect("n >= 2");
    dk_jump_curves(params, &grid)
}

/// Root census over an (omega_dR, Omega_1R) rectangle, axes normalized by
/// the onset point.
pub fn dk_stability_map(
    params: &DkParams,
    omega_dr_range: (f64, f64),
    omega_1r_range: (f64, f64),
    n_detuning: usize,
    n_power: usize,
) -> Result<StabilityMap> {
    params.validate()?;
    let onset = dk_onset(params).ok_or_else(|| {
        Error::Unsupported("normalized stability map needs a bistability onset point".into())
    })?;
    let detuning = linspace(omega_dr_range.0, omega_dr_range.1, n_detuning)?;
    let power = linspace(omega_1r_range.0, omega_1r_range.1, n_power)?;
    let nd = detuning.len();
    let cells: Vec<Result<(u8, u8)>> = map_indexed(nd * power.len(), |k| {
        let (i, j) = (k % nd, k / nd);
        let p = params.with_drive(detuning[i] * onset.omega_dc, power[j] * onset.omega_1c);
        let states = dk_roots(&p)?;
        let stable = states.iter().filter(|s| s.stability.is_stable()).count();
        Ok((states.len() as u8, stable as u8))
    });
    let cells = cells.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(StabilityMap {
        detuning,
        power,
        n_roots: cells.iter().map(|c| c.0).collect(),
        n_stable: cells.iter().map(|c| c.1).collect(),
    })
}

/// Monic discriminant of the steady-state cubic; vanishes on folds.
pub fn dk_discriminant(params: &DkParams) -> f64 {
    match dk_monic_coeffs(params) {
        Some((p, q, r)) => monic_cubic_discriminant(p, q, r),
        None => 1.0,
    }
}

/// Scale-normalized fold residual; the raw discriminant scales like the
/// fourth power of the cubic coefficients, which reach O(1/omega_K^2)
/// here.
pub fn dk_discriminant_normalized(params: &DkParams) -> f64 {
    match dk_monic_coeffs(params) {
        Some((p, q, r)) => crate::numeric::monic_cubic_discriminant_normalized(p, q, r),
        None => 1.0,
    }
}

/// Integrate the flow from `c0`; samples every `stride` steps plus the
/// final state.
pub fn dk_flow(params: &DkParams, c0: C64, dt: f64, t_max: f64, stride: usize) -> Vec<(f64, C64)> {
    let stride = stride.max(1);
    let steps = (t_max / dt).ceil() as usize;
    let mut out = Vec::with_capacity(steps / stride + 2);
    let mut c = c0;
    out.push((0.0, c));
    for k in 0..steps {
        c = rk4_step(params, c, dt);
        if (k + 1) % stride == 0 || k + 1 == steps {
            out.push(((k + 1) as f64 * dt, c));
        }
    }
    out
}

fn rk4_step(params: &DkParams, c: C64, dt: f64) -> C64 {
    let k1 = dk_rhs(params, c);
    let k2 = dk_rhs(params, c + 0.5 * dt * k1);
    let k3 = dk_rhs(params, c + 0.5 * dt * k2);
    let k4 = dk_rhs(params, c + dt * k3);
    c + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// A classified fixed point of the flow.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DkFixedPoint {
    pub re: f64,
    pub im: f64,
    pub e: f64,
    pub class: DkStability,
    /// |dC/dt| at the fixed point.
    pub residual: f64,
}

/// Basin-of-attraction labeling of a grid of initial amplitudes.
#[derive(Debug, Clone, Serialize)]
pub struct FlowMap {
    pub re_grid: Vec<f64>,
    pub im_grid: Vec<f64>,
    /// Attractor index per cell (im-major: idx = j_im * n_re + i_re);
    /// -1 when unresolved within t_max.
    pub labels: Vec<i8>,
    /// All fixed points (stable and saddle).
    pub fixed_points: Vec<DkFixedPoint>,
    /// Indices into `fixed_points` of the attractors, in label order.
    pub attractors: Vec<usize>,
    /// Bisection-refined basin boundary points.
    pub separatrix: Vec<(f64, f64)>,
    /// False when the parameter point carries fewer than two attractors.
    pub bistable: bool,
}

/// Grid specification for [`dk_basins`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasinGrid {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub n_re: usize,
    pub n_im: usize,
}

impl BasinGrid {
    /// Square window centered on the fixed points with a relative margin.
    pub fn auto(fixed: &[DkFixedPoint], n: usize) -> Self {
        let r = fixed
            .iter()
            .map(|f| (f.re * f.re + f.im * f.im).sqrt())
            .fold(1.0f64, f64::max);
        let half = 2.5 * r;
        Self {
            re_min: -half,
            re_max: half,
            im_min: -half,
            im_max: half,
            n_re: n,
            n_im: n,
        }
    }
}

/// Label every grid cell by the attractor its trajectory reaches (within
/// distance 1e-6), and refine the basin boundary by bisection between
/// neighboring cells with different labels.
pub fn dk_basins(params: &DkParams, grid: Option<BasinGrid>, n: usize) -> Result<FlowMap> {
    params.validate()?;
    let states = dk_roots(params)?;
    let fixed_points: Vec<DkFixedPoint> = states
        .iter()
        .map(|s| DkFixedPoint {
            re: s.c.re,
            im: s.c.im,
            e: s.e,
            class: s.stability,
            residual: dk_rhs(params, s.c).norm(),
        })
        .collect();
    let attractors: Vec<usize> = fixed_points
        .iter()
        .enumerate()
        .filter(|(_, f)| f.class.is_stable())
        .map(|(i, _)| i)
        .collect();
    let bistable = attractors.len() >= 2;
    let grid = grid.unwrap_or_else(|| BasinGrid::auto(&fixed_points, n));
    let re_grid = linspace(grid.re_min, grid.re_max, grid.n_re)?;
    let im_grid = linspace(grid.im_min, grid.im_max, grid.n_im)?;

    // Step size resolves the fastest local rate over the window.
    let cmax2 = grid
        .re_min
        .abs()
        .max(grid.re_max.abs())
        .hypot(grid.im_min.abs().max(grid.im_max.abs()))
        .powi(2);
    let g = params.gamma();
    let rate = params.omega_d.hypot(g)
        + params.omega_k.hypot(params.gamma_3) * cmax2
        + (2.0 * params.gamma_1 * params.omega_1).sqrt();
    let dt = 0.05 / rate.max(1e-12);
    let t_max = 400.0 / g;
    let targets: Vec<C64> = attractors
        .iter()
        .map(|&i| C64::new(fixed_points[i].re, fixed_points[i].im))
        .collect();

    let classify_point = |c0: C64| -> i8 {
        let mut c = c0;
        let steps = (t_max / dt) as usize;
        for _ in 0..steps {
            for (label, t) in targets.iter().enumerate() {
                if (c - t).norm() < 1e-6 {
                    return label as i8;
                }
            }
            c = rk4_step(params, c, dt);
            if !c.re.is_finite() || !c.im.is_finite() {
                return -1;
            }
        }
        -1
    };

    let n_re = re_grid.len();
    let labels: Vec<i8> = map_indexed(n_re * im_grid.len(), |k| {
        let (i, j) = (k % n_re, k / n_re);
        classify_point(C64::new(re_grid[i], im_grid[j]))
    });

    // Boundary refinement: bisect every edge whose endpoints land in
    // different basins.
    let mut edges: Vec<(C64, C64)> = Vec::new();
    for j in 0..im_grid.len() {
        for i in 0..n_re {
            let here = labels[j * n_re + i];
            if here < 0 {
                continue;
            }
            if i + 1 < n_re {
                let right = labels[j * n_re + i + 1];
                if right >= 0 && here != right {
                    edges.push((
                        C64::new(re_grid[i], im_grid[j]),
                        C64::new(re_grid[i + 1], im_grid[j]),
                    ));
                }
            }
            if j + 1 < im_grid.len() {
                let up = labels[(j + 1) * n_re + i];
                if up >= 0 && here != up {
                    edges.push((
                        C64::new(re_grid[i], im_grid[j]),
                        C64::new(re_grid[i], im_grid[j + 1]),
                    ));
                }
            }
        }
    }
    let separatrix: Vec<(f64, f64)> = map_indexed(edges.len(), |k| {
        let (mut a, mut b) = edges[k];
        let la = classify_point(a);
        for _ in 0..14 {
            let mid = 0.5 * (a + b);
            if classify_point(mid) == la {
                a = mid;
            } else {
                b = mid;
            }
        }
        let m = 0.5 * (a + b);
        (m.re, m.im)
    });

    Ok(FlowMap {
        re_grid,
        im_grid,
        labels,
        fixed_points,
        attractors,
        separatrix,
        bistable,
    })
}
