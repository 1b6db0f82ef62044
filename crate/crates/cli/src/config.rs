//! Per-subcommand configuration documents.
//!
//! Every subcommand reads an optional JSON config (strict: unknown fields
//! are rejected) whose fields mirror the library parameter names; CLI
//! flags override the loaded values. Defaults reproduce the reference
//! parameter regimes so each subcommand runs out of the box.

use serde::{Deserialize, Serialize};

use spinres_core::classical::ClassicalParams;
use spinres_core::dk::{BasinGrid, DkParams};
use spinres_core::fit::ResponseMeta;
use spinres_core::imd::BranchSelect;
use spinres_core::master::{SweepAxis, SweepDirection};
use spinres_core::params::{SpinSystemParams, StaticSign};

fn fig1_spins() -> SpinSystemParams {
    let mut p = SpinSystemParams::bare(2);
    p.omega_k = 100.0;
    p.gamma_phi = 0.1;
    p.n0 = 1e-4;
    p.gamma_d = 100.0;
    p.omega_1 = 40.0;
    p
}

fn fig3_dk() -> DkParams {
    DkParams {
        gamma_1: 0.4,
        gamma_2: 0.6,
        gamma_3: 0.01,
        omega_k: -0.1,
        omega_1: 0.0,
        omega_d: 0.0,
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SweepRuns {
    Up,
    Down,
    Both,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub spin: SpinSystemParams,
    pub axis: SweepAxis,
    pub from: f64,
    pub to: f64,
    pub n_points: usize,
    pub direction: SweepRuns,
    pub dt: Option<f64>,
    pub t_max: f64,
    pub tol: Option<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            spin: fig1_spins(),
            axis: SweepAxis::OmegaD,
            from: 150.0,
            to: 250.0,
            n_points: 120,
            direction: SweepRuns::Both,
            dt: Some(2.5e-4),
            t_max: 60.0,
            tol: Some(1e-7),
        }
    }
}

impl SweepConfig {
    pub fn directions(&self) -> Vec<SweepDirection> {
        match self.direction {
            SweepRuns::Up => vec![SweepDirection::Up],
            SweepRuns::Down => vec![SweepDirection::Down],
            SweepRuns::Both => vec![SweepDirection::Up, SweepDirection::Down],
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    Thermal,
    MaximallyMixed,
    Bell,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum FrameChoice {
    Rotating,
    Lab,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    pub spin: SpinSystemParams,
    pub frame: FrameChoice,
    pub static_sign: StaticSign,
    pub initial: InitialState,
    pub dt: Option<f64>,
    pub t_max: f64,
    pub tol: Option<f64>,
    pub sample_every: usize,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        let mut spin = fig1_spins();
        spin.set_omega_d(205.0);
        Self {
            spin,
            frame: FrameChoice::Rotating,
            static_sign: StaticSign::MainText,
            initial: InitialState::Thermal,
            dt: Some(2.5e-4),
            t_max: 60.0,
            tol: Some(1e-9),
            sample_every: 200,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RdMapConfig {
    pub d: f64,
    pub delta_min: f64,
    pub delta_max: f64,
    pub w_min: f64,
    pub w_max: f64,
    pub n_delta: usize,
    pub n_w: usize,
}

impl Default for RdMapConfig {
    fn default() -> Self {
        Self {
            d: 3.0,
            delta_min: -1.0,
            delta_max: 6.0,
            w_min: 0.0,
            w_max: 9.5,
            n_delta: 400,
            n_w: 400,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RdCurvesConfig {
    pub d: f64,
    pub w_list: Vec<f64>,
    pub delta_min: f64,
    pub delta_max: f64,
    pub n_delta: usize,
}

impl Default for RdCurvesConfig {
    fn default() -> Self {
        Self {
            d: 3.0,
            // Spans below, inside and above the bistable power window.
            w_list: vec![0.05, 0.174, 0.5, 2.0, 8.54],
            delta_min: -1.0,
            delta_max: 8.0,
            n_delta: 1200,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RdOnsetConfig {
    pub d: f64,
    /// Optional physical rates for the onset-drive estimate.
    pub t1: Option<f64>,
    pub t2: Option<f64>,
    pub omega_k: Option<f64>,
    pub n_jump: usize,
}

impl Default for RdOnsetConfig {
    fn default() -> Self {
        Self {
            d: 3.0,
            t1: None,
            t2: None,
            omega_k: None,
            n_jump: 400,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DkMapConfig {
    pub dk: DkParams,
    pub omega_dr_min: f64,
    pub omega_dr_max: f64,
    pub omega_1r_min: f64,
    pub omega_1r_max: f64,
    pub n_detuning: usize,
    pub n_power: usize,
}

impl Default for DkMapConfig {
    fn default() -> Self {
        Self {
            dk: fig3_dk(),
            omega_dr_min: 0.2,
            omega_dr_max: 3.0,
            omega_1r_min: 0.05,
            omega_1r_max: 5.0,
            n_detuning: 300,
            n_power: 300,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DkReflectivityConfig {
    pub dk: DkParams,
    pub omega_1r_list: Vec<f64>,
    pub omega_dr_min: f64,
    pub omega_dr_max: f64,
    pub n_detuning: usize,
}

impl Default for DkReflectivityConfig {
    fn default() -> Self {
        Self {
            dk: fig3_dk(),
            omega_1r_list: vec![0.2, 1.0, 2.5],
            omega_dr_min: 0.0,
            omega_dr_max: 3.0,
            n_detuning: 1000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DkBasinsConfig {
    pub dk: DkParams,
    /// Operating point in onset-normalized coordinates.
    pub omega_dr: f64,
    pub omega_1r: f64,
    pub n: usize,
    pub grid: Option<BasinGrid>,
}

impl Default for DkBasinsConfig {
    fn default() -> Self {
        Self {
            dk: fig3_dk(),
            omega_dr: 1.45,
            omega_1r: 2.0,
            n: 100,
            grid: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalConfig {
    pub params: ClassicalParams,
    pub p0: [f64; 3],
    pub dt: f64,
    pub n_periods: f64,
    pub stride: usize,
    pub transient_periods: f64,
}

impl Default for ClassicalConfig {
    fn default() -> Self {
        Self {
            params: ClassicalParams {
                omega_0: 1.0,
                omega_k: 0.5,
                omega_a: 50.0,
                omega_1: 30.0,
                omega_t: 1.0 + 1e-5,
                t1: 1e-2,
                t2: 1e-2,
                s_z0: 0.9,
            },
            p0: [0.0, 0.0, 0.9],
            dt: 1e-4,
            n_periods: 60.0,
            stride: 20,
            transient_periods: 50.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImdPhysical {
    pub omega_k: f64,
    pub t1: f64,
    pub t2: f64,
    pub p_z0: f64,
    pub omega_1: f64,
    pub omega_d: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImdConfig {
    pub physical: ImdPhysical,
    pub branch: Option<BranchSelect>,
    pub omega_a: f64,
    pub omega_t: f64,
    pub gamma_1: f64,
    pub omega_min: Option<f64>,
    pub omega_max: Option<f64>,
    pub n_omega: usize,
}

impl Default for ImdConfig {
    fn default() -> Self {
        Self {
            physical: ImdPhysical {
                omega_k: 0.5,
                t1: 1.0,
                t2: 1.0,
                p_z0: 1.0,
                omega_1: 0.8,
                omega_d: 0.6,
            },
            branch: None,
            omega_a: 0.05,
            omega_t: 3.0,
            gamma_1: 0.4,
            omega_min: None,
            omega_max: None,
            n_omega: 1001,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum FitModelChoice {
    Rd,
    Dk,
    Both,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    /// Path to the measured CSV (f_hz,power,power_unit,kind).
    pub data: String,
    /// Path to the normalization sidecar JSON (f_p0, f_c, p_c,
    /// p_c_unit); alternatively supply `meta` inline.
    pub meta_path: Option<String>,
    pub meta: Option<ResponseMeta>,
    pub model: FitModelChoice,
    /// Per-parameter (lo, hi); lo == hi pins a parameter.
    pub rd_bounds: Option<Vec<(f64, f64)>>,
    pub dk_bounds: Option<Vec<(f64, f64)>>,
    pub restarts: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            data: "measured.csv".into(),
            meta_path: None,
            meta: None,
            model: FitModelChoice::Both,
            rd_bounds: None,
            dk_bounds: None,
            restarts: 8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    /// Saturation magnetization (A/m).
    pub m_s: f64,
    /// First-order anisotropy constant (J/m^3).
    pub k_c1: f64,
    /// Spin density (1/m^3).
    pub rho_s: f64,
    /// Sphere radius (m).
    pub r_s: f64,
    /// Static field (T).
    pub h_s: Option<f64>,
}

impl Default for MaterialConfig {
    fn default() -> Self {
        Self {
            m_s: 140e3,
            k_c1: -610.0,
            rho_s: 4.2e27,
            r_s: 125e-6,
            h_s: None,
        }
    }
}

