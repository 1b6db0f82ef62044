//! Command-line front end: parameter documents in, CSV/JSON artifacts
//! out, one subcommand per reproducible figure or analysis.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use spinres_core::classical::{detect_limit_cycle, integrate_classical, to_rotating_frame};
use spinres_core::dk::{dk_basins, dk_onset, dk_roots, dk_stability_map};
use spinres_core::fit::{
    default_bounds, fit_model, material_rates, normalize, FitResult, MeasuredRecord,
    MeasuredResponse, ModelTag, NormalizedPoint, PointKind, PowerUnit, ResponseMeta,
};
use spinres_core::imd::{default_omega_grid, imd_gain, imd_operating_point};
use spinres_core::master::{
    hysteresis_sweep, integrate_to_steady, DensityOperator, Frame, IntegrationOptions, SweepSpec,
};
use spinres_core::mapgrid::linspace;
use spinres_core::rd::{
    rd_jump_curves_auto, rd_onset_points, rd_onset_drive_estimate, rd_response_curves,
    rd_stability_map, RdPhysical,
};
use spinres_core::Error as CoreError;

use config::*;
use output::{fmt_f64, write_csv, write_json, RunContext};

#[derive(Parser)]
#[command(
    name = "spinres",
    version,
    about = "Driven spin-resonator bistability: simulation and analysis artifacts"
)]
struct Cli {
    /// JSON parameter document; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for artifacts and the run manifest.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Seed for stochastic steps (fit restarts).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker-thread cap for grid parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct SpinOverrides {
    /// Override spin count L.
    #[arg(long)]
    l: Option<usize>,
    #[arg(long)]
    omega_k: Option<f64>,
    #[arg(long)]
    omega_1: Option<f64>,
    #[arg(long)]
    gamma_1: Option<f64>,
    #[arg(long)]
    gamma_phi: Option<f64>,
    #[arg(long)]
    n0: Option<f64>,
    #[arg(long)]
    gamma_d: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
}

impl SpinOverrides {
    fn apply(&self, spin: &mut spinres_core::params::SpinSystemParams) {
        if let Some(v) = self.l {
            spin.l = v;
        }
        if let Some(v) = self.omega_k {
            spin.omega_k = v;
        }
        if let Some(v) = self.omega_1 {
            spin.omega_1 = v;
        }
        if let Some(v) = self.gamma_1 {
            spin.gamma_1 = v;
        }
        if let Some(v) = self.gamma_phi {
            spin.gamma_phi = v;
        }
        if let Some(v) = self.n0 {
            spin.n0 = v;
        }
        if let Some(v) = self.gamma_d {
            spin.gamma_d = v;
        }
        if let Some(v) = self.eta {
            spin.eta = v;
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the master equation to steady state.
    Evolve {
        #[command(flatten)]
        spin: SpinOverrides,
        /// Detuning omega_d = omega_T - omega_0.
        #[arg(long)]
        omega_d: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Warm-started steady-state sweeps (hysteresis).
    Sweep {
        #[command(flatten)]
        spin: SpinOverrides,
        #[arg(long)]
        from: Option<f64>,
        #[arg(long)]
        to: Option<f64>,
        #[arg(long)]
        n_points: Option<usize>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Mean-field stability map over (delta, W).
    RdMap {
        #[arg(long)]
        d: Option<f64>,
        #[arg(long)]
        n_delta: Option<usize>,
        #[arg(long)]
        n_w: Option<usize>,
        #[arg(long)]
        delta_min: Option<f64>,
        #[arg(long)]
        delta_max: Option<f64>,
        #[arg(long)]
        w_min: Option<f64>,
        #[arg(long)]
        w_max: Option<f64>,
    },
    /// Branch-resolved mean-field response curves z(delta).
    RdCurves {
        #[arg(long)]
        d: Option<f64>,
        #[arg(long)]
        n_delta: Option<usize>,
    },
    /// Mean-field onset (cusp) points and jump curves.
    RdOnset {
        #[arg(long)]
        d: Option<f64>,
    },
    /// Kerr-resonator stability map in onset-normalized coordinates.
    DkMap {
        #[arg(long)]
        gamma_1: Option<f64>,
        #[arg(long)]
        gamma_2: Option<f64>,
        #[arg(long)]
        gamma_3: Option<f64>,
        #[arg(long)]
        omega_k: Option<f64>,
        #[arg(long)]
        n_detuning: Option<usize>,
        #[arg(long)]
        n_power: Option<usize>,
    },
    /// Reflectivity |r| along detuning for a set of powers.
    DkReflectivity {
        #[arg(long)]
        gamma_1: Option<f64>,
        #[arg(long)]
        gamma_3: Option<f64>,
        #[arg(long)]
        omega_k: Option<f64>,
        #[arg(long)]
        n_detuning: Option<usize>,
    },
    /// Basins of attraction of the Kerr-mode flow at one drive point.
    DkBasins {
        #[arg(long)]
        omega_dr: Option<f64>,
        #[arg(long)]
        omega_1r: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Classical polarization dynamics and limit-cycle detection.
    Classical {
        #[arg(long)]
        omega_a: Option<f64>,
        #[arg(long)]
        omega_1: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        n_periods: Option<f64>,
    },
    /// Intermodulation conversion-gain spectrum.
    Imd {
        #[arg(long)]
        omega_a: Option<f64>,
        #[arg(long)]
        omega_d: Option<f64>,
        #[arg(long)]
        n_omega: Option<usize>,
    },
    /// Fit measured peak/jump points against both models.
    Fit {
        /// Measured CSV path (f_hz,power,power_unit,kind).
        #[arg(long)]
        data: Option<PathBuf>,
        /// Normalization sidecar JSON path.
        #[arg(long)]
        meta: Option<PathBuf>,
        #[arg(long)]
        restarts: Option<usize>,
    },
    /// Material constants to anisotropy/Kittel rates.
    Material {
        #[arg(long)]
        m_s: Option<f64>,
        #[arg(long)]
        k_c1: Option<f64>,
        #[arg(long)]
        rho_s: Option<f64>,
        #[arg(long)]
        r_s: Option<f64>,
        #[arg(long)]
        h_s: Option<f64>,
    },
}

/// Exit code 2: bad input; exit code 3: numerical failure.
enum RunError {
    Input(String),
    Numerical(String),
}

impl From<CoreError> for RunError {
    fn from(e: CoreError) -> Self {
        match &e {
            CoreError::IntegrationInstability { .. }
            | CoreError::SingularResponse(_)
            | CoreError::BracketFailure { .. }
            | CoreError::FitNonConvergence { .. }
            | CoreError::SweepPoint { .. } => RunError::Numerical(e.to_string()),
            _ => RunError::Input(e.to_string()),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Input(e.to_string())
    }
}

fn load_config<T: Default + DeserializeOwned + Serialize>(
    path: &Option<PathBuf>,
) -> Result<T, RunError> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| RunError::Input(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| RunError::Input(format!("config {}: {e}", p.display())))
        }
    }
}

fn config_value<T: Serialize>(cfg: &T) -> serde_json::Value {
    serde_json::to_value(cfg).expect("config serializes")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(RunError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(RunError::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
    }
}

fn integration_options(dt: Option<f64>, t_max: f64, tol: Option<f64>) -> IntegrationOptions {
    IntegrationOptions {
        dt,
        t_max,
        tol,
        check_every: 2000,
        sample_every: 200,
        ..Default::default()
    }
}

fn run(cli: Cli) -> Result<(), RunError> {
    match cli.command {
        Command::Evolve {
            spin,
            omega_d,
            dt,
            t_max,
            tol,
        } => {
            let mut cfg: EvolveConfig = load_config(&cli.config)?;
            spin.apply(&mut cfg.spin);
            if let Some(v) = omega_d {
                cfg.spin.set_omega_d(v);
            }
            if dt.is_some() {
                cfg.dt = dt;
            }
            if let Some(v) = t_max {
                cfg.t_max = v;
            }
            if tol.is_some() {
                cfg.tol = tol;
            }
            let mut ctx = RunContext::new(
                cli.out,
                "evolve",
                cli.seed,
                cli.threads,
                config_value(&cfg),
            )?;
            run_evolve(&cfg, &mut ctx)?;
            ctx.finish()?;
            Ok(())
        }
        Command::Sweep {
            spin,
            from,
            to,
            n_points,
            dt,
            t_max,
            tol,
        } => {
            let mut cfg: SweepConfig = load_config(&cli.config)?;
            spin.apply(&mut cfg.spin);
            if let Some(v) = from {
                cfg.from = v;
            }
            if let Some(v) = to {
                cfg.to = v;
            }
            if let Some(v) = n_points {
                cfg.n_points = v;
            }
            if dt.is_some() {
                cfg.dt = dt;
            }
            if let Some(v) = t_max {
                cfg.t_max = v;
            }
            if tol.is_some() {
                cfg.tol = tol;
            }
            let mut ctx =
                RunContext::new(cli.out, "sweep", cli.seed, cli.threads, config_value(&cfg))?;
            run_sweep(&cfg, &mut ctx)?;
            ctx.finish()?;
            Ok(())
        }
        Command::RdMap {
            d,
            n_delta,
            n_w,
            delta_min,
            delta_max,
            w_min,
            w_max,
        } => {
            let mut cfg: RdMapConfig = load_config(&cli.config)?;
            for (slot, v) in [
                (&mut cfg.d, d),
                (&mut cfg.delta_min, delta_min),
                (&mut cfg.delta_max, delta_max),
                (&mut cfg.w_min, w_min),
                (&mut cfg.w_max, w_max),
            ] {
                if let Some(v) = v {
                    *slot = v;
                }
            }
            if let Some(v) = n_delta {
                cfg.n_delta = v;
            }
            if let Some(v) = n_w {
                cfg.n_w = v;
            }
            let mut ctx =
                RunContext::new(cli.out, "rd-map", cli.seed, cli.threads, config_value(&cfg))?;
            let map = rd_stability_map(
                cfg.d,
                (cfg.delta_min, cfg.delta_max),
                (cfg.w_min, cfg.w_max),
                cfg.n_delta,
                cfg.n_w,
            )?;
            write_map_csv(&mut ctx, "rd_map.csv", "delta,W,n_roots,n_stable", &map)?;
            ctx.finish()?;
            Ok(())
        }
        Command::RdCurves { d, n_delta } => {
            let mut cfg: RdCurvesConfig = load_config(&cli.config)?;
            if let Some(v) = d {
                cfg.d = v;
            }
            if let Some(v) = n_delta {
                cfg.n_delta = v;
            }
            let mut ctx = RunContext::new(
                cli.out,
                "rd-curves",
                cli.seed,
                cli.threads,
                config_value(&cfg),
            )?;
            let grid = linspace(cfg.delta_min, cfg.delta_max, cfg.n_delta)?;
            let curves = rd_response_curves(cfg.d, &cfg.w_list, &grid);
            let path = ctx.path("rd_curves.csv");
            let mut rows = Vec::new();
            for curve in &curves {
                for (branch_id, branch) in curve.branches.iter().enumerate() {
                    for pt in &branch.points {
                        rows.push(vec![
                            fmt_f64(curve.w),
                            fmt_f64(pt.delta),
                            fmt_f64(pt.z),
                            branch_id.to_string(),
                            (pt.stable as u8).to_string(),
                        ]);
                    }
                }
            }
            write_csv(&path, "W,delta,z,branch,stable", rows.into_iter())?;
            ctx.finish()?;
            Ok(())
        }
        Command::RdOnset { d } => {
            let mut cfg: RdOnsetConfig = load_config(&cli.config)?;
            if let Some(v) = d {
                cfg.d = v;
            }
            let mut ctx = RunContext::new(
                cli.out,
                "rd-onset",
                cli.seed,
                cli.threads,
                config_value(&cfg),
            )?;
            run_rd_onset(&cfg, &mut ctx)?;
            ctx.finish()?;
            Ok(())
        }
        Command::DkMap {
            gamma_1,
            gamma_2,
            gamma_3,
            omega_k,
            n_detuning,
            n_power,
        } => {
            let mut cfg: DkMapConfig = load_config(&cli.config)?;
            for (slot, v) in [
                (&mut cfg.dk.gamma_1, gamma_1),
                (&mut cfg.dk.gamma_2, gamma_2),
                (&mut cfg.dk.gamma_3, gamma_3),
                (&mut cfg.dk.omega_k, omega_k),
            ] {
                if let Some(v) = v {
                    *slot = v;
                }
            }
            if let Some(v) = n_detuning {
                cfg.n_detuning = v;
            }
            if let Some(v) = n_power {
                cfg.n_power = v;
            }
            let mut ctx =
                RunContext::new(cli.out, "dk-map", cli.seed, cli.threads, config_value(&cfg))?;
            let map = dk_stability_map(
                &cfg.dk,
                (cfg.omega_dr_min, cfg.omega_dr_max),
                (cfg.omega_1r_min, cfg.omega_1r_max),
                cfg.n_detuning,
                cfg.n_power,
            )?;
            write_map_csv(
                &mut ctx,
                "dk_map.csv",
                "omega_dR,Omega_1R,n_roots,n_stable",
                &map,
            )?;
            ctx.finish()?;
            Ok(())
        }
        Command::DkReflectivity {
            gamma_1,
            gamma_3,
            omega_k,
            n_detuning,
        } => {
            let mut cfg: DkReflectivityConfig = load_config(&cli.config)?;
            for (slot, v) in [
                (&mut cfg.dk.gamma_1, gamma_1),
                (&mut cfg.dk.gamma_3, gamma_3),
                (&mut cfg.dk.omega_k, omega_k),
            ] {
                if let Some(v) = v {
                    *slot = v;
                }
            }
            if let Some(v) = n_detuning {
                cfg.n_detuning = v;
            }
            let mut ctx = RunContext::new(
                cli.out,
                "dk-reflectivity",
                cli.seed,
                cli.threads,
                config_value(&cfg),
            )?;
            run_dk_reflectivity(&cfg, &mut ctx)?;
            ctx.finish()?;
            Ok(())
        }
        Command::DkBasins {
            omega_dr,
            omega_1r,
            n,
        } => {
            let mut cfg: DkBasinsConfig = load_config(&cli.config)?;
            if let Some(v) = omega_dr {
                cfg.omega_dr = v;
            }
            if let Some(v) = omega_1r {
                cfg.omega_1r = v;
            }
            if let Some(v) = n {
                cfg.n = v;
            }
            let mut ctx = RunContext::new(
                cli.out,
                "dk-basins",
                cli.seed,
                cli.threads,
                config_value(&cfg),
            )?;
            run_dk_basins(&cfg, &mut ctx)?;
            ctx.finish()?;
            Ok(())
        }
        Command::Classical {
            omega_a,
            omega_1,
            dt,
            n_periods,
        } => {
            let mut cfg: ClassicalConfig = load_config(&cli.config)?;
            if let Some(v) = omega_a {
                cfg.params.omega_a = v;
            }
            if let Some(v) = omega_1 {
                cfg.params.omega_1 = v;
            }
            if let Some(v) = dt {
                cfg.dt = v;
            }
            if let Some(v) = n_periods {
                cfg.n_periods = v;
            }
            let mut ctx = RunContext::new(
                cli.out,
                "classical",
                cli.seed,
                cli.threads,
                config_value(&cfg),
            )?;
            run_classical(&cfg, &mut ctx)?;
            ctx.finish()?;
            Ok(())
        }
        Command::Imd {
            omega_a,
            omega_d,
            n_omega,
        } => {
            let mut cfg: ImdConfig = load_config(&cli.config)?;
            if let Some(v) = omega_a {
                cfg.omega_a = v;
            }
            if let Some(v) = omega_d {
                cfg.physical.omega_d = v;
            }
            if let Some(v) = n_omega {
                cfg.n_omega = v;
            }
            let mut ctx =
                RunContext::new(cli.out, "imd", cli.seed, cli.threads, config_value(&cfg))?;
            run_imd(&cfg, &mut ctx)?;
            ctx.finish()?;
            Ok(())
        }
        Command::Fit {
            data,
            meta,
            restarts,
        } => {
            let mut cfg: FitConfig = load_config(&cli.config)?;
            if let Some(p) = data {
                cfg.data = p.display().to_string();
            }
            if let Some(p) = meta {
                cfg.meta_path = Some(p.display().to_string());
            }
            if let Some(v) = restarts {
                cfg.restarts = v;
            }
            let mut ctx =
                RunContext::new(cli.out, "fit", cli.seed, cli.threads, config_value(&cfg))?;
            run_fit(&cfg, cli.seed, &mut ctx)?;
            ctx.finish()?;
            Ok(())
        }
        Command::Material {
            m_s,
            k_c1,
            rho_s,
            r_s,
            h_s,
        } => {
            let mut cfg: MaterialConfig = load_config(&cli.config)?;
            for (slot, v) in [
                (&mut cfg.m_s, m_s),
                (&mut cfg.k_c1, k_c1),
                (&mut cfg.rho_s, rho_s),
                (&mut cfg.r_s, r_s),
            ] {
                if let Some(v) = v {
                    *slot = v;
                }
            }
            if h_s.is_some() {
                cfg.h_s = h_s;
            }
            let mut ctx = RunContext::new(
                cli.out,
                "material",
                cli.seed,
                cli.threads,
                config_value(&cfg),
            )?;
            let rates = material_rates(cfg.m_s, cfg.k_c1, cfg.rho_s, cfg.r_s, cfg.h_s)?;
            let path = ctx.path("material.json");
            write_json(&path, &rates)?;
            ctx.finish()?;
            Ok(())
        }
    }
}

fn run_evolve(cfg: &EvolveConfig, ctx: &mut RunContext) -> Result<(), RunError> {
    let frame = match cfg.frame {
        FrameChoice::Rotating => Frame::Rotating,
        FrameChoice::Lab => Frame::Lab {
            sign: cfg.static_sign,
        },
    };
    let rho0 = match cfg.initial {
        InitialState::Thermal => DensityOperator::thermal(cfg.spin.l, cfg.spin.n0)?,
        InitialState::MaximallyMixed => {
            let n = 1usize << cfg.spin.l;
            let m = spinres_core::operators::identity(n).mapv(|z| z / n as f64);
            DensityOperator::new(m)?
        }
        InitialState::Bell => {
            if cfg.spin.l != 2 {
                return Err(RunError::Input("the Bell initial state needs L = 2".into()));
            }
            DensityOperator::bell()
        }
    };
    let mut opts = integration_options(cfg.dt, cfg.t_max, cfg.tol);
    opts.sample_every = cfg.sample_every.max(1);
    let report = integrate_to_steady(&rho0, &cfg.spin, frame, &opts)?;
    let traj_path = ctx.path("evolve.csv");
    write_csv(
        &traj_path,
        "t,Sz,ReSp,ImSp",
        report.trajectory.iter().map(|s| {
            vec![
                fmt_f64(s.t),
                fmt_f64(s.s_z),
                fmt_f64(s.s_plus.re),
                fmt_f64(s.s_plus.im),
            ]
        }),
    )?;
    #[derive(Serialize)]
    struct EvolveReport {
        converged: bool,
        residual: f64,
        steps: usize,
        s_z: f64,
        re_sp: f64,
        im_sp: f64,
        tau_pairs: Vec<f64>,
    }
    let last = report.trajectory.last().expect("trajectory never empty");
    let json_path = ctx.path("evolve.json");
    write_json(
        &json_path,
        &EvolveReport {
            converged: report.converged,
            residual: report.residual,
            steps: report.steps,
            s_z: last.s_z,
            re_sp: last.s_plus.re,
            im_sp: last.s_plus.im,
            tau_pairs: report.tau_pairs,
        },
    )?;
    Ok(())
}

fn run_sweep(cfg: &SweepConfig, ctx: &mut RunContext) -> Result<(), RunError> {
    let opts = integration_options(cfg.dt, cfg.t_max, cfg.tol);
    let pair_names: Vec<String> = cfg
        .spin
        .pairs()
        .iter()
        .map(|(a, b)| format!("tau_{a}{b}"))
        .collect();
    let header = format!(
        "sweep_value,Sz,ReSp,ImSp{}{},converged",
        if pair_names.is_empty() { "" } else { "," },
        pair_names.join(",")
    );
    for direction in cfg.directions() {
        let spec = SweepSpec {
            axis: cfg.axis,
            from: cfg.from,
            to: cfg.to,
            n_points: cfg.n_points,
            direction,
        };
        let points = hysteresis_sweep(&cfg.spin, &spec, &opts)?;
        let name = match direction {
            spinres_core::master::SweepDirection::Up => "sweep_up.csv",
            spinres_core::master::SweepDirection::Down => "sweep_down.csv",
        };
        let path = ctx.path(name);
        write_csv(
            &path,
            &header,
            points.iter().map(|p| {
                let mut row = vec![
                    fmt_f64(p.value),
                    fmt_f64(p.s_z),
                    fmt_f64(p.s_plus.re),
                    fmt_f64(p.s_plus.im),
                ];
                row.extend(p.tau_pairs.iter().map(|t| fmt_f64(*t)));
                row.push((p.converged as u8).to_string());
                row
            }),
        )?;
    }
    Ok(())
}

fn write_map_csv(
    ctx: &mut RunContext,
    name: &str,
    header: &str,
    map: &spinres_core::mapgrid::StabilityMap,
) -> Result<(), RunError> {
    let path = ctx.path(name);
    let mut rows = Vec::with_capacity(map.detuning.len() * map.power.len());
    for (j, w) in map.power.iter().enumerate() {
        for (i, delta) in map.detuning.iter().enumerate() {
            let k = map.index(i, j);
            rows.push(vec![
                fmt_f64(*delta),
                fmt_f64(*w),
                map.n_roots[k].to_string(),
                map.n_stable[k].to_string(),
            ]);
        }
    }
    write_csv(&path, header, rows.into_iter())?;
    Ok(())
}

fn run_rd_onset(cfg: &RdOnsetConfig, ctx: &mut RunContext) -> Result<(), RunError> {
    let onset = rd_onset_points(cfg.d)?;
    #[derive(Serialize)]
    struct OnsetReport {
        d: f64,
        bistable: bool,
        onset: Option<spinres_core::rd::RdOnset>,
        /// Large-D estimate of the onset drive, when the physical rates
        /// were supplied.
        omega_1_onset_estimate: Option<f64>,
        jump_curves: spinres_core::rd::RdJumpCurves,
    }
    let estimate = match (cfg.t1, cfg.t2, cfg.omega_k) {
        (Some(t1), Some(t2), Some(omega_k)) => Some(rd_onset_drive_estimate(t1, t2, omega_k)),
        _ => None,
    };
    let report = OnsetReport {
        d: cfg.d,
        bistable: onset.is_some(),
        onset,
        omega_1_onset_estimate: estimate,
        jump_curves: rd_jump_curves_auto(cfg.d, cfg.n_jump),
    };
    let path = ctx.path("rd_onset.json");
    write_json(&path, &report)?;
    Ok(())
}

fn run_dk_reflectivity(cfg: &DkReflectivityConfig, ctx: &mut RunContext) -> Result<(), RunError> {
    let onset = dk_onset(&cfg.dk).ok_or_else(|| {
        RunError::Input("reflectivity scan needs a bistability onset for normalization".into())
    })?;
    let grid = linspace(cfg.omega_dr_min, cfg.omega_dr_max, cfg.n_detuning)?;
    let path = ctx.path("dk_reflectivity.csv");
    let mut rows = Vec::new();
    for &power_r in &cfg.omega_1r_list {
        for &x in &grid {
            let p = cfg
                .dk
                .with_drive(x * onset.omega_dc, power_r * onset.omega_1c);
            for st in dk_roots(&p)? {
                rows.push(vec![
                    fmt_f64(x),
                    fmt_f64(power_r),
                    fmt_f64(st.e),
                    fmt_f64(st.r.re),
                    fmt_f64(st.r.im),
                    fmt_f64(st.r.norm()),
                    (st.stability.is_stable() as u8).to_string(),
                ]);
            }
        }
    }
    write_csv(
        &path,
        "omega_dR,Omega_1R,E,re_r,im_r,abs_r,stable",
        rows.into_iter(),
    )?;
    Ok(())
}

fn run_dk_basins(cfg: &DkBasinsConfig, ctx: &mut RunContext) -> Result<(), RunError> {
    let onset = dk_onset(&cfg.dk).ok_or_else(|| {
        RunError::Input("basin computation needs a bistability onset for normalization".into())
    })?;
    let p = cfg
        .dk
        .with_drive(cfg.omega_dr * onset.omega_dc, cfg.omega_1r * onset.omega_1c);
    let map = dk_basins(&p, cfg.grid, cfg.n)?;
    let basins_path = ctx.path("dk_basins.csv");
    let mut rows = Vec::with_capacity(map.labels.len());
    for (j, im) in map.im_grid.iter().enumerate() {
        for (i, re) in map.re_grid.iter().enumerate() {
            rows.push(vec![
                fmt_f64(*re),
                fmt_f64(*im),
                map.labels[j * map.re_grid.len() + i].to_string(),
            ]);
        }
    }
    write_csv(&basins_path, "ReC0,ImC0,attractor_id", rows.into_iter())?;
    let sep_path = ctx.path("dk_separatrix.csv");
    write_csv(
        &sep_path,
        "ReC,ImC",
        map.separatrix
            .iter()
            .map(|(re, im)| vec![fmt_f64(*re), fmt_f64(*im)]),
    )?;
    #[derive(Serialize)]
    struct FixedPointReport<'a> {
        bistable: bool,
        omega_d: f64,
        omega_1: f64,
        fixed_points: &'a [spinres_core::dk::DkFixedPoint],
        attractors: &'a [usize],
    }
    let fp_path = ctx.path("dk_fixed_points.json");
    write_json(
        &fp_path,
        &FixedPointReport {
            bistable: map.bistable,
            omega_d: p.omega_d,
            omega_1: p.omega_1,
            fixed_points: &map.fixed_points,
            attractors: &map.attractors,
        },
    )?;
    Ok(())
}

fn run_classical(cfg: &ClassicalConfig, ctx: &mut RunContext) -> Result<(), RunError> {
    let period = cfg
        .params
        .drive_period()
        .ok_or_else(|| RunError::Input("classical run needs omega_t != 0".into()))?;
    let t_max = cfg.n_periods * period;
    let traj = integrate_classical(cfg.p0, &cfg.params, cfg.dt, t_max, cfg.stride)?;
    let path = ctx.path("classical.csv");
    write_csv(
        &path,
        "t,Px,Py,Pz",
        traj.iter().map(|(t, p)| {
            vec![fmt_f64(*t), fmt_f64(p[0]), fmt_f64(p[1]), fmt_f64(p[2])]
        }),
    )?;
    let rot = to_rotating_frame(&traj, cfg.params.omega_t);
    let rot_path = ctx.path("classical_rotating.csv");
    write_csv(
        &rot_path,
        "t,Px,Py,Pz",
        rot.iter().map(|(t, p)| {
            vec![fmt_f64(*t), fmt_f64(p[0]), fmt_f64(p[1]), fmt_f64(p[2])]
        }),
    )?;
    // Post-transient tail for cycle detection.
    let t_cut = cfg.transient_periods * period;
    let tail: Vec<_> = traj
        .iter()
        .copied()
        .filter(|(t, _)| *t >= t_cut)
        .map(|(t, p)| (t - t_cut, p))
        .collect();
    #[derive(Serialize)]
    struct CycleReport {
        found: bool,
        period: Option<f64>,
        closure_error: Option<f64>,
        wobble: Option<f64>,
    }
    let cycle = detect_limit_cycle(&tail, &cfg.params);
    let cyc_path = ctx.path("classical_cycle.json");
    write_json(
        &cyc_path,
        &CycleReport {
            found: cycle.is_some(),
            period: cycle.map(|c| c.period),
            closure_error: cycle.map(|c| c.closure_error),
            wobble: cycle.map(|c| c.wobble),
        },
    )?;
    Ok(())
}

fn run_imd(cfg: &ImdConfig, ctx: &mut RunContext) -> Result<(), RunError> {
    let ph = RdPhysical {
        omega_k: cfg.physical.omega_k,
        t1: cfg.physical.t1,
        t2: cfg.physical.t2,
        p_z0: cfg.physical.p_z0,
        omega_1: cfg.physical.omega_1,
        omega_d: cfg.physical.omega_d,
    };
    let op = imd_operating_point(&ph, cfg.branch)?;
    let grid = match (cfg.omega_min, cfg.omega_max) {
        (Some(lo), Some(hi)) => linspace(lo, hi, cfg.n_omega)?,
        _ => default_omega_grid(ph.t2),
    };
    let spectrum = imd_gain(&op, cfg.omega_a, cfg.omega_t, ph.t1, ph.t2, cfg.gamma_1, &grid);
    let path = ctx.path("imd.csv");
    write_csv(
        &path,
        "omega,g_imd",
        spectrum
            .points
            .iter()
            .map(|(w, g)| vec![fmt_f64(*w), fmt_f64(*g)]),
    )?;
    #[derive(Serialize)]
    struct ImdReport {
        operating_point: spinres_core::imd::ImdOperatingPoint,
        state: spinres_core::imd::ImdState,
        perturbative_warning: bool,
    }
    let op_path = ctx.path("imd_state.json");
    write_json(
        &op_path,
        &ImdReport {
            operating_point: op,
            state: spectrum.state,
            perturbative_warning: spectrum.perturbative_warning,
        },
    )?;
    Ok(())
}

fn parse_measured_csv(path: &str) -> Result<Vec<MeasuredRecord>, RunError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunError::Input(format!("cannot read {path}: {e}")))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| RunError::Input(format!("{path}: empty file")))?;
    let expect = "f_hz,power,power_unit,kind";
    if header.trim() != expect {
        return Err(RunError::Input(format!(
            "{path}: header must be `{expect}`, got `{header}`"
        )));
    }
    let mut records = Vec::new();
    for (lineno, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(RunError::Input(format!(
                "{path}:{}: expected 4 fields, got {}",
                lineno + 1,
                fields.len()
            )));
        }
        let f_hz: f64 = fields[0].parse().map_err(|e| {
            RunError::Input(format!("{path}:{}: bad frequency: {e}", lineno + 1))
        })?;
        let power: f64 = fields[1]
            .parse()
            .map_err(|e| RunError::Input(format!("{path}:{}: bad power: {e}", lineno + 1)))?;
        let power_unit = match fields[2] {
            "linear" => PowerUnit::Linear,
            "dbm" => PowerUnit::Dbm,
            other => {
                return Err(RunError::Input(format!(
                    "{path}:{}: power_unit must be linear|dbm, got {other}",
                    lineno + 1
                )))
            }
        };
        let kind = match fields[3] {
            "peak" => PointKind::Peak,
            "jump_up" => PointKind::JumpUp,
            "jump_down" => PointKind::JumpDown,
            other => {
                return Err(RunError::Input(format!(
                    "{path}:{}: kind must be peak|jump_up|jump_down, got {other}",
                    lineno + 1
                )))
            }
        };
        records.push(MeasuredRecord {
            f_hz,
            power,
            power_unit,
            kind,
        });
    }
    Ok(records)
}

fn run_fit(cfg: &FitConfig, seed: u64, ctx: &mut RunContext) -> Result<(), RunError> {
    let records = parse_measured_csv(&cfg.data)?;
    let meta: ResponseMeta = match (&cfg.meta, &cfg.meta_path) {
        (Some(m), _) => *m,
        (None, Some(p)) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| RunError::Input(format!("cannot read {p}: {e}")))?;
            serde_json::from_str(&text)
                .map_err(|e| RunError::Input(format!("meta {p}: {e}")))?
        }
        (None, None) => {
            return Err(RunError::Input(
                "fit needs normalization metadata (meta or meta_path)".into(),
            ))
        }
    };
    let data = MeasuredResponse { records, meta };
    let points: Vec<NormalizedPoint> = normalize(&data)?;
    let mut results: Vec<FitResult> = Vec::new();
    if matches!(cfg.model, FitModelChoice::Rd | FitModelChoice::Both) {
        let bounds = cfg
            .rd_bounds
            .clone()
            .unwrap_or_else(|| default_bounds(ModelTag::Rd));
        results.push(fit_model(&points, ModelTag::Rd, &bounds, cfg.restarts, seed)?);
    }
    if matches!(cfg.model, FitModelChoice::Dk | FitModelChoice::Both) {
        let bounds = cfg
            .dk_bounds
            .clone()
            .unwrap_or_else(|| default_bounds(ModelTag::Dk));
        results.push(fit_model(&points, ModelTag::Dk, &bounds, cfg.restarts, seed)?);
    }
    #[derive(Serialize)]
    struct FitReport<'a> {
        points: &'a [NormalizedPoint],
        results: &'a [FitResult],
        preferred: Option<ModelTag>,
    }
    let preferred = results
        .iter()
        .min_by(|a, b| a.residual.partial_cmp(&b.residual).unwrap())
        .map(|r| r.model);
    let path = ctx.path("fit.json");
    write_json(
        &path,
        &FitReport {
            points: &points,
            results: &results,
            preferred,
        },
    )?;
    let norm_path = ctx.path("normalized_points.csv");
    write_csv(
        &norm_path,
        "x,y,kind",
        points.iter().map(|p| {
            vec![
                fmt_f64(p.x),
                fmt_f64(p.y),
                match p.kind {
                    PointKind::Peak => "peak".to_string(),
                    PointKind::JumpUp => "jump_up".to_string(),
                    PointKind::JumpDown => "jump_down".to_string(),
                },
            ]
        }),
    )?;
    Ok(())
}

