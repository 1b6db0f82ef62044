//! Parameters of the driven spin system and its bath.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Sign convention for the static -omega_0/2 S_z term of the lab-frame
/// Hamiltonian. The two published matrix forms disagree on this sign; both
/// are kept available. `MainText` is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StaticSign {
    /// H0 contains -(omega_0/2) S_z.
    #[default]
    MainText,
    /// H0 contains +(omega_0/2) S_z.
    Flipped,
}

/// Rates of the driven L-spin model and its Lindblad bath.
///
/// All omegas and gammas share one unit of rate; times come out in the
/// inverse unit. `omega_t` is the drive frequency and the detuning
/// omega_d = omega_t - omega_0 is derived, not stored.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinSystemParams {
    /// Number of spins 1/2.
    pub l: usize,
    /// Larmor rate of the static field term.
    #[serde(default)]
    pub omega_0: f64,
    /// Anisotropy rate of the (S+S- + S-S+) term.
    #[serde(default)]
    pub omega_k: f64,
    /// Anisotropy rate of the (S+^2 + S-^2) term (dropped in the rotating
    /// frame).
    #[serde(default)]
    pub omega_a: f64,
    /// Transverse drive amplitude.
    #[serde(default)]
    pub omega_1: f64,
    /// Drive angular frequency.
    #[serde(default)]
    pub omega_t: f64,
    /// Energy relaxation rate of the bath coupling.
    pub gamma_1: f64,
    /// Pure dephasing rate.
    #[serde(default)]
    pub gamma_phi: f64,
    /// Thermal occupation of the bath.
    #[serde(default)]
    pub n0: f64,
    /// Disentanglement rate multiplying the nonlinear term.
    #[serde(default)]
    pub gamma_d: f64,
    /// Per-pair weight inside the disentanglement operator.
    #[serde(default = "default_eta")]
    pub eta: f64,
}

fn default_eta() -> f64 {
    1.0
}

impl SpinSystemParams {
    /// All-zero rates except gamma_1 = 1 and eta = 1; convenient test base.
    pub fn bare(l: usize) -> Self {
        Self {
            l,
            omega_0: 0.0,
            omega_k: 0.0,
            omega_a: 0.0,
            omega_1: 0.0,
            omega_t: 0.0,
            gamma_1: 1.0,
            gamma_phi: 0.0,
            n0: 0.0,
            gamma_d: 0.0,
            eta: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.l == 0 {
            return Err(Error::InvalidParameter("L must be >= 1".into()));
        }
        if !(self.gamma_1 > 0.0) {
            return Err(Error::InvalidParameter("gamma_1 must be > 0".into()));
        }
        if self.gamma_phi < 0.0 || self.n0 < 0.0 || self.gamma_d < 0.0 {
            return Err(Error::InvalidParameter(
                "gamma_phi, n0 and gamma_d must be >= 0".into(),
            ));
        }
        if !(self.eta > 0.0) {
            return Err(Error::InvalidParameter("eta must be > 0".into()));
        }
        Ok(())
    }

    /// Detuning omega_d = omega_t - omega_0.
    pub fn omega_d(&self) -> f64 {
        self.omega_t - self.omega_0
    }

    /// Shift the drive frequency so that omega_d takes the given value.
    pub fn set_omega_d(&mut self, omega_d: f64) {
        self.omega_t = self.omega_0 + omega_d;
    }

    /// Longitudinal relaxation time: 1/T1 = gamma_1 (2 n0 + 1).
    pub fn t1(&self) -> f64 {
        1.0 / (self.gamma_1 * (2.0 * self.n0 + 1.0))
    }

    /// Transverse relaxation time: 1/T2 = (gamma_1/2 + gamma_phi)(2 n0 + 1).
    pub fn t2(&self) -> f64 {
        1.0 / ((0.5 * self.gamma_1 + self.gamma_phi) * (2.0 * self.n0 + 1.0))
    }

    /// Per-spin thermal polarization: -1/p_z0 = 2 n0 + 1 (negative).
    pub fn p_z0_per_spin(&self) -> f64 {
        -1.0 / (2.0 * self.n0 + 1.0)
    }

    /// Equilibrium collective <S_z> = L * p_z0.
    pub fn p_z0_total(&self) -> f64 {
        self.l as f64 * self.p_z0_per_spin()
    }

    /// Unordered site pairs (1-based), the index order of tau columns.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 1..=self.l {
            for b in (a + 1)..=self.l {
                out.push((a, b));
            }
        }
        out
    }
}
