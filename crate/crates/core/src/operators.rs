//! Spin-1/2 operator algebra: Pauli and generalized Gell-Mann bases,
//! single-site embeddings, collective operators, and the two-spin
//! rotating-frame Hamiltonian.
//!
//! Spin operators are kept in units of hbar/2 throughout, so each
//! single-site S_z has eigenvalues +1 and -1 and the collective operators
//! obey [S_i, S_j] = 2 i eps_ijk S_k, [S_z, S_pm] = pm 2 S_pm and
//! [S_+, S_-] = 4 S_z.

use ndarray::{linalg::kron, Array2};
use num_complex::Complex64 as C64;

use crate::params::SpinSystemParams;
use crate::{Error, Result};

/// Dense complex operator; dimension 2^L for full-space operators.
pub type Op = Array2<C64>;

/// Dense dim cap: 2^4 = 16 keeps every construction desk-scale.
pub const L_MAX: usize = 4;

/// Hilbert-space dimension for `l` spins.
pub fn dim(l: usize) -> usize {
    1 << l
}

pub fn identity(n: usize) -> Op {
    Array2::eye(n)
}

pub fn dagger(m: &Op) -> Op {
    m.t().mapv(|z| z.conj())
}

/// A B - B A.
pub fn commutator(a: &Op, b: &Op) -> Op {
    a.dot(b) - b.dot(a)
}

pub fn trace(m: &Op) -> C64 {
    m.diag().sum()
}

pub fn frobenius_norm(m: &Op) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// max |m - m^dagger| entrywise.
pub fn hermiticity_defect(m: &Op) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    worst
}

pub fn max_abs(m: &Op) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// The three Pauli matrices (sigma_x, sigma_y, sigma_z).
pub fn pauli_basis() -> Vec<Op> {
    gell_mann(2).expect("d=2 is always valid")
}

/// Generalized Gell-Mann basis of d x d Hermitian traceless matrices with
/// Tr(lambda_i lambda_j) = 2 delta_ij.
///
/// Ordering: symmetric pair matrices, then antisymmetric pair matrices,
/// then diagonal matrices, each family ordered by (j, k) index. For d = 2
/// this reduces to (sigma_x, sigma_y, sigma_z).
pub fn gell_mann(d: usize) -> Result<Vec<Op>> {
    if d < 2 {
        return Err(Error::InvalidDimension(format!(
            "Gell-Mann basis needs d >= 2, got {d}"
        )));
    }
    let mut basis = Vec::with_capacity(d * d - 1);
    for j in 0..d {
        for k in (j + 1)..d {
            let mut m = Array2::<C64>::zeros((d, d));
            m[[j, k]] = C64::new(1.0, 0.0);
            m[[k, j]] = C64::new(1.0, 0.0);
            basis.push(m);
        }
    }
    for j in 0..d {
        for k in (j + 1)..d {
            let mut m = Array2::<C64>::zeros((d, d));
            m[[j, k]] = C64::new(0.0, -1.0);
            m[[k, j]] = C64::new(0.0, 1.0);
            basis.push(m);
        }
    }
    for l in 1..d {
        let norm = (2.0 / (l as f64 * (l as f64 + 1.0))).sqrt();
        let mut m = Array2::<C64>::zeros((d, d));
        for j in 0..l {
            m[[j, j]] = C64::new(norm, 0.0);
        }
        m[[l, l]] = C64::new(-(l as f64) * norm, 0.0);
        basis.push(m);
    }
    Ok(basis)
}

/// I (x) ... (x) op (x) ... (x) I with `op` at 1-based site `site` of `l`
/// spin-1/2 sites.
pub fn embed_single(op: &Op, site: usize, l: usize) -> Result<Op> {
    if op.nrows() != 2 || op.ncols() != 2 {
        return Err(Error::InvalidDimension(format!(
            "embed_single expects a 2x2 operator, got {}x{}",
            op.nrows(),
            op.ncols()
        )));
    }
    check_spin_count(l)?;
    if site == 0 || site > l {
        return Err(Error::SiteOutOfRange { site, l });
    }
    let mut out = identity(dim(site - 1));
    out = kron(&out, op);
    out = kron(&out, &identity(dim(l - site)));
    Ok(out)
}

fn check_spin_count(l: usize) -> Result<()> {
    if l == 0 {
        return Err(Error::InvalidDimension("spin count L must be >= 1".into()));
    }
    if l > L_MAX {
        return Err(Error::CapacityExceeded { l, l_max: L_MAX });
    }
    Ok(())
}

/// Collective spin operators for `l` spins, in units of hbar/2.
pub struct CollectiveSpin {
    pub sx: Op,
    pub sy: Op,
    pub sz: Op,
    pub sp: Op,
    pub sm: Op,
}

/// S = sum over sites of the single-site vector operator, plus the ladder
/// combinations S_pm = S_x pm i S_y.
pub fn collective_spin(l: usize) -> Result<CollectiveSpin> {
    check_spin_count(l)?;
    let n = dim(l);
    let paulis = pauli_basis();
    let mut sx = Array2::<C64>::zeros((n, n));
    let mut sy = Array2::<C64>::zeros((n, n));
    let mut sz = Array2::<C64>::zeros((n, n));
    for site in 1..=l {
        sx += &embed_single(&paulis[0], site, l)?;
        sy += &embed_single(&paulis[1], site, l)?;
        sz += &embed_single(&paulis[2], site, l)?;
    }
    let i = C64::new(0.0, 1.0);
    let sp = &sx + &sy.mapv(|z| i * z);
    let sm = &sx - &sy.mapv(|z| i * z);
    Ok(CollectiveSpin { sx, sy, sz, sp, sm })
}

/// Rotating-frame two-spin Hamiltonian H_R / hbar:
///
/// ```text
/// [ -w_d   w1/2   w1/2   0    ]
/// [ w1/2   0      w_K    w1/2 ]
/// [ w1/2   w_K    0      w1/2 ]
/// [ 0      w1/2   w1/2   w_d  ]
/// ```
///
/// Valid for L = 2 with the anisotropy term dropped (omega_a = 0); the
/// constant omega_K shift has been split off relative to the general-L
/// rotating Hamiltonian.
pub fn two_spin_rotating_hamiltonian(params: &SpinSystemParams) -> Result<Op> {
    if params.l != 2 {
        return Err(Error::Unsupported(format!(
            "two-spin rotating Hamiltonian needs L = 2, got L = {}",
            params.l
        )));
    }
    if params.omega_a != 0.0 {
        return Err(Error::Unsupported(
            "rotating frame drops the omega_a term; set omega_a = 0".into(),
        ));
    }
    let wd = params.omega_d();
    let w1h = 0.5 * params.omega_1;
    let wk = params.omega_k;
    let r = |x: f64| C64::new(x, 0.0);
    let mut h = Array2::<C64>::zeros((4, 4));
    h[[0, 0]] = r(-wd);
    h[[3, 3]] = r(wd);
    h[[1, 2]] = r(wk);
    h[[2, 1]] = r(wk);
    for (i, j) in [(0, 1), (0, 2), (1, 3), (2, 3)] {
        h[[i, j]] = r(w1h);
        h[[j, i]] = r(w1h);
    }
    Ok(h)
}
