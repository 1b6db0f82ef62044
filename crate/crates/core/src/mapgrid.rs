//! Rectangular stability maps over (detuning, power).

use serde::Serialize;

use crate::{Error, Result};

/// Per-cell root census on a rectangular (detuning, power) grid.
///
/// Cell (i, j) covers `detuning[i]`, `power[j]`; the flat vectors are laid
/// out power-major: index = j * detuning.len() + i.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityMap {
    pub detuning: Vec<f64>,
    pub power: Vec<f64>,
    pub n_roots: Vec<u8>,
    pub n_stable: Vec<u8>,
}

impl StabilityMap {
    pub fn index(&self, i_detuning: usize, j_power: usize) -> usize {
        j_power * self.detuning.len() + i_detuning
    }

    /// Bistable means three roots, two of them stable.
    pub fn is_bistable(&self, i_detuning: usize, j_power: usize) -> bool {
        let k = self.index(i_detuning, j_power);
        self.n_roots[k] == 3 && self.n_stable[k] == 2
    }

    pub fn bistable_count(&self) -> usize {
        self.n_roots
            .iter()
            .zip(&self.n_stable)
            .filter(|(&r, &s)| r == 3 && s == 2)
            .count()
    }

    /// Bistable cells that touch a non-bistable 4-neighbor.
    pub fn bistable_boundary_cells(&self) -> Vec<(usize, usize)> {
        let (nd, np) = (self.detuning.len(), self.power.len());
        let mut out = Vec::new();
        for j in 0..np {
            for i in 0..nd {
                if !self.is_bistable(i, j) {
                    continue;
                }
                let mut edge = i == 0 || i == nd - 1 || j == 0 || j == np - 1;
                if !edge {
                    edge = !self.is_bistable(i - 1, j)
                        || !self.is_bistable(i + 1, j)
                        || !self.is_bistable(i, j - 1)
                        || !self.is_bistable(i, j + 1);
                }
                if edge {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

/// Uniform grid of n points from lo to hi inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "grid needs at least 2 points, got {n}"
        )));
    }
    let step = (hi - lo) / (n - 1) as f64;
    Ok((0..n).map(|k| lo + step * k as f64).collect())
}
