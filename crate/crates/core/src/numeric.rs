//! Small numerical kernels: cubic roots, root bracketing, Hermitian
//! eigenvalues, and a bounded Nelder-Mead simplex.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::{Error, Result};

/// Real roots of a3 x^3 + a2 x^2 + a1 x + a0 = 0, ascending, with
/// multiplicity (a double root appears twice).
///
/// Uses the trigonometric form when all three roots are real and Cardano's
/// with the sign-matched cube root otherwise, then polishes each root with
/// a guarded Newton step so that near-double roots keep ~1e-12 residuals.
pub fn cubic_real_roots(a3: f64, a2: f64, a1: f64, a0: f64) -> Vec<f64> {
    if a3 == 0.0 {
        return quadratic_real_roots(a2, a1, a0);
    }
    // Monic form x^3 + p x^2 + q x + r.
    let p = a2 / a3;
    let q = a1 / a3;
    let r = a0 / a3;
    // Depressed: t^3 + bt + c with x = t - p/3.
    let b = q - p * p / 3.0;
    let c = 2.0 * p * p * p / 27.0 - p * q / 3.0 + r;
    let shift = -p / 3.0;
    let disc = c * c / 4.0 + b * b * b / 27.0;
    // Roundoff floor: a double root has disc = 0 exactly in reals but lands
    // on either side in floats; treat near-zero as the three-real case.
    let disc_tol = 1e-13 * (c * c / 4.0).abs().max((b / 3.0).powi(3).abs()).max(1e-300);

    let mut roots = if disc > disc_tol {
        // One real root.
        let s = disc.sqrt();
        let u = (-c / 2.0 + s.copysign(-c)).cbrt();
        let t = if u == 0.0 { 0.0 } else { u - b / (3.0 * u) };
        vec![t + shift]
    } else {
        // Three real roots (disc == 0 degenerates gracefully).
        let m = (-b / 3.0).max(0.0).sqrt();
        if m == 0.0 {
            vec![shift, shift, shift]
        } else {
            let arg = (3.0 * c / (2.0 * b * m)).clamp(-1.0, 1.0);
            let phi = arg.acos() / 3.0;
            let mut v: Vec<f64> = (0..3)
                .map(|k| 2.0 * m * (phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() + shift)
                .collect();
            v.sort_by(|x, y| x.partial_cmp(y).unwrap());
            v
        }
    };

    let f = |x: f64| ((a3 * x + a2) * x + a1) * x + a0;
    let df = |x: f64| (3.0 * a3 * x + 2.0 * a2) * x + a1;
    for x in roots.iter_mut() {
        for _ in 0..3 {
            let fx = f(*x);
            let dfx = df(*x);
            // Near multiple roots f' -> 0; a Newton step there would blow up.
            if dfx.abs() < 1e-14 * (a3.abs() * x.abs() * x.abs() + a2.abs() * x.abs() + a1.abs()).max(1e-300) {
                break;
            }
            let step = fx / dfx;
            if !step.is_finite() || step.abs() > 1.0 + x.abs() {
                break;
            }
            *x -= step;
        }
    }
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    roots
}

/// Real roots of a2 x^2 + a1 x + a0 = 0, ascending.
pub fn quadratic_real_roots(a2: f64, a1: f64, a0: f64) -> Vec<f64> {
    if a2 == 0.0 {
        if a1 == 0.0 {
            return Vec::new();
        }
        return vec![-a0 / a1];
    }
    let disc = a1 * a1 - 4.0 * a2 * a0;
    if disc < 0.0 {
        return Vec::new();
    }
    let s = disc.sqrt();
    // Citardauq form against cancellation.
    let q = -0.5 * (a1 + s.copysign(a1));
    let mut roots = if q == 0.0 {
        vec![0.0, 0.0]
    } else {
        vec![q / a2, a0 / q]
    };
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    roots
}

/// Collapse roots closer than `tol` into one representative (keeps order).
pub fn dedupe_roots(mut roots: Vec<f64>, tol: f64) -> Vec<f64> {
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut out: Vec<f64> = Vec::with_capacity(roots.len());
    for r in roots {
        match out.last() {
            Some(&last) if (r - last).abs() <= tol => {}
            _ => out.push(r),
        }
    }
    out
}

/// Discriminant of the monic cubic x^3 + p x^2 + q x + r.
///
/// Zero exactly at double roots; used as the fold-locus residual.
pub fn monic_cubic_discriminant(p: f64, q: f64, r: f64) -> f64 {
    18.0 * p * q * r - 4.0 * p * p * p * r + p * p * q * q - 4.0 * q * q * q - 27.0 * r * r
}

/// Discriminant divided by its degree-4 coefficient scale
/// (1 + p^2 + q^2 + r^2)^2, so roundoff-level residuals stay comparable
/// across cubics with coefficients of very different magnitude.
pub fn monic_cubic_discriminant_normalized(p: f64, q: f64, r: f64) -> f64 {
    let scale = 1.0 + p * p + q * q + r * r;
    monic_cubic_discriminant(p, q, r) / (scale * scale)
}

/// Bisection to |b-a| < xtol; f(a) and f(b) must have opposite signs.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, xtol: f64) -> Result<f64> {
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::BracketFailure {
            a,
            b,
            msg: format!("f(a)={fa:.3e}, f(b)={fb:.3e} have equal signs"),
        });
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 || (b - a).abs() < xtol {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Eigenvalues of a Hermitian matrix by cyclic complex Jacobi sweeps,
/// ascending. Dense and dimension-capped by construction (dim <= 16 in
/// practice), so the O(n^3) sweeps are more than enough.
pub fn hermitian_eigenvalues(mat: &Array2<C64>) -> Vec<f64> {
    let n = mat.nrows();
    assert_eq!(n, mat.ncols(), "hermitian_eigenvalues needs a square matrix");
    let mut a = mat.clone();
    // Symmetrize away representation noise.
    for i in 0..n {
        for j in 0..n {
            let avg = 0.5 * (a[[i, j]] + a[[j, i]].conj());
            a[[i, j]] = avg;
            a[[j, i]] = avg.conj();
        }
    }
    let norm: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let tol = 1e-15 * norm.max(1e-300);
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[[p, q]].norm_sqr();
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[[p, q]];
                if apq.norm() <= tol / (n as f64) {
                    continue;
                }
                let app = a[[p, p]].re;
                let aqq = a[[q, q]].re;
                let ph = apq / apq.norm(); // e^{i arg(a_pq)}
                // Rotation R: R_pp = c, R_pq = s*ph, R_qp = -s*conj(ph),
                // R_qq = c zeroes (R^dag A R)_pq for
                // tan(2 theta) = 2|a_pq| / (a_qq - a_pp).
                let theta = 0.5 * (2.0 * apq.norm()).atan2(aqq - app);
                let (s, c) = theta.sin_cos();
                // A <- A R (columns p, q)
                for i in 0..n {
                    let aip = a[[i, p]];
                    let aiq = a[[i, q]];
                    a[[i, p]] = aip * c - aiq * ph.conj() * s;
                    a[[i, q]] = aip * ph * s + aiq * c;
                }
                // A <- R^dag A (rows p, q)
                for j in 0..n {
                    let apj = a[[p, j]];
                    let aqj = a[[q, j]];
                    a[[p, j]] = apj * c - aqj * ph * s;
                    a[[q, j]] = apj * ph.conj() * s + aqj * c;
                }
                a[[p, q]] = 0.5 * (a[[p, q]] + a[[q, p]].conj());
                a[[q, p]] = a[[p, q]].conj();
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[[i, i]].re).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eig
}

/// Per-parameter box bounds; lo == hi pins the parameter.
pub type Bounds = Vec<(f64, f64)>;

/// Outcome of a Nelder-Mead run.
#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub fval: f64,
    pub iters: usize,
    pub evals: usize,
    pub converged: bool,
    /// Best objective value after each iteration (non-increasing).
    pub history: Vec<f64>,
}

/// Bounded Nelder-Mead descent from `x0`.
///
/// Pinned coordinates (lo == hi) are excluded from the simplex; free
/// coordinates are clamped to their box on every evaluation, which keeps the
/// accepted objective sequence monotone.
pub fn nelder_mead<F>(
    f: F,
    x0: &[f64],
    bounds: &Bounds,
    ftol: f64,
    max_iters: usize,
) -> SimplexResult
where
    F: Fn(&[f64]) -> f64,
{
    assert_eq!(x0.len(), bounds.len());
    let free: Vec<usize> = bounds
        .iter()
        .enumerate()
        .filter(|(_, (lo, hi))| hi > lo)
        .map(|(i, _)| i)
        .collect();
    let clamp_full = |x: &mut [f64]| {
        for (xi, (lo, hi)) in x.iter_mut().zip(bounds.iter()) {
            *xi = xi.clamp(*lo, *hi);
        }
    };
    let mut base = x0.to_vec();
    clamp_full(&mut base);
    let mut evals = 0usize;
    let eval_at = |free_x: &[f64], evals: &mut usize| -> f64 {
        let mut x = base.clone();
        for (k, &i) in free.iter().enumerate() {
            x[i] = free_x[k].clamp(bounds[i].0, bounds[i].1);
        }
        *evals += 1;
        f(&x)
    };

    let n = free.len();
    if n == 0 {
        let fval = eval_at(&[], &mut evals);
        return SimplexResult {
            x: base,
            fval,
            iters: 0,
            evals,
            converged: true,
            history: vec![fval],
        };
    }

    // Initial simplex: x0 plus a scaled step along each free axis.
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let p0: Vec<f64> = free.iter().map(|&i| base[i]).collect();
    simplex.push(p0.clone());
    for k in 0..n {
        let i = free[k];
        let span = bounds[i].1 - bounds[i].0;
        let step = if span.is_finite() { 0.1 * span } else { 0.1 * p0[k].abs().max(1.0) };
        let mut p = p0.clone();
        p[k] = (p[k] + step).clamp(bounds[i].0, bounds[i].1);
        if (p[k] - p0[k]).abs() < 1e-300 {
            p[k] = (p0[k] - step).clamp(bounds[i].0, bounds[i].1);
        }
        simplex.push(p);
    }
    let mut fvals: Vec<f64> = simplex.iter().map(|p| eval_at(p, &mut evals)).collect();

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut history = Vec::with_capacity(max_iters);
    let mut iters = 0;
    let mut converged = false;
    while iters < max_iters {
        iters += 1;
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&i, &j| fvals[i].partial_cmp(&fvals[j]).unwrap());
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n - 1];
        history.push(fvals[best]);
        // Converge on both f-spread and simplex diameter; an f-spread test
        // alone stalls on vertices placed symmetrically about a minimum.
        let diameter = simplex
            .iter()
            .flat_map(|p| p.iter().zip(&simplex[best]).map(|(a, b)| (a - b).abs()))
            .fold(0.0f64, f64::max);
        let xscale = 1.0 + simplex[best].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if (fvals[worst] - fvals[best]).abs() <= ftol * (1.0 + fvals[best].abs())
            && diameter <= 1e-9 * xscale
        {
            converged = true;
            break;
        }
        // Centroid of all but the worst.
        let mut centroid = vec![0.0; n];
        for &i in order.iter().take(n) {
            for k in 0..n {
                centroid[k] += simplex[i][k] / n as f64;
            }
        }
        let reflect: Vec<f64> = (0..n)
            .map(|k| centroid[k] + alpha * (centroid[k] - simplex[worst][k]))
            .collect();
        let f_r = eval_at(&reflect, &mut evals);
        if f_r < fvals[best] {
            let expand: Vec<f64> = (0..n)
                .map(|k| centroid[k] + gamma * (reflect[k] - centroid[k]))
                .collect();
            let f_e = eval_at(&expand, &mut evals);
            if f_e < f_r {
                simplex[worst] = expand;
                fvals[worst] = f_e;
            } else {
                simplex[worst] = reflect;
                fvals[worst] = f_r;
            }
        } else if f_r < fvals[second_worst] {
            simplex[worst] = reflect;
            fvals[worst] = f_r;
        } else {
            let contract: Vec<f64> = if f_r < fvals[worst] {
                (0..n).map(|k| centroid[k] + rho * (reflect[k] - centroid[k])).collect()
            } else {
                (0..n).map(|k| centroid[k] + rho * (simplex[worst][k] - centroid[k])).collect()
            };
            let f_c = eval_at(&contract, &mut evals);
            if f_c < fvals[worst].min(f_r) {
                simplex[worst] = contract;
                fvals[worst] = f_c;
            } else {
                // Shrink toward the best vertex.
                let best_pt = simplex[best].clone();
                for i in 0..=n {
                    if i == best {
                        continue;
                    }
                    for k in 0..n {
                        simplex[i][k] = best_pt[k] + sigma * (simplex[i][k] - best_pt[k]);
                    }
                    fvals[i] = eval_at(&simplex[i].clone(), &mut evals);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..=n).collect();
    order.sort_by(|&i, &j| fvals[i].partial_cmp(&fvals[j]).unwrap());
    let best = order[0];
    history.push(fvals[best]);
    let mut x = base;
    for (k, &i) in free.iter().enumerate() {
        x[i] = simplex[best][k].clamp(bounds[i].0, bounds[i].1);
    }
    SimplexResult {
        x,
        fval: fvals[best],
        iters,
        evals,
        converged,
        history,
    }
}
