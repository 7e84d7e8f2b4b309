//! Restarted GMRES over the real `H` inner product, matrix-free.

use crate::error::{Error, Result};
use crate::spectral::SpectralField;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresSettings {
    /// Relative residual target `|L x - b| <= tol |b|`.
    pub tol: f64,
    /// Total Krylov iterations across restarts.
    pub max_iter: usize,
    pub restart: usize,
}

impl Default for GmresSettings {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 500,
            restart: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSolveInfo {
    pub iterations: usize,
    /// Final true relative residual.
    pub residual: f64,
    /// Relative residual after each iteration (estimated inside a cycle,
    /// recomputed exactly at restarts).
    pub history: Vec<f64>,
}

/// Solves `L x = rhs` for an operator that is coercive but not symmetric.
pub fn solve_coercive_linear<F>(apply: F, rhs: &SpectralField, tol: f64, max_iter: usize) -> Result<SpectralField>
where
    F: FnMut(&SpectralField) -> SpectralField,
{
    let settings = GmresSettings {
        tol,
        max_iter,
        ..GmresSettings::default()
    };
    gmres(apply, |r: &SpectralField| r.clone(), rhs, None, &settings).map(|(x, _)| x)
}

/// Right-preconditioned restarted GMRES: solves `L M y = b`, `x = M y`, which
/// keeps the minimized residual equal to the true residual of `L x = b`.
pub fn gmres<F, P>(
    mut apply: F,
    mut precond: P,
    rhs: &SpectralField,
    x0: Option<&SpectralField>,
    settings: &GmresSettings,
) -> Result<(SpectralField, LinearSolveInfo)>
where
    F: FnMut(&SpectralField) -> SpectralField,
    P: FnMut(&SpectralField) -> SpectralField,
{
    let bnorm = rhs.norm_h();
    let mut x = match x0 {
        Some(x0) => x0.clone(),
        None => SpectralField::zeros(*rhs.grid()),
    };
    if bnorm == 0.0 {
        return Ok((
            SpectralField::zeros(*rhs.grid()),
            LinearSolveInfo {
                iterations: 0,
                residual: 0.0,
                history: Vec::new(),
            },
        ));
    }
    let restart = settings.restart.max(1);
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut r = rhs - &apply(&x);
    let mut rel = r.norm_h() / bnorm;
    loop {
        if rel <= settings.tol {
            return Ok((
                x,
                LinearSolveInfo {
                    iterations,
                    residual: rel,
                    history,
                },
            ));
        }
        if iterations >= settings.max_iter {
            return Err(Error::LinearSolver {
                iterations,
                residual: rel,
                history,
            });
        }
        let start_rel = rel;
        let beta = r.norm_h();
        let mut basis: Vec<SpectralField> = Vec::with_capacity(restart + 1);
        basis.push(r.scaled(1.0 / beta));
        let mut hess: Vec<Vec<f64>> = Vec::with_capacity(restart);
        let mut cs: Vec<f64> = Vec::with_capacity(restart);
        let mut sn: Vec<f64> = Vec::with_capacity(restart);
        let mut g = vec![beta];
        let mut used = 0;
        while used < restart && iterations < settings.max_iter {
            let j = used;
            let mut w = apply(&precond(&basis[j]));
            let mut col = Vec::with_capacity(j + 2);
            // Modified Gram-Schmidt, applied twice for stability.
            for _ in 0..2 {
                for (i, q) in basis.iter().enumerate() {
                    let hij = w.dot(q);
                    w.axpy(-hij, q);
                    if col.len() <= i {
                        col.push(hij);
                    } else {
                        col[i] += hij;
                    }
                }
            }
            let hnext = w.norm_h();
            col.push(hnext);
            for i in 0..j {
                let t = cs[i] * col[i] + sn[i] * col[i + 1];
                col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            let denom = col[j].hypot(col[j + 1]);
            let (c, s) = if denom == 0.0 { (1.0, 0.0) } else { (col[j] / denom, col[j + 1] / denom) };
            col[j] = denom;
            col[j + 1] = 0.0;
            cs.push(c);
            sn.push(s);
            g.push(-s * g[j]);
            g[j] *= c;
            hess.push(col);
            used += 1;
            iterations += 1;
            let est = g[j + 1].abs() / bnorm;
            history.push(est);
            if est <= settings.tol * 0.5 || hnext <= f64::EPSILON * beta {
                break;
            }
            basis.push(w.scaled(1.0 / hnext));
        }
        // Back substitution for the least-squares coefficients.
        let mut y = vec![0.0; used];
        for i in (0..used).rev() {
            let mut s = g[i];
            for (k, yk) in y.iter().enumerate().skip(i + 1) {
                s -= hess[k][i] * yk;
            }
            y[i] = s / hess[i][i];
        }
        let mut update = SpectralField::zeros(*rhs.grid());
        for (q, yi) in basis.iter().zip(&y) {
            update.axpy(*yi, q);
        }
        x.axpy(1.0, &precond(&update));
        r = rhs - &apply(&x);
        rel = r.norm_h() / bnorm;
        if let Some(last) = history.last_mut() {
            *last = rel;
        }
        if rel > settings.tol && rel >= start_rel * (1.0 - 1e-3) {
            return Err(Error::LinearSolver {
                iterations,
                residual: rel,
                history,
            });
        }
    }
}
