//! Projected gradient ascent on the full matrix variable.

use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use super::{lifted_gains, InnerOutcome, SpectrahedronPoint, Surrogate};
use crate::channel::CMat;
use crate::scenario::ScaParams;

const MAX_PROJECTION_ROUNDS: usize = 100;
const MAX_BACKTRACKS: usize = 40;
/// Fraction of the first-order gain a step must realize.
const ARMIJO: f64 = 1e-4;

fn hermitize(x: &mut CMat) {
    let n = x.nrows();
    for i in 0..n {
        x[(i, i)] = Complex64::new(x[(i, i)].re, 0.0);
        for j in i + 1..n {
            let avg = 0.5 * (x[(i, j)] + x[(j, i)].conj());
            x[(i, j)] = avg;
            x[(j, i)] = avg.conj();
        }
    }
}

fn unit_diagonal(x: &mut CMat) {
    for i in 0..x.nrows() {
        x[(i, i)] = Complex64::new(1.0, 0.0);
    }
}

/// Projection onto `{V : V = V^H, V >= 0, diag(V) = 1}` by Dykstra's
/// alternating projections: eigenvalue clipping with a correction term, then
/// a diagonal reset. Stops once the clipped matrix has a unit diagonal within
/// `tol`. When the rounds run out, `(V + sI) / (1 + s)` with
/// `s = max(0, -lambda_min)` restores feasibility. Returns the point, the
/// eigendecomposition count and whether that repair was needed.
pub fn project_spectrahedron(x: &CMat, tol: f64) -> (CMat, usize, bool) {
    let n = x.nrows();
    let mut y = x.clone();
    hermitize(&mut y);
    unit_diagonal(&mut y);
    let mut correction = CMat::zeros(n, n);
    let mut eigs = 0;
    for _ in 0..MAX_PROJECTION_ROUNDS {
        let shifted = &y + &correction;
        let eig = SymmetricEigen::new(shifted.clone());
        eigs += 1;
        if eigs == 1 && eig.eigenvalues.min() >= -tol {
            return (y, eigs, false);
        }
        let clipped = eig.eigenvalues.map(|l| Complex64::from(l.max(0.0)));
        let q = &eig.eigenvectors;
        let mut psd = q * CMat::from_diagonal(&clipped) * q.adjoint();
        hermitize(&mut psd);
        correction = shifted - &psd;
        let off = (0..n).map(|i| (psd[(i, i)].re - 1.0).abs()).fold(0.0, f64::max);
        y = psd;
        unit_diagonal(&mut y);
        if off <= tol {
            return (y, eigs, false);
        }
    }
    let lmin = SymmetricEigen::new(y.clone()).eigenvalues.min();
    eigs += 1;
    if lmin >= -tol {
        return (y, eigs, false);
    }
    let s = -lmin;
    y += CMat::identity(n, n) * Complex64::from(s);
    y /= Complex64::from(1.0 + s);
    unit_diagonal(&mut y);
    (y, eigs, true)
}

pub(crate) fn solve(sur: &Surrogate, init: &SpectrahedronPoint, params: &ScaParams) -> InnerOutcome {
    let value_of = |v: &CMat| {
        lifted_gains(v, sur.forms)
            .map(|mu| (sur.value(mu), mu))
            .unwrap_or((f64::NEG_INFINITY, [0.0; 2]))
    };
    let mut v = init.matrix.clone();
    let (mut f, mut mu) = value_of(&v);
    let mut step = f64::NAN;
    let mut eigs = 0;
    let mut repaired = false;
    let mut moved = false;
    let mut iterations = 0;
    let mut hit_cap = true;
    while iterations < params.inner_max_iters {
        iterations += 1;
        let c = sur.coefficients(mu);
        let grad = &sur.forms[0].a * Complex64::from(c[0]) + &sur.forms[1].a * Complex64::from(c[1]);
        let gnorm = grad.norm();
        if gnorm == 0.0 {
            hit_cap = false;
            break;
        }
        if step.is_nan() {
            step = v.nrows() as f64 / gnorm;
        }
        let mut accepted = None;
        let mut backtracked = false;
        for _ in 0..MAX_BACKTRACKS {
            let (w, e, r) = project_spectrahedron(&(&v + &grad * Complex64::from(step)), params.projection_tol);
            eigs += e;
            let (fw, muw) = value_of(&w);
            let predicted: f64 = grad
                .iter()
                .zip(w.iter().zip(v.iter()))
                .map(|(g, (a, b))| (g.conj() * (a - b)).re)
                .sum();
            if fw > f && fw - f >= ARMIJO * predicted {
                accepted = Some((w, fw, muw, r));
                break;
            }
            step *= 0.5;
            backtracked = true;
        }
        let Some((w, fw, muw, r)) = accepted else {
            hit_cap = false;
            break;
        };
        let rel = (fw - f) / f.abs().max(1e-12);
        v = w;
        f = fw;
        mu = muw;
        repaired |= r;
        moved = true;
        step *= 2.0;
        // a small gain at a step that was never cut back may just mean the
        // step is still growing
        if rel < params.inner_rel_tol && backtracked {
            hit_cap = false;
            break;
        }
    }
    let point = if moved {
        eigs += 1;
        SpectrahedronPoint::from_matrix(v)
    } else {
        init.clone()
    };
    InnerOutcome {
        point,
        iterations,
        hit_cap,
        repaired,
        eigendecompositions: eigs,
    }
}
