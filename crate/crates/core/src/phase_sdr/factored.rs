//! Low-rank factored ascent: `V = U U^H` with unit-norm rows of `U`, so the
//! diagonal and PSD constraints hold by construction. Gradients go through
//! the `L x M` channel factors and never form an `M x M` matrix.

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{lifted_gains, InnerOutcome, SpectrahedronPoint, Surrogate};
use crate::channel::{complex_normal_matrix, CMat};
use crate::scenario::ScaParams;

const MAX_BACKTRACKS: usize = 40;
/// Size of the random spread added to a lower-rank start.
const SPREAD: f64 = 1e-3;

pub(crate) fn default_rank(m: usize) -> usize {
    (((2 * m) as f64).sqrt().ceil() as usize + 1).min(m).max(1)
}

fn normalize_rows(u: &mut CMat) {
    for mut row in u.row_iter_mut() {
        let n = row.norm();
        if n > 0.0 {
            row /= Complex64::from(n);
        } else {
            row.fill(Complex64::new(0.0, 0.0));
            row[0] = Complex64::new(1.0, 0.0);
        }
    }
}

fn start_factor(init: &SpectrahedronPoint, r: usize) -> CMat {
    let m = init.dim();
    let mut f = init.factor.clone();
    if f.ncols() > r {
        // keep the dominant directions
        let eig = SymmetricEigen::new(f.adjoint() * &f);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let basis = CMat::from_fn(f.ncols(), r, |i, j| eig.eigenvectors[(i, order[j])]);
        f = &f * basis;
    }
    let mut u = CMat::zeros(m, r);
    u.columns_mut(0, f.ncols()).copy_from(&f);
    let mut rng = ChaCha8Rng::seed_from_u64(m as u64 ^ (r as u64) << 32);
    u += complex_normal_matrix(m, r, &mut rng) * Complex64::from(SPREAD / (r as f64).sqrt());
    normalize_rows(&mut u);
    u
}

fn gains(sur: &Surrogate, u: &CMat) -> ([CMat; 2], [f64; 2]) {
    let bu = [&sur.forms[0].factor * u, &sur.forms[1].factor * u];
    let mu = [bu[0].norm_squared(), bu[1].norm_squared()];
    (bu, mu)
}

pub(crate) fn solve(sur: &Surrogate, init: &SpectrahedronPoint, params: &ScaParams) -> InnerOutcome {
    let m = init.dim();
    let r = params.factor_rank.unwrap_or_else(|| default_rank(m)).clamp(1, m);
    let init_value = lifted_gains(&init.matrix, sur.forms)
        .map(|mu| sur.value(mu))
        .unwrap_or(f64::NEG_INFINITY);

    let mut u = start_factor(init, r);
    let (mut bu, mut mu) = gains(sur, &u);
    let mut f = sur.value(mu);
    let mut step = f64::NAN;
    let mut iterations = 0;
    let mut hit_cap = true;
    while iterations < params.inner_max_iters {
        iterations += 1;
        let c = sur.coefficients(mu);
        let mut g = sur.forms[0].factor.adjoint() * &bu[0] * Complex64::from(c[0])
            + sur.forms[1].factor.adjoint() * &bu[1] * Complex64::from(c[1]);
        // tangent space of the product of spheres
        for i in 0..m {
            let radial: f64 = (0..r).map(|j| (g[(i, j)] * u[(i, j)].conj()).re).sum();
            for j in 0..r {
                let uij = u[(i, j)];
                g[(i, j)] -= uij * radial;
            }
        }
        let gmax = g.row_iter().map(|row| row.norm()).fold(0.0, f64::max);
        if gmax == 0.0 {
            hit_cap = false;
            break;
        }
        if step.is_nan() {
            step = 0.5 / gmax;
        }
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let mut cand = &u + &g * Complex64::from(step);
            normalize_rows(&mut cand);
            let (cbu, cmu) = gains(sur, &cand);
            let cf = sur.value(cmu);
            if cf > f {
                accepted = Some((cand, cbu, cmu, cf));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, cbu, cmu, cf)) = accepted else {
            hit_cap = false;
            break;
        };
        let rel = (cf - f) / f.abs().max(1e-12);
        u = cand;
        bu = cbu;
        mu = cmu;
        f = cf;
        step *= 2.0;
        if rel < params.inner_rel_tol {
            hit_cap = false;
            break;
        }
    }
    let point = SpectrahedronPoint::from_factor(u);
    let exact = lifted_gains(&point.matrix, sur.forms)
        .map(|mu| sur.value(mu))
        .unwrap_or(f64::NEG_INFINITY);
    let point = if exact >= init_value { point } else { init.clone() };
    InnerOutcome {
        point,
        iterations,
        hit_cap,
        repaired: false,
        eigendecompositions: 0,
    }
}
