//! RIS phase design: semidefinite relaxation of the unit-modulus problem,
//! solved by successive convex approximation of the difference-of-concave
//! sum rate, followed by Gaussian randomization back to unit modulus.

mod factored;
mod projected;

use std::f64::consts::LN_2;

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::channel::{complex_normal, CMat, CVec};
use crate::error::{Error, Result};
use crate::rate::{sum_rate, LiftedForm, MultipleAccess};
use crate::scenario::{InnerSolver, ScaParams, ScenarioConfig, User};

pub use projected::project_spectrahedron;

/// Feasible point of the relaxation: Hermitian PSD with unit diagonal,
/// stored together with a factor `F` such that `V = F F^H`.
#[derive(Debug, Clone)]
pub struct SpectrahedronPoint {
    pub matrix: CMat,
    pub factor: CMat,
}

impl SpectrahedronPoint {
    pub fn from_phases(v: &CVec) -> Self {
        let factor = CMat::from_column_slice(v.len(), 1, v.as_slice());
        Self {
            matrix: &factor * factor.adjoint(),
            factor,
        }
    }

    pub fn from_factor(factor: CMat) -> Self {
        Self {
            matrix: &factor * factor.adjoint(),
            factor,
        }
    }

    /// Factor from an eigendecomposition; eigenvalues below `1e-12 * max`
    /// are dropped.
    pub fn from_matrix(matrix: CMat) -> Self {
        let eig = SymmetricEigen::new(matrix.clone());
        let top = eig.eigenvalues.max().max(0.0);
        let keep: Vec<usize> = (0..eig.eigenvalues.len())
            .filter(|&i| eig.eigenvalues[i] > 1e-12 * top)
            .collect();
        let n = matrix.nrows();
        let mut factor = CMat::zeros(n, keep.len().max(1));
        for (c, &i) in keep.iter().enumerate() {
            let s = Complex64::from(eig.eigenvalues[i].sqrt());
            factor.set_column(c, &(eig.eigenvectors.column(i) * s));
        }
        Self { matrix, factor }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn rank(&self) -> usize {
        self.factor.ncols()
    }

    /// Max deviations from Hermitian symmetry and unit diagonal, and the
    /// smallest eigenvalue.
    pub fn feasibility(&self) -> (f64, f64, f64) {
        let v = &self.matrix;
        let herm = (v - v.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let diag = (0..v.nrows()).map(|i| (v[(i, i)] - 1.0).norm()).fold(0.0, f64::max);
        let lmin = SymmetricEigen::new(v.clone()).eigenvalues.min();
        (herm, diag, lmin)
    }
}

/// `weight * log2(1 + scale * mu_user)`
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogTerm {
    pub user: User,
    pub weight: f64,
    pub scale: f64,
}

impl LogTerm {
    fn value(&self, mu: [f64; 2]) -> f64 {
        self.weight * (self.scale * mu[self.user.index()]).ln_1p() / LN_2
    }

    fn slope(&self, mu: [f64; 2]) -> f64 {
        self.weight * self.scale / ((1.0 + self.scale * mu[self.user.index()]) * LN_2)
    }
}

/// Sum rate written as concave terms minus at most one concave term, in the
/// lifted gains `mu = (Tr(A_n V), Tr(A_m V))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DcObjective {
    pub concave: Vec<LogTerm>,
    pub subtracted: Option<LogTerm>,
}

impl DcObjective {
    /// `log2(1 + a_n rho mu_n) + log2(1 + (a_n + a_m) rho mu_m) - log2(1 + a_n rho mu_m)`
    pub fn noma(cfg: &ScenarioConfig) -> Self {
        Self {
            concave: vec![
                LogTerm {
                    user: User::Near,
                    weight: 1.0,
                    scale: cfg.a_n * cfg.rho,
                },
                LogTerm {
                    user: User::Far,
                    weight: 1.0,
                    scale: (cfg.a_n + cfg.a_m) * cfg.rho,
                },
            ],
            subtracted: Some(LogTerm {
                user: User::Far,
                weight: 1.0,
                scale: cfg.a_n * cfg.rho,
            }),
        }
    }

    pub fn oma(cfg: &ScenarioConfig) -> Self {
        Self {
            concave: vec![
                LogTerm {
                    user: User::Near,
                    weight: 0.5,
                    scale: cfg.rho,
                },
                LogTerm {
                    user: User::Far,
                    weight: 0.5,
                    scale: cfg.rho,
                },
            ],
            subtracted: None,
        }
    }

    pub fn for_access(access: MultipleAccess, cfg: &ScenarioConfig) -> Self {
        match access {
            MultipleAccess::Noma => Self::noma(cfg),
            MultipleAccess::Oma => Self::oma(cfg),
        }
    }

    pub fn value(&self, mu: [f64; 2]) -> f64 {
        let mu = [mu[0].max(0.0), mu[1].max(0.0)];
        let plus: f64 = self.concave.iter().map(|t| t.value(mu)).sum();
        plus - self.subtracted.map_or(0.0, |t| t.value(mu))
    }
}

/// Checked lifted gains; slightly negative values from round-off are clipped.
pub fn lifted_gains(v: &CMat, forms: [&LiftedForm; 2]) -> Result<[f64; 2]> {
    let mut mu = [0.0; 2];
    for (i, f) in forms.iter().enumerate() {
        if f.dim() != v.nrows() || v.nrows() != v.ncols() {
            return Err(Error::Shape(format!(
                "V is {}x{}, lifted form is {}x{}",
                v.nrows(),
                v.ncols(),
                f.dim(),
                f.dim()
            )));
        }
        let t = f.trace_with(v);
        if t < -1e-10 {
            return Err(Error::NumericalInfeasibility(format!("negative lifted gain {t}")));
        }
        mu[i] = t.max(0.0);
    }
    Ok(mu)
}

/// NOMA sum rate of a relaxed point.
pub fn dc_objective(v: &CMat, a_n: &LiftedForm, a_m: &LiftedForm, cfg: &ScenarioConfig) -> Result<f64> {
    Ok(DcObjective::noma(cfg).value(lifted_gains(v, [a_n, a_m])?))
}

/// First-order upper bound of the subtracted term at `mu_t`:
/// `value + slope * (mu - mu_t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minorant {
    pub user: User,
    pub mu_t: f64,
    pub value: f64,
    pub slope: f64,
}

/// Linearization of `log2(1 + a_n rho Tr(A_m V))` at `V_t`.
pub fn sca_minorant(v_t: &CMat, a_m: &LiftedForm, cfg: &ScenarioConfig) -> Result<Minorant> {
    let mu = a_m.trace_with(v_t);
    if mu < -1e-10 {
        return Err(Error::NumericalInfeasibility(format!("negative lifted gain {mu}")));
    }
    let term = LogTerm {
        user: User::Far,
        weight: 1.0,
        scale: cfg.a_n * cfg.rho,
    };
    Ok(minorant_of(term, mu.max(0.0)))
}

fn minorant_of(term: LogTerm, mu_t: f64) -> Minorant {
    let mut mu = [0.0; 2];
    mu[term.user.index()] = mu_t;
    Minorant {
        user: term.user,
        mu_t,
        value: term.value(mu),
        slope: term.slope(mu),
    }
}

/// Concave surrogate maximized by the inner solvers.
pub(crate) struct Surrogate<'a> {
    pub forms: [&'a LiftedForm; 2],
    pub objective: &'a DcObjective,
    pub minorant: Option<Minorant>,
}

impl Surrogate<'_> {
    pub fn value(&self, mu: [f64; 2]) -> f64 {
        let mu = [mu[0].max(0.0), mu[1].max(0.0)];
        let plus: f64 = self.objective.concave.iter().map(|t| t.value(mu)).sum();
        let minus = self
            .minorant
            .map_or(0.0, |l| l.value + l.slope * (mu[l.user.index()] - l.mu_t));
        plus - minus
    }

    /// `dF/dmu` per user; the matrix gradient is `c_n A_n + c_m A_m`.
    pub fn coefficients(&self, mu: [f64; 2]) -> [f64; 2] {
        let mu = [mu[0].max(0.0), mu[1].max(0.0)];
        let mut c = [0.0; 2];
        for t in &self.objective.concave {
            c[t.user.index()] += t.slope(mu);
        }
        if let Some(l) = self.minorant {
            c[l.user.index()] -= l.slope;
        }
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PhaseWarning {
    InnerIterationCap,
    ScaIterationCap,
    ProjectionRepair,
}

#[derive(Debug, Clone)]
pub(crate) struct InnerOutcome {
    pub point: SpectrahedronPoint,
    pub iterations: usize,
    pub hit_cap: bool,
    pub repaired: bool,
    pub eigendecompositions: usize,
}

pub fn resolve_solver(params: &ScaParams, m: usize) -> InnerSolver {
    match params.solver {
        InnerSolver::Auto if m <= params.auto_projected_max_m => InnerSolver::ProjectedGradient,
        InnerSolver::Auto => InnerSolver::Factored,
        s => s,
    }
}

/// Relaxed optimum and the SCA value trace.
#[derive(Debug, Clone)]
pub struct ScaOutcome {
    pub point: SpectrahedronPoint,
    pub value: f64,
    pub initial: f64,
    /// Objective after each SCA iteration.
    pub trace: Vec<f64>,
    pub inner_iterations: usize,
    pub eigendecompositions: usize,
    pub warnings: Vec<PhaseWarning>,
}

/// Repeatedly maximize the concave surrogate tightened at the current point
/// until the objective changes by less than `epsilon`.
pub fn sca_loop(
    forms: [&LiftedForm; 2],
    objective: &DcObjective,
    v_init: &CVec,
    params: &ScaParams,
) -> Result<ScaOutcome> {
    let m = v_init.len();
    if forms.iter().any(|f| f.dim() != m) {
        return Err(Error::Shape(format!(
            "phase vector has {m} entries, forms are {}",
            forms[0].dim()
        )));
    }
    if m == 0 {
        return Err(Error::EmptyDomain("RIS has no elements".into()));
    }
    let solver = resolve_solver(params, m);
    let mut point = SpectrahedronPoint::from_phases(v_init);
    let mut value = objective.value(lifted_gains(&point.matrix, forms)?);
    let initial = value;
    let mut trace = Vec::new();
    let mut warnings = Vec::new();
    let mut inner_iterations = 0;
    let mut eigendecompositions = 0;
    let mut converged = false;
    for _ in 0..params.max_iters {
        let minorant = match objective.subtracted {
            Some(t) => {
                let mu = lifted_gains(&point.matrix, forms)?;
                Some(minorant_of(t, mu[t.user.index()]))
            }
            None => None,
        };
        let sur = Surrogate {
            forms,
            objective,
            minorant,
        };
        let out = match solver {
            InnerSolver::Factored => factored::solve(&sur, &point, params),
            _ => projected::solve(&sur, &point, params),
        };
        inner_iterations += out.iterations;
        eigendecompositions += out.eigendecompositions;
        if out.hit_cap && !warnings.contains(&PhaseWarning::InnerIterationCap) {
            warnings.push(PhaseWarning::InnerIterationCap);
        }
        if out.repaired && !warnings.contains(&PhaseWarning::ProjectionRepair) {
            warnings.push(PhaseWarning::ProjectionRepair);
        }
        let new_value = objective.value(lifted_gains(&out.point.matrix, forms)?);
        let change = new_value - value;
        // the inner solvers never return a point below their start, so the
        // true objective cannot drop; guard against round-off anyway
        if new_value >= value {
            point = out.point;
            value = new_value;
        }
        trace.push(value);
        if change.abs() < params.epsilon {
            converged = true;
            break;
        }
    }
    if !converged {
        warnings.push(PhaseWarning::ScaIterationCap);
    }
    Ok(ScaOutcome {
        point,
        value,
        initial,
        trace,
        inner_iterations,
        eigendecompositions,
        warnings,
    })
}

fn project_phases(u: &CVec) -> CVec {
    u.map(|z| {
        if z.norm() > 0.0 {
            Complex64::from_polar(1.0, z.arg())
        } else {
            Complex64::new(1.0, 0.0)
        }
    })
}

/// Unit-modulus phases of the principal eigenvector of `F F^H`.
pub fn principal_phases(point: &SpectrahedronPoint) -> CVec {
    let f = &point.factor;
    let gram = f.adjoint() * f;
    let eig = SymmetricEigen::new(gram);
    let top = eig.eigenvalues.imax();
    let y = eig.eigenvectors.column(top).into_owned();
    project_phases(&(f * y))
}

#[derive(Debug, Clone)]
pub struct Randomized {
    pub v: CVec,
    pub r_feas: f64,
    pub candidates: usize,
}

/// Best unit-modulus vector among `draws` Gaussian samples `F w`, the
/// principal eigenvector and any `extra` candidates, scored by the true sum
/// rate.
pub fn gaussian_randomize<R: Rng + ?Sized>(
    point: &SpectrahedronPoint,
    forms: [&LiftedForm; 2],
    access: MultipleAccess,
    cfg: &ScenarioConfig,
    draws: usize,
    extra: &[CVec],
    rng: &mut R,
) -> Result<Randomized> {
    let m = point.dim();
    if extra.iter().any(|v| v.len() != m) {
        return Err(Error::Shape("candidate length does not match the surface".into()));
    }
    let score = |v: &CVec| sum_rate(access, forms[0].gain(v), forms[1].gain(v), cfg);
    let mut best_v = principal_phases(point);
    let mut best = score(&best_v);
    let consider = |v: CVec, best_v: &mut CVec, best: &mut f64| {
        let s = score(&v);
        if s > *best {
            *best = s;
            *best_v = v;
        }
    };
    let r = point.rank();
    for _ in 0..draws {
        let w = CVec::from_fn(r, |_, _| complex_normal(rng));
        consider(project_phases(&(&point.factor * w)), &mut best_v, &mut best);
    }
    for v in extra {
        consider(v.clone(), &mut best_v, &mut best);
    }
    Ok(Randomized {
        v: best_v,
        r_feas: best,
        candidates: 1 + draws + extra.len(),
    })
}

#[derive(Debug, Clone)]
pub struct PhaseSolution {
    pub v: CVec,
    pub relaxed: SpectrahedronPoint,
    pub r_app: f64,
    pub r_feas: f64,
    /// `(R_app - R_feas) / R_app`, zero when `R_app = 0`.
    pub eta: f64,
    pub sca_trace: Vec<f64>,
    pub inner_iterations: usize,
    pub eigendecompositions: usize,
    pub warnings: Vec<PhaseWarning>,
}

pub fn relaxation_gap(r_app: f64, r_feas: f64) -> f64 {
    if r_app == 0.0 {
        0.0
    } else {
        (r_app - r_feas) / r_app
    }
}

/// `iteration,r_app` rows, one per SCA iteration, numbered from 1.
pub fn write_sca_trace<W: std::io::Write>(out: W, trace: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "r_app"])?;
    for (i, r) in trace.iter().enumerate() {
        w.write_record([(i + 1).to_string(), r.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Extra SCA passes allowed when a randomized vector beats the relaxed value.
const MAX_RESTARTS: usize = 4;

/// Full phase step: SCA on the relaxation started from `v_init`, then
/// randomization with `v_init` kept as a candidate. A candidate scoring above
/// the relaxed value means the loop stopped short, so it is resumed from that
/// candidate.
pub fn optimize_phases<R: Rng + ?Sized>(
    forms: [&LiftedForm; 2],
    access: MultipleAccess,
    v_init: &CVec,
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> Result<PhaseSolution> {
    let objective = DcObjective::for_access(access, cfg);
    let mut sca = sca_loop(forms, &objective, v_init, &cfg.sca)?;
    let mut trace = sca.trace.clone();
    let mut inner_iterations = sca.inner_iterations;
    let mut eigendecompositions = sca.eigendecompositions;
    let mut warnings = sca.warnings.clone();
    let mut incumbent = v_init.clone();
    let mut restarts = 0;
    let rnd = loop {
        let rnd = gaussian_randomize(
            &sca.point,
            forms,
            access,
            cfg,
            cfg.sca.randomizations,
            std::slice::from_ref(&incumbent),
            rng,
        )?;
        if rnd.r_feas <= sca.value || restarts == MAX_RESTARTS {
            break rnd;
        }
        restarts += 1;
        let again = sca_loop(forms, &objective, &rnd.v, &cfg.sca)?;
        incumbent = rnd.v;
        inner_iterations += again.inner_iterations;
        eigendecompositions += again.eigendecompositions;
        for w in &again.warnings {
            if !warnings.contains(w) {
                warnings.push(*w);
            }
        }
        if again.value <= sca.value {
            break Randomized {
                v: incumbent.clone(),
                r_feas: rnd.r_feas,
                candidates: rnd.candidates,
            };
        }
        trace.extend_from_slice(&again.trace);
        sca = again;
    };
    Ok(PhaseSolution {
        v: rnd.v,
        r_app: sca.value,
        r_feas: rnd.r_feas,
        eta: relaxation_gap(sca.value, rnd.r_feas),
        relaxed: sca.point,
        sca_trace: trace,
        inner_iterations,
        eigendecompositions,
        warnings,
    })
}
