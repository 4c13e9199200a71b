//! Alternating optimization over ports, RIS position and RIS phases.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::channel::{CVec, ChannelRealization};
use crate::error::{Error, Result};
use crate::phase_sdr::{optimize_phases, resolve_solver, PhaseWarning};
use crate::placement_pso::pso_optimize;
use crate::port_select::best_port;
use crate::rate::{effective_gain, lift_matrix, rates, sum_rate, MultipleAccess, PortIndex, RateReport};
use crate::scenario::{InnerSolver, Point3, ScenarioConfig, User};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PortMode {
    Exhaustive,
    /// `[near, far]`, kept for the whole run.
    Fixed([PortIndex; 2]),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AoOptions {
    pub access: MultipleAccess,
    pub ports: PortMode,
}

impl Default for AoOptions {
    fn default() -> Self {
        Self {
            access: MultipleAccess::Noma,
            ports: PortMode::Exhaustive,
        }
    }
}

/// Work actually performed by one run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct OpCounts {
    pub port_scans: usize,
    pub pso_iterations: usize,
    pub pso_evaluations: usize,
    pub sca_iterations: usize,
    pub inner_iterations: usize,
    pub eigendecompositions: usize,
    pub randomizations: usize,
}

impl OpCounts {
    pub fn add(&mut self, other: &OpCounts) {
        self.port_scans += other.port_scans;
        self.pso_iterations += other.pso_iterations;
        self.pso_evaluations += other.pso_evaluations;
        self.sca_iterations += other.sca_iterations;
        self.inner_iterations += other.inner_iterations;
        self.eigendecompositions += other.eigendecompositions;
        self.randomizations += other.randomizations;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AoWarning {
    Phase(PhaseWarning),
    OuterIterationCap,
}

/// State after each subproblem of one outer iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AoRecord {
    pub iteration: usize,
    pub ports: [PortIndex; 2],
    pub position: [f64; 3],
    pub r_after_ports: f64,
    pub r_after_position: f64,
    pub r_after_phases: f64,
    pub r_n: f64,
    pub r_m: f64,
    pub eta: f64,
    pub pso_iterations: usize,
    pub sca_iterations: usize,
}

/// Variables after one full outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct AoIterate {
    pub ports: [PortIndex; 2],
    pub q_r: Point3,
    pub v: CVec,
}

#[derive(Debug, Clone)]
pub struct AoSolution {
    pub ports: [PortIndex; 2],
    pub q_r: Point3,
    pub v: CVec,
    /// Fresh evaluation at the returned variables.
    pub r_star: f64,
    pub report: RateReport,
    pub records: Vec<AoRecord>,
    pub iterates: Vec<AoIterate>,
    /// Relaxation gap of the last phase step.
    pub eta: f64,
    pub iterations: usize,
    pub converged: bool,
    pub counts: OpCounts,
    pub warnings: Vec<AoWarning>,
}

#[derive(Serialize)]
struct SolutionDoc<'a> {
    ports: [PortIndex; 2],
    q_r: [f64; 3],
    phases: Vec<f64>,
    r_star: f64,
    report: &'a RateReport,
    eta: f64,
    iterations: usize,
    converged: bool,
    counts: OpCounts,
    warnings: &'a [AoWarning],
    records: &'a [AoRecord],
}

impl AoSolution {
    /// Sum rate after each full outer iteration.
    pub fn trace(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.r_after_phases).collect()
    }

    pub fn to_json(&self) -> String {
        let doc = SolutionDoc {
            ports: self.ports,
            q_r: [self.q_r[0], self.q_r[1], self.q_r[2]],
            phases: self.v.iter().map(|z| z.arg()).collect(),
            r_star: self.r_star,
            report: &self.report,
            eta: self.eta,
            iterations: self.iterations,
            converged: self.converged,
            counts: self.counts,
            warnings: &self.warnings,
            records: &self.records,
        };
        serde_json::to_string_pretty(&doc).expect("solution serializes")
    }
}

/// Gains of both users at the given variables.
pub fn user_gains(
    realization: &ChannelRealization,
    q_r: &Point3,
    ports: &[PortIndex; 2],
    v: &CVec,
) -> Result<[f64; 2]> {
    let h_br = realization.assemble_bs_ris(q_r)?;
    let mut g = [0.0; 2];
    for user in User::BOTH {
        let h = realization.ris_user_port(q_r, user, ports[user.index()].column())?;
        g[user.index()] = effective_gain(&h_br, v, &h)?;
    }
    Ok(g)
}

/// Rates at the given variables, using `config` for the power parameters.
pub fn evaluate(
    config: &ScenarioConfig,
    realization: &ChannelRealization,
    access: MultipleAccess,
    q_r: &Point3,
    ports: &[PortIndex; 2],
    v: &CVec,
) -> Result<RateReport> {
    let g = user_gains(realization, q_r, ports, v)?;
    rates(access, g[0], g[1], config)
}

fn sum_rate_at(
    config: &ScenarioConfig,
    realization: &ChannelRealization,
    access: MultipleAccess,
    q_r: &Point3,
    ports: &[PortIndex; 2],
    v: &CVec,
) -> Result<f64> {
    let g = user_gains(realization, q_r, ports, v)?;
    Ok(sum_rate(access, g[0], g[1], config))
}

fn select_ports(realization: &ChannelRealization, q_r: &Point3, v: &CVec) -> Result<[PortIndex; 2]> {
    let cfg = realization.config();
    let h_br = realization.assemble_bs_ris(q_r)?;
    let mut out = [PortIndex { k1: 1, k2: 1, k: 1 }; 2];
    for user in User::BOTH {
        let h_ri = realization.assemble_ris_user(q_r, user)?;
        out[user.index()] = best_port(&h_br, v, &h_ri, (cfg.k1, cfg.k2))?.0;
    }
    Ok(out)
}

/// NOMA run with exhaustive port selection.
pub fn alternating_optimize<R: Rng + ?Sized>(
    config: &ScenarioConfig,
    realization: &ChannelRealization,
    rng: &mut R,
) -> Result<AoSolution> {
    alternating_optimize_with(config, realization, &AoOptions::default(), rng)
}

/// Ports, then position, then phases, until the sum rate after a full
/// iteration moves by at most `epsilon` or `max_outer_iters` is reached.
/// Starts from the box center with all-ones phases.
pub fn alternating_optimize_with<R: Rng + ?Sized>(
    config: &ScenarioConfig,
    realization: &ChannelRealization,
    options: &AoOptions,
    rng: &mut R,
) -> Result<AoSolution> {
    let rcfg = realization.config();
    if rcfg.m() != config.m() || rcfg.k1 != config.k1 || rcfg.k2 != config.k2 || rcfg.l != config.l {
        return Err(Error::Shape("config and realization dimensions differ".into()));
    }
    if let PortMode::Fixed(p) = options.ports {
        for port in p {
            PortIndex::from_grid(port.k1, port.k2, config.k1, config.k2)?;
        }
    }
    let access = options.access;
    let mut q = config.ris_box.center();
    let mut v = CVec::from_element(config.m(), Complex64::new(1.0, 0.0));
    let mut ports = match options.ports {
        PortMode::Fixed(p) => p,
        PortMode::Exhaustive => [PortIndex { k1: 1, k2: 1, k: 1 }; 2],
    };
    let mut r_prev = 0.0;
    let mut counts = OpCounts::default();
    let mut records = Vec::new();
    let mut iterates = Vec::new();
    let mut warnings: Vec<AoWarning> = Vec::new();
    let mut eta = 0.0;
    let mut converged = false;

    for iteration in 1..=config.ao.max_outer_iters {
        if options.ports == PortMode::Exhaustive {
            ports = select_ports(realization, &q, &v)?;
            counts.port_scans += 2;
        }
        let r_ports = sum_rate_at(config, realization, access, &q, &ports, &v)?;

        let fitness =
            |cand: &Point3| sum_rate_at(config, realization, access, cand, &ports, &v).unwrap_or(f64::NEG_INFINITY);
        let pso = pso_optimize(fitness, &config.ris_box, &config.pso, Some(q), rng)?;
        counts.pso_iterations += pso.iterations;
        counts.pso_evaluations += pso.evaluations;
        if pso.value >= r_ports {
            q = pso.position;
        }
        let r_pos = sum_rate_at(config, realization, access, &q, &ports, &v)?;

        let h_br = realization.assemble_bs_ris(&q)?;
        let a_n = lift_matrix(&h_br, &realization.ris_user_port(&q, User::Near, ports[0].column())?)?;
        let a_m = lift_matrix(&h_br, &realization.ris_user_port(&q, User::Far, ports[1].column())?)?;
        let phase = optimize_phases([&a_n, &a_m], access, &v, config, rng)?;
        counts.sca_iterations += phase.sca_trace.len();
        counts.inner_iterations += phase.inner_iterations;
        counts.eigendecompositions += phase.eigendecompositions;
        counts.randomizations += config.sca.randomizations;
        for w in &phase.warnings {
            let w = AoWarning::Phase(*w);
            if !warnings.contains(&w) {
                warnings.push(w);
            }
        }
        v = phase.v;
        eta = phase.eta;
        let report = evaluate(config, realization, access, &q, &ports, &v)?;
        records.push(AoRecord {
            iteration,
            ports,
            position: [q[0], q[1], q[2]],
            r_after_ports: r_ports,
            r_after_position: r_pos,
            r_after_phases: report.r_sum,
            r_n: report.r_n,
            r_m: report.r_m,
            eta,
            pso_iterations: pso.iterations,
            sca_iterations: phase.sca_trace.len(),
        });
        iterates.push(AoIterate {
            ports,
            q_r: q,
            v: v.clone(),
        });
        if (report.r_sum - r_prev).abs() <= config.ao.epsilon {
            converged = true;
            break;
        }
        r_prev = report.r_sum;
    }
    if !converged {
        warnings.push(AoWarning::OuterIterationCap);
    }
    let report = evaluate(config, realization, access, &q, &ports, &v)?;
    Ok(AoSolution {
        ports,
        q_r: q,
        v,
        r_star: report.r_sum,
        report,
        iterations: records.len(),
        records,
        iterates,
        eta,
        converged,
        counts,
        warnings,
    })
}

/// Nominal operation counts `I (K + S T L M K + L_sca M^4.5)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Complexity {
    pub port_term: f64,
    pub pso_term: f64,
    pub phase_term: f64,
    pub total: f64,
}

pub fn complexity_estimate(config: &ScenarioConfig, outer_iters: usize, sca_iters: usize) -> Complexity {
    let (k, m, l) = (config.k() as f64, config.m() as f64, config.l as f64);
    let s = config.pso.n_particles as f64;
    let t = config.pso.max_iters as f64;
    let i = outer_iters as f64;
    let port_term = i * k;
    let pso_term = i * s * t * l * m * k;
    let phase_term = i * sca_iters as f64 * m.powf(4.5);
    Complexity {
        port_term,
        pso_term,
        phase_term,
        total: port_term + pso_term + phase_term,
    }
}

/// Solver that will handle the phase step for this surface size.
pub fn phase_solver(config: &ScenarioConfig) -> InnerSolver {
    resolve_solver(&config.sca, config.m())
}
