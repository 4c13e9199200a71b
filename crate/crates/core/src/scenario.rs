//! Scenario configuration, node geometry and the distance/angle primitives
//! used by the channel model.
//!
//! Scenario documents are TOML. Every key is optional; anything missing takes
//! the reference-scenario default listed on [`ScenarioConfig::default`]. Keys
//! ending in `_db` are given in decibels and converted to linear scale on load.
//! Optimizer knobs live in optional `[pso]`, `[sca]` and `[ao]` tables.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point3 = Vector3<f64>;

/// Axis-aligned deployment region for the RIS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RisBox {
    pub min: Point3,
    pub max: Point3,
}

impl RisBox {
    pub fn new(min: Point3, max: Point3) -> Self {
        Self { min, max }
    }

    pub fn is_degenerate(&self) -> bool {
        (0..3).any(|i| !(self.max[i] > self.min[i]) || !self.min[i].is_finite() || !self.max[i].is_finite())
    }

    pub fn center(&self) -> Point3 {
        (self.min + self.max) * 0.5
    }

    pub fn edges(&self) -> Point3 {
        self.max - self.min
    }

    pub fn contains(&self, p: &Point3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn clamp(&self, p: &Point3) -> Point3 {
        Point3::from_fn(|i, _| p[i].clamp(self.min[i], self.max[i]))
    }
}

/// Which solver handles each convex phase subproblem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerSolver {
    /// Projected gradient for small surfaces, factored ascent otherwise.
    Auto,
    /// Projected gradient over the full lifted matrix.
    ProjectedGradient,
    /// Unit-row low-rank factorization of the lifted matrix.
    Factored,
}

/// Where the swarm starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsoStart {
    /// Every particle at `init_position`.
    Point,
    /// One particle at `init_position`, the rest uniform over the box.
    Scatter,
}

/// Which hops an imperfect channel estimate perturbs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IpcsiHops {
    Both,
    BsRis,
    RisUser,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsoParams {
    pub n_particles: usize,
    pub max_iters: usize,
    pub w_max: f64,
    pub w_min: f64,
    pub c1: f64,
    pub c2: f64,
    /// Per-dimension velocity clamp; `None` means 0.2 times the box edge.
    pub v_max: Option<Point3>,
    pub init_position: Point3,
    pub start: PsoStart,
    /// Minimum improvement of the global best over `stall_iters` iterations.
    pub tol: f64,
    pub stall_iters: usize,
}

impl Default for PsoParams {
    fn default() -> Self {
        Self {
            n_particles: 60,
            max_iters: 100,
            w_max: 0.5,
            w_min: 0.4,
            c1: 2.0,
            c2: 2.0,
            v_max: None,
            init_position: Point3::new(50.0, 50.0, 75.0),
            start: PsoStart::Scatter,
            tol: 1e-6,
            stall_iters: 10,
        }
    }
}

impl PsoParams {
    pub fn velocity_limit(&self, bounds: &RisBox) -> Point3 {
        self.v_max.unwrap_or_else(|| bounds.edges() * 0.2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaParams {
    /// Absolute objective change that ends the outer loop.
    pub epsilon: f64,
    pub max_iters: usize,
    /// Gaussian randomization draws.
    pub randomizations: usize,
    pub inner_max_iters: usize,
    pub inner_rel_tol: f64,
    /// Fixed-point tolerance of the alternating projections.
    pub projection_tol: f64,
    pub solver: InnerSolver,
    /// Largest surface handled by the projected-gradient solver under `Auto`.
    pub auto_projected_max_m: usize,
    /// Column count of the factored solver; `None` picks `ceil(sqrt(2M)) + 1`.
    pub factor_rank: Option<usize>,
}

impl Default for ScaParams {
    fn default() -> Self {
        Self {
            epsilon: 1e-4,
            max_iters: 30,
            randomizations: 200,
            inner_max_iters: 2000,
            inner_rel_tol: 1e-6,
            projection_tol: 1e-8,
            solver: InnerSolver::Auto,
            auto_projected_max_m: 8,
            factor_rank: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AoParams {
    pub max_outer_iters: usize,
    pub epsilon: f64,
}

impl Default for AoParams {
    fn default() -> Self {
        Self {
            max_outer_iters: 20,
            epsilon: 1e-3,
        }
    }
}

/// All physical and algorithmic parameters of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub q_b: Point3,
    pub q_n: Point3,
    pub q_m: Point3,
    pub ris_box: RisBox,
    /// BS antenna count.
    pub l: usize,
    pub m1: usize,
    pub m2: usize,
    pub k1: usize,
    pub k2: usize,
    /// Normalized fluid aperture (wavelengths).
    pub w1: f64,
    pub w2: f64,
    pub lambda: f64,
    pub d: f64,
    pub d1: f64,
    pub d2: f64,
    /// Path gain at 1 m, linear.
    pub rho0: f64,
    pub alpha0: f64,
    pub kappa_br: f64,
    pub kappa_ri: f64,
    pub a_n: f64,
    pub a_m: f64,
    /// Transmit SNR, linear.
    pub rho: f64,
    /// Minimum port spacing in meters.
    pub d0: f64,
    pub r_min: f64,
    /// Channel-estimation error level for the imperfect-CSI scheme.
    pub sigma_e: f64,
    pub ipcsi_hops: IpcsiHops,
    pub pso: PsoParams,
    pub sca: ScaParams,
    pub ao: AoParams,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    /// The reference scenario: BS at the origin, users at (80,50,0) and
    /// (200,20,0), RIS box [10,100]x[10,100]x[20,40], 8x8 RIS, 20x10 ports
    /// over 2x1 wavelengths, 30 dB SNR, power split 0.2/0.8.
    fn default() -> Self {
        let lambda = 0.1;
        let (k1, k2, w1, w2) = (20, 10, 2.0, 1.0);
        Self {
            q_b: Point3::new(0.0, 0.0, 0.0),
            q_n: Point3::new(80.0, 50.0, 0.0),
            q_m: Point3::new(200.0, 20.0, 0.0),
            ris_box: RisBox::new(Point3::new(10.0, 10.0, 20.0), Point3::new(100.0, 100.0, 40.0)),
            l: 4,
            m1: 8,
            m2: 8,
            k1,
            k2,
            w1,
            w2,
            lambda,
            d: lambda / 2.0,
            d1: lambda / 2.0,
            d2: lambda / 2.0,
            rho0: 1.0,
            alpha0: 2.2,
            kappa_br: 1.0,
            kappa_ri: 0.0,
            a_n: 0.2,
            a_m: 0.8,
            rho: 1000.0,
            d0: native_port_pitch(k1, k2, w1, w2, lambda),
            r_min: 0.5,
            sigma_e: 0.1,
            ipcsi_hops: IpcsiHops::Both,
            pso: PsoParams::default(),
            sca: ScaParams::default(),
            ao: AoParams::default(),
            seed: 0,
        }
    }
}

/// Smallest physical distance between neighbouring ports of the grid.
/// Single-port axes do not contribute; a 1x1 grid has infinite pitch.
pub fn native_port_pitch(k1: usize, k2: usize, w1: f64, w2: f64, lambda: f64) -> f64 {
    let axis = |k: usize, w: f64| {
        if k > 1 {
            w * lambda / (k - 1) as f64
        } else {
            f64::INFINITY
        }
    };
    axis(k1, w1).min(axis(k2, w2))
}

impl ScenarioConfig {
    pub fn m(&self) -> usize {
        self.m1 * self.m2
    }

    pub fn k(&self) -> usize {
        self.k1 * self.k2
    }

    pub fn user_position(&self, user: User) -> Point3 {
        match user {
            User::Near => self.q_n,
            User::Far => self.q_m,
        }
    }

    /// Set the surface to `m` elements using the most square factorization.
    pub fn set_ris_elements(&mut self, m: usize) {
        let mut m1 = (m as f64).sqrt().floor() as usize;
        while m1 > 1 && !m.is_multiple_of(m1) {
            m1 -= 1;
        }
        let m1 = m1.max(1);
        self.m1 = m / m1;
        self.m2 = m1;
        if self.m1 < self.m2 {
            std::mem::swap(&mut self.m1, &mut self.m2);
        }
    }

    /// Recompute `d0` as the native grid pitch after the port grid changed.
    pub fn refresh_port_spacing(&mut self) {
        self.d0 = native_port_pitch(self.k1, self.k2, self.w1, self.w2, self.lambda);
    }

    /// Check every model constraint, reporting all violations at once.
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        let mut check = |ok: bool, msg: &str| {
            if !ok {
                bad.push(msg.to_string());
            }
        };
        check((self.a_n + self.a_m - 1.0).abs() <= 1e-12, "a_n + a_m must equal 1");
        check(self.a_m > self.a_n, "a_m must exceed a_n");
        check(self.a_n > 0.0, "a_n must be positive");
        check(
            !self.ris_box.is_degenerate(),
            "ris_box must have min < max on every axis",
        );
        check(self.kappa_br >= 0.0, "kappa_br must be non-negative");
        check(self.kappa_ri >= 0.0, "kappa_ri must be non-negative");
        check(self.alpha0 > 0.0, "alpha0 must be positive");
        check(self.l >= 1, "L must be at least 1");
        check(self.m1 >= 1 && self.m2 >= 1, "M1 and M2 must be at least 1");
        check(self.k1 >= 1 && self.k2 >= 1, "K1 and K2 must be at least 1");
        check(self.w1 >= 0.0 && self.w2 >= 0.0, "W1 and W2 must be non-negative");
        check(self.lambda > 0.0, "lambda must be positive");
        check(
            self.d > 0.0 && self.d1 > 0.0 && self.d2 > 0.0,
            "element spacings must be positive",
        );
        check(self.rho0 > 0.0, "rho0 must be positive");
        check(self.rho > 0.0, "rho must be positive");
        check(self.d0 >= 0.0, "d0 must be non-negative");
        check(self.sigma_e >= 0.0 && self.sigma_e < 1.0, "sigma_e must lie in [0, 1)");
        let pts = [self.q_b, self.q_n, self.q_m];
        check(
            pts.iter().all(|p| p.iter().all(|c| c.is_finite())),
            "node positions must be finite",
        );
        check(self.pso.n_particles >= 1, "pso.n_particles must be at least 1");
        check(
            self.pso.w_max >= self.pso.w_min && self.pso.w_min > 0.0,
            "pso inertia must satisfy w_max >= w_min > 0",
        );
        check(
            self.pso.c1 >= 0.0 && self.pso.c2 >= 0.0,
            "pso learning factors must be non-negative",
        );
        if let Some(v) = self.pso.v_max {
            check(v.iter().all(|c| *c > 0.0), "pso.v_max must be positive");
        }
        check(self.sca.max_iters >= 1, "sca.max_iters must be at least 1");
        check(self.sca.randomizations >= 1, "sca.randomizations must be at least 1");
        check(self.sca.epsilon > 0.0, "sca.epsilon must be positive");
        check(self.ao.max_outer_iters >= 1, "ao.max_outer_iters must be at least 1");
        check(self.ao.epsilon > 0.0, "ao.epsilon must be positive");
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(bad))
        }
    }

    /// Serialize back into a complete scenario document.
    pub fn to_toml(&self) -> String {
        let doc = ScenarioDoc::from_config(self);
        toml::to_string(&doc).expect("scenario document always serializes")
    }
}

/// The two NOMA users.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum User {
    /// Strong user, decodes with SIC.
    Near,
    /// Weak user, decodes treating the near user's signal as noise.
    Far,
}

impl User {
    pub const BOTH: [User; 2] = [User::Near, User::Far];

    pub fn index(self) -> usize {
        match self {
            User::Near => 0,
            User::Far => 1,
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

// ---------------------------------------------------------------------------
// Document schema
// ---------------------------------------------------------------------------

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PsoDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    n_particles: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_iters: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    w_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    w_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    c1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    c2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    v_max: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    init_position: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    start: Option<PsoStart>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    stall_iters: Option<usize>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScaDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_iters: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    randomizations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    inner_max_iters: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    inner_rel_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    projection_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    solver: Option<InnerSolver>,
    #[serde(skip_serializing_if = "Option::is_none")]
    auto_projected_max_m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    factor_rank: Option<usize>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AoDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    max_outer_iters: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    q_b: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    q_n: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    q_m: Option<[f64; 3]>,
    /// `[[x_min, x_max], [y_min, y_max], [z_min, z_max]]`
    #[serde(skip_serializing_if = "Option::is_none")]
    ris_box: Option<[[f64; 2]; 3]>,
    #[serde(rename = "L", alias = "l", skip_serializing_if = "Option::is_none")]
    l: Option<usize>,
    #[serde(rename = "M1", alias = "m1", skip_serializing_if = "Option::is_none")]
    m1: Option<usize>,
    #[serde(rename = "M2", alias = "m2", skip_serializing_if = "Option::is_none")]
    m2: Option<usize>,
    #[serde(rename = "K1", alias = "k1", skip_serializing_if = "Option::is_none")]
    k1: Option<usize>,
    #[serde(rename = "K2", alias = "k2", skip_serializing_if = "Option::is_none")]
    k2: Option<usize>,
    #[serde(rename = "W1", alias = "w1", skip_serializing_if = "Option::is_none")]
    w1: Option<f64>,
    #[serde(rename = "W2", alias = "w2", skip_serializing_if = "Option::is_none")]
    w2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    d: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    d1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    d2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rho0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rho0_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kappa_br: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kappa_br_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kappa_ri: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kappa_ri_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    a_n: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    a_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rho_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    d0: Option<f64>,
    #[serde(rename = "R_min", alias = "r_min", skip_serializing_if = "Option::is_none")]
    r_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma_e: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ipcsi_hops: Option<IpcsiHops>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default)]
    pso: PsoDoc,
    #[serde(default)]
    sca: ScaDoc,
    #[serde(default)]
    ao: AoDoc,
}

fn pick_db(field: &str, linear: Option<f64>, db: Option<f64>, default: f64) -> Result<f64> {
    match (linear, db) {
        (Some(_), Some(_)) => Err(Error::parse(field, format!("both `{field}` and `{field}_db` given"))),
        (Some(x), None) => Ok(x),
        (None, Some(x)) => Ok(db_to_linear(x)),
        (None, None) => Ok(default),
    }
}

fn vec3(a: [f64; 3]) -> Point3 {
    Point3::new(a[0], a[1], a[2])
}

fn arr3(p: &Point3) -> [f64; 3] {
    [p[0], p[1], p[2]]
}

impl ScenarioDoc {
    fn into_config(self) -> Result<ScenarioConfig> {
        let base = ScenarioConfig::default();
        let lambda = self.lambda.unwrap_or(base.lambda);
        let k1 = self.k1.unwrap_or(base.k1);
        let k2 = self.k2.unwrap_or(base.k2);
        let w1 = self.w1.unwrap_or(base.w1);
        let w2 = self.w2.unwrap_or(base.w2);
        let ris_box = match self.ris_box {
            Some(b) => RisBox::new(
                Point3::new(b[0][0], b[1][0], b[2][0]),
                Point3::new(b[0][1], b[1][1], b[2][1]),
            ),
            None => base.ris_box,
        };
        let p = self.pso;
        let pso = PsoParams {
            n_particles: p.n_particles.unwrap_or(base.pso.n_particles),
            max_iters: p.max_iters.unwrap_or(base.pso.max_iters),
            w_max: p.w_max.unwrap_or(base.pso.w_max),
            w_min: p.w_min.unwrap_or(base.pso.w_min),
            c1: p.c1.unwrap_or(base.pso.c1),
            c2: p.c2.unwrap_or(base.pso.c2),
            v_max: p.v_max.map(vec3),
            init_position: p.init_position.map(vec3).unwrap_or(base.pso.init_position),
            start: p.start.unwrap_or(base.pso.start),
            tol: p.tol.unwrap_or(base.pso.tol),
            stall_iters: p.stall_iters.unwrap_or(base.pso.stall_iters),
        };
        let s = self.sca;
        let sca = ScaParams {
            epsilon: s.epsilon.unwrap_or(base.sca.epsilon),
            max_iters: s.max_iters.unwrap_or(base.sca.max_iters),
            randomizations: s.randomizations.unwrap_or(base.sca.randomizations),
            inner_max_iters: s.inner_max_iters.unwrap_or(base.sca.inner_max_iters),
            inner_rel_tol: s.inner_rel_tol.unwrap_or(base.sca.inner_rel_tol),
            projection_tol: s.projection_tol.unwrap_or(base.sca.projection_tol),
            solver: s.solver.unwrap_or(base.sca.solver),
            auto_projected_max_m: s.auto_projected_max_m.unwrap_or(base.sca.auto_projected_max_m),
            factor_rank: s.factor_rank,
        };
        let ao = AoParams {
            max_outer_iters: self.ao.max_outer_iters.unwrap_or(base.ao.max_outer_iters),
            epsilon: self.ao.epsilon.unwrap_or(base.ao.epsilon),
        };
        let cfg = ScenarioConfig {
            q_b: self.q_b.map(vec3).unwrap_or(base.q_b),
            q_n: self.q_n.map(vec3).unwrap_or(base.q_n),
            q_m: self.q_m.map(vec3).unwrap_or(base.q_m),
            ris_box,
            l: self.l.unwrap_or(base.l),
            m1: self.m1.unwrap_or(base.m1),
            m2: self.m2.unwrap_or(base.m2),
            k1,
            k2,
            w1,
            w2,
            lambda,
            d: self.d.unwrap_or(lambda / 2.0),
            d1: self.d1.unwrap_or(lambda / 2.0),
            d2: self.d2.unwrap_or(lambda / 2.0),
            rho0: pick_db("rho0", self.rho0, self.rho0_db, base.rho0)?,
            alpha0: self.alpha0.unwrap_or(base.alpha0),
            kappa_br: pick_db("kappa_br", self.kappa_br, self.kappa_br_db, base.kappa_br)?,
            kappa_ri: pick_db("kappa_ri", self.kappa_ri, self.kappa_ri_db, base.kappa_ri)?,
            a_n: self.a_n.unwrap_or(base.a_n),
            a_m: self.a_m.unwrap_or(base.a_m),
            rho: pick_db("rho", self.rho, self.rho_db, base.rho)?,
            d0: self.d0.unwrap_or_else(|| native_port_pitch(k1, k2, w1, w2, lambda)),
            r_min: self.r_min.unwrap_or(base.r_min),
            sigma_e: self.sigma_e.unwrap_or(base.sigma_e),
            ipcsi_hops: self.ipcsi_hops.unwrap_or(base.ipcsi_hops),
            pso,
            sca,
            ao,
            seed: self.seed.unwrap_or(base.seed),
        };
        Ok(cfg)
    }

    fn from_config(c: &ScenarioConfig) -> Self {
        let b = &c.ris_box;
        ScenarioDoc {
            q_b: Some(arr3(&c.q_b)),
            q_n: Some(arr3(&c.q_n)),
            q_m: Some(arr3(&c.q_m)),
            ris_box: Some([[b.min[0], b.max[0]], [b.min[1], b.max[1]], [b.min[2], b.max[2]]]),
            l: Some(c.l),
            m1: Some(c.m1),
            m2: Some(c.m2),
            k1: Some(c.k1),
            k2: Some(c.k2),
            w1: Some(c.w1),
            w2: Some(c.w2),
            lambda: Some(c.lambda),
            d: Some(c.d),
            d1: Some(c.d1),
            d2: Some(c.d2),
            rho0: Some(c.rho0),
            rho0_db: None,
            alpha0: Some(c.alpha0),
            kappa_br: Some(c.kappa_br),
            kappa_br_db: None,
            kappa_ri: Some(c.kappa_ri),
            kappa_ri_db: None,
            a_n: Some(c.a_n),
            a_m: Some(c.a_m),
            rho: Some(c.rho),
            rho_db: None,
            // An infinite pitch (1x1 grid) has no TOML representation; it is
            // re-derived on load.
            d0: c.d0.is_finite().then_some(c.d0),
            r_min: Some(c.r_min),
            sigma_e: Some(c.sigma_e),
            ipcsi_hops: Some(c.ipcsi_hops),
            seed: Some(c.seed),
            pso: PsoDoc {
                n_particles: Some(c.pso.n_particles),
                max_iters: Some(c.pso.max_iters),
                w_max: Some(c.pso.w_max),
                w_min: Some(c.pso.w_min),
                c1: Some(c.pso.c1),
                c2: Some(c.pso.c2),
                v_max: c.pso.v_max.as_ref().map(arr3),
                init_position: Some(arr3(&c.pso.init_position)),
                start: Some(c.pso.start),
                tol: Some(c.pso.tol),
                stall_iters: Some(c.pso.stall_iters),
            },
            sca: ScaDoc {
                epsilon: Some(c.sca.epsilon),
                max_iters: Some(c.sca.max_iters),
                randomizations: Some(c.sca.randomizations),
                inner_max_iters: Some(c.sca.inner_max_iters),
                inner_rel_tol: Some(c.sca.inner_rel_tol),
                projection_tol: Some(c.sca.projection_tol),
                solver: Some(c.sca.solver),
                auto_projected_max_m: Some(c.sca.auto_projected_max_m),
                factor_rank: c.sca.factor_rank,
            },
            ao: AoDoc {
                max_outer_iters: Some(c.ao.max_outer_iters),
                epsilon: Some(c.ao.epsilon),
            },
        }
    }
}

/// Parse and validate a scenario document.
pub fn load_config(source: &str) -> Result<ScenarioConfig> {
    let de = toml::Deserializer::parse(source).map_err(|e| Error::parse("<document>", e.message().to_string()))?;
    let doc: ScenarioDoc = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let field = if path.is_empty() || path == "." {
            "<document>".to_string()
        } else {
            path
        };
        Error::parse(field, e.into_inner().message().to_string())
    })?;
    let cfg = doc.into_config()?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config_file(path: &std::path::Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)?;
    load_config(&text)
}

// ---------------------------------------------------------------------------
// Geometry primitives
// ---------------------------------------------------------------------------

pub fn distance(p: &Point3, q: &Point3) -> f64 {
    (p - q).norm()
}

/// Absolute direction cosines `(|dx|/d, |dy|/d, |dz|/d)` of a link.
///
/// For a BS-to-RIS link these are `(sin(el)cos(az), cos(departure), cos(el))`;
/// for a RIS-to-user link `(sin(el)cos(az), sin(el)sin(az), cos(el))`. Signs
/// are intentionally dropped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionCosines {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

pub fn direction_cosines(from: &Point3, to: &Point3) -> Result<DirectionCosines> {
    let delta = to - from;
    let d = delta.norm();
    if !(d > 0.0) {
        return Err(Error::DegenerateGeometry(format!(
            "coincident points ({}, {}, {})",
            from[0], from[1], from[2]
        )));
    }
    Ok(DirectionCosines {
        x: delta[0].abs() / d,
        y: delta[1].abs() / d,
        z: delta[2].abs() / d,
    })
}

/// Distances and direction cosines of every link for one RIS position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub d_br: f64,
    pub d_rn: f64,
    pub d_rm: f64,
    pub bs_ris: DirectionCosines,
    pub ris_near: DirectionCosines,
    pub ris_far: DirectionCosines,
}

impl Geometry {
    pub fn new(cfg: &ScenarioConfig, q_r: &Point3) -> Result<Self> {
        Ok(Self {
            d_br: distance(&cfg.q_b, q_r),
            d_rn: distance(q_r, &cfg.q_n),
            d_rm: distance(q_r, &cfg.q_m),
            bs_ris: direction_cosines(&cfg.q_b, q_r)?,
            ris_near: direction_cosines(q_r, &cfg.q_n)?,
            ris_far: direction_cosines(q_r, &cfg.q_m)?,
        })
    }

    pub fn ris_user(&self, user: User) -> (f64, DirectionCosines) {
        match user {
            User::Near => (self.d_rn, self.ris_near),
            User::Far => (self.d_rm, self.ris_far),
        }
    }
}
