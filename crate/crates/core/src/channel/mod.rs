//! Channel synthesis: steering vectors, Jakes port correlation and Rician
//! BS-RIS / RIS-user matrices.
//!
//! A [`ChannelRealization`] freezes the white NLoS draws of one trial. The
//! LoS terms and path loss are recomputed for whatever RIS position is
//! queried, so any placement search sees the same scattering environment and
//! the fitness is a deterministic function of the position.

mod bessel;

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::scenario::{direction_cosines, distance, IpcsiHops, Point3, ScenarioConfig, User};

pub use bessel::bessel_j0;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SteeringKind {
    UlaBs,
    UpaRisArrival,
    UpaRisDeparture,
    FasPort,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector {
    pub entries: CVec,
    pub kind: SteeringKind,
}

impl SteeringVector {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn phase_ramp(n: usize, step: f64) -> impl Iterator<Item = Complex64> {
    (0..n).map(move |i| Complex64::from_polar(1.0, step * i as f64))
}

/// Uniform linear array response; entry `l` is `exp(-j 2pi d l cos(phi) / lambda)`.
pub fn ula_steering(l: usize, d: f64, lambda: f64, cos_phi: f64) -> SteeringVector {
    let step = -2.0 * PI * d * cos_phi / lambda;
    SteeringVector {
        entries: CVec::from_iterator(l, phase_ramp(l, step)),
        kind: SteeringKind::UlaBs,
    }
}

/// Planar RIS response: Kronecker product of the x-axis ramp (driven by
/// `s_cos`) and the second-axis ramp (driven by `c`). Entry index is
/// `m1 * M2 + m2`.
pub fn upa_steering(
    m1: usize,
    m2: usize,
    d1: f64,
    d2: f64,
    lambda: f64,
    s_cos: f64,
    c: f64,
    kind: SteeringKind,
) -> SteeringVector {
    let xs: Vec<_> = phase_ramp(m1, -2.0 * PI * d1 * s_cos / lambda).collect();
    let zs: Vec<_> = phase_ramp(m2, -2.0 * PI * d2 * c / lambda).collect();
    let entries = CVec::from_iterator(m1 * m2, xs.iter().flat_map(|x| zs.iter().map(move |z| x * z)));
    SteeringVector { entries, kind }
}

fn axis_step(k: usize, w: f64) -> f64 {
    if k > 1 {
        w / (k - 1) as f64
    } else {
        0.0
    }
}

/// Fluid-antenna port response. Port `(k1, k2)` (0-based) sits at linear
/// index `k1 + k2 * K1` and has phase `2pi (W1 k1 s_cos/(K1-1) + W2 k2 s_sin/(K2-1))`.
/// A single-port axis contributes no phase.
pub fn fas_port_steering(k1: usize, k2: usize, w1: f64, w2: f64, s_cos: f64, s_sin: f64) -> SteeringVector {
    let a = 2.0 * PI * axis_step(k1, w1) * s_cos;
    let b = 2.0 * PI * axis_step(k2, w2) * s_sin;
    let entries = CVec::from_iterator(
        k1 * k2,
        (0..k2).flat_map(|j| (0..k1).map(move |i| Complex64::from_polar(1.0, a * i as f64 + b * j as f64))),
    );
    SteeringVector {
        entries,
        kind: SteeringKind::FasPort,
    }
}

/// Jakes correlation across the fluid-antenna ports and its PSD square root.
#[derive(Debug, Clone)]
pub struct PortCorrelation {
    pub r: DMatrix<f64>,
    /// Symmetric factor with `r_half * r_half^T` equal to `r` after clipping
    /// negative eigenvalues.
    pub r_half: DMatrix<f64>,
    /// Smallest eigenvalue of `r` before clipping.
    pub clip_floor: f64,
}

pub fn jakes_correlation(k1: usize, k2: usize, w1: f64, w2: f64) -> Result<PortCorrelation> {
    if k1 == 0 || k2 == 0 {
        return Err(Error::EmptyDomain("port grid has no ports".into()));
    }
    let (s1, s2) = (axis_step(k1, w1), axis_step(k2, w2));
    // Correlation depends only on the index offsets.
    let mut table = DMatrix::<f64>::zeros(k1, k2);
    for i in 0..k1 {
        for j in 0..k2 {
            let dist = ((i as f64 * s1).powi(2) + (j as f64 * s2).powi(2)).sqrt();
            table[(i, j)] = bessel_j0(2.0 * PI * dist)?;
        }
    }
    let k = k1 * k2;
    let r = DMatrix::from_fn(k, k, |a, b| {
        let (a1, a2) = (a % k1, a / k1);
        let (b1, b2) = (b % k1, b / k1);
        table[(a1.abs_diff(b1), a2.abs_diff(b2))]
    });
    let eig = SymmetricEigen::new(r.clone());
    let clip_floor = eig.eigenvalues.min();
    // eigenvalues at round-off level are treated as zero so that rank
    // deficient correlations give exactly repeated columns
    let noise = k as f64 * f64::EPSILON * eig.eigenvalues.max().max(0.0);
    let sqrt_vals = eig.eigenvalues.map(|l| if l > noise { l.sqrt() } else { 0.0 });
    let q = &eig.eigenvectors;
    let mut r_half = q * DMatrix::from_diagonal(&sqrt_vals) * q.transpose();
    r_half = (&r_half + r_half.transpose()) * 0.5;
    Ok(PortCorrelation { r, r_half, clip_floor })
}

impl PortCorrelation {
    pub fn for_config(cfg: &ScenarioConfig) -> Result<Self> {
        jakes_correlation(cfg.k1, cfg.k2, cfg.w1, cfg.w2)
    }
}

/// One standard complex Gaussian sample, `CN(0, 1)`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn complex_normal_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| complex_normal(rng))
}

fn path_amplitude(cfg: &ScenarioConfig, dist: f64) -> f64 {
    (cfg.rho0 * dist.powf(-cfg.alpha0)).sqrt()
}

/// Path gain `rho0 * d^-alpha0` for a link of length `dist`.
pub fn path_gain(cfg: &ScenarioConfig, dist: f64) -> f64 {
    cfg.rho0 * dist.powf(-cfg.alpha0)
}

/// Frozen stochastic state of one trial.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    config: ScenarioConfig,
    correlation: Arc<PortCorrelation>,
    z_br: CMat,
    z_rn: CMat,
    z_rm: CMat,
    // Position-independent parts, already weighted by their Rice share
    // (and by the estimation model for an imperfect-CSI view).
    los_br: f64,
    los_ri: f64,
    nlos_br: CMat,
    nlos_ri: [CMat; 2],
    estimate_error: Option<f64>,
}

/// Draw white NLoS matrices for `config`, computing its port correlation.
pub fn sample_realization<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> Result<ChannelRealization> {
    let corr = Arc::new(PortCorrelation::for_config(config)?);
    sample_realization_with(config, corr, rng)
}

/// As [`sample_realization`] with a precomputed correlation shared across trials.
pub fn sample_realization_with<R: Rng + ?Sized>(
    config: &ScenarioConfig,
    correlation: Arc<PortCorrelation>,
    rng: &mut R,
) -> Result<ChannelRealization> {
    let (l, m, k) = (config.l, config.m(), config.k());
    let z_br = complex_normal_matrix(l, m, rng);
    let z_rn = complex_normal_matrix(m, k, rng);
    let z_rm = complex_normal_matrix(m, k, rng);
    ChannelRealization::from_draws(config.clone(), correlation, z_br, z_rn, z_rm)
}

fn rice_weights(kappa: f64) -> (f64, f64) {
    if kappa.is_infinite() {
        (1.0, 0.0)
    } else {
        ((kappa / (kappa + 1.0)).sqrt(), (1.0 / (kappa + 1.0)).sqrt())
    }
}

fn correlate(z: &CMat, r_half: &DMatrix<f64>) -> CMat {
    let re = z.map(|c| c.re) * r_half;
    let im = z.map(|c| c.im) * r_half;
    CMat::from_fn(z.nrows(), z.ncols(), |i, j| Complex64::new(re[(i, j)], im[(i, j)]))
}

impl ChannelRealization {
    /// Rebuild a realization from stored white draws.
    pub fn from_draws(
        config: ScenarioConfig,
        correlation: Arc<PortCorrelation>,
        z_br: CMat,
        z_rn: CMat,
        z_rm: CMat,
    ) -> Result<Self> {
        let (l, m, k) = (config.l, config.m(), config.k());
        let shape_ok = z_br.shape() == (l, m)
            && z_rn.shape() == (m, k)
            && z_rm.shape() == (m, k)
            && correlation.r_half.shape() == (k, k);
        if !shape_ok {
            return Err(Error::Shape(format!(
                "draws {:?}/{:?}/{:?} do not match L={l}, M={m}, K={k}",
                z_br.shape(),
                z_rn.shape(),
                z_rm.shape()
            )));
        }
        let (los_br, nl_br) = rice_weights(config.kappa_br);
        let (los_ri, nl_ri) = rice_weights(config.kappa_ri);
        let nlos_br = &z_br * Complex64::from(nl_br);
        let nlos_ri = [
            correlate(&z_rn, &correlation.r_half) * Complex64::from(nl_ri),
            correlate(&z_rm, &correlation.r_half) * Complex64::from(nl_ri),
        ];
        Ok(Self {
            config,
            correlation,
            z_br,
            z_rn,
            z_rm,
            los_br,
            los_ri,
            nlos_br,
            nlos_ri,
            estimate_error: None,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn correlation(&self) -> &Arc<PortCorrelation> {
        &self.correlation
    }

    /// White draws `(Z_br, Z_rn, Z_rm)`.
    pub fn draws(&self) -> (&CMat, &CMat, &CMat) {
        (&self.z_br, &self.z_rn, &self.z_rm)
    }

    /// `Some(sigma_e)` when this is an estimated (imperfect-CSI) view.
    pub fn estimate_error(&self) -> Option<f64> {
        self.estimate_error
    }

    fn ensure_distinct(&self, a: &Point3, b: &Point3, what: &str) -> Result<f64> {
        let d = distance(a, b);
        if d > 0.0 {
            Ok(d)
        } else {
            Err(Error::DegenerateGeometry(format!("RIS coincides with {what}")))
        }
    }

    /// BS-to-RIS channel `H_br` (LxM) with the RIS at `q_r`.
    pub fn assemble_bs_ris(&self, q_r: &Point3) -> Result<CMat> {
        let cfg = &self.config;
        let d = self.ensure_distinct(&cfg.q_b, q_r, "the BS")?;
        let dc = direction_cosines(&cfg.q_b, q_r)?;
        let alpha_n = ula_steering(cfg.l, cfg.d, cfg.lambda, dc.y).entries;
        let alpha_r = upa_steering(
            cfg.m1,
            cfg.m2,
            cfg.d1,
            cfg.d2,
            cfg.lambda,
            dc.x,
            dc.z,
            SteeringKind::UpaRisArrival,
        )
        .entries;
        let amp = path_amplitude(cfg, d);
        let mut h = &alpha_n * alpha_r.adjoint() * Complex64::from(self.los_br);
        h += &self.nlos_br;
        h *= Complex64::from(amp);
        Ok(h)
    }

    fn user_steering(&self, q_r: &Point3, user: User) -> Result<(f64, CVec, CVec)> {
        let cfg = &self.config;
        let q_u = cfg.user_position(user);
        let d = self.ensure_distinct(q_r, &q_u, "a user")?;
        let dc = direction_cosines(q_r, &q_u)?;
        let a_t = upa_steering(
            cfg.m1,
            cfg.m2,
            cfg.d1,
            cfg.d2,
            cfg.lambda,
            dc.x,
            dc.z,
            SteeringKind::UpaRisDeparture,
        )
        .entries;
        let a_u = fas_port_steering(cfg.k1, cfg.k2, cfg.w1, cfg.w2, dc.x, dc.y).entries;
        Ok((path_amplitude(cfg, d), a_t, a_u))
    }

    /// RIS-to-user channel `H_ri` (MxK) with the RIS at `q_r`.
    pub fn assemble_ris_user(&self, q_r: &Point3, user: User) -> Result<CMat> {
        let (amp, a_t, a_u) = self.user_steering(q_r, user)?;
        let mut h = &a_t * a_u.adjoint() * Complex64::from(self.los_ri);
        h += &self.nlos_ri[user.index()];
        h *= Complex64::from(amp);
        Ok(h)
    }

    /// Column `port` (0-based linear index) of `H_ri`.
    pub fn ris_user_port(&self, q_r: &Point3, user: User, port: usize) -> Result<CVec> {
        let k = self.config.k();
        if port >= k {
            return Err(Error::Shape(format!("port {port} out of range for K={k}")));
        }
        let (amp, a_t, a_u) = self.user_steering(q_r, user)?;
        let los = Complex64::from(self.los_ri) * a_u[port].conj();
        let nlos = self.nlos_ri[user.index()].column(port);
        Ok(CVec::from_fn(a_t.len(), |i, _| (a_t[i] * los + nlos[i]) * amp))
    }

    /// An imperfect-CSI view: at every RIS position its assembled channels are
    /// `sqrt(1 - sigma^2) H + sigma sqrt(path gain) E` with `E` frozen white
    /// draws, on the hops selected by `hops`.
    pub fn estimated<R: Rng + ?Sized>(&self, sigma_e: f64, hops: IpcsiHops, rng: &mut R) -> Result<Self> {
        if !(0.0..1.0).contains(&sigma_e) {
            return Err(Error::Domain(format!("sigma_e = {sigma_e} outside [0, 1)")));
        }
        let (l, m, k) = (self.config.l, self.config.m(), self.config.k());
        let e_br = complex_normal_matrix(l, m, rng);
        let e_rn = complex_normal_matrix(m, k, rng);
        let e_rm = complex_normal_matrix(m, k, rng);
        let keep = (1.0 - sigma_e * sigma_e).sqrt();
        let mix = |nlos: &CMat, e: &CMat| nlos * Complex64::from(keep) + e * Complex64::from(sigma_e);
        let mut out = self.clone();
        if matches!(hops, IpcsiHops::Both | IpcsiHops::BsRis) {
            out.los_br *= keep;
            out.nlos_br = mix(&self.nlos_br, &e_br);
        }
        if matches!(hops, IpcsiHops::Both | IpcsiHops::RisUser) {
            out.los_ri *= keep;
            out.nlos_ri = [mix(&self.nlos_ri[0], &e_rn), mix(&self.nlos_ri[1], &e_rm)];
        }
        out.estimate_error = Some(sigma_e);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_modulus(v: &SteeringVector) -> bool {
        v.entries.iter().all(|c| (c.norm() - 1.0).abs() <= 1e-12) && v.entries[0] == Complex64::new(1.0, 0.0)
    }

    #[test]
    fn ula_examples() {
        let v = ula_steering(1, 0.05, 0.1, 0.7);
        assert_eq!(v.entries.as_slice(), &[Complex64::new(1.0, 0.0)]);
        let v = ula_steering(6, 0.05, 0.1, 0.0);
        assert!(v.entries.iter().all(|c| *c == Complex64::new(1.0, 0.0)));
        let v = ula_steering(2, 0.05, 0.1, 1.0);
        assert!((v.entries[1] - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn upa_examples() {
        let k = SteeringKind::UpaRisArrival;
        assert_eq!(upa_steering(1, 1, 0.05, 0.05, 0.1, 0.3, 0.4, k).entries.len(), 1);
        let v = upa_steering(2, 1, 0.05, 0.05, 0.1, 1.0, 0.0, k);
        assert!((v.entries[1] + Complex64::new(1.0, 0.0)).norm() < 1e-15);

        // Explicit expansion of x-factor (x0, x1) kron z-factor (z0, z1).
        let (s, c) = (0.37, 0.81);
        let v = upa_steering(2, 2, 0.05, 0.04, 0.1, s, c, k);
        let x1 = Complex64::from_polar(1.0, -2.0 * PI * 0.05 * s / 0.1);
        let z1 = Complex64::from_polar(1.0, -2.0 * PI * 0.04 * c / 0.1);
        let one = Complex64::new(1.0, 0.0);
        let expected = [one, z1, x1, x1 * z1];
        for (a, b) in v.entries.iter().zip(expected) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn fas_examples() {
        let v = fas_port_steering(20, 10, 2.0, 1.0, 0.4, 0.3);
        assert_eq!(v.entries[0], Complex64::new(1.0, 0.0));
        let v = fas_port_steering(20, 10, 2.0, 1.0, 0.0, 0.0);
        assert!(v.entries.iter().all(|c| *c == Complex64::new(1.0, 0.0)));
        // port (1,1) on a 2x2 grid: exp(j 2pi (0.5 + 0.5)) = 1
        let v = fas_port_steering(2, 2, 1.0, 1.0, 0.5, 0.5);
        assert!((v.entries[3] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        // ordering follows k1 + k2*K1
        let v = fas_port_steering(3, 2, 1.0, 1.0, 0.25, 0.0);
        let expect = Complex64::from_polar(1.0, 2.0 * PI * 0.5 * 2.0 * 0.25);
        assert!((v.entries[2] - expect).norm() < 1e-12);
        assert!((v.entries[5] - expect).norm() < 1e-12);
    }

    #[test]
    fn steering_entries_are_unit_modulus() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let (a, b, c): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
            assert!(unit_modulus(&ula_steering(7, 0.05, 0.1, a)));
            assert!(unit_modulus(&upa_steering(
                5,
                3,
                0.05,
                0.05,
                0.1,
                a,
                b,
                SteeringKind::UpaRisDeparture
            )));
            assert!(unit_modulus(&fas_port_steering(4, 6, 2.0, c * 3.0, a, b)));
        }
    }

    #[test]
    fn jakes_structure() {
        let c = jakes_correlation(20, 10, 2.0, 1.0).unwrap();
        let k = 200;
        for i in 0..k {
            assert_eq!(c.r[(i, i)], 1.0);
            for j in 0..k {
                assert_eq!(c.r[(i, j)], c.r[(j, i)]);
            }
        }
        // adjacent along the length axis: J0(2pi * 2/19)
        assert!((c.r[(0, 1)] - 0.894).abs() < 1e-3);
        assert!(c.clip_floor >= -1e-6, "min eigenvalue {}", c.clip_floor);

        let eig = SymmetricEigen::new(c.r.clone());
        let clipped = &eig.eigenvectors
            * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0)))
            * eig.eigenvectors.transpose();
        let rebuilt = &c.r_half * c.r_half.transpose();
        assert!((rebuilt - clipped).norm() < 1e-8);
    }

    #[test]
    fn jakes_single_port_axis() {
        let c = jakes_correlation(5, 1, 2.0, 1.0).unwrap();
        assert_eq!(c.r.shape(), (5, 5));
        let expect = bessel_j0(2.0 * PI * 0.5).unwrap();
        assert_eq!(c.r[(0, 1)], expect);
        let c = jakes_correlation(1, 1, 2.0, 1.0).unwrap();
        assert_eq!(c.r[(0, 0)], 1.0);
    }

    #[test]
    fn sampling_is_deterministic() {
        let cfg = ScenarioConfig::default();
        let corr = Arc::new(PortCorrelation::for_config(&cfg).unwrap());
        let a = sample_realization_with(&cfg, corr.clone(), &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        let b = sample_realization_with(&cfg, corr, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        assert_eq!(a.draws(), b.draws());
        let q = Point3::new(40.0, 60.0, 25.0);
        assert_eq!(a.assemble_bs_ris(&q).unwrap(), b.assemble_bs_ris(&q).unwrap());
        assert_eq!(a.assemble_bs_ris(&q).unwrap(), a.assemble_bs_ris(&q).unwrap());
    }

    #[test]
    fn pure_nlos_and_pure_los_limits() {
        let mut cfg = ScenarioConfig::default();
        cfg.kappa_br = 0.0;
        cfg.kappa_ri = f64::INFINITY;
        let real = sample_realization(&cfg, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let q = Point3::new(50.0, 70.0, 30.0);
        let h = real.assemble_bs_ris(&q).unwrap();
        let amp = path_amplitude(&cfg, distance(&cfg.q_b, &q));
        assert!((h - real.draws().0 * Complex64::from(amp)).norm() < 1e-15);

        let h_ri = real.assemble_ris_user(&q, User::Near).unwrap();
        let sv = h_ri.singular_values();
        assert!(sv[1] / sv[0] < 1e-12);
        let col = real.ris_user_port(&q, User::Near, 17).unwrap();
        assert!((col - h_ri.column(17)).norm() < 1e-15);
    }

    #[test]
    fn los_limit_of_bs_link_is_rank_one() {
        let mut cfg = ScenarioConfig::default();
        cfg.kappa_br = 1e12;
        let real = sample_realization(&cfg, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let q = Point3::new(30.0, 20.0, 35.0);
        let amp = path_amplitude(&cfg, distance(&cfg.q_b, &q));
        let h = real.assemble_bs_ris(&q).unwrap() / Complex64::from(amp);
        let dc = direction_cosines(&cfg.q_b, &q).unwrap();
        let los = ula_steering(cfg.l, cfg.d, cfg.lambda, dc.y).entries
            * upa_steering(
                cfg.m1,
                cfg.m2,
                cfg.d1,
                cfg.d2,
                cfg.lambda,
                dc.x,
                dc.z,
                SteeringKind::UpaRisArrival,
            )
            .entries
            .adjoint();
        assert!((h - los).norm() < 1e-4);
    }

    #[test]
    fn fully_correlated_ports_share_nlos_columns() {
        let mut cfg = ScenarioConfig::default();
        cfg.w1 = 0.0;
        cfg.w2 = 0.0;
        cfg.k1 = 4;
        cfg.k2 = 3;
        let real = sample_realization(&cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!(real.correlation().r.iter().all(|&x| x == 1.0));
        let nl = &real.nlos_ri[0];
        for j in 1..cfg.k() {
            assert!((nl.column(j) - nl.column(0)).norm() < 1e-10);
        }
    }

    #[test]
    fn coincident_points_are_rejected() {
        let cfg = ScenarioConfig::default();
        let real = sample_realization(&cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!(matches!(
            real.assemble_bs_ris(&cfg.q_b),
            Err(Error::DegenerateGeometry(_))
        ));
        assert!(matches!(
            real.assemble_ris_user(&cfg.q_n, User::Near),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn estimated_view_with_zero_error_is_identical() {
        let cfg = ScenarioConfig::default();
        let real = sample_realization(&cfg, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let est = real
            .estimated(0.0, IpcsiHops::Both, &mut ChaCha8Rng::seed_from_u64(3))
            .unwrap();
        let q = Point3::new(44.0, 55.0, 33.0);
        assert_eq!(real.assemble_bs_ris(&q).unwrap(), est.assemble_bs_ris(&q).unwrap());
        assert!(real
            .estimated(1.0, IpcsiHops::Both, &mut ChaCha8Rng::seed_from_u64(3))
            .is_err());
    }
}
