//! Fluid-antenna port selection: exhaustive per-user search plus the
//! random-port and fixed-port baselines.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{CMat, CVec};
use crate::error::{Error, Result};
use crate::rate::PortIndex;
use crate::scenario::ScenarioConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PortPolicyKind {
    Exhaustive,
    Random,
    FixedCenter,
}

/// Ports chosen for both users, with the scanned gains when available.
#[derive(Debug, Clone, PartialEq)]
pub struct PortPolicy {
    pub kind: PortPolicyKind,
    /// `[near, far]`
    pub chosen: [PortIndex; 2],
    pub gain_table: Option<[Vec<f64>; 2]>,
}

/// Effective gain of every port: column norms of `H_br diag(v) H_ri`.
pub fn port_gains(h_br: &CMat, v: &CVec, h_ri: &CMat) -> Result<Vec<f64>> {
    if h_br.ncols() != v.len() || h_ri.nrows() != v.len() {
        return Err(Error::Shape(format!(
            "H_br {:?}, v {}, H_ri {:?}",
            h_br.shape(),
            v.len(),
            h_ri.shape()
        )));
    }
    let weighted = CMat::from_fn(h_br.nrows(), h_br.ncols(), |i, j| h_br[(i, j)] * v[j]);
    let cascade = weighted * h_ri;
    Ok(cascade.column_iter().map(|c| c.norm_squared()).collect())
}

/// Index of the largest entry; ties go to the smallest index.
pub fn argmax(gains: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &g) in gains.iter().enumerate() {
        match best {
            Some((_, b)) if !(g > b) => {}
            _ => best = Some((i, g)),
        }
    }
    best
}

/// Port of `H_ri` (MxK) maximizing the cascaded gain for phases `v`.
pub fn best_port(h_br: &CMat, v: &CVec, h_ri: &CMat, grid: (usize, usize)) -> Result<(PortIndex, f64)> {
    if h_ri.ncols() == 0 {
        return Err(Error::EmptyDomain("no candidate ports".into()));
    }
    if grid.0 * grid.1 != h_ri.ncols() {
        return Err(Error::Shape(format!(
            "grid {}x{} does not match {} ports",
            grid.0,
            grid.1,
            h_ri.ncols()
        )));
    }
    let gains = port_gains(h_br, v, h_ri)?;
    let (col, g) = argmax(&gains).expect("non-empty");
    Ok((PortIndex::from_linear(col + 1, grid.0, grid.1)?, g))
}

/// C4 check on two grid ports; identical ports are always compatible and
/// the `d0` boundary is inclusive.
pub fn spacing_ok(a: &PortIndex, b: &PortIndex, d0: f64, cfg: &ScenarioConfig) -> bool {
    if a == b {
        return true;
    }
    let (ax, ay) = a.position(cfg);
    let (bx, by) = b.position(cfg);
    let dist = (ax - bx).hypot(ay - by);
    dist >= d0 * (1.0 - 1e-12)
}

/// Port chosen without channel knowledge.
pub fn baseline_port<R: Rng + ?Sized>(kind: PortPolicyKind, k1: usize, k2: usize, rng: &mut R) -> Result<PortIndex> {
    if k1 == 0 || k2 == 0 {
        return Err(Error::EmptyDomain("port grid has no ports".into()));
    }
    match kind {
        PortPolicyKind::Random => PortIndex::from_linear(rng.random_range(1..=k1 * k2), k1, k2),
        PortPolicyKind::FixedCenter => PortIndex::from_grid(k1.div_ceil(2), k2.div_ceil(2), k1, k2),
        PortPolicyKind::Exhaustive => Err(Error::Domain(
            "exhaustive selection needs channel state; use best_port".into(),
        )),
    }
}

/// Reference implementation used by tests: one port at a time through the
/// quadratic form, no matrix products shared across ports.
#[doc(hidden)]
pub fn naive_best_port(h_br: &CMat, v: &CVec, h_ri: &CMat) -> (usize, f64) {
    let mut best = (0usize, f64::NEG_INFINITY);
    for k in 0..h_ri.ncols() {
        let mut g = 0.0;
        for l in 0..h_br.nrows() {
            let mut acc = Complex64::new(0.0, 0.0);
            for m in 0..v.len() {
                acc += h_br[(l, m)] * v[m] * h_ri[(m, k)];
            }
            g += acc.norm_sqr();
        }
        if g > best.1 {
            best = (k, g);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::complex_normal_matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn instance(m: usize, k: usize, seed: u64) -> (CMat, CVec, CMat) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h_br = complex_normal_matrix(2, m, &mut rng);
        let v = CVec::from_fn(m, |_, _| {
            Complex64::from_polar(1.0, rng.random::<f64>() * std::f64::consts::TAU)
        });
        let h_ri = complex_normal_matrix(m, k, &mut rng);
        (h_br, v, h_ri)
    }

    #[test]
    fn single_port_is_chosen() {
        let (h_br, v, h_ri) = instance(3, 1, 0);
        let (p, _) = best_port(&h_br, &v, &h_ri, (1, 1)).unwrap();
        assert_eq!(p.k, 1);
    }

    #[test]
    fn argmax_of_gain_table() {
        let mut t = vec![0.5; 12];
        t[6] = 3.0;
        assert_eq!(argmax(&t), Some((6, 3.0)));
        assert_eq!(argmax(&[1.0, 2.0, 2.0]), Some((1, 2.0)));
        assert_eq!(argmax(&[]), None);
    }

    #[test]
    fn matches_naive_scan() {
        for seed in 0..20 {
            let (h_br, v, h_ri) = instance(4, 8, seed);
            let (p, g) = best_port(&h_br, &v, &h_ri, (4, 2)).unwrap();
            let (k, gn) = naive_best_port(&h_br, &v, &h_ri);
            assert_eq!(p.column(), k);
            assert!((g - gn).abs() <= 1e-12 * gn);
        }
    }

    #[test]
    fn dominates_every_port_and_baselines() {
        let (h_br, v, h_ri) = instance(5, 12, 3);
        let (p, g) = best_port(&h_br, &v, &h_ri, (4, 3)).unwrap();
        let gains = port_gains(&h_br, &v, &h_ri).unwrap();
        assert!(gains.iter().all(|&x| x <= g));
        let center = baseline_port(PortPolicyKind::FixedCenter, 4, 3, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(gains[center.column()] <= g);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let r = baseline_port(PortPolicyKind::Random, 4, 3, &mut rng).unwrap();
            assert!(gains[r.column()] <= g);
        }
        // shrinking an unrelated column does not move the argmax
        let mut scaled = h_ri.clone();
        let other = (p.column() + 1) % 12;
        scaled.column_mut(other).scale_mut(0.25);
        assert_eq!(best_port(&h_br, &v, &scaled, (4, 3)).unwrap().0, p);
    }

    #[test]
    fn empty_and_misshapen_grids() {
        let (h_br, v, _) = instance(3, 1, 0);
        let empty = CMat::zeros(3, 0);
        assert!(matches!(
            best_port(&h_br, &v, &empty, (0, 0)),
            Err(Error::EmptyDomain(_))
        ));
        let (h_br, v, h_ri) = instance(3, 6, 0);
        assert!(matches!(best_port(&h_br, &v, &h_ri, (2, 2)), Err(Error::Shape(_))));
    }

    #[test]
    fn spacing_rules() {
        let cfg = ScenarioConfig::default();
        let a = PortIndex::from_grid(3, 4, 20, 10).unwrap();
        let b = PortIndex::from_grid(4, 4, 20, 10).unwrap();
        assert!(spacing_ok(&a, &a, cfg.d0, &cfg));
        assert!(spacing_ok(&a, &b, cfg.d0, &cfg));
        assert!(!spacing_ok(&a, &b, 2.0 * cfg.d0, &cfg));
    }

    #[test]
    fn baseline_ports() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = baseline_port(PortPolicyKind::FixedCenter, 20, 10, &mut rng).unwrap();
        assert_eq!((c.k1, c.k2), (10, 5));
        let a = baseline_port(PortPolicyKind::Random, 20, 10, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = baseline_port(PortPolicyKind::Random, 20, 10, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        assert!(baseline_port(PortPolicyKind::Exhaustive, 20, 10, &mut rng).is_err());
    }

    #[test]
    fn random_port_is_uniform() {
        let (k1, k2) = (4, 3);
        let k = k1 * k2;
        let n = 100_000;
        let mut counts = vec![0usize; k];
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..n {
            counts[baseline_port(PortPolicyKind::Random, k1, k2, &mut rng)
                .unwrap()
                .column()] += 1;
        }
        let p = 1.0 / k as f64;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - n as f64 * p).abs() <= 3.0 * sigma, "count {c}");
        }
    }
}
