//! Particle swarm search for the RIS position inside its deployment box.

use std::io::Write;

use rand::Rng;

use crate::error::{Error, Result};
use crate::scenario::{Point3, PsoParams, PsoStart, RisBox};

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub position: Point3,
    pub velocity: Point3,
    pub p_best_pos: Point3,
    pub p_best_val: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwarmState {
    pub particles: Vec<Particle>,
    pub g_best_pos: Point3,
    pub g_best_val: f64,
    pub iteration: usize,
    /// Global best value after initialization and after every step.
    pub history: Vec<f64>,
    pub best_positions: Vec<Point3>,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsoOutcome {
    pub position: Point3,
    pub value: f64,
    pub history: Vec<f64>,
    pub best_positions: Vec<Point3>,
    pub iterations: usize,
    pub evaluations: usize,
}

fn score(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

/// Linearly decreasing inertia from `w_max` at the first step to `w_min` at the last.
pub fn inertia(params: &PsoParams, iter: usize) -> f64 {
    if params.max_iters <= 1 {
        return params.w_max;
    }
    let frac = (iter.min(params.max_iters - 1)) as f64 / (params.max_iters - 1) as f64;
    params.w_max - (params.w_max - params.w_min) * frac
}

/// Particles at the clamped initial position. With [`PsoStart::Scatter`] only
/// the first stays there; the rest fill a box lattice, then uniform draws.
/// Velocities are uniform in `[-v_max, v_max]`; the last particle is placed
/// on `incumbent` when given.
pub fn init_swarm<F, R>(
    fitness: &mut F,
    bounds: &RisBox,
    params: &PsoParams,
    incumbent: Option<Point3>,
    rng: &mut R,
) -> Result<SwarmState>
where
    F: FnMut(&Point3) -> f64,
    R: Rng + ?Sized,
{
    if bounds.is_degenerate() {
        return Err(Error::Validation(vec!["PSO search box is empty".into()]));
    }
    if params.n_particles == 0 {
        return Err(Error::Validation(vec!["PSO needs at least one particle".into()]));
    }
    let vmax = params.velocity_limit(bounds);
    let start = bounds.clamp(&params.init_position);
    let start_val = score(fitness(&start));
    let mut evaluations = 1;
    let n = params.n_particles;
    let slots = n - 1 - usize::from(incumbent.is_some() && n > 1);
    let lattice = if params.start == PsoStart::Scatter {
        box_lattice(bounds, slots)
    } else {
        Vec::new()
    };
    let mut particles = Vec::with_capacity(n);
    for i in 0..n {
        let velocity = Point3::from_fn(|d, _| rng.random_range(-1.0..=1.0) * vmax[d]);
        let (position, val) = match (i, incumbent, params.start) {
            (i, Some(q), _) if i + 1 == n => {
                let q = bounds.clamp(&q);
                evaluations += 1;
                (q, score(fitness(&q)))
            }
            (i, _, PsoStart::Scatter) if i > 0 => {
                let q = match lattice.get(i - 1) {
                    Some(q) => *q,
                    None => Point3::from_fn(|d, _| rng.random_range(bounds.min[d]..=bounds.max[d])),
                };
                evaluations += 1;
                (q, score(fitness(&q)))
            }
            _ => (start, start_val),
        };
        particles.push(Particle {
            position,
            velocity,
            p_best_pos: position,
            p_best_val: val,
        });
    }
    let (g_best_pos, g_best_val) = global_best(&particles);
    Ok(SwarmState {
        particles,
        g_best_pos,
        g_best_val,
        iteration: 0,
        history: vec![g_best_val],
        best_positions: vec![g_best_pos],
        evaluations,
    })
}

/// Largest lattice over the box, endpoints included, with at most `n` points
/// and roughly equal spacing along each axis.
fn box_lattice(bounds: &RisBox, n: usize) -> Vec<Point3> {
    let edges = bounds.edges();
    let mut counts = [1usize; 3];
    loop {
        let d = (0..3)
            .max_by(|&a, &b| (edges[a] / counts[a] as f64).total_cmp(&(edges[b] / counts[b] as f64)))
            .expect("three axes");
        let mut next = counts;
        next[d] += 1;
        if edges[d] == 0.0 || next.iter().product::<usize>() > n {
            break;
        }
        counts = next;
    }
    if counts.iter().product::<usize>() > n {
        return Vec::new();
    }
    let axis = |d: usize, j: usize| {
        if counts[d] == 1 {
            0.5 * (bounds.min[d] + bounds.max[d])
        } else {
            bounds.min[d] + edges[d] * j as f64 / (counts[d] - 1) as f64
        }
    };
    let mut out = Vec::with_capacity(counts.iter().product());
    for i in 0..counts[0] {
        for j in 0..counts[1] {
            for k in 0..counts[2] {
                out.push(Point3::new(axis(0, i), axis(1, j), axis(2, k)));
            }
        }
    }
    out
}

fn global_best(particles: &[Particle]) -> (Point3, f64) {
    let mut best = (particles[0].p_best_pos, particles[0].p_best_val);
    for p in &particles[1..] {
        if p.p_best_val > best.1 {
            best = (p.p_best_pos, p.p_best_val);
        }
    }
    best
}

/// One synchronous swarm update: velocities use the global best from the
/// start of the step; personal and global bests are refreshed afterwards.
pub fn step_swarm<F, R>(state: &mut SwarmState, fitness: &mut F, bounds: &RisBox, params: &PsoParams, rng: &mut R)
where
    F: FnMut(&Point3) -> f64,
    R: Rng + ?Sized,
{
    let w = inertia(params, state.iteration);
    let vmax = params.velocity_limit(bounds);
    let g = state.g_best_pos;
    for p in &mut state.particles {
        for d in 0..3 {
            let r1: f64 = rng.random();
            let r2: f64 = rng.random();
            let mut v = w * p.velocity[d]
                + params.c1 * r1 * (p.p_best_pos[d] - p.position[d])
                + params.c2 * r2 * (g[d] - p.position[d]);
            v = v.clamp(-vmax[d], vmax[d]);
            let mut x = p.position[d] + v;
            if x < bounds.min[d] || x > bounds.max[d] {
                x = x.clamp(bounds.min[d], bounds.max[d]);
                v = 0.0;
            }
            p.velocity[d] = v;
            p.position[d] = x;
        }
        let val = score(fitness(&p.position));
        state.evaluations += 1;
        if val > p.p_best_val {
            p.p_best_val = val;
            p.p_best_pos = p.position;
        }
    }
    let (pos, val) = global_best(&state.particles);
    if val > state.g_best_val {
        state.g_best_val = val;
        state.g_best_pos = pos;
    }
    state.iteration += 1;
    state.history.push(state.g_best_val);
    state.best_positions.push(state.g_best_pos);
}

/// Maximize `fitness` over `bounds`. Stops after `max_iters` steps or when the
/// global best improved by less than `tol` over the last `stall_iters` steps.
pub fn pso_optimize<F, R>(
    mut fitness: F,
    bounds: &RisBox,
    params: &PsoParams,
    incumbent: Option<Point3>,
    rng: &mut R,
) -> Result<PsoOutcome>
where
    F: FnMut(&Point3) -> f64,
    R: Rng + ?Sized,
{
    let mut state = init_swarm(&mut fitness, bounds, params, incumbent, rng)?;
    while state.iteration < params.max_iters {
        step_swarm(&mut state, &mut fitness, bounds, params, rng);
        let t = state.history.len() - 1;
        if params.stall_iters > 0
            && t >= params.stall_iters
            && state.history[t] - state.history[t - params.stall_iters] < params.tol
        {
            break;
        }
    }
    Ok(PsoOutcome {
        position: state.g_best_pos,
        value: state.g_best_val,
        iterations: state.iteration,
        evaluations: state.evaluations,
        history: state.history,
        best_positions: state.best_positions,
    })
}

/// Emit `iteration,g_best_val,x,y,z` rows.
pub fn write_trace<W: Write>(out: W, outcome: &PsoOutcome) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "g_best_val", "x", "y", "z"])?;
    for (i, (v, p)) in outcome.history.iter().zip(&outcome.best_positions).enumerate() {
        w.write_record([
            i.to_string(),
            v.to_string(),
            p[0].to_string(),
            p[1].to_string(),
            p[2].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_box() -> RisBox {
        RisBox::new(Point3::new(10.0, 10.0, 20.0), Point3::new(100.0, 100.0, 40.0))
    }

    #[test]
    fn finds_interior_peak() {
        let c = Point3::new(63.0, 27.0, 31.0);
        let params = PsoParams::default();
        let out = pso_optimize(
            |q: &Point3| -(q - c).norm_squared(),
            &unit_box(),
            &PsoParams {
                max_iters: 300,
                tol: 0.0,
                ..params
            },
            None,
            &mut ChaCha8Rng::seed_from_u64(1),
        )
        .unwrap();
        assert!((out.position - c).norm() < 0.1, "{:?}", out.position);
    }

    #[test]
    fn constant_fitness() {
        let out = pso_optimize(
            |_: &Point3| 4.25,
            &unit_box(),
            &PsoParams::default(),
            None,
            &mut ChaCha8Rng::seed_from_u64(2),
        )
        .unwrap();
        assert_eq!(out.value, 4.25);
        assert!(unit_box().contains(&out.position));
    }

    #[test]
    fn empty_box_is_rejected() {
        let b = RisBox::new(Point3::new(1.0, 1.0, 1.0), Point3::new(1.0, 2.0, 2.0));
        let err = pso_optimize(
            |_: &Point3| 0.0,
            &b,
            &PsoParams::default(),
            None,
            &mut ChaCha8Rng::seed_from_u64(0),
        );
        assert!(matches!(err, Err(Error::Validation(_))));
    }

    #[test]
    fn converged_swarm_is_a_fixed_point() {
        let b = unit_box();
        let g = Point3::new(50.0, 50.0, 30.0);
        let particles = (0..5)
            .map(|_| Particle {
                position: g,
                velocity: Point3::zeros(),
                p_best_pos: g,
                p_best_val: 1.0,
            })
            .collect();
        let mut state = SwarmState {
            particles,
            g_best_pos: g,
            g_best_val: 1.0,
            iteration: 0,
            history: vec![1.0],
            best_positions: vec![g],
            evaluations: 0,
        };
        let before = state.particles.clone();
        step_swarm(
            &mut state,
            &mut |_: &Point3| 1.0,
            &b,
            &PsoParams::default(),
            &mut ChaCha8Rng::seed_from_u64(3),
        );
        assert_eq!(state.particles, before);
    }

    #[test]
    fn pure_inertia_moves_at_constant_velocity() {
        let b = unit_box();
        let params = PsoParams {
            w_max: 1.0,
            w_min: 1.0,
            c1: 0.0,
            c2: 0.0,
            v_max: Some(Point3::new(5.0, 5.0, 5.0)),
            ..PsoParams::default()
        };
        let start = Point3::new(20.0, 50.0, 30.0);
        let mut state = SwarmState {
            particles: vec![Particle {
                position: start,
                velocity: Point3::new(3.0, 0.0, 4.0),
                p_best_pos: start,
                p_best_val: 0.0,
            }],
            g_best_pos: start,
            g_best_val: 0.0,
            iteration: 0,
            history: vec![0.0],
            best_positions: vec![start],
            evaluations: 0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for step in 1..=2 {
            step_swarm(&mut state, &mut |_: &Point3| 0.0, &b, &params, &mut rng);
            let p = &state.particles[0];
            assert_eq!(p.position, start + Point3::new(3.0, 0.0, 4.0) * step as f64);
        }
        // z hits the 40 m ceiling on the third step: clamped, velocity zeroed
        step_swarm(&mut state, &mut |_: &Point3| 0.0, &b, &params, &mut rng);
        let p = &state.particles[0];
        assert_eq!(p.position, Point3::new(29.0, 50.0, 40.0));
        assert_eq!(p.velocity, Point3::new(3.0, 0.0, 0.0));
    }

    #[test]
    fn one_step_matches_hand_update() {
        let b = unit_box();
        let params = PsoParams::default();
        let x0 = Point3::new(30.0, 80.0, 25.0);
        let pb = Point3::new(35.0, 70.0, 26.0);
        let g = Point3::new(60.0, 60.0, 38.0);
        let v0 = Point3::new(-4.0, 1.0, 0.5);
        let mut state = SwarmState {
            particles: vec![Particle {
                position: x0,
                velocity: v0,
                p_best_pos: pb,
                p_best_val: -1.0,
            }],
            g_best_pos: g,
            g_best_val: 0.0,
            iteration: 0,
            history: vec![0.0],
            best_positions: vec![g],
            evaluations: 0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut draws = rng.clone();
        step_swarm(&mut state, &mut |_: &Point3| -2.0, &b, &params, &mut rng);

        // w = 0.5 on the first step, c1 = c2 = 2, limits 0.2 * (90, 90, 20)
        let limit = [18.0, 18.0, 4.0];
        let p = &state.particles[0];
        for d in 0..3 {
            let r1: f64 = draws.random();
            let r2: f64 = draws.random();
            let v = (0.5 * v0[d] + 2.0 * r1 * (pb[d] - x0[d]) + 2.0 * r2 * (g[d] - x0[d])).clamp(-limit[d], limit[d]);
            assert_eq!(p.velocity[d], v);
            assert_eq!(p.position[d], x0[d] + v);
        }
        assert_eq!(p.p_best_pos, pb);
        assert_eq!(state.g_best_pos, g);
        assert_eq!(state.history, vec![0.0, 0.0]);
        assert_eq!(state.evaluations, 1);
    }

    #[test]
    fn incumbent_is_never_lost() {
        let b = unit_box();
        let peak = Point3::new(90.0, 15.0, 22.0);
        let f = |q: &Point3| -(q - peak).norm();
        let params = PsoParams {
            max_iters: 3,
            ..PsoParams::default()
        };
        let out = pso_optimize(f, &b, &params, Some(peak), &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(out.value, 0.0);
        assert_eq!(out.position, peak);
    }

    #[test]
    fn trace_csv_has_one_row_per_entry() {
        let out = pso_optimize(
            |q: &Point3| q[0],
            &unit_box(),
            &PsoParams {
                max_iters: 5,
                ..PsoParams::default()
            },
            None,
            &mut ChaCha8Rng::seed_from_u64(8),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_trace(&mut buf, &out).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), out.history.len() + 1);
        assert!(text.starts_with("iteration,g_best_val,x,y,z"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn swarm_invariants(seed in 0u64..10_000, cx in 0.0f64..120.0, cy in 0.0f64..120.0) {
            let b = unit_box();
            let params = PsoParams { max_iters: 30, n_particles: 12, ..PsoParams::default() };
            let vmax = params.velocity_limit(&b);
            let target = Point3::new(cx, cy, 30.0);
            let mut f = |q: &Point3| -(q - target).norm() + (q[0] * 0.3).sin();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut state = init_swarm(&mut f, &b, &params, None, &mut rng).unwrap();
            for _ in 0..params.max_iters {
                step_swarm(&mut state, &mut f, &b, &params, &mut rng);
                for p in &state.particles {
                    prop_assert!(b.contains(&p.position));
                    prop_assert!((0..3).all(|d| p.velocity[d].abs() <= vmax[d]));
                }
                let best = state.particles.iter().map(|p| p.p_best_val).fold(f64::MIN, f64::max);
                prop_assert_eq!(best, state.g_best_val);
            }
            prop_assert!(state.history.windows(2).all(|w| w[1] >= w[0]));

            let mut rng2 = ChaCha8Rng::seed_from_u64(seed);
            let mut again = init_swarm(&mut f, &b, &params, None, &mut rng2).unwrap();
            for _ in 0..params.max_iters {
                step_swarm(&mut again, &mut f, &b, &params, &mut rng2);
            }
            prop_assert_eq!(again, state);
        }
    }
}
