//! Brute-force reference solvers shared by the oracle and acceptance targets.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wpmec::lambertw::lambert_w0;
use wpmec::mode_admm::{coupled_objective, coupled_step, Subproblem};
use wpmec::time_alloc::{conditional_value, BisectionOptions};
use wpmec::{objective, Allocation, Mode, ModeSelection, NetworkInstance, SystemParams};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn log_uniform(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + r.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

pub fn random_instance(r: &mut ChaCha8Rng, n: usize) -> NetworkInstance {
    let h = (0..n).map(|_| log_uniform(r, 3e-7, 2e-5)).collect();
    let w = (0..n)
        .map(|_| if r.random_bool(0.5) { 2.0 } else { 1.0 })
        .collect();
    let k = (0..n).map(|_| log_uniform(r, 1e-27, 1e-25)).collect();
    NetworkInstance::new(SystemParams::default(), h, w, k).unwrap()
}

/// Maximizes `f` over `{y >= 0, sum(y) = 1}` in `dim` coordinates by a grid
/// of `steps` per unit, then zooms twice around the best point.
pub fn simplex_grid(dim: usize, steps: usize, f: &dyn Fn(&[f64]) -> f64) -> f64 {
    fn walk(dim: usize, left: usize, prefix: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
        if prefix.len() + 1 == dim {
            prefix.push(left);
            visit(prefix);
            prefix.pop();
            return;
        }
        for i in 0..=left {
            prefix.push(i);
            walk(dim, left - i, prefix, visit);
            prefix.pop();
        }
    }
    let mut center = vec![1.0 / dim as f64; dim];
    let mut width = 1.0;
    let mut best = f64::NEG_INFINITY;
    for _ in 0..3 {
        let origin: Vec<f64> = center.iter().map(|c| (c - width / 2.0).max(0.0)).collect();
        let used: f64 = origin.iter().sum();
        let span = (1.0 - used).min(width * dim as f64);
        let mut best_point = center.clone();
        walk(dim, steps, &mut Vec::new(), &mut |idx| {
            let y: Vec<f64> = idx
                .iter()
                .zip(&origin)
                .map(|(&i, &o)| o + span * i as f64 / steps as f64)
                .collect();
            let v = f(&y);
            if v > best {
                best = v;
                best_point = y;
            }
        });
        center = best_point;
        width = 4.0 * span / steps as f64;
    }
    best
}

pub fn random_subproblem(r: &mut ChaCha8Rng) -> Subproblem {
    Subproblem {
        local_coeff: r.random_range(0.05..3.0),
        offload_scale: r.random_range(0.05..3.0),
        gain: log_uniform(r, 0.1, 200.0),
        beta: r.random_range(-1.5..1.0),
        gamma: r.random_range(-1.5..1.0),
        a_ref: r.random_range(0.0..1.0),
        z_ref: r.random_range(0.0..0.6),
        c: r.random_range(0.8..6.0),
    }
}

/// Dense grid over `[0, 2]^2`, then a zoomed grid around the best cell.
pub fn grid_max(f: &dyn Fn(f64, f64) -> f64) -> (f64, f64, f64) {
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    let (mut x0, mut t0, mut span) = (0.0, 0.0, 2.0);
    for _ in 0..3 {
        let step = span / 400.0;
        for i in 0..=400 {
            for j in 0..=400 {
                let (x, t) = (x0 + step * i as f64, t0 + step * j as f64);
                let v = f(x, t);
                if v > best.0 {
                    best = (v, x, t);
                }
            }
        }
        x0 = (best.1 - 4.0 * step).max(0.0);
        t0 = (best.2 - 4.0 * step).max(0.0);
        span = 8.0 * step;
    }
    best
}

/// Projection onto `{y >= 0, sum(y) <= 1}` by bisection on the shift.
pub fn project(y: &[f64]) -> Vec<f64> {
    let clip = |t: f64| y.iter().map(|&v| (v - t).max(0.0)).collect::<Vec<_>>();
    if clip(0.0).iter().sum::<f64>() <= 1.0 {
        return clip(0.0);
    }
    let (mut lo, mut hi) = (0.0, y.iter().cloned().fold(0.0, f64::max));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if clip(mid).iter().sum::<f64>() > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    clip(hi)
}

/// Worst relative gaps of the time allocation against the simplex grid.
#[derive(Debug, Default)]
pub struct SimplexReport {
    pub worst_gap: f64,
    /// Largest relative amount by which a feasible grid point beat the solver.
    pub worst_loss: f64,
}

/// Time allocation against the zoomed simplex grid on `cases` instances
/// with one to three devices.
pub fn time_allocation_vs_grid(cases: usize) -> SimplexReport {
    let mut r = rng(1);
    let mut rep = SimplexReport::default();
    for case in 0..cases {
        let n = 1 + case % 3;
        let inst = random_instance(&mut r, n);
        let modes = ModeSelection::new(
            (0..n)
                .map(|_| {
                    if r.random_bool(0.7) {
                        Mode::Offload
                    } else {
                        Mode::Local
                    }
                })
                .collect(),
        );
        let off: Vec<usize> = modes.offload_devices().collect();
        let alg = conditional_value(&inst, &modes, &BisectionOptions::default()).unwrap();
        let f = |y: &[f64]| {
            let mut tau = vec![0.0; n];
            for (slot, &j) in off.iter().enumerate() {
                tau[j] = y[slot + 1];
            }
            objective(&inst, &modes, &Allocation::new(y[0], tau)).unwrap_or(f64::NEG_INFINITY)
        };
        let grid = if off.is_empty() {
            f(&[1.0])
        } else {
            simplex_grid(off.len() + 1, 60, &f)
        };
        rep.worst_gap = rep.worst_gap.max((alg - grid).abs() / grid);
        rep.worst_loss = rep.worst_loss.max((grid - alg) / grid);
    }
    rep
}

#[derive(Debug, Default)]
pub struct SubproblemReport {
    pub checked: usize,
    /// `|branch - grid| / max(1, |grid|)`.
    pub worst_error: f64,
    pub worst_loss: f64,
    pub worst_residual: f64,
    pub mode_consistent: bool,
}

fn check_subproblem(s: &Subproblem, rep: &mut SubproblemReport) {
    let sol = s.solve().unwrap();
    for (branch, f) in [
        (
            sol.local,
            &(|x, t| s.local_value(x, t)) as &dyn Fn(f64, f64) -> f64,
        ),
        (sol.offload, &|x, t| s.offload_value(x, t)),
    ] {
        let (g, _, _) = grid_max(f);
        let scale = g.abs().max(1.0);
        rep.worst_error = rep.worst_error.max((branch.value - g).abs() / scale);
        rep.worst_loss = rep.worst_loss.max((g - branch.value) / scale);
        rep.worst_residual = rep.worst_residual.max(branch.residual);
    }
    let best = sol.local.value.max(sol.offload.value);
    let chosen = if sol.mode == Mode::Offload {
        sol.offload.value
    } else {
        sol.local.value
    };
    rep.mode_consistent &= chosen == best;
    rep.checked += 1;
}

/// Per-device ADMM subproblems against a zoomed grid on `[0, 2]^2`, for
/// `cases` random unit-scale subproblems whose optima lie inside the box.
pub fn subproblems_vs_grid(cases: usize) -> SubproblemReport {
    let mut r = rng(3);
    let mut rep = SubproblemReport {
        mode_consistent: true,
        ..Default::default()
    };
    while rep.checked < cases {
        let s = random_subproblem(&mut r);
        let sol = s.solve().unwrap();
        let inside = |b: &wpmec::mode_admm::BranchSolution| b.x < 1.9 && b.tau < 1.9;
        if inside(&sol.local) && inside(&sol.offload) {
            check_subproblem(&s, &mut rep);
        }
    }
    rep
}

/// Subproblems with coefficients as they arise at the first ADMM iteration.
pub fn physical_subproblems_vs_grid(cases: usize) -> SubproblemReport {
    let mut r = rng(4);
    let mut rep = SubproblemReport {
        mode_consistent: true,
        ..Default::default()
    };
    for _ in 0..cases {
        let inst = random_instance(&mut r, 1);
        let c = inst.params().epsilon();
        let s = Subproblem::for_device(&inst, 0, -100.0, -100.0, 0.9, 0.1, c);
        check_subproblem(&s, &mut rep);
    }
    rep
}

#[derive(Debug, Default)]
pub struct CoupledReport {
    pub worst_error: f64,
    pub feasible: bool,
}

/// Closed-form coupled step against projected gradient ascent.
pub fn coupled_step_vs_gradient(cases: usize) -> CoupledReport {
    let mut r = rng(5);
    let mut rep = CoupledReport {
        feasible: true,
        ..Default::default()
    };
    for case in 0..cases {
        let n = 1 + case % 6;
        let c = r.random_range(0.5..4.0);
        let scale = if case % 2 == 0 { 1.0 } else { 0.2 };
        let x: Vec<f64> = (0..n).map(|_| r.random_range(0.0..1.5) * scale).collect();
        let tau: Vec<f64> = (0..n).map(|_| r.random_range(0.0..0.8) * scale).collect();
        let beta: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let gamma: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let step = coupled_step(&x, &tau, &beta, &gamma, c);
        let got = coupled_objective(&step.z, step.a, &x, &tau, &beta, &gamma, c);

        // ascent on v = (a, z); the Hessian is -c diag(n, 1, ..., 1)
        let mut v = vec![0.0; n + 1];
        let lr = 1.0 / (c * n as f64);
        for _ in 0..100_000 {
            let a = v[0];
            let mut g = vec![0.0; n + 1];
            g[0] = (0..n).map(|i| -beta[i] + c * (x[i] - a)).sum();
            for i in 0..n {
                g[i + 1] = -gamma[i] + c * (tau[i] - v[i + 1]);
            }
            let moved: Vec<f64> = v.iter().zip(&g).map(|(p, d)| p + lr * d).collect();
            v = project(&moved);
        }
        let oracle = coupled_objective(&v[1..], v[0], &x, &tau, &beta, &gamma, c);
        rep.worst_error = rep.worst_error.max((got - oracle).abs() / oracle.abs().max(1.0));
        let used = step.a + step.z.iter().sum::<f64>();
        rep.feasible &= used <= 1.0 + 1e-12 && step.a >= 0.0 && step.z.iter().all(|&z| z >= 0.0);
    }
    rep
}

/// Largest `|w e^w - x|` over `samples` points of `[-1/e, 0]`, concentrated
/// near the branch point, near zero, and at the arguments the dual price
/// produces. The flag reports whether every `w` stayed in `[-1, 0]`.
pub fn lambert_w_residual(samples: usize) -> (f64, bool) {
    let mut r = rng(6);
    let e = std::f64::consts::E;
    let (mut worst, mut in_range) = (0.0f64, true);
    for i in 0..samples {
        let x = match i % 4 {
            0 => -1.0 / e * r.random::<f64>(),
            1 => -1.0 / e + 1e-6 * r.random::<f64>(),
            2 => -1e-3 * r.random::<f64>(),
            _ => -(-(1.0 + log_uniform(&mut r, 1e-8, 50.0))).exp(),
        };
        let w = lambert_w0(x).unwrap();
        worst = worst.max((w * w.exp() - x).abs());
        in_range &= (-1.0..=0.0).contains(&w);
    }
    (worst, in_range)
}
