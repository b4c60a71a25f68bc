//! ADMM mode search with its residual history.

use wpmec::benchmarks::enumerate_optimal;
use wpmec::channel_gen::{sample_instance, InstanceKey, PlacementSpec, WeightRule};
use wpmec::mode_admm::{admm_solve_traced, AdmmConfig};

fn main() -> wpmec::Result<()> {
    let spec = PlacementSpec {
        n: 10,
        seed: 3,
        ..Default::default()
    };
    let key = InstanceKey {
        placement: 1,
        realization: 4,
    };
    let inst = sample_instance(&spec, &Default::default(), WeightRule::RandomOneTwo, key)?;

    let cfg = AdmmConfig::default();
    let (report, history) = admm_solve_traced(&inst, &cfg)?;
    println!(
        "{:>6} {:>12} {:>12} {:>10}",
        "iter", "primal", "change", "offload"
    );
    let stride = (history.len() / 15).max(1);
    for (i, it) in history.iter().enumerate().filter(|(i, _)| i % stride == 0) {
        println!(
            "{i:>6} {:>12.3e} {:>12.3e} {:>10}",
            it.primal, it.change, it.offloaders
        );
    }
    println!(
        "{} after {} iterations, modes {}",
        if report.converged {
            "converged"
        } else {
            "hit the cap"
        },
        report.iterations,
        report.modes
    );
    let opt = enumerate_optimal(&inst, &Default::default())?;
    println!("admm / optimal = {:.6}", report.objective / opt.objective);

    // a larger step size damps the two-device oscillations seen on some instances
    let eps = inst.params().epsilon();
    let damped = wpmec::mode_admm::admm_solve(
        &inst,
        &AdmmConfig {
            c: Some(2.0 * eps),
            ..cfg
        },
    )?;
    println!(
        "c = 2 eps: {} iterations, ratio {:.6}",
        damped.iterations,
        damped.objective / opt.objective
    );
    Ok(())
}
