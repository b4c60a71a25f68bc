//! Coordinate descent on the modes from a random start, with its ascent trace.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wpmec::benchmarks::enumerate_optimal;
use wpmec::channel_gen::{sample_instance, InstanceKey, PlacementSpec, WeightRule};
use wpmec::mode_cd::{cd_solve_traced, random_modes, CdOptions};

fn main() -> wpmec::Result<()> {
    let spec = PlacementSpec {
        n: 12,
        seed: 7,
        ..Default::default()
    };
    let key = InstanceKey {
        placement: 0,
        realization: 0,
    };
    let inst = sample_instance(&spec, &Default::default(), WeightRule::RandomOneTwo, key)?;

    let start = random_modes(inst.len(), &mut ChaCha8Rng::seed_from_u64(1));
    let (report, trace) = cd_solve_traced(&inst, &start, &CdOptions::default())?;
    println!("start {start}  V = {:.6e}", trace.values[0]);
    for (dev, v) in trace.flips.iter().zip(&trace.values[1..]) {
        println!("flip {dev:>2}        V = {v:.6e}");
    }
    println!("final {}  after {} sweeps", report.modes, report.iterations);

    let opt = enumerate_optimal(&inst, &Default::default())?;
    println!("optimal {}  V = {:.6e}", opt.modes, opt.objective);
    println!("cd / optimal = {:.6}", report.objective / opt.objective);
    Ok(())
}
