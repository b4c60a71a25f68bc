//! Every reference scheme on one instance.

use wpmec::benchmarks::{enumerate_optimal, local_only, lr_round, offloading_only, LrOptions};
use wpmec::channel_gen::{sample_instance, InstanceKey, PlacementSpec, WeightRule};
use wpmec::time_alloc::BisectionOptions;

fn main() -> wpmec::Result<()> {
    let spec = PlacementSpec {
        n: 14,
        seed: 5,
        ..Default::default()
    };
    let key = InstanceKey {
        placement: 0,
        realization: 2,
    };
    let inst = sample_instance(&spec, &Default::default(), WeightRule::RandomOneTwo, key)?;
    let opts = BisectionOptions::default();

    let opt = enumerate_optimal(&inst, &opts)?;
    let (rounded, relaxed) = lr_round(&inst, &LrOptions::default(), &opts)?;
    let rows = [
        ("relaxation bound", relaxed.upper_bound, None),
        ("optimal", opt.objective, Some(&opt.modes)),
        ("lr_round", rounded.objective, Some(&rounded.modes)),
        ("offloading_only", offloading_only(&inst, &opts)?.objective, None),
        ("local_only", local_only(&inst, &opts)?.objective, None),
    ];
    for (name, v, modes) in rows {
        let m = modes.map(|m| m.to_string()).unwrap_or_default();
        println!("{name:<18} {v:>14.6e} {:>8.4}  {m}", v / opt.objective);
    }
    println!(
        "relaxation converged in {} iterations, residual {:.1e}",
        relaxed.iterations, relaxed.residual
    );
    Ok(())
}
