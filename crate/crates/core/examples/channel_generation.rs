//! Seeded placements and fading: the same key always gives the same channels.

use wpmec::channel_gen::{
    mean_gain, sample_distances, sample_instance, InstanceKey, PlacementSpec, WeightRule,
};

fn main() -> wpmec::Result<()> {
    let spec = PlacementSpec {
        n: 6,
        seed: 2018,
        ..Default::default()
    };
    for d in [2.0, 4.0, 6.0] {
        println!("mean gain at {d} m: {:.4e}", mean_gain(&spec, d));
    }
    println!("distances (placement 0): {:.3?}", sample_distances(&spec, 0));
    for realization in 0..3 {
        let key = InstanceKey {
            placement: 0,
            realization,
        };
        let inst = sample_instance(&spec, &Default::default(), WeightRule::Alternating, key)?;
        let h: Vec<String> = inst.h().iter().map(|x| format!("{x:.3e}")).collect();
        println!("fading {realization}: h = [{}]", h.join(", "));
    }
    let key = InstanceKey {
        placement: 0,
        realization: 1,
    };
    let a = sample_instance(&spec, &Default::default(), WeightRule::RandomOneTwo, key)?;
    let b = sample_instance(&spec, &Default::default(), WeightRule::RandomOneTwo, key)?;
    assert_eq!(a.h(), b.h());
    println!("weights {:?}", a.w());
    Ok(())
}
