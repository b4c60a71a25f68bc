//! On a homogeneous line the optimal offloaders are the devices nearest the
//! access point, and more of them offload as local computing gets costlier.

use wpmec::benchmarks::enumerate_optimal;
use wpmec::harness::run::has_threshold_structure;
use wpmec::{NetworkInstance, SystemParams};

fn main() -> wpmec::Result<()> {
    // gains for devices at 2.5, 2.8, ..., 5.2 m under the default path loss
    let spec = wpmec::channel_gen::PlacementSpec::default();
    let h: Vec<f64> = (0..10)
        .map(|i| wpmec::channel_gen::mean_gain(&spec, 2.5 + 0.3 * i as f64))
        .collect();
    for mult in [1.0, 4.0, 16.0] {
        let inst = NetworkInstance::new(
            SystemParams::default(),
            h.clone(),
            vec![1.0; 10],
            vec![mult * 1e-26; 10],
        )?;
        let opt = enumerate_optimal(&inst, &Default::default())?;
        println!(
            "k = {mult:>2} x 1e-26: {}  offloaders {}  threshold {}",
            opt.modes,
            opt.modes.offload_count(),
            has_threshold_structure(&inst, &opt.modes)
        );
    }
    Ok(())
}
