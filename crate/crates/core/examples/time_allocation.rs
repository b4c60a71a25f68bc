//! Optimal energy-transfer / offloading split for a fixed mode selection.

use wpmec::time_alloc::{q_of_nu, solve_time_allocation, stationarity_residual, BisectionOptions};
use wpmec::{Mode, ModeSelection, NetworkInstance, SystemParams};

fn main() -> wpmec::Result<()> {
    let inst = NetworkInstance::new(
        SystemParams::default(),
        vec![8e-6, 4e-6, 2e-6, 1e-6, 5e-7],
        vec![1.0, 2.0, 1.0, 2.0, 1.0],
        vec![1e-26; 5],
    )?;
    use Mode::{Local, Offload};
    let modes = ModeSelection::new(vec![Offload, Offload, Local, Offload, Local]);

    let opts = BisectionOptions::default();
    let (alloc, dual) = solve_time_allocation(&inst, &modes, &opts)?;
    println!("modes {modes}");
    println!("nu = {:.6e} after {} bisection steps", dual.nu, dual.iterations);
    println!("a = {:.6}", alloc.a);
    for j in modes.offload_devices() {
        println!("tau[{j}] = {:.6}", alloc.tau[j]);
    }
    println!("frame used = {:.9}", alloc.time_used());
    println!("rate = {:.6e} bits/s", wpmec::objective(&inst, &modes, &alloc)?);
    println!("Q(nu) = {:.3e}", q_of_nu(&inst, &modes, dual.nu)?);
    println!(
        "stationarity residual = {:.3e}",
        stationarity_residual(&inst, &modes, &alloc, dual.nu)
    );
    Ok(())
}
