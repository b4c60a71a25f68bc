//! Principal-branch Lambert W and the dual price map built on it.

use wpmec::lambertw::lambert_w0;
use wpmec::time_alloc::phi_j;
use wpmec::SystemParams;

fn main() -> wpmec::Result<()> {
    println!("{:>12} {:>22} {:>10}", "x", "W0(x)", "residual");
    for x in [-1.0 / std::f64::consts::E, -0.3, -0.1, -1e-3, -1e-9, 0.0] {
        let w = lambert_w0(x)?;
        println!("{x:>12.4e} {w:>22.16} {:>10.1e}", (w * w.exp() - x).abs());
    }
    assert!(lambert_w0(0.5).is_err());

    // phi_j falls monotonically as the price of frame time rises
    let eps = SystemParams::default().epsilon();
    println!("\n{:>14} {:>14} {:>14}", "nu / eps", "phi (w = 1)", "phi (w = 2)");
    for s in [0.01, 0.1, 1.0, 10.0, 100.0] {
        println!(
            "{s:>14} {:>14.6} {:>14.6}",
            phi_j(eps, 1.0, s * eps)?,
            phi_j(eps, 2.0, s * eps)?
        );
    }
    Ok(())
}
