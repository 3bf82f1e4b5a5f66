//! Relativistic stable kernels: psi, the difference kernel F^m and its
//! quadratic bound, and the killing term q^m near the boundary of the disc.

use kfat_lab::geometry::DomainSpec;
use kfat_lab::kernels::{ExteriorOptions, StableParams};
use kfat_lab::relativistic::{kernel_report, q_m, RelativisticParams};

fn main() -> kfat_lab::Result<()> {
    let rp = RelativisticParams::new(StableParams::new(2, 1.0)?, 1.0)?;
    let grid: Vec<f64> = (0..49).map(|i| 1e-3 * 1e4f64.powf(i as f64 / 48.0)).collect();
    let rep = kernel_report(&rp, &grid, 1e-2)?;
    println!(
        "psi(0) = {:.12}, decreasing {}, |F^m| <= {:.4} r^2 (slope {:.4}, R^2 {:.6}), dominated {}",
        rep.psi_at_zero, rep.psi_decreasing, rep.c_fit, rep.slope, rep.r_squared, rep.dominated
    );
    for row in rep.rows.iter().step_by(12) {
        println!("  r = {:.3e}: psi {:.5}, F^m {:.4e}", row.r, row.psi, row.f_m);
    }
    let dom = DomainSpec::unit_ball(2);
    for j in 1..=5 {
        let depth = 0.5f64.powi(j);
        let v = q_m(&rp, &dom, &[1.0 - depth, 0.0], &ExteriorOptions::default())?;
        println!("  depth {depth:.4}: q^m = {:.5e} +- {:.1e}", v.value, v.stderr);
    }
    Ok(())
}
