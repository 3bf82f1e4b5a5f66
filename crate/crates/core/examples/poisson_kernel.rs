//! The ball Poisson kernel: radial mass from the centre, and the exit CDF
//! against its quantile function.

use kfat_lab::kernels::{ball_exit_radial_cdf, ball_exit_radius_quantile, centred_poisson_kernel, StableParams};
use kfat_lab::quad::{semi_infinite, tanh_sinh};
use kfat_lab::special::sphere_area;

fn main() -> kfat_lab::Result<()> {
    for alpha in [0.5, 1.0, 1.5] {
        let p = StableParams::new(2, alpha)?;
        let k = |gap: f64| if gap > 1e100 { 0.0 } else { centred_poisson_kernel(&p, 1.0, gap).unwrap() * (1.0 + gap) };
        let near = tanh_sinh(|_, dl, _| k(dl), 0.0, 1.0, 0.0, 1e-15, 14);
        let far = semi_infinite(|s| k(s - 1.0), 2.0, 2.0, 0.0, 1e-15);
        let mass = sphere_area(2) * (near.value + far.value);
        let median = ball_exit_radius_quantile(&p, 1.0, 0.5);
        println!(
            "alpha = {alpha}: mass - 1 = {:+.2e}, median exit radius {median:.6}, cdf there {:.12}",
            mass - 1.0,
            ball_exit_radial_cdf(&p, 1.0, median)?
        );
    }
    Ok(())
}
