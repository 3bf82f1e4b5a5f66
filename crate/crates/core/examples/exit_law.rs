//! Exit radii of the planar stable process started at the centre of the unit
//! disc, compared with the closed-form radial law by a KS statistic.

use kfat_lab::geometry::{norm, DomainSpec};
use kfat_lab::kernels::{ball_exit_radial_cdf, StableParams};
use kfat_lab::stats::{ks_critical_1pct, ks_statistic};
use kfat_lab::wos::{sample_exits, WalkOptions};

fn main() -> kfat_lab::Result<()> {
    let ball = DomainSpec::unit_ball(2);
    for alpha in [0.5, 1.0, 1.5] {
        let p = StableParams::new(2, alpha)?;
        let chains = sample_exits(&p, &ball, &[0.0, 0.0], 100_000, 42, &WalkOptions::default())?;
        let radii: Vec<f64> = chains.iter().map(|c| norm(&c.exit_point)).collect();
        let ks = ks_statistic(&radii, |s| ball_exit_radial_cdf(&p, 1.0, s).unwrap_or(0.0));
        let median = {
            let mut r = radii.clone();
            r.sort_by(f64::total_cmp);
            r[r.len() / 2]
        };
        println!(
            "alpha = {alpha}: KS = {ks:.5} (1% critical {:.5}), median exit radius {median:.4}",
            ks_critical_1pct(radii.len())
        );
    }
    Ok(())
}
