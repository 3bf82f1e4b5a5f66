//! Boundary growth exponent and the Carleson estimate for the Green function
//! of the unit disc.

use kfat_lab::geometry::{DomainSpec, KFatCharacteristics, ReferenceFrame};
use kfat_lab::green::BallOracle;
use kfat_lab::inequality_lab::{carleson_check, dyadic_grid, growth_check};
use kfat_lab::kernels::StableParams;
use kfat_lab::wos::calibrate_c0;

fn main() -> kfat_lab::Result<()> {
    let dom = DomainSpec::unit_ball(2);
    for alpha in [0.5, 1.0, 1.5] {
        let p = StableParams::new(2, alpha)?;
        let oracle = BallOracle::new(p, &dom)?;
        let frame = ReferenceFrame::new(&dom, KFatCharacteristics::new(1.0, 0.5)?)?.with_c0(calibrate_c0(&p, 20_000, 1))?;
        let q = [1.0, 0.0];
        let g = growth_check(&oracle, &p, &dom, &frame, &q, 0.4, &dyadic_grid(0.4, 10))?;
        let c = carleson_check(&oracle, &dom, &frame, &q, 0.06, &[-0.5, 0.0], 5_000, 2)?;
        println!(
            "alpha = {alpha}: gamma_fit {:.4} (margin {:.4}, R^2 {:.4}), Carleson sup {:.4} stable {}",
            g.gamma_fit, g.margin, g.r_squared, c.fit.sup, c.fit.stable
        );
    }
    Ok(())
}
