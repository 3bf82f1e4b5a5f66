//! Classical and generalized 3G sup fits on the unit disc with the exact
//! Green function, plus the sweep showing the correction factors are needed.

use kfat_lab::geometry::DomainSpec;
use kfat_lab::green::BallOracle;
use kfat_lab::inequality_lab::{
    counterexample_sweep, default_gamma_grid, dyadic_deltas, fit_3g, fit_classical_3g, SamplerConfig,
};
use kfat_lab::kernels::StableParams;

fn main() -> kfat_lab::Result<()> {
    let p = StableParams::new(2, 1.0)?;
    let dom = DomainSpec::unit_ball(2);
    let oracle = BallOracle::new(p, &dom)?;
    let sampler = SamplerConfig { seed: 3, ..Default::default() };

    let (classical, _) = fit_classical_3g(&oracle, &p, &dom, &sampler)?;
    println!("classical 3G: sup {:.5}, stable {}", classical.c_hat, classical.stable);

    let (fit, _) = fit_3g(&oracle, &p, &dom, &sampler, &default_gamma_grid(p.alpha), Some(0.5))?;
    for g in &fit.per_gamma {
        println!("  gamma {:.4}: sup {:.5} stable {}", g.gamma, g.fit.sup, g.fit.stable);
    }
    println!("generalized 3G at gamma = 1/2: sup {:.5}, least stable gamma {:?}", fit.c_hat, fit.gamma_hat);
    println!("{}", fit.caveat);

    for row in counterexample_sweep(&p, &dom, &dyadic_deltas(3, 10), 0.5, 0.5)? {
        println!("delta {:.2e}: factor-free {:.4e}, with factors {:.4}", row.delta, row.ratio_free, row.ratio_gamma);
    }
    Ok(())
}
