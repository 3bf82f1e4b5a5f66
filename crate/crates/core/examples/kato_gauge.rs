//! Young exponents for the four cases, then gauge integrals for integrable
//! and non-integrable power perturbations on the unit disc.

use kfat_lab::geometry::{DomainSpec, Point};
use kfat_lab::green::BallOracle;
use kfat_lab::kato::{
    gauge_double_integral, select_young_exponents, Endpoint, PerturbationSpec, QuadConfig, YoungCase, YoungSelection,
};
use kfat_lab::kernels::StableParams;

fn main() -> kfat_lab::Result<()> {
    let p = StableParams::new(2, 1.0)?;
    for case in [YoungCase::F1, YoungCase::F2, YoungCase::F3, YoungCase::F4] {
        match select_young_exponents(&p, 1.5, 0.5, case)? {
            YoungSelection::Split(y) => println!("{case:?}: p = {:.4}, q = {:.4} from {:?}", y.p, y.q, y.interval),
            YoungSelection::NotNeeded { yz_exponent, .. } => println!("{case:?}: no split, exponent {yz_exponent}"),
        }
    }
    if let Err(e) = select_young_exponents(&p, 0.9, 0.5, YoungCase::F1) {
        println!("beta = 0.9: {e}");
    }

    let dom = DomainSpec::unit_ball(2);
    let oracle = BallOracle::new(p, &dom)?;
    let x = Point::new(vec![0.5, 0.1]);
    let w = Endpoint::Interior(Point::new(vec![-0.6, -0.2]));
    for beta in [0.9, 1.5, 2.0] {
        let f = PerturbationSpec::power(beta, 1.0)?;
        let r = gauge_double_integral(&oracle, &p, &dom, &f, &x, &w, &QuadConfig::default())?;
        println!(
            "beta = {beta}: {:.4e} +- {:.1e}, stable {}, divergent {}, levels {}",
            r.value,
            r.stderr,
            r.stable,
            r.divergent,
            r.curve.len()
        );
    }
    Ok(())
}
