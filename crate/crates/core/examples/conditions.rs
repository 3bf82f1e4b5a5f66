//! Conditions C1 to C4 on the disc oracle, and on a distorted evaluator
//! G(x,y)/rho(y) that must fail C3.

use kfat_lab::conditions_c::{check_all, check_c3, ConditionsConfig};
use kfat_lab::geometry::{DomainSpec, KFatCharacteristics, ReferenceFrame};
use kfat_lab::green::{BallOracle, FnGreen, GreenEvaluator, GreenValue};
use kfat_lab::kernels::StableParams;
use kfat_lab::wos::calibrate_c0;

fn main() -> kfat_lab::Result<()> {
    let p = StableParams::new(2, 1.0)?;
    let dom = DomainSpec::unit_ball(2);
    let oracle = BallOracle::new(p, &dom)?;
    let frame = ReferenceFrame::new(&dom, KFatCharacteristics::new(1.0, 0.5)?)?.with_c0(calibrate_c0(&p, 20_000, 1))?;
    let cfg = ConditionsConfig::default();
    for rep in check_all(&oracle, &p, &dom, &frame, &cfg)? {
        println!("{:?}: constant {:.4e}, passed {}", rep.condition, rep.constant, rep.passed());
    }
    let bent = FnGreen {
        f: |x: &[f64], y: &[f64]| {
            let g = oracle.eval(x, y)?;
            let r = dom.distance(y);
            Ok(GreenValue { value: g.value / r, err: g.err / r })
        },
        label: "G / rho(y)".into(),
    };
    let rep = check_c3(&bent, &p, &dom, &cfg)?;
    println!("distorted C3: constant {:.4e}, passed {}", rep.constant, rep.passed());
    Ok(())
}
