//! Sampling check of the corkscrew condition on a few shapes. The L-shape
//! has a reentrant corner, which caps the kappa it can certify.

use kfat_lab::geometry::{kfat_certify, DomainSpec, KFatCharacteristics, Shape};

fn main() -> kfat_lab::Result<()> {
    let shapes = [
        ("disc", DomainSpec::unit_ball(2)),
        ("square", DomainSpec::unit_cube(2)),
        (
            "L-shape",
            DomainSpec::new(Shape::LShape { lo: vec![0.0, 0.0], hi: vec![2.0, 2.0], notch: vec![1.0, 1.0] })?,
        ),
    ];
    let candidate = KFatCharacteristics::new(0.5, 0.2)?;
    for (name, dom) in &shapes {
        let rep = kfat_certify(dom, &candidate, 64, 8, 64, 1)?;
        println!(
            "{name:>8}: {} checks, {} failures, largest kappa passed {:.4}",
            rep.n_checks,
            rep.failures.len(),
            rep.kappa_passed
        );
    }
    Ok(())
}
