//! Walk-on-spheres Green estimates on the unit disc next to the closed form,
//! then on a box where no closed form exists (checked by symmetry instead).

use kfat_lab::geometry::DomainSpec;
use kfat_lab::kernels::{ball_green, StableParams};
use kfat_lab::wos::{estimate_green, WalkOptions};

fn main() -> kfat_lab::Result<()> {
    let p = StableParams::new(2, 1.5)?;
    let opts = WalkOptions::default();
    let ball = DomainSpec::unit_ball(2);
    let pairs = [([0.1, 0.2], [-0.3, 0.4]), ([0.6, 0.0], [0.0, -0.5]), ([0.2, -0.7], [0.3, -0.6])];
    for (i, (x, y)) in pairs.iter().enumerate() {
        let est = estimate_green(&p, &ball, x, y, 100_000, i as u64, &opts)?;
        let exact = ball_green(&p, 1.0, x, y)?;
        println!(
            "ball {x:?} {y:?}: {:.5} +- {:.5}, exact {exact:.5}, rel err {:.2}%",
            est.value,
            est.stderr,
            100.0 * (est.value - exact).abs() / exact
        );
    }
    let cube = DomainSpec::unit_cube(2);
    let (x, y) = ([0.3, 0.4], [0.7, 0.5]);
    let a = estimate_green(&p, &cube, &x, &y, 50_000, 7, &opts)?;
    let b = estimate_green(&p, &cube, &y, &x, 50_000, 8, &opts)?;
    println!("box: G(x,y) = {:.5} +- {:.5}, G(y,x) = {:.5} +- {:.5}", a.value, a.stderr, b.value, b.stderr);
    Ok(())
}
