//! Martin kernel ratios M(x, y_k) = G(x, y_k) / G(x0, y_k) as y_k moves
//! radially to the boundary of the disc, against the closed-form limit.

use kfat_lab::geometry::{DomainSpec, Point};
use kfat_lab::kernels::{ball_martin_kernel, StableParams};
use kfat_lab::wos::{estimate_martin, WalkOptions};

fn main() -> kfat_lab::Result<()> {
    let p = StableParams::new(2, 1.5)?;
    let dom = DomainSpec::unit_ball(2);
    let (x0, x) = ([0.0, 0.0], [0.3, 0.2]);
    let ys: Vec<Point> = (2..=6).map(|j| Point::new(vec![1.0 - 0.5f64.powi(j), 0.0])).collect();
    let rep = estimate_martin(&p, &dom, &x0, &x, &ys, 40_000, 5, &WalkOptions::default())?;
    for (y, e) in ys.iter().zip(&rep.estimates) {
        println!("y = {:.4}: M = {:.4} +- {:.4}", y[0], e.value, e.stderr);
    }
    let limit = ball_martin_kernel(&p, &[0.0, 0.0], 1.0, &x0, &x, &[1.0, 0.0])?;
    println!("closed-form limit {limit:.4}; Cauchy tail {:.4} vs stderr {:.4}", rep.cauchy_tail, rep.tail_stderr);
    Ok(())
}
