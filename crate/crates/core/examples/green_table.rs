//! Tabulated Green plug-in: write a CSV table from the disc oracle, read it
//! back, and use it as an evaluator.

use kfat_lab::geometry::DomainSpec;
use kfat_lab::green::{BallOracle, GreenEvaluator, GreenRow, TabulatedGreen};
use kfat_lab::kernels::StableParams;
use kfat_lab::rng::StreamRng;

fn main() -> kfat_lab::Result<()> {
    let p = StableParams::new(2, 1.0)?;
    let dom = DomainSpec::unit_ball(2);
    let oracle = BallOracle::new(p, &dom)?;
    let mut rng = StreamRng::new(9, 0);
    let rows: Vec<GreenRow> = (0..20)
        .map(|_| {
            let (x, y) = (dom.sample_uniform(&mut rng), dom.sample_uniform(&mut rng));
            let g = oracle.eval(&x, &y).expect("distinct interior points");
            GreenRow { x: x.0, y: y.0, g: g.value, g_err: g.err }
        })
        .collect();
    let table = TabulatedGreen::from_rows(2, rows)?;
    let path = std::env::temp_dir().join("kfat_lab_green_table.csv");
    table.write_csv(&path)?;
    let back = TabulatedGreen::read_csv(&path)?;
    let r = &back.rows()[0];
    println!("{}: {} rows, first G = {:.17e}", path.display(), back.rows().len(), back.eval(&r.x, &r.y)?.value);
    Ok(())
}
