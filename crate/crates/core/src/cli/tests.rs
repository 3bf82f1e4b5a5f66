use super::*;
use crate::green::TabulatedGreen;

const BALL: &str = r#"
[domain]
type = "ball"
center = [0.0, 0.0]
radius = 1.0

[process]
alpha = 1.0
"#;

fn cfg(extra: &str) -> ExperimentConfig {
    ExperimentConfig::parse(&format!("{BALL}\n{extra}")).unwrap()
}

fn run_in(dir: &Path, study: Study, c: &ExperimentConfig, workers: usize) -> Outcome {
    let ov = Overrides { seed: Some(5), workers: Some(workers), out: Some(dir.to_path_buf()) };
    run_study(study, c, b"bytes", dir, &ov).unwrap()
}

fn config_error(text: &str, study: Study) -> String {
    let c = ExperimentConfig::parse(text);
    let err = match c {
        Ok(c) => run_study(study, &c, b"", Path::new("."), &Overrides::default()).unwrap_err(),
        Err(e) => e,
    };
    err.to_string()
}

#[test]
fn threeg_bundle_on_the_ball() {
    let dir = tempfile::tempdir().unwrap();
    let c = cfg("[green]\nsource = \"oracle\"\n[sampler]\nn_tuples = 400\npolish_steps = 8\n");
    let o = run_in(dir.path(), Study::Threeg, &c, 1);
    for f in ["manifest.json", "ratios.csv", "fit.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let m = read_manifest(&o.manifest_path).unwrap();
    assert_eq!(m, o.manifest);
    assert_eq!(m.seed, 5);
    assert_eq!(m.config_sha256, sha256_hex(b"bytes"));
    assert!(m.constants.iter().all(|c| c.curve.len() == 5));
    let header = std::fs::read_to_string(dir.path().join("ratios.csv")).unwrap();
    assert!(header.starts_with("x0,x1,y0,y1,z0,z1,w0,w1,lhs,rhs,ratio,gamma,rel_err\n"));
}

#[test]
fn csv_bodies_do_not_depend_on_workers_or_reruns() {
    let c = cfg("[green]\nsource = \"oracle\"\n[sampler]\nn_tuples = 200\npolish_steps = 8\n");
    let bodies = |workers: usize| {
        let dir = tempfile::tempdir().unwrap();
        run_in(dir.path(), Study::Threeg, &c, workers);
        std::fs::read(dir.path().join("ratios.csv")).unwrap()
    };
    let one = bodies(1);
    assert_eq!(one, bodies(1));
    assert_eq!(one, bodies(4));
}

#[test]
fn green_table_round_trips_through_the_plugin_reader() {
    let dir = tempfile::tempdir().unwrap();
    let c = cfg("[green]\nn_walks = 2000\n[green_study]\npairs = [[0.1, 0.0, -0.3, 0.2]]\nn_random = 2\n");
    run_in(dir.path(), Study::Green, &c, 2);
    let path = dir.path().join("green.csv");
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("x0,x1,y0,y1,g,g_err\n"));
    let t = TabulatedGreen::read_csv(&path).unwrap();
    assert_eq!(t.rows().len(), 3);
    // 17 significant digits survive a parse
    let first = text.lines().nth(1).unwrap().split(',').nth(4).unwrap().to_string();
    assert_eq!(crate::green::fmt_f64(first.parse().unwrap()), first);
}

#[test]
fn flagged_divergence_is_an_acceptance_failure() {
    let dir = tempfile::tempdir().unwrap();
    let c = cfg(
        "[kato]\nbetas = [0.9]\ngamma = 0.5\nn_pairs = 1\ns_infty = false\n\
         [kato.quad]\nbase_per_stratum = 256\nmax_doublings = 4\n",
    );
    let o = run_in(dir.path(), Study::Kato, &c, 1);
    assert!(!o.manifest.passed);
    assert_eq!(o.exit_code(), EXIT_ACCEPTANCE);
    assert!(dir.path().join("young.csv").exists() && dir.path().join("gauge.csv").exists());
}

#[test]
fn validation_errors_name_the_field() {
    let frame = format!("{BALL}\n[frame]\nr_char = 1.0\nkappa = 0.9\n");
    assert!(config_error(&frame, Study::Growth).contains("frame.kappa"));
    let typo = format!("{BALL}\n[sampler]\nn_tuple = 10\n");
    assert!(config_error(&typo, Study::Threeg).contains("n_tuple"));
    let alpha = BALL.replace("alpha = 1.0", "alpha = 2.5");
    assert!(config_error(&alpha, Study::Threeg).contains("process.alpha"));
    let mass = config_error(BALL, Study::Relativistic);
    assert!(mass.contains("process.mass"), "{mass}");
    let radius = BALL.replace("radius", "radus");
    assert!(config_error(&radius, Study::Threeg).contains("radus"));
    let wrong = format!("study = \"kato\"\n{BALL}");
    assert!(config_error(&wrong, Study::Green).contains("study"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, format!("{BALL}\n[frame]\nr_char = 1.0\nkappa = 0.9\n")).unwrap();
    let run = |args: &[&str]| main_with_args(std::iter::once("kfat-lab").chain(args.iter().copied()));
    assert_eq!(run(&["growth", "--config", path.to_str().unwrap()]), EXIT_INVALID);
    assert_eq!(run(&["frobnicate"]), EXIT_INVALID);
    assert_eq!(run(&["--help"]), EXIT_OK);
    assert_eq!(run(&["report", dir.path().join("missing.json").to_str().unwrap()]), EXIT_INVALID);

    let good = dir.path().join("good.toml");
    std::fs::write(&good, format!("{BALL}\n[counterexample]\nk_max = 6\n")).unwrap();
    let out = dir.path().join("out");
    let args = ["counterexample", "--config", good.to_str().unwrap(), "--out", out.to_str().unwrap(), "--workers", "2"];
    assert_eq!(run(&args), EXIT_OK);
    assert_eq!(run(&["report", out.join("manifest.json").to_str().unwrap()]), EXIT_OK);
}

#[test]
fn summary_lists_verdicts_and_aggregates() {
    let check = |passed| Check { name: "c".into(), passed, detail: "d".into() };
    let m = |study: &str, passed| Manifest {
        study: study.into(),
        version: "0".into(),
        config_sha256: "ab".repeat(32),
        seed: 1,
        workers: 1,
        walltime_s: 0.5,
        green_source: None,
        tables: vec![],
        reports: vec![],
        constants: vec![Constant { name: "k".into(), value: 2.0, stable: Some(passed), curve: vec![] }],
        acceptance: vec![check(passed)],
        passed,
    };
    let s = summarize(&[m("threeg", true), m("kato", false)]);
    assert!(s.contains("== threeg [PASS]") && s.contains("== kato [FAIL]"));
    assert!(s.contains("[FAIL] c: d") && s.contains("(UNSTABLE)"));
    let last = s.lines().last().unwrap();
    assert!(last.starts_with("kato") && last.trim_end().ends_with('1'));
}

#[test]
fn graph_domains_parse() {
    let text = "[domain]\ntype = \"graph\"\nbase_lo = [0.0]\nbase_hi = [1.0]\nbottom = -1.0\nheight = 1.0\n\
                amplitude = 0.2\nfrequency = 1.0\n[process]\nalpha = 1.0\n[frame]\nr_char = 0.2\nkappa = 0.1\n";
    let c = ExperimentConfig::parse(text).unwrap();
    let r = c.resolve(Study::Certify, Path::new(".")).unwrap();
    assert_eq!(r.domain.dim(), 2);
}
