use cemtd::harness::{
    average_trials, cli_main, run_experiment, ExperimentConfig, AVERAGE_HEADER, EXIT_CONFIG, EXIT_OK, TRACE_HEADER,
};

fn cli(args: &[&str]) -> (i32, String, String) {
    let (mut o, mut e) = (Vec::new(), Vec::new());
    let code = cli_main(std::iter::once("cemtd").chain(args.iter().copied()), &mut o, &mut e);
    (code, String::from_utf8(o).unwrap(), String::from_utf8(e).unwrap())
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn same_seed_gives_identical_output() {
    let args = ["run", "--env", "ring10", "--algo", "sce-mspbem,td0", "--iters", "3000", "--trials", "2", "--seed", "7"];
    let (c1, a, _) = cli(&args);
    let (c2, b, _) = cli(&args);
    assert_eq!((c1, c2), (EXIT_OK, EXIT_OK));
    assert_eq!(a, b);
    let (_, other, _) = cli(&["run", "--env", "ring10", "--algo", "sce-mspbem", "--iters", "3000", "--trials", "2", "--seed", "8"]);
    assert_ne!(data_lines(&a)[1..].join("\n"), data_lines(&other)[1..].join("\n"));
}

#[test]
fn trials_use_distinct_streams() {
    let mut cfg = ExperimentConfig::for_env("ring10").unwrap();
    cfg.algos = vec!["td0".into()];
    cfg.iters = 2000;
    cfg.trials = 2;
    let traces = run_experiment(&cfg).unwrap();
    let t = &traces[0].trials;
    assert_ne!(t[0].records.last().unwrap().sqrt_mse, t[1].records.last().unwrap().sqrt_mse);
}

#[test]
fn zero_iterations_write_only_headers() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.csv");
    let (code, _, _) = cli(&[
        "run", "--env", "baird", "--algo", "td0", "--iters", "0", "--trials", "3", "--average",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let trace = std::fs::read_to_string(&out).unwrap();
    assert_eq!(data_lines(&trace), [TRACE_HEADER]);
    let avg = std::fs::read_to_string(dir.path().join("run.avg.csv")).unwrap();
    assert_eq!(data_lines(&avg), [AVERAGE_HEADER]);
}

#[test]
fn csv_rows_follow_the_cadence_and_parse() {
    let (code, text, _) = cli(&["run", "--env", "vanroy", "--algo", "sce-msbrm", "--iters", "5000", "--trials", "1", "--cadence", "1000"]);
    assert_eq!(code, EXIT_OK);
    let lines = data_lines(&text);
    assert_eq!(lines[0], TRACE_HEADER);
    assert_eq!(lines.len(), 6);
    for (i, row) in lines[1..].iter().enumerate() {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f.len(), 8);
        assert_eq!(f[1].parse::<u64>().unwrap(), 1000 * (i as u64 + 1));
        assert!(f[2].parse::<f64>().unwrap().is_finite());
    }
}

#[test]
fn averages_cover_every_trial() {
    let mut cfg = ExperimentConfig::for_env("ring10").unwrap();
    cfg.algos = vec!["gtd2".into()];
    cfg.iters = 1000;
    cfg.trials = 3;
    let traces = run_experiment(&cfg).unwrap();
    let avg = average_trials(&traces[0].trials).unwrap();
    assert_eq!(avg.len(), 10);
    let last = avg.last().unwrap();
    let mean = traces[0].trials.iter().map(|t| t.records.last().unwrap().sqrt_mse).sum::<f64>() / 3.0;
    assert!((last.sqrt_mse - mean).abs() < 1e-12 * mean.max(1.0));
}

#[test]
fn bad_input_is_a_configuration_error() {
    assert_eq!(cli(&["run", "--env", "ring10", "--algo", "sarsa"]).0, EXIT_CONFIG);
    assert_eq!(cli(&["run", "--env", "ring10", "--param", "rho=2"]).0, EXIT_CONFIG);
    assert_eq!(cli(&["run", "--env", "ring10", "--param", "xi_init=mean"]).0, EXIT_CONFIG);
    assert_eq!(cli(&["run", "--env", "ring10", "--trials", "0"]).0, EXIT_CONFIG);
}
