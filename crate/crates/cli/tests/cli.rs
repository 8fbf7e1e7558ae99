//! Behavioral tests of the command-line interface: exit codes, config
//! precedence, reproducibility of the config echo, and the artifact set
//! each command emits.

mod common;

use common::{assert_same_bytes, faultstab, faultstab_env, read, Run, TINY_GEN};

fn tmp() -> tempfile::TempDir {
    tempfile::tempdir().expect("tempdir")
}

fn ok(run: &Run) {
    assert_eq!(
        run.status, 0,
        "expected success\nstdout:\n{}\nstderr:\n{}",
        run.stdout, run.stderr
    );
}

#[test]
fn gen_same_seed_twice_writes_identical_files() {
    let dir = tmp();
    let mut args1 = TINY_GEN.to_vec();
    args1.extend(["--out-dir", "one"]);
    ok(&faultstab(dir.path(), &args1));
    let mut args2 = TINY_GEN.to_vec();
    args2.extend(["--out-dir", "two"]);
    ok(&faultstab(dir.path(), &args2));
    assert_same_bytes(
        &dir.path().join("one/train.csv"),
        &dir.path().join("two/train.csv"),
    );
    assert_same_bytes(
        &dir.path().join("one/train.meta.json"),
        &dir.path().join("two/train.meta.json"),
    );
}

#[test]
fn invalid_box_exits_two_and_names_the_field() {
    let dir = tmp();
    let run = faultstab(
        dir.path(),
        &["gen", "--d-min", "-10", "--d-max", "-60", "--out-dir", "x"],
    );
    assert_eq!(run.status, 2, "stderr:\n{}", run.stderr);
    assert!(
        run.stderr.contains("parameter box range for d"),
        "message must name the offending field, got:\n{}",
        run.stderr
    );
}

#[test]
fn missing_required_flag_prints_usage_and_exits_two() {
    let dir = tmp();
    let run = faultstab(dir.path(), &["eval"]);
    assert_eq!(run.status, 2);
    assert!(run.stderr.contains("--model"), "stderr:\n{}", run.stderr);
    assert!(run.stderr.contains("usage:"), "stderr:\n{}", run.stderr);

    let run = faultstab(dir.path(), &["train"]);
    assert_eq!(run.status, 2);
    assert!(run.stderr.contains("--data"), "stderr:\n{}", run.stderr);
}

#[test]
fn unknown_flag_exits_two() {
    let dir = tmp();
    let run = faultstab(dir.path(), &["gen", "--no-such-flag"]);
    assert_eq!(run.status, 2);
}

#[test]
fn captured_stdout_reproduces_the_run() {
    let dir = tmp();
    let mut args = TINY_GEN.to_vec();
    args.extend(["--out-dir", "one"]);
    let first = faultstab(dir.path(), &args);
    ok(&first);
    // The whole stdout is a valid TOML config: status lines are comments.
    std::fs::write(dir.path().join("echo.toml"), &first.stdout).unwrap();
    let second = faultstab(
        dir.path(),
        &["gen", "--config", "echo.toml", "--out-dir", "two"],
    );
    ok(&second);
    assert_same_bytes(
        &dir.path().join("one/train.csv"),
        &dir.path().join("two/train.csv"),
    );
}

#[test]
fn flags_override_config_file_values() {
    let dir = tmp();
    std::fs::write(
        dir.path().join("cfg.toml"),
        "[gen]\ncount = 5\nq = 3\nseed = 7\ngrid_n = 5\nk_max = 3\ncells = 3\nquad_order = 3\n",
    )
    .unwrap();
    let run = faultstab(
        dir.path(),
        &["gen", "--config", "cfg.toml", "--count", "9", "--out-dir", "o"],
    );
    ok(&run);
    let csv = String::from_utf8(read(&dir.path().join("o/train.csv"))).unwrap();
    assert_eq!(csv.lines().count(), 10, "header plus nine data rows");
    assert!(run.stdout.contains("count = 9"), "echo reflects the flag");
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tmp();
    std::fs::write(dir.path().join("cfg.toml"), "[gen]\ncont = 10\n").unwrap();
    let run = faultstab(dir.path(), &["gen", "--config", "cfg.toml"]);
    assert_eq!(run.status, 2);
    assert!(run.stderr.contains("cont"), "stderr:\n{}", run.stderr);
}

#[test]
fn out_dir_env_var_is_the_default_destination() {
    let dir = tmp();
    let target = dir.path().join("from_env");
    let run = faultstab_env(
        dir.path(),
        TINY_GEN,
        &[("FAULTSTAB_OUT_DIR", target.to_str().unwrap())],
    );
    ok(&run);
    assert!(target.join("train.csv").exists());
}

#[test]
fn noisy_gen_is_reproducible_and_differs_from_clean() {
    let dir = tmp();
    let mut clean = TINY_GEN.to_vec();
    clean.extend(["--out-dir", "clean"]);
    ok(&faultstab(dir.path(), &clean));
    for sub in ["n1", "n2"] {
        let mut noisy = TINY_GEN.to_vec();
        noisy.extend(["--noise", "0.05", "--out-dir", sub]);
        ok(&faultstab(dir.path(), &noisy));
    }
    assert_same_bytes(
        &dir.path().join("n1/train.csv"),
        &dir.path().join("n2/train.csv"),
    );
    assert_ne!(
        read(&dir.path().join("clean/train.csv")),
        read(&dir.path().join("n1/train.csv")),
        "noise must change the features"
    );
}

fn prepare_train_eval(dir: &std::path::Path) {
    let mut train = TINY_GEN.to_vec();
    train.extend(["--out-dir", "o"]);
    ok(&faultstab(dir, &train));
    let test = [
        "gen", "--count", "12", "--q", "3", "--seed", "8", "--grid-n", "5", "--k-max", "3",
        "--cells", "3", "--quad-order", "3", "--out", "test.csv", "--out-dir", "o",
    ];
    ok(&faultstab(dir, &test));
    ok(&faultstab(
        dir,
        &[
            "train",
            "--data",
            "o/train.csv",
            "--hidden",
            "6,4",
            "--iters",
            "40",
            "--seed",
            "2",
            "--out-dir",
            "o",
        ],
    ));
}

#[test]
fn eval_emits_tables_and_histograms() {
    let dir = tmp();
    prepare_train_eval(dir.path());
    let run = faultstab(
        dir.path(),
        &[
            "eval",
            "--model",
            "o/mlp.model",
            "--train-data",
            "o/train.csv",
            "--test-data",
            "o/test.csv",
            "--subsample",
            "10",
            "--out-dir",
            "o",
        ],
    );
    ok(&run);
    for name in [
        "eval_mlp.csv",
        "eval_nn_full.csv",
        "eval_nn_sub.csv",
        "comparison.csv",
        "comparison.txt",
        "hist_a.svg",
        "hist_b.svg",
        "hist_d.svg",
    ] {
        assert!(dir.path().join("o").join(name).exists(), "missing {name}");
    }
    let comparison = String::from_utf8(read(&dir.path().join("o/comparison.csv"))).unwrap();
    let mut lines = comparison.lines();
    assert_eq!(lines.next(), Some("method,err_a,err_b,err_d,err_mean"));
    let methods: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(methods, ["mlp", "nn_s", "nn_s[10]"]);
    assert!(
        !comparison.contains("seconds") && !comparison.contains("load") && !comparison.contains("run_s"),
        "timings must stay out of CSV outputs"
    );
    let txt = String::from_utf8(read(&dir.path().join("o/comparison.txt"))).unwrap();
    assert!(txt.contains("load_s") && txt.contains("run_s"));
    let svg = String::from_utf8(read(&dir.path().join("o/hist_a.svg"))).unwrap();
    assert!(svg.starts_with("<?xml") && svg.contains("</svg>"));
}

#[test]
fn nearest_neighbor_over_its_own_bank_is_exact() {
    let dir = tmp();
    prepare_train_eval(dir.path());
    let run = faultstab(
        dir.path(),
        &[
            "eval",
            "--model",
            "o/mlp.model",
            "--train-data",
            "o/train.csv",
            "--test-data",
            "o/train.csv",
            "--subsample",
            "20",
            "--out-dir",
            "o",
        ],
    );
    ok(&run);
    let comparison = String::from_utf8(read(&dir.path().join("o/comparison.csv"))).unwrap();
    let nn_row = comparison
        .lines()
        .find(|l| l.starts_with("nn_s,"))
        .expect("full-bank row");
    assert_eq!(
        nn_row, "nn_s,0,0,0,0",
        "every test row sits in the bank, so lookup must be exact"
    );
}

#[test]
fn stability_emits_report_trials_and_histogram() {
    let dir = tmp();
    let run = faultstab(
        dir.path(),
        &[
            "stability",
            "--trials",
            "4",
            "--seed",
            "1",
            "--q",
            "2",
            "--k-max",
            "2",
            "--cells",
            "2",
            "--quad-order",
            "2",
            "--dense-n",
            "5",
            "--coarse-n",
            "3",
            "--out-dir",
            "o",
        ],
    );
    ok(&run);
    let kv = String::from_utf8(read(&dir.path().join("o/stability_report.txt"))).unwrap();
    assert!(kv.contains("c_hat = "), "report:\n{kv}");
    assert!(kv.contains("seed = 1"));
    let trials = String::from_utf8(read(&dir.path().join("o/stability_trials.csv"))).unwrap();
    assert!(trials.starts_with("trial,a,b,d,a_prime"));
    assert!(dir.path().join("o/stability_ratios.svg").exists());
    assert!(run.stdout.contains("# c_hat = "));
}

#[test]
fn stability_numerical_failure_exits_three() {
    let dir = tmp();
    let run = faultstab(
        dir.path(),
        &[
            "stability",
            "--trials",
            "2",
            "--a1",
            "1e9",
            "--q",
            "2",
            "--k-max",
            "2",
            "--cells",
            "2",
            "--quad-order",
            "2",
            "--dense-n",
            "5",
            "--coarse-n",
            "3",
            "--out-dir",
            "o",
        ],
    );
    assert_eq!(run.status, 3, "stderr:\n{}", run.stderr);
}

#[test]
fn quadcheck_writes_errors_and_slopes() {
    let dir = tmp();
    let run = faultstab(
        dir.path(),
        &["quadcheck", "--n-list", "3,5,9", "--out-dir", "o"],
    );
    ok(&run);
    let errors = String::from_utf8(read(&dir.path().join("o/quadcheck_errors.csv"))).unwrap();
    assert!(errors.starts_with("function,n,measurements,abs_error"));
    assert_eq!(errors.lines().count(), 1 + 3 * 3, "three functions, three grids");
    let slopes = String::from_utf8(read(&dir.path().join("o/quadcheck_slopes.csv"))).unwrap();
    assert!(slopes.contains("constant,true,"));
    assert!(slopes.contains("forward_data,false,"));
}

#[test]
fn report_rerenders_saved_tables() {
    let dir = tmp();
    prepare_train_eval(dir.path());
    ok(&faultstab(
        dir.path(),
        &[
            "eval",
            "--model",
            "o/mlp.model",
            "--train-data",
            "o/train.csv",
            "--test-data",
            "o/test.csv",
            "--subsample",
            "10",
            "--out-dir",
            "o",
        ],
    ));
    let run = faultstab(
        dir.path(),
        &[
            "report",
            "--eval",
            "o/eval_mlp.csv",
            "--eval",
            "o/eval_nn_full.csv",
            "--bins",
            "12",
            "--out-dir",
            "rep",
        ],
    );
    ok(&run);
    let summary = String::from_utf8(read(&dir.path().join("rep/report_summary.csv"))).unwrap();
    assert!(summary.starts_with("label,rows,err_a,err_b,err_d,err_mean"));
    assert_eq!(summary.lines().count(), 3);
    for name in ["hist_eval_mlp_a.svg", "hist_eval_nn_full_d.svg"] {
        assert!(dir.path().join("rep").join(name).exists(), "missing {name}");
    }

    let empty = faultstab(dir.path(), &["report", "--out-dir", "rep"]);
    assert_eq!(empty.status, 2);
    assert!(empty.stderr.contains("nothing to report"));
}
