//! End-to-end tests of the `tidyfit` binary: pipelines, formats, exit codes.

use std::io::Write;
use std::process::{Command, Output, Stdio};

use tidyfit_core::fixtures::{mtcars, MTCARS_CSV};
use tidyfit_core::prelude::*;

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tidyfit"))
}

fn run(args: &[&str], stdin: Option<&str>) -> Output {
    let mut cmd = binary();
    cmd.args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    let mut child = cmd.spawn().expect("binary spawns");
    child
        .stdin
        .as_mut()
        .unwrap()
        .write_all(stdin.unwrap_or("").as_bytes())
        .unwrap();
    child.wait_with_output().expect("binary runs")
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).unwrap()
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).unwrap()
}

fn mtcars_file() -> tempfile::NamedTempFile {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    file.write_all(MTCARS_CSV.as_bytes()).unwrap();
    file
}

#[test]
fn reproduce_targets_pass_their_golden_checks() {
    for target in ["lm-tidy", "lm-augment", "lm-glance", "lm-grouped", "nls-summary"] {
        let output = run(&["reproduce", target, "--check"], None);
        assert!(
            output.status.success(),
            "{target}: {}",
            stderr_of(&output)
        );
        assert!(!output.stdout.is_empty());
    }
}

#[test]
fn reproduce_kmeans_sim_is_structurally_checked() {
    let output = run(&["reproduce", "kmeans-sim", "--check"], None);
    assert!(output.status.success(), "{}", stderr_of(&output));
    let text = stdout_of(&output);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1 + 9 * 4 * 50);
    assert_eq!(lines[0], "k,sd,replication,totss,tot.withinss,betweenss,iter");
}

#[test]
fn fit_tidy_output_is_byte_identical_to_library_serialization() {
    let file = mtcars_file();
    let output = run(
        &[
            "fit",
            "--model",
            "lm",
            "--formula",
            "mpg ~ wt + qsec",
            "--output",
            "tidy",
            "--rownames",
            "model",
            file.path().to_str().unwrap(),
        ],
        None,
    );
    assert!(output.status.success(), "{}", stderr_of(&output));

    let formula = match parse_formula("mpg ~ wt + qsec", None).unwrap() {
        Formula::Linear(f) => f,
        _ => unreachable!(),
    };
    let expected = tidy_lm(&fit_lm(&formula, &mtcars()).unwrap(), None)
        .unwrap()
        .to_csv(false);
    assert_eq!(output.stdout, expected);
}

#[test]
fn grouped_fit_prepends_keys() {
    let file = mtcars_file();
    let output = run(
        &[
            "fit",
            "--model",
            "lm",
            "--formula",
            "mpg ~ wt + qsec",
            "--group-by",
            "am",
            "--conf-level",
            "0.95",
            "--rownames",
            "model",
            file.path().to_str().unwrap(),
        ],
        None,
    );
    assert!(output.status.success(), "{}", stderr_of(&output));
    let text = stdout_of(&output);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 7);
    assert_eq!(
        lines[0],
        "am,term,estimate,std.error,statistic,p.value,conf.low,conf.high"
    );
    assert!(lines[1].starts_with("0,(Intercept),"));
    assert!(lines[4].starts_with("1,(Intercept),"));
}

#[test]
fn bootstrap_fit_emits_one_tidy_block_per_replicate() {
    let file = mtcars_file();
    let args = [
        "fit",
        "--model",
        "nls",
        "--formula",
        "mpg ~ k/wt + b",
        "--start",
        "k=1,b=0",
        "--boot",
        "50",
        "--seed",
        "2014",
        "--output",
        "tidy",
        "--rownames",
        "model",
    ];
    let path = file.path().to_str().unwrap();
    let output = run(&[&args[..], &[path]].concat(), None);
    assert!(output.status.success(), "{}", stderr_of(&output));
    let text = stdout_of(&output);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1 + 100, "50 replicates x 2 terms");
    assert_eq!(lines[0], "replicate,term,estimate,std.error,statistic,p.value");
    assert!(lines[1].starts_with("1,k,"));
    assert!(lines[100].starts_with("50,b,"));

    // Same seed: identical bytes. Different seed: different estimates.
    let again = run(&[&args[..], &[path]].concat(), None);
    assert_eq!(output.stdout, again.stdout);
    let mut other_args = args;
    other_args[10] = "99";
    let other = run(&[&other_args[..], &[path]].concat(), None);
    assert!(other.status.success());
    assert_ne!(output.stdout, other.stdout);
}

#[test]
fn summarize_computes_grouped_quantiles_from_stdin() {
    let input = "term,estimate\nk,1\nk,2\nk,3\nb,10\nb,30\n";
    let output = run(
        &[
            "summarize",
            "--group-by",
            "term",
            "--spec",
            "conf.low=quantile(estimate,0)",
            "--spec",
            "med=median(estimate)",
            "--spec",
            "n=count(estimate)",
        ],
        Some(input),
    );
    assert!(output.status.success(), "{}", stderr_of(&output));
    let text = stdout_of(&output);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "term,conf.low,med,n");
    // Groups sort lexicographically: b before k. p = 0 is the group minimum.
    assert_eq!(lines[1], "b,1.0000000000000000e1,2.0000000000000000e1,2");
    assert_eq!(lines[2], "k,1.0000000000000000e0,2.0000000000000000e0,3");
}

#[test]
fn inflate_reproduces_the_factorial_table() {
    let input = "a,b\n1,8\n2,9\n3,10\n";
    let output = run(
        &["inflate", "--grid", "x=apple,orange", "--grid", "y=boat,car"],
        Some(input),
    );
    assert!(output.status.success(), "{}", stderr_of(&output));
    let expected = "\
x,y,a,b
apple,boat,1,8
apple,boat,2,9
apple,boat,3,10
apple,car,1,8
apple,car,2,9
apple,car,3,10
orange,boat,1,8
orange,boat,2,9
orange,boat,3,10
orange,car,1,8
orange,car,2,9
orange,car,3,10
";
    assert_eq!(stdout_of(&output), expected);
}

#[test]
fn jsonl_format_emits_parseable_objects() {
    let file = mtcars_file();
    let output = run(
        &[
            "fit",
            "--model",
            "lm",
            "--formula",
            "mpg ~ wt + qsec",
            "--format",
            "jsonl",
            "--rownames",
            "model",
            file.path().to_str().unwrap(),
        ],
        None,
    );
    assert!(output.status.success(), "{}", stderr_of(&output));
    let text = stdout_of(&output);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    let first: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
    assert_eq!(first["term"], "(Intercept)");
    assert!((first["estimate"].as_f64().unwrap() - 19.746223).abs() < 1e-5);
}

#[test]
fn kmeans_fit_selects_feature_columns() {
    let input = "label,x1,x2\na,0,0\na,0.1,0\nb,10,10\nb,10,9.9\n";
    let output = run(
        &[
            "fit", "--model", "kmeans", "--k", "2", "--nstart", "3", "--columns", "x1,x2",
            "--output", "tidy", "--seed", "7",
        ],
        Some(input),
    );
    assert!(output.status.success(), "{}", stderr_of(&output));
    let text = stdout_of(&output);
    assert!(text.starts_with("x1,x2,size,withinss,cluster\n"));
    assert_eq!(text.lines().count(), 3);

    let output = run(
        &[
            "fit", "--model", "kmeans", "--k", "2", "--output", "augment", "--seed", "7",
        ],
        Some(input),
    );
    assert!(output.status.success(), "{}", stderr_of(&output));
    assert!(stdout_of(&output).starts_with("label,x1,x2,.cluster\n"));
}

#[test]
fn usage_and_schema_errors_exit_2() {
    let output = run(&["fit", "--model", "lm"], Some(""));
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_of(&output).contains("--formula"));

    let file = mtcars_file();
    let output = run(
        &[
            "fit",
            "--model",
            "lm",
            "--formula",
            "mpg ~ wt",
            "--group-by",
            "nope",
            file.path().to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_of(&output).contains("nope"));

    // Unknown flags are clap usage errors, also exit 2.
    let output = run(&["fit", "--model", "lm", "--bogus"], Some(""));
    assert_eq!(output.status.code(), Some(2));

    let output = run(
        &["fit", "--model", "spearman", "--x", "a", "--y", "b", "--output", "glance"],
        Some(""),
    );
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn fit_errors_exit_3_and_name_the_group() {
    let file = mtcars_file();
    let output = run(
        &[
            "fit",
            "--model",
            "lm",
            "--formula",
            "mpg ~ wt + wt",
            file.path().to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(output.status.code(), Some(3));
    assert!(stderr_of(&output).contains("singular design"));

    // carb has single-row groups: too few observations for three terms.
    let output = run(
        &[
            "fit",
            "--model",
            "lm",
            "--formula",
            "mpg ~ wt + qsec",
            "--group-by",
            "carb",
            file.path().to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(output.status.code(), Some(3));
    assert!(stderr_of(&output).contains("carb="), "{}", stderr_of(&output));
}

#[test]
fn stdin_dash_and_thread_cap_work() {
    let output = {
        let mut cmd = binary();
        cmd.args([
            "fit",
            "--model",
            "lm",
            "--formula",
            "mpg ~ wt + qsec",
            "--group-by",
            "am",
            "--input",
            "-",
        ])
        .env("TIDYFIT_THREADS", "1")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
        let mut child = cmd.spawn().unwrap();
        child
            .stdin
            .as_mut()
            .unwrap()
            .write_all(MTCARS_CSV.as_bytes())
            .unwrap();
        child.wait_with_output().unwrap()
    };
    assert!(output.status.success(), "{}", stderr_of(&output));
    assert_eq!(stdout_of(&output).lines().count(), 7);

    // Giving the input twice is ambiguous.
    let file = mtcars_file();
    let output = run(
        &[
            "fit",
            "--model",
            "lm",
            "--formula",
            "mpg ~ wt",
            "--input",
            "-",
            file.path().to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(output.status.code(), Some(2));
}
