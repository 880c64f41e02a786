//! End-to-end pipeline shapes: grouped tidying, bootstrap prediction bands,
//! and the inflate-cluster-recombine workflow.

use tidyfit_core::fixtures::mtcars;
use tidyfit_core::prelude::*;

fn nls_formula(text: &str, start: &[(&str, f64)]) -> NlsFormula {
    let start: Vec<(String, f64)> = start.iter().map(|(n, v)| (n.to_string(), *v)).collect();
    match parse_formula(text, Some(&start)).unwrap() {
        Formula::Nls(f) => f,
        _ => unreachable!(),
    }
}

#[test]
fn bootstrap_augment_aggregate_gives_per_x_bands() {
    let data = mtcars();
    let formula = nls_formula("mpg ~ k / wt + b", &[("k", 1.0), ("b", 0.0)]);

    let augmented = data
        .bootstrap_replicates(200, 2014)
        .unwrap()
        .apply_combine(|sub| {
            let fit = fit_nls(&formula, sub, &NlsControls::default())?;
            augment_nls(&fit, sub)
        })
        .unwrap();
    assert_eq!(augmented.n_rows(), 200 * 32);
    assert!(augmented.has_column("replicate"));
    assert!(augmented.has_column(".fitted"));

    let bands = augmented
        .group_by(&["wt"])
        .unwrap()
        .aggregate(&[
            AggregateSpec::new("conf.low", ".fitted", Reducer::Quantile(0.025)),
            AggregateSpec::new("conf.high", ".fitted", Reducer::Quantile(0.975)),
            AggregateSpec::new("median", ".fitted", Reducer::Median),
        ])
        .unwrap();
    assert_eq!(
        bands.column_names(),
        vec!["wt", "conf.low", "conf.high", "median"]
    );
    // 29 distinct weights in the fixture (3.44 appears thrice, 3.57 twice).
    assert_eq!(bands.n_rows(), 29);

    let wt = bands.column("wt").unwrap().to_f64_vec().unwrap();
    assert!(wt.windows(2).all(|w| w[0] < w[1]), "groups sorted by key");
    assert!((wt[0] - 1.513).abs() < 1e-12);

    let low = bands.column("conf.low").unwrap().to_f64_vec().unwrap();
    let mid = bands.column("median").unwrap().to_f64_vec().unwrap();
    let high = bands.column("conf.high").unwrap().to_f64_vec().unwrap();
    for i in 0..bands.n_rows() {
        assert!(low[i] <= mid[i] && mid[i] <= high[i]);
    }
    // The fitted curve falls with weight; so should the band.
    assert!(mid[0] > mid[bands.n_rows() - 1]);
}

#[test]
fn inflate_cluster_and_recombine_at_three_levels() {
    let mut rng = Xoshiro256StarStar::seed_from_u64(2014);
    let sample = sample_mixture(
        &tidyfit_core::kmeans::simulation_centers(),
        1.0,
        &["x1", "x2"],
        &mut rng,
    )
    .unwrap();

    let grid = vec![("k".to_string(), (1..=9i64).map(Value::Int).collect())];
    let grouped = sample.inflate(&grid).unwrap();
    assert_eq!(grouped.base().n_rows(), 9 * 300);
    assert_eq!(grouped.n_groups(), 9);

    let fit_group = |key: &[Value], sub: &Frame| -> Result<KmeansFit> {
        let k = match key[0] {
            Value::Int(k) => k as usize,
            _ => unreachable!(),
        };
        let x = sub.numeric_matrix(&["x1", "x2"])?;
        fit_kmeans(&x, k, 5, 100, 42 + k as u64)
    };

    let clusters = grouped
        .apply_combine_indexed(|_, key, sub| {
            tidy_kmeans(&fit_group(key, sub)?, &["x1", "x2"])
        })
        .unwrap();
    assert_eq!(
        clusters.column_names(),
        vec!["k", "x1", "x2", "size", "withinss", "cluster"]
    );
    assert_eq!(clusters.n_rows(), (1..=9).sum::<i64>() as usize);

    let assignments = grouped
        .apply_combine_indexed(|_, key, sub| augment_kmeans(&fit_group(key, sub)?, sub))
        .unwrap();
    assert_eq!(
        assignments.column_names(),
        vec!["k", "oracle", "x1", "x2", ".cluster"]
    );
    assert_eq!(assignments.n_rows(), 9 * 300);

    let clusterings = grouped
        .apply_combine_indexed(|_, key, sub| glance_kmeans(&fit_group(key, sub)?))
        .unwrap();
    assert_eq!(
        clusterings.column_names(),
        vec!["k", "totss", "tot.withinss", "betweenss", "iter"]
    );
    assert_eq!(clusterings.n_rows(), 9);

    // Within-cluster variation shrinks as k grows.
    let within = clusterings
        .column("tot.withinss")
        .unwrap()
        .to_f64_vec()
        .unwrap();
    for w in within.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-9), "{} then {}", w[0], w[1]);
    }
}

#[test]
fn grouped_correlation_tests_recombine() {
    let data = mtcars();
    let tidy = data
        .group_by(&["cyl"])
        .unwrap()
        .apply_combine(|sub| {
            let x = sub.column("hp").unwrap().to_f64_vec()?;
            let y = sub.column("mpg").unwrap().to_f64_vec()?;
            tidy_htest(&spearman_test(&x, &y)?)
        })
        .unwrap();
    assert_eq!(
        tidy.column_names(),
        vec!["cyl", "estimate", "statistic", "p.value", "method"]
    );
    assert_eq!(tidy.n_rows(), 3);
    let estimate = tidy.column("estimate").unwrap().to_f64_vec().unwrap();
    assert!(estimate.iter().all(|e| (-1.0..=1.0).contains(e)));
}

#[test]
fn grouped_fit_failure_names_the_group() {
    // One group has too few rows to fit three coefficients.
    let data = mtcars();
    let formula = match parse_formula("mpg ~ wt + qsec", None).unwrap() {
        Formula::Linear(f) => f,
        _ => unreachable!(),
    };
    let err = data
        .group_by(&["carb"])
        .unwrap()
        .apply_combine(|sub| tidy_lm(&fit_lm(&formula, sub)?, None))
        .unwrap_err();
    match &err {
        Error::GroupFailed { group, source } => {
            assert!(group.starts_with("carb="), "group {group}");
            assert!(source.is_fit_error());
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn jsonl_and_csv_agree_on_tidy_output() {
    let data = mtcars();
    let formula = match parse_formula("mpg ~ wt + qsec", None).unwrap() {
        Formula::Linear(f) => f,
        _ => unreachable!(),
    };
    let tidy = tidy_lm(&fit_lm(&formula, &data).unwrap(), None).unwrap();

    let csv_text = String::from_utf8(tidy.to_csv(false)).unwrap();
    assert!(csv_text.starts_with("term,estimate,std.error,statistic,p.value\n"));

    let jsonl = String::from_utf8(tidy.to_jsonl()).unwrap();
    let first: serde_json::Value = serde_json::from_str(jsonl.lines().next().unwrap()).unwrap();
    assert_eq!(first["term"], "(Intercept)");
    let estimate = first["estimate"].as_f64().unwrap();
    assert!((estimate - 19.746223).abs() < 1e-5);
}
