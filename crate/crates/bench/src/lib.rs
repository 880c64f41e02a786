//! Shared data builders for the benchmark targets.

use tidyfit_core::kmeans::simulation_centers;
use tidyfit_core::prelude::*;

/// The linear fixture formula, parsed once.
pub fn mpg_on_wt_qsec() -> LinearFormula {
    match parse_formula("mpg ~ wt + qsec", None).unwrap() {
        Formula::Linear(f) => f,
        _ => unreachable!(),
    }
}

/// The reciprocal nls fixture formula with its start values.
pub fn reciprocal_mpg() -> NlsFormula {
    let start = vec![("k".to_string(), 1.0), ("b".to_string(), 0.0)];
    match parse_formula("mpg ~ k / wt + b", Some(&start)).unwrap() {
        Formula::Nls(f) => f,
        _ => unreachable!(),
    }
}

/// A 300-point, three-cluster sample at unit noise.
pub fn mixture_sample(seed: u64) -> (Frame, Matrix) {
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
    let frame = sample_mixture(&simulation_centers(), 1.0, &["x1", "x2"], &mut rng).unwrap();
    let matrix = frame.numeric_matrix(&["x1", "x2"]).unwrap();
    (frame, matrix)
}

/// A synthetic regression table with `n` rows and `p` predictors.
pub fn synthetic_regression(n: usize, p: usize, seed: u64) -> Frame {
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
    let mut columns: Vec<Column> = (0..p)
        .map(|j| {
            Column::float(
                format!("x{j}"),
                (0..n).map(|_| rng.standard_normal_pair().0).collect(),
            )
        })
        .collect();
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let signal: f64 = columns
                .iter()
                .enumerate()
                .map(|(j, c)| (j + 1) as f64 * c.value(i).as_f64().unwrap())
                .sum();
            signal + rng.standard_normal_pair().0
        })
        .collect();
    columns.push(Column::float("y", y));
    Frame::new(columns).unwrap()
}
