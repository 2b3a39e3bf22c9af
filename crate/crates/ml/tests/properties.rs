//! Randomized property checks for the numeric stack.

use gqlcost_ml::{
    cross_validate, FittedOperator, Mat64, OperatorSpec, PipelineSpec, CV_FOLDS,
};
use proptest::prelude::*;

fn small_matrix() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2usize..20, 1usize..4).prop_flat_map(|(rows, cols)| {
        proptest::collection::vec(
            proptest::collection::vec(-100.0f64..100.0, cols..=cols),
            rows..=rows,
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn scaler_output_has_zero_mean_unit_std(rows in small_matrix()) {
        let x = Mat64::from_rows(rows.clone()).unwrap();
        let y = vec![0.0; rows.len()];
        let op = FittedOperator::fit(&OperatorSpec::StandardScaler, &x, &y).unwrap();
        let t = op.transform(&x).unwrap();
        let n = rows.len() as f64;
        for j in 0..x.n_cols() {
            let col = t.column(j);
            let mean: f64 = col.iter().sum::<f64>() / n;
            prop_assert!(mean.abs() < 1e-9, "col {} mean {}", j, mean);
            let var: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let raw = x.column(j);
            let constant = raw.iter().all(|&v| v == raw[0]);
            if constant {
                prop_assert!(col.iter().all(|&v| v.abs() < 1e-9));
            } else {
                prop_assert!((var.sqrt() - 1.0).abs() < 1e-7, "col {} std {}", j, var.sqrt());
            }
        }
    }

    #[test]
    fn linear_regression_recovers_random_lines(
        slope in -50.0f64..50.0,
        intercept in -50.0f64..50.0,
    ) {
        let rows: Vec<Vec<f64>> = (0..25).map(|i| vec![i as f64 / 3.0]).collect();
        let y: Vec<f64> = rows.iter().map(|r| slope * r[0] + intercept).collect();
        let x = Mat64::from_rows(rows).unwrap();
        let op = FittedOperator::fit(&OperatorSpec::LinearRegression, &x, &y).unwrap();
        let preds = op.predict(&x).unwrap();
        for (p, t) in preds.iter().zip(&y) {
            prop_assert!((p - t).abs() < 1e-7, "{} vs {}", p, t);
        }
    }

    #[test]
    fn forest_predictions_are_seed_deterministic(seed in any::<u64>()) {
        let rows: Vec<Vec<f64>> = (0..25).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = rows.iter().map(|r| r[0] * 1.5).collect();
        let x = Mat64::from_rows(rows).unwrap();
        let spec = OperatorSpec::RandomForest {
            n_trees: 3,
            max_depth: Some(3),
            min_leaf: 1,
            seed,
        };
        let a = FittedOperator::fit(&spec, &x, &y).unwrap();
        let b = FittedOperator::fit(&spec, &x, &y).unwrap();
        prop_assert_eq!(a.predict(&x).unwrap(), b.predict(&x).unwrap());
    }

    #[test]
    fn cv_score_is_seed_deterministic(seed in any::<u64>()) {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, (i % 3) as f64]).collect();
        let y: Vec<f64> = rows.iter().map(|r| r[0] + 2.0 * r[1]).collect();
        let x = Mat64::from_rows(rows).unwrap();
        let spec = PipelineSpec::new(OperatorSpec::NoOp, OperatorSpec::knn());
        let a = cross_validate(&spec, &x, &y, CV_FOLDS, seed).unwrap();
        let b = cross_validate(&spec, &x, &y, CV_FOLDS, seed).unwrap();
        prop_assert_eq!(a, b);
    }
}
