use afford_core::classifier::{cross_validate, evaluate};
use afford_core::data::{make_synthetic, split, standardize, SyntheticSpec};
use afford_core::optimizer::{train, TrainConfig};

#[test]
fn cv_choice_is_close_to_the_best_grid_point_on_test_data() {
    let (ds, _) = make_synthetic(&SyntheticSpec {
        n_per_class: [60, 60],
        dims: 20,
        informative_dims: vec![2, 9],
        class_separation: 2.5,
        noise_std: 1.0,
        seed: 3,
    })
    .unwrap();
    let (tr, te) = split(&ds, 0, 0.7, 3).unwrap();
    let (trs, params) = standardize(&tr).unwrap();
    let tes = te.standardized_with(&params).unwrap();
    let labels = tes.binary_labels(0);
    let grid: Vec<TrainConfig> = [0.0, 10.0, 100.0, 1e3]
        .iter()
        .map(|&lambda| TrainConfig { lambda, ..TrainConfig::default() })
        .collect();
    let test_f1: Vec<f64> = grid
        .iter()
        .map(|cfg| evaluate(&train(&trs, 0, cfg).unwrap(), tes.features.view(), &labels).unwrap().f1)
        .collect();
    let cv = cross_validate(&trs, 0, &grid, 5, 3).unwrap();
    let best = test_f1.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert!(best - test_f1[cv.best_index] <= 0.05, "{test_f1:?} chose {}", cv.best_index);
}
