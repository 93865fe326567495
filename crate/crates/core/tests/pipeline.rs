use nbcs::learner::{
    fit_adaptive_with, fit_uniform, generate_polytope_dataset, generate_xor, FitParams, LabeledDataset,
};
use nbcs::model::{model_from_str, model_to_string};

#[test]
fn uniform_q2_on_spread_data_has_nine_leaves() {
    let data = generate_xor(100, 0.3, 3);
    let model = fit_uniform(&data, 2, 8.0).unwrap();
    assert_eq!(model.leaf_count(), 9);
    assert_eq!(model.system.vertex_count(), 3 + 1 + 3);
}

#[test]
fn uniform_skips_empty_cells() {
    let points = vec![vec![0.0, 0.0], vec![0.01, 0.0], vec![0.0, 0.01], vec![0.01, 0.01]];
    let data = LabeledDataset::new(points, vec![1, -1, 1, -1]).unwrap();
    let model = fit_uniform(&data, 3, 1.0).unwrap();
    assert!(model.leaf_count() < 3usize.pow(3));
}

#[test]
fn warm_starts_never_raise_the_objective() {
    let data = generate_polytope_dataset(1500, 2, 5, 0.0, 8).unwrap().data;
    let model = fit_adaptive_with(&data, &FitParams { q: 4, c: 16.0, ..FitParams::default() }).unwrap();
    assert!(model.history.len() >= 2);
    for stage in &model.history[1..] {
        let lifted = stage.lifted_objective.expect("later stages start from lifted weights");
        assert!(stage.trained_objective <= lifted + 1e-6, "{stage:?}");
    }
}

#[test]
fn adaptive_on_separable_data_stops_without_splitting() {
    let points: Vec<Vec<f64>> = (0..40).map(|i| vec![(i % 10) as f64, (i / 10) as f64]).collect();
    let labels = points.iter().map(|p| if p[0] < 4.5 { -1 } else { 1 }).collect();
    let data = LabeledDataset::new(points, labels).unwrap();
    let model = fit_adaptive_with(&data, &FitParams { q: 3, c: 1024.0, ..FitParams::default() }).unwrap();
    assert_eq!(model.accuracy(&data), 1.0);
    assert_eq!(model.data_splits, 0);
    assert_eq!(model.leaf_count(), 1);
}

#[test]
fn predictions_are_deterministic_and_survive_serialization() {
    let data = generate_polytope_dataset(800, 3, 6, 0.02, 2).unwrap().data;
    let params = FitParams { q: 3, c: 32.0, seed: 11, ..FitParams::default() };
    let a = fit_adaptive_with(&data, &params).unwrap();
    let b = fit_adaptive_with(&data, &params).unwrap();
    assert_eq!(model_to_string(&a), model_to_string(&b));
    let back = model_from_str(&model_to_string(&a)).unwrap();
    for x in &data.points {
        assert_eq!(a.predict(x), back.predict(x));
    }
    // inputs far outside the training range are clamped, not rejected
    let far = vec![1e6, -1e6, 3.0];
    assert_eq!(a.predict(&far), back.predict(&far));
}

#[test]
fn multiclass_uses_one_head_per_class() {
    let mut data = generate_xor(30, 0.2, 4);
    for (p, l) in data.points.iter().zip(data.labels.iter_mut()) {
        *l = match (p[0] > 0.0, p[1] > 0.0) {
            (true, true) => 0,
            (false, true) => 1,
            (false, false) => 2,
            (true, false) => 3,
        };
    }
    let model = fit_uniform(&data, 2, 64.0).unwrap();
    assert_eq!(model.heads.len(), 4);
    assert!(model.accuracy(&data) > 0.95);
}
