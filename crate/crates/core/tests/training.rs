use lendrisk_core::grid::{alpha_grid, compare_objectives, grid_search, linear_grid, Labeled, Objective};
use lendrisk_core::linear::{ClassWeighting, LinearKind, Penalty, TrainConfig};
use lendrisk_core::math::sigmoid;
use lendrisk_core::neural::{mlp_predict, train_mlp};
use lendrisk_core::preprocess::{time_split, PreprocessState, SplitSpec};
use lendrisk_core::rng::keyed_uniform;
use lendrisk_core::{CategoricalColumn, Matrix, NumericColumn, SampleSet, YearMonth};

fn uniform(parts: &[u64]) -> f64 {
    2.0 * keyed_uniform(parts) - 1.0
}

/// Labels drawn from a logistic rule whose intercept is zero, so the classes are balanced.
fn balanced(seed: u64, stream: u64, n: usize) -> Labeled {
    let rows: Vec<Vec<f64>> = (0..n).map(|i| (0..4).map(|j| 2.0 * uniform(&[seed, stream, i as u64, j])).collect()).collect();
    let y = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let z = 1.5 * r[0] - r[1] + 0.5 * r[2];
            u8::from(sigmoid(z) > keyed_uniform(&[seed, stream, i as u64, 99]))
        })
        .collect();
    Labeled::new(Matrix::from_rows(&rows).unwrap(), y).unwrap()
}

/// AUC ignores weight scale, so an over-shrunk cell can edge out the best one on
/// AUC alone. The gap is averaged over seeds and each seed's gap is printed.
#[test]
fn objectives_agree_on_balanced_data() {
    let grid = linear_grid(LinearKind::Logistic, &[Penalty::L2], &alpha_grid(-5, 5));
    let mut gaps = Vec::new();
    for seed in 0..10 {
        let fit = balanced(seed, 0, 2000);
        let validation = balanced(seed, 1, 500);
        let positives = fit.y.iter().filter(|&&l| l == 1).count();
        assert!((900..=1100).contains(&positives), "seed {seed}: {positives} positives");
        let config = TrainConfig { learning_rate: 0.1, batch_size: 64, max_epochs: 40, seed, ..TrainConfig::default() };
        let cmp = compare_objectives(&grid, &config, &fit, &validation).unwrap();
        println!(
            "seed {seed}: recall-macro picks {} ({:.3}), AUC picks {} ({:.3})",
            cmp.recall_macro.hyperparams.label(),
            cmp.recall_macro.validation.recall_macro,
            cmp.auc.hyperparams.label(),
            cmp.auc.validation.recall_macro,
        );
        gaps.push(cmp.recall_macro_gap());
    }
    let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
    assert!(mean < 0.05, "mean recall-macro gap {mean:.4}, per seed {gaps:.4?}");
}

#[test]
fn two_hidden_layers_learn_xor() {
    // Keep points off the axes so the sign pattern is unambiguous.
    let mut rows = Vec::new();
    for i in 0..400u64 {
        let a = 0.1 + 0.9 * keyed_uniform(&[5, i, 0]);
        let b = 0.1 + 0.9 * keyed_uniform(&[5, i, 1]);
        let (sa, sb) = (if i % 2 == 0 { 1.0 } else { -1.0 }, if (i / 2) % 2 == 0 { 1.0 } else { -1.0 });
        rows.push(vec![sa * a, sb * b]);
    }
    let y: Vec<u8> = rows.iter().map(|r| u8::from(r[0] * r[1] > 0.0)).collect();
    let x = Matrix::from_rows(&rows).unwrap();
    let config = TrainConfig {
        learning_rate: 0.2,
        batch_size: 16,
        max_epochs: 500,
        patience: 0,
        seed: 1,
        class_weighting: ClassWeighting::None,
    };
    let (params, _) = train_mlp(&[5, 3], 0.0, 0.0, &x, &y, &config, &x, &y).unwrap();
    assert_eq!(params.layer_sizes, [2, 5, 3, 1]);
    let p = mlp_predict(&params, &x).unwrap();
    let correct = p.iter().zip(&y).filter(|(s, &l)| u8::from(**s >= 0.5) == l).count();
    assert!(correct as f64 / y.len() as f64 >= 0.95, "{correct}/{}", y.len());
}

#[test]
fn sample_set_to_test_scores() {
    let n = 3000;
    let months: Vec<YearMonth> = (0..n).map(|i| YearMonth::new(2012, 1).unwrap().add_months((i / 100) as i32)).collect();
    let income: Vec<Option<f64>> =
        (0..n).map(|i| if i % 17 == 0 { None } else { Some(50_000.0 + 20_000.0 * uniform(&[2, i as u64, 0])) }).collect();
    let dti: Vec<Option<f64>> = (0..n).map(|i| Some(20.0 + 10.0 * uniform(&[2, i as u64, 1]))).collect();
    let purpose: Vec<Option<String>> =
        (0..n).map(|i| Some(["car", "house", "debt_consolidation"][i % 3].to_string())).collect();
    let labels: Vec<u8> = (0..n)
        .map(|i| {
            let inc = income[i].map_or(0.0, |v| (v - 50_000.0) / 20_000.0);
            let d = (dti[i].unwrap() - 20.0) / 10.0;
            let bump = if i % 3 == 2 { 1.0 } else { 0.0 };
            u8::from(sigmoid(-2.0 * inc + 2.0 * d + bump - 0.5) > keyed_uniform(&[2, i as u64, 9]))
        })
        .collect();
    let set = SampleSet::new(
        vec![NumericColumn::new("income", income), NumericColumn::new("dti", dti)],
        vec![CategoricalColumn::new("purpose", purpose)],
        months,
        labels,
    )
    .unwrap();

    let (train, test) = time_split(&set, &SplitSpec::new(0.8)).unwrap();
    assert!(train.dates().iter().max() <= test.dates().iter().min());
    let (fit, validation) = time_split(&train, &SplitSpec::new(0.8)).unwrap();
    let state = PreprocessState::fit(&fit).unwrap();
    assert_eq!(state.width(), 5);
    let to_labeled = |s: &SampleSet| {
        let (x, y) = state.apply(s).unwrap();
        Labeled::new(x, y).unwrap()
    };
    let (fit, validation, test) = (to_labeled(&fit), to_labeled(&validation), to_labeled(&test));
    assert!(fit.x.is_finite() && test.x.is_finite());

    let grid = linear_grid(LinearKind::Logistic, &[Penalty::L1, Penalty::L2], &alpha_grid(-4, 1));
    let config = TrainConfig { learning_rate: 0.1, batch_size: 64, max_epochs: 30, ..TrainConfig::default() };
    let (result, model) = grid_search(&grid, &config, &fit, &validation, Some(&test), Objective::Auc).unwrap();
    assert_eq!(result.cells.len(), 12);
    let t = result.test.unwrap();
    assert_eq!(t.n_rows, test.y.len());
    assert!(t.auc > 0.8, "test AUC {}", t.auc);
    assert_eq!(model.evaluate(&test).unwrap().auc, t.auc);
}

