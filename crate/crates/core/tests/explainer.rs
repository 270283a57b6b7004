use proptest::prelude::*;

use shapfold::dataset::{Dataset, Example, Item, Label};
use shapfold::explain::{
    explain_dataset, sample_background, shapley_exact, shapley_sampled, ExplainConfig, ShapMode,
};
use shapfold::model::{train, BoostConfig, TreeEnsemble};

/// Rows over `features` three-valued features, labelled by a noisy rule
/// on the first two.
fn dataset(features: usize, rows: &[(Vec<usize>, bool)]) -> Dataset {
    let items = (0..features)
        .flat_map(|f| (0..3).map(move |v| Item::present(format!("f{f}"), format!("v{v}"))))
        .collect();
    let examples = rows
        .iter()
        .enumerate()
        .map(|(id, (values, noise))| {
            let mut bits = vec![false; features * 3];
            for (f, &v) in values.iter().enumerate() {
                bits[f * 3 + v] = true;
            }
            let rule = values[0] == 0 || (features > 1 && values[1] == 2);
            Example {
                id,
                label: if rule ^ noise {
                    Label::Positive
                } else {
                    Label::Negative
                },
                bits,
            }
        })
        .collect();
    Dataset { items, examples }
}

fn rows(features: usize) -> impl Strategy<Value = Vec<(Vec<usize>, bool)>> {
    prop::collection::vec(
        (
            prop::collection::vec(0usize..3, features),
            prop::bool::weighted(0.1),
        ),
        20..60,
    )
}

fn small_model(ds: &Dataset, seed: u64) -> TreeEnsemble {
    let config = BoostConfig {
        rounds: 8,
        max_depth: 3,
        seed,
        ..BoostConfig::default()
    };
    train(ds, &config).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tree_explainer_matches_enumeration(rows in rows(3), seed in 0u64..1000) {
        let ds = dataset(3, &rows);
        let model = small_model(&ds, seed);
        let config = ExplainConfig { background_size: 16, seed, ..ExplainConfig::default() };
        let shap = explain_dataset(&model, &ds, &ds, &config).unwrap();
        prop_assert_eq!(shap.mode, ShapMode::Exact);

        let background = sample_background(&ds, 16, seed);
        let players: Vec<usize> = (0..ds.item_count()).collect();
        for (e, row) in ds.examples.iter().zip(&shap.attributions).take(5) {
            let want = shapley_exact(|b: &[bool]| model.margin(b), &e.bits, &background, &players).unwrap();
            for (a, b) in row.iter().zip(&want) {
                prop_assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
            }
            let total = row.iter().sum::<f64>() + shap.base_value;
            prop_assert!((total - model.margin(&e.bits)).abs() <= 1e-9);
        }
    }
}

#[test]
fn sampled_error_shrinks_with_more_permutations() {
    let raw: Vec<(Vec<usize>, bool)> = (0..80)
        .map(|i| {
            (
                (0..4).map(|f| (i * (f + 7) + i / 3) % 3).collect(),
                i % 11 == 0,
            )
        })
        .collect();
    let ds = dataset(4, &raw);
    let model = small_model(&ds, 3);
    let background = sample_background(&ds, 24, 3);
    let players: Vec<usize> = model.used_items().into_iter().collect();
    assert!(players.len() >= 3);
    let oracle = |b: &[bool]| model.margin(b);

    let mut deviation = Vec::new();
    for m in [64, 512, 4096] {
        let mut total = 0.0;
        let mut count = 0.0;
        for e in ds.examples.iter().take(4) {
            let exact = shapley_exact(oracle, &e.bits, &background, &players).unwrap();
            for seed in 0..10 {
                let est = shapley_sampled(oracle, &e.bits, &background, &players, m, seed).unwrap();
                let err = est
                    .values
                    .iter()
                    .zip(&exact)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                total += err;
                count += 1.0;
            }
        }
        deviation.push(total / count);
    }
    assert!(
        deviation[0] > deviation[1] && deviation[1] > deviation[2],
        "{deviation:?}"
    );
    assert!(deviation[2] < 0.05, "{deviation:?}");
}

#[test]
fn sampled_mode_is_seeded() {
    let raw: Vec<(Vec<usize>, bool)> = (0..40)
        .map(|i| ((0..3).map(|f| (i + f * i / 2) % 3).collect(), false))
        .collect();
    let ds = dataset(3, &raw);
    let model = small_model(&ds, 1);
    let config = ExplainConfig {
        exact_cap: 0,
        permutations: 64,
        background_size: 8,
        seed: 9,
    };
    let a = explain_dataset(&model, &ds, &ds, &config).unwrap();
    let b = explain_dataset(&model, &ds, &ds, &config).unwrap();
    assert_eq!(a, b);
    assert!(matches!(
        a.mode,
        ShapMode::Sampled {
            permutations: 64,
            seed: 9
        }
    ));
    for (e, row) in ds.examples.iter().zip(&a.attributions) {
        let total = row.iter().sum::<f64>() + a.base_value;
        assert!((total - model.margin(&e.bits)).abs() <= 1e-9);
    }
}
