mod common;

use splate_core::head::{Activation, AdapterHead};
use splate_core::late_interaction::DenseDocStore;
use splate_core::trainer::{build_training_set, train, TrainConfig, Trainer, TrainingData};

#[test]
fn analytic_gradients_match_finite_differences() {
    for seed in 1..=4 {
        for act in [Activation::Relu, Activation::Tanh] {
            let errors = common::gradient_check(seed, act);
            for (name, e) in common::BLOCK_NAMES.iter().zip(errors) {
                assert!(e < 1e-4, "seed {seed} {act:?} {name}: relative error {e:e}");
            }
        }
    }
}

#[test]
fn updates_leave_the_projection_untouched() {
    let (corpus, stores) = common::small_world(5);
    let head0 = AdapterHead::new(stores.encoder.projection().clone(), Activation::Relu, 5).unwrap();
    let dense = DenseDocStore::new(&stores.docs).unwrap();
    let config = TrainConfig {
        batch_size: 8,
        pool_size: 30,
        n_neg: 5,
        ..TrainConfig::default()
    };
    let examples = build_training_set(
        &corpus.train_pairs(),
        &stores.train_queries,
        &dense,
        &config,
    )
    .unwrap();
    let data = TrainingData {
        queries: &stores.train_queries,
        docs: &stores.docs,
    };
    let mut head = head0.clone();
    let mut trainer = Trainer::new(&head, config).unwrap();
    trainer.train_step(&mut head, &examples[..8], data).unwrap();
    assert_ne!(head, head0);
    let bits = |h: &AdapterHead| {
        h.projection()
            .as_slice()
            .iter()
            .map(|x| x.to_bits())
            .collect::<Vec<_>>()
    };
    assert_eq!(bits(&head), bits(&head0));
}

#[test]
fn epoch_loss_decreases() {
    let (corpus, stores) = common::small_world(6);
    let mut head =
        AdapterHead::new(stores.encoder.projection().clone(), Activation::Relu, 6).unwrap();
    let dense = DenseDocStore::new(&stores.docs).unwrap();
    let config = TrainConfig {
        batch_size: 8,
        pool_size: 30,
        n_neg: 5,
        epochs: 4,
        ..TrainConfig::default()
    };
    let examples = build_training_set(
        &corpus.train_pairs(),
        &stores.train_queries,
        &dense,
        &config,
    )
    .unwrap();
    let data = TrainingData {
        queries: &stores.train_queries,
        docs: &stores.docs,
    };
    let report = train(&mut head, &examples, data, &config, None).unwrap();
    let l = &report.epoch_losses;
    let rises = l.windows(2).filter(|w| w[1] >= w[0]).count();
    assert!(rises <= 1, "{l:?}");
    assert!(l.last().unwrap() < &l[0], "{l:?}");
}
