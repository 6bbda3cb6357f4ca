//! Run-to-convergence oracle on a synthetic dataset whose last four features
//! are affine in the first three, plus determinism checks at the training
//! level.

use aeimpute_core::net::{train, TrainConfig};
use aeimpute_core::synth::correlated_dataset;

fn efficacy_config(seed: u64) -> TrainConfig {
    TrainConfig {
        hidden_sizes: vec![5, 3],
        learning_rate: 1.0,
        epochs: 200,
        batch_size: 8,
        init_scale: Some(1.0),
        seed,
        ..TrainConfig::default()
    }
}

#[test]
fn training_cuts_the_epoch_mean_loss_to_a_tenth() {
    let start = std::time::Instant::now();
    let data = correlated_dataset(500, 0.01, 2024);
    let (_, history) = train(&data, &efficacy_config(7), false).unwrap();
    assert_eq!(history.len(), 200);
    let first = history[0];
    let last = *history.last().unwrap();
    assert!(
        last <= 0.1 * first,
        "loss only fell from {first} to {last}"
    );
    assert!(start.elapsed().as_secs() < 60);
}

#[test]
fn denoising_training_also_converges() {
    let data = correlated_dataset(500, 0.01, 2024);
    let cfg = TrainConfig {
        corruption: 0.1,
        ..efficacy_config(7)
    };
    let (_, history) = train(&data, &cfg, true).unwrap();
    let first = history[0];
    let last = *history.last().unwrap();
    // Masking noise puts a floor under the corrupted-input objective (a
    // zeroed input is indistinguishable from a true zero), so the plain
    // ten-percent bar does not apply. Landing well below the 0.32
    // mean-prediction plateau still shows real optimization.
    assert!(last < 0.5 * first, "loss only fell from {first} to {last}");
    assert!(last < 0.15, "denoising loss stuck at {last}");
}

#[test]
fn identical_seeds_reproduce_the_loss_history_bitwise() {
    let data = correlated_dataset(200, 0.01, 11);
    let (net_a, hist_a) = train(&data, &efficacy_config(3), false).unwrap();
    let (net_b, hist_b) = train(&data, &efficacy_config(3), false).unwrap();
    assert_eq!(hist_a, hist_b);
    assert_eq!(net_a, net_b);
    let (_, hist_c) = train(&data, &efficacy_config(4), false).unwrap();
    assert_ne!(hist_a, hist_c);
}
