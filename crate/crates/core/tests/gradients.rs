//! Central finite-difference oracle for backprop parameter gradients and
//! input gradients, over randomly built networks.

use aeimpute_core::net::{
    init_network, reconstruction_loss, ActivationKind, LayerParams, NetworkParams,
};
use aeimpute_core::seed;
use rand::Rng;

const EPS: f64 = 1e-5;
const MAX_REL_ERR: f64 = 1e-4;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

fn mean_loss(net: &NetworkParams, batch: &[Vec<f64>]) -> f64 {
    batch
        .iter()
        .map(|x| reconstruction_loss(x, net.forward(x).unwrap().output()).unwrap())
        .sum::<f64>()
        / batch.len() as f64
}

/// Rebuilds the network with a single parameter nudged by `delta`.
fn perturbed(
    net: &NetworkParams,
    layer: usize,
    bias: bool,
    idx: usize,
    delta: f64,
) -> NetworkParams {
    let layers: Vec<LayerParams> = net
        .layers()
        .iter()
        .enumerate()
        .map(|(l, lp)| {
            let mut w = lp.weights().to_vec();
            let mut b = lp.biases().to_vec();
            if l == layer {
                if bias {
                    b[idx] += delta;
                } else {
                    w[idx] += delta;
                }
            }
            LayerParams::from_parts(lp.rows(), lp.cols(), w, b, lp.activation()).unwrap()
        })
        .collect();
    NetworkParams::from_layers(layers, false).unwrap()
}

/// Rebuilds a tied network with the shared weight (and its decoder mirror)
/// nudged together.
fn perturbed_tied(net: &NetworkParams, enc: usize, r: usize, c: usize, delta: f64) -> NetworkParams {
    let total = net.layers().len();
    let dec = total - 1 - enc;
    let layers: Vec<LayerParams> = net
        .layers()
        .iter()
        .enumerate()
        .map(|(l, lp)| {
            let mut w = lp.weights().to_vec();
            if l == enc {
                w[r * lp.cols() + c] += delta;
            }
            if l == dec {
                w[c * lp.cols() + r] += delta;
            }
            LayerParams::from_parts(lp.rows(), lp.cols(), w, lp.biases().to_vec(), lp.activation())
                .unwrap()
        })
        .collect();
    NetworkParams::from_layers(layers, true).unwrap()
}

fn random_batch<R: Rng>(n: usize, dim: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect())
        .collect()
}

#[test]
fn param_and_input_gradients_match_finite_differences_on_20_random_nets() {
    let start = std::time::Instant::now();
    for case in 0..20u64 {
        let mut rng = seed::rng(seed::mix(0x6AD5, case));
        let input_dim = rng.gen_range(2..=10);
        let hidden: Vec<usize> = (0..rng.gen_range(1..=2))
            .map(|_| rng.gen_range(2..=10))
            .collect();
        let scale = rng.gen_range(0.3..1.2);
        let net = init_network(input_dim, &hidden, false, Some(scale), case).unwrap();
        let batch = random_batch(3, input_dim, &mut rng);

        let grads = net.grad_params(&batch).unwrap();
        for (l, layer) in net.layers().iter().enumerate() {
            for idx in 0..layer.weights().len() {
                let fd = (mean_loss(&perturbed(&net, l, false, idx, EPS), &batch)
                    - mean_loss(&perturbed(&net, l, false, idx, -EPS), &batch))
                    / (2.0 * EPS);
                let err = rel_err(fd, grads.layers[l].weights[idx]);
                assert!(
                    err < MAX_REL_ERR,
                    "case {case} layer {l} weight {idx}: fd={fd} bp={} err={err}",
                    grads.layers[l].weights[idx]
                );
            }
            for idx in 0..layer.biases().len() {
                let fd = (mean_loss(&perturbed(&net, l, true, idx, EPS), &batch)
                    - mean_loss(&perturbed(&net, l, true, idx, -EPS), &batch))
                    / (2.0 * EPS);
                let err = rel_err(fd, grads.layers[l].biases[idx]);
                assert!(
                    err < MAX_REL_ERR,
                    "case {case} layer {l} bias {idx}: fd={fd} bp={} err={err}",
                    grads.layers[l].biases[idx]
                );
            }
        }

        // Input gradient over a random free subset (total derivative: the
        // input is also the reconstruction target).
        let x: Vec<f64> = (0..input_dim).map(|_| rng.gen::<f64>()).collect();
        let free: Vec<usize> = (0..input_dim).filter(|_| rng.gen::<bool>()).collect();
        let gi = net.grad_input(&x, &free).unwrap();
        for (slot, &j) in free.iter().enumerate() {
            let mut xp = x.clone();
            xp[j] += EPS;
            let mut xm = x.clone();
            xm[j] -= EPS;
            let lp = reconstruction_loss(&xp, net.forward(&xp).unwrap().output()).unwrap();
            let lm = reconstruction_loss(&xm, net.forward(&xm).unwrap().output()).unwrap();
            let fd = (lp - lm) / (2.0 * EPS);
            let err = rel_err(fd, gi[slot]);
            assert!(
                err < MAX_REL_ERR,
                "case {case} input coord {j}: fd={fd} bp={} err={err}",
                gi[slot]
            );
        }
    }
    assert!(
        start.elapsed().as_secs() < 10,
        "gradient check took {:?}",
        start.elapsed()
    );
}

#[test]
fn tied_net_shared_gradient_matches_joint_perturbation() {
    for case in 0..5u64 {
        let mut rng = seed::rng(seed::mix(0x71ED, case));
        let input_dim = rng.gen_range(2..=6);
        let hidden = vec![rng.gen_range(2..=5)];
        let net = init_network(input_dim, &hidden, true, Some(0.8), case).unwrap();
        let batch = random_batch(2, input_dim, &mut rng);
        let grads = net.grad_params(&batch).unwrap();

        let enc = 0usize;
        let layer = &net.layers()[enc];
        for r in 0..layer.rows() {
            for c in 0..layer.cols() {
                let idx = r * layer.cols() + c;
                let fd = (mean_loss(&perturbed_tied(&net, enc, r, c, EPS), &batch)
                    - mean_loss(&perturbed_tied(&net, enc, r, c, -EPS), &batch))
                    / (2.0 * EPS);
                let err = rel_err(fd, grads.layers[enc].weights[idx]);
                assert!(
                    err < MAX_REL_ERR,
                    "case {case} shared weight ({r},{c}): fd={fd} bp={} err={err}",
                    grads.layers[enc].weights[idx]
                );
            }
        }
    }
}

#[test]
fn identity_activation_layers_check_out_too() {
    // Mixed activations: identity decoder output over a sigmoid encoder.
    let mut rng = seed::rng(0x1DE7);
    let l0 = LayerParams::from_parts(
        3,
        4,
        (0..12).map(|_| rng.gen_range(-0.8..0.8)).collect(),
        vec![0.05, -0.1, 0.2],
        ActivationKind::Sigmoid,
    )
    .unwrap();
    let l1 = LayerParams::from_parts(
        4,
        3,
        (0..12).map(|_| rng.gen_range(-0.8..0.8)).collect(),
        vec![0.0, 0.1, -0.2, 0.3],
        ActivationKind::Identity,
    )
    .unwrap();
    let net = NetworkParams::from_layers(vec![l0, l1], false).unwrap();
    let batch = random_batch(2, 4, &mut rng);
    let grads = net.grad_params(&batch).unwrap();
    for (l, layer) in net.layers().iter().enumerate() {
        for idx in 0..layer.weights().len() {
            let fd = (mean_loss(&perturbed(&net, l, false, idx, EPS), &batch)
                - mean_loss(&perturbed(&net, l, false, idx, -EPS), &batch))
                / (2.0 * EPS);
            assert!(rel_err(fd, grads.layers[l].weights[idx]) < MAX_REL_ERR);
        }
    }
}
