#![allow(dead_code)]

pub mod reference;

use camel::nn::{Activation, Dense, Mlp};
use ndarray::Array2;
use rand::Rng;

pub const FD_STEP: f64 = 1e-5;

/// Central difference of `f` with respect to every parameter of `net`,
/// returned in the layer layout (weights row-major, then biases).
pub fn finite_difference(net: &Mlp, f: impl Fn(&Mlp) -> f64) -> Vec<Dense> {
    let mut out: Vec<Dense> = net.layers().iter().map(|l| Dense::zeros(l.inputs(), l.outputs())).collect();
    let mut probe = net.clone();
    for (li, layer) in net.layers().iter().enumerate() {
        for ((r, c), &w) in layer.weight.indexed_iter() {
            probe.layers_mut()[li].weight[[r, c]] = w + FD_STEP;
            let up = f(&probe);
            probe.layers_mut()[li].weight[[r, c]] = w - FD_STEP;
            let down = f(&probe);
            probe.layers_mut()[li].weight[[r, c]] = w;
            out[li].weight[[r, c]] = (up - down) / (2.0 * FD_STEP);
        }
        for (j, &b) in layer.bias.indexed_iter() {
            probe.layers_mut()[li].bias[j] = b + FD_STEP;
            let up = f(&probe);
            probe.layers_mut()[li].bias[j] = b - FD_STEP;
            let down = f(&probe);
            probe.layers_mut()[li].bias[j] = b;
            out[li].bias[j] = (up - down) / (2.0 * FD_STEP);
        }
    }
    out
}

/// Relative error `|a - b| / max(|a|, |b|)`; pairs that are both below
/// `1e-8` in magnitude compare by absolute difference instead.
pub fn relative_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale < 1e-8 {
        (a - b).abs()
    } else {
        (a - b).abs() / scale
    }
}

pub fn max_relative_error(analytic: &[Dense], numeric: &[Dense]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .flat_map(|(a, n)| {
            a.weight
                .iter()
                .zip(n.weight.iter())
                .chain(a.bias.iter().zip(n.bias.iter()))
                .map(|(&x, &y)| relative_error(x, y))
                .collect::<Vec<_>>()
        })
        .fold(0.0, f64::max)
}

/// Random network with uniform weights in `[-1, 1]`, so no unit sits
/// systematically near a ReLU kink.
pub fn random_net(sizes: &[usize], output: Activation, rng: &mut impl Rng) -> Mlp {
    let layers = sizes
        .windows(2)
        .map(|w| Dense {
            weight: Array2::from_shape_simple_fn((w[1], w[0]), || rng.random_range(-1.0..1.0)),
            bias: ndarray::Array1::from_shape_simple_fn(w[1], || rng.random_range(-1.0..1.0)),
        })
        .collect();
    Mlp::from_layers(layers, output).unwrap()
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-1.0..1.0))
}

/// One gradient-oracle case: a random 2-hidden-layer net, a random batch and
/// a random linear read-out of the outputs. Returns the max relative error.
pub fn gradient_oracle_case(rng: &mut impl Rng) -> f64 {
    let input = rng.random_range(1..=4);
    let h1 = rng.random_range(2..=6);
    let h2 = rng.random_range(2..=6);
    let output = rng.random_range(1..=3);
    let act = [Activation::Tanh, Activation::Identity, Activation::Relu][rng.random_range(0..3)];
    let net = random_net(&[input, h1, h2, output], act, rng);
    let batch = rng.random_range(1..=4);
    let x = random_matrix(batch, input, rng);
    let w = random_matrix(batch, output, rng);
    let (_, cache) = net.forward_batch(x.view()).unwrap();
    let (grads, _) = net.backward(&cache, w.view()).unwrap();
    let numeric = finite_difference(&net, |n| (n.predict(x.view()).unwrap() * &w).sum());
    max_relative_error(&grads.layers, &numeric)
}
