//! Finite-difference gradient oracle shared by the gradient tests and the
//! acceptance suite.

#![allow(dead_code)]

use oarl::nn::{zero_grads, Activation, Batch, DenseNet, LstmCell, Parameterized};
use rand::Rng;

pub const FD_STEP: f64 = 1e-6;
/// Smallest gradient magnitude the central difference can resolve to 1e-4
/// relative accuracy: its round-off is about machine epsilon times the loss
/// over the step (~2e-10 for unit-scale losses). Below this floor errors are
/// measured against the floor instead of the gradient itself.
pub const ZERO_FLOOR: f64 = 1e-6;

pub fn rel_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    if scale < ZERO_FLOOR {
        (analytic - numeric).abs() / ZERO_FLOOR
    } else {
        (analytic - numeric).abs() / scale
    }
}

fn random_batch<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Batch {
    Batch::from_vec(
        rows,
        cols,
        (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect(),
    )
    .unwrap()
}

fn weighted_sum(out: &Batch, weights: &Batch) -> f64 {
    out.as_slice().iter().zip(weights.as_slice()).map(|(a, b)| a * b).sum()
}

/// Builds a random dense net (all widths in `1..=max_width`), checks every
/// parameter and input gradient of a random linear functional of its output,
/// and returns the largest relative error.
pub fn dense_check<R: Rng>(rng: &mut R, max_width: usize) -> f64 {
    let input = rng.random_range(1..=max_width);
    let depth = rng.random_range(1..=3);
    let layers: Vec<(usize, Activation)> = (0..depth)
        .map(|_| {
            let act = [Activation::Relu, Activation::Tanh, Activation::Linear][rng.random_range(0..3)];
            (rng.random_range(1..=max_width), act)
        })
        .collect();
    let mut net = DenseNet::new(input, &layers, rng).unwrap();
    let rows = rng.random_range(1..=4);
    let x = random_batch(rng, rows, input);
    let c = random_batch(rng, rows, net.output_width());

    let trace = net.forward_trace(&x).unwrap();
    let mut grads = zero_grads(&net);
    let dx = net
        .backward(&trace, &c, Some(grads[0].as_mut_slice()), true)
        .unwrap()
        .unwrap();
    let loss = |net: &DenseNet, x: &Batch| weighted_sum(&net.forward_batch(x).unwrap(), &c);

    let mut worst: f64 = 0.0;
    let base = net.flat_params();
    for i in 0..base.len() {
        let mut p = base.clone();
        p[i] = base[i] + FD_STEP;
        net.load_flat_params(&p).unwrap();
        let up = loss(&net, &x);
        p[i] = base[i] - FD_STEP;
        net.load_flat_params(&p).unwrap();
        let down = loss(&net, &x);
        worst = worst.max(rel_error(grads[0][i], (up - down) / (2.0 * FD_STEP)));
    }
    net.load_flat_params(&base).unwrap();
    for i in 0..x.as_slice().len() {
        let mut up = x.clone();
        up.as_mut_slice()[i] += FD_STEP;
        let mut down = x.clone();
        down.as_mut_slice()[i] -= FD_STEP;
        let numeric = (loss(&net, &up) - loss(&net, &down)) / (2.0 * FD_STEP);
        worst = worst.max(rel_error(dx.as_slice()[i], numeric));
    }
    worst
}

/// As [`dense_check`] for an LSTM cell unrolled over a random-length
/// sequence, with the functional applied to the final hidden state.
pub fn lstm_check<R: Rng>(rng: &mut R, max_width: usize) -> f64 {
    let input = rng.random_range(1..=max_width);
    let hidden = rng.random_range(1..=max_width);
    let mut cell = LstmCell::new(input, hidden, rng).unwrap();
    let rows = rng.random_range(1..=3);
    let len = rng.random_range(1..=5);
    let seq: Vec<Batch> = (0..len).map(|_| random_batch(rng, rows, input)).collect();
    let c = random_batch(rng, rows, hidden);

    let trace = cell.forward_sequence(&seq).unwrap();
    let mut grads = zero_grads(&cell);
    let dxs = cell
        .backward(&trace, &c, Some(grads[0].as_mut_slice()), true)
        .unwrap()
        .unwrap();
    let loss = |cell: &LstmCell, seq: &[Batch]| weighted_sum(cell.forward_sequence(seq).unwrap().output(), &c);

    let mut worst: f64 = 0.0;
    let base = cell.flat_params();
    for i in 0..base.len() {
        let mut p = base.clone();
        p[i] = base[i] + FD_STEP;
        cell.load_flat_params(&p).unwrap();
        let up = loss(&cell, &seq);
        p[i] = base[i] - FD_STEP;
        cell.load_flat_params(&p).unwrap();
        let down = loss(&cell, &seq);
        worst = worst.max(rel_error(grads[0][i], (up - down) / (2.0 * FD_STEP)));
    }
    cell.load_flat_params(&base).unwrap();
    for t in 0..len {
        for i in 0..seq[t].as_slice().len() {
            let mut up = seq.clone();
            up[t].as_mut_slice()[i] += FD_STEP;
            let mut down = seq.clone();
            down[t].as_mut_slice()[i] -= FD_STEP;
            let numeric = (loss(&cell, &up) - loss(&cell, &down)) / (2.0 * FD_STEP);
            worst = worst.max(rel_error(dxs[t].as_slice()[i], numeric));
        }
    }
    worst
}
