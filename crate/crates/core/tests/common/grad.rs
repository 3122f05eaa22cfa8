//! Finite-difference checks of the four pipeline architectures. Each
//! `*_instance` builds one random network and batch and returns the worst
//! relative error over the probed coordinates.

use m2h::adversarial::{Discriminator, DiscriminatorSpec, Generator, GeneratorSpec, Variant};
use m2h::classifier::ClassifierConfig;
use m2h::nn::gradcheck::{central_differences, check_network, max_relative_error, FD_STEP};
use m2h::nn::{bce_batch, cce_batch, Network};
use m2h::{seeded_rng, SeedRng};
use ndarray::Array2;
use rand::seq::index::sample;
use rand::Rng;

pub const INSTANCES: u64 = 20;
pub const TOLERANCE: f64 = 1e-4;
const BATCH: usize = 3;
const PARAM_PROBES: usize = 150;
const INPUT_PROBES: usize = 60;

pub fn random_input(rng: &mut SeedRng, rows: usize, cols: usize, scale: f64) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-scale..scale))
}

/// Probes a random subset of parameters, always including the last layer.
fn probe_coords(net: &Network<f64>, rng: &mut SeedRng) -> Vec<usize> {
    let n = net.num_params();
    let mut coords: Vec<usize> = sample(rng, n, PARAM_PROBES.min(n)).into_vec();
    coords.extend(n.saturating_sub(20)..n);
    coords.sort_unstable();
    coords.dedup();
    coords
}

/// Random subset of the row-major batch entries.
fn input_coords(len: usize, rng: &mut SeedRng) -> Vec<usize> {
    let mut coords = sample(rng, len, INPUT_PROBES.min(len)).into_vec();
    coords.sort_unstable();
    coords
}

/// Sum over the batch of a binary cross-entropy against fixed targets.
fn bce_sum(targets: Vec<f64>) -> impl Fn(&Array2<f64>) -> (f64, Array2<f64>) {
    move |p| {
        let (loss, grad) = bce_batch(p, &targets).unwrap();
        let n = targets.len() as f64;
        (loss * n, grad * n)
    }
}

/// Sum of categorical cross-entropies, gradient w.r.t. the probabilities.
fn cce_sum(classes: Vec<usize>) -> impl Fn(&Array2<f64>) -> (f64, Array2<f64>) {
    move |p| {
        let mut loss = 0.0;
        let mut grad = Array2::zeros(p.raw_dim());
        for (i, &c) in classes.iter().enumerate() {
            loss -= p[[i, c]].ln();
            grad[[i, c]] = -1.0 / p[[i, c]];
        }
        (loss, grad)
    }
}

/// The logits path used in training: cross-entropy gradient taken w.r.t.
/// the softmax logits and pushed through `backward_from_logits`.
fn logits_path_error(net: &Network<f64>, x: &Array2<f64>, classes: &[usize], coords: &[usize]) -> f64 {
    let cache = net.forward_batch(x.view()).unwrap();
    let (_, d_logits) = cce_batch(cache.output(), classes).unwrap();
    let analytic = net.backward_from_logits(&cache, &d_logits).unwrap().flatten();
    let mut probe = net.clone();
    let numeric = central_differences(&net.flat_params(), coords, FD_STEP, |p| {
        probe.set_flat_params(p).unwrap();
        cce_batch(&probe.predict(x.view()).unwrap(), classes).unwrap().0
    });
    let picked: Vec<f64> = coords.iter().map(|&i| analytic[i]).collect();
    max_relative_error(&picked, &numeric)
}

pub fn classifier_instance(instance: u64) -> f64 {
    let specs = ClassifierConfig::default().layers(8);
    let mut rng = seeded_rng(100 + instance);
    let net = Network::<f64>::init(250, &specs, &mut rng).unwrap();
    let x = random_input(&mut rng, BATCH, 250, 2.0);
    let classes: Vec<usize> = (0..BATCH).map(|_| rng.random_range(0..8)).collect();
    let coords = probe_coords(&net, &mut rng);
    let inputs = input_coords(BATCH * 250, &mut rng);
    let check = check_network(&net, x.view(), cce_sum(classes.clone()), Some(&coords), Some(&inputs), FD_STEP).unwrap();
    check.max_error().max(logits_path_error(&net, &x, &classes, &coords))
}

/// The generator is checked through a fixed GAN discriminator, with
/// non-trivial layer-norm gains and shifts.
pub fn generator_instance(instance: u64) -> f64 {
    let mut rng = seeded_rng(200 + instance);
    let mut net = Generator::<f64>::init(GeneratorSpec::new(250), &mut rng).unwrap().into_network();
    let mut params = net.flat_params();
    let n = params.len();
    for p in params[n - 2 * 250..].iter_mut() {
        *p += rng.random_range(-0.5..0.5);
    }
    net.set_flat_params(&params).unwrap();
    let g = Generator::from_network(net).unwrap();
    let d = Discriminator::<f64>::init(DiscriminatorSpec::new(Variant::Gan, 250, 0), &mut rng).unwrap();
    let z = random_input(&mut rng, BATCH, 250, 1.0);
    let targets: Vec<f64> = (0..BATCH).map(|_| rng.random_range(0.0..0.7)).collect();
    let d_net = d.network().clone();
    let loss = move |out: &Array2<f64>| {
        let cache = d_net.forward_batch(out.view()).unwrap();
        let (l, grad) = bce_sum(targets.clone())(cache.output());
        (l, d_net.backward(&cache, &grad).unwrap().input)
    };
    let coords = probe_coords(g.network(), &mut rng);
    let inputs = input_coords(BATCH * 250, &mut rng);
    check_network(g.network(), z.view(), loss, Some(&coords), Some(&inputs), FD_STEP)
        .unwrap()
        .max_error()
}

pub fn gan_discriminator_instance(instance: u64) -> f64 {
    let mut rng = seeded_rng(300 + instance);
    let d = Discriminator::<f64>::init(DiscriminatorSpec::new(Variant::Gan, 250, 0), &mut rng).unwrap();
    let x = random_input(&mut rng, BATCH, 250, 1.0);
    let targets: Vec<f64> = (0..BATCH).map(|_| rng.random_range(0.0..1.0)).collect();
    let coords = probe_coords(d.network(), &mut rng);
    let inputs = input_coords(BATCH * 250, &mut rng);
    check_network(d.network(), x.view(), bce_sum(targets), Some(&coords), Some(&inputs), FD_STEP)
        .unwrap()
        .max_error()
}

pub fn m2h_discriminator_instance(instance: u64) -> f64 {
    let mut rng = seeded_rng(400 + instance);
    let d = Discriminator::<f64>::init(DiscriminatorSpec::new(Variant::M2h, 250, 8), &mut rng).unwrap();
    let x = random_input(&mut rng, BATCH, 250, 1.0);
    let classes: Vec<usize> = (0..BATCH).map(|_| rng.random_range(0..9)).collect();
    let coords = probe_coords(d.network(), &mut rng);
    let inputs = input_coords(BATCH * 250, &mut rng);
    let check = check_network(d.network(), x.view(), cce_sum(classes.clone()), Some(&coords), Some(&inputs), FD_STEP).unwrap();
    check.max_error().max(logits_path_error(d.network(), &x, &classes, &coords))
}

/// Worst error over all instances of one architecture.
pub fn worst(instance: fn(u64) -> f64) -> f64 {
    (0..INSTANCES).map(instance).fold(0.0, f64::max)
}
