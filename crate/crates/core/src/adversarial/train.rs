use ndarray::{concatenate, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{
    sample_smoothed_label, AdversarialConfig, Discriminator, Generator, Source, Variant,
};
use crate::nn::Optimizer;
use crate::nn::{bce_loss, cce_loss};
use crate::{derive_seed, seeded_rng, Error, Result, Scalar, SeedRng};

/// Mean losses of both players over one epoch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub d_loss: f64,
    pub g_loss: f64,
}

#[derive(Clone, Debug)]
pub struct TrainedGan<F> {
    pub variant: Variant,
    pub generator: Generator<F>,
    pub discriminator: Discriminator<F>,
    pub history: Vec<EpochLoss>,
}

enum Targets<'a> {
    /// Smoothed real/fake scalars.
    Binary,
    /// Theme labels of the real (TRS) and source (ASR) samples.
    Themes { trs: &'a [usize], asr: &'a [usize] },
}

/// Baseline GAN from freshly initialized networks. Generator weights use
/// stream 0 of `config.seed`, the discriminator stream 1.
pub fn train_gan<F: Scalar>(
    z_asr: ArrayView2<'_, F>,
    z_trs: ArrayView2<'_, F>,
    config: &AdversarialConfig,
) -> Result<TrainedGan<F>> {
    config.validate()?;
    let dim = z_asr.ncols();
    let generator = Generator::init(config.generator_spec(dim), &mut seeded_rng(derive_seed(config.seed, 0)))?;
    let discriminator = Discriminator::init(
        config.discriminator_spec(Variant::Gan, dim, 0),
        &mut seeded_rng(derive_seed(config.seed, 1)),
    )?;
    train_gan_with(generator, discriminator, z_asr, z_trs, config)
}

/// Baseline GAN from caller-provided starting networks.
pub fn train_gan_with<F: Scalar>(
    mut generator: Generator<F>,
    mut discriminator: Discriminator<F>,
    z_asr: ArrayView2<'_, F>,
    z_trs: ArrayView2<'_, F>,
    config: &AdversarialConfig,
) -> Result<TrainedGan<F>> {
    if discriminator.variant() != Variant::Gan {
        return Err(Error::Config("GAN training needs a sigmoid discriminator".into()));
    }
    let history = run(&mut generator, &mut discriminator, z_asr, z_trs, Targets::Binary, config)?;
    Ok(TrainedGan {
        variant: Variant::Gan,
        generator,
        discriminator,
        history,
    })
}

/// M2H-GAN from freshly initialized networks; `classes` is the number of
/// themes (the discriminator gets one more output for FAKE).
pub fn train_m2h_gan<F: Scalar>(
    z_asr: ArrayView2<'_, F>,
    z_trs: ArrayView2<'_, F>,
    labels_trs: &[usize],
    labels_asr: &[usize],
    classes: usize,
    config: &AdversarialConfig,
) -> Result<TrainedGan<F>> {
    config.validate()?;
    let dim = z_asr.ncols();
    let generator = Generator::init(config.generator_spec(dim), &mut seeded_rng(derive_seed(config.seed, 0)))?;
    let discriminator = Discriminator::init(
        config.discriminator_spec(Variant::M2h, dim, classes),
        &mut seeded_rng(derive_seed(config.seed, 1)),
    )?;
    train_m2h_gan_with(generator, discriminator, z_asr, z_trs, labels_trs, labels_asr, config)
}

pub fn train_m2h_gan_with<F: Scalar>(
    mut generator: Generator<F>,
    mut discriminator: Discriminator<F>,
    z_asr: ArrayView2<'_, F>,
    z_trs: ArrayView2<'_, F>,
    labels_trs: &[usize],
    labels_asr: &[usize],
    config: &AdversarialConfig,
) -> Result<TrainedGan<F>> {
    if discriminator.variant() != Variant::M2h {
        return Err(Error::Config("M2H training needs an N+1-way discriminator".into()));
    }
    if labels_trs.len() != z_trs.nrows() {
        return Err(Error::dim("TRS labels", z_trs.nrows(), labels_trs.len()));
    }
    if labels_asr.len() != z_asr.nrows() {
        return Err(Error::dim("ASR labels", z_asr.nrows(), labels_asr.len()));
    }
    let fake = discriminator.fake_class();
    if let Some(&bad) = labels_trs.iter().chain(labels_asr).find(|&&l| l >= fake) {
        return Err(Error::InvalidInput(format!(
            "theme label {bad} out of range for {fake} themes"
        )));
    }
    let targets = Targets::Themes {
        trs: labels_trs,
        asr: labels_asr,
    };
    let history = run(&mut generator, &mut discriminator, z_asr, z_trs, targets, config)?;
    Ok(TrainedGan {
        variant: Variant::M2h,
        generator,
        discriminator,
        history,
    })
}

fn run<F: Scalar>(
    generator: &mut Generator<F>,
    discriminator: &mut Discriminator<F>,
    z_asr: ArrayView2<'_, F>,
    z_trs: ArrayView2<'_, F>,
    targets: Targets<'_>,
    config: &AdversarialConfig,
) -> Result<Vec<EpochLoss>> {
    config.validate()?;
    if z_asr.nrows() == 0 || z_trs.nrows() == 0 {
        return Err(Error::InvalidInput("adversarial training needs ASR and TRS samples".into()));
    }
    let dim = generator.dim();
    for (what, n) in [("ASR embeddings", z_asr.ncols()), ("TRS embeddings", z_trs.ncols())] {
        if n != dim {
            return Err(Error::dim(what, dim, n));
        }
    }
    if discriminator.network().input_dim() != dim {
        return Err(Error::dim("discriminator input", dim, discriminator.network().input_dim()));
    }

    let mut rng = seeded_rng(derive_seed(config.seed, 2));
    let mut g_opt = Optimizer::<F>::sgd(config.learning_rate);
    let mut d_opt = Optimizer::<F>::sgd(config.learning_rate);
    let mut asr_order: Vec<usize> = (0..z_asr.nrows()).collect();
    let mut trs_order: Vec<usize> = (0..z_trs.nrows()).collect();
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        asr_order.shuffle(&mut rng);
        trs_order.shuffle(&mut rng);
        let mut d_total = 0.0;
        let mut g_total = 0.0;
        let mut batches = 0usize;
        for (b, asr_idx) in asr_order.chunks(config.batch_size).enumerate() {
            let start = b * config.batch_size;
            let trs_idx: Vec<usize> = (0..asr_idx.len())
                .map(|i| trs_order[(start + i) % trs_order.len()])
                .collect();
            let z = z_asr.select(Axis(0), asr_idx);
            let x_real = z_trs.select(Axis(0), &trs_idx);

            let d_loss = discriminator_step(generator, discriminator, &mut d_opt, &z, &x_real, &trs_idx, &targets, config, &mut rng)?;
            let g_loss = generator_step(generator, discriminator, &mut g_opt, &z, asr_idx, &targets, config, &mut rng)?;
            for (who, loss) in [("discriminator", d_loss), ("generator", g_loss)] {
                if !loss.is_finite() {
                    return Err(Error::NonFinite(format!(
                        "{who} loss at epoch {epoch}, batch {b}"
                    )));
                }
            }
            d_total += d_loss;
            g_total += g_loss;
            batches += 1;
        }
        history.push(EpochLoss {
            epoch,
            d_loss: d_total / batches as f64,
            g_loss: g_total / batches as f64,
        });
    }
    Ok(history)
}

/// One discriminator update on `k` real and `k` generated samples.
/// The loss is the sum of the mean real-sample and mean fake-sample losses.
#[allow(clippy::too_many_arguments)]
fn discriminator_step<F: Scalar>(
    generator: &Generator<F>,
    discriminator: &mut Discriminator<F>,
    opt: &mut Optimizer<F>,
    z: &Array2<F>,
    x_real: &Array2<F>,
    trs_idx: &[usize],
    targets: &Targets<'_>,
    config: &AdversarialConfig,
    rng: &mut SeedRng,
) -> Result<f64> {
    let k = z.nrows();
    let x_fake = generator.generate_batch(z.view())?;
    let input = concatenate![Axis(0), x_real.view(), x_fake.view()];
    let net = discriminator.network();
    let cache = net.forward_batch(input.view())?;
    let p = cache.output();
    let scale = F::one() / F::from_usize(k).expect("batch size");
    let mut loss = F::zero();

    let grads = match targets {
        Targets::Binary => {
            let mut d_out = Array2::zeros(p.raw_dim());
            for i in 0..2 * k {
                let source = if i < k { Source::Real } else { Source::Fake };
                let t = F::lit(sample_smoothed_label(rng, source, &config.smoothing).value);
                let (l, g) = bce_loss(p[[i, 0]], t);
                loss += l * scale;
                d_out[[i, 0]] = g * scale;
            }
            net.backward(&cache, &d_out)?
        }
        Targets::Themes { trs, .. } => {
            let fake = discriminator.fake_class();
            let mut d_logits = Array2::zeros(p.raw_dim());
            for i in 0..2 * k {
                let class = if i < k { trs[trs_idx[i]] } else { fake };
                let row = p.row(i).to_vec();
                let (l, g) = cce_loss(&row, class)?;
                loss += l * scale;
                d_logits
                    .row_mut(i)
                    .iter_mut()
                    .zip(g)
                    .for_each(|(d, g)| *d = g * scale);
            }
            net.backward_from_logits(&cache, &d_logits)?
        }
    };
    opt.step(discriminator.network_mut(), &grads)?;
    Ok(loss.as_f64())
}

/// One generator update through the (fixed) discriminator.
#[allow(clippy::too_many_arguments)]
fn generator_step<F: Scalar>(
    generator: &mut Generator<F>,
    discriminator: &Discriminator<F>,
    opt: &mut Optimizer<F>,
    z: &Array2<F>,
    asr_idx: &[usize],
    targets: &Targets<'_>,
    config: &AdversarialConfig,
    rng: &mut SeedRng,
) -> Result<f64> {
    let k = z.nrows();
    let g_cache = generator.network().forward_batch(z.view())?;
    let d_net = discriminator.network();
    let d_cache = d_net.forward_batch(g_cache.output().view())?;
    let p = d_cache.output();
    let scale = F::one() / F::from_usize(k).expect("batch size");
    let mut loss = F::zero();

    let d_grads = match targets {
        Targets::Binary => {
            let mut d_out = Array2::zeros(p.raw_dim());
            for i in 0..k {
                // Fooling objective: generated samples should look real.
                let t = F::lit(sample_smoothed_label(rng, Source::Real, &config.smoothing).value);
                let (l, g) = bce_loss(p[[i, 0]], t);
                loss += l * scale;
                d_out[[i, 0]] = g * scale;
            }
            d_net.backward(&d_cache, &d_out)?
        }
        Targets::Themes { asr, .. } => {
            let mut d_logits = Array2::zeros(p.raw_dim());
            for i in 0..k {
                let row = p.row(i).to_vec();
                let (l, g) = cce_loss(&row, asr[asr_idx[i]])?;
                loss += l * scale;
                d_logits
                    .row_mut(i)
                    .iter_mut()
                    .zip(g)
                    .for_each(|(d, g)| *d = g * scale);
            }
            d_net.backward_from_logits(&d_cache, &d_logits)?
        }
    };
    let g_grads = generator.network().backward(&g_cache, &d_grads.input)?;
    opt.step(generator.network_mut(), &g_grads)?;
    Ok(loss.as_f64())
}
