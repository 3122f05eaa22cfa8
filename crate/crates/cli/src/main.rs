use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::Array2;

use m2h::adversarial::{train_gan, train_m2h_gan, Generator, TrainedGan};
use m2h::classifier::{map_features, select_epoch, train_classifier, LabeledSet, Standardizer};
use m2h::corpus::{generate_synthetic_corpus, load_corpus, save_corpus, Channel, Split};
use m2h::harness::{
    adversarial_seed, classifier_seed, render_report, run_experiment, seed_inference, train_embedder,
    ExperimentConfig, ReportFormat, RunReport, System,
};
use m2h::lda::{load_embedder, load_embeddings, save_embedder, save_embeddings, EmbeddingRecord};
use m2h::nn::{load_network, save_network};

#[derive(Parser)]
#[command(name = "m2h", version, about = "Theme identification of noisy transcripts with adversarial embedding mapping")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run seed (corpus seed for gen-corpus).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic parallel corpus.
    GenCorpus {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one channel's embedder (several LDA runs) on the training split.
    TrainLda {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_enum)]
        channel: ChannelArg,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        topics: Option<usize>,
        /// Output directory for the embedder and its run files.
        #[arg(long)]
        out: PathBuf,
    },
    /// Embed every document of the embedder's channel.
    Embed {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        embedder: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the baseline GAN on TRS/ASR training embeddings.
    TrainGan(AdversarialArgs),
    /// Train the M2H-GAN on TRS/ASR training embeddings.
    TrainM2h(AdversarialArgs),
    /// Train the theme classifier, optionally on generator-mapped features.
    TrainDnn {
        #[command(flatten)]
        common: Common,
        /// Embedding file of the channel to classify.
        #[arg(long)]
        features: PathBuf,
        /// Frozen generator checkpoint applied to the features.
        #[arg(long)]
        generator: Option<PathBuf>,
        /// System whose seed stream to use; inferred when omitted
        /// (M2H-GAN when a generator is given).
        #[arg(long)]
        system: Option<System>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full multi-seed experiment and print the results table.
    RunExperiment {
        #[command(flatten)]
        common: Common,
        /// Directory receiving report.json and report.txt.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a saved report.
    Report {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Text)]
        format: FormatArg,
    },
}

#[derive(Args)]
struct AdversarialArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    trs: PathBuf,
    #[arg(long)]
    asr: PathBuf,
    /// Output directory for checkpoints and the loss history.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ChannelArg {
    Trs,
    Asr,
}

impl From<ChannelArg> for Channel {
    fn from(c: ChannelArg) -> Self {
        match c {
            ChannelArg::Trs => Channel::Trs,
            ChannelArg::Asr => Channel::Asr,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        match &self.config {
            Some(path) => ExperimentConfig::load(path).with_context(|| format!("reading {}", path.display())),
            None => Ok(ExperimentConfig::default()),
        }
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

/// Embeddings of one split as a matrix plus labels, in file order.
fn split_matrix(records: &[EmbeddingRecord], split: Split) -> Result<(Array2<f64>, Vec<usize>, Vec<String>)> {
    let rows: Vec<&EmbeddingRecord> = records.iter().filter(|r| r.split == split).collect();
    let dim = rows.first().map_or(0, |r| r.embedding.len());
    let flat: Vec<f64> = rows.iter().flat_map(|r| r.embedding.as_slice().iter().copied()).collect();
    let matrix = Array2::from_shape_vec((rows.len(), dim), flat)?;
    Ok((
        matrix,
        rows.iter().map(|r| r.theme).collect(),
        rows.iter().map(|r| r.id.clone()).collect(),
    ))
}

fn train_adversarial(args: &AdversarialArgs, system: System) -> Result<()> {
    let config = args.common.config()?;
    let seed = args.common.seed();
    let trs = load_embeddings(&args.trs)?;
    let asr = load_embeddings(&args.asr)?;
    let (mut x, labels_trs, ids_trs) = split_matrix(&trs, Split::Train)?;
    let (mut z, labels_asr, ids_asr) = split_matrix(&asr, Split::Train)?;
    if config.run.standardize {
        x = Standardizer::fit(x.view())?.transform(x)?;
        z = Standardizer::fit(z.view())?.transform(z)?;
    }
    if ids_trs != ids_asr {
        bail!("TRS and ASR embedding files do not list the same training documents");
    }
    let gan = m2h::adversarial::AdversarialConfig {
        seed: adversarial_seed(system, seed),
        ..config.gan
    };
    let classes = labels_trs.iter().chain(&labels_asr).max().map_or(0, |m| m + 1);
    let trained: TrainedGan<f64> = match system {
        System::Gan => train_gan(z.view(), x.view(), &gan)?,
        _ => train_m2h_gan(z.view(), x.view(), &labels_trs, &labels_asr, classes.max(config.corpus.themes.len()), &gan)?,
    };
    create_dir(&args.out)?;
    save_network(trained.generator.network(), args.out.join("generator.m2hnet"))?;
    save_network(trained.discriminator.network(), args.out.join("discriminator.m2hnet"))?;
    fs::write(args.out.join("history.json"), serde_json::to_string_pretty(&trained.history)?)?;
    if let Some(last) = trained.history.last() {
        println!("epoch {} d_loss {:.4} g_loss {:.4}", last.epoch, last.d_loss, last.g_loss);
    }
    Ok(())
}

fn train_dnn(common: &Common, features: &Path, generator: Option<&Path>, system: Option<System>, out: &Path) -> Result<()> {
    let config = common.config()?;
    let records = load_embeddings(features)?;
    let channel = records.first().map(|r| r.channel).context("empty embedding file")?;
    let generator = generator
        .map(|p| -> Result<Generator<f64>> { Ok(Generator::from_network(load_network(p)?)?) })
        .transpose()?;
    let system = system.unwrap_or(match (channel, &generator) {
        (Channel::Trs, None) => System::DnnTrs,
        (Channel::Asr, None) => System::DnnAsr,
        (_, Some(_)) => System::M2hGan,
    });
    let standardizer = if config.run.standardize {
        Some(Standardizer::fit(split_matrix(&records, Split::Train)?.0.view())?)
    } else {
        None
    };
    let mut sets = Vec::new();
    for split in Split::ALL {
        let (mut x, y, _) = split_matrix(&records, split)?;
        if let Some(st) = &standardizer {
            x = st.transform(x)?;
        }
        sets.push((map_features(generator.as_ref(), x)?, y));
    }
    let classes = sets.iter().flat_map(|(_, y)| y).max().map_or(0, |m| m + 1).max(config.corpus.themes.len());
    let view = |i: usize| LabeledSet::new(sets[i].0.view(), &sets[i].1);
    let trained = train_classifier(
        view(0)?,
        view(1)?,
        view(2)?,
        classes,
        &config.classifier,
        classifier_seed(system, common.seed()),
    )?;
    create_dir(out)?;
    save_network(&trained.network, out.join("classifier.m2hnet"))?;
    fs::write(out.join("history.json"), serde_json::to_string_pretty(&trained.history)?)?;
    let sel = select_epoch(&trained.history)?;
    println!(
        "epoch {} dev {:.1} real_test {:.1} max_test {:.1}",
        sel.epoch,
        100.0 * sel.dev,
        100.0 * sel.real_test,
        100.0 * sel.max_test
    );
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::GenCorpus { common, out } => {
            let config = common.config()?;
            let seed = common.seed.unwrap_or(config.run.corpus_seed);
            let corpus = generate_synthetic_corpus(&config.corpus, seed)?;
            save_corpus(&corpus, &out)?;
            println!(
                "{} pairs ({} train / {} dev / {} test) written to {}",
                corpus.pairs().len(),
                corpus.split_len(Split::Train),
                corpus.split_len(Split::Dev),
                corpus.split_len(Split::Test),
                out.display()
            );
        }
        Command::TrainLda {
            common,
            corpus,
            channel,
            runs,
            topics,
            out,
        } => {
            let mut config = common.config()?;
            if let Some(r) = runs {
                config.lda.runs = r;
            }
            if let Some(t) = topics {
                config.lda.topics = t;
            }
            let corpus = load_corpus(&corpus)?;
            let embedder = train_embedder(&corpus, channel.into(), &config.lda, common.seed())?;
            create_dir(&out)?;
            let path = save_embedder(&embedder, &out)?;
            println!("{}", path.display());
        }
        Command::Embed {
            common,
            corpus,
            embedder,
            out,
        } => {
            let config = common.config()?;
            let corpus = load_corpus(&corpus)?;
            let embedder = load_embedder(&embedder)?;
            let inference = seed_inference(config.inference(), common.seed());
            let mut records = Vec::new();
            for split in Split::ALL {
                let docs = corpus.documents(split, embedder.channel());
                for (doc, embedding) in docs.iter().zip(embedder.embed_all(&docs, &inference)?) {
                    records.push(EmbeddingRecord {
                        id: doc.id.clone(),
                        split,
                        theme: doc.theme,
                        channel: doc.channel,
                        embedding,
                    });
                }
            }
            save_embeddings(&records, &out)?;
            println!("{} embeddings written to {}", records.len(), out.display());
        }
        Command::TrainGan(args) => train_adversarial(&args, System::Gan)?,
        Command::TrainM2h(args) => train_adversarial(&args, System::M2hGan)?,
        Command::TrainDnn {
            common,
            features,
            generator,
            system,
            out,
        } => train_dnn(&common, &features, generator.as_deref(), system, &out)?,
        Command::RunExperiment { common, out } => {
            let mut config = common.config()?;
            if let Some(seed) = common.seed {
                config.run.seeds = vec![seed];
            }
            let report = run_experiment(&config)?;
            if let Some(dir) = out {
                create_dir(&dir)?;
                fs::write(dir.join("report.json"), render_report(&report, ReportFormat::Json)?)?;
                fs::write(dir.join("report.txt"), render_report(&report, ReportFormat::Text)?)?;
            }
            print!("{}", String::from_utf8(render_report(&report, ReportFormat::Text)?)?);
            for failed in &report.failed {
                eprintln!("seed {} failed during {}: {}", failed.seed, failed.stage, failed.message);
            }
            if !report.is_complete() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Report { input, format, .. } => {
            let text = fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
            let report = RunReport::from_json(&text)?;
            let format = match format {
                FormatArg::Text => ReportFormat::Text,
                FormatArg::Json => ReportFormat::Json,
            };
            print!("{}", String::from_utf8(render_report(&report, format)?)?);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
