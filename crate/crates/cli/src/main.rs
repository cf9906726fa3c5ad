use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use argbank::automation::Selection;
use argbank::corpus::{load, parse, save, serialize, LockMode};
use argbank::graph::Severity;
use argbank::layout::{layout, render_svg, LayoutParams};
use argbank::tagger::{
    evaluate, EvalConfig, ReliabilityPolicy, Smoothing, TaggerModel, Variant, DEFAULT_THRESHOLD,
};
use argbank::{Corpus, NodeRef};
use argbank_service::wire::{CalibrateRequest, SuggestRequest, TrainRequest};
use argbank_service::{AnnotationService, ServiceConfig};

/// Annotation corpora: checking, conversion, tagger training and
/// evaluation, drawing, and the annotation service.
#[derive(Debug, Parser)]
#[command(name = "argbank", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Read a corpus file, check it and write it in canonical form.
    Import {
        input: PathBuf,
        /// Destination; standard output if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a stored corpus in canonical form.
    Export {
        corpus: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report validation findings. Fails if any sentence has errors.
    Validate { corpus: PathBuf },
    /// Train a tagger on the complete sentences and write the model.
    Train {
        corpus: PathBuf,
        #[arg(long, env = "ARGBANK_MODEL")]
        model: PathBuf,
        #[command(flatten)]
        reliability: Reliability,
        /// Share of complete sentences held out when calibrating.
        #[arg(long, default_value_t = 0.1)]
        heldout_fraction: f64,
        /// Additive smoothing for the count tables.
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, value_enum, default_value_t = VariantArg::Positional)]
        variant: VariantArg,
    },
    /// Repeated random-split evaluation of the tagger.
    Eval {
        corpus: PathBuf,
        #[arg(long, default_value_t = 10)]
        repetitions: usize,
        #[arg(long, default_value_t = 0.9)]
        train_fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        reliability: Reliability,
        #[arg(long, default_value_t = 0.1)]
        heldout_fraction: f64,
        #[arg(long, value_enum, default_value_t = VariantArg::Positional)]
        variant: VariantArg,
        /// Also write the per-repetition table here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Print tagger proposals for one sentence as JSON.
    Suggest {
        corpus: PathBuf,
        #[arg(long, env = "ARGBANK_MODEL")]
        model: PathBuf,
        #[arg(long)]
        sentence: String,
        /// 1 functions, 2 category and functions, 3 noun kernels.
        #[arg(long, default_value_t = 1)]
        level: u8,
        /// Selected node ids, e.g. `1,2,500`.
        #[arg(long, value_delimiter = ',')]
        children: Vec<u32>,
        #[arg(long)]
        category: Option<String>,
        #[arg(long, value_enum, default_value_t = VariantArg::Positional)]
        variant: VariantArg,
    },
    /// Draw one sentence as SVG.
    Render {
        corpus: PathBuf,
        #[arg(long)]
        sentence: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convert complete sentences to projective trees plus a trace table.
    Convert {
        corpus: PathBuf,
        /// Corpus file of projective trees.
        #[arg(long)]
        out: PathBuf,
        /// Trace table; defaults to the output with `.traces.tsv`.
        #[arg(long)]
        traces: Option<PathBuf>,
    },
    /// Run the annotation service.
    Serve {
        #[arg(long, env = "ARGBANK_CORPUS")]
        corpus: PathBuf,
        #[arg(long, env = "ARGBANK_MODEL")]
        model: Option<PathBuf>,
        #[arg(long, env = "ARGBANK_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, env = "ARGBANK_HOST", default_value = "127.0.0.1")]
        host: IpAddr,
        /// Save the corpus after every accepted command.
        #[arg(long, env = "ARGBANK_AUTOSAVE")]
        autosave: bool,
        #[arg(long, value_enum, default_value_t = VariantArg::Positional)]
        variant: VariantArg,
    },
}

/// A fixed threshold or a target reliable fraction, not both.
#[derive(Debug, Args)]
#[group(multiple = false)]
struct Reliability {
    /// Reliability threshold on the competitor quotient.
    #[arg(long)]
    threshold: Option<f64>,
    /// Choose the threshold so this fraction of held-out positions is
    /// reliable.
    #[arg(long)]
    target: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VariantArg {
    /// Each position decided on its own.
    Positional,
    /// Joint decoding over function sequences.
    Hmm,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Positional => Variant::Positional,
            VariantArg::Hmm => Variant::Hmm,
        }
    }
}

fn read_corpus(path: &Path) -> Result<Corpus> {
    Ok(load(path)?)
}

fn read_model(path: &Path) -> Result<TaggerModel> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    TaggerModel::from_json(&text).with_context(|| format!("{}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn import(input: &Path, out: Option<&Path>) -> Result<()> {
    let text =
        fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let corpus = parse(&text).with_context(|| format!("{}", input.display()))?;
    match out {
        Some(p) => save(&corpus, p, LockMode::Wait)?,
        None => emit(None, &serialize(&corpus)?)?,
    }
    log::info!("{} sentences", corpus.len());
    Ok(())
}

/// Prints findings and returns the number of errors.
fn validate(path: &Path) -> Result<usize> {
    let corpus = read_corpus(path)?;
    let (mut errors, mut warnings) = (0, 0);
    for g in corpus.sentences() {
        for v in g.validate(corpus.tagsets()) {
            match v.severity {
                Severity::Error => errors += 1,
                Severity::Warning => warnings += 1,
            }
            println!("{}: {v}", g.id());
        }
    }
    println!(
        "{} sentences, {errors} errors, {warnings} warnings",
        corpus.len()
    );
    Ok(errors)
}

fn reliability(r: &Reliability, heldout_fraction: f64) -> ReliabilityPolicy {
    match (r.threshold, r.target) {
        (_, Some(target)) => ReliabilityPolicy::Calibrate {
            target,
            heldout_fraction,
        },
        (t, None) => ReliabilityPolicy::Fixed(t.unwrap_or(DEFAULT_THRESHOLD)),
    }
}

fn convert(path: &Path, out: &Path, traces: Option<&Path>) -> Result<()> {
    let corpus = read_corpus(path)?;
    let mut trees = Corpus::new(corpus.name(), corpus.tagsets().clone())?;
    let mut table = String::from("sentence\tfillers\toriginal_parent\tnew_parent\n");
    for g in corpus.sentences() {
        let c = g
            .to_constituency()
            .with_context(|| format!("sentence {}", g.id()))?;
        for t in &c.traces {
            let fillers: Vec<String> = t.fillers.iter().map(NodeRef::to_string).collect();
            let _ = writeln!(
                table,
                "{}\t{}\t{}\t{}",
                g.id(),
                fillers.join(","),
                t.original_parent,
                t.new_parent
            );
        }
        trees.push(c.tree)?;
    }
    let traces = match traces {
        Some(p) => p.to_path_buf(),
        None => out.with_extension("traces.tsv"),
    };
    save(&trees, out, LockMode::Wait)?;
    fs::write(&traces, table).with_context(|| format!("writing {}", traces.display()))?;
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Cmd::Import { input, out } => import(&input, out.as_deref())?,
        Cmd::Export { corpus, out } => emit(out.as_deref(), &serialize(&read_corpus(&corpus)?)?)?,
        Cmd::Validate { corpus } => {
            if validate(&corpus)? > 0 {
                return Ok(ExitCode::FAILURE);
            }
        }
        Cmd::Train {
            corpus,
            model,
            reliability: r,
            heldout_fraction,
            delta,
            variant,
        } => {
            let service = AnnotationService::new(
                read_corpus(&corpus)?,
                ServiceConfig {
                    model_path: Some(model),
                    ..ServiceConfig::default()
                },
            );
            let smoothing = delta.map(|delta| Smoothing {
                delta,
                ..Smoothing::default()
            });
            let req = TrainRequest {
                smoothing,
                threshold: r.threshold,
                calibrate: r.target.map(|target| CalibrateRequest {
                    target,
                    heldout_fraction,
                }),
                variant: Some(variant.into()),
            };
            let res = service.train(&req)?;
            println!(
                "{} instances from {} categories, {} sentences skipped, threshold {:.6}",
                res.instances,
                res.categories.len(),
                res.skipped_sentences,
                res.threshold
            );
            if let Some(f) = res.calibrated_fraction {
                println!("reliable on calibration sentences: {:.2}%", 100.0 * f);
            }
            if let Some(w) = res.warning {
                log::warn!("{w}");
            }
        }
        Cmd::Eval {
            corpus,
            repetitions,
            train_fraction,
            seed,
            reliability: r,
            heldout_fraction,
            variant,
            report,
        } => {
            let config = EvalConfig {
                repetitions,
                train_fraction,
                seed,
                variant: variant.into(),
                smoothing: Smoothing::default(),
                reliability: reliability(&r, heldout_fraction),
            };
            let result = evaluate(&read_corpus(&corpus)?, &config)?;
            let table = result.to_table();
            if let Some(p) = report {
                fs::write(&p, &table).with_context(|| format!("writing {}", p.display()))?;
            }
            print!("{table}\n{}", result.summary());
        }
        Cmd::Suggest {
            corpus,
            model,
            sentence,
            level,
            children,
            category,
            variant,
        } => {
            let service = AnnotationService::new(read_corpus(&corpus)?, ServiceConfig::default());
            service.set_model(read_model(&model)?);
            let children = children
                .into_iter()
                .map(|id| NodeRef::from_id(id).with_context(|| format!("{id} is not a node id")))
                .collect::<Result<_>>()?;
            let req = SuggestRequest {
                level,
                selection: Selection { children, category },
                variant: Some(variant.into()),
            };
            let res = service.suggest(&sentence, &req)?;
            println!("{}", serde_json::to_string_pretty(&res)?);
        }
        Cmd::Render {
            corpus,
            sentence,
            out,
        } => {
            let c = read_corpus(&corpus)?;
            let Some(g) = c.sentence(&sentence) else {
                bail!("no sentence `{sentence}` in {}", corpus.display());
            };
            emit(out.as_deref(), &render_svg(&layout(g, &LayoutParams::default())))?;
        }
        Cmd::Convert {
            corpus,
            out,
            traces,
        } => convert(&corpus, &out, traces.as_deref())?,
        Cmd::Serve {
            corpus,
            model,
            port,
            host,
            autosave,
            variant,
        } => {
            let service = AnnotationService::open(ServiceConfig {
                corpus_path: Some(corpus),
                model_path: model,
                autosave,
                variant: variant.into(),
                ..ServiceConfig::default()
            })?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(argbank_service::serve(
                SocketAddr::new(host, port),
                Arc::new(service),
            ))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            // many errors already print their cause inline
            let mut msg = e.to_string();
            for cause in e.chain().skip(1) {
                let c = cause.to_string();
                if !msg.contains(&c) {
                    msg = format!("{msg}: {c}");
                }
            }
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
