use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use phonrec::confusion::{
    compare_with_dictionary, major_confusions, pronunciation_table, table_confusion_matrix, ConfusionMatrix,
};
use phonrec::corpus::{synth_corpus, write_timit_layout, SynthSpec};
use phonrec::experiment::{
    derive_hsco, emit_report, evaluate_system, fit_system, prepare_data, recall_csv, run_experiment_with_models,
    ExperimentConfig, ReportFormat, System, TrainedSystem,
};
use phonrec::features::write_feature_csv;
use phonrec::hierarchy::{build_hsco, HscoParams, HSCO_NAME};
use phonrec::PhonemeLabel;

#[derive(Parser)]
#[command(
    name = "phonrec",
    version,
    about = "Hierarchical phoneme recognition with kernel SVMs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Csv,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Text => ReportFormat::Text,
            Format::Csv => ReportFormat::Csv,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SystemArg {
    Flat,
    HsTc,
    HsCo,
}

impl From<SystemArg> for System {
    fn from(s: SystemArg) -> Self {
        match s {
            SystemArg::Flat => System::Flat,
            SystemArg::HsTc => System::HsTc,
            SystemArg::HsCo => System::HsCo,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus in TIMIT directory layout.
    Synth {
        /// Generator description (TOML).
        #[arg(long, conflicts_with = "labels")]
        spec: Option<PathBuf>,
        /// Comma-separated labels, used with --count instead of --spec.
        #[arg(long, value_delimiter = ',')]
        labels: Vec<String>,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long, default_value = "dr1")]
        dialect: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Dump per-segment feature vectors as CSV.
    Features {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train one system on the training split and save it.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        system: SystemArg,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a saved system on the test split.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for confusion and recall CSVs.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Major confusions of a matrix and their comparison with the pronunciation dictionary.
    Confusions {
        /// Confusion matrix CSV; the embedded classifier-confusion table when absent.
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long, default_value_t = 6)]
        k: usize,
        #[arg(long, default_value_t = 0.05)]
        min_fraction: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Build the confusion-isolating hierarchy and write its tree file.
    DeriveTaxonomy {
        /// Confusion matrix CSV over all 60 labels; the embedded table when absent.
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long, default_value_t = HscoParams::default().tau)]
        tau: f64,
        #[arg(long)]
        semivowels_in_vowel_branch: bool,
        #[arg(long)]
        max_cluster_size: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full experiment: train and compare the configured systems.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Report directory; overrides `out_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Also save every trained system under `<out>/models/`.
        #[arg(long)]
        save_models: bool,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::FAILURE
        }
    }
}

/// The error chain joined by `: `, skipping causes already quoted by their parent.
fn describe(e: &anyhow::Error) -> String {
    let mut msg = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !msg.contains(&text) {
            if !msg.is_empty() {
                msg += ": ";
            }
            msg += &text;
        }
    }
    msg
}

/// Writes to standard output; a closed pipe is not an error.
fn emit(text: &str) -> Result<()> {
    match io::stdout().write_all(text.as_bytes()) {
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path).with_context(|| format!("reading config {}", path.display()))?;
    if let Some(seed) = seed {
        cfg.reseed(seed);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn read_matrix(path: Option<&Path>) -> Result<ConfusionMatrix> {
    match path {
        None => Ok(table_confusion_matrix()),
        Some(p) => {
            let file = fs::File::open(p).with_context(|| format!("opening {}", p.display()))?;
            ConfusionMatrix::read_csv(BufReader::new(file)).with_context(|| format!("reading {}", p.display()))
        }
    }
}

fn write_or_print(path: Option<&Path>, contents: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, contents).with_context(|| format!("writing {}", p.display())),
        None => emit(contents),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth {
            spec,
            labels,
            count,
            dialect,
            seed,
            out,
        } => {
            let spec = match spec {
                Some(p) => {
                    let text = fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
                    toml::from_str::<SynthSpec>(&text).with_context(|| format!("parsing {}", p.display()))?
                }
                None => {
                    if labels.is_empty() {
                        bail!("give either --spec or --labels");
                    }
                    let labels = labels
                        .iter()
                        .map(|l| PhonemeLabel::parse(l))
                        .collect::<Result<Vec<_>, _>>()?;
                    SynthSpec::uniform(&labels, count)
                }
            };
            let corpus = synth_corpus(&spec, seed)?;
            write_timit_layout(&corpus, &out, &dialect)?;
            emit(&format!("wrote {} segments under {}\n", corpus.len(), out.display()))?;
        }
        Command::Features { config, seed, out } => {
            let cfg = load_config(&config, seed)?;
            let corpus = cfg.source.load()?;
            let rows = phonrec::features::extract_corpus(&corpus, &cfg.mfcc)?;
            let mut buf = Vec::new();
            write_feature_csv(&mut buf, &cfg.mfcc, &rows)?;
            write_or_print(out.as_deref(), &String::from_utf8(buf)?)?;
        }
        Command::Train {
            config,
            system,
            seed,
            out,
        } => {
            let cfg = load_config(&config, seed)?;
            let system = System::from(system);
            let data = prepare_data(&cfg)?;
            let train = data.train_rows();
            let traditional = cfg.traditional_hierarchy()?;
            let model = match system {
                System::Flat => fit_system(&cfg, system, None, &train)?,
                System::HsTc => fit_system(&cfg, system, Some(&traditional), &train)?,
                System::HsCo => {
                    let (tree, derivation) = derive_hsco(&cfg, &traditional, &train)?;
                    fs::create_dir_all(&out)?;
                    let mut buf = Vec::new();
                    derivation.matrix.write_csv(&mut buf)?;
                    fs::write(out.join("confusion-source.csv"), buf)?;
                    fit_system(&cfg, system, Some(&tree), &train)?
                }
            };
            model.save(&out)?;
            emit(&format!(
                "trained {} on {} segments → {}\n",
                system.slug(),
                train.len(),
                out.display()
            ))?;
        }
        Command::Evaluate {
            config,
            model,
            seed,
            out,
            format,
        } => {
            let cfg = load_config(&config, seed)?;
            let trained = TrainedSystem::load(&model).with_context(|| format!("loading {}", model.display()))?;
            let system = match &trained {
                TrainedSystem::Flat(_) => System::Flat,
                TrainedSystem::Tree(t) if t.hierarchy.name() == HSCO_NAME => System::HsCo,
                TrainedSystem::Tree(_) => System::HsTc,
            };
            let data = prepare_data(&cfg)?;
            let (confusion, recall) = evaluate_system(system, &trained, &data.test_rows())?;
            if let Some(dir) = &out {
                fs::create_dir_all(dir)?;
                let mut buf = Vec::new();
                confusion.write_csv(&mut buf)?;
                fs::write(dir.join("confusion.csv"), buf)?;
                fs::write(dir.join("recall.csv"), recall_csv(&recall))?;
            }
            match format {
                Format::Csv => emit(&recall_csv(&recall))?,
                Format::Text => {
                    let acc = recall.overall.map_or("-".into(), |v| format!("{:.2}%", v * 100.0));
                    emit(&format!(
                        "{}: accuracy {acc} ({}/{})\n",
                        system.name(),
                        recall.correct,
                        recall.total
                    ))?;
                    for row in recall.rows.iter().filter(|r| r.tokens > 0) {
                        let rate = row.recall.map_or("-".into(), |v| format!("{:.1}%", v * 100.0));
                        emit(&format!(
                            "{:<6} {:>7} {:>5}/{}\n",
                            row.label.as_str(),
                            rate,
                            row.correct,
                            row.tokens
                        ))?;
                    }
                }
            }
        }
        Command::Confusions {
            matrix,
            k,
            min_fraction,
            out,
            format,
        } => {
            let cm = read_matrix(matrix.as_deref())?;
            let major = major_confusions(&cm, k, min_fraction)?;
            let comparison = compare_with_dictionary(&major, &pronunciation_table());
            let (major_text, comparison_text, ext) = match format {
                Format::Text => {
                    let mut t = String::new();
                    for (l, list) in &major {
                        let names: Vec<&str> = list.iter().map(|p| p.as_str()).collect();
                        t += &format!("{l}: {}\n", if names.is_empty() { "-".into() } else { names.join(" ") });
                    }
                    (t, comparison.to_text(), "txt")
                }
                Format::Csv => {
                    let mut t = String::from("label,confusions\n");
                    for (l, list) in &major {
                        let names: Vec<&str> = list.iter().map(|p| p.as_str()).collect();
                        t += &format!("{l},{}\n", names.join(" "));
                    }
                    (t, comparison.to_csv(), "csv")
                }
            };
            match out {
                Some(dir) => {
                    fs::create_dir_all(&dir)?;
                    fs::write(dir.join(format!("major-confusions.{ext}")), major_text)?;
                    fs::write(dir.join(format!("dictionary-comparison.{ext}")), comparison_text)?;
                    let mut buf = Vec::new();
                    cm.write_csv(&mut buf)?;
                    fs::write(dir.join("confusion.csv"), buf)?;
                }
                None => emit(&format!("{major_text}\n{comparison_text}"))?,
            }
        }
        Command::DeriveTaxonomy {
            matrix,
            tau,
            semivowels_in_vowel_branch,
            max_cluster_size,
            out,
        } => {
            let cm = read_matrix(matrix.as_deref())?;
            let params = HscoParams {
                tau,
                semivowels_in_vowel_branch,
                max_cluster_size,
            };
            let tree = build_hsco(&cm, &params)?;
            write_or_print(out.as_deref(), &tree.to_text())?;
        }
        Command::Run {
            config,
            seed,
            out,
            format,
            save_models,
        } => {
            let cfg = load_config(&config, seed)?;
            let dir = out
                .or_else(|| cfg.out_dir.clone())
                .context("no output directory: pass --out or set out_dir")?;
            let run = run_experiment_with_models(&cfg)?;
            emit_report(&run.report, &dir, format.into())?;
            if save_models {
                for (system, model) in &run.models {
                    model.save(&dir.join("models").join(system.slug()))?;
                }
            }
            emit(&run.report.summary_text())?;
            match format {
                Format::Text => emit(&run.report.table_text())?,
                Format::Csv => emit(&run.report.table_csv())?,
            }
        }
    }
    Ok(())
}
