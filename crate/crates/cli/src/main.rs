use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use bso::run::{self, RunConfig, Task};
use bso::tasks::corpus::read_plain;
use bso::train::DeltaKind;
use clap::{Args, Parser, Subcommand};

/// Beam search optimization for sequence-to-sequence models.
#[derive(Parser)]
#[command(name = "bso", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cross-entropy pretraining with early stopping on dev perplexity.
    Pretrain(Common),
    /// Curriculum beam search optimization from a pretrained model.
    TrainBso {
        #[command(flatten)]
        common: Common,
        /// Start from random parameters when no pretrained model is given.
        #[arg(long)]
        allow_cold_start: bool,
    },
    /// Beam-decodes one source sentence per input line.
    Decode {
        #[command(flatten)]
        common: Common,
        /// Source sentences, one per line.
        #[arg(long, short)]
        input: PathBuf,
        /// Defaults to standard output.
        #[arg(long, short)]
        output: Option<PathBuf>,
        /// Append the sequence score as a tab-separated column.
        #[arg(long)]
        scores: bool,
    },
    /// Scores hypotheses against references and prints a TSV report.
    Eval {
        #[arg(long)]
        task: Task,
        /// One decoded output per line.
        #[arg(long)]
        hyp: PathBuf,
        /// Plain text for BLEU; CoNLL for parsing.
        #[arg(long = "ref")]
        reference: PathBuf,
    },
}

/// Settings shared by the training and decoding commands. Flags override
/// the config file.
#[derive(Args)]
struct Common {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Run directory to start from (pretrained or trained model).
    #[arg(long)]
    model_in: Option<PathBuf>,
    /// Run directory to write.
    #[arg(long)]
    model_out: Option<PathBuf>,
    /// Training beam for train-bso, test beam for decode.
    #[arg(long)]
    beam: Option<usize>,
    #[arg(long)]
    task: Option<Task>,
    #[arg(long)]
    constraint: Option<run::ConstraintChoice>,
    #[arg(long)]
    delta: Option<DeltaKind>,
    #[arg(long)]
    seed: Option<u64>,
    /// Extra `key=value` settings, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Clone, Copy, PartialEq)]
enum Role {
    Train,
    Decode,
}

impl Common {
    fn resolve(&self, role: Role) -> Result<RunConfig> {
        // a decode starts from the configuration the model was trained with
        let mut cfg = match (role, &self.model_in) {
            (Role::Decode, Some(dir)) => run::run_dir_config(dir)?.unwrap_or_default(),
            _ => RunConfig::default(),
        };
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            cfg.apply_text(&text)?;
        }
        if let Some(v) = &self.data_dir {
            cfg.data_dir = v.clone();
        }
        if let Some(v) = &self.model_in {
            cfg.model_in = Some(v.clone());
        }
        if let Some(v) = &self.model_out {
            cfg.model_out = Some(v.clone());
        }
        if let Some(v) = self.task {
            cfg.task = v;
        }
        if let Some(v) = self.constraint {
            cfg.constraint = v;
        }
        if let Some(v) = self.delta {
            cfg.delta = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(k) = self.beam {
            match role {
                Role::Train => cfg.beam_train = k,
                Role::Decode => cfg.beam_test = k,
            }
        }
        for kv in &self.set {
            let (k, v) = kv.split_once('=').with_context(|| format!("--set expects KEY=VALUE, got {kv:?}"))?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn summarize(epochs: &[run::EpochLog]) {
    if let Some(last) = epochs.last() {
        log::info!("{} epochs, last dev metric {:.4}", epochs.len(), last.dev_metric);
    }
}

fn read_lines(path: &Path) -> Result<Vec<Vec<String>>> {
    let f = File::open(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(read_plain(BufReader::new(f))?)
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Pretrain(common) => summarize(&run::cmd_pretrain(&common.resolve(Role::Train)?)?),
        Command::TrainBso { common, allow_cold_start } => {
            summarize(&run::cmd_train_bso(&common.resolve(Role::Train)?, allow_cold_start)?)
        }
        Command::Decode {
            common,
            input,
            output,
            scores,
        } => {
            let cfg = common.resolve(Role::Decode)?;
            let lines = run::cmd_decode(&cfg, &read_lines(&input)?, scores)?;
            let mut out: Box<dyn Write> = match output {
                Some(p) => Box::new(BufWriter::new(
                    File::create(&p).with_context(|| format!("cannot write {}", p.display()))?,
                )),
                None => Box::new(BufWriter::new(io::stdout().lock())),
            };
            for l in lines {
                writeln!(out, "{l}")?;
            }
            out.flush()?;
        }
        Command::Eval { task, hyp, reference } => {
            print!("{}", run::cmd_eval(task, &hyp, &reference)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bso: {e:#}");
            ExitCode::FAILURE
        }
    }
}
