//! The pretrain / train-bso / decode / eval commands.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{ConstraintChoice, DecodeScore, RunConfig, Task};
use crate::error::{BsoError, Result};
use crate::model::{ModelConfig, ScoreKind, Seq2Seq};
use crate::nn::{LearningRates, SequenceMasks};
use crate::search::{beam_decode, DecodeOptions};
use crate::tasks::corpus::{read_conll, read_plain};
use crate::tasks::parse::{decode_failure_fallback, encode_parse, is_action, ParseExample};
use crate::tasks::vocab::{RESERVED, EOS};
use crate::tasks::{corpus_bleu, make_word_ordering_example, uas_las, Vocab};
use crate::train::{
    curriculum_beam, decode_examples, max_output_len, perplexity, pretrain_epoch, train_bso_epoch, Constraint,
    EpochStats, Example, TrainOptions,
};

pub const CHECKPOINT: &str = "model.bso";
pub const LAST_CHECKPOINT: &str = "last.bso";
pub const SRC_VOCAB: &str = "src.vocab";
pub const TGT_VOCAB: &str = "tgt.vocab";
pub const CONFIG: &str = "config.txt";
pub const LOG: &str = "train.log";
pub const LOG_HEADER: &str = "epoch\tbeam\tloss\tviolation_rate\tdev_metric";

/// One line of the training log.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub beam: usize,
    pub loss: f64,
    pub violation_rate: f64,
    pub dev_metric: f64,
}

impl EpochLog {
    fn line(&self) -> String {
        format!(
            "{}\t{}\t{:.6}\t{:.6}\t{:.6}",
            self.epoch, self.beam, self.loss, self.violation_rate, self.dev_metric
        )
    }
}

/// Reads a training log written by [`cmd_pretrain`] or [`cmd_train_bso`].
pub fn read_log(path: &Path) -> Result<Vec<EpochLog>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next() != Some(LOG_HEADER) {
        return Err(BsoError::Data(format!("{} is not a training log", path.display())));
    }
    lines
        .map(|l| {
            let c: Vec<&str> = l.split('\t').collect();
            let bad = || BsoError::Data(format!("bad log line {l:?}"));
            if c.len() != 5 {
                return Err(bad());
            }
            Ok(EpochLog {
                epoch: c[0].parse().map_err(|_| bad())?,
                beam: c[1].parse().map_err(|_| bad())?,
                loss: c[2].parse().map_err(|_| bad())?,
                violation_rate: c[3].parse().map_err(|_| bad())?,
                dev_metric: c[4].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

/// Vocabularies, examples and the output constraint for one task.
#[derive(Debug, Clone)]
pub struct TaskData {
    pub src_vocab: Vocab,
    pub tgt_vocab: Vocab,
    pub train: Vec<Example>,
    pub dev: Vec<Example>,
    /// Gold trees for the dev set (parsing only).
    pub dev_trees: Vec<ParseExample>,
    /// Constraint used by the training search.
    pub constraint: Constraint,
    /// Constraint used when decoding.
    pub decode_constraint: Constraint,
}

/// Word-ordering examples with a seeded shuffle per sentence.
pub fn word_order_examples(sentences: &[Vec<String>], vocab: &Vocab, seed: u64) -> Vec<Example> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sentences
        .iter()
        .filter(|s| !s.is_empty())
        .map(|s| {
            let (source, target) = make_word_ordering_example(&vocab.encode(s), &mut rng);
            Example {
                output_words: source.clone(),
                source,
                target,
            }
        })
        .collect()
}

fn read_plain_file(path: &Path) -> Result<Vec<Vec<String>>> {
    let f = File::open(path).map_err(|e| BsoError::Input(format!("cannot read {}: {e}", path.display())))?;
    read_plain(BufReader::new(f))
}

fn read_conll_file(path: &Path) -> Result<Vec<ParseExample>> {
    let f = File::open(path).map_err(|e| BsoError::Input(format!("cannot read {}: {e}", path.display())))?;
    read_conll(BufReader::new(f))
}

fn reduce_actions(vocab: &Vocab) -> Vec<usize> {
    vocab.iter().filter(|(_, t)| is_action(t)).map(|(i, _)| i).collect()
}

fn constraint_for(choice: ConstraintChoice, tgt_vocab: &Vocab) -> Constraint {
    match choice {
        ConstraintChoice::None => Constraint::None,
        ConstraintChoice::Permutation => Constraint::Permutation,
        ConstraintChoice::ArcStandard => Constraint::ArcStandard {
            reduce_actions: reduce_actions(tgt_vocab),
        },
    }
}

/// Word orderings are always decoded as permutations of the source, whatever
/// the training constraint was.
fn decode_choice(task: Task, choice: ConstraintChoice) -> ConstraintChoice {
    match task {
        Task::WordOrder => ConstraintChoice::Permutation,
        _ => choice,
    }
}

fn parse_example(p: &ParseExample, src: &Vocab, tgt: &Vocab) -> Result<Example> {
    let mut target = tgt.encode(&encode_parse(p)?);
    target.push(EOS);
    Ok(Example {
        source: src.encode(&p.words),
        target,
        output_words: tgt.encode(&p.words),
    })
}

/// Encodes projective trees, skipping (and counting) the rest.
fn parse_examples(trees: &[ParseExample], src: &Vocab, tgt: &Vocab) -> (Vec<Example>, Vec<ParseExample>) {
    let mut out = Vec::new();
    let mut kept = Vec::new();
    for p in trees {
        match parse_example(p, src, tgt) {
            Ok(e) => {
                out.push(e);
                kept.push(p.clone());
            }
            Err(_) => {}
        }
    }
    let skipped = trees.len() - out.len();
    if skipped > 0 {
        warn!("skipped {skipped} of {} trees that are not projective or not well formed", trees.len());
    }
    (out, kept)
}

/// Loads `train` and `dev` for the configured task. Existing vocabularies
/// (from a pretrained run) are reused when given.
pub fn load_task_data(cfg: &RunConfig, vocabs: Option<(Vocab, Vocab)>) -> Result<TaskData> {
    let dir = &cfg.data_dir;
    match cfg.task {
        Task::WordOrder => {
            let train = read_plain_file(&dir.join("train.txt"))?;
            let dev = read_plain_file(&dir.join("dev.txt"))?;
            let (src_vocab, tgt_vocab) = vocabs.unwrap_or_else(|| {
                let v = Vocab::build(&train, cfg.min_count);
                (v.clone(), v)
            });
            Ok(TaskData {
                train: word_order_examples(&train, &tgt_vocab, cfg.seed),
                dev: word_order_examples(&dev, &tgt_vocab, cfg.seed ^ 0xdead_beef),
                constraint: constraint_for(cfg.constraint, &tgt_vocab),
                decode_constraint: constraint_for(ConstraintChoice::Permutation, &tgt_vocab),
                src_vocab,
                tgt_vocab,
                dev_trees: Vec::new(),
            })
        }
        Task::Parse => {
            let train = read_conll_file(&dir.join("train.conll"))?;
            let dev = read_conll_file(&dir.join("dev.conll"))?;
            let (src_vocab, tgt_vocab) = match vocabs {
                Some(v) => v,
                None => {
                    let words: Vec<Vec<String>> = train.iter().map(|p| p.words.clone()).collect();
                    let src = Vocab::build(&words, cfg.min_count);
                    let mut tgt = src.clone();
                    for p in &train {
                        if let Ok(seq) = encode_parse(p) {
                            for a in seq.iter().filter(|t| is_action(t)) {
                                tgt.add(a);
                            }
                        }
                    }
                    (src, tgt)
                }
            };
            let (train, _) = parse_examples(&train, &src_vocab, &tgt_vocab);
            let (dev, dev_trees) = parse_examples(&dev, &src_vocab, &tgt_vocab);
            Ok(TaskData {
                constraint: constraint_for(cfg.constraint, &tgt_vocab),
                decode_constraint: constraint_for(cfg.constraint, &tgt_vocab),
                src_vocab,
                tgt_vocab,
                train,
                dev,
                dev_trees,
            })
        }
        Task::Translate => {
            let read_pair = |split: &str| -> Result<(Vec<Vec<String>>, Vec<Vec<String>>)> {
                let s = read_plain_file(&dir.join(format!("{split}.src")))?;
                let t = read_plain_file(&dir.join(format!("{split}.tgt")))?;
                if s.len() != t.len() {
                    return Err(BsoError::Data(format!("{split}.src and {split}.tgt differ in length")));
                }
                Ok((s, t))
            };
            let (train_s, train_t) = read_pair("train")?;
            let (dev_s, dev_t) = read_pair("dev")?;
            let (src_vocab, tgt_vocab) = vocabs
                .unwrap_or_else(|| (Vocab::build(&train_s, cfg.min_count), Vocab::build(&train_t, cfg.min_count)));
            let pairs = |s: &[Vec<String>], t: &[Vec<String>]| -> Vec<Example> {
                s.iter()
                    .zip(t)
                    .filter(|(a, b)| !a.is_empty() && !b.is_empty())
                    .map(|(a, b)| {
                        let mut target = tgt_vocab.encode(b);
                        target.push(EOS);
                        Example {
                            source: src_vocab.encode(a),
                            target,
                            output_words: Vec::new(),
                        }
                    })
                    .collect()
            };
            Ok(TaskData {
                train: pairs(&train_s, &train_t),
                dev: pairs(&dev_s, &dev_t),
                constraint: Constraint::None,
                decode_constraint: Constraint::None,
                src_vocab,
                tgt_vocab,
                dev_trees: Vec::new(),
            })
        }
    }
}

fn strip_eos(tokens: &[usize]) -> &[usize] {
    match tokens.iter().position(|&w| w == EOS) {
        Some(i) => &tokens[..i],
        None => tokens,
    }
}

/// Dev BLEU (word ordering, translation) or UAS (parsing) at test beam `beam`.
pub fn dev_metric(model: &Seq2Seq, data: &TaskData, task: Task, beam: usize, score: ScoreKind) -> Result<f64> {
    let out = decode_examples(model, &data.dev, &data.decode_constraint, beam, score)?;
    match task {
        Task::WordOrder | Task::Translate => {
            let hyps: Vec<&[usize]> = out.iter().map(|o| strip_eos(o)).collect();
            let refs: Vec<&[usize]> = data.dev.iter().map(|e| strip_eos(&e.target)).collect();
            Ok(corpus_bleu(&hyps, &refs, 4))
        }
        Task::Parse => {
            let pred: Vec<ParseExample> = out
                .iter()
                .zip(&data.dev_trees)
                .map(|(o, g)| {
                    let toks: Vec<&str> = o.iter().map(|&i| data.tgt_vocab.token(i)).collect();
                    decode_failure_fallback(&g.words, &toks, RESERVED[EOS])
                })
                .collect();
            Ok(uas_las(&pred, &data.dev_trees)?.0)
        }
    }
}

fn train_options(cfg: &RunConfig) -> TrainOptions {
    TrainOptions {
        batch_size: cfg.batch_size,
        rates: LearningRates {
            recurrent: cfg.lr_recurrent,
            output: cfg.lr_output,
        },
        clip: cfg.clip,
        seed: cfg.seed,
        margin: cfg.margin_score,
        delta: cfg.delta,
    }
}

fn out_dir(cfg: &RunConfig) -> Result<&Path> {
    let dir = cfg
        .model_out
        .as_deref()
        .ok_or_else(|| BsoError::Config("no output directory given (model_out)".into()))?;
    fs::create_dir_all(dir)?;
    Ok(dir)
}

fn save_model(model: &Seq2Seq, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    model.save(&mut w)?;
    w.flush()?;
    Ok(())
}

fn save_vocab(v: &Vocab, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    v.write(&mut w)?;
    w.flush()?;
    Ok(())
}

/// A trained model with its vocabularies, as stored in a run directory.
pub struct RunDir {
    pub model: Seq2Seq,
    pub src_vocab: Vocab,
    pub tgt_vocab: Vocab,
}

pub fn load_run_dir(dir: &Path) -> Result<RunDir> {
    let open = |name: &str| -> Result<BufReader<File>> {
        let p = dir.join(name);
        File::open(&p)
            .map(BufReader::new)
            .map_err(|e| BsoError::Checkpoint(format!("cannot read {}: {e}", p.display())))
    };
    let model = Seq2Seq::load(&mut open(CHECKPOINT)?)?;
    let src_vocab = Vocab::read(open(SRC_VOCAB)?)?;
    let tgt_vocab = Vocab::read(open(TGT_VOCAB)?)?;
    if src_vocab.len() != model.config().src_vocab || tgt_vocab.len() != model.config().tgt_vocab {
        return Err(BsoError::Checkpoint("vocabulary sizes do not match the checkpoint".into()));
    }
    Ok(RunDir {
        model,
        src_vocab,
        tgt_vocab,
    })
}

/// Reads `config.txt` of a run directory on top of the defaults, if present.
pub fn run_dir_config(dir: &Path) -> Result<Option<RunConfig>> {
    let p = dir.join(CONFIG);
    if !p.exists() {
        return Ok(None);
    }
    Ok(Some(RunConfig::from_text(&fs::read_to_string(p)?)?))
}

struct RunWriter {
    dir: PathBuf,
    log: BufWriter<File>,
    epochs: Vec<EpochLog>,
}

impl RunWriter {
    fn create(dir: &Path, cfg: &RunConfig, data: &TaskData) -> Result<Self> {
        fs::write(dir.join(CONFIG), cfg.to_text())?;
        save_vocab(&data.src_vocab, &dir.join(SRC_VOCAB))?;
        save_vocab(&data.tgt_vocab, &dir.join(TGT_VOCAB))?;
        let mut log = BufWriter::new(File::create(dir.join(LOG))?);
        writeln!(log, "{LOG_HEADER}")?;
        Ok(Self {
            dir: dir.to_path_buf(),
            log,
            epochs: Vec::new(),
        })
    }

    fn epoch(&mut self, stats: &EpochStats, dev_metric: f64, model: &Seq2Seq) -> Result<()> {
        let e = EpochLog {
            epoch: stats.epoch,
            beam: stats.beam,
            loss: stats.loss,
            violation_rate: stats.violation_rate,
            dev_metric,
        };
        writeln!(self.log, "{}", e.line())?;
        self.log.flush()?;
        info!(
            "epoch {} beam {} loss {:.4} violations/token {:.4} dev {:.4} ({:.0} tokens/s)",
            e.epoch, e.beam, e.loss, e.violation_rate, e.dev_metric, stats.tokens_per_sec
        );
        self.epochs.push(e);
        save_model(model, &self.dir.join(LAST_CHECKPOINT))
    }

    fn best(&self, model: &Seq2Seq) -> Result<()> {
        save_model(model, &self.dir.join(CHECKPOINT))
    }
}

/// Cross-entropy pretraining with early stopping on dev perplexity.
pub fn cmd_pretrain(cfg: &RunConfig) -> Result<Vec<EpochLog>> {
    cfg.validate()?;
    let (mut model, data) = match &cfg.model_in {
        Some(dir) => {
            let run = load_run_dir(dir)?;
            let data = load_task_data(cfg, Some((run.src_vocab, run.tgt_vocab)))?;
            (run.model, data)
        }
        None => {
            let data = load_task_data(cfg, None)?;
            let mut mc = ModelConfig::new(
                data.src_vocab.len(),
                data.tgt_vocab.len(),
                cfg.emb_dim,
                cfg.hidden_dim,
                cfg.layers,
            );
            mc.dropout = cfg.dropout;
            mc.init_scale = cfg.init_scale;
            (Seq2Seq::new(mc, cfg.seed)?, data)
        }
    };
    if data.train.is_empty() || data.dev.is_empty() {
        return Err(BsoError::Data("training and dev sets must be nonempty".into()));
    }
    let dir = out_dir(cfg)?;
    let mut echo = cfg.clone();
    echo.decode_score = DecodeScore::LogProb;
    let mut run = RunWriter::create(dir, &echo, &data)?;
    let opts = train_options(cfg);
    let (mut best, mut bad) = (f64::INFINITY, 0);
    for epoch in 1..=cfg.pretrain_epochs {
        let stats = pretrain_epoch(&mut model, &data.train, &opts, epoch)?;
        let ppl = perplexity(&model, &data.dev)?;
        run.epoch(&stats, ppl, &model)?;
        if ppl < best {
            best = ppl;
            bad = 0;
            run.best(&model)?;
        } else {
            bad += 1;
            if bad >= cfg.patience {
                info!("dev perplexity stopped improving after epoch {epoch}");
                break;
            }
        }
    }
    Ok(run.epochs)
}

/// Curriculum BSO training from a pretrained run directory.
pub fn cmd_train_bso(cfg: &RunConfig, allow_cold_start: bool) -> Result<Vec<EpochLog>> {
    cfg.validate()?;
    let (mut model, data) = match &cfg.model_in {
        Some(dir) => {
            let run = load_run_dir(dir)?;
            let data = load_task_data(cfg, Some((run.src_vocab, run.tgt_vocab)))?;
            (run.model, data)
        }
        None if allow_cold_start => {
            warn!("training BSO from a random initialization; without pretraining the model is unlikely to learn");
            let data = load_task_data(cfg, None)?;
            let mut mc = ModelConfig::new(
                data.src_vocab.len(),
                data.tgt_vocab.len(),
                cfg.emb_dim,
                cfg.hidden_dim,
                cfg.layers,
            );
            mc.dropout = cfg.dropout;
            mc.init_scale = cfg.init_scale;
            (Seq2Seq::new(mc, cfg.seed)?, data)
        }
        None => {
            return Err(BsoError::Config(
                "BSO training needs a pretrained model (model_in); pass --allow-cold-start to override".into(),
            ))
        }
    };
    if data.train.is_empty() || data.dev.is_empty() {
        return Err(BsoError::Data("training and dev sets must be nonempty".into()));
    }
    let dir = out_dir(cfg)?;
    let mut echo = cfg.clone();
    echo.decode_score = DecodeScore::Raw;
    let mut run = RunWriter::create(dir, &echo, &data)?;
    let opts = train_options(cfg);
    let sched = cfg.curriculum();
    let mut best = f64::NEG_INFINITY;
    let mut bad = 0;
    for epoch in 1..=cfg.bso_epochs {
        let beam = curriculum_beam(epoch, &sched);
        let stats = train_bso_epoch(&mut model, &data.train, &data.constraint, &opts, epoch, beam)?;
        let metric = dev_metric(&model, &data, cfg.task, cfg.beam_test, ScoreKind::Raw)?;
        run.epoch(&stats, metric, &model)?;
        if metric > best {
            best = metric;
            bad = 0;
            run.best(&model)?;
        } else if beam == cfg.beam_train {
            // stalls while the beam is still growing don't count
            bad += 1;
            if bad >= cfg.patience {
                info!("dev metric stalled for {bad} epochs at the full beam; stopping after epoch {epoch}");
                break;
            }
        }
    }
    Ok(run.epochs)
}

/// Decoded output lines for the source sentences in `input`, optionally
/// with the cumulative score in a second tab-separated column.
pub fn cmd_decode(cfg: &RunConfig, input: &[Vec<String>], with_scores: bool) -> Result<Vec<String>> {
    let dir = cfg
        .model_in
        .as_deref()
        .ok_or_else(|| BsoError::Config("decode needs a model directory (model_in)".into()))?;
    let run = load_run_dir(dir)?;
    let constraint = constraint_for(decode_choice(cfg.task, cfg.constraint), &run.tgt_vocab);
    let score = match cfg.decode_score {
        DecodeScore::LogProb => ScoreKind::LogProb,
        DecodeScore::Raw => ScoreKind::Raw,
    };
    let vocab = run.model.config().tgt_vocab;
    input
        .iter()
        .map(|words| {
            if words.is_empty() {
                return Err(BsoError::Input("empty input line".into()));
            }
            let ex = Example {
                source: run.src_vocab.encode(words),
                target: Vec::new(),
                output_words: run.tgt_vocab.encode(words),
            };
            let succ = constraint.successors(&ex, vocab);
            let (enc, _) = run.model.encode(&ex.source, &SequenceMasks::none())?;
            let d = beam_decode(
                &run.model,
                &enc,
                &succ,
                DecodeOptions {
                    beam: cfg.beam_test,
                    max_len: max_output_len(&succ, &ex),
                    score,
                },
            )?;
            let text: Vec<&str> = strip_eos(&d.tokens).iter().map(|&i| run.tgt_vocab.token(i)).collect();
            let text = text.join(" ");
            Ok(if with_scores {
                format!("{text}\t{:.6}", d.score)
            } else {
                text
            })
        })
        .collect()
}

/// Metric report (TSV) for decoded hypotheses against references: BLEU for
/// plain-text tasks; UAS and LAS for parsing, where hypotheses are action
/// sequences and references a CoNLL file.
pub fn cmd_eval(task: Task, hypotheses: &Path, references: &Path) -> Result<String> {
    let hyps = read_plain_file(hypotheses)?;
    match task {
        Task::WordOrder | Task::Translate => {
            let refs = read_plain_file(references)?;
            if hyps.len() != refs.len() {
                return Err(BsoError::Input(format!(
                    "{} hypotheses but {} references",
                    hyps.len(),
                    refs.len()
                )));
            }
            Ok(format!("metric\tvalue\nbleu\t{:.4}\n", corpus_bleu(&hyps, &refs, 4)))
        }
        Task::Parse => {
            let gold = read_conll_file(references)?;
            if hyps.len() != gold.len() {
                return Err(BsoError::Input(format!(
                    "{} hypotheses but {} reference trees",
                    hyps.len(),
                    gold.len()
                )));
            }
            let pred: Vec<ParseExample> = hyps
                .iter()
                .zip(&gold)
                .map(|(h, g)| decode_failure_fallback(&g.words, h, RESERVED[EOS]))
                .collect();
            let (uas, las) = uas_las(&pred, &gold)?;
            Ok(format!("metric\tvalue\nuas\t{uas:.4}\nlas\t{las:.4}\n"))
        }
    }
}
