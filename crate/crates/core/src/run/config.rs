//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{BsoError, Result};
use crate::train::{CurriculumSchedule, DeltaKind, MarginScore};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    WordOrder,
    Parse,
    Translate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintChoice {
    None,
    Permutation,
    ArcStandard,
}

macro_rules! keyword_enum {
    ($ty:ty, $what:literal, $($variant:path => $name:literal),+ $(,)?) => {
        impl FromStr for $ty {
            type Err = BsoError;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok($variant),)+
                    _ => Err(BsoError::Config(format!(concat!("unknown ", $what, " {:?}"), s))),
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self {
                    $($variant => $name,)+
                })
            }
        }
    };
}

keyword_enum!(Task, "task", Task::WordOrder => "word_order", Task::Parse => "parse", Task::Translate => "translate");
keyword_enum!(
    ConstraintChoice,
    "constraint",
    ConstraintChoice::None => "none",
    ConstraintChoice::Permutation => "permutation",
    ConstraintChoice::ArcStandard => "arc_standard",
);
keyword_enum!(MarginScore, "margin score", MarginScore::Cumulative => "cumulative", MarginScore::LastStep => "laststep");
keyword_enum!(DeltaKind, "delta", DeltaKind::ZeroOne => "zero_one", DeltaKind::SentenceBleu => "sentence_bleu");

/// Which next-word scores drive test-time search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeScore {
    LogProb,
    Raw,
}

keyword_enum!(DecodeScore, "decode score", DecodeScore::LogProb => "logprob", DecodeScore::Raw => "raw");

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub task: Task,
    pub constraint: ConstraintChoice,
    pub emb_dim: usize,
    pub hidden_dim: usize,
    pub layers: usize,
    pub dropout: f64,
    pub init_scale: f32,
    pub beam_train: usize,
    pub beam_test: usize,
    pub margin_score: MarginScore,
    pub delta: DeltaKind,
    pub decode_score: DecodeScore,
    pub lr_recurrent: f64,
    pub lr_output: f64,
    pub clip: f64,
    pub batch_size: usize,
    pub curriculum_start: usize,
    pub curriculum_increment: usize,
    pub curriculum_epochs_per_increment: usize,
    pub pretrain_epochs: usize,
    pub bso_epochs: usize,
    pub patience: usize,
    pub min_count: usize,
    pub seed: u64,
    pub data_dir: PathBuf,
    pub model_in: Option<PathBuf>,
    pub model_out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            task: Task::WordOrder,
            constraint: ConstraintChoice::Permutation,
            emb_dim: 64,
            hidden_dim: 128,
            layers: 2,
            dropout: 0.2,
            init_scale: 0.1,
            beam_train: 6,
            beam_test: 5,
            margin_score: MarginScore::Cumulative,
            delta: DeltaKind::ZeroOne,
            decode_score: DecodeScore::LogProb,
            lr_recurrent: 0.02,
            lr_output: 0.1,
            clip: 5.0,
            batch_size: 16,
            curriculum_start: 2,
            curriculum_increment: 1,
            curriculum_epochs_per_increment: 2,
            pretrain_epochs: 30,
            bso_epochs: 12,
            patience: 3,
            min_count: 2,
            seed: 1,
            data_dir: PathBuf::from("data"),
            model_in: None,
            model_out: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| BsoError::Config(format!("bad value {value:?} for {key}")))
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "task" => self.task = value.parse()?,
            "constraint" => self.constraint = value.parse()?,
            "emb_dim" => self.emb_dim = parse(key, value)?,
            "hidden_dim" => self.hidden_dim = parse(key, value)?,
            "layers" => self.layers = parse(key, value)?,
            "dropout" => self.dropout = parse(key, value)?,
            "init_scale" => self.init_scale = parse(key, value)?,
            "beam_train" => self.beam_train = parse(key, value)?,
            "beam_test" => self.beam_test = parse(key, value)?,
            "margin_score" => self.margin_score = value.parse()?,
            "delta" => self.delta = value.parse()?,
            "decode_score" => self.decode_score = value.parse()?,
            "lr_recurrent" => self.lr_recurrent = parse(key, value)?,
            "lr_output" => self.lr_output = parse(key, value)?,
            "clip" => self.clip = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "curriculum_start" => self.curriculum_start = parse(key, value)?,
            "curriculum_increment" => self.curriculum_increment = parse(key, value)?,
            "curriculum_epochs_per_increment" => self.curriculum_epochs_per_increment = parse(key, value)?,
            "pretrain_epochs" => self.pretrain_epochs = parse(key, value)?,
            "bso_epochs" => self.bso_epochs = parse(key, value)?,
            "patience" => self.patience = parse(key, value)?,
            "min_count" => self.min_count = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "data_dir" => self.data_dir = PathBuf::from(value),
            "model_in" => self.model_in = Some(PathBuf::from(value)),
            "model_out" => self.model_out = Some(PathBuf::from(value)),
            _ => return Err(BsoError::Config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Applies settings from config-file text on top of `self`. Blank lines
    /// and lines starting with `#` are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| BsoError::Config(format!("line {}: expected key = value", i + 1)))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = Self::default();
        c.apply_text(text)?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(BsoError::Config(m));
        match (self.task, self.constraint) {
            (Task::WordOrder, ConstraintChoice::ArcStandard)
            | (Task::Parse, ConstraintChoice::Permutation)
            | (Task::Translate, ConstraintChoice::Permutation | ConstraintChoice::ArcStandard) => {
                return bad(format!("constraint {} does not fit task {}", self.constraint, self.task));
            }
            _ => {}
        }
        if self.beam_train < 2 {
            return bad("beam_train must be at least 2".into());
        }
        if self.beam_test < 1 {
            return bad("beam_test must be at least 1".into());
        }
        if self.curriculum_start < 1 || self.curriculum_epochs_per_increment < 1 {
            return bad("curriculum_start and curriculum_epochs_per_increment must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must be in [0, 1)".into());
        }
        if self.batch_size == 0 || self.emb_dim == 0 || self.hidden_dim == 0 || self.layers == 0 {
            return bad("batch_size and model sizes must be positive".into());
        }
        if self.clip <= 0.0 || self.lr_recurrent <= 0.0 || self.lr_output <= 0.0 {
            return bad("clip and learning rates must be positive".into());
        }
        Ok(())
    }

    pub fn curriculum(&self) -> CurriculumSchedule {
        CurriculumSchedule {
            start: self.curriculum_start,
            increment: self.curriculum_increment,
            epochs_per_increment: self.curriculum_epochs_per_increment,
            target: self.beam_train,
        }
    }

    /// Every key with its current value, in file syntax.
    pub fn to_text(&self) -> String {
        let mut m: BTreeMap<&str, String> = BTreeMap::new();
        m.insert("task", self.task.to_string());
        m.insert("constraint", self.constraint.to_string());
        m.insert("emb_dim", self.emb_dim.to_string());
        m.insert("hidden_dim", self.hidden_dim.to_string());
        m.insert("layers", self.layers.to_string());
        m.insert("dropout", self.dropout.to_string());
        m.insert("init_scale", self.init_scale.to_string());
        m.insert("beam_train", self.beam_train.to_string());
        m.insert("beam_test", self.beam_test.to_string());
        m.insert("margin_score", self.margin_score.to_string());
        m.insert("delta", self.delta.to_string());
        m.insert("decode_score", self.decode_score.to_string());
        m.insert("lr_recurrent", self.lr_recurrent.to_string());
        m.insert("lr_output", self.lr_output.to_string());
        m.insert("clip", self.clip.to_string());
        m.insert("batch_size", self.batch_size.to_string());
        m.insert("curriculum_start", self.curriculum_start.to_string());
        m.insert("curriculum_increment", self.curriculum_increment.to_string());
        m.insert(
            "curriculum_epochs_per_increment",
            self.curriculum_epochs_per_increment.to_string(),
        );
        m.insert("pretrain_epochs", self.pretrain_epochs.to_string());
        m.insert("bso_epochs", self.bso_epochs.to_string());
        m.insert("patience", self.patience.to_string());
        m.insert("min_count", self.min_count.to_string());
        m.insert("seed", self.seed.to_string());
        m.insert("data_dir", self.data_dir.display().to_string());
        if let Some(p) = &self.model_in {
            m.insert("model_in", p.display().to_string());
        }
        if let Some(p) = &self.model_out {
            m.insert("model_out", p.display().to_string());
        }
        m.into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}
