use std::fmt::Write as _;

use crate::error::{BsoError, Result};

/// Architecture and initialization settings for [`super::Seq2Seq`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub src_vocab: usize,
    pub tgt_vocab: usize,
    pub emb_dim: usize,
    pub hidden_dim: usize,
    pub layers: usize,
    /// Dropout rate between stacked LSTM layers.
    pub dropout: f64,
    /// Parameters are drawn uniformly from `[-init_scale, init_scale]`.
    pub init_scale: f32,
}

/// Only the dot-product member of the global attention family is implemented.
pub const ATTENTION_VARIANT: &str = "global-dot";

impl ModelConfig {
    pub fn new(src_vocab: usize, tgt_vocab: usize, emb_dim: usize, hidden_dim: usize, layers: usize) -> Self {
        Self {
            src_vocab,
            tgt_vocab,
            emb_dim,
            hidden_dim,
            layers,
            dropout: 0.0,
            init_scale: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("src_vocab", self.src_vocab),
            ("tgt_vocab", self.tgt_vocab),
            ("emb_dim", self.emb_dim),
            ("hidden_dim", self.hidden_dim),
            ("layers", self.layers),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(BsoError::Config(format!("{name} must be positive")));
            }
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(BsoError::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if !(self.init_scale > 0.0) {
            return Err(BsoError::Config("init_scale must be positive".into()));
        }
        Ok(())
    }

    pub fn to_header(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "src_vocab = {}", self.src_vocab);
        let _ = writeln!(s, "tgt_vocab = {}", self.tgt_vocab);
        let _ = writeln!(s, "emb_dim = {}", self.emb_dim);
        let _ = writeln!(s, "hidden_dim = {}", self.hidden_dim);
        let _ = writeln!(s, "layers = {}", self.layers);
        let _ = writeln!(s, "dropout = {}", self.dropout);
        let _ = writeln!(s, "init_scale = {}", self.init_scale);
        let _ = writeln!(s, "attention = {ATTENTION_VARIANT}");
        s
    }

    pub fn from_header(header: &str) -> Result<Self> {
        let mut cfg = ModelConfig::new(0, 0, 0, 0, 0);
        let mut attention = None;
        for line in header.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| BsoError::Checkpoint(format!("malformed header line {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "src_vocab" => cfg.src_vocab = parse(key, value)?,
                "tgt_vocab" => cfg.tgt_vocab = parse(key, value)?,
                "emb_dim" => cfg.emb_dim = parse(key, value)?,
                "hidden_dim" => cfg.hidden_dim = parse(key, value)?,
                "layers" => cfg.layers = parse(key, value)?,
                "dropout" => cfg.dropout = parse(key, value)?,
                "init_scale" => cfg.init_scale = parse(key, value)?,
                "attention" => attention = Some(value.to_string()),
                _ => return Err(BsoError::Checkpoint(format!("unknown header key {key:?}"))),
            }
        }
        match attention.as_deref() {
            Some(ATTENTION_VARIANT) => {}
            other => {
                return Err(BsoError::Checkpoint(format!(
                    "unsupported attention variant {other:?}"
                )))
            }
        }
        cfg.validate().map_err(|e| BsoError::Checkpoint(e.to_string()))?;
        Ok(cfg)
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| BsoError::Checkpoint(format!("bad value for {key}: {value:?}")))
}
