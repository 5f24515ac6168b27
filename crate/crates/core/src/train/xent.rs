//! Word-level cross-entropy with teacher forcing.

use crate::error::{BsoError, Result};
use crate::model::{ScoreGrad, ScoreKind, Seq2Seq};
use crate::nn::SequenceMasks;
use crate::tasks::vocab::EOS;

fn check_gold(gold: &[usize]) -> Result<()> {
    match gold.last() {
        Some(&EOS) => Ok(()),
        Some(_) => Err(BsoError::Input("gold sequence must end with EOS".into())),
        None => Err(BsoError::Input("empty gold sequence".into())),
    }
}

/// Negative log-likelihood of `gold` without touching gradients.
pub fn xent_value(model: &Seq2Seq, source: &[usize], gold: &[usize], masks: &SequenceMasks) -> Result<f64> {
    check_gold(gold)?;
    let (enc, _) = model.encode(source, masks)?;
    let path = model.run_forced(&enc, gold, masks)?;
    Ok(-model.path_scores(&path, ScoreKind::LogProb).iter().sum::<f64>())
}

/// Negative log-likelihood of `gold`; its gradient is added to the model.
pub fn xent_loss(model: &mut Seq2Seq, source: &[usize], gold: &[usize], masks: &SequenceMasks) -> Result<f64> {
    check_gold(gold)?;
    xent_loss_weighted(model, source, gold, &vec![1.0; gold.len()], masks)
}

/// Cross-entropy with a weight per target position. Positions with weight 0
/// (padding) contribute nothing; decoding stops after the last weighted position.
pub fn xent_loss_weighted(
    model: &mut Seq2Seq,
    source: &[usize],
    tokens: &[usize],
    weights: &[f64],
    masks: &SequenceMasks,
) -> Result<f64> {
    if weights.len() != tokens.len() {
        return Err(BsoError::Input("one weight per target position required".into()));
    }
    let Some(last) = weights.iter().rposition(|&w| w != 0.0) else {
        return Ok(0.0);
    };
    let tokens = &tokens[..=last];
    let (enc, enc_cache) = model.encode(source, masks)?;
    let mut path = model.run_forced(&enc, tokens, masks)?;
    let mut loss = 0.0;
    let mut grads = Vec::with_capacity(tokens.len());
    for (s, (out, &w)) in path.outputs.iter().zip(tokens).enumerate() {
        let k = weights[s];
        if k == 0.0 {
            grads.push(ScoreGrad::None);
            continue;
        }
        let lp = model.score_g(out);
        loss -= k * lp[w];
        let mut d: Vec<f64> = lp.iter().map(|v| k * v.exp()).collect();
        d[w] -= k;
        grads.push(ScoreGrad::Dense(d));
    }
    let mut d_ann = model.zero_annotation_grads(source.len());
    let d_init = model.backprop_forced(&mut path, &enc, &grads, &mut d_ann)?;
    let d_init = model.init_state_grad(&d_init);
    model.encode_backward(enc_cache, &d_ann, &d_init)?;
    Ok(loss)
}
