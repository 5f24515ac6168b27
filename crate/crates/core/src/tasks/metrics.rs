//! Attachment scores.

use super::parse::ParseExample;
use crate::error::{BsoError, Result};

/// A token is punctuation when every character is ASCII punctuation
/// (``!"#$%&'()*+,-./:;<=>?@[\]^_`{|}~``).
pub fn is_punctuation(token: &str) -> bool {
    !token.is_empty() && token.chars().all(|c| c.is_ascii_punctuation())
}

/// Unlabeled and labeled attachment scores in percent, skipping punctuation.
///
/// The label of a word attached to the root is not part of the action
/// encoding, so a correct root attachment counts as correctly labeled.
pub fn uas_las(predicted: &[ParseExample], gold: &[ParseExample]) -> Result<(f64, f64)> {
    if predicted.len() != gold.len() {
        return Err(BsoError::Input(format!(
            "{} predicted parses for {} gold parses",
            predicted.len(),
            gold.len()
        )));
    }
    let (mut total, mut unlabeled, mut labeled) = (0usize, 0usize, 0usize);
    for (p, g) in predicted.iter().zip(gold) {
        if p.len() != g.len() {
            return Err(BsoError::Input("predicted and gold sentence lengths differ".into()));
        }
        for i in 0..g.len() {
            if is_punctuation(&g.words[i]) {
                continue;
            }
            total += 1;
            if p.heads[i] == g.heads[i] {
                unlabeled += 1;
                if g.heads[i] == 0 || p.labels[i] == g.labels[i] {
                    labeled += 1;
                }
            }
        }
    }
    if total == 0 {
        return Ok((0.0, 0.0));
    }
    let pct = |k: usize| 100.0 * k as f64 / total as f64;
    Ok((pct(unlabeled), pct(labeled)))
}
