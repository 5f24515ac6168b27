//! Word ordering: recover a sentence from a shuffled bag of its words.

use rand::seq::SliceRandom;
use rand::Rng;

use super::vocab::EOS;

/// Returns `(source, target)`: a uniform shuffle of `sentence` and the
/// sentence itself followed by EOS.
pub fn make_word_ordering_example<R: Rng + ?Sized>(sentence: &[usize], rng: &mut R) -> (Vec<usize>, Vec<usize>) {
    let mut source = sentence.to_vec();
    source.shuffle(rng);
    let mut target = Vec::with_capacity(sentence.len() + 1);
    target.extend_from_slice(sentence);
    target.push(EOS);
    (source, target)
}
