//! Cross-entropy pretraining and beam search optimization.

mod bso;
mod schedule;
mod trainer;
mod xent;

pub use bso::{
    bso_backward, bso_forward, delta_01, delta_sentence_bleu, margin_loss, search_violations, BeamScorer, BsoOptions,
    BsoPass, DeltaKind, MarginScore, NeuralScorer, NodeRef, Violation, ViolationRecord,
};
pub use schedule::{curriculum_beam, BatchPlan, CurriculumSchedule};
pub use trainer::{
    decode_examples, example_masks, max_output_len, perplexity, pretrain_epoch, train_bso_epoch, Constraint,
    EpochStats, Example, TrainOptions,
};
pub use xent::{xent_loss, xent_loss_weighted, xent_value};
