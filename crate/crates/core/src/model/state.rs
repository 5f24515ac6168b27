use crate::nn::ops::add_assign;

/// Recurrent state of the decoder after consuming one target word.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderState {
    /// `(h, c)` for each stacked layer, bottom first.
    pub layers: Vec<(Vec<f64>, Vec<f64>)>,
    /// Previous attentional output; zero before the first step.
    pub input_feed: Vec<f64>,
}

impl DecoderState {
    pub fn zeros(layers: usize, dim: usize) -> Self {
        Self {
            layers: vec![(vec![0.0; dim], vec![0.0; dim]); layers],
            input_feed: vec![0.0; dim],
        }
    }

    pub fn top_hidden(&self) -> &[f64] {
        &self.layers[self.layers.len() - 1].0
    }
}

/// Source annotations plus the decoder's initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedSource {
    pub annotations: Vec<Vec<f64>>,
    pub init_state: DecoderState,
}

impl EncodedSource {
    pub fn len(&self) -> usize {
        self.annotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.annotations.is_empty()
    }
}

/// Result of one decoder step. `state.input_feed` equals `attn_hidden`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub state: DecoderState,
    pub attn_weights: Vec<f64>,
    pub attn_hidden: Vec<f64>,
}

/// Gradient with respect to a [`DecoderState`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateGrad {
    pub layers: Vec<(Vec<f64>, Vec<f64>)>,
    pub input_feed: Vec<f64>,
}

impl StateGrad {
    pub fn zeros(layers: usize, dim: usize) -> Self {
        Self {
            layers: vec![(vec![0.0; dim], vec![0.0; dim]); layers],
            input_feed: vec![0.0; dim],
        }
    }

    pub fn add(&mut self, other: &StateGrad) {
        for ((h, c), (oh, oc)) in self.layers.iter_mut().zip(&other.layers) {
            add_assign(h, oh);
            add_assign(c, oc);
        }
        add_assign(&mut self.input_feed, &other.input_feed);
    }

    pub fn is_zero(&self) -> bool {
        self.layers
            .iter()
            .flat_map(|(h, c)| h.iter().chain(c))
            .chain(&self.input_feed)
            .all(|&v| v == 0.0)
    }
}

/// Duplicates or permutes beam states. Each returned state is an independent copy.
pub fn select_states(states: &[DecoderState], indices: &[usize]) -> crate::Result<Vec<DecoderState>> {
    indices
        .iter()
        .map(|&i| {
            states.get(i).cloned().ok_or_else(|| {
                crate::BsoError::Input(format!("state index {i} out of range for {} states", states.len()))
            })
        })
        .collect()
}
