use rand::Rng;

use super::ops::{matvec_acc, matvec_t_acc, outer_acc};
use super::tensor::{ParamGroup, ParamSlot, ParamStore, SlotId, Tensor};
use crate::error::{check_dim, Result};

/// `out = W x + b`, with an optional bias.
#[derive(Debug, Clone, Copy)]
pub struct Affine {
    pub weight: SlotId,
    pub bias: Option<SlotId>,
    pub input_dim: usize,
    pub output_dim: usize,
}

impl Affine {
    #[allow(clippy::too_many_arguments)]
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        prefix: &str,
        group: ParamGroup,
        input_dim: usize,
        output_dim: usize,
        with_bias: bool,
        init_scale: f32,
        rng: &mut R,
    ) -> Self {
        let weight = store.add(ParamSlot::new(
            format!("{prefix}.weight"),
            group,
            Tensor::uniform(&[output_dim, input_dim], init_scale, rng),
        ));
        let bias = with_bias.then(|| {
            store.add(ParamSlot::new(
                format!("{prefix}.bias"),
                group,
                Tensor::uniform(&[output_dim], init_scale, rng),
            ))
        });
        Self {
            weight,
            bias,
            input_dim,
            output_dim,
        }
    }

    pub fn forward(&self, store: &ParamStore, input: &[f64]) -> Result<Vec<f64>> {
        check_dim("affine input", self.input_dim, input.len())?;
        let mut out = match self.bias {
            Some(b) => store.get(b).value.data().iter().map(|&v| v as f64).collect(),
            None => vec![0.0; self.output_dim],
        };
        matvec_acc(store.get(self.weight).value.data(), input, &mut out);
        Ok(out)
    }

    /// Accumulates parameter gradients and returns the gradient w.r.t. `input`.
    pub fn backward(&self, store: &mut ParamStore, input: &[f64], d_out: &[f64]) -> Result<Vec<f64>> {
        check_dim("affine input", self.input_dim, input.len())?;
        check_dim("affine output gradient", self.output_dim, d_out.len())?;
        let mut d_in = vec![0.0; self.input_dim];
        {
            let w = store.get_mut(self.weight);
            outer_acc(&mut w.grad, d_out, input);
            matvec_t_acc(w.value.data(), d_out, &mut d_in);
        }
        if let Some(b) = self.bias {
            store.get_mut(b).grad.iter_mut().zip(d_out).for_each(|(g, d)| *g += d);
        }
        Ok(d_in)
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::nn::gradcheck::{check_gradients, finite_difference};

    fn layer(input: usize, output: usize) -> (ParamStore, Affine) {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut store = ParamStore::new();
        let a = Affine::new(&mut store, "out", ParamGroup::Output, input, output, true, 0.5, &mut rng);
        (store, a)
    }

    #[test]
    fn identity_weight_zero_bias_is_identity() {
        let (mut store, a) = layer(3, 3);
        let w = store.get_mut(a.weight).value.data_mut();
        w.iter_mut().enumerate().for_each(|(k, v)| *v = if k % 4 == 0 { 1.0 } else { 0.0 });
        store.get_mut(a.bias.unwrap()).value.data_mut().fill(0.0);
        let x = [0.25, -1.5, 3.0];
        assert_eq!(a.forward(&store, &x).unwrap(), x.to_vec());
    }

    #[test]
    fn zero_input_gives_bias() {
        let (store, a) = layer(4, 2);
        let bias: Vec<f64> = store.get(a.bias.unwrap()).value.data().iter().map(|&v| v as f64).collect();
        assert_eq!(a.forward(&store, &[0.0; 4]).unwrap(), bias);
    }

    #[test]
    fn rejects_wrong_input_size() {
        let (store, a) = layer(4, 2);
        assert!(a.forward(&store, &[0.0; 3]).is_err());
    }

    #[test]
    fn matches_finite_differences() {
        let (mut store, a) = layer(4, 3);
        let x = vec![0.3, -0.7, 1.1, 0.05];
        let coef = [1.0, -2.0, 0.5];
        let loss = |s: &ParamStore, x: &[f64]| {
            a.forward(s, x).unwrap().iter().zip(&coef).map(|(o, c)| (o * c).sin()).sum::<f64>()
        };
        let out = a.forward(&store, &x).unwrap();
        let d_out: Vec<f64> = out.iter().zip(&coef).map(|(o, c)| c * (o * c).cos()).collect();
        let d_in = a.backward(&mut store, &x, &d_out).unwrap();

        let report = check_gradients(&mut store, 1e-3, |s| loss(s, &x));
        assert!(report.max_rel_error < 1e-4, "{report:?}");
        for (k, want) in d_in.iter().enumerate() {
            let fd = finite_difference(&x, k, 1e-3, |v| loss(&store, v));
            assert!((fd - want).abs() < 1e-6);
        }
    }
}
