//! Standard LSTM cell with input, forget and output gates and a tanh candidate.
//!
//! Parameters are stacked gate-major: rows `[0, h)` are the input gate, then
//! forget, output and candidate blocks. The cell has no peepholes.

use rand::Rng;

use super::ops::{matvec_acc, matvec_t_acc, outer_acc, sigmoid};
use super::tensor::{ParamGroup, ParamSlot, ParamStore, SlotId, Tensor};
use crate::error::{check_dim, Result};

#[derive(Debug, Clone, Copy)]
pub struct LstmCell {
    pub w_input: SlotId,
    pub w_hidden: SlotId,
    pub bias: SlotId,
    pub input_dim: usize,
    pub hidden_dim: usize,
}

/// Intermediates of one forward call. Consumed by [`LstmCache::backward`].
#[derive(Debug, Clone)]
pub struct LstmCache {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    i: Vec<f64>,
    f: Vec<f64>,
    o: Vec<f64>,
    g: Vec<f64>,
    tanh_c: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LstmGrads {
    pub d_input: Vec<f64>,
    pub dh_prev: Vec<f64>,
    pub dc_prev: Vec<f64>,
}

impl LstmCell {
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        prefix: &str,
        input_dim: usize,
        hidden_dim: usize,
        init_scale: f32,
        rng: &mut R,
    ) -> Self {
        let g = ParamGroup::Recurrent;
        let w_input = store.add(ParamSlot::new(
            format!("{prefix}.w_input"),
            g,
            Tensor::uniform(&[4 * hidden_dim, input_dim], init_scale, rng),
        ));
        let w_hidden = store.add(ParamSlot::new(
            format!("{prefix}.w_hidden"),
            g,
            Tensor::uniform(&[4 * hidden_dim, hidden_dim], init_scale, rng),
        ));
        let bias = store.add(ParamSlot::new(
            format!("{prefix}.bias"),
            g,
            Tensor::uniform(&[4 * hidden_dim], init_scale, rng),
        ));
        Self {
            w_input,
            w_hidden,
            bias,
            input_dim,
            hidden_dim,
        }
    }

    /// Returns `(h, c, cache)`.
    pub fn forward(
        &self,
        store: &ParamStore,
        x: &[f64],
        h_prev: &[f64],
        c_prev: &[f64],
    ) -> Result<(Vec<f64>, Vec<f64>, LstmCache)> {
        let hd = self.hidden_dim;
        check_dim("lstm input", self.input_dim, x.len())?;
        check_dim("lstm hidden state", hd, h_prev.len())?;
        check_dim("lstm cell state", hd, c_prev.len())?;

        let mut pre: Vec<f64> = store.get(self.bias).value.data().iter().map(|&b| b as f64).collect();
        matvec_acc(store.get(self.w_input).value.data(), x, &mut pre);
        matvec_acc(store.get(self.w_hidden).value.data(), h_prev, &mut pre);

        let i: Vec<f64> = pre[..hd].iter().map(|&a| sigmoid(a)).collect();
        let f: Vec<f64> = pre[hd..2 * hd].iter().map(|&a| sigmoid(a)).collect();
        let o: Vec<f64> = pre[2 * hd..3 * hd].iter().map(|&a| sigmoid(a)).collect();
        let g: Vec<f64> = pre[3 * hd..].iter().map(|a| a.tanh()).collect();

        let c: Vec<f64> = (0..hd).map(|k| f[k] * c_prev[k] + i[k] * g[k]).collect();
        let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
        let h: Vec<f64> = (0..hd).map(|k| o[k] * tanh_c[k]).collect();

        let cache = LstmCache {
            x: x.to_vec(),
            h_prev: h_prev.to_vec(),
            c_prev: c_prev.to_vec(),
            i,
            f,
            o,
            g,
            tanh_c,
        };
        Ok((h, c, cache))
    }
}

impl LstmCache {
    /// Back-propagates `(dh, dc)` through the step, adding parameter gradients
    /// into `store`.
    pub fn backward(
        self,
        cell: &LstmCell,
        store: &mut ParamStore,
        dh: &[f64],
        dc: &[f64],
    ) -> Result<LstmGrads> {
        let hd = cell.hidden_dim;
        check_dim("lstm dh", hd, dh.len())?;
        check_dim("lstm dc", hd, dc.len())?;

        let mut d_pre = vec![0.0; 4 * hd];
        let mut dc_prev = vec![0.0; hd];
        for k in 0..hd {
            let (i, f, o, g, tc) = (self.i[k], self.f[k], self.o[k], self.g[k], self.tanh_c[k]);
            let d_o = dh[k] * tc;
            let dc_total = dc[k] + dh[k] * o * (1.0 - tc * tc);
            d_pre[k] = dc_total * g * i * (1.0 - i);
            d_pre[hd + k] = dc_total * self.c_prev[k] * f * (1.0 - f);
            d_pre[2 * hd + k] = d_o * o * (1.0 - o);
            d_pre[3 * hd + k] = dc_total * i * (1.0 - g * g);
            dc_prev[k] = dc_total * f;
        }

        let mut d_input = vec![0.0; cell.input_dim];
        let mut dh_prev = vec![0.0; hd];
        {
            let slot = store.get_mut(cell.w_input);
            outer_acc(&mut slot.grad, &d_pre, &self.x);
            matvec_t_acc(slot.value.data(), &d_pre, &mut d_input);
        }
        {
            let slot = store.get_mut(cell.w_hidden);
            outer_acc(&mut slot.grad, &d_pre, &self.h_prev);
            matvec_t_acc(slot.value.data(), &d_pre, &mut dh_prev);
        }
        store
            .get_mut(cell.bias)
            .grad
            .iter_mut()
            .zip(&d_pre)
            .for_each(|(g, d)| *g += d);

        Ok(LstmGrads {
            d_input,
            dh_prev,
            dc_prev,
        })
    }
}
