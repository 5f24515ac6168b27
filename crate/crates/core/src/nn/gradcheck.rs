//! Central finite-difference verification of hand-derived gradients.

use super::tensor::ParamStore;

/// Denominator floor for relative errors, so entries whose true gradient is
/// numerically zero are compared absolutely.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Default)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    /// `(slot name, flat index, analytic, numeric)` of the worst entry.
    pub worst: Option<(String, usize, f64, f64)>,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR)
}

/// Compares the gradients currently stored in `store` against central finite
/// differences of `loss`. Every parameter entry is perturbed by `±step`.
///
/// Parameters are 32-bit, so the quotient uses the actually representable
/// perturbation rather than `2 * step`.
pub fn check_gradients<F>(store: &mut ParamStore, step: f64, loss: F) -> GradCheckReport
where
    F: FnMut(&ParamStore) -> f64,
{
    check_gradients_strided(store, step, 1, loss)
}

/// Like [`check_gradients`] but only visits every `stride`-th entry of each slot.
pub fn check_gradients_strided<F>(
    store: &mut ParamStore,
    step: f64,
    stride: usize,
    mut loss: F,
) -> GradCheckReport
where
    F: FnMut(&ParamStore) -> f64,
{
    let stride = stride.max(1);
    let mut report = GradCheckReport::default();
    for s in 0..store.slots().len() {
        let n = store.slots()[s].value.len();
        for k in (0..n).step_by(stride) {
            let analytic = store.slots()[s].grad[k];
            let orig = store.slots()[s].value.data()[k];
            let up = (orig as f64 + step) as f32;
            let down = (orig as f64 - step) as f32;

            store.slots_mut()[s].value.data_mut()[k] = up;
            let l_up = loss(store);
            store.slots_mut()[s].value.data_mut()[k] = down;
            let l_down = loss(store);
            store.slots_mut()[s].value.data_mut()[k] = orig;

            let numeric = (l_up - l_down) / (up as f64 - down as f64);
            let rel = relative_error(analytic, numeric);
            report.checked += 1;
            report.max_abs_error = report.max_abs_error.max((analytic - numeric).abs());
            if report.worst.is_none() || rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst = Some((store.slots()[s].name.clone(), k, analytic, numeric));
            }
        }
    }
    report
}

/// Central difference of `f` along coordinate `k` of a 64-bit input vector.
pub fn finite_difference<F>(x: &[f64], k: usize, step: f64, mut f: F) -> f64
where
    F: FnMut(&[f64]) -> f64,
{
    let mut v = x.to_vec();
    v[k] = x[k] + step;
    let up = f(&v);
    v[k] = x[k] - step;
    let down = f(&v);
    (up - down) / (2.0 * step)
}
