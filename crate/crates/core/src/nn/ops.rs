//! Small dense kernels. Weights are 32-bit; every product and sum is taken in 64-bit.

/// `out[i] += sum_j w[i, j] * x[j]` for a row-major `rows x x.len()` matrix.
pub fn matvec_acc(w: &[f32], x: &[f64], out: &mut [f64]) {
    let cols = x.len();
    debug_assert_eq!(w.len(), out.len() * cols);
    for (o, row) in out.iter_mut().zip(w.chunks_exact(cols)) {
        *o += dot_f32(row, x);
    }
}

/// `out[j] += sum_i w[i, j] * d[i]`, the transpose product.
pub fn matvec_t_acc(w: &[f32], d: &[f64], out: &mut [f64]) {
    let cols = out.len();
    debug_assert_eq!(w.len(), d.len() * cols);
    for (&di, row) in d.iter().zip(w.chunks_exact(cols)) {
        if di == 0.0 {
            continue;
        }
        for (o, &wij) in out.iter_mut().zip(row) {
            *o += wij as f64 * di;
        }
    }
}

/// `grad[i, j] += d[i] * x[j]`.
pub fn outer_acc(grad: &mut [f64], d: &[f64], x: &[f64]) {
    let cols = x.len();
    debug_assert_eq!(grad.len(), d.len() * cols);
    for (&di, row) in d.iter().zip(grad.chunks_exact_mut(cols)) {
        if di == 0.0 {
            continue;
        }
        for (g, &xj) in row.iter_mut().zip(x) {
            *g += di * xj;
        }
    }
}

#[inline]
pub fn dot_f32(w: &[f32], x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(&a, &b)| a as f64 * b).sum()
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn add_assign(dst: &mut [f64], src: &[f64]) {
    dst.iter_mut().zip(src).for_each(|(d, s)| *d += s);
}

pub fn scale(v: &[f64], k: f64) -> Vec<f64> {
    v.iter().map(|x| x * k).collect()
}

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}
