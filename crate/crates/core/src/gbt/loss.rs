/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` inside logs.
pub const PROB_CLAMP: f64 = 1e-15;

/// Numerically stable softmax of one row of raw scores, written into `out`.
#[inline]
pub fn softmax(raw: &[f64], out: &mut [f64]) {
    let m = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, &r) in out.iter_mut().zip(raw) {
        *o = (r - m).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

/// Gradient and diagonal hessian of `sum_i w_i * -log softmax(raw_i)[y_i]`
/// with respect to the raw scores, both row-major `n x n_classes`:
/// `g = w (p - 1{y = c})`, `h = w p (1 - p)`.
pub fn softmax_grad_hess(
    raw: &[f64],
    y: &[u32],
    w: &[f64],
    n_classes: usize,
) -> (Vec<f64>, Vec<f64>) {
    let n = y.len();
    debug_assert_eq!(raw.len(), n * n_classes);
    let mut grad = vec![0.0; n * n_classes];
    let mut hess = vec![0.0; n * n_classes];
    let mut p = vec![0.0; n_classes];
    for i in 0..n {
        if w[i] == 0.0 {
            continue;
        }
        softmax(&raw[i * n_classes..(i + 1) * n_classes], &mut p);
        for c in 0..n_classes {
            let target = (y[i] as usize == c) as u8 as f64;
            grad[i * n_classes + c] = w[i] * (p[c] - target);
            hess[i * n_classes + c] = w[i] * p[c] * (1.0 - p[c]);
        }
    }
    (grad, hess)
}

/// `(1/n) sum_i w_i * -log p_i[y_i]`, with clamped probabilities.
pub fn weighted_log_loss(raw: &[f64], y: &[u32], w: &[f64], n_classes: usize) -> f64 {
    let n = y.len();
    if n == 0 {
        return 0.0;
    }
    let mut p = vec![0.0; n_classes];
    let mut total = 0.0;
    for i in 0..n {
        if w[i] == 0.0 {
            continue;
        }
        softmax(&raw[i * n_classes..(i + 1) * n_classes], &mut p);
        let pk = p[y[i] as usize].clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        total -= w[i] * pk.ln();
    }
    total / n as f64
}
