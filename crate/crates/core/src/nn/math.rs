//! Small dense-matrix helpers over flat `f64` slices.
//!
//! Matrices are row-major; `y = W x` with `W` of shape (rows, cols) reads
//! `W[r * cols + c]`.

/// y = W x
pub fn matvec(w: &[f64], rows: usize, cols: usize, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(w.len(), rows * cols);
    debug_assert_eq!(x.len(), cols);
    debug_assert_eq!(y.len(), rows);
    for r in 0..rows {
        let row = &w[r * cols..(r + 1) * cols];
        let mut acc = 0.0;
        for c in 0..cols {
            acc += row[c] * x[c];
        }
        y[r] = acc;
    }
}

/// y += W x
pub fn matvec_acc(w: &[f64], rows: usize, cols: usize, x: &[f64], y: &mut [f64]) {
    for r in 0..rows {
        let row = &w[r * cols..(r + 1) * cols];
        let mut acc = 0.0;
        for c in 0..cols {
            acc += row[c] * x[c];
        }
        y[r] += acc;
    }
}

/// x += W^T y (back-propagation through `y = W x`)
pub fn matvec_t_acc(w: &[f64], rows: usize, cols: usize, y: &[f64], x: &mut [f64]) {
    debug_assert_eq!(w.len(), rows * cols);
    debug_assert_eq!(y.len(), rows);
    debug_assert_eq!(x.len(), cols);
    for r in 0..rows {
        let row = &w[r * cols..(r + 1) * cols];
        let yr = y[r];
        for c in 0..cols {
            x[c] += row[c] * yr;
        }
    }
}

/// W += y x^T (gradient of `y = W x` w.r.t. W)
pub fn outer_acc(gw: &mut [f64], rows: usize, cols: usize, y: &[f64], x: &[f64]) {
    debug_assert_eq!(gw.len(), rows * cols);
    for r in 0..rows {
        let row = &mut gw[r * cols..(r + 1) * cols];
        let yr = y[r];
        for c in 0..cols {
            row[c] += yr * x[c];
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// y += s * x
pub fn axpy(s: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Numerically stable in-place softmax.
pub fn softmax_in_place(v: &mut [f64]) {
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
}
