use nalgebra::{DMatrix, DVector};

/// Gaussian bumps `exp(−(s − m_i)²/2v_i²)` with `m_i = 10 + 20(i−1)`, `v_i = 10`.
pub fn rbf_features(n_states: usize, k: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n_states, k, |s, i| {
        let m = 10.0 + 20.0 * i as f64;
        let d = s as f64 - m;
        let v = (-d * d / (2.0 * 10.0 * 10.0)).exp();
        // Subnormals carry no information and slow every product they enter.
        if v < f64::MIN_POSITIVE { 0.0 } else { v }
    })
}

/// Fourier basis on `x = s/(n−1) ∈ [0,1]`: `φ_1 = 1`, odd `i` gives
/// `cos((i+1)πx/2)`, even `i` gives `sin(iπx/2)` (1-based `i`).
pub fn fourier_features(n_states: usize, k: usize) -> DMatrix<f64> {
    let scale = (n_states.max(2) - 1) as f64;
    DMatrix::from_fn(n_states, k, |s, col| {
        let i = col + 1;
        let x = s as f64 / scale;
        let pi = std::f64::consts::PI;
        if i == 1 {
            1.0
        } else if i % 2 == 1 {
            ((i + 1) as f64 * pi * x / 2.0).cos()
        } else {
            (i as f64 * pi * x / 2.0).sin()
        }
    })
}

/// Length of the quadratic monomial map on `R^d`.
pub fn quadratic_dim(d: usize) -> usize {
    1 + d + d * (d - 1) / 2
}

/// `(1, s_1², …, s_d², s_1s_2, s_1s_3, …, s_{d−1}s_d)`.
pub fn quadratic_features(s: &DVector<f64>, out: &mut DVector<f64>) {
    let d = s.len();
    out[0] = 1.0;
    for i in 0..d {
        out[1 + i] = s[i] * s[i];
    }
    let mut idx = 1 + d;
    for i in 0..d {
        for j in i + 1..d {
            out[idx] = s[i] * s[j];
            idx += 1;
        }
    }
}

/// `E[φ(x)]` for `x ∼ N(m, cov)`.
pub fn quadratic_features_mean(m: &DVector<f64>, cov: &DMatrix<f64>, out: &mut DVector<f64>) {
    quadratic_features(m, out);
    let d = m.len();
    for i in 0..d {
        out[1 + i] += cov[(i, i)];
    }
    let mut idx = 1 + d;
    for i in 0..d {
        for j in i + 1..d {
            out[idx] += cov[(i, j)];
            idx += 1;
        }
    }
}

/// Weights `z` with `φ(s)ᵀz = c + sᵀPs` for symmetric `P`.
pub fn quadratic_weights(p: &DMatrix<f64>, c: f64) -> DVector<f64> {
    let d = p.nrows();
    let mut z = DVector::zeros(quadratic_dim(d));
    z[0] = c;
    for i in 0..d {
        z[1 + i] = p[(i, i)];
    }
    let mut idx = 1 + d;
    for i in 0..d {
        for j in i + 1..d {
            z[idx] = p[(i, j)] + p[(j, i)];
            idx += 1;
        }
    }
    z
}
