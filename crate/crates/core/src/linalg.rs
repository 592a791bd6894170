use nalgebra::{DMatrix, DVector};

/// Relative cutoff under which singular values count as zero.
pub const RANK_TOL: f64 = 1e-10;

pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOL * smax).count()
}

/// Moore-Penrose inverse of a symmetric positive semi-definite matrix.
pub fn psd_pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let lmax = eig.eigenvalues.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let mut out = DMatrix::zeros(n, n);
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        if l.abs() > RANK_TOL * lmax && lmax > 0.0 {
            let q = eig.eigenvectors.column(i);
            out += (q * q.transpose()) / l;
        }
    }
    out
}

/// Solves `a x = b`, falling back to the pseudo-inverse when `a` is singular.
pub fn solve_or_pinv(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(x) = a.clone().lu().solve(b) {
        if x.iter().all(|v| v.is_finite()) {
            return Some(x);
        }
    }
    let pinv = a.clone().pseudo_inverse(RANK_TOL * a.norm().max(f64::MIN_POSITIVE)).ok()?;
    let x = pinv * b;
    x.iter().all(|v| v.is_finite()).then_some(x)
}
