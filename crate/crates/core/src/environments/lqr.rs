use nalgebra::DMatrix;

use crate::{Error, Result};

const RICCATI_TOL: f64 = 1e-10;
const MAX_ITER: usize = 1_000_000;

/// Discounted discrete-time LQR for the cost `Σ γᵗ (sᵀQs + aᵀRa)` under
/// `s' = As + Ba`. Returns `(P, K)` with optimal action `a = −Ks`.
///
/// The iteration starts from `Q + I` so that `R + γBᵀPB` is invertible on
/// the first step even when `R = 0`.
pub fn discounted_lqr(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    gamma: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    let mut p = q + DMatrix::identity(n, n);
    for _ in 0..MAX_ITER {
        let k = gain(a, b, r, &p, gamma)?;
        let f = a - b * &k;
        let next = q + k.transpose() * r * &k + f.transpose() * &p * &f * gamma;
        let next = (&next + next.transpose()) * 0.5;
        let diff = (&next - &p).abs().max();
        let scale = next.abs().max().max(1.0);
        p = next;
        if !diff.is_finite() {
            break;
        }
        if diff <= RICCATI_TOL * scale {
            let k = gain(a, b, r, &p, gamma)?;
            return Ok((p, k));
        }
    }
    Err(Error::Singular("Riccati iteration did not converge".into()))
}

fn gain(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    r: &DMatrix<f64>,
    p: &DMatrix<f64>,
    gamma: f64,
) -> Result<DMatrix<f64>> {
    let bp = b.transpose() * p;
    let lhs = r + &bp * b * gamma;
    let rhs = &bp * a * gamma;
    lhs.lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("R + γBᵀPB is singular".into()))
}

/// Solves `X = C + γFᵀXF` by fixed-point iteration.
pub fn discounted_lyapunov(f: &DMatrix<f64>, c: &DMatrix<f64>, gamma: f64) -> Result<DMatrix<f64>> {
    let mut x = c.clone();
    for _ in 0..MAX_ITER {
        let next = c + f.transpose() * &x * f * gamma;
        let diff = (&next - &x).abs().max();
        let scale = next.abs().max().max(1.0);
        x = next;
        if !diff.is_finite() {
            break;
        }
        if diff <= 1e-13 * scale {
            return Ok((&x + x.transpose()) * 0.5);
        }
    }
    Err(Error::Singular("closed loop is not stable under discounting".into()))
}

/// Stationary covariance `Σ = FΣFᵀ + W`.
pub fn stationary_covariance(f: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut x = w.clone();
    for _ in 0..MAX_ITER {
        let next = w + f * &x * f.transpose();
        let diff = (&next - &x).abs().max();
        let scale = next.abs().max().max(1e-300);
        x = next;
        if !diff.is_finite() {
            break;
        }
        if diff <= 1e-13 * scale {
            return Ok((&x + x.transpose()) * 0.5);
        }
    }
    Err(Error::Singular("closed loop has no stationary distribution".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_riccati_matches_closed_form() {
        // s' = s + a, cost s² + a², γ = 1 − ε: P solves P² − P − 1 = 0 in the limit.
        let one = DMatrix::from_element(1, 1, 1.0);
        let (p, k) = discounted_lqr(&one, &one, &one, &one, 0.999_999).unwrap();
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((p[(0, 0)] - golden).abs() < 1e-4);
        assert!((k[(0, 0)] - golden / (1.0 + golden)).abs() < 1e-4);
    }

    #[test]
    fn riccati_fixed_point_residual() {
        let a = DMatrix::from_row_slice(2, 2, &[1.1, 0.2, 0.0, 0.9]);
        let b = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let q = DMatrix::identity(2, 2);
        let r = DMatrix::from_element(1, 1, 0.5);
        let (p, k) = discounted_lqr(&a, &b, &q, &r, 0.95).unwrap();
        let f = &a - &b * &k;
        let back = &q + k.transpose() * &r * &k + f.transpose() * &p * &f * 0.95;
        assert!((back - &p).abs().max() < 1e-8);
        let lyap = discounted_lyapunov(&f, &(&q + k.transpose() * &r * &k), 0.95).unwrap();
        assert!((lyap - p).abs().max() < 1e-7);
    }

    #[test]
    fn zero_action_cost_is_handled() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        let b = DMatrix::from_row_slice(2, 1, &[0.0, 0.1]);
        let q = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let r = DMatrix::zeros(1, 1);
        let (p, k) = discounted_lqr(&a, &b, &q, &r, 0.95).unwrap();
        assert!(p.iter().all(|x| x.is_finite()) && k.iter().all(|x| x.is_finite()));
        assert!(p[(0, 0)] >= 1.0);
    }

    #[test]
    fn stationary_covariance_scalar() {
        let f = DMatrix::from_element(1, 1, 0.5);
        let w = DMatrix::from_element(1, 1, 0.75);
        let s = stationary_covariance(&f, &w).unwrap();
        assert!((s[(0, 0)] - 1.0).abs() < 1e-12);
    }
}
