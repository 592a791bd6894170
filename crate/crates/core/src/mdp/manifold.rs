use nalgebra::{DMatrix, DVector};

/// A differentiable value family `V_θ(s)`.
#[derive(Debug, Clone)]
pub enum NonlinearManifold {
    /// `ψ_η(s) = (a(s) cos τη − b(s) sin τη) e^{εη}` with a scalar parameter η.
    Spiral { a: DVector<f64>, b: DVector<f64>, tau: f64, eps: f64 },
    /// `(Φ h(z))(s)` with `h_i(z) = cos²(z_i) e^{κ z_i}`.
    CosExp { phi: DMatrix<f64>, kappa: f64 },
    /// Plain linear features, `φ(s)ᵀz`.
    Linear { phi: DMatrix<f64> },
}

impl NonlinearManifold {
    pub fn dim_param(&self) -> usize {
        match self {
            Self::Spiral { .. } => 1,
            Self::CosExp { phi, .. } | Self::Linear { phi } => phi.ncols(),
        }
    }

    pub fn n_states(&self) -> usize {
        match self {
            Self::Spiral { a, .. } => a.len(),
            Self::CosExp { phi, .. } | Self::Linear { phi } => phi.nrows(),
        }
    }

    /// Coordinate map `h(z)` for the `Φh(z)` families (identity for `Linear`).
    pub fn h(&self, z: &DVector<f64>) -> Option<DVector<f64>> {
        match self {
            Self::Spiral { .. } => None,
            Self::CosExp { kappa, .. } => {
                Some(z.map(|x| x.cos().powi(2) * (kappa * x).exp()))
            }
            Self::Linear { .. } => Some(z.clone()),
        }
    }

    /// `h_i'(z_i)` and `h_i''(z_i)`.
    fn h_derivs(&self, x: f64) -> (f64, f64) {
        match self {
            Self::CosExp { kappa, .. } => {
                let e = (kappa * x).exp();
                let (s2, c2) = (2.0 * x).sin_cos();
                let c = x.cos();
                let d1 = e * (kappa * c * c - s2);
                let d2 = e * (kappa * kappa * c * c - 2.0 * kappa * s2 - 2.0 * c2);
                (d1, d2)
            }
            Self::Linear { .. } => (1.0, 0.0),
            Self::Spiral { .. } => unreachable!(),
        }
    }

    pub fn evaluate(&self, param: &DVector<f64>, s: usize) -> f64 {
        match self {
            Self::Spiral { a, b, tau, eps } => {
                let eta = param[0];
                let (sn, cs) = (tau * eta).sin_cos();
                (a[s] * cs - b[s] * sn) * (eps * eta).exp()
            }
            Self::CosExp { phi, .. } | Self::Linear { phi } => {
                let h = self.h(param).unwrap();
                phi.row(s).transpose().dot(&h)
            }
        }
    }

    pub fn values(&self, param: &DVector<f64>) -> DVector<f64> {
        match self {
            Self::Spiral { .. } => DVector::from_fn(self.n_states(), |s, _| self.evaluate(param, s)),
            Self::CosExp { phi, .. } | Self::Linear { phi } => {
                phi * self.h(param).unwrap()
            }
        }
    }

    /// `∇_θ V_θ(s)`.
    pub fn gradient(&self, param: &DVector<f64>, s: usize) -> DVector<f64> {
        match self {
            Self::Spiral { a, b, tau, eps } => {
                let eta = param[0];
                let (sn, cs) = (tau * eta).sin_cos();
                let e = (eps * eta).exp();
                let d = e * (eps * (a[s] * cs - b[s] * sn) - tau * (a[s] * sn + b[s] * cs));
                DVector::from_element(1, d)
            }
            Self::CosExp { phi, .. } | Self::Linear { phi } => {
                DVector::from_fn(phi.ncols(), |i, _| phi[(s, i)] * self.h_derivs(param[i]).0)
            }
        }
    }

    /// `∇²_θ V_θ(s) v`.
    pub fn hessian_vec(&self, param: &DVector<f64>, s: usize, v: &DVector<f64>) -> DVector<f64> {
        match self {
            Self::Spiral { a, b, tau, eps } => {
                let eta = param[0];
                let (sn, cs) = (tau * eta).sin_cos();
                let e = (eps * eta).exp();
                let f = a[s] * cs - b[s] * sn;
                let g = a[s] * sn + b[s] * cs;
                let d2 = e * (eps * eps * f - 2.0 * eps * tau * g - tau * tau * f);
                DVector::from_element(1, d2 * v[0])
            }
            Self::CosExp { phi, .. } | Self::Linear { phi } => {
                DVector::from_fn(phi.ncols(), |i, _| {
                    phi[(s, i)] * self.h_derivs(param[i]).1 * v[i]
                })
            }
        }
    }
}
