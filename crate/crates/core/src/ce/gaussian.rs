use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

const JITTER_DOUBLINGS: usize = 8;

/// Gaussian model `θ = (μ, Σ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianModel {
    pub mu: DVector<f64>,
    pub sigma: DMatrix<f64>,
}

impl GaussianModel {
    pub fn new(mu: DVector<f64>, sigma: DMatrix<f64>) -> Result<Self> {
        let k = mu.len();
        if sigma.shape() != (k, k) {
            return Err(Error::Dimension(format!(
                "covariance is {:?}, mean has {k} entries",
                sigma.shape()
            )));
        }
        Ok(Self { mu, sigma })
    }

    /// `N(μ, q·I)`.
    pub fn isotropic(mu: DVector<f64>, q: f64) -> Self {
        let k = mu.len();
        Self { mu, sigma: DMatrix::identity(k, k) * q }
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn sigma_fro(&self) -> f64 {
        self.sigma.norm()
    }

    pub fn symmetrize(&mut self) {
        let k = self.dim();
        for i in 0..k {
            for j in 0..i {
                let m = 0.5 * (self.sigma[(i, j)] + self.sigma[(j, i)]);
                self.sigma[(i, j)] = m;
                self.sigma[(j, i)] = m;
            }
        }
    }

    /// Symmetrizes and clips negative eigenvalues to zero. Returns the
    /// largest eigenvalue afterwards.
    pub fn make_psd(&mut self) -> f64 {
        self.symmetrize();
        if self.dim() == 0 {
            return 0.0;
        }
        let eig = self.sigma.clone().symmetric_eigen();
        let lmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        if eig.eigenvalues.iter().any(|&l| l < 0.0) {
            let clipped = eig.eigenvalues.map(|l| l.max(0.0));
            let q = &eig.eigenvectors;
            self.sigma = q * DMatrix::from_diagonal(&clipped) * q.transpose();
            self.symmetrize();
        }
        lmax
    }

    /// Lower-triangular `L` with `LLᵀ ≈ Σ`. Adds `j·I` jitter starting at
    /// `1e-10·tr(Σ)/k` and doubling when plain Cholesky fails.
    pub fn factor(&self) -> Result<DMatrix<f64>> {
        let k = self.dim();
        if self.sigma.iter().any(|x| !x.is_finite()) {
            return Err(Error::DegenerateModel);
        }
        if self.sigma.iter().all(|&x| x == 0.0) {
            return Ok(DMatrix::zeros(k, k));
        }
        if let Some(ch) = self.sigma.clone().cholesky() {
            return Ok(ch.l());
        }
        let trace = self.sigma.trace();
        if !(trace > 0.0) {
            return Err(Error::DegenerateModel);
        }
        let mut jitter = 1e-10 * trace / k as f64;
        for _ in 0..=JITTER_DOUBLINGS {
            let m = &self.sigma + DMatrix::identity(k, k) * jitter;
            if let Some(ch) = m.cholesky() {
                return Ok(ch.l());
            }
            jitter *= 2.0;
        }
        Err(Error::DegenerateModel)
    }

    pub fn sampler(&self) -> Result<GaussianSampler> {
        Ok(GaussianSampler { mean: self.mu.clone(), lower: self.factor()? })
    }
}

/// Cached factorization for repeated draws.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    mean: DVector<f64>,
    lower: DMatrix<f64>,
}

impl GaussianSampler {
    /// `out = μ + L ε`, with `eps` used as scratch.
    pub fn draw_into<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        eps: &mut DVector<f64>,
        out: &mut DVector<f64>,
    ) {
        for e in eps.iter_mut() {
            *e = rng.sample(StandardNormal);
        }
        self.map_into(eps, out);
    }

    /// `out = μ + L ε` for a given standard-normal `eps`.
    pub fn map_into(&self, eps: &DVector<f64>, out: &mut DVector<f64>) {
        let k = self.mean.len();
        for i in 0..k {
            let mut acc = self.mean[i];
            for j in 0..=i {
                acc += self.lower[(i, j)] * eps[j];
            }
            out[i] = acc;
        }
    }
}

/// One draw from `(1−λ) N(θ) + λ N(θ₀)`.
pub fn sample_mixture<R: Rng + ?Sized>(
    theta: &GaussianModel,
    theta0: &GaussianModel,
    lambda_mix: f64,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let k = theta.dim();
    let use_initial = rng.random::<f64>() < lambda_mix;
    let model = if use_initial { theta0 } else { theta };
    let mut eps = DVector::zeros(k);
    let mut out = DVector::zeros(k);
    model.sampler()?.draw_into(rng, &mut eps, &mut out);
    Ok(out)
}
