use nalgebra::{DMatrix, DVector};

use super::{FiniteMdp, LinearFeatures};
use crate::linalg::{psd_pinv, solve_or_pinv};
use crate::{Error, Result};

/// `V^π = (I − γP)⁻¹ R^π`.
pub fn solve_value_function(mdp: &FiniteMdp) -> Result<DVector<f64>> {
    let n = mdp.n_states();
    let a = DMatrix::identity(n, n) - mdp.transition() * mdp.gamma();
    let rp = mdp.expected_reward();
    let v = a
        .lu()
        .solve(&rp)
        .ok_or_else(|| Error::Singular("I - γP is not invertible".into()))?;
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Singular("value solve produced non-finite entries".into()));
    }
    Ok(v)
}

/// Stationary distribution by power iteration on the lazy chain `(I + P)/2`,
/// which shares its fixed point with `P` and is aperiodic.
pub fn stationary_distribution(p: &DMatrix<f64>, tol: f64, max_iter: usize) -> DVector<f64> {
    let n = p.nrows();
    let pt = p.transpose();
    let mut pi = DVector::from_element(n, 1.0 / n as f64);
    for _ in 0..max_iter {
        let next = (&pi + &pt * &pi) * 0.5;
        let next = &next / next.sum();
        let diff = (&next - &pi).abs().sum();
        pi = next;
        if diff < tol {
            break;
        }
    }
    pi
}

/// `Π^ν = Φ(ΦᵀDΦ)⁻¹ΦᵀD`; requires full column rank.
pub fn projection_matrix(mdp: &FiniteMdp, feats: &LinearFeatures) -> Result<DMatrix<f64>> {
    check_dims(mdp, feats)?;
    if !feats.full_rank() {
        return Err(Error::ProjectionUndefined { rank: feats.rank(), k: feats.dim() });
    }
    let phi = feats.phi();
    let dphi = weighted_rows(phi, mdp.nu());
    let gram = phi.transpose() * &dphi;
    let chol = gram
        .clone()
        .cholesky()
        .ok_or(Error::ProjectionUndefined { rank: feats.rank(), k: feats.dim() })?;
    Ok(phi * chol.solve(&dphi.transpose()))
}

pub fn mse(z: &DVector<f64>, mdp: &FiniteMdp, feats: &LinearFeatures) -> Result<f64> {
    Ok(MdpOracle::new(mdp, Some(feats))?.mse(z))
}

/// Definitional MSPBE, `‖Φz − Π T Φz‖²_ν`. Π is the ν-orthogonal projection
/// onto the column space of Φ, which stays well defined for rank-deficient Φ.
pub fn mspbe_exact(z: &DVector<f64>, mdp: &FiniteMdp, feats: &LinearFeatures) -> Result<f64> {
    Ok(MdpOracle::new(mdp, Some(feats))?.mspbe(z))
}

pub fn msbr_exact(z: &DVector<f64>, mdp: &FiniteMdp, feats: &LinearFeatures) -> Result<f64> {
    Ok(MdpOracle::new(mdp, Some(feats))?.msbr(z))
}

fn check_dims(mdp: &FiniteMdp, feats: &LinearFeatures) -> Result<()> {
    if feats.n_states() != mdp.n_states() {
        return Err(Error::Dimension(format!(
            "features cover {} states, MDP has {}",
            feats.n_states(),
            mdp.n_states()
        )));
    }
    Ok(())
}

fn weighted_rows(m: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for (i, mut row) in out.row_iter_mut().enumerate() {
        row *= w[i];
    }
    out
}

fn nu_norm2(nu: &DVector<f64>, v: &DVector<f64>) -> f64 {
    nu.iter().zip(v.iter()).map(|(w, x)| w * x * x).sum()
}

/// Exact MSPBE decoupling targets.
#[derive(Debug, Clone)]
pub struct MspbeMoments {
    /// `E[r φ]`
    pub w0: DVector<f64>,
    /// `E[φ(γφ' − φ)ᵀ]`
    pub w1: DMatrix<f64>,
    /// `E[φφᵀ]⁻¹` (pseudo-inverse when singular)
    pub w2: DMatrix<f64>,
}

/// Exact MSBR decoupling targets, with `υ⁽²⁾ = E[E[r|s](γE[φ'|s] − φ)]`.
#[derive(Debug, Clone)]
pub struct MsbrMoments {
    pub u0: f64,
    pub u1: DMatrix<f64>,
    pub u2: DVector<f64>,
    pub u3: DMatrix<f64>,
}

pub fn exact_mspbe_moments(mdp: &FiniteMdp, feats: &LinearFeatures) -> Result<MspbeMoments> {
    check_dims(mdp, feats)?;
    let phi = feats.phi();
    let dphi = weighted_rows(phi, mdp.nu());
    let pphi = mdp.transition() * phi;
    let rp = mdp.expected_reward();
    let gram = phi.transpose() * &dphi;
    Ok(MspbeMoments {
        w0: dphi.transpose() * rp,
        w1: dphi.transpose() * (pphi * mdp.gamma() - phi),
        w2: psd_pinv(&gram),
    })
}

pub fn exact_msbr_moments(mdp: &FiniteMdp, feats: &LinearFeatures) -> Result<MsbrMoments> {
    check_dims(mdp, feats)?;
    let g = mdp.gamma();
    let nu = mdp.nu();
    let phi = feats.phi();
    let dphi = weighted_rows(phi, nu);
    let pphi = mdp.transition() * phi;
    let dpphi = weighted_rows(&pphi, nu);
    let rp = mdp.expected_reward();
    let drp = rp.component_mul(nu);
    Ok(MsbrMoments {
        u0: rp.dot(&drp),
        u1: pphi.transpose() * &dpphi * (g * g),
        u2: (&pphi * g - phi).transpose() * drp,
        u3: (phi - &pphi * (2.0 * g)).transpose() * dphi,
    })
}

/// Cached exact quantities for one MDP (and optionally one feature matrix).
#[derive(Debug, Clone)]
pub struct MdpOracle {
    nu: DVector<f64>,
    p: DMatrix<f64>,
    gamma: f64,
    r_pi: DVector<f64>,
    v: DVector<f64>,
    phi: Option<DMatrix<f64>>,
    gram_pinv: Option<DMatrix<f64>>,
}

impl MdpOracle {
    pub fn new(mdp: &FiniteMdp, feats: Option<&LinearFeatures>) -> Result<Self> {
        let v = solve_value_function(mdp)?;
        let (phi, gram_pinv) = match feats {
            Some(f) => {
                check_dims(mdp, f)?;
                let phi = f.phi().clone();
                let gram = phi.transpose() * weighted_rows(&phi, mdp.nu());
                (Some(phi), Some(psd_pinv(&gram)))
            }
            None => (None, None),
        };
        Ok(Self {
            nu: mdp.nu().clone(),
            p: mdp.transition().clone(),
            gamma: mdp.gamma(),
            r_pi: mdp.expected_reward(),
            v,
            phi,
            gram_pinv,
        })
    }

    pub fn value(&self) -> &DVector<f64> {
        &self.v
    }

    pub fn nu(&self) -> &DVector<f64> {
        &self.nu
    }

    fn phi(&self) -> &DMatrix<f64> {
        self.phi.as_ref().expect("oracle was built without features")
    }

    /// `T v = R^π + γ P v`.
    pub fn bellman(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.r_pi + (&self.p * v) * self.gamma
    }

    /// ν-orthogonal projection of `v` onto the feature span.
    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        let phi = self.phi();
        let g = self.gram_pinv.as_ref().unwrap();
        let dv = v.component_mul(&self.nu);
        phi * (g * (phi.transpose() * dv))
    }

    pub fn mse_values(&self, v: &DVector<f64>) -> f64 {
        nu_norm2(&self.nu, &(&self.v - v))
    }

    pub fn msbr_values(&self, v: &DVector<f64>) -> f64 {
        nu_norm2(&self.nu, &(self.bellman(v) - v))
    }

    pub fn mse(&self, z: &DVector<f64>) -> f64 {
        self.mse_values(&(self.phi() * z))
    }

    pub fn msbr(&self, z: &DVector<f64>) -> f64 {
        self.msbr_values(&(self.phi() * z))
    }

    pub fn mspbe(&self, z: &DVector<f64>) -> f64 {
        let v = self.phi() * z;
        let tv = self.bellman(&v);
        nu_norm2(&self.nu, &(&v - self.project(&tv)))
    }

    /// Minimum-norm solution of the projected Bellman equation, i.e. the
    /// MSPBE minimizer reached by LSTD(0) with exact moments.
    pub fn td_fixed_point(&self) -> Result<DVector<f64>> {
        let phi = self.phi();
        let dphi = weighted_rows(phi, &self.nu);
        let a = dphi.transpose() * (phi - (&self.p * phi) * self.gamma);
        let b = dphi.transpose() * &self.r_pi;
        solve_or_pinv(&a, &b).ok_or_else(|| Error::Singular("projected Bellman system".into()))
    }

    /// Minimizer of the Bellman residual over the feature span.
    pub fn msbr_minimizer(&self) -> Result<DVector<f64>> {
        let phi = self.phi();
        let m = phi - (&self.p * phi) * self.gamma;
        let dm = weighted_rows(&m, &self.nu);
        let a = m.transpose() * &dm;
        let b = dm.transpose() * &self.r_pi;
        solve_or_pinv(&a, &b).ok_or_else(|| Error::Singular("Bellman residual normal equations".into()))
    }

    /// `C(ν) = max_{s,s'} P(s,s')/ν(s)`.
    pub fn concentration(&self) -> f64 {
        let mut c: f64 = 0.0;
        for s in 0..self.p.nrows() {
            for s2 in 0..self.p.ncols() {
                c = c.max(self.p[(s, s2)] / self.nu[s]);
            }
        }
        c
    }
}
