use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use crate::mdp::{
    DoubleFeatureTransition, DoubleTransition, FeatureTransition, LinearFeatures, MsbrMoments,
    MspbeMoments, Transition,
};
use crate::{Error, Result};

/// Running estimates `(ω⁽⁰⁾, ω⁽¹⁾, ω⁽²⁾)` of `E[rφ]`, `E[φ(γφ'−φ)ᵀ]`, `E[φφᵀ]⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct MspbeTracker {
    pub w0: DVector<f64>,
    pub w1: DMatrix<f64>,
    pub w2: DMatrix<f64>,
    scratch: DVector<f64>,
}

impl MspbeTracker {
    pub fn new(k: usize) -> Self {
        Self {
            w0: DVector::zeros(k),
            w1: DMatrix::zeros(k, k),
            w2: DMatrix::zeros(k, k),
            scratch: DVector::zeros(k),
        }
    }

    pub fn from_moments(m: &MspbeMoments) -> Self {
        let k = m.w0.len();
        Self { w0: m.w0.clone(), w1: m.w1.clone(), w2: m.w2.clone(), scratch: DVector::zeros(k) }
    }

    pub fn dim(&self) -> usize {
        self.w0.len()
    }

    pub fn step(
        &mut self,
        phi: &DVector<f64>,
        reward: f64,
        phi_next: &DVector<f64>,
        gamma: f64,
        alpha: f64,
    ) {
        let k = self.dim();
        self.w0 *= 1.0 - alpha;
        self.w0.axpy(alpha * reward, phi, 1.0);

        // scratch = γφ' − φ
        self.scratch.copy_from(phi_next);
        self.scratch *= gamma;
        self.scratch -= phi;
        self.w1.ger(alpha, phi, &self.scratch, 1.0 - alpha);

        // ω⁽²⁾ ← ω⁽²⁾ + α(I − φ φᵀ ω⁽²⁾)
        self.scratch.gemv_tr(1.0, &self.w2, phi, 0.0);
        self.w2.ger(-alpha, phi, &self.scratch, 1.0);
        for i in 0..k {
            self.w2[(i, i)] += alpha;
        }
    }

    pub fn step_transition(&mut self, tr: &FeatureTransition, gamma: f64, alpha: f64) {
        self.step(&tr.phi, tr.reward, &tr.phi_next, gamma, alpha);
    }

    /// `J̄_p(z) = −(ω⁽⁰⁾+ω⁽¹⁾z)ᵀω⁽²⁾(ω⁽⁰⁾+ω⁽¹⁾z)`.
    pub fn jp(&self, z: &DVector<f64>, v: &mut DVector<f64>, wv: &mut DVector<f64>) -> f64 {
        v.copy_from(&self.w0);
        v.gemv(1.0, &self.w1, z, 1.0);
        wv.gemv(1.0, &self.w2, v, 0.0);
        -v.dot(wv)
    }

    pub fn sup_norm(&self) -> f64 {
        let m = |x: &DMatrix<f64>| x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        self.w0.amax().max(m(&self.w1)).max(m(&self.w2))
    }
}

pub fn mspbe_tracker_step(
    w: &MspbeTracker,
    tr: &Transition,
    feats: &LinearFeatures,
    gamma: f64,
    alpha: f64,
) -> MspbeTracker {
    let mut out = w.clone();
    out.step(&feats.row(tr.s), tr.r, &feats.row(tr.s_next), gamma, alpha);
    out
}

pub fn jp_estimate(w: &MspbeTracker, z: &DVector<f64>) -> f64 {
    let k = w.dim();
    w.jp(z, &mut DVector::zeros(k), &mut DVector::zeros(k))
}

/// Running estimates `(υ⁽⁰⁾, υ⁽¹⁾, υ⁽²⁾, υ⁽³⁾)` of the MSBR decoupling.
#[derive(Debug, Clone, PartialEq)]
pub struct MsbrTracker {
    pub u0: f64,
    pub u1: DMatrix<f64>,
    pub u2: DVector<f64>,
    pub u3: DMatrix<f64>,
    scratch: DVector<f64>,
}

impl MsbrTracker {
    pub fn new(k: usize) -> Self {
        Self {
            u0: 0.0,
            u1: DMatrix::zeros(k, k),
            u2: DVector::zeros(k),
            u3: DMatrix::zeros(k, k),
            scratch: DVector::zeros(k),
        }
    }

    pub fn from_moments(m: &MsbrMoments) -> Self {
        Self {
            u0: m.u0,
            u1: m.u1.clone(),
            u2: m.u2.clone(),
            u3: m.u3.clone(),
            scratch: DVector::zeros(m.u2.len()),
        }
    }

    pub fn dim(&self) -> usize {
        self.u2.len()
    }

    /// One step on `(φ, r, r', φ', φ'')`. The reward of the first successor is
    /// paired with the features of the second one so that every product is
    /// between independent draws.
    pub fn step(&mut self, tr: &DoubleFeatureTransition, gamma: f64, alpha: f64) {
        self.u0 += alpha * (tr.reward * tr.reward2 - self.u0);
        self.u1.ger(alpha * gamma * gamma, &tr.phi_next, &tr.phi_next2, 1.0 - alpha);

        self.scratch.copy_from(&tr.phi_next2);
        self.scratch *= gamma;
        self.scratch -= &tr.phi;
        self.u2 *= 1.0 - alpha;
        self.u2.axpy(alpha * tr.reward, &self.scratch, 1.0);

        self.scratch.copy_from(&tr.phi);
        self.scratch.axpy(-2.0 * gamma, &tr.phi_next, 1.0);
        self.u3.ger(alpha, &self.scratch, &tr.phi, 1.0 - alpha);
    }

    /// `J̄_b(z) = −(υ⁽⁰⁾ + zᵀ(υ⁽¹⁾+υ⁽³⁾)z + 2zᵀυ⁽²⁾)`.
    pub fn jb(&self, z: &DVector<f64>, buf: &mut DVector<f64>) -> f64 {
        buf.gemv(1.0, &self.u1, z, 0.0);
        buf.gemv(1.0, &self.u3, z, 1.0);
        -(self.u0 + z.dot(buf) + 2.0 * z.dot(&self.u2))
    }

    pub fn sup_norm(&self) -> f64 {
        let m = |x: &DMatrix<f64>| x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        self.u0.abs().max(m(&self.u1)).max(self.u2.amax()).max(m(&self.u3))
    }
}

pub fn msbr_tracker_step(
    u: &MsbrTracker,
    tr: &DoubleTransition,
    feats: &LinearFeatures,
    gamma: f64,
    alpha: f64,
) -> MsbrTracker {
    let d = DoubleFeatureTransition {
        phi: feats.row(tr.s),
        reward: tr.r,
        reward2: tr.r_prime,
        phi_next: feats.row(tr.s_next),
        phi_next2: feats.row(tr.s_next2),
    };
    let mut out = u.clone();
    out.step(&d, gamma, alpha);
    out
}

pub fn jb_estimate(u: &MsbrTracker, z: &DVector<f64>) -> f64 {
    u.jb(z, &mut DVector::zeros(u.dim()))
}

/// Tables `a`, `b` of the spiral value family.
#[derive(Debug, Clone, PartialEq)]
pub struct SpiralTables {
    pub a: DVector<f64>,
    pub b: DVector<f64>,
    pub tau: f64,
    pub eps: f64,
}

/// 3×3 tracker of `E[h]E[h']ᵀ` with `h = [r, γa(s')−a(s), γb(s')−b(s)]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NlMsbrTracker {
    pub u: Matrix3<f64>,
}

impl NlMsbrTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn h_vectors(tr: &DoubleTransition, tables: &SpiralTables, gamma: f64) -> (Vector3<f64>, Vector3<f64>) {
        let (a, b, s) = (&tables.a, &tables.b, tr.s);
        let h = Vector3::new(tr.r, gamma * a[tr.s_next] - a[s], gamma * b[tr.s_next] - b[s]);
        let h2 = Vector3::new(tr.r_prime, gamma * a[tr.s_next2] - a[s], gamma * b[tr.s_next2] - b[s]);
        (h, h2)
    }

    pub fn step(&mut self, tr: &DoubleTransition, tables: &SpiralTables, gamma: f64, alpha: f64) {
        let (h, h2) = Self::h_vectors(tr, tables, gamma);
        self.u += (h * h2.transpose() - self.u) * alpha;
    }

    /// Estimated MSBR of `ψ_η`.
    pub fn msbr(&self, eta: f64, tau: f64, eps: f64) -> f64 {
        let u = &self.u;
        let e = (eps * eta).exp();
        let (sn, cs) = (tau * eta).sin_cos();
        let (p, q) = (e * cs, -e * sn);
        u[(0, 0)]
            + 2.0 * p * u[(1, 0)]
            + 2.0 * q * u[(2, 0)]
            + p * p * u[(1, 1)]
            + p * q * (u[(1, 2)] + u[(2, 1)])
            + q * q * u[(2, 2)]
    }

    pub fn sup_norm(&self) -> f64 {
        self.u.amax()
    }
}

pub fn nl_msbr_tracker_step(
    u: &NlMsbrTracker,
    tr: &DoubleTransition,
    tables: &SpiralTables,
    gamma: f64,
    alpha: f64,
) -> NlMsbrTracker {
    let mut out = *u;
    out.step(tr, tables, gamma, alpha);
    out
}

/// Objective to maximize on the spiral: `−MSBR(ψ_η)`.
pub fn nl_jb_estimate(u: &NlMsbrTracker, eta: f64, tau: f64, eps: f64) -> f64 {
    -u.msbr(eta, tau, eps)
}

pub(crate) fn check_ceiling(norm: f64, ceiling: f64, what: &str) -> Result<()> {
    if norm.is_finite() && norm <= ceiling {
        Ok(())
    } else {
        Err(Error::NumericalAbort(format!(
            "{what} tracker exceeded stability ceiling {ceiling:e} (sup-norm {norm:e})"
        )))
    }
}
