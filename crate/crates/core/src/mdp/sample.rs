use rand::Rng;

use super::{DoubleTransition, FiniteMdp, Transition};

#[inline]
pub(crate) fn draw_index<R: Rng + ?Sized>(cdf: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

#[inline]
pub(crate) fn draw_successor<R: Rng + ?Sized>(mdp: &FiniteMdp, s: usize, rng: &mut R) -> usize {
    draw_index(mdp.row_cdf(s), rng)
}

/// `s ∼ ν`, `s' ∼ P(s,·)`, `r = R(s,s')`.
pub fn sample_transition<R: Rng + ?Sized>(mdp: &FiniteMdp, rng: &mut R) -> Transition {
    let s = draw_index(mdp.nu_cdf(), rng);
    let s_next = draw_successor(mdp, s, rng);
    Transition { s, r: mdp.reward()[(s, s_next)], s_next }
}

/// `s ∼ ν` and two independent successors of `s`.
pub fn sample_double_transition<R: Rng + ?Sized>(mdp: &FiniteMdp, rng: &mut R) -> DoubleTransition {
    let s = draw_index(mdp.nu_cdf(), rng);
    let s_next = draw_successor(mdp, s, rng);
    let s_next2 = draw_successor(mdp, s, rng);
    DoubleTransition {
        s,
        r: mdp.reward()[(s, s_next)],
        r_prime: mdp.reward()[(s, s_next2)],
        s_next,
        s_next2,
    }
}

/// On-policy rollout `s_{t+1} = s'_t` starting from `s0`.
pub fn rollout_onpolicy<R: Rng + ?Sized>(
    mdp: &FiniteMdp,
    s0: usize,
    length: usize,
    rng: &mut R,
) -> Vec<Transition> {
    let mut out = Vec::with_capacity(length);
    let mut s = s0;
    for _ in 0..length {
        let s_next = draw_successor(mdp, s, rng);
        out.push(Transition { s, r: mdp.reward()[(s, s_next)], s_next });
        s = s_next;
    }
    out
}
