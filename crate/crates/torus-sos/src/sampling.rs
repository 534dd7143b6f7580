//! The frequency-sampling distribution behind the stochastic solver.
//!
//! One loss term per frequency `k` is too many to touch per step, so the solver
//! draws `k ~ pi` and divides by `pi_k`, making each step an unbiased estimate of
//! the full objective. The weights `w_k = ||M^(k)||_F + mu_k` with
//! `mu_k = (1 + sum_j |2 pi k_j|^{d+1})^{-1}` keep both failure modes bounded:
//! the Frobenius part controls the model term of the loss, the polynomial part
//! controls the coefficient term for any `f` with `d+1` derivatives.

use std::collections::HashMap;
use std::f64::consts::TAU;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::FeatureMap;
use crate::fourier::{MultiIndex, TrigPoly};

/// Relative tail threshold used when choosing a kernel map's default support.
const DEFAULT_TAIL_REL: f64 = 1e-9;
/// Hard cap on the automatically chosen support radius.
const MAX_SUPPORT: u32 = 4096;

/// A discrete distribution over all frequencies `|k| <= K`, in canonical order.
#[derive(Clone, Debug)]
pub struct PiDistribution {
    dim: usize,
    k_supp: u32,
    support: Vec<MultiIndex>,
    pos: HashMap<MultiIndex, usize>,
    frob: Vec<f64>,
    mu: Vec<f64>,
    cum: Vec<f64>,
    z: f64,
    eps_tail: f64,
}

impl PiDistribution {
    /// Builds the distribution for every `|k| <= k_supp` on the given map.
    pub fn build(map: &FeatureMap, k_supp: u32) -> Result<Self> {
        if k_supp == 0 {
            return Err(Error::Domain("support radius must be at least 1".into()));
        }
        let dim = map.dim();
        let support = MultiIndex::ball(dim, k_supp);
        // weights computed in parallel, accumulated in canonical order so the
        // cumulative table is identical for every thread count
        let frob: Vec<f64> = {
            let parts: Result<Vec<f64>> =
                support.par_iter().map(|k| map.m_frob(k)).collect();
            parts?
        };
        let mu: Vec<f64> = support.iter().map(|k| mu_weight(k)).collect();
        let mut cum = Vec::with_capacity(support.len());
        let mut z = 0.0;
        for (f, m) in frob.iter().zip(&mu) {
            z += f + m;
            cum.push(z);
        }
        if !(z.is_finite() && z > 0.0) {
            return Err(Error::Numerical(format!("degenerate normalizer {z}")));
        }
        let pos = support.iter().cloned().zip(0..).collect();
        let eps_tail = mu_tail_bound(dim, k_supp);
        Ok(PiDistribution { dim, k_supp, support, pos, frob, mu, cum, z, eps_tail })
    }

    /// Default support radius: everything the map or the objective can reach.
    ///
    /// Band-limited maps stop contributing at `2t`, so the choice is exact. Kernel
    /// maps never vanish; the radius grows until the certified Frobenius tail drops
    /// below `1e-9` of the certified total.
    pub fn default_support(map: &FeatureMap, f: &TrigPoly) -> Result<u32> {
        if f.dim() != map.dim() {
            return Err(Error::DimMismatch { expected: map.dim(), got: f.dim() });
        }
        let floor = f.bandwidth().max(1);
        match map.moment_radius() {
            Some(radius) => Ok(floor.max(radius)),
            None => {
                let total = map.m_total_sum();
                let mut k = floor;
                while map.m_tail_sum(k) > DEFAULT_TAIL_REL * total {
                    k += 1;
                    if k > MAX_SUPPORT {
                        return Err(Error::Budget(format!(
                            "support radius exceeded {MAX_SUPPORT} before the tail fell below {DEFAULT_TAIL_REL:.0e} of the total"
                        )));
                    }
                }
                Ok(k)
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support_radius(&self) -> u32 {
        self.k_supp
    }

    /// Frequencies in canonical order; sampling indexes into this slice.
    pub fn support(&self) -> &[MultiIndex] {
        &self.support
    }

    /// Normalizer `Z = sum_k w_k`. Also the scale constant the solver's default
    /// step size is derived from: every normalized loss term is `Z`-Lipschitz in
    /// `A` over the Frobenius ball.
    pub fn normalizer(&self) -> f64 {
        self.z
    }

    /// Certified bound on `sum_{|k| > K} mu_k`, the weight mass the support misses.
    pub fn eps_tail(&self) -> f64 {
        self.eps_tail
    }

    pub fn pmf(&self, k: &MultiIndex) -> f64 {
        match self.pos.get(k) {
            Some(&i) => (self.frob[i] + self.mu[i]) / self.z,
            None => 0.0,
        }
    }

    /// `||M^(k)||_F` as used in the weight, for `k` inside the support.
    pub fn frob(&self, k: &MultiIndex) -> Option<f64> {
        self.pos.get(k).map(|&i| self.frob[i])
    }

    pub fn mu(&self, k: &MultiIndex) -> Option<f64> {
        self.pos.get(k).map(|&i| self.mu[i])
    }

    /// Inverse-CDF draw; identical streams yield identical frequency sequences.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &MultiIndex {
        let u = rng.gen::<f64>() * self.z;
        let i = self.cum.partition_point(|&c| c <= u).min(self.support.len() - 1);
        &self.support[i]
    }

    /// Errors unless every coefficient of `f` lies inside the support.
    pub fn covers(&self, f: &TrigPoly) -> Result<()> {
        if f.dim() != self.dim {
            return Err(Error::DimMismatch { expected: self.dim, got: f.dim() });
        }
        if f.bandwidth() > self.k_supp {
            return Err(Error::Domain(format!(
                "objective has bandwidth {} outside the sampling support {}",
                f.bandwidth(),
                self.k_supp
            )));
        }
        Ok(())
    }
}

/// `mu_k = (1 + sum_j |2 pi k_j|^{d+1})^{-1}`.
///
/// Absolute values matter: the signed power is negative (odd `d+1`) or flips the
/// intended decay, and the weight must stay positive and even in `k`.
pub fn mu_weight(k: &MultiIndex) -> f64 {
    let d = k.dim();
    let p = (d + 1) as i32;
    let sum: f64 = k
        .entries()
        .iter()
        .map(|&kj| (TAU * kj.unsigned_abs() as f64).powi(p))
        .sum();
    1.0 / (1.0 + sum)
}

/// Certified bound on `sum_{|k| > K} mu_k` for `d <= 3`:
/// `mu_k <= d^d (2 pi)^{-(d+1)} |k|^{-(d+1)}` by the power-mean inequality, shell
/// counts are at most `{2, 4, 6} r^{d-1}`, and the remaining `sum r^{-2}` telescopes
/// against the integral `1/K`.
pub fn mu_tail_bound(dim: usize, k_supp: u32) -> f64 {
    let c_d = [2.0, 4.0, 6.0][dim - 1];
    let d = dim as f64;
    c_d * d.powi(dim as i32) * TAU.powi(-(dim as i32 + 1)) / k_supp as f64
}
