//! Turning a PSD model into machine-checkable bounds on `min f`.
//!
//! Soundness never depends on how the model was produced: every bound recomputes
//! its own error terms from the objective table and the model alone, so a claimed
//! certificate is audited by simply running the same arithmetic again.
//!
//! * [`lower_det`] — the unconditional bound `c_1`: residuals enumerated exactly up
//!   to a cutoff, everything beyond covered by certified tails.
//! * [`lower_prob`] — the sampled bound `c_{1-delta}`: a Hoeffding interval around
//!   the mean of drawn loss terms, valid with probability `1 - delta`.
//! * [`upper_bound`] — plain evaluation at sampled points; any value of `f` is an
//!   upper bound on its minimum.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{MomentCache, PsdModel};
use crate::fourier::{MultiIndex, TrigPoly};
use crate::optimizer::loss_term;
use crate::sampling::PiDistribution;

/// The unconditional lower bound and its ingredients.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DetBound {
    /// `c_1 <= min f`, always valid.
    pub value: f64,
    /// Residual enumeration radius.
    pub k_cut: u32,
    /// `f_0 - <A, M^(0)> - sum_{0 < |k| <= K} |f_k - tr(A M^(k))|`.
    pub main_term: f64,
    /// Exact `sum_{|k| > K} |f_k|` from the coefficient table.
    pub objective_tail: f64,
    /// `||A||_F` times the certified moment tail beyond `K`.
    pub model_tail: f64,
    pub a_frob: f64,
}

/// Deterministic lower bound `c_1 = main - objective_tail - model_tail`.
///
/// Monotone non-decreasing in `k_cut`: enumerating one more shell swaps that
/// shell's triangle-inequality estimate for its exact residual.
pub fn lower_det(f: &TrigPoly, model: &PsdModel, k_cut: u32) -> Result<DetBound> {
    let map = model.map();
    if f.dim() != map.dim() {
        return Err(Error::DimMismatch { expected: map.dim(), got: f.dim() });
    }
    let a = model.a_matrix();
    let zero = MultiIndex::zero(f.dim());
    let mut main_term = f.coeff(&zero).re - map.pair(&a, &zero)?.re;
    let ball = MultiIndex::ball(f.dim(), k_cut);
    // residual magnitudes in canonical order; parallel map, sequential sum, so the
    // result is bit-identical for every thread count
    let residuals: Result<Vec<f64>> = ball
        .par_iter()
        .map(|k| {
            if k.is_zero() {
                Ok(0.0)
            } else {
                Ok((f.coeff(k) - map.pair(&a, k)?).norm())
            }
        })
        .collect();
    for r in residuals? {
        main_term -= r;
    }
    let objective_tail: f64 =
        f.iter().filter(|(k, _)| k.degree() > k_cut).map(|(_, v)| v.norm()).sum();
    let a_frob = model.a_frob();
    let model_tail = a_frob * map.m_tail_sum(k_cut);
    Ok(DetBound {
        value: main_term - objective_tail - model_tail,
        k_cut,
        main_term,
        objective_tail,
        model_tail,
        a_frob,
    })
}

/// Default residual cutoff: the sampling support policy (everything the map or the
/// objective can reach).
pub fn default_k_cut(f: &TrigPoly, model: &PsdModel) -> Result<u32> {
    PiDistribution::default_support(model.map(), f)
}

/// The sampled lower bound and its ingredients.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProbBound {
    /// `c_{1-delta} <= min f` with probability at least `1 - delta` over the draws.
    pub value: f64,
    pub delta: f64,
    pub draws: usize,
    pub seed: u64,
    /// Mean of the sampled normalized loss terms.
    pub mean_loss: f64,
    /// Hoeffding deviation: bound on `|mean - expectation|` at confidence `1-delta`.
    pub deviation: f64,
    /// Deterministic penalty for the frequencies the support cannot see.
    pub truncation_penalty: f64,
    /// The almost-sure bound on a single loss term that the deviation used.
    pub term_bound: f64,
}

/// Draws `draws` frequencies from `pi` and turns the empirical mean of the loss
/// into a `1 - delta` confidence lower bound.
///
/// The Hoeffding step needs an almost-sure bound on one term. Two are computed and
/// the larger is used: the smoothness-based bound
/// `(sqrt(d+1) cn_norm + ||A||_F)(1 + total moment mass)` — the quantity quoted in
/// reports — and the exact support maximum
/// `Z max_k (|f_k| + ||A||_F ||M^(k)||_F) / w_k`, which is what actually protects
/// soundness when the objective is dominated by its constant term (the smoothness
/// route cannot see `f_0`).
pub fn lower_prob(
    f: &TrigPoly,
    model: &PsdModel,
    pi: &PiDistribution,
    delta: f64,
    draws: usize,
    seed: u64,
) -> Result<ProbBound> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Domain(format!("delta must lie in (0, 1], got {delta}")));
    }
    if draws == 0 {
        return Err(Error::Domain("at least one draw is required".into()));
    }
    pi.covers(f)?;
    let map = model.map();
    if pi.dim() != map.dim() {
        return Err(Error::DimMismatch { expected: map.dim(), got: pi.dim() });
    }
    let a = model.a_matrix();
    let a_frob = model.a_frob();

    let cache = MomentCache::new(map, pi.support().len().min(8192));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mean_loss = 0.0;
    for _ in 0..draws {
        let k = pi.sample(&mut rng).clone();
        let m = cache.get(&k)?;
        mean_loss += loss_term(f, &a, pi, &k, &m);
    }
    mean_loss /= draws as f64;

    let d = f.dim();
    let smooth_bound = ((d + 1) as f64).sqrt() * f.cn_norm_bound((d + 1) as u32) + a_frob;
    let quoted = smooth_bound * (1.0 + map.m_total_sum());
    let z = pi.normalizer();
    let exact_sup = pi
        .support()
        .iter()
        .map(|k| {
            let frob = pi.frob(k).expect("in-support");
            let w = frob + pi.mu(k).expect("in-support");
            (f.coeff(k).norm() + a_frob * frob) / w
        })
        .fold(0.0f64, f64::max)
        * z;
    let term_bound = quoted.max(exact_sup);
    let deviation = term_bound * (2.0 * (2.0 / delta).ln() / draws as f64).sqrt();

    let k_supp = pi.support_radius();
    let truncation_penalty = a_frob * map.m_tail_sum(k_supp)
        + f.iter().filter(|(k, _)| k.degree() > k_supp).map(|(_, v)| v.norm()).sum::<f64>();

    Ok(ProbBound {
        value: mean_loss - deviation - truncation_penalty,
        delta,
        draws,
        seed,
        mean_loss,
        deviation,
        truncation_penalty,
        term_bound,
    })
}

/// How to search for an upper bound on `min f`.
#[derive(Clone, Copy, Debug)]
pub enum UpperMethod {
    /// Evaluate at seeded uniform points.
    Random { points: usize, seed: u64 },
    /// Evaluate on a regular grid.
    Grid { points_per_axis: usize },
}

impl UpperMethod {
    /// Random scan in one dimension, regular grid beyond.
    pub fn default_for(dim: usize, seed: u64) -> Self {
        if dim == 1 {
            UpperMethod::Random { points: 10_000, seed }
        } else {
            UpperMethod::Grid { points_per_axis: 256 }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UpperBound {
    /// `min f <= value`: the smallest evaluation seen.
    pub value: f64,
    pub argmin: Vec<f64>,
    pub evaluations: usize,
}

/// Evaluates `f` at the chosen points; the smallest value is an upper bound on the
/// minimum by definition. Ties keep the first point visited.
pub fn upper_bound(f: &TrigPoly, method: UpperMethod) -> Result<UpperBound> {
    match method {
        UpperMethod::Random { points, seed } => {
            if points == 0 {
                return Err(Error::Domain("at least one sample point is required".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut best = f64::INFINITY;
            let mut argmin = vec![0.0; f.dim()];
            for _ in 0..points {
                let x: Vec<f64> = (0..f.dim()).map(|_| rng.gen::<f64>()).collect();
                let v = f.eval(&x);
                if v < best {
                    best = v;
                    argmin = x;
                }
            }
            Ok(UpperBound { value: best, argmin, evaluations: points })
        }
        UpperMethod::Grid { points_per_axis } => {
            let spec = crate::oracles::GridSpec::new(f.dim(), points_per_axis)?;
            let scan = crate::oracles::grid_min(f, &spec)?;
            // grid values are true values of f, so no slack enters an upper bound
            Ok(UpperBound { value: scan.value, argmin: scan.argmin, evaluations: spec.total() })
        }
    }
}

/// One row of the residual table: how far the model's coefficient is from the
/// objective's, after discounting the constant shift the bound absorbs.
#[derive(Clone, Debug)]
pub struct ResidualRow {
    pub k: MultiIndex,
    pub degree: u32,
    pub f_mag: f64,
    pub g_mag: f64,
    /// `|f_k - g_k - c 1{k=0}|` with `c = f_0 - g_0`; zero at `k = 0` by construction.
    pub residual: f64,
}

/// Residual table over `|k| <= k_max` in canonical order.
pub fn residual_rows(f: &TrigPoly, model: &PsdModel, k_max: u32) -> Result<Vec<ResidualRow>> {
    let map = model.map();
    if f.dim() != map.dim() {
        return Err(Error::DimMismatch { expected: map.dim(), got: f.dim() });
    }
    let a = model.a_matrix();
    let zero = MultiIndex::zero(f.dim());
    let shift = f.coeff(&zero).re - map.pair(&a, &zero)?.re;
    MultiIndex::ball(f.dim(), k_max)
        .into_iter()
        .map(|k| {
            let fk = f.coeff(&k);
            let gk = map.pair(&a, &k)?;
            let discount = if k.is_zero() {
                num_complex::Complex64::new(shift, 0.0)
            } else {
                num_complex::Complex64::ZERO
            };
            Ok(ResidualRow {
                degree: k.degree(),
                f_mag: fk.norm(),
                g_mag: gk.norm(),
                residual: (fk - gk - discount).norm(),
                k,
            })
        })
        .collect()
}

/// Everything a bound consumer needs to re-check the claim.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    /// Master seed of the run that produced this report, when one existed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub map_kind: String,
    pub dim: usize,
    pub feature_count: usize,
    pub m_total_sum: f64,
    pub lipschitz_norm: f64,
    pub smoothness_norm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampling_support: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampling_tail: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub map_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper_seed: Option<u64>,
    /// Wall-clock runtime. Omitted by default so equal configs yield
    /// byte-identical reports; opt in when timing matters more than diffing.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_seconds: Option<f64>,
}

/// The certificate: both bounds, the gap, and the provenance to audit them.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub lower: f64,
    pub upper: f64,
    pub gap: f64,
    pub det: DetBound,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prob: Option<ProbBound>,
    pub upper_detail: UpperBound,
    pub provenance: Provenance,
}

impl Report {
    pub fn assemble(
        f: &TrigPoly,
        model: &PsdModel,
        det: DetBound,
        prob: Option<ProbBound>,
        upper: UpperBound,
        pi: Option<&PiDistribution>,
    ) -> Report {
        let map = model.map();
        let d = f.dim();
        let provenance = Provenance {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: None,
            seed: None,
            map_kind: match map {
                crate::features::FeatureMap::BandLimited(_) => "bandlimited".into(),
                crate::features::FeatureMap::Kernel(_) => "kernel".into(),
            },
            dim: d,
            feature_count: map.n(),
            m_total_sum: map.m_total_sum(),
            lipschitz_norm: f.cn_norm_bound(1),
            smoothness_norm: f.cn_norm_bound((d + 1) as u32),
            sampling_support: pi.map(|p| p.support_radius()),
            sampling_tail: pi.map(|p| p.eps_tail()),
            map_seed: match map {
                crate::features::FeatureMap::Kernel(kmap) => kmap.seed(),
                _ => None,
            },
            solver_seed: None,
            upper_seed: None,
            wall_seconds: None,
        };
        Report {
            lower: det.value,
            upper: upper.value,
            gap: upper.value - det.value,
            det,
            prob,
            upper_detail: upper,
            provenance,
        }
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization");
        s.push('\n');
        s
    }

    pub fn from_json_str(s: &str) -> Result<Report> {
        Ok(serde_json::from_str(s)?)
    }
}
