//! Stochastic first-order solvers for the PSD model fit.
//!
//! Both solvers maximize the same concave objective over PSD matrices in a
//! Frobenius ball: the expected normalized loss
//! `E_{k~pi} [L_k(A)]  =  (f_0 - <A, M^(0)>)  -  sum_{k != 0} |f_k - tr(A M^(k))|`,
//! whose maximum equals the best certified lower-bound gap reachable through the
//! sampled support. [`sga_solve`] does projected stochastic ascent on `A` itself
//! and returns the iterate average; [`bm_solve`] ascends a low-rank factor `U`
//! (`A = U U^*`, PSD for free) on a smoothed loss and returns the last iterate.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::features::{FeatureMap, MomentCache, PsdModel};
use crate::fourier::TrigPoly;
use crate::sampling::PiDistribution;

/// Tunable knobs shared by both solvers. `None` fields select documented defaults.
#[derive(Clone, Debug)]
pub struct SolverConfig {
    /// Frobenius-ball radius for the parameter (`||A||_F <= radius`).
    pub radius: f64,
    /// Iteration count; zero is allowed and returns the initial point.
    pub iters: usize,
    /// Seed for both the frequency draws and (factored solver) the initial point.
    pub seed: u64,
    /// Step size; default `radius / (Z sqrt(T))` for [`sga_solve`] and
    /// `sqrt(radius) / (2 Z sqrt(T))` for [`bm_solve`].
    pub stepsize: Option<f64>,
    /// Smoothing scale for the factored solver; default `1e-3 * f_norm(f)`.
    pub alpha: Option<f64>,
    /// Factor rank; default `n` (full).
    pub rank: Option<usize>,
    /// Optional Frobenius cap on the factor, applied after every step.
    pub clip: Option<f64>,
    /// Record a trace row every this many iterations (0 = no trace).
    pub trace_every: usize,
}

impl SolverConfig {
    pub fn new(radius: f64, iters: usize, seed: u64) -> Self {
        SolverConfig {
            radius,
            iters,
            seed,
            stepsize: None,
            alpha: None,
            rank: None,
            clip: None,
            trace_every: 0,
        }
    }
}

/// One sampled-objective measurement along the run.
#[derive(Clone, Copy, Debug)]
pub struct TraceRow {
    pub iter: usize,
    /// Value of the sampled loss term at the pre-update iterate — an unbiased
    /// (noisy) estimate of the full objective.
    pub objective_estimate: f64,
    pub grad_norm: f64,
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub model: PsdModel,
    pub trace: Vec<TraceRow>,
    pub iters_run: usize,
    /// Set when the divergence detector stopped the run early. The model is still
    /// valid input for certification — a bad iterate costs bound quality, never
    /// soundness.
    pub diverged: bool,
}

/// A reasonable parameter radius for an objective: `1.1 * (f_0 - lower estimate)`
/// from a coarse certified grid scan, floored away from zero. At any optimum the
/// model absorbs about `f_0 - min f` of trace mass, and for PSD matrices the trace
/// dominates the Frobenius norm.
pub fn default_radius(f: &TrigPoly) -> Result<f64> {
    let n = crate::fourier::default_range_grid(f.dim());
    let spec = crate::oracles::GridSpec::new(f.dim(), n)?;
    let scan = crate::oracles::grid_min(f, &spec)?;
    let f0 = f.coeff(&crate::fourier::MultiIndex::zero(f.dim())).re;
    let gap = f0 - (scan.value - scan.slack);
    Ok((1.1 * gap).max(1e-3 * (1.0 + f.f_norm())))
}

/// Normalized loss term `L_k(A)`: `(f_0 - <A, M^(0)>) / pi_0` at zero, otherwise
/// `-|f_k - tr(A M^(k))| / pi_k`.
pub fn loss_term(
    f: &TrigPoly,
    a: &DMatrix<Complex64>,
    pi: &PiDistribution,
    k: &crate::fourier::MultiIndex,
    m: &DMatrix<Complex64>,
) -> f64 {
    let p = pi.pmf(k);
    assert!(p > 0.0, "loss term sampled outside the support");
    let traced = trace_product(a, m);
    if k.is_zero() {
        (f.coeff(k).re - traced.re) / p
    } else {
        -(f.coeff(k) - traced).norm() / p
    }
}

/// Ascent direction of [`loss_term`] on the Hermitian space (inner product
/// `Re tr(XY)`). Zero exactly at a kink (`r_k = 0`), which is a valid
/// supergradient there.
pub fn ascent_direction(
    f: &TrigPoly,
    a: &DMatrix<Complex64>,
    pi: &PiDistribution,
    k: &crate::fourier::MultiIndex,
    m: &DMatrix<Complex64>,
) -> DMatrix<Complex64> {
    let p = pi.pmf(k);
    assert!(p > 0.0, "ascent direction sampled outside the support");
    if k.is_zero() {
        return hermitian_part(m) * Complex64::new(-1.0 / p, 0.0);
    }
    let r = f.coeff(k) - trace_product(a, m);
    let scale = r.norm();
    if scale == 0.0 {
        return DMatrix::zeros(a.nrows(), a.ncols());
    }
    scaled_pair(m, r, 2.0 * p * scale)
}

/// Smoothed loss `-sqrt((alpha pi_k)^2 + |r_k|^2) / pi_k` (the zero term is left
/// unsmoothed — it is already linear). Within `alpha` of [`loss_term`] everywhere.
pub fn smoothed_loss_term(
    f: &TrigPoly,
    a: &DMatrix<Complex64>,
    pi: &PiDistribution,
    k: &crate::fourier::MultiIndex,
    m: &DMatrix<Complex64>,
    alpha: f64,
) -> f64 {
    let p = pi.pmf(k);
    assert!(p > 0.0, "loss term sampled outside the support");
    let traced = trace_product(a, m);
    if k.is_zero() {
        (f.coeff(k).re - traced.re) / p
    } else {
        let r = f.coeff(k) - traced;
        -((alpha * p).powi(2) + r.norm_sqr()).sqrt() / p
    }
}

/// Gradient of [`smoothed_loss_term`]; smooth everywhere for `alpha > 0`.
pub fn smoothed_ascent(
    f: &TrigPoly,
    a: &DMatrix<Complex64>,
    pi: &PiDistribution,
    k: &crate::fourier::MultiIndex,
    m: &DMatrix<Complex64>,
    alpha: f64,
) -> DMatrix<Complex64> {
    let p = pi.pmf(k);
    assert!(p > 0.0, "ascent direction sampled outside the support");
    if k.is_zero() {
        return hermitian_part(m) * Complex64::new(-1.0 / p, 0.0);
    }
    let r = f.coeff(k) - trace_product(a, m);
    let scale = ((alpha * p).powi(2) + r.norm_sqr()).sqrt();
    scaled_pair(m, r, 2.0 * p * scale)
}

/// `(conj(r) M + r M^*) / denom` — the Hermitian part of `conj(r) M`, rescaled.
fn scaled_pair(m: &DMatrix<Complex64>, r: Complex64, denom: f64) -> DMatrix<Complex64> {
    let half = Complex64::new(1.0 / denom, 0.0);
    (m * (r.conj() * half)) + (m.adjoint() * (r * half))
}

fn hermitian_part(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// `tr(A M)` — plain product, no conjugation.
fn trace_product(a: &DMatrix<Complex64>, m: &DMatrix<Complex64>) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * m[(j, i)];
        }
    }
    acc
}

/// Projection onto `{A PSD, ||A||_F <= radius}`: Hermitian part, eigenvalue clamp,
/// then radial rescale. The cone-then-centered-ball composition is the exact metric
/// projection onto the intersection.
pub fn project(m: &DMatrix<Complex64>, radius: f64) -> DMatrix<Complex64> {
    assert!(radius > 0.0, "projection radius must be positive");
    let herm = hermitian_part(m);
    let eig = herm.symmetric_eigen();
    let clamped = eig.eigenvalues.map(|v| v.max(0.0));
    let diag = DMatrix::from_diagonal(&clamped.map(|v| Complex64::new(v, 0.0)));
    let psd = &eig.eigenvectors * diag * eig.eigenvectors.adjoint();
    let psd = hermitian_part(&psd);
    let norm = psd.norm();
    if norm > radius {
        psd * Complex64::new(radius / norm, 0.0)
    } else {
        psd
    }
}

/// Full objective `sum_k pi_k L_k(A)` over the sampled support, computed exactly.
pub fn exact_expected_objective(
    f: &TrigPoly,
    model: &PsdModel,
    pi: &PiDistribution,
) -> Result<f64> {
    pi.covers(f)?;
    let a = model.a_matrix();
    let map = model.map();
    let mut acc = 0.0;
    for k in pi.support() {
        let traced = map.pair(&a, k)?;
        if k.is_zero() {
            acc += f.coeff(k).re - traced.re;
        } else {
            acc -= (f.coeff(k) - traced).norm();
        }
    }
    Ok(acc)
}

fn cache_budget(n: usize, support_len: usize) -> usize {
    let bytes_per = 16 * n * n;
    let mem_cap = (512usize << 20) / bytes_per.max(1);
    support_len.min(mem_cap).max(16)
}

fn check_common(f: &TrigPoly, map: &FeatureMap, pi: &PiDistribution, cfg: &SolverConfig) -> Result<()> {
    if f.dim() != map.dim() {
        return Err(Error::DimMismatch { expected: map.dim(), got: f.dim() });
    }
    pi.covers(f)?;
    if !(cfg.radius.is_finite() && cfg.radius > 0.0) {
        return Err(Error::Domain(format!("radius must be positive, got {}", cfg.radius)));
    }
    if let Some(eta) = cfg.stepsize {
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::Domain(format!("step size must be positive, got {eta}")));
        }
    }
    Ok(())
}

/// Projected stochastic ascent on `A`. Returns the average of the projected
/// iterates `A_1 .. A_T` — PSD and inside the ball by convexity — so the guarantee
/// is on the average, not the noisier last iterate. `iters == 0` returns the zero
/// model.
pub fn sga_solve(
    f: &TrigPoly,
    map: &FeatureMap,
    pi: &PiDistribution,
    cfg: &SolverConfig,
) -> Result<SolveOutcome> {
    check_common(f, map, pi, cfg)?;
    let n = map.n();
    let t_total = cfg.iters;
    let eta = cfg
        .stepsize
        .unwrap_or_else(|| cfg.radius / (pi.normalizer() * (t_total.max(1) as f64).sqrt()));
    let cache = MomentCache::new(map, cache_budget(n, pi.support().len()));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut a = DMatrix::<Complex64>::zeros(n, n);
    let mut avg = DMatrix::<Complex64>::zeros(n, n);
    let mut trace = Vec::new();
    for t in 0..t_total {
        let k = pi.sample(&mut rng).clone();
        let m = cache.get(&k)?;
        let dir = ascent_direction(f, &a, pi, &k, &m);
        if cfg.trace_every > 0 && t % cfg.trace_every == 0 {
            trace.push(TraceRow {
                iter: t,
                objective_estimate: loss_term(f, &a, pi, &k, &m),
                grad_norm: dir.norm(),
            });
        }
        a = project(&(&a + dir * Complex64::new(eta, 0.0)), cfg.radius);
        avg += &a;
    }
    let result = if t_total == 0 {
        avg
    } else {
        avg / Complex64::new(t_total as f64, 0.0)
    };
    let model = PsdModel::from_dense(map.clone(), result)?.clamped();
    Ok(SolveOutcome { model, trace, iters_run: t_total, diverged: false })
}

/// Stochastic ascent on a factor `U` with `A = U U^*` (PSD by construction), using
/// the smoothed loss (`alpha > 0` required; near a kink the plain supergradient of
/// a factored parameterization stalls). Returns the **last** iterate: the factored
/// objective is not concave in `U`, so averaging has no guarantee to offer, and in
/// practice the last iterate is the one that has settled.
pub fn bm_solve(
    f: &TrigPoly,
    map: &FeatureMap,
    pi: &PiDistribution,
    cfg: &SolverConfig,
) -> Result<SolveOutcome> {
    check_common(f, map, pi, cfg)?;
    let n = map.n();
    let rank = cfg.rank.unwrap_or(n);
    if rank == 0 {
        return Err(Error::Domain("factor rank must be at least 1".into()));
    }
    let alpha = cfg.alpha.unwrap_or(1e-3 * f.f_norm());
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::Domain(format!("smoothing scale must be positive, got {alpha}")));
    }
    let t_total = cfg.iters;
    let z = pi.normalizer();
    let eta = cfg
        .stepsize
        .unwrap_or_else(|| cfg.radius.sqrt() / (2.0 * z * (t_total.max(1) as f64).sqrt()));

    // frequency draws on stream 0, initial point on stream 1: changing one never
    // perturbs the other
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    init_rng.set_stream(1);
    let mut u = DMatrix::<Complex64>::from_fn(n, rank, |_, _| {
        let re: f64 = init_rng.sample(StandardNormal);
        let im: f64 = init_rng.sample(StandardNormal);
        Complex64::new(re, im)
    });
    // start on the shell ||U||_F^2 = radius / 2, i.e. ||A||_F <= radius/2 with slack
    // to grow; U = 0 is a stationary point of the factored dynamics and must be
    // avoided unless the objective itself is identically zero
    let unorm = u.norm();
    if unorm > 0.0 {
        u *= Complex64::new((cfg.radius / 2.0).sqrt() / unorm, 0.0);
    }

    let cache = MomentCache::new(map, cache_budget(n, pi.support().len()));
    // divergence detector: exponential average with ~200-iteration half-life,
    // armed after 400 iterations
    let ema_decay = 0.5f64.powf(1.0 / 200.0);
    let abort_below = -10.0 * f.f_norm().max(1.0);
    let mut ema = 0.0;
    let mut trace = Vec::new();
    let mut diverged = false;
    let mut iters_run = 0;
    for t in 0..t_total {
        let k = pi.sample(&mut rng).clone();
        let m = cache.get(&k)?;
        let p = pi.pmf(&k);
        let mu = &*m * &u;
        // tr(U U^* M) = tr(U^* M U) = sum over columns of u_c^* (M u_c)
        let traced = u
            .column_iter()
            .zip(mu.column_iter())
            .map(|(uc, muc)| uc.dotc(&muc))
            .sum::<Complex64>();
        let (loss, grad_u) = if k.is_zero() {
            let loss = (f.coeff(&k).re - traced.re) / p;
            // M^(0) is Hermitian: gradient -2 Herm(M) U / p = -2 M U / p
            let g = &mu * Complex64::new(-2.0 / p, 0.0);
            (loss, g)
        } else {
            let r = f.coeff(&k) - traced;
            let s = ((alpha * p).powi(2) + r.norm_sqr()).sqrt();
            let loss = -s / p;
            let g = &mu * (r.conj() / (p * s)) + m.adjoint() * &u * (r / (p * s));
            (loss, g)
        };
        if cfg.trace_every > 0 && t % cfg.trace_every == 0 {
            trace.push(TraceRow { iter: t, objective_estimate: loss, grad_norm: grad_u.norm() });
        }
        iters_run = t + 1;
        // a non-finite loss or step is unambiguous divergence: stop with the last
        // finite iterate instead of poisoning it with NaN
        if !loss.is_finite() {
            diverged = true;
            break;
        }
        let mut next = &u + grad_u * Complex64::new(eta, 0.0);
        if let Some(cap) = cfg.clip {
            let norm = next.norm();
            if norm > cap {
                next *= Complex64::new(cap / norm, 0.0);
            }
        }
        if next.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            diverged = true;
            break;
        }
        u = next;
        ema = ema_decay * ema + (1.0 - ema_decay) * loss;
        if t >= 400 && ema < abort_below {
            diverged = true;
            break;
        }
    }
    let model = PsdModel::from_factor(map.clone(), u)?;
    Ok(SolveOutcome { model, trace, iters_run, diverged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::BandLimitedMap;
    use crate::fourier::{random_objective, MultiIndex};
    use approx::assert_abs_diff_eq;

    fn idx(entries: &[i32]) -> MultiIndex {
        MultiIndex::from_slice(entries)
    }

    fn one_plus_cos() -> TrigPoly {
        TrigPoly::from_coeffs(
            1,
            [
                (idx(&[0]), Complex64::new(1.0, 0.0)),
                (idx(&[1]), Complex64::new(0.5, 0.0)),
                (idx(&[-1]), Complex64::new(0.5, 0.0)),
            ],
        )
        .unwrap()
    }

    fn bl_setup(t: u32) -> (FeatureMap, PiDistribution) {
        let map = FeatureMap::BandLimited(BandLimitedMap::new(1, t).unwrap());
        let pi = PiDistribution::build(&map, 2 * t).unwrap();
        (map, pi)
    }

    fn random_hermitian(n: usize, seed: u64) -> DMatrix<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = DMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        hermitian_part(&w)
    }

    #[test]
    fn expected_objective_at_zero_matrix() {
        // at A = 0 the objective is f_0 minus the absolute coefficient mass
        let f = one_plus_cos();
        let (map, pi) = bl_setup(1);
        let zero = PsdModel::zero(map);
        let got = exact_expected_objective(&f, &zero, &pi).unwrap();
        assert_abs_diff_eq!(got, 1.0 - 1.0, epsilon = 1e-12);
    }

    #[test]
    fn loss_terms_average_to_expected_objective() {
        let f = one_plus_cos();
        let (map, pi) = bl_setup(1);
        let a = project(&random_hermitian(3, 8), 1.5);
        let model = PsdModel::from_dense(map.clone(), a.clone()).unwrap();
        let mut acc = 0.0;
        for k in pi.support() {
            let m = map.m_matrix(k).unwrap();
            acc += pi.pmf(k) * loss_term(&f, &a, &pi, k, &m);
        }
        let want = exact_expected_objective(&f, &model, &pi).unwrap();
        assert_abs_diff_eq!(acc, want, epsilon = 1e-10);
    }

    #[test]
    fn smoothed_loss_is_uniformly_close() {
        let f = one_plus_cos();
        let (map, pi) = bl_setup(1);
        let a = project(&random_hermitian(3, 3), 2.0);
        let alpha = 0.37;
        for k in pi.support() {
            let m = map.m_matrix(k).unwrap();
            let plain = loss_term(&f, &a, &pi, k, &m);
            let smooth = smoothed_loss_term(&f, &a, &pi, k, &m, alpha);
            assert!(smooth <= plain + 1e-12, "smoothed loss must lower-bound at k={k}");
            assert!(plain - smooth <= alpha + 1e-12, "gap exceeds alpha at k={k}");
        }
    }

    #[test]
    fn ascent_matches_finite_differences() {
        let f = one_plus_cos();
        let (map, pi) = bl_setup(1);
        let a = project(&random_hermitian(3, 5), 1.0);
        let h = random_hermitian(3, 6);
        let eps = 1e-6;
        for k in pi.support() {
            let m = map.m_matrix(k).unwrap();
            // plain loss away from the kink
            let r = f.coeff(k) - trace_product(&a, &m);
            if !k.is_zero() && r.norm() > 1e-3 {
                let g = ascent_direction(&f, &a, &pi, k, &m);
                let up = loss_term(&f, &(&a + &h * Complex64::new(eps, 0.0)), &pi, k, &m);
                let dn = loss_term(&f, &(&a - &h * Complex64::new(eps, 0.0)), &pi, k, &m);
                let fd = (up - dn) / (2.0 * eps);
                let inner = trace_product(&g, &h).re;
                assert_abs_diff_eq!(fd, inner, epsilon = 1e-5 * (1.0 + inner.abs()));
            }
            // smoothed loss everywhere
            let alpha = 0.2;
            let g = smoothed_ascent(&f, &a, &pi, k, &m, alpha);
            let up = smoothed_loss_term(&f, &(&a + &h * Complex64::new(eps, 0.0)), &pi, k, &m, alpha);
            let dn = smoothed_loss_term(&f, &(&a - &h * Complex64::new(eps, 0.0)), &pi, k, &m, alpha);
            let fd = (up - dn) / (2.0 * eps);
            let inner = trace_product(&g, &h).re;
            assert_abs_diff_eq!(fd, inner, epsilon = 1e-5 * (1.0 + inner.abs()));
        }
    }

    #[test]
    fn projection_is_idempotent_and_feasible() {
        for seed in 0..5u64 {
            let m = random_hermitian(4, seed) * Complex64::new(3.0, 0.0);
            let p = project(&m, 1.0);
            assert!(p.norm() <= 1.0 + 1e-12);
            let eig = p.clone().symmetric_eigen();
            assert!(eig.eigenvalues.iter().all(|&v| v >= -1e-12));
            let pp = project(&p, 1.0);
            assert!((&pp - &p).norm() <= 1e-10);
        }
    }

    #[test]
    fn projection_is_nonexpansive() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let x = DMatrix::from_fn(4, 4, |_, _| {
                Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
            });
            let y = DMatrix::from_fn(4, 4, |_, _| {
                Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
            });
            let (hx, hy) = (hermitian_part(&x), hermitian_part(&y));
            let d_before = (&hx - &hy).norm();
            let d_after = (project(&hx, 0.8) - project(&hy, 0.8)).norm();
            assert!(d_after <= d_before + 1e-10);
        }
    }

    #[test]
    fn sga_zero_iterations_returns_zero_model() {
        let f = one_plus_cos();
        let (map, pi) = bl_setup(1);
        let out = sga_solve(&f, &map, &pi, &SolverConfig::new(1.0, 0, 1)).unwrap();
        assert_eq!(out.model.a_frob(), 0.0);
        assert!(out.trace.is_empty());
    }

    #[test]
    fn sga_improves_expected_objective() {
        // (1 + cos)^2 scores -1.0 at A = 0 but is an exact square at t = 1, so the
        // optimum is 0 and there is a full unit of room to climb
        let c = one_plus_cos();
        let f = c.product(&c).unwrap();
        let (map, pi) = bl_setup(1);
        let mut cfg = SolverConfig::new(2.0, 2000, 11);
        cfg.trace_every = 100;
        let out = sga_solve(&f, &map, &pi, &cfg).unwrap();
        let at_zero = exact_expected_objective(&f, &PsdModel::zero(map.clone()), &pi).unwrap();
        let at_end = exact_expected_objective(&f, &out.model, &pi).unwrap();
        assert_abs_diff_eq!(at_zero, -1.0, epsilon = 1e-12);
        assert!(at_end > at_zero + 0.3, "no progress: {at_zero} -> {at_end}");
        assert!(out.model.a_frob() <= 2.0 + 1e-9);
        assert_eq!(out.trace.len(), 20);
    }

    #[test]
    fn sga_is_deterministic_per_seed() {
        let f = one_plus_cos();
        let (map, pi) = bl_setup(1);
        let cfg = SolverConfig::new(2.0, 500, 17);
        let a = sga_solve(&f, &map, &pi, &cfg).unwrap();
        let b = sga_solve(&f, &map, &pi, &cfg).unwrap();
        assert_eq!(a.model.a_matrix(), b.model.a_matrix());
        let mut other = cfg.clone();
        other.seed = 18;
        let c = sga_solve(&f, &map, &pi, &other).unwrap();
        assert_ne!(a.model.a_matrix(), c.model.a_matrix());
    }

    #[test]
    fn bm_improves_expected_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = random_objective(1, 2, 256, &mut rng).unwrap();
        let (map, pi) = bl_setup(2);
        let radius = default_radius(&f).unwrap();
        let mut cfg = SolverConfig::new(radius, 4000, 3);
        cfg.rank = Some(3);
        let out = bm_solve(&f, &map, &pi, &cfg).unwrap();
        assert!(!out.diverged);
        let at_zero = exact_expected_objective(&f, &PsdModel::zero(map.clone()), &pi).unwrap();
        let at_end = exact_expected_objective(&f, &out.model, &pi).unwrap();
        assert!(at_end > at_zero, "no progress: {at_zero} -> {at_end}");
        // factored model is PSD by construction: pointwise nonnegative
        for j in 0..50 {
            assert!(out.model.eval(&[j as f64 / 50.0]) >= 0.0);
        }
    }

    #[test]
    fn bm_rejects_nonpositive_smoothing() {
        let f = one_plus_cos();
        let (map, pi) = bl_setup(1);
        let mut cfg = SolverConfig::new(1.0, 10, 1);
        cfg.alpha = Some(0.0);
        assert!(matches!(bm_solve(&f, &map, &pi, &cfg), Err(Error::Domain(_))));
        cfg.alpha = Some(-1.0);
        assert!(bm_solve(&f, &map, &pi, &cfg).is_err());
    }

    #[test]
    fn bm_divergence_detector_trips_on_huge_steps() {
        let f = one_plus_cos();
        let (map, pi) = bl_setup(1);
        let mut cfg = SolverConfig::new(1.0, 5000, 9);
        cfg.stepsize = Some(1e6);
        let out = bm_solve(&f, &map, &pi, &cfg).unwrap();
        assert!(out.diverged);
        assert!(out.iters_run < 5000);
    }

    #[test]
    fn solver_rejects_uncovered_objective() {
        let f = TrigPoly::from_coeffs(1, [(idx(&[5]), Complex64::new(1.0, 0.0))]).unwrap();
        let (map, pi) = bl_setup(1);
        assert!(sga_solve(&f, &map, &pi, &SolverConfig::new(1.0, 10, 1)).is_err());
    }

    #[test]
    fn solver_rejects_bad_radius() {
        let f = one_plus_cos();
        let (map, pi) = bl_setup(1);
        assert!(sga_solve(&f, &map, &pi, &SolverConfig::new(0.0, 10, 1)).is_err());
        assert!(sga_solve(&f, &map, &pi, &SolverConfig::new(f64::NAN, 10, 1)).is_err());
    }

    #[test]
    fn default_radius_covers_cosine_instance() {
        // for 1 + cos the optimal model needs trace about f_0 - min f = 1
        let r = default_radius(&one_plus_cos()).unwrap();
        assert!(r >= 1.0 && r < 3.0, "radius {r} outside the expected window");
    }
}
