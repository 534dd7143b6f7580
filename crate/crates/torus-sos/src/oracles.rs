//! Independent reference computations: dense grid scans, FFT coefficient recovery,
//! and brute-force quadrature of moment matrices.
//!
//! These paths deliberately re-derive quantities the rest of the crate computes in
//! closed form — [`grid_min`] evaluates the pointwise sum directly instead of going
//! through any transform, [`fft_coeffs`] recovers coefficients from samples alone,
//! and [`m_matrix_quadrature`] integrates `phi phi^*` numerically rather than using
//! the moment formulas — so the two routes stay comparable in tests and from the
//! command line.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::FeatureMap;
use crate::fftgrid;
use crate::fourier::{MultiIndex, TrigPoly};

/// Hard cap on total grid points (`n^d`), 2^24.
pub const GRID_BUDGET: usize = 1 << 24;

/// A uniform grid `{0, 1/n, ..., (n-1)/n}^d`, capped at [`GRID_BUDGET`] points.
#[derive(Clone, Copy, Debug)]
pub struct GridSpec {
    dim: usize,
    n: usize,
}

impl GridSpec {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("dimension must be at least 1".into()));
        }
        if n < 2 {
            return Err(Error::Domain("grid needs at least 2 points per axis".into()));
        }
        let total = n
            .checked_pow(dim as u32)
            .filter(|&t| t <= GRID_BUDGET)
            .ok_or_else(|| {
                Error::Budget(format!("grid {n}^{dim} exceeds the {GRID_BUDGET}-point budget"))
            })?;
        let _ = total;
        Ok(GridSpec { dim, n })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn total(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Decodes a flat row-major index (last axis fastest) into a grid point.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        debug_assert!(flat < self.total());
        let mut rem = flat;
        let mut out = vec![0.0; self.dim];
        for a in (0..self.dim).rev() {
            out[a] = (rem % self.n) as f64 / self.n as f64;
            rem /= self.n;
        }
        out
    }
}

/// Result of a dense scan: the grid minimum, where it was attained, and a slack
/// that turns it into a certified bound on the true minimum
/// (`min f >= value - slack`).
#[derive(Clone, Debug)]
pub struct GridMin {
    pub value: f64,
    pub argmin: Vec<f64>,
    pub slack: f64,
}

/// Scans the grid with direct pointwise evaluation and returns the minimum with a
/// Lipschitz slack `cn_norm_bound(f, 1) * d / n`. Ties resolve to the first point
/// in flat index order.
pub fn grid_min(f: &TrigPoly, spec: &GridSpec) -> Result<GridMin> {
    if f.dim() != spec.dim {
        return Err(Error::DimMismatch { expected: f.dim(), got: spec.dim });
    }
    let total = spec.total();
    let chunk = 8192usize;
    let n_chunks = total.div_ceil(chunk);
    // per-chunk (min, first flat index); chunks combined in order so ties stay
    // first-occurrence regardless of thread count
    let per_chunk: Vec<(f64, usize)> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * chunk;
            let hi = (lo + chunk).min(total);
            let mut best = f64::INFINITY;
            let mut best_at = lo;
            for flat in lo..hi {
                let v = f.eval(&spec.point(flat));
                if v < best {
                    best = v;
                    best_at = flat;
                }
            }
            (best, best_at)
        })
        .collect();
    let (value, flat) = per_chunk
        .into_iter()
        .fold((f64::INFINITY, 0usize), |acc, item| if item.0 < acc.0 { item } else { acc });
    let slack = f.cn_norm_bound(1) * spec.dim as f64 / spec.n as f64;
    Ok(GridMin { value, argmin: spec.point(flat), slack })
}

/// Coefficients recovered from grid samples of an arbitrary function.
#[derive(Clone, Debug)]
pub struct FftReport {
    /// Recovered coefficients for `|k| <= radius`.
    pub coeffs: BTreeMap<MultiIndex, Complex64>,
    /// True when spectral mass near the Nyquist folding frequency suggests the
    /// sampled function is not resolved at this grid size.
    pub aliasing_suspected: bool,
    pub points_per_axis: usize,
}

/// Samples `f` on the grid and reads coefficients out of a forward FFT.
///
/// Exact (to rounding) for trigonometric polynomials with bandwidth below `n/2`;
/// for anything else the report's aliasing flag is the only warning you get.
/// Requires `2 * radius < n` so requested bins are unambiguous.
pub fn fft_coeffs<F>(f: F, dim: usize, n: usize, radius: u32) -> Result<FftReport>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if dim > 2 {
        return Err(Error::Domain("coefficient recovery supports d in {1, 2}".into()));
    }
    let spec = GridSpec::new(dim, n)?;
    if 2 * radius as usize >= n {
        return Err(Error::Domain(format!(
            "radius {radius} needs more than {} grid points per axis",
            2 * radius
        )));
    }
    let total = spec.total();
    let samples: Vec<Complex64> = (0..total)
        .into_par_iter()
        .map(|i| Complex64::new(f(&spec.point(i)), 0.0))
        .collect();
    let bins = fftgrid::forward_bins(samples, dim, n);

    // fraction of spectral mass at folded frequencies in the top quarter band
    let near_nyquist = |b: usize| -> bool {
        let folded = b.min(n - b);
        4 * folded >= n
    };
    let mut total_mass = 0.0;
    let mut edge_mass = 0.0;
    for (flat, z) in bins.iter().enumerate() {
        let mass = z.norm_sqr();
        total_mass += mass;
        let mut rem = flat;
        let mut edge = false;
        for _ in 0..dim {
            if near_nyquist(rem % n) {
                edge = true;
            }
            rem /= n;
        }
        if edge {
            edge_mass += mass;
        }
    }
    let aliasing_suspected = edge_mass > 1e-9 * total_mass.max(f64::MIN_POSITIVE);

    let mut coeffs = BTreeMap::new();
    for k in MultiIndex::ball(dim, radius) {
        let mut flat = 0usize;
        for &ka in k.entries() {
            flat = flat * n + (ka as i64).rem_euclid(n as i64) as usize;
        }
        coeffs.insert(k, bins[flat]);
    }
    Ok(FftReport { coeffs, aliasing_suspected, points_per_axis: n })
}

/// Equal-weight quadrature of `M^(k) = integral of phi(x) phi(x)^* e^{-2 pi i k.x}`.
///
/// On a periodic grid the equal-weight rule is spectrally accurate: exact below the
/// Nyquist limit, with error decaying at the feature spectrum's own rate beyond it.
/// Callers must resolve the integrand — at least `4 * (1 + |k|)` points per axis are
/// required, and band-limited maps additionally need `n > 2 (2t + |k|)`.
pub fn m_matrix_quadrature(
    map: &FeatureMap,
    k: &MultiIndex,
    points_per_axis: usize,
) -> Result<DMatrix<Complex64>> {
    if k.dim() != map.dim() {
        return Err(Error::DimMismatch { expected: map.dim(), got: k.dim() });
    }
    let kmax = k.entries().iter().map(|e| e.unsigned_abs()).max().unwrap_or(0) as usize;
    let mut need = 4 * (1 + kmax);
    if let Some(radius) = map.moment_radius() {
        need = need.max(2 * (radius as usize + kmax) + 2);
    }
    if points_per_axis < need {
        return Err(Error::Domain(format!(
            "{points_per_axis} points per axis cannot resolve the integrand (need >= {need})"
        )));
    }
    let spec = GridSpec::new(map.dim(), points_per_axis)?;
    let total = spec.total();
    let n = map.n();
    let chunk = 1024usize.max(total / (8 * rayon::current_num_threads().max(1))).min(total);
    let n_chunks = total.div_ceil(chunk);
    let partials: Vec<DMatrix<Complex64>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * chunk;
            let hi = (lo + chunk).min(total);
            let mut acc = DMatrix::<Complex64>::zeros(n, n);
            for flat in lo..hi {
                let x = spec.point(flat);
                let phi = map.phi(&x);
                let w = Complex64::cis(-TAU * k.dot(&x));
                // acc += w * phi phi^*
                for j in 0..n {
                    let col = w * phi[j].conj();
                    for i in 0..n {
                        acc[(i, j)] += phi[i] * col;
                    }
                }
            }
            acc
        })
        .collect();
    let mut sum = DMatrix::<Complex64>::zeros(n, n);
    for p in partials {
        sum += p;
    }
    Ok(sum / Complex64::new(total as f64, 0.0))
}
