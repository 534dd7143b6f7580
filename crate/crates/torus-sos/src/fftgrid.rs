//! FFT-backed bulk evaluation on regular grids, shared by the generator and the oracles.
//!
//! Kept separate from `TrigPoly::eval` on purpose: the direct exponential sum and the
//! FFT route cross-validate each other in tests, so neither may be expressed in terms
//! of the other.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::fourier::TrigPoly;

/// Evaluates `p` on the regular grid `{j/n}^d` (row-major for d = 2).
///
/// Exact below the Nyquist limit, so `n` must exceed twice the bandwidth.
pub(crate) fn grid_values(p: &TrigPoly, n: usize) -> Result<Vec<f64>> {
    let d = p.dim();
    if d == 0 || d > 2 {
        return Err(Error::Domain(format!("grid evaluation supports d in {{1, 2}}, got {d}")));
    }
    if n <= 2 * p.bandwidth() as usize {
        return Err(Error::Domain(format!(
            "grid with {n} points per axis aliases a bandwidth-{} table",
            p.bandwidth()
        )));
    }
    let mut bins = vec![Complex64::ZERO; n.pow(d as u32)];
    for (k, v) in p.iter() {
        let e = k.entries();
        let idx = match d {
            1 => bin(e[0], n),
            _ => bin(e[0], n) * n + bin(e[1], n),
        };
        bins[idx] += v;
    }
    inverse_in_place(&mut bins, d, n);
    Ok(bins.into_iter().map(|z| z.re).collect())
}

/// Forward transform of grid samples, normalized so bin `k mod n` approximates
/// the coefficient at `k` (integration against `e^{-2 pi i k x}`).
pub(crate) fn forward_bins(mut samples: Vec<Complex64>, dim: usize, n: usize) -> Vec<Complex64> {
    assert!(dim >= 1 && dim <= 2, "forward transform supports d in {{1, 2}}");
    assert_eq!(samples.len(), n.pow(dim as u32));
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    for row in samples.chunks_exact_mut(n) {
        fft.process(row);
    }
    if dim == 2 {
        transpose_square(&mut samples, n);
        for row in samples.chunks_exact_mut(n) {
            fft.process(row);
        }
        transpose_square(&mut samples, n);
    }
    let scale = 1.0 / n.pow(dim as u32) as f64;
    for z in &mut samples {
        *z *= scale;
    }
    samples
}

fn inverse_in_place(bins: &mut [Complex64], dim: usize, n: usize) {
    let mut planner = FftPlanner::new();
    let ifft = planner.plan_fft_inverse(n);
    // The unnormalized inverse sums bin[k] * e^{+2 pi i k j / n}, which is exactly the
    // reconstruction convention, so no scaling is applied.
    for row in bins.chunks_exact_mut(n) {
        ifft.process(row);
    }
    if dim == 2 {
        transpose_square(bins, n);
        for row in bins.chunks_exact_mut(n) {
            ifft.process(row);
        }
        transpose_square(bins, n);
    }
}

fn transpose_square(data: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

fn bin(k: i32, n: usize) -> usize {
    k.rem_euclid(n as i32) as usize
}
