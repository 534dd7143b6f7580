//! The brute-force oracles that keep the closed forms honest: torus quadrature
//! for moment matrices, FFT extraction for coefficients, and dense-grid
//! minimization with a certified slack.
//!
//!     cargo run --example oracle_checks

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use torus_sos::features::KernelMap;
use torus_sos::oracles::{fft_coeffs, grid_min, m_matrix_quadrature, GridSpec};
use torus_sos::{FeatureMap, MultiIndex};

fn main() {
    // 1. closed-form kernel moment matrix vs equal-weight quadrature
    let map = FeatureMap::Kernel(KernelMap::sampled(1, 5, 0.5, 11).unwrap());
    println!("kernel map (n=5, rho=0.5): closed form vs 2048-point quadrature");
    for k in [0, 1, 3] {
        let k = MultiIndex::from_slice(&[k]);
        let closed = map.m_matrix(&k).unwrap();
        let quad = m_matrix_quadrature(&map, &k, 2048).unwrap();
        let diff = closed
            .iter()
            .zip(quad.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0_f64, f64::max);
        println!("  k = {k}: max entry diff {diff:.3e}");
    }

    // 2. FFT of pointwise evaluations recovers a table's own coefficients
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let f = torus_sos::fourier::random_objective(1, 8, 512, &mut rng).unwrap();
    let report = fft_coeffs(|x| f.eval(x), 1, 256, 10).unwrap();
    let mut worst = 0.0_f64;
    for (k, v) in &report.coeffs {
        worst = worst.max((v - f.coeff(k)).norm());
    }
    println!("\nFFT round trip on a bandwidth-8 table ({} frequencies):", report.coeffs.len());
    println!("  max coefficient error {worst:.3e}, aliasing flag: {}", report.aliasing_suspected);

    // an unresolved grid trips the aliasing heuristic instead of failing silently
    let coarse = fft_coeffs(|x| f.eval(x), 1, 18, 8).unwrap();
    println!("  at 18 points the flag reads: {}", coarse.aliasing_suspected);

    // 3. grid minimization brackets the true minimum: value - slack <= min f <= value
    let spec = GridSpec::new(1, 4096).unwrap();
    let found = grid_min(&f, &spec).unwrap();
    println!("\ngrid scan at 4096 points:");
    println!("  min {:+.8} at x = {:.5}, slack {:.2e}", found.value, found.argmin[0], found.slack);
    let fine = grid_min(&f, &GridSpec::new(1, 16_384).unwrap()).unwrap();
    println!(
        "  refining to 16384 points moves the value by {:.2e} (within the coarse slack: {})",
        (fine.value - found.value).abs(),
        (fine.value - found.value).abs() <= found.slack
    );
}
