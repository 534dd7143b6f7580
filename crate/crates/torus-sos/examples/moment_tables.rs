//! Feature maps and their moment matrices M^(k): the band-limited map with its
//! hard spectral cutoff, the kernel map with its geometric tail, and the
//! certified tail sums both expose.
//!
//!     cargo run --example moment_tables

use torus_sos::features::{BandLimitedMap, KernelMap};
use torus_sos::{FeatureMap, MultiIndex};

fn main() {
    // band-limited features: M^(k) vanishes exactly beyond |k| = 2t
    let band = FeatureMap::BandLimited(BandLimitedMap::new(1, 2).unwrap());
    println!("band-limited map, t = 2 ({} features):", band.n());
    for k in 0..=5 {
        let frob = band.m_frob(&MultiIndex::from_slice(&[k])).unwrap();
        println!("  |M^({k})|_F = {frob:.6}");
    }
    println!("  tail beyond 2t: m_tail_sum(4) = {}", band.m_tail_sum(4));

    // kernel features: every M^(k) is nonzero, decaying like rho^|k|
    let kernel = FeatureMap::Kernel(KernelMap::sampled(1, 8, 0.5, 7).unwrap());
    println!("\nkernel map, n = 8, rho = 0.5:");
    for k in 0..=6 {
        let frob = kernel.m_frob(&MultiIndex::from_slice(&[k])).unwrap();
        println!("  |M^({k})|_F = {frob:.6}");
    }
    println!("  total moment mass  m_total_sum  = {:.6}", kernel.m_total_sum());
    for cut in [2, 4, 8, 16] {
        println!("  certified tail     m_tail_sum({cut:2}) = {:.6e}", kernel.m_tail_sum(cut));
    }

    // the pairing <A, M^(k)> reads off model coefficients; at A = I the model
    // is sum_i |phi_i|^2, whose zero coefficient is the feature count
    let n = band.n();
    let identity = nalgebra::DMatrix::identity(n, n);
    let c0 = band.pair(&identity, &MultiIndex::zero(1)).unwrap();
    println!("\n<I, M^(0)> for the band-limited map = {:.1} (= feature count)", c0.re);

    // moment tables in 2D follow the same interface
    let band2 = FeatureMap::BandLimited(BandLimitedMap::new(2, 1).unwrap());
    let k = MultiIndex::from_slice(&[1, -1]);
    let m = band2.m_matrix(&k).unwrap();
    println!(
        "\n2D band-limited map, t = 1: M^({k}) is {}x{} with {} nonzero entries",
        m.nrows(),
        m.ncols(),
        m.iter().filter(|z| z.norm() > 1e-14).count()
    );
}
