//! The sampling distribution over frequencies that drives both stochastic
//! solvers: proportional to moment-matrix mass plus a smoothness floor, with
//! a certified truncation tail.
//!
//!     cargo run --example frequency_sampling

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use torus_sos::features::KernelMap;
use torus_sos::{FeatureMap, PiDistribution};

fn main() {
    let map = FeatureMap::Kernel(KernelMap::sampled(1, 6, 0.5, 3).unwrap());
    let pi = PiDistribution::build(&map, 8).unwrap();

    println!(
        "support radius {}, {} frequencies, normalizer Z = {:.6}",
        pi.support_radius(),
        pi.support().len(),
        pi.normalizer()
    );
    println!("truncation tail eps = {:.3e}\n", pi.eps_tail());

    println!(" k   weight (|M^k|_F)   floor (mu_k)    pmf");
    for k in pi.support() {
        let e = k.entries()[0];
        if (0..=4).contains(&e) {
            println!(
                "{:+2}   {:<16.6}  {:<12.3e}  {:.6}",
                e,
                pi.frob(k).unwrap(),
                pi.mu(k).unwrap(),
                pi.pmf(k)
            );
        }
    }

    // inverse-CDF sampling is deterministic per seed; empirical frequencies
    // track the pmf
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut counts: BTreeMap<i32, usize> = BTreeMap::new();
    let draws = 20_000;
    for _ in 0..draws {
        *counts.entry(pi.sample(&mut rng).entries()[0]).or_default() += 1;
    }
    println!("\nempirical vs exact over {draws} draws:");
    for k in [-2, -1, 0, 1, 2] {
        let observed = *counts.get(&k).unwrap_or(&0) as f64 / draws as f64;
        let exact = pi.pmf(&torus_sos::MultiIndex::from_slice(&[k]));
        println!("  k = {k:+}: observed {observed:.4}, exact {exact:.4}");
    }

    // the pmf peaks at zero and decays with the moment mass
    let zero = torus_sos::MultiIndex::zero(1);
    println!("\npeak at the origin: pmf(0) = {:.4}", pi.pmf(&zero));
}
