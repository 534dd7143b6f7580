//! Randomized invariants: algebraic identities of the coefficient tables, the
//! norm chain, projection geometry, moment-table symmetry, and serialization
//! round trips. Each property is quantified over seeded random instances.

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use torus_sos::features::{FeatureMap, KernelMap};
use torus_sos::fourier::random_objective;
use torus_sos::optimizer::project;
use torus_sos::{MultiIndex, PiDistribution, TrigPoly};

fn poly(seed: u64, dim: usize, bandwidth: u32) -> TrigPoly {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_objective(dim, bandwidth, 64, &mut rng).unwrap()
}

fn max_coeff_diff(a: &TrigPoly, b: &TrigPoly) -> f64 {
    let mut worst = 0.0_f64;
    for (k, &v) in a.iter() {
        worst = worst.max((v - b.coeff(k)).norm());
    }
    for (k, &v) in b.iter() {
        worst = worst.max((v - a.coeff(k)).norm());
    }
    worst
}

fn hermitian(seed: u64, n: usize) -> DMatrix<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = DMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rand::Rng::gen::<f64>(&mut rng) - 0.5, rand::Rng::gen::<f64>(&mut rng) - 0.5)
    });
    (&raw + raw.adjoint()) * Complex64::new(0.5, 0.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn product_commutes(seed_a in 0u64..1000, seed_b in 0u64..1000, bw in 1u32..5) {
        let f = poly(seed_a, 1, bw);
        let g = poly(seed_b, 1, bw);
        let fg = f.product(&g).unwrap();
        let gf = g.product(&f).unwrap();
        prop_assert!(max_coeff_diff(&fg, &gf) <= 1e-12);
    }

    #[test]
    fn product_associates(seed in 0u64..1000) {
        let f = poly(seed, 1, 2);
        let g = poly(seed.wrapping_add(1), 1, 3);
        let h = poly(seed.wrapping_add(2), 1, 2);
        let left = f.product(&g).unwrap().product(&h).unwrap();
        let right = f.product(&g.product(&h).unwrap()).unwrap();
        let scale = 1.0 + left.f_norm();
        prop_assert!(max_coeff_diff(&left, &right) <= 1e-12 * scale);
    }

    #[test]
    fn norm_chain_dominates_pointwise_values(seed in 0u64..1000, x in 0.0..1.0f64, dim in 1usize..3) {
        let f = poly(seed, dim, 3);
        let point = vec![x; dim];
        let value = f.eval(&point).abs();
        let f_norm = f.f_norm();
        let c1 = f.cn_norm_bound(1);
        prop_assert!(value <= f_norm + 1e-12 * (1.0 + f_norm));
        prop_assert!(f_norm <= c1 + 1e-12 * (1.0 + c1));
    }

    #[test]
    fn eval_is_real(seed in 0u64..1000, x in 0.0..1.0f64, y in 0.0..1.0f64) {
        let f = poly(seed, 2, 2);
        let z = f.eval_complex(&[x, y]);
        prop_assert!(z.im.abs() <= 1e-12 * (1.0 + z.re.abs()));
        prop_assert_eq!(f.eval(&[x, y]), z.re);
    }

    #[test]
    fn projection_is_idempotent_feasible_and_nonexpansive(
        seed in 0u64..1000, n in 2usize..6, radius in 0.1..5.0f64
    ) {
        let m = hermitian(seed, n);
        let p = project(&m, radius);
        let pp = project(&p, radius);
        let scale = 1.0 + p.norm();
        prop_assert!((&pp - &p).norm() <= 1e-10 * scale, "idempotent");
        prop_assert!(p.norm() <= radius * (1.0 + 1e-12), "inside the ball");
        let eig = p.clone().symmetric_eigen();
        for ev in eig.eigenvalues.iter() {
            prop_assert!(*ev >= -1e-10 * scale, "PSD after projection");
        }
        let other = hermitian(seed.wrapping_add(7), n);
        let q = project(&other, radius);
        prop_assert!((&p - &q).norm() <= (&m - &other).norm() + 1e-10, "nonexpansive");
    }

    #[test]
    fn moment_tables_conjugate_under_negation(
        seed in 0u64..200, n in 2usize..5, rho in 0.2..0.8f64, k in -4i32..=4
    ) {
        let map = FeatureMap::Kernel(KernelMap::sampled(1, n, rho, seed).unwrap());
        let k = MultiIndex::from_slice(&[k]);
        let pos = map.m_matrix(&k).unwrap();
        let neg = map.m_matrix(&k.neg()).unwrap();
        let diff = (&neg - pos.adjoint()).norm();
        prop_assert!(diff <= 1e-12 * (1.0 + pos.norm()));
    }

    #[test]
    fn sampling_pmf_is_symmetric_and_normalized(
        seed in 0u64..200, n in 2usize..5, rho in 0.2..0.7f64, k_supp in 1u32..6
    ) {
        let map = FeatureMap::Kernel(KernelMap::sampled(1, n, rho, seed).unwrap());
        let pi = PiDistribution::build(&map, k_supp).unwrap();
        let total: f64 = pi.support().iter().map(|k| pi.pmf(k)).sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        for k in pi.support() {
            let mirrored = pi.pmf(&k.neg());
            prop_assert!((pi.pmf(k) - mirrored).abs() <= 1e-12 * pi.pmf(k).max(1e-300));
        }
    }

    #[test]
    fn coefficient_tables_round_trip_json_bitwise(seed in 0u64..1000, dim in 1usize..3, bw in 1u32..4) {
        let f = poly(seed, dim, bw);
        let text = serde_json::to_string(&f.to_json()).unwrap();
        let back = TrigPoly::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        prop_assert_eq!(back.support_len(), f.support_len());
        for (k, &v) in f.iter() {
            let w = back.coeff(k);
            prop_assert!(v.re.to_bits() == w.re.to_bits() && v.im.to_bits() == w.im.to_bits());
        }
    }

    #[test]
    fn canonical_order_is_degree_then_lex(dim in 1usize..4, radius in 0u32..4) {
        let ball = MultiIndex::ball(dim, radius);
        for pair in ball.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            let degrees = (a.degree(), a.entries());
            prop_assert!(degrees < (b.degree(), b.entries()), "strictly increasing");
        }
        // negation is an involution on the ball, and exactly one of each
        // nonzero pair sits in the canonical half
        for k in &ball {
            prop_assert!(ball.binary_search(&k.neg()).is_ok());
            if !k.is_zero() {
                prop_assert!(k.is_canonical() ^ k.neg().is_canonical());
            }
        }
    }
}
