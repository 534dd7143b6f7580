//! An exactly representable instance, end to end: f = (1 + cos 2 pi x)^2 is
//! itself a square of a degree-1 table, so the degree-1 band-limited model can
//! match it perfectly and the certified lower bound reaches the true minimum 0.
//!
//!     cargo run --example certified_square

use num_complex::Complex64;
use torus_sos::certify::{lower_det, upper_bound, UpperMethod};
use torus_sos::features::{model_from_squares, BandLimitedMap};
use torus_sos::optimizer::{exact_expected_objective, sga_solve, SolverConfig};
use torus_sos::{MultiIndex, PiDistribution, TrigPoly};

fn main() {
    let c = TrigPoly::from_coeffs(
        1,
        [
            (MultiIndex::from_slice(&[0]), Complex64::new(1.0, 0.0)),
            (MultiIndex::from_slice(&[1]), Complex64::new(0.5, 0.0)),
            (MultiIndex::from_slice(&[-1]), Complex64::new(0.5, 0.0)),
        ],
    )
    .unwrap();
    let f = c.product(&c).unwrap();
    println!("f = (1 + cos 2 pi x)^2, minimum 0 at x = 1/2\n");

    // the known-perfect model: A built directly from the square root
    let map = BandLimitedMap::new(1, 1).unwrap();
    let exact = model_from_squares(&map, std::slice::from_ref(&c)).unwrap();
    let det = lower_det(&f, &exact, 2).unwrap();
    println!("hand-built square model:");
    println!("  certified lower bound = {:+.3e} (tails: {:.1e})", det.value, det.model_tail);

    // the solver finds the same model from scratch
    let fmap = torus_sos::FeatureMap::BandLimited(map);
    let pi = PiDistribution::build(&fmap, 2).unwrap();
    let mut cfg = SolverConfig::new(1.1 * exact.a_frob(), 30_000, 11);
    cfg.trace_every = 0;
    let outcome = sga_solve(&f, &fmap, &pi, &cfg).unwrap();
    let solved = lower_det(&f, &outcome.model, 2).unwrap();
    println!("\nprojected stochastic ascent, {} iterations:", outcome.iters_run);
    println!("  certified lower bound = {:+.6}", solved.value);
    println!(
        "  expected objective    = {:+.6} (0 is optimal here)",
        exact_expected_objective(&f, &outcome.model, &pi).unwrap()
    );

    // upper bound from a seeded random scan closes the certificate
    let up = upper_bound(&f, UpperMethod::Random { points: 10_000, seed: 5 }).unwrap();
    println!("\nrandom-scan upper bound = {:+.3e} at x = {:.4}", up.value, up.argmin[0]);
    println!("gap against the solved model = {:.6}", up.value - solved.value);
    println!("\nany PSD model certifies: even A = 0 gives a sound (weaker) bound");
    let zero = torus_sos::features::PsdModel::zero(fmap);
    let at_zero = lower_det(&f, &zero, 2).unwrap();
    println!("  A = 0 bound = {:+.4} (= f_0 - sum |f_k|)", at_zero.value);
}
