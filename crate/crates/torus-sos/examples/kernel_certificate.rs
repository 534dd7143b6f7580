//! Certifying a random smooth objective with the sampled kernel map and the
//! factored (Burer-Monteiro) solver — the workflow behind the experiment
//! figures, at desk scale.
//!
//!     cargo run --release --example kernel_certificate

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use torus_sos::certify::{lower_det, upper_bound, Report, UpperMethod};
use torus_sos::features::KernelMap;
use torus_sos::optimizer::{bm_solve, default_radius, SolverConfig};
use torus_sos::{FeatureMap, PiDistribution};

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let f = torus_sos::fourier::random_objective(1, 15, 4096, &mut rng).unwrap();
    println!("random 1D objective: bandwidth 15, f_norm {:.4}\n", f.f_norm());

    // node count controls approximation quality; compare a small and a larger map
    for n in [25, 100] {
        let map = FeatureMap::Kernel(KernelMap::sampled(1, n, 0.85, 7).unwrap());
        let pi = PiDistribution::build(&map, PiDistribution::default_support(&map, &f).unwrap()).unwrap();

        let mut cfg = SolverConfig::new(default_radius(&f).unwrap(), 60_000, 13);
        cfg.alpha = Some(1e-3 * f.f_norm());
        let outcome = bm_solve(&f, &map, &pi, &cfg).unwrap();

        let det = lower_det(&f, &outcome.model, 64).unwrap();
        let up = upper_bound(&f, UpperMethod::Random { points: 10_000, seed: 5 }).unwrap();
        let report = Report::assemble(&f, &outcome.model, det, None, up, Some(&pi));
        println!(
            "n = {n:3}: lower {:+.5}, upper {:+.5}, gap {:.5}{}",
            report.lower,
            report.upper,
            report.gap,
            if outcome.diverged { "  (diverged; last finite iterate certified)" } else { "" }
        );
        println!(
            "         tails: objective {:.2e}, model {:.2e}, |A|_F = {:.3}",
            report.det.objective_tail, report.det.model_tail, report.det.a_frob
        );
    }

    println!("\nlarger maps buy tighter certificates at higher per-step cost;");
    println!("rho and the smoothing scale are the knobs worth sweeping (see `solve --tune-rho`).");
}
