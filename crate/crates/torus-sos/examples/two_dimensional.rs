//! A 2D certification run: random objective on the torus [0,1]^2, kernel
//! features, projected stochastic ascent, and a grid-scan upper bound.
//!
//!     cargo run --release --example two_dimensional

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use torus_sos::certify::{lower_det, residual_rows, upper_bound, UpperMethod};
use torus_sos::features::KernelMap;
use torus_sos::optimizer::{default_radius, sga_solve, SolverConfig};
use torus_sos::{FeatureMap, PiDistribution};

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let f = torus_sos::fourier::random_objective(2, 4, 512, &mut rng).unwrap();
    println!(
        "2D objective: bandwidth 4, {} coefficients, f_norm {:.4}",
        f.support_len(),
        f.f_norm()
    );

    let map = FeatureMap::Kernel(KernelMap::sampled(2, 60, 0.4, 17).unwrap());
    let pi = PiDistribution::build(&map, PiDistribution::default_support(&map, &f).unwrap()).unwrap();
    println!(
        "kernel map: 60 nodes, rho 0.4; sampling support radius {}, {} frequencies",
        pi.support_radius(),
        pi.support().len()
    );

    let mut cfg = SolverConfig::new(default_radius(&f).unwrap(), 20_000, 23);
    cfg.trace_every = 5_000;
    let outcome = sga_solve(&f, &map, &pi, &cfg).unwrap();
    for row in &outcome.trace {
        println!("  iter {:>6}: sampled objective {:+.4}", row.iter, row.objective_estimate);
    }

    let det = lower_det(&f, &outcome.model, 12).unwrap();
    let up = upper_bound(&f, UpperMethod::Grid { points_per_axis: 256 }).unwrap();
    println!("\ncertified lower bound {:+.5} (model tail {:.2e})", det.value, det.model_tail);
    println!("grid upper bound      {:+.5} at ({:.3}, {:.3})", up.value, up.argmin[0], up.argmin[1]);
    println!("gap                   {:.5}", up.value - det.value);

    // per-frequency residuals show where the model spends its budget
    println!("\nlargest residuals |f_k - g_k|:");
    let mut rows = residual_rows(&f, &outcome.model, 6).unwrap();
    rows.sort_by(|a, b| b.residual.total_cmp(&a.residual));
    for row in rows.iter().take(5) {
        println!("  k = {}: residual {:.5}", row.k, row.residual);
    }
}
