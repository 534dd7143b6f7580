//! Certificates are re-checkable artifacts: serialize a model, reload it
//! elsewhere, recompute the bound, and watch tampering get caught by the
//! PSD re-verification.
//!
//!     cargo run --example audit_roundtrip

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use torus_sos::certify::lower_det;
use torus_sos::features::{BandLimitedMap, PsdModel};
use torus_sos::optimizer::{sga_solve, SolverConfig};
use torus_sos::{FeatureMap, PiDistribution};

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let f = torus_sos::fourier::random_objective(1, 6, 1024, &mut rng).unwrap();
    let map = FeatureMap::BandLimited(BandLimitedMap::new(1, 3).unwrap());
    let pi = PiDistribution::build(&map, 6).unwrap();
    let outcome = sga_solve(&f, &map, &pi, &SolverConfig::new(2.0, 5_000, 3)).unwrap();
    let original = lower_det(&f, &outcome.model, 6).unwrap();
    println!("solver's certified bound: {:+.8}", original.value);

    // round trip through JSON: the reloaded model certifies the same value
    let text = serde_json::to_string_pretty(&outcome.model.to_json()).unwrap();
    println!("serialized model: {} bytes", text.len());
    let reloaded = PsdModel::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
    let rechecked = lower_det(&f, &reloaded, 6).unwrap();
    println!("reloaded model's bound:   {:+.8}", rechecked.value);
    assert_eq!(original.value.to_bits(), rechecked.value.to_bits());
    println!("bitwise identical: certificates survive the wire\n");

    // tampering with the parameter matrix breaks PSD-ness and is rejected on load
    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    doc["a"][0][0]["re"] = serde_json::json!(-0.4);
    match PsdModel::from_json(&doc) {
        Err(e) => println!("tampered file rejected: {e}"),
        Ok(_) => unreachable!("a negative diagonal cannot pass the eigen check"),
    }

    // scaling a valid model keeps soundness (the bound just weakens)
    let half = PsdModel::from_dense(
        reloaded.map().clone(),
        reloaded.a_matrix().map(|z| 0.5 * z),
    )
    .unwrap();
    let weaker = lower_det(&f, &half, 6).unwrap();
    println!("\nhalf-scaled model still certifies: {:+.8} (weaker, still sound)", weaker.value);
}
