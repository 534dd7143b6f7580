//! Coefficient tables on the torus: construction, evaluation, products, and
//! the norm chain used everywhere else in the crate.
//!
//!     cargo run --example trig_basics

use num_complex::Complex64;
use torus_sos::{MultiIndex, TrigPoly};

fn main() {
    // f(x) = 1 + cos(2 pi x), stored as the Hermitian pair f_{+-1} = 1/2
    let f = TrigPoly::from_coeffs(
        1,
        [
            (MultiIndex::from_slice(&[0]), Complex64::new(1.0, 0.0)),
            (MultiIndex::from_slice(&[1]), Complex64::new(0.5, 0.0)),
            (MultiIndex::from_slice(&[-1]), Complex64::new(0.5, 0.0)),
        ],
    )
    .unwrap();

    println!("f = 1 + cos(2 pi x)");
    for x in [0.0, 0.25, 0.5] {
        println!("  f({x:.2}) = {:+.6}", f.eval(&[x]));
    }

    // squaring doubles the bandwidth and keeps evaluations consistent
    let f2 = f.product(&f).unwrap();
    println!("\nf^2 has bandwidth {} and {} stored coefficients", f2.bandwidth(), f2.support_len());
    let x = [0.3];
    println!(
        "  f(0.3)^2 = {:.9}  vs  (f^2)(0.3) = {:.9}",
        f.eval(&x) * f.eval(&x),
        f2.eval(&x)
    );

    // the norm chain: sup |f| <= sum |f_k| <= weighted smoothness bounds
    println!("\nnorm chain for f^2:");
    println!("  sup-norm upper bound  (f_norm)        = {:.6}", f2.f_norm());
    println!("  Lipschitz-scale bound (cn_norm, m=1)  = {:.6}", f2.cn_norm_bound(1));
    println!("  curvature-scale bound (cn_norm, m=2)  = {:.6}", f2.cn_norm_bound(2));

    // a 2D table: g(x) = cos(2 pi (x1 + 2 x2)), bandwidth counts |k1| + |k2|
    let g = TrigPoly::from_coeffs(
        2,
        [
            (MultiIndex::from_slice(&[1, 2]), Complex64::new(0.5, 0.0)),
            (MultiIndex::from_slice(&[-1, -2]), Complex64::new(0.5, 0.0)),
        ],
    )
    .unwrap();
    println!("\ng = cos(2 pi (x1 + 2 x2)): bandwidth {}", g.bandwidth());
    println!("  g(0.25, 0.375) = {:+.6} (expect cos(2 pi) = +1 at x1 + 2 x2 = 1)", g.eval(&[0.25, 0.375]));

    // canonical storage keeps one representative per conjugate pair
    println!("\ncanonical half of g's support:");
    for (k, v) in g.iter() {
        if k.is_canonical() {
            println!("  k = {k}: {v}");
        }
    }
}
