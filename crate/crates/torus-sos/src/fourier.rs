//! Sparse trigonometric polynomials on the torus `[0, 1)^d`.
//!
//! Conventions, fixed once for the whole crate:
//!
//! * the analysis characters are `e_k(x) = e^{-2 pi i k.x}`, i.e. a coefficient is
//!   obtained by integrating against `e^{-2 pi i k.x}`;
//! * reconstruction therefore reads `f(x) = sum_k f_k e^{+2 pi i k.x}`;
//! * multi-indices are ordered by total degree `|k| = sum_j |k_j|` first, then
//!   lexicographically. Every sum over a coefficient table runs in that order, so
//!   results are bit-reproducible across runs;
//! * real-valued functions are represented by Hermitian tables (`f_{-k} = conj f_k`,
//!   `f_0` real). Constructors enforce this and all arithmetic preserves it.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fftgrid;

/// A frequency vector `k` in `Z^d`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct MultiIndex(Vec<i32>);

impl MultiIndex {
    pub fn new(entries: Vec<i32>) -> Self {
        assert!(!entries.is_empty(), "multi-index must have at least one entry");
        MultiIndex(entries)
    }

    pub fn from_slice(entries: &[i32]) -> Self {
        Self::new(entries.to_vec())
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Total degree `sum_j |k_j|`.
    pub fn degree(&self) -> u32 {
        self.0.iter().map(|e| e.unsigned_abs()).sum()
    }

    pub fn entries(&self) -> &[i32] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn neg(&self) -> Self {
        MultiIndex(self.0.iter().map(|e| -e).collect())
    }

    pub fn add(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.dim(), rhs.dim());
        MultiIndex(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(self.dim(), x.len());
        self.0.iter().zip(x).map(|(&k, &x)| k as f64 * x).sum()
    }

    /// One representative per `{k, -k}` orbit: zero, or first nonzero entry positive.
    pub fn is_canonical(&self) -> bool {
        match self.0.iter().find(|&&e| e != 0) {
            None => true,
            Some(&e) => e > 0,
        }
    }

    /// All indices with `|k| <= radius`, in canonical order.
    pub fn ball(dim: usize, radius: u32) -> Vec<MultiIndex> {
        assert!(dim >= 1);
        let mut out = Vec::new();
        let mut cur = vec![0i32; dim];
        fill_ball(&mut out, &mut cur, 0, radius as i32);
        out.sort();
        out
    }
}

fn fill_ball(out: &mut Vec<MultiIndex>, cur: &mut Vec<i32>, pos: usize, budget: i32) {
    if pos == cur.len() {
        out.push(MultiIndex(cur.clone()));
        return;
    }
    for e in -budget..=budget {
        cur[pos] = e;
        fill_ball(out, cur, pos + 1, budget - e.abs());
    }
    cur[pos] = 0;
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// A real trigonometric polynomial stored as a sparse Hermitian coefficient table.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigPoly {
    dim: usize,
    coeffs: BTreeMap<MultiIndex, Complex64>,
    drop_tol: f64,
}

impl TrigPoly {
    /// Builds a table from `(k, coefficient)` pairs.
    ///
    /// Either half of an orbit may be given; when both halves are present they must
    /// agree with conjugate symmetry, and the coefficient at zero must be real.
    /// The stored table always contains exact conjugate mirrors.
    pub fn from_coeffs<I>(dim: usize, coeffs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, Complex64)>,
    {
        let mut raw: BTreeMap<MultiIndex, Complex64> = BTreeMap::new();
        for (k, v) in coeffs {
            if k.dim() != dim {
                return Err(Error::DimMismatch { expected: dim, got: k.dim() });
            }
            if !v.is_finite() {
                return Err(Error::Malformed(format!("non-finite coefficient at k={k}")));
            }
            if raw.insert(k.clone(), v).is_some() {
                return Err(Error::Malformed(format!("duplicate coefficient at k={k}")));
            }
        }
        let mut table = BTreeMap::new();
        for (k, &v) in &raw {
            if !k.is_canonical() {
                continue;
            }
            if k.is_zero() {
                if v.im.abs() > 1e-12 * (1.0 + v.re.abs()) {
                    return Err(Error::Malformed(format!(
                        "coefficient at k=0 must be real, got imaginary part {}",
                        v.im
                    )));
                }
                table.insert(k.clone(), Complex64::new(v.re, 0.0));
                continue;
            }
            if let Some(&m) = raw.get(&k.neg()) {
                if (m - v.conj()).norm() > 1e-12 * (1.0 + v.norm()) {
                    return Err(Error::Malformed(format!(
                        "Hermitian symmetry violated between k={k} and its mirror"
                    )));
                }
            }
            table.insert(k.clone(), v);
            table.insert(k.neg(), v.conj());
        }
        // Orbits given only through their non-canonical half.
        for (k, &v) in &raw {
            if k.is_canonical() || raw.contains_key(&k.neg()) {
                continue;
            }
            table.insert(k.neg(), v.conj());
            table.insert(k.clone(), v);
        }
        let mut p = TrigPoly { dim, coeffs: table, drop_tol: 0.0 };
        p.prune();
        Ok(p)
    }

    /// Internal fast path: values for canonical `k` only, mirrored verbatim.
    pub(crate) fn from_canonical_half<I>(dim: usize, half: I, drop_tol: f64) -> Self
    where
        I: IntoIterator<Item = (MultiIndex, Complex64)>,
    {
        let mut table = BTreeMap::new();
        for (k, v) in half {
            debug_assert_eq!(k.dim(), dim);
            debug_assert!(k.is_canonical());
            if k.is_zero() {
                table.insert(k, Complex64::new(v.re, 0.0));
            } else {
                table.insert(k.neg(), v.conj());
                table.insert(k, v);
            }
        }
        let mut p = TrigPoly { dim, coeffs: table, drop_tol };
        p.prune();
        p
    }

    pub fn zero(dim: usize) -> Self {
        TrigPoly { dim, coeffs: BTreeMap::new(), drop_tol: 0.0 }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::from_canonical_half(dim, [(MultiIndex::zero(dim), Complex64::new(c, 0.0))], 0.0)
    }

    /// Sets the magnitude below which coefficients are discarded (default 0).
    pub fn with_drop_tol(mut self, tol: f64) -> Self {
        assert!(tol >= 0.0 && tol.is_finite());
        self.drop_tol = tol;
        self.prune();
        self
    }

    fn prune(&mut self) {
        let tol = self.drop_tol;
        self.coeffs.retain(|_, v| v.norm_sqr() > 0.0 && v.norm() > tol);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Largest total degree carrying a nonzero coefficient; 0 for the zero table.
    pub fn bandwidth(&self) -> u32 {
        self.coeffs.keys().map(|k| k.degree()).max().unwrap_or(0)
    }

    pub fn coeff(&self, k: &MultiIndex) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or(Complex64::ZERO)
    }

    /// Full table (both halves of every orbit), in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &Complex64)> {
        self.coeffs.iter()
    }

    pub fn support_len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Value at `x`, reconstructed as `sum_k f_k e^{+2 pi i k.x}`.
    ///
    /// Hermitian storage makes the imaginary part cancel to rounding noise; it is
    /// checked against `1e-10 * sum |f_k|` and discarded.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let z = self.eval_complex(x);
        debug_assert!(
            z.im.abs() <= 1e-10 * self.f_norm(),
            "imaginary residual {} out of bounds",
            z.im
        );
        z.re
    }

    /// The full complex reconstruction sum, exposed for residual diagnostics.
    pub fn eval_complex(&self, x: &[f64]) -> Complex64 {
        assert_eq!(x.len(), self.dim, "evaluation point dimension mismatch");
        let mut acc = Complex64::ZERO;
        for (k, v) in &self.coeffs {
            acc += v * Complex64::cis(TAU * k.dot(x));
        }
        acc
    }

    /// Pointwise product via sparse convolution, `O(support * support)`.
    pub fn product(&self, rhs: &TrigPoly) -> Result<TrigPoly> {
        if self.dim != rhs.dim {
            return Err(Error::DimMismatch { expected: self.dim, got: rhs.dim });
        }
        let mut conv: BTreeMap<MultiIndex, Complex64> = BTreeMap::new();
        for (j, a) in &self.coeffs {
            for (l, b) in &rhs.coeffs {
                *conv.entry(j.add(l)).or_insert(Complex64::ZERO) += a * b;
            }
        }
        // Exact arithmetic keeps the convolution Hermitian; rebuilding from the
        // canonical half removes the last-ulp asymmetry rounding may introduce.
        let half = conv.into_iter().filter(|(k, _)| k.is_canonical());
        Ok(Self::from_canonical_half(self.dim, half, self.drop_tol.max(rhs.drop_tol)))
    }

    /// Coefficient sum norm `sum_k |f_k|`; an upper bound for `sup |f|`.
    pub fn f_norm(&self) -> f64 {
        self.coeffs.values().map(|v| v.norm()).sum()
    }

    /// Weighted norm `sqrt((sum_k S_k) * sum_k |f_k|^2 / S_k)`.
    ///
    /// Sits between `sup |f|` and the coefficient sum norm, with equality to the
    /// latter at `S = |f_hat|`. Every supported coefficient needs a positive weight.
    pub fn s_norm(&self, s: &WeightSeq) -> Result<f64> {
        if s.dim() != self.dim {
            return Err(Error::DimMismatch { expected: self.dim, got: s.dim() });
        }
        let mut acc = 0.0;
        for (k, v) in &self.coeffs {
            let w = s
                .weight(k)
                .ok_or_else(|| Error::Domain(format!("weight at supported k={k} is zero or missing")))?;
            acc += v.norm_sqr() / w;
        }
        Ok((s.total_mass() * acc).sqrt())
    }

    /// Upper bound on derivative sup-norms:
    /// `max_{1<=j<=d} max_{1<=q<=order} sum_k (2 pi |k_j|)^q |f_k|`.
    pub fn cn_norm_bound(&self, order: u32) -> f64 {
        assert!(order >= 1, "derivative order must be at least 1");
        let mut best: f64 = 0.0;
        for j in 0..self.dim {
            for q in 1..=order {
                let mut sum = 0.0;
                for (k, v) in &self.coeffs {
                    let kj = k.entries()[j].unsigned_abs() as f64;
                    sum += (TAU * kj).powi(q as i32) * v.norm();
                }
                best = best.max(sum);
            }
        }
        best
    }

    /// Scales every coefficient by a real factor.
    pub fn scale(&self, factor: f64) -> TrigPoly {
        let half = self
            .coeffs
            .iter()
            .filter(|(k, _)| k.is_canonical())
            .map(|(k, v)| (k.clone(), v * factor));
        Self::from_canonical_half(self.dim, half.collect::<Vec<_>>(), self.drop_tol)
    }

    /// Serializes to the interchange schema (canonical half plus `k = 0` only).
    pub fn to_json(&self) -> serde_json::Value {
        let coeffs: Vec<CoeffDto> = self
            .coeffs
            .iter()
            .filter(|(k, _)| k.is_canonical())
            .map(|(k, v)| CoeffDto { k: k.entries().to_vec(), re: v.re, im: v.im })
            .collect();
        serde_json::to_value(PolyDto { dim: self.dim, coeffs }).expect("poly serialization")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let dto: PolyDto = serde_json::from_value(value.clone())?;
        if dto.dim == 0 {
            return Err(Error::Malformed("dim must be at least 1".into()));
        }
        let mut half = Vec::with_capacity(dto.coeffs.len());
        let mut seen = std::collections::HashSet::new();
        for c in &dto.coeffs {
            if c.k.len() != dto.dim {
                return Err(Error::DimMismatch { expected: dto.dim, got: c.k.len() });
            }
            let k = MultiIndex::from_slice(&c.k);
            if !k.is_canonical() {
                return Err(Error::Malformed(format!(
                    "file stores only the canonical half-space, found k={k}"
                )));
            }
            if !seen.insert(k.clone()) {
                return Err(Error::Malformed(format!("duplicate coefficient at k={k}")));
            }
            let v = Complex64::new(c.re, c.im);
            if !v.is_finite() {
                return Err(Error::Malformed(format!("non-finite coefficient at k={k}")));
            }
            if k.is_zero() && c.im != 0.0 {
                return Err(Error::Malformed("coefficient at k=0 must have zero imaginary part".into()));
            }
            half.push((k, v));
        }
        Ok(Self::from_canonical_half(dto.dim, half, 0.0))
    }
}

#[derive(Serialize, Deserialize)]
struct PolyDto {
    dim: usize,
    coeffs: Vec<CoeffDto>,
}

#[derive(Serialize, Deserialize)]
struct CoeffDto {
    k: Vec<i32>,
    re: f64,
    im: f64,
}

/// A positive, summable weight sequence `S_k` over `Z^d`.
///
/// Stored as an explicit finite table plus a certified bound on the mass outside it
/// (the tail rule, default 0). Pointwise weights are only available on the table.
#[derive(Clone, Debug)]
pub struct WeightSeq {
    dim: usize,
    table: BTreeMap<MultiIndex, f64>,
    tail_mass: f64,
}

impl WeightSeq {
    pub fn from_table<I>(dim: usize, weights: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, f64)>,
    {
        let mut table = BTreeMap::new();
        for (k, w) in weights {
            if k.dim() != dim {
                return Err(Error::DimMismatch { expected: dim, got: k.dim() });
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::Domain(format!("weight at k={k} must be positive and finite")));
            }
            table.insert(k, w);
        }
        Ok(WeightSeq { dim, table, tail_mass: 0.0 })
    }

    /// Declares certified mass outside the table.
    pub fn with_tail_mass(mut self, tail: f64) -> Result<Self> {
        if !(tail >= 0.0) || !tail.is_finite() {
            return Err(Error::Domain("tail mass must be nonnegative and finite".into()));
        }
        self.tail_mass = tail;
        Ok(self)
    }

    /// Materializes a function on the ball `|k| <= radius`.
    pub fn from_fn_on_ball(dim: usize, radius: u32, f: impl Fn(&MultiIndex) -> f64) -> Result<Self> {
        Self::from_table(dim, MultiIndex::ball(dim, radius).into_iter().map(|k| {
            let w = f(&k);
            (k, w)
        }))
    }

    /// The family `S_k = (1 + |k|^2)^{-m}`, materialized on `|k| <= radius` with a
    /// certified tail: shell counts obey `#{|k| = r} <= c_d r^{d-1}` for d <= 3
    /// (c = 2, 4, 6), so the mass beyond the ball is at most
    /// `c_d * integral_radius^inf x^{d-1-2m} dx`.
    pub fn sobolev(dim: usize, m: u32, radius: u32) -> Result<Self> {
        if dim > 3 {
            return Err(Error::Domain("sobolev family materialized for d <= 3 only".into()));
        }
        if 2 * m <= dim as u32 {
            return Err(Error::Domain(format!("need 2m > d for summability, got m={m}, d={dim}")));
        }
        if radius == 0 {
            return Err(Error::Domain("radius must be at least 1".into()));
        }
        let s = Self::from_fn_on_ball(dim, radius, |k| {
            let d2 = k.degree() as f64;
            (1.0 + d2 * d2).powi(-(m as i32))
        })?;
        let c_d = [2.0, 4.0, 6.0][dim - 1];
        let expo = 2.0 * m as f64 - dim as f64;
        let tail = c_d * (radius as f64).powf(-expo) / expo;
        s.with_tail_mass(tail)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Pointwise weight, `None` outside the table.
    pub fn weight(&self, k: &MultiIndex) -> Option<f64> {
        self.table.get(k).copied()
    }

    /// Certified value of (an upper bound on) `sum_k S_k`.
    pub fn total_mass(&self) -> f64 {
        let table_mass: f64 = self.table.values().sum();
        table_mass + self.tail_mass
    }
}

/// Weighted norm of the node mixture `sum_j beta_j h(. - x_j)` without assembling it.
///
/// Uses `sum_{i,j} beta_i beta_j H(x_i - x_j)` with
/// `H(y) = sum_k (|h_k|^2 / S_k) e^{2 pi i k.y}`, folded into the equivalent
/// one-pass form `sum_k (|h_k|^2 / S_k) |sum_j beta_j e^{-2 pi i k.x_j}|^2`.
pub fn s_norm_mixture(
    betas: &[f64],
    centers: &[Vec<f64>],
    h: &TrigPoly,
    s: &WeightSeq,
) -> Result<f64> {
    if betas.len() != centers.len() {
        return Err(Error::Domain(format!(
            "{} mixture weights for {} centers",
            betas.len(),
            centers.len()
        )));
    }
    if s.dim() != h.dim() {
        return Err(Error::DimMismatch { expected: h.dim(), got: s.dim() });
    }
    for c in centers {
        if c.len() != h.dim() {
            return Err(Error::DimMismatch { expected: h.dim(), got: c.len() });
        }
    }
    let mut acc = 0.0;
    for (k, v) in h.iter() {
        let w = s
            .weight(k)
            .ok_or_else(|| Error::Domain(format!("kernel coefficient at k={k} has no positive weight")))?;
        let mut z = Complex64::ZERO;
        for (beta, c) in betas.iter().zip(centers) {
            z += beta * Complex64::cis(-TAU * k.dot(c));
        }
        acc += v.norm_sqr() / w * z.norm_sqr();
    }
    Ok((s.total_mass() * acc).sqrt())
}

/// Default grid used to normalize the realized range of random objectives.
pub fn default_range_grid(dim: usize) -> usize {
    match dim {
        1 => 4096,
        _ => 512,
    }
}

/// Draws a random objective with `f_k ~ N(0, (1+|k|)^-2) + i N(0, (1+|k|)^-2)` on the
/// canonical half of `|k| <= bandwidth` (real at zero), mirrored, then rescaled by the
/// realized range over an `n`-per-axis grid so the range is close to 1.
pub fn random_objective(
    dim: usize,
    bandwidth: u32,
    grid_n: usize,
    rng: &mut impl Rng,
) -> Result<TrigPoly> {
    if dim == 0 || dim > 2 {
        return Err(Error::Domain(format!("random objectives are drawn for d in {{1, 2}}, got {dim}")));
    }
    if grid_n <= 2 * bandwidth as usize {
        return Err(Error::Domain(format!(
            "range grid with {grid_n} points per axis aliases bandwidth {bandwidth}"
        )));
    }
    let mut half = Vec::new();
    for k in MultiIndex::ball(dim, bandwidth) {
        if !k.is_canonical() {
            continue;
        }
        let sigma = 1.0 / (1.0 + k.degree() as f64);
        let re: f64 = rng.sample(StandardNormal);
        if k.is_zero() {
            half.push((k, Complex64::new(re, 0.0)));
        } else {
            let im: f64 = rng.sample(StandardNormal);
            half.push((k, Complex64::new(sigma * re, sigma * im)));
        }
    }
    let p = TrigPoly::from_canonical_half(dim, half, 0.0);
    let values = fftgrid::grid_values(&p, grid_n)?;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let range = hi - lo;
    if range > 0.0 {
        Ok(p.scale(1.0 / range))
    } else {
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn idx(entries: &[i32]) -> MultiIndex {
        MultiIndex::from_slice(entries)
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// 1 + cos(2 pi x) as a coefficient table.
    fn one_plus_cos() -> TrigPoly {
        TrigPoly::from_coeffs(
            1,
            [
                (idx(&[0]), c(1.0, 0.0)),
                (idx(&[1]), c(0.5, 0.0)),
                (idx(&[-1]), c(0.5, 0.0)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn canonical_order_sorts_by_degree_then_lex() {
        let mut ks = vec![idx(&[2]), idx(&[0]), idx(&[1]), idx(&[-1]), idx(&[-2])];
        ks.sort();
        assert_eq!(ks, vec![idx(&[0]), idx(&[-1]), idx(&[1]), idx(&[-2]), idx(&[2])]);

        let mut k2 = vec![idx(&[0, -1]), idx(&[1, 1]), idx(&[-1, 0]), idx(&[0, 0]), idx(&[1, 0])];
        k2.sort();
        assert_eq!(
            k2,
            vec![idx(&[0, 0]), idx(&[-1, 0]), idx(&[0, -1]), idx(&[1, 0]), idx(&[1, 1])]
        );
    }

    #[test]
    fn ball_enumerates_every_index_once() {
        let ball = MultiIndex::ball(2, 3);
        // 2 * 3^2 + 2 * 3 + 1 lattice points with |k|_1 <= 3 in Z^2.
        assert_eq!(ball.len(), 25);
        let mut sorted = ball.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted, ball);
    }

    #[test]
    fn eval_constant_is_constant() {
        let p = TrigPoly::constant(2, 1.0);
        assert_eq!(p.eval(&[0.3, 0.9]), 1.0);
    }

    #[test]
    fn eval_one_plus_cos_at_half_vanishes() {
        let p = one_plus_cos();
        assert_abs_diff_eq!(p.eval(&[0.5]), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.eval(&[0.0]), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn constructor_rejects_symmetry_violation() {
        let err = TrigPoly::from_coeffs(1, [(idx(&[1]), c(0.0, 1.0)), (idx(&[-1]), c(0.0, 1.0))]);
        assert!(matches!(err, Err(Error::Malformed(_))));
    }

    #[test]
    fn constructor_rejects_complex_mean() {
        let err = TrigPoly::from_coeffs(1, [(idx(&[0]), c(1.0, 0.5))]);
        assert!(matches!(err, Err(Error::Malformed(_))));
    }

    #[test]
    fn constructor_mirrors_a_single_half() {
        let p = TrigPoly::from_coeffs(1, [(idx(&[2]), c(0.25, -0.5))]).unwrap();
        assert_eq!(p.coeff(&idx(&[-2])), c(0.25, 0.5));
        assert_eq!(p.bandwidth(), 2);
    }

    #[test]
    fn product_of_one_plus_cos_with_itself() {
        let p = one_plus_cos();
        let sq = p.product(&p).unwrap();
        assert_eq!(sq.coeff(&idx(&[0])), c(1.5, 0.0));
        assert_eq!(sq.coeff(&idx(&[1])), c(1.0, 0.0));
        assert_eq!(sq.coeff(&idx(&[-1])), c(1.0, 0.0));
        assert_eq!(sq.coeff(&idx(&[2])), c(0.25, 0.0));
        assert_eq!(sq.coeff(&idx(&[-2])), c(0.25, 0.0));
        assert_eq!(sq.support_len(), 5);
    }

    #[test]
    fn product_with_one_is_identity() {
        let p = one_plus_cos();
        let q = p.product(&TrigPoly::constant(1, 1.0)).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn product_dimension_mismatch_errors() {
        let p = one_plus_cos();
        let q = TrigPoly::constant(2, 1.0);
        assert!(matches!(p.product(&q), Err(Error::DimMismatch { .. })));
    }

    #[test]
    fn f_norm_values() {
        let p = one_plus_cos();
        assert_eq!(p.f_norm(), 2.0);
        let sq = p.product(&p).unwrap();
        // Nonnegative coefficients saturate submultiplicativity: 4.0 = 2.0 * 2.0.
        assert_eq!(sq.f_norm(), 4.0);
    }

    #[test]
    fn s_norm_single_coefficient() {
        let p = TrigPoly::constant(1, 2.0);
        let s = WeightSeq::from_table(1, [(idx(&[0]), 1.0)]).unwrap();
        assert_abs_diff_eq!(p.s_norm(&s).unwrap(), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn s_norm_equals_f_norm_at_matched_weights() {
        let p = one_plus_cos().product(&one_plus_cos()).unwrap();
        let s = WeightSeq::from_table(
            1,
            p.iter().map(|(k, v)| (k.clone(), v.norm())),
        )
        .unwrap();
        assert_abs_diff_eq!(p.s_norm(&s).unwrap(), p.f_norm(), epsilon = 1e-12);
    }

    #[test]
    fn s_norm_missing_weight_errors() {
        let p = one_plus_cos();
        let s = WeightSeq::from_table(1, [(idx(&[0]), 1.0)]).unwrap();
        assert!(matches!(p.s_norm(&s), Err(Error::Domain(_))));
    }

    #[test]
    fn weight_seq_rejects_nonpositive() {
        assert!(matches!(
            WeightSeq::from_table(1, [(idx(&[0]), 0.0)]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn cn_norm_bound_of_cosine() {
        let p = TrigPoly::from_coeffs(1, [(idx(&[1]), c(0.5, 0.0)), (idx(&[-1]), c(0.5, 0.0))]).unwrap();
        assert_abs_diff_eq!(p.cn_norm_bound(1), TAU, epsilon = 1e-12);
        assert_abs_diff_eq!(p.cn_norm_bound(2), TAU * TAU, epsilon = 1e-12);
    }

    #[test]
    fn cn_norm_bound_of_constant_is_zero() {
        assert_eq!(TrigPoly::constant(2, 5.0).cn_norm_bound(3), 0.0);
    }

    #[test]
    fn mixture_with_single_center_matches_s_norm() {
        let h = one_plus_cos();
        let s = WeightSeq::from_table(
            1,
            [(idx(&[0]), 0.7), (idx(&[1]), 0.2), (idx(&[-1]), 0.2)],
        )
        .unwrap();
        // A shift leaves |f_k| unchanged, so the mixture norm matches s_norm(h).
        let m = s_norm_mixture(&[1.0], &[vec![0.37]], &h, &s).unwrap();
        assert_abs_diff_eq!(m, h.s_norm(&s).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn mixture_cancellation_is_zero() {
        let h = one_plus_cos();
        let s = WeightSeq::from_table(
            1,
            [(idx(&[0]), 1.0), (idx(&[1]), 1.0), (idx(&[-1]), 1.0)],
        )
        .unwrap();
        let m = s_norm_mixture(&[1.0, -1.0], &[vec![0.25], vec![0.25]], &h, &s).unwrap();
        assert_abs_diff_eq!(m, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn mixture_non_summable_kernel_errors() {
        let h = one_plus_cos();
        let s = WeightSeq::from_table(1, [(idx(&[0]), 1.0)]).unwrap();
        assert!(matches!(
            s_norm_mixture(&[1.0], &[vec![0.0]], &h, &s),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn sobolev_weights_are_positive_with_certified_tail() {
        let s = WeightSeq::sobolev(2, 2, 6).unwrap();
        assert!(s.weight(&idx(&[0, 0])).unwrap() > 0.0);
        assert!(s.total_mass().is_finite());
        // Tail must dominate the next few shells it claims to cover.
        let mut next_shells = 0.0;
        for k in MultiIndex::ball(2, 20) {
            if k.degree() > 6 {
                let d2 = k.degree() as f64;
                next_shells += (1.0 + d2 * d2).powi(-2);
            }
        }
        let table_mass: f64 = MultiIndex::ball(2, 6)
            .iter()
            .map(|k| s.weight(k).unwrap())
            .sum();
        assert!(s.total_mass() - table_mass >= next_shells);
    }

    #[test]
    fn random_objective_is_symmetric_and_seeded() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = random_objective(1, 15, 4096, &mut rng).unwrap();
        assert!(f.bandwidth() <= 15);
        assert_eq!(f.coeff(&idx(&[0])).im, 0.0);
        for (k, v) in f.iter() {
            assert_eq!(f.coeff(&k.neg()), v.conj());
        }
        let mut rng2 = ChaCha8Rng::seed_from_u64(11);
        let g = random_objective(1, 15, 4096, &mut rng2).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn random_objective_realized_range_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_objective(1, 15, 4096, &mut rng).unwrap();
        // Direct evaluation, independent of the FFT normalization path.
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for j in 0..4096 {
            let v = f.eval(&[j as f64 / 4096.0]);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        assert!(hi - lo > 0.999 && hi - lo < 1.001, "range {}", hi - lo);
    }

    #[test]
    fn random_objective_2d_family() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_objective(2, 4, 512, &mut rng).unwrap();
        assert_eq!(f.dim(), 2);
        assert!(f.bandwidth() <= 4);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..256 {
            for j in 0..256 {
                let v = f.eval(&[i as f64 / 256.0, j as f64 / 256.0]);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        // Coarser probe grid still sees nearly the full normalized range.
        assert!(hi - lo > 0.9 && hi - lo < 1.001);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let f = random_objective(2, 3, 64, &mut rng).unwrap();
        let back = TrigPoly::from_json(&f.to_json()).unwrap();
        assert_eq!(f, back);
    }

    #[test]
    fn json_rejects_non_canonical_and_duplicates() {
        let bad = serde_json::json!({"dim": 1, "coeffs": [{"k": [-1], "re": 1.0, "im": 0.0}]});
        assert!(matches!(TrigPoly::from_json(&bad), Err(Error::Malformed(_))));
        let dup = serde_json::json!({"dim": 1, "coeffs": [
            {"k": [1], "re": 1.0, "im": 0.0},
            {"k": [1], "re": 1.0, "im": 0.0}
        ]});
        assert!(matches!(TrigPoly::from_json(&dup), Err(Error::Malformed(_))));
        let imag_mean = serde_json::json!({"dim": 1, "coeffs": [{"k": [0], "re": 1.0, "im": 0.1}]});
        assert!(matches!(TrigPoly::from_json(&imag_mean), Err(Error::Malformed(_))));
    }

    #[test]
    fn imaginary_residual_stays_tiny() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let f = random_objective(1, 12, 1024, &mut rng).unwrap();
        let bound = 1e-10 * f.f_norm();
        for j in 0..1000 {
            let x = [j as f64 / 1000.0 + 0.0003];
            assert!(f.eval_complex(&x).im.abs() < bound);
        }
    }
}
