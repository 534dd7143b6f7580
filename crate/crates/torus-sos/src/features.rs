//! Feature maps `phi: [0,1)^d -> C^n`, their moment matrices, and PSD models.
//!
//! A model is `g_A(x) = phi(x)^* A phi(x)` with `A` Hermitian PSD. Its coefficient
//! table is reached through the moment matrices `M^(k)` (coefficients of the rank-one
//! field `phi phi^*`): `g_k = trace(A M^(k))`, a plain product with no conjugation.
//! Two concrete maps are provided:
//!
//! * [`BandLimitedMap`]: characters `e^{-2 pi i k.x}` for `|k| <= t`. `M^(k)` is a 0/1
//!   shift pattern and vanishes for `|k| > 2t`.
//! * [`KernelMap`]: translates of the product Poisson kernel
//!   `phi_rho(x) = (1-rho^2) / (1+rho^2 - 2 rho cos(2 pi x))` centered at `n` nodes.
//!   `M^(k)` has a closed form; its Frobenius norms decay geometrically, which is what
//!   makes certified truncation of the infinite coefficient sum possible.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{MultiIndex, TrigPoly};

/// `(1 + rho^2) / (1 - rho^2)`, the coincidence value of the kernel moment factor.
fn c_rho(rho: f64) -> f64 {
    (1.0 + rho * rho) / (1.0 - rho * rho)
}

/// Characters `e^{-2 pi i k.x}` for `|k| <= t`, in canonical index order.
#[derive(Clone, Debug)]
pub struct BandLimitedMap {
    dim: usize,
    t: u32,
    indices: Vec<MultiIndex>,
    pos: HashMap<MultiIndex, usize>,
}

impl BandLimitedMap {
    pub fn new(dim: usize, t: u32) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("dimension must be at least 1".into()));
        }
        let indices = MultiIndex::ball(dim, t);
        let pos = indices.iter().cloned().zip(0..).collect();
        Ok(BandLimitedMap { dim, t, indices, pos })
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    /// Frequency list defining the feature coordinates.
    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }
}

/// Translates of the product Poisson kernel at `n` nodes, `rho` in (0, 1).
#[derive(Debug)]
pub struct KernelMap {
    dim: usize,
    rho: f64,
    nodes: Vec<Vec<f64>>,
    seed: Option<u64>,
    total_sum: OnceLock<f64>,
}

impl Clone for KernelMap {
    fn clone(&self) -> Self {
        KernelMap {
            dim: self.dim,
            rho: self.rho,
            nodes: self.nodes.clone(),
            seed: self.seed,
            total_sum: OnceLock::new(),
        }
    }
}

impl KernelMap {
    /// Nodes drawn uniformly from a seeded stream, reproducible across runs.
    pub fn sampled(dim: usize, n: usize, rho: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nodes = (0..n)
            .map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect())
            .collect();
        let mut map = Self::from_nodes(dim, rho, nodes)?;
        map.seed = Some(seed);
        Ok(map)
    }

    pub fn from_nodes(dim: usize, rho: f64, nodes: Vec<Vec<f64>>) -> Result<Self> {
        if dim == 0 || dim > 3 {
            return Err(Error::Domain(format!(
                "kernel maps support d in {{1, 2, 3}} (certified tail closures), got {dim}"
            )));
        }
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::Domain(format!("rho must lie in (0, 1), got {rho}")));
        }
        if nodes.is_empty() {
            return Err(Error::Domain("kernel map needs at least one node".into()));
        }
        for x in &nodes {
            if x.len() != dim {
                return Err(Error::DimMismatch { expected: dim, got: x.len() });
            }
            if x.iter().any(|&c| !(0.0..1.0).contains(&c)) {
                return Err(Error::Domain("nodes must lie in [0, 1)^d".into()));
            }
        }
        // rho * e^{(1-rho^2)/(1+rho^2)} < 1 on (0, 1); the tail closures rely on it.
        let rho_tilde = rho * ((1.0 - rho * rho) / (1.0 + rho * rho)).exp();
        if rho_tilde >= 1.0 {
            return Err(Error::Numerical(format!("decay rate {rho_tilde} >= 1 for rho={rho}")));
        }
        Ok(KernelMap { dim, rho, nodes, seed: None, total_sum: OnceLock::new() })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.nodes
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    fn entry(&self, i: usize, j: usize, k: &MultiIndex) -> Complex64 {
        let mut acc = Complex64::new(1.0, 0.0);
        for (a, &ka) in k.entries().iter().enumerate() {
            acc *= h_factor(ka, self.nodes[i][a], self.nodes[j][a], self.rho);
        }
        acc
    }
}

/// 1D factor of a kernel moment entry: the `k`-th coefficient of
/// `phi_rho(. - y) phi_rho(. - z)`, evaluated in closed form.
fn h_factor(k: i32, y: f64, z: f64, rho: f64) -> Complex64 {
    if k < 0 {
        return h_factor(-k, z, y, rho).conj();
    }
    let kf = k as f64;
    // The generic branch divides by e^{-2 pi i z} - e^{-2 pi i y}; switch to the
    // coincidence form when the nodes are closer than 1e-13 on the torus.
    if torus_dist(y, z) < 1e-13 {
        return rho.powi(k) * (kf + c_rho(rho)) * Complex64::cis(-TAU * kf * z);
    }
    let rho2 = rho * rho;
    let e_y = Complex64::cis(-TAU * y);
    let e_z = Complex64::cis(-TAU * z);
    let e_ky = Complex64::cis(-TAU * kf * y);
    let e_kz = Complex64::cis(-TAU * kf * z);
    let e_ymz = Complex64::cis(TAU * (y - z));
    let term1 = e_kz / (1.0 - rho2 * e_ymz);
    let term2 = (e_y * e_kz - e_ky * e_z) / (e_z - e_y);
    let term3 = e_ky / (1.0 - rho2 * e_ymz.conj());
    rho.powi(k) * (term1 + term2 + term3)
}

fn torus_dist(y: f64, z: f64) -> f64 {
    let d = (y - z).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Lattice points of `Z^d` with `|k|_1 = r`, for d <= 3.
fn shell_count(dim: usize, r: u32) -> f64 {
    if r == 0 {
        return 1.0;
    }
    let rf = r as f64;
    match dim {
        1 => 2.0,
        2 => 4.0 * rf,
        3 => 4.0 * rf * rf + 2.0,
        _ => unreachable!("kernel maps are restricted to d <= 3"),
    }
}

/// Certified upper bound on `sum_{|k| > k_cut} ||M^(k)||_F` for a kernel map.
///
/// Entries obey `|M^(k)_{ij}| <= prod_a rho^{|k_a|} (|k_a| + c)` with
/// `c = (1+rho^2)/(1-rho^2)`, so Frobenius norms are at most `n` times that product.
/// The product is summed exactly per degree shell out to `k_cut + 128` (a truncated
/// d-fold convolution), and closed beyond that with the majorant
/// `|m| + c <= c_lambda (lambda/rho)^{|m|}`, which turns the remainder into a
/// geometric shell sum.
fn kernel_frob_tail(n: usize, rho: f64, dim: usize, k_cut: u32) -> f64 {
    let c = c_rho(rho);
    let t = |m: u32| rho.powi(m as i32) * (m as f64 + c);
    let r_end = (k_cut + 128) as usize;

    let mut axis = vec![0.0f64; r_end + 1];
    axis[0] = c;
    for (m, slot) in axis.iter_mut().enumerate().skip(1) {
        *slot = 2.0 * t(m as u32);
    }
    let mut shells = axis.clone();
    for _ in 1..dim {
        let mut next = vec![0.0f64; r_end + 1];
        for (a, &va) in shells.iter().enumerate() {
            if va == 0.0 {
                continue;
            }
            for (b, &vb) in axis.iter().enumerate().take(r_end + 1 - a) {
                next[a + b] += va * vb;
            }
        }
        shells = next;
    }
    let mut tail: f64 = shells[(k_cut as usize + 1)..=r_end].iter().sum();

    // Scan for c_lambda = max_m t(m) / lambda^m; the sequence is unimodal.
    let lambda = (1.0 + rho) / 2.0;
    let mut c_l = 0.0f64;
    let mut m = 0u32;
    loop {
        let v = t(m) / lambda.powi(m as i32);
        if v > c_l {
            c_l = v;
        } else if m > 1 {
            break;
        }
        m += 1;
    }
    // Geometric closure: shell counts grow no faster than (1 + 1/r)^{d-1} per step
    // for d <= 3, so once lambda (1 + 1/r)^{d-1} < 1 the rest is a geometric series.
    let mut closure = 0.0;
    let mut r = r_end as u32 + 1;
    loop {
        let term = shell_count(dim, r) * lambda.powi(r as i32);
        closure += term;
        let q = lambda * (1.0 + 1.0 / r as f64).powi(dim as i32 - 1);
        if q <= 0.999 {
            closure += term * q / (1.0 - q);
            break;
        }
        r += 1;
    }
    tail += c_l.powi(dim as i32) * closure;
    n as f64 * tail
}

/// Abstraction over the two feature constructions.
#[derive(Clone, Debug)]
pub enum FeatureMap {
    BandLimited(BandLimitedMap),
    Kernel(KernelMap),
}

impl FeatureMap {
    pub fn dim(&self) -> usize {
        match self {
            FeatureMap::BandLimited(m) => m.dim,
            FeatureMap::Kernel(m) => m.dim,
        }
    }

    /// Feature dimension `n`.
    pub fn n(&self) -> usize {
        match self {
            FeatureMap::BandLimited(m) => m.indices.len(),
            FeatureMap::Kernel(m) => m.nodes.len(),
        }
    }

    /// Largest `|k|` with `M^(k)` nonzero, when finite.
    pub fn moment_radius(&self) -> Option<u32> {
        match self {
            FeatureMap::BandLimited(m) => Some(2 * m.t),
            FeatureMap::Kernel(_) => None,
        }
    }

    pub fn phi(&self, x: &[f64]) -> DVector<Complex64> {
        assert_eq!(x.len(), self.dim(), "point dimension mismatch");
        match self {
            FeatureMap::BandLimited(m) => {
                DVector::from_iterator(
                    m.indices.len(),
                    m.indices.iter().map(|k| Complex64::cis(-TAU * k.dot(x))),
                )
            }
            FeatureMap::Kernel(m) => DVector::from_iterator(
                m.nodes.len(),
                m.nodes.iter().map(|node| {
                    let mut acc = 1.0;
                    for (a, &na) in node.iter().enumerate() {
                        acc *= poisson(x[a] - na, m.rho);
                    }
                    Complex64::new(acc, 0.0)
                }),
            ),
        }
    }

    /// The moment matrix `M^(k)`, materialized densely.
    pub fn m_matrix(&self, k: &MultiIndex) -> Result<DMatrix<Complex64>> {
        self.check_k(k)?;
        let n = self.n();
        Ok(match self {
            FeatureMap::BandLimited(m) => {
                let mut out = DMatrix::zeros(n, n);
                for (a, ka) in m.indices.iter().enumerate() {
                    if let Some(&b) = m.pos.get(&ka.add(k)) {
                        out[(a, b)] = Complex64::new(1.0, 0.0);
                    }
                }
                out
            }
            FeatureMap::Kernel(m) => {
                DMatrix::from_fn(n, n, |i, j| m.entry(i, j, k))
            }
        })
    }

    /// `||M^(k)||_F` without materializing the matrix.
    pub fn m_frob(&self, k: &MultiIndex) -> Result<f64> {
        self.check_k(k)?;
        Ok(match self {
            FeatureMap::BandLimited(m) => {
                let count = m
                    .indices
                    .iter()
                    .filter(|k1| m.pos.contains_key(&k1.add(k)))
                    .count();
                (count as f64).sqrt()
            }
            FeatureMap::Kernel(m) => {
                let n = m.nodes.len();
                let mut acc = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        acc += m.entry(i, j, k).norm_sqr();
                    }
                }
                acc.sqrt()
            }
        })
    }

    /// `trace(A M^(k))`, streamed entry by entry.
    pub fn pair(&self, a: &DMatrix<Complex64>, k: &MultiIndex) -> Result<Complex64> {
        self.check_k(k)?;
        let n = self.n();
        assert_eq!(a.nrows(), n);
        assert_eq!(a.ncols(), n);
        Ok(match self {
            FeatureMap::BandLimited(m) => {
                let mut acc = Complex64::ZERO;
                for (b, kb) in m.indices.iter().enumerate() {
                    if let Some(&row) = m.pos.get(&kb.add(k)) {
                        acc += a[(row, b)];
                    }
                }
                acc
            }
            FeatureMap::Kernel(m) => {
                let mut acc = Complex64::ZERO;
                for i in 0..n {
                    for j in 0..n {
                        acc += a[(i, j)] * m.entry(j, i, k);
                    }
                }
                acc
            }
        })
    }

    /// Certified upper bound on the full Frobenius sum `sum_k ||M^(k)||_F`.
    ///
    /// Exact finite enumeration for band-limited maps. For kernel maps, exact shells
    /// are accumulated until they stop contributing (or a work cap), then closed with
    /// the certified geometric tail.
    pub fn m_total_sum(&self) -> f64 {
        match self {
            FeatureMap::BandLimited(m) => {
                MultiIndex::ball(m.dim, 2 * m.t)
                    .iter()
                    .map(|k| self.m_frob(k).expect("in-range k"))
                    .sum()
            }
            FeatureMap::Kernel(m) => *m.total_sum.get_or_init(|| {
                let n = m.nodes.len();
                let work_cap = 30_000_000usize;
                let mut processed = 0usize;
                let mut total = 0.0;
                let mut r = 0u32;
                loop {
                    let shell: Vec<MultiIndex> = MultiIndex::ball(m.dim, r)
                        .into_iter()
                        .filter(|k| k.degree() == r)
                        .collect();
                    processed += shell.len() * n * n;
                    let shell_sum: f64 = {
                        use rayon::prelude::*;
                        let parts: Vec<f64> = shell
                            .par_iter()
                            .map(|k| self.m_frob(k).expect("in-range k"))
                            .collect();
                        parts.iter().sum()
                    };
                    total += shell_sum;
                    if (r > 0 && shell_sum <= 1e-9 * total) || processed > work_cap || r >= 512 {
                        break;
                    }
                    r += 1;
                }
                total + kernel_frob_tail(n, m.rho, m.dim, r)
            }),
        }
    }

    /// Certified upper bound on `sum_{|k| > k_cut} ||M^(k)||_F`.
    ///
    /// Exactly zero for band-limited maps once `k_cut >= 2t`.
    pub fn m_tail_sum(&self, k_cut: u32) -> f64 {
        match self {
            FeatureMap::BandLimited(m) => {
                if k_cut >= 2 * m.t {
                    return 0.0;
                }
                MultiIndex::ball(m.dim, 2 * m.t)
                    .iter()
                    .filter(|k| k.degree() > k_cut)
                    .map(|k| self.m_frob(k).expect("in-range k"))
                    .sum()
            }
            FeatureMap::Kernel(m) => kernel_frob_tail(m.nodes.len(), m.rho, m.dim, k_cut),
        }
    }

    fn check_k(&self, k: &MultiIndex) -> Result<()> {
        if k.dim() != self.dim() {
            return Err(Error::DimMismatch { expected: self.dim(), got: k.dim() });
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let dto = match self {
            FeatureMap::BandLimited(m) => MapDto::BandLimited { dim: m.dim, t: m.t },
            FeatureMap::Kernel(m) => MapDto::Kernel {
                dim: m.dim,
                rho: m.rho,
                nodes: m.nodes.clone(),
                seed: m.seed,
            },
        };
        serde_json::to_value(dto).expect("map serialization")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let dto: MapDto = serde_json::from_value(value.clone())?;
        Ok(match dto {
            MapDto::BandLimited { dim, t } => FeatureMap::BandLimited(BandLimitedMap::new(dim, t)?),
            MapDto::Kernel { dim, rho, nodes, seed } => {
                let mut m = KernelMap::from_nodes(dim, rho, nodes)?;
                m.seed = seed;
                FeatureMap::Kernel(m)
            }
        })
    }
}

/// `(1 - rho^2) / (1 + rho^2 - 2 rho cos(2 pi u))`.
fn poisson(u: f64, rho: f64) -> f64 {
    (1.0 - rho * rho) / (1.0 + rho * rho - 2.0 * rho * (TAU * u).cos())
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type")]
enum MapDto {
    #[serde(rename = "bandlimited")]
    BandLimited { dim: usize, t: u32 },
    #[serde(rename = "kernel")]
    Kernel {
        dim: usize,
        rho: f64,
        nodes: Vec<Vec<f64>>,
        #[serde(skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
}

/// Bounded memoization of moment matrices, keyed by `k`.
///
/// Entries are pure functions of `k`, so results are value-identical however reader
/// and writer threads interleave. Once the entry budget is full, further keys are
/// recomputed on demand instead of cached.
pub struct MomentCache<'a> {
    map: &'a FeatureMap,
    budget: usize,
    store: RwLock<HashMap<MultiIndex, Arc<DMatrix<Complex64>>>>,
}

impl<'a> MomentCache<'a> {
    pub fn new(map: &'a FeatureMap, budget: usize) -> Self {
        MomentCache { map, budget, store: RwLock::new(HashMap::new()) }
    }

    pub fn get(&self, k: &MultiIndex) -> Result<Arc<DMatrix<Complex64>>> {
        if let Some(hit) = self.store.read().expect("cache lock").get(k) {
            return Ok(hit.clone());
        }
        let fresh = Arc::new(self.map.m_matrix(k)?);
        let mut w = self.store.write().expect("cache lock");
        if let Some(raced) = w.get(k) {
            return Ok(raced.clone());
        }
        if w.len() < self.budget {
            w.insert(k.clone(), fresh.clone());
        }
        Ok(fresh)
    }

    pub fn len(&self) -> usize {
        self.store.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A PSD quadratic model over a feature map: dense Hermitian `A` or a factor `U`
/// with `A = U U^*` (PSD by construction).
#[derive(Clone, Debug)]
pub struct PsdModel {
    map: FeatureMap,
    param: ModelParam,
}

#[derive(Clone, Debug)]
pub enum ModelParam {
    Dense(DMatrix<Complex64>),
    Factor(DMatrix<Complex64>),
}

/// Relative tolerance for the Hermitian check on dense parameters.
pub const HERMITIAN_REL_TOL: f64 = 1e-12;
/// Eigenvalues below `-PSD_REL_TOL * ||A||_F` fail PSD validation.
pub const PSD_REL_TOL: f64 = 1e-10;
/// Eigenvalues in `[-CLAMP_REL_TOL * ||A||_F, 0)` are treated as rounding noise.
pub const CLAMP_REL_TOL: f64 = 1e-12;

impl PsdModel {
    /// Validates a dense parameter: Hermitian to `1e-12` relative, smallest
    /// eigenvalue no lower than `-1e-10 * ||A||_F`. The stored matrix is the exact
    /// Hermitian part `(A + A^*)/2`.
    pub fn from_dense(map: FeatureMap, a: DMatrix<Complex64>) -> Result<Self> {
        let n = map.n();
        if a.nrows() != n || a.ncols() != n {
            return Err(Error::DimMismatch { expected: n, got: a.nrows() });
        }
        let norm = a.norm();
        let drift = (&a - a.adjoint()).norm();
        if drift > HERMITIAN_REL_TOL * norm.max(f64::MIN_POSITIVE) {
            return Err(Error::Malformed(format!(
                "matrix is not Hermitian: ||A - A*|| = {drift:.3e} vs ||A|| = {norm:.3e}"
            )));
        }
        let herm = (&a + a.adjoint()) * Complex64::new(0.5, 0.0);
        if norm > 0.0 {
            let min_eig = herm.clone().symmetric_eigen().eigenvalues.min();
            if min_eig < -PSD_REL_TOL * norm {
                return Err(Error::Malformed(format!(
                    "matrix is not PSD: smallest eigenvalue {min_eig:.3e} vs ||A|| = {norm:.3e}"
                )));
            }
        }
        Ok(PsdModel { map, param: ModelParam::Dense(herm) })
    }

    /// Wraps a factor `U` (`n x r`, `r >= 1`); `A = U U^*` needs no PSD check.
    pub fn from_factor(map: FeatureMap, u: DMatrix<Complex64>) -> Result<Self> {
        if u.nrows() != map.n() {
            return Err(Error::DimMismatch { expected: map.n(), got: u.nrows() });
        }
        if u.ncols() == 0 {
            return Err(Error::Domain("factor must have at least one column".into()));
        }
        Ok(PsdModel { map, param: ModelParam::Factor(u) })
    }

    pub fn zero(map: FeatureMap) -> Self {
        let n = map.n();
        PsdModel { map, param: ModelParam::Dense(DMatrix::zeros(n, n)) }
    }

    pub fn map(&self) -> &FeatureMap {
        &self.map
    }

    pub fn param(&self) -> &ModelParam {
        &self.param
    }

    /// The parameter as a dense matrix (`U U^*` for factored models).
    pub fn a_matrix(&self) -> DMatrix<Complex64> {
        match &self.param {
            ModelParam::Dense(a) => a.clone(),
            ModelParam::Factor(u) => u * u.adjoint(),
        }
    }

    /// `||A||_F`; for factors computed through the `r x r` Gram matrix.
    pub fn a_frob(&self) -> f64 {
        match &self.param {
            ModelParam::Dense(a) => a.norm(),
            ModelParam::Factor(u) => (u.adjoint() * u).norm(),
        }
    }

    /// Model coefficient `g_k = trace(A M^(k))`.
    pub fn coeff(&self, k: &MultiIndex) -> Result<Complex64> {
        self.map.pair(&self.a_matrix(), k)
    }

    /// Pointwise model value `phi(x)^* A phi(x)`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let phi = self.map.phi(x);
        match &self.param {
            ModelParam::Dense(a) => (phi.adjoint() * a * &phi)[(0, 0)].re,
            ModelParam::Factor(u) => (u.adjoint() * &phi).norm_squared(),
        }
    }

    /// Rounds eigenvalues in `[-1e-12 ||A||_F, 0)` up to zero so serialized models
    /// re-verify as PSD. Factored models are returned unchanged.
    pub fn clamped(self) -> Self {
        match &self.param {
            ModelParam::Factor(_) => self,
            ModelParam::Dense(a) => {
                let norm = a.norm();
                if norm == 0.0 {
                    return self;
                }
                let eig = a.clone().symmetric_eigen();
                let vals = eig.eigenvalues.map(|v| {
                    if v < 0.0 && v >= -CLAMP_REL_TOL * norm {
                        0.0
                    } else {
                        v
                    }
                });
                let diag = DMatrix::from_diagonal(&vals.map(|v| Complex64::new(v, 0.0)));
                let fixed = &eig.eigenvectors * diag * eig.eigenvectors.adjoint();
                let herm = (&fixed + fixed.adjoint()) * Complex64::new(0.5, 0.0);
                PsdModel { map: self.map, param: ModelParam::Dense(herm) }
            }
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let (a, u) = match &self.param {
            ModelParam::Dense(a) => (Some(matrix_rows(a)), None),
            ModelParam::Factor(u) => (None, Some(matrix_rows(u))),
        };
        serde_json::to_value(ModelDto { map: self.map.to_json(), a, u }).expect("model serialization")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let dto: ModelDto = serde_json::from_value(value.clone())?;
        let map = FeatureMap::from_json(&dto.map)?;
        match (dto.a, dto.u) {
            (Some(rows), None) => Self::from_dense(map, matrix_from_rows(rows)?),
            (None, Some(rows)) => Self::from_factor(map, matrix_from_rows(rows)?),
            _ => Err(Error::Malformed("model stores exactly one of \"a\" or \"u\"".into())),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ModelDto {
    map: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    a: Option<Vec<Vec<EntryDto>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    u: Option<Vec<Vec<EntryDto>>>,
}

#[derive(Serialize, Deserialize)]
struct EntryDto {
    re: f64,
    im: f64,
}

fn matrix_rows(m: &DMatrix<Complex64>) -> Vec<Vec<EntryDto>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| EntryDto { re: m[(i, j)].re, im: m[(i, j)].im }).collect())
        .collect()
}

fn matrix_from_rows(rows: Vec<Vec<EntryDto>>) -> Result<DMatrix<Complex64>> {
    if rows.is_empty() {
        return Err(Error::Malformed("empty matrix".into()));
    }
    let ncols = rows[0].len();
    if ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Malformed("matrix rows must be nonempty and equally long".into()));
    }
    let nrows = rows.len();
    let mut m = DMatrix::zeros(nrows, ncols);
    for (i, row) in rows.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            if !e.re.is_finite() || !e.im.is_finite() {
                return Err(Error::Malformed(format!("non-finite entry at ({i}, {j})")));
            }
            m[(i, j)] = Complex64::new(e.re, e.im);
        }
    }
    Ok(m)
}

/// A model whose value is exactly `sum_j |u_j|^2` for band-limited `u_j`:
/// the factor columns are the coefficient vectors of the `u_j` read off in the
/// map's index order. Useful for building instances with known optima.
pub fn model_from_squares(map: &BandLimitedMap, squares: &[TrigPoly]) -> Result<PsdModel> {
    if squares.is_empty() {
        return Err(Error::Domain("need at least one square".into()));
    }
    let n = map.indices.len();
    let mut u = DMatrix::zeros(n, squares.len());
    for (c, q) in squares.iter().enumerate() {
        if q.dim() != map.dim {
            return Err(Error::DimMismatch { expected: map.dim, got: q.dim() });
        }
        if q.bandwidth() > map.t {
            return Err(Error::Domain(format!(
                "square has bandwidth {} beyond map degree {}",
                q.bandwidth(),
                map.t
            )));
        }
        for (a, k) in map.indices.iter().enumerate() {
            u[(a, c)] = q.coeff(k);
        }
    }
    PsdModel::from_factor(FeatureMap::BandLimited(map.clone()), u)
}
