//! Dense complex linear algebra and seeded random streams.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CVec = DVector<C64>;
pub type CMat = DMatrix<C64>;

pub const J: C64 = C64::new(0.0, 1.0);

/// Tolerance used for Hermitian checks, relative to the Frobenius norm.
pub const HERMITIAN_TOL: f64 = 1e-10;

const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITER: usize = 10_000;

pub fn cvec_from_fn(n: usize, f: impl FnMut(usize) -> C64) -> CVec {
    let mut f = f;
    CVec::from_fn(n, |i, _| f(i))
}

/// `x^H A x` for Hermitian `A`; the imaginary part is dropped.
pub fn quad_form(a: &CMat, x: &CVec) -> f64 {
    x.dotc(&(a * x)).re
}

/// Rank-one Hermitian matrix `conj(h) h^T`, so that `x^H M x = |h^T x|^2`.
pub fn outer_conj(h: &CVec) -> CMat {
    let hc = h.conjugate();
    &hc * h.transpose()
}

/// `|h^T x|^2`.
pub fn gain(h: &CVec, x: &CVec) -> f64 {
    h.dot(x).norm_sqr()
}

pub fn max_abs(x: &CVec) -> f64 {
    x.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn hermitian_defect(m: &CMat) -> (f64, f64) {
    let asym = (m - m.adjoint()).norm();
    (asym, m.norm())
}

fn check_hermitian(m: &CMat) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let (asymmetry, norm) = hermitian_defect(m);
    if asymmetry > HERMITIAN_TOL * norm.max(f64::MIN_POSITIVE) {
        return Err(Error::NotHermitian { asymmetry, norm });
    }
    Ok(())
}

fn symmetrize(m: &CMat) -> CMat {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Eigenpairs of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `values`.
    pub vectors: CMat,
}

impl HermitianEigen {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, i: usize) -> CVec {
        self.vectors.column(i).into_owned()
    }
}

pub fn hermitian_eig(m: &CMat) -> Result<HermitianEigen> {
    check_hermitian(m)?;
    let eig = symmetrize(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(HermitianEigen { values, vectors })
}

/// A pair `(A, B)` whose generalized Rayleigh quotient
/// `x^H A x / x^H (B + ridge I) x` is to be maximised.
#[derive(Debug, Clone)]
pub struct HermitianPencil {
    pub a: CMat,
    pub b: CMat,
    pub ridge: f64,
}

impl HermitianPencil {
    /// Pencil with the default ridge `1e-9 trace(B) / d`.
    pub fn new(a: CMat, b: CMat) -> Result<Self> {
        if a.shape() != b.shape() || !a.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "pencil matrices {:?} and {:?}",
                a.shape(),
                b.shape()
            )));
        }
        let d = a.nrows() as f64;
        let mut ridge = 1e-9 * b.trace().re / d;
        if !(ridge > 0.0) {
            // B vanishes: fall back to a scale taken from A so the quotient
            // stays finite.
            ridge = 1e-9 * (a.trace().re.abs() / d).max(f64::MIN_POSITIVE.sqrt());
        }
        Ok(Self { a, b, ridge })
    }

    pub fn with_ridge(mut self, ridge: f64) -> Self {
        self.ridge = ridge;
        self
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// Denominator matrix `B + ridge I`.
    pub fn regularized_b(&self) -> CMat {
        let mut b = self.b.clone();
        for i in 0..b.nrows() {
            b[(i, i)] += C64::new(self.ridge, 0.0);
        }
        b
    }

    pub fn quotient(&self, x: &CVec) -> f64 {
        let num = quad_form(&self.a, x);
        let den = quad_form(&self.b, x) + self.ridge * x.norm_squared();
        num / den
    }
}

/// Maximiser of a pencil's Rayleigh quotient.
#[derive(Debug, Clone)]
pub struct DominantEigvec {
    /// Unit-norm maximiser; its global phase is arbitrary.
    pub vector: CVec,
    pub quotient: f64,
    pub iterations: usize,
}

/// Dominant generalized eigenvector of a Hermitian / positive semidefinite
/// pencil.
///
/// `B + ridge I = L L^H` reduces the problem to the standard Hermitian
/// matrix `C = L^{-1} A L^{-H}`, whose top eigenvector is found by power
/// iteration. If the iteration has not settled after the cap, the full
/// Hermitian eigendecomposition of `C` is used instead.
pub fn dominant_generalized_eigvec(p: &HermitianPencil) -> Result<DominantEigvec> {
    if p.a.shape() != p.b.shape() || !p.a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "pencil matrices {:?} and {:?}",
            p.a.shape(),
            p.b.shape()
        )));
    }
    check_hermitian(&p.a)?;
    check_hermitian(&p.b)?;
    let d = p.dim();
    let chol = symmetrize(&p.regularized_b())
        .cholesky()
        .ok_or(Error::NotPositiveDefinite { ridge: p.ridge })?;
    let l = chol.l();
    let la = l
        .solve_lower_triangular(&p.a)
        .ok_or(Error::NotPositiveDefinite { ridge: p.ridge })?;
    let c = l
        .solve_lower_triangular(&la.adjoint())
        .ok_or(Error::NotPositiveDefinite { ridge: p.ridge })?;
    let c = symmetrize(&c);

    let (y, iterations) = match power_iteration(&c) {
        Some(found) => found,
        None => {
            let eig = hermitian_eig(&c)?;
            (eig.vector(d - 1), POWER_MAX_ITER)
        }
    };
    // Back-substitute x = L^{-H} y.
    let x = l
        .adjoint()
        .solve_upper_triangular(&y)
        .ok_or(Error::NotPositiveDefinite { ridge: p.ridge })?;
    let norm = x.norm();
    let vector = if norm > 0.0 { x / C64::new(norm, 0.0) } else { unit(d, 0) };
    let quotient = p.quotient(&vector);
    Ok(DominantEigvec {
        vector,
        quotient,
        iterations,
    })
}

fn unit(d: usize, i: usize) -> CVec {
    let mut e = CVec::zeros(d);
    e[i] = C64::new(1.0, 0.0);
    e
}

/// Top eigenvector of a Hermitian matrix, or `None` when the iteration does
/// not converge within the cap.
fn power_iteration(c: &CMat) -> Option<(CVec, usize)> {
    let d = c.nrows();
    let scale = c.norm();
    if scale == 0.0 {
        return Some((unit(d, 0), 0));
    }
    let (x, lambda, iters) = power_iterate(c, scale)?;
    if lambda >= 0.0 {
        return Some((x, iters));
    }
    // The dominant-magnitude eigenvalue is negative: shift it to zero so the
    // top of the spectrum dominates.
    let mut shifted = c.clone();
    for i in 0..d {
        shifted[(i, i)] -= C64::new(lambda, 0.0);
    }
    let (x, _, more) = power_iterate(&shifted, scale - lambda)?;
    Some((x, iters + more))
}

fn power_iterate(m: &CMat, scale: f64) -> Option<(CVec, f64, usize)> {
    let d = m.nrows();
    // Start from the heaviest column: exact in one step for rank-one input.
    let start = (0..d)
        .max_by(|&a, &b| m.column(a).norm().total_cmp(&m.column(b).norm()))
        .unwrap_or(0);
    let mut x: CVec = m.column(start).into_owned();
    let nx = x.norm();
    if nx == 0.0 {
        return Some((unit(d, 0), 0.0, 0));
    }
    x /= C64::new(nx, 0.0);
    let mut lambda = quad_form(m, &x);
    for it in 1..=POWER_MAX_ITER {
        let y = m * &x;
        let ny = y.norm();
        if ny == 0.0 {
            return Some((x, 0.0, it));
        }
        let next = y / C64::new(ny, 0.0);
        let mx = m * &next;
        let next_lambda = next.dotc(&mx).re;
        let residual = (mx - &next * C64::new(next_lambda, 0.0)).norm();
        x = next;
        let settled = (next_lambda - lambda).abs() <= POWER_TOL * next_lambda.abs();
        lambda = next_lambda;
        if settled && residual <= 1e-8 * scale {
            return Some((x, lambda, it));
        }
    }
    None
}

/// Splittable deterministic random stream.
///
/// A stream is identified by a 64-bit seed; `substream(name)` derives an
/// independent child stream from the parent's seed and the name, so the
/// same `(seed, name)` always yields the same draws regardless of how much
/// the parent has been consumed.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    rng: ChaCha8Rng,
}

pub fn seeded_rng(seed: u64) -> RngStream {
    RngStream::new(seed)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn substream(&self, name: &str) -> RngStream {
        RngStream::new(splitmix(self.seed ^ splitmix(fnv1a(name.as_bytes()))))
    }

    /// Child stream keyed by an index, e.g. an episode or slot number.
    pub fn indexed(&self, name: &str, index: u64) -> RngStream {
        self.substream(name).substream(&index.to_string())
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    pub fn gaussian(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Circularly-symmetric complex Gaussian with `E|z|^2 = variance`.
    pub fn complex_gaussian(&mut self, variance: f64) -> C64 {
        let s = (0.5 * variance).sqrt();
        C64::new(s * self.gaussian(), s * self.gaussian())
    }

    pub fn complex_gaussian_vec(&mut self, n: usize, variance: f64) -> CVec {
        cvec_from_fn(n, |_| self.complex_gaussian(variance))
    }

    pub fn unit_phase(&mut self) -> C64 {
        C64::from_polar(1.0, std::f64::consts::TAU * self.uniform())
    }
}
