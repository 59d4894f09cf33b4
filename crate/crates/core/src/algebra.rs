//! Dense complex linear algebra shared by the rest of the crate: matrix
//! helpers, completely positive maps in Kraus form, their spectra and fixed
//! points, and the real Lie span closure of a set of antihermitian matrices.
//!
//! Everything is dense. Dimensions never exceed a few dozen, so the
//! superoperator of a channel on `n x n` matrices is materialized as an
//! `n^2 x n^2` matrix acting on row-major vectorizations.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec::{self, Execution};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;

/// Tolerance for exact matrix identities.
pub const TOL_MAT: f64 = 1e-12;
/// Tolerance for unitarity checks.
pub const TOL_UNITARY: f64 = 1e-10;
/// Default tolerance of the real Lie span closure.
pub const DEFAULT_CLOSURE_TOL: f64 = 1e-9;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn frobenius(a: &ComplexMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace(a: &ComplexMatrix) -> C64 {
    a.diagonal().iter().sum()
}

pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

/// Hilbert-Schmidt inner product `Tr(A^dag B)`.
pub fn hs_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn is_unitary(a: &ComplexMatrix, tol: f64) -> bool {
    a.is_square() && frobenius(&(a.adjoint() * a - identity(a.nrows()))) <= tol
}

pub fn is_hermitian(a: &ComplexMatrix, tol: f64) -> bool {
    a.is_square() && frobenius(&(a - a.adjoint())) <= tol
}

pub fn hermitian_part(a: &ComplexMatrix) -> ComplexMatrix {
    (a + a.adjoint()).scale(0.5)
}

/// Eigenvalues (ascending) of the hermitian part of `a`.
pub fn hermitian_eigenvalues(a: &ComplexMatrix) -> Vec<f64> {
    let eig = SymmetricEigen::new(hermitian_part(a));
    let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    v.sort_by(|x, y| x.total_cmp(y));
    v
}

/// Trace distance `(1/2) ||a - b||_1` between two hermitian matrices.
pub fn trace_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    0.5 * hermitian_eigenvalues(&(a - b)).iter().map(|x| x.abs()).sum::<f64>()
}

/// Principal square root of a positive semidefinite hermitian matrix, and the
/// inverse square root. Fails when the matrix is singular.
pub fn psd_sqrt_and_inv_sqrt(a: &ComplexMatrix) -> Option<(ComplexMatrix, ComplexMatrix)> {
    let eig = SymmetricEigen::new(hermitian_part(a));
    let n = a.nrows();
    let scale = eig.eigenvalues.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    if eig.eigenvalues.iter().any(|&x| x <= 1e-12 * scale) {
        return None;
    }
    let q = &eig.eigenvectors;
    let mut sq = ComplexMatrix::zeros(n, n);
    let mut isq = ComplexMatrix::zeros(n, n);
    for k in 0..n {
        let col = q.column(k);
        let outer = &col * col.adjoint();
        let ev = eig.eigenvalues[k];
        sq += outer.scale(ev.sqrt());
        isq += outer.scale(1.0 / ev.sqrt());
    }
    Some((sq, isq))
}

/// Row-major vectorization.
pub fn vec_row(a: &ComplexMatrix) -> DVector<C64> {
    let (r, cdim) = a.shape();
    DVector::from_iterator(r * cdim, (0..r).flat_map(|i| (0..cdim).map(move |j| a[(i, j)])))
}

pub fn unvec_row(v: &DVector<C64>, n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |i, j| v[i * n + j])
}

/// Partial trace over the second factor of `A (x) B` with dims `(d1, d2)`.
pub fn partial_trace_second(rho: &ComplexMatrix, d1: usize, d2: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d1, d1, |a, b| (0..d2).map(|j| rho[(a * d2 + j, b * d2 + j)]).sum())
}

/// Partial trace over the first factor of `A (x) B` with dims `(d1, d2)`.
pub fn partial_trace_first(rho: &ComplexMatrix, d1: usize, d2: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d2, d2, |j, k| (0..d1).map(|a| rho[(a * d2 + j, a * d2 + k)]).sum())
}

/// Pure state `|psi><psi|` with `psi` normalized.
pub fn pure_state(psi: &[C64]) -> ComplexMatrix {
    let v = DVector::from_column_slice(psi);
    let v = &v / C64::from(v.norm());
    &v * v.adjoint()
}

/// Completely positive map `X -> sum_k K_k X K_k^dag`.
#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    kraus: Vec<ComplexMatrix>,
    dim: usize,
}

impl Channel {
    pub fn new(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let dim = kraus
            .first()
            .map(|k| k.nrows())
            .ok_or_else(|| Error::InvalidInput("channel needs at least one Kraus operator".into()))?;
        if kraus.iter().any(|k| k.shape() != (dim, dim)) {
            return Err(Error::InvalidInput("Kraus operators must share a square dimension".into()));
        }
        Ok(Channel { kraus, dim })
    }

    pub fn identity(dim: usize) -> Self {
        Channel { kraus: vec![identity(dim)], dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for k in &self.kraus {
            out += k * x * k.adjoint();
        }
        out
    }

    /// Heisenberg-picture map `X -> sum_k K_k^dag X K_k`.
    pub fn apply_adjoint(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for k in &self.kraus {
            out += k.adjoint() * x * k;
        }
        out
    }

    pub fn adjoint(&self) -> Channel {
        Channel { kraus: self.kraus.iter().map(|k| k.adjoint()).collect(), dim: self.dim }
    }

    /// `sum_k K_k^dag K_k = I`.
    pub fn is_trace_preserving(&self, tol: f64) -> bool {
        let s: ComplexMatrix = self.kraus.iter().map(|k| k.adjoint() * k).sum();
        frobenius(&(s - identity(self.dim))) <= tol
    }

    /// `sum_k K_k K_k^dag = I`.
    pub fn is_unital(&self, tol: f64) -> bool {
        let s: ComplexMatrix = self.kraus.iter().map(|k| k * k.adjoint()).sum();
        frobenius(&(s - identity(self.dim))) <= tol
    }

    /// Matrix of the map on row-major vectorizations: `sum_k K (x) conj(K)`.
    pub fn superoperator(&self) -> ComplexMatrix {
        let n2 = self.dim * self.dim;
        let mut s = ComplexMatrix::zeros(n2, n2);
        for k in &self.kraus {
            s += k.kronecker(&k.map(|z| z.conj()));
        }
        s
    }

    /// Composition `self^m`.
    pub fn apply_power(&self, x: &ComplexMatrix, m: usize) -> ComplexMatrix {
        (0..m).fold(x.clone(), |acc, _| self.apply(&acc))
    }
}

/// One eigenpair of a channel's superoperator.
#[derive(Clone, Debug)]
pub struct SpectralPair {
    pub eigenvalue: C64,
    pub eigenmatrix: ComplexMatrix,
}

/// Full eigendecomposition of a channel's superoperator, sorted by modulus
/// (descending). Eigenmatrices have unit Frobenius norm.
pub fn channel_spectrum(ch: &Channel) -> Result<Vec<SpectralPair>> {
    if ch.dim() > 64 {
        return Err(Error::DimensionTooLarge(format!("channel dimension {} > 64", ch.dim())));
    }
    let s = ch.superoperator();
    let (values, vectors) = eigen_general(&s);
    let n = ch.dim();
    let mut pairs: Vec<SpectralPair> = values
        .iter()
        .zip(vectors.iter())
        .map(|(&ev, v)| {
            let m = unvec_row(v, n);
            let norm = frobenius(&m);
            SpectralPair { eigenvalue: ev, eigenmatrix: m.unscale(norm) }
        })
        .collect();
    pairs.sort_by(|a, b| {
        b.eigenvalue
            .norm()
            .total_cmp(&a.eigenvalue.norm())
            .then(a.eigenvalue.arg().total_cmp(&b.eigenvalue.arg()))
    });
    check_dominant_diagonalizable(&pairs)?;
    Ok(pairs)
}

/// Moduli of the superoperator eigenvalues, descending.
pub fn spectrum_moduli(ch: &Channel) -> Vec<f64> {
    let (t, _) = schur(&ch.superoperator());
    let mut v: Vec<f64> = t.diagonal().iter().map(|z| z.norm()).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

fn check_dominant_diagonalizable(pairs: &[SpectralPair]) -> Result<()> {
    let Some(lead) = pairs.first() else { return Ok(()) };
    let cluster: Vec<&SpectralPair> = pairs
        .iter()
        .filter(|p| (p.eigenvalue - lead.eigenvalue).norm() <= 1e-9 * lead.eigenvalue.norm().max(1.0))
        .collect();
    if cluster.len() < 2 {
        return Ok(());
    }
    let n2 = cluster[0].eigenmatrix.len();
    let m = ComplexMatrix::from_fn(n2, cluster.len(), |r, k| cluster[k].eigenmatrix.as_slice()[r]);
    let sv = m.svd(false, false).singular_values;
    let rank = sv.iter().filter(|&&x| x > 1e-6).count();
    if rank < cluster.len() {
        return Err(Error::NonDiagonalizable { eigenvalue: format!("{}", lead.eigenvalue) });
    }
    Ok(())
}

fn schur(a: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let (q, t) = nalgebra::linalg::Schur::new(a.clone()).unpack();
    (t, q)
}

/// Eigenvalues and right eigenvectors of a general complex matrix via the
/// complex Schur form and back substitution on the triangular factor.
pub fn eigen_general(a: &ComplexMatrix) -> (Vec<C64>, Vec<DVector<C64>>) {
    let n = a.nrows();
    let (t, q) = schur(a);
    let tnorm = frobenius(&t).max(f64::MIN_POSITIVE);
    let small = f64::EPSILON * tnorm;
    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    for k in 0..n {
        let lambda = t[(k, k)];
        let mut y = DVector::<C64>::zeros(n);
        y[k] = C64::new(1.0, 0.0);
        for j in (0..k).rev() {
            let mut acc = C64::new(0.0, 0.0);
            for l in (j + 1)..=k {
                acc += t[(j, l)] * y[l];
            }
            let mut den = t[(j, j)] - lambda;
            if den.norm() < small {
                den = C64::new(small, 0.0);
            }
            y[j] = -acc / den;
        }
        let v = &q * y;
        let nv = v.norm();
        values.push(lambda);
        vectors.push(v.unscale(nv));
    }
    (values, vectors)
}

/// Unit-trace fixed point of a channel from the null space of `S - I`.
///
/// Returns the fixed point together with the second smallest singular value of
/// `S - I`, which vanishes when the fixed point is not unique.
pub fn fixed_point_nullspace(ch: &Channel, adjoint: bool) -> (ComplexMatrix, f64) {
    let n = ch.dim();
    let mut s = ch.superoperator();
    if adjoint {
        s = s.adjoint();
    }
    let n2 = n * n;
    let m = s - ComplexMatrix::identity(n2, n2);
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let k = order[0];
    let gap = order.get(1).map(|&i| svd.singular_values[i]).unwrap_or(f64::INFINITY);
    let v = DVector::from_iterator(n2, v_t.row(k).iter().map(|z| z.conj()));
    let mut x = unvec_row(&v, n);
    let tr = trace(&x);
    if tr.norm() > 1e-14 {
        x /= tr;
    }
    (hermitian_part(&x), gap)
}

/// Fixed point by power iteration: at most `10 n^2` steps, stopping when the
/// Frobenius change drops below `1e-12`. Returns the iterate and the number of
/// steps used, or `None` when it did not converge.
pub fn power_fixed_point(ch: &Channel, start: &ComplexMatrix, adjoint: bool) -> Option<(ComplexMatrix, usize)> {
    let n = ch.dim();
    let max_iter = 10 * n * n;
    let normalize = |x: ComplexMatrix| {
        let f = frobenius(&x);
        if f > 0.0 {
            x.unscale(f)
        } else {
            x
        }
    };
    let mut x = normalize(start.clone());
    for it in 1..=max_iter.max(1) {
        let next = normalize(if adjoint { ch.apply_adjoint(&x) } else { ch.apply(&x) });
        let delta = frobenius(&(&next - &x));
        x = next;
        if delta < 1e-12 {
            let tr = trace(&x);
            if tr.norm() > 1e-14 {
                x /= tr;
            }
            return Some((x, it));
        }
    }
    None
}

/// Orthonormal basis (real inner product `Re Tr(A^dag B)`) of the smallest
/// real Lie algebra containing the generators.
#[derive(Clone, Debug)]
pub struct LieClosure {
    pub dim: usize,
    pub basis: Vec<ComplexMatrix>,
}

struct RealSpan {
    basis: Vec<ComplexMatrix>,
    tol: f64,
}

impl RealSpan {
    fn residual(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let mut r = x.clone();
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for b in &self.basis {
                let coeff = hs_inner(b, &r).re;
                r -= b.scale(coeff);
            }
        }
        r
    }

    fn insert(&mut self, x: &ComplexMatrix) -> Result<bool> {
        let r = self.residual(x);
        let norm = frobenius(&r);
        if norm > 10.0 * self.tol {
            self.basis.push(r.unscale(norm));
            Ok(true)
        } else if norm > self.tol {
            Err(Error::ToleranceAmbiguity { norm, tol: self.tol })
        } else {
            Ok(false)
        }
    }
}

/// Real Lie span closure by iterated commutators and Gram-Schmidt.
///
/// Generators must be antihermitian and traceless. Commutators for each round
/// are evaluated with `exec` and merged in sorted pair order, so the returned
/// basis does not depend on the execution mode.
pub fn real_span_closure_with(gens: &[ComplexMatrix], tol: f64, exec: Execution) -> Result<LieClosure> {
    let Some(first) = gens.first() else {
        return Ok(LieClosure { dim: 0, basis: vec![] });
    };
    let n = first.nrows();
    for g in gens {
        if g.shape() != (n, n) {
            return Err(Error::InvalidInput("generators must share a square dimension".into()));
        }
        if frobenius(&(g + g.adjoint())) > tol * frobenius(g).max(1.0) {
            return Err(Error::InvalidInput("generator is not antihermitian".into()));
        }
        if trace(g).norm() > tol * frobenius(g).max(1.0) {
            return Err(Error::InvalidInput("generator is not traceless".into()));
        }
    }
    let max_dim = n * n - 1;
    let mut span = RealSpan { basis: Vec::new(), tol };
    for g in gens {
        let norm = frobenius(g);
        if norm <= tol {
            continue;
        }
        span.insert(&g.unscale(norm))?;
        if span.basis.len() == max_dim {
            break;
        }
    }
    let mut frontier = 0;
    while frontier < span.basis.len() && span.basis.len() < max_dim {
        let end = span.basis.len();
        let pairs: Vec<(usize, usize)> =
            (0..end).flat_map(|a| (frontier.max(a + 1)..end).map(move |b| (a, b))).collect();
        let basis = &span.basis;
        let comms = exec::map(exec, &pairs, |&(a, b)| commutator(&basis[a], &basis[b]));
        frontier = end;
        for cm in &comms {
            span.insert(cm)?;
            if span.basis.len() == max_dim {
                break;
            }
        }
    }
    let dim = span.basis.len();
    Ok(LieClosure { dim, basis: span.basis })
}

pub fn real_span_closure(gens: &[ComplexMatrix], tol: f64) -> Result<LieClosure> {
    real_span_closure_with(gens, tol, Execution::default())
}

/// Matrix exponential.
pub fn expm(a: &ComplexMatrix) -> ComplexMatrix {
    a.exp()
}

/// Principal logarithm of a unitary matrix, antihermitian.
pub fn log_unitary(u: &ComplexMatrix) -> ComplexMatrix {
    let (t, q) = schur(u);
    let n = u.nrows();
    let d = ComplexMatrix::from_fn(n, n, |i, j| if i == j { C64::new(0.0, t[(i, i)].arg()) } else { C64::new(0.0, 0.0) });
    let l = &q * d * q.adjoint();
    (&l - l.adjoint()).scale(0.5)
}
