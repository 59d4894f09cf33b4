//! Resource-state tensors and transfer-channel analysis.
//!
//! Every tensor is kept in right-canonical gauge, `sum_i A^{i dag} A^i = I`,
//! so the transfer channel `E(X) = sum_i A^i X A^{i dag}` is trace preserving
//! and its adjoint fixes the identity. In that gauge the adjoint fixed point
//! of the junk channel is `I` as well.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::algebra::{
    c, frobenius, hermitian_eigenvalues, hermitian_part, identity, is_unitary, kron, psd_sqrt_and_inv_sqrt,
    spectrum_moduli, trace, vec_row, Channel, ComplexMatrix, C64,
};
use crate::cohomology::{
    logical_ops_for_rep, projective_irrep, weyl_cocycle, Character, FiniteAbelianGroup, GroupElement, LogicalOps,
    ProjectiveIrrep,
};
use crate::error::{Error, Result};
use crate::serialize::{docs_to_matrices, matrices_to_docs, Header, MatrixDoc};

/// Tolerance on the right-canonical condition.
pub const TOL_CANONICAL: f64 = 1e-10;
/// Two dominant eigenvalue moduli closer than this count as degenerate.
pub const TOL_DEGENERATE: f64 = 1e-9;
/// Largest blocked physical dimension.
pub const MAX_BLOCKED_PHYS_DIM: usize = 1024;
/// Calibrated `|nu_ij|` below this marks a generic-state sample as rejected.
pub const NU_FLOOR: f64 = 1e-6;
pub const JUNK_RETRIES: usize = 100;

/// `A^i = C^i (x) B^i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Factorization {
    pub logical: Vec<ComplexMatrix>,
    pub junk: Vec<ComplexMatrix>,
}

/// Physical wire-basis labels: the character `chi_i` of each basis state and
/// the group element `h_i` with `C^i` proportional to `V(h_i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetryLabels {
    pub group: FiniteAbelianGroup,
    pub characters: Vec<Character>,
    pub elements: Vec<GroupElement>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MPSTensor {
    phys_dim: usize,
    logical_dim: usize,
    junk_dim: usize,
    matrices: Vec<ComplexMatrix>,
    factorization: Option<Factorization>,
    symmetry: Option<SymmetryLabels>,
}

impl MPSTensor {
    pub fn new(
        matrices: Vec<ComplexMatrix>,
        logical_dim: usize,
        junk_dim: usize,
        factorization: Option<Factorization>,
        symmetry: Option<SymmetryLabels>,
    ) -> Result<Self> {
        let d = matrices.len();
        let n = logical_dim * junk_dim;
        if d == 0 || n == 0 {
            return Err(Error::InvalidInput("tensor needs at least one nonempty matrix".into()));
        }
        if matrices.iter().any(|a| a.shape() != (n, n)) {
            return Err(Error::InvalidInput(format!("matrices must be {n}x{n}")));
        }
        let s: ComplexMatrix = matrices.iter().map(|a| a.adjoint() * a).sum();
        let dev = frobenius(&(s - identity(n)));
        if dev > TOL_CANONICAL {
            return Err(Error::InvalidInput(format!("tensor is not right-canonical (deviation {dev:e})")));
        }
        if let Some(f) = &factorization {
            if f.logical.len() != d || f.junk.len() != d {
                return Err(Error::InvalidInput("factorization length differs from physical dimension".into()));
            }
            for i in 0..d {
                if f.logical[i].shape() != (logical_dim, logical_dim) || f.junk[i].shape() != (junk_dim, junk_dim) {
                    return Err(Error::InvalidInput("factorization blocks have wrong shapes".into()));
                }
                if !is_unitary(&f.logical[i], crate::algebra::TOL_UNITARY) {
                    return Err(Error::InvalidInput(format!("logical operator {i} is not unitary")));
                }
                if frobenius(&(kron(&f.logical[i], &f.junk[i]) - &matrices[i])) > 1e-12 {
                    return Err(Error::InvalidInput(format!("A^{i} differs from C^{i} (x) B^{i}")));
                }
            }
        }
        if let Some(sym) = &symmetry {
            if sym.characters.len() != d || sym.elements.len() != d {
                return Err(Error::InvalidInput("one character and one group element per physical state".into()));
            }
        }
        Ok(MPSTensor { phys_dim: d, logical_dim, junk_dim, matrices, factorization, symmetry })
    }

    pub fn phys_dim(&self) -> usize {
        self.phys_dim
    }

    pub fn logical_dim(&self) -> usize {
        self.logical_dim
    }

    pub fn junk_dim(&self) -> usize {
        self.junk_dim
    }

    /// `D * kappa`.
    pub fn bond_dim(&self) -> usize {
        self.logical_dim * self.junk_dim
    }

    pub fn matrices(&self) -> &[ComplexMatrix] {
        &self.matrices
    }

    pub fn factorization(&self) -> Option<&Factorization> {
        self.factorization.as_ref()
    }

    pub fn symmetry(&self) -> Option<&SymmetryLabels> {
        self.symmetry.as_ref()
    }

    pub fn characters(&self) -> Option<&[Character]> {
        self.symmetry.as_ref().map(|s| s.characters.as_slice())
    }

    pub fn require_factorization(&self) -> Result<&Factorization> {
        self.factorization
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("operation needs a factorized tensor A^i = C^i (x) B^i".into()))
    }

    pub fn require_symmetry(&self) -> Result<&SymmetryLabels> {
        self.symmetry.as_ref().ok_or_else(|| Error::InvalidInput("operation needs wire-basis character labels".into()))
    }

    /// Copy with one matrix replaced, skipping all validation. Used to build
    /// deliberately broken tensors.
    pub fn with_matrix_unchecked(&self, i: usize, m: ComplexMatrix) -> MPSTensor {
        let mut t = self.clone();
        t.matrices[i] = m;
        t.factorization = None;
        t
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&TensorDoc::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: TensorDoc = serde_json::from_str(s)?;
        doc.into_tensor()
    }
}

/// Renormalize `B^i <- B^i S^{-1/2}` with `S = sum_i B^{i dag} B^i`.
pub fn normalize_junk(junk: &[ComplexMatrix]) -> Result<Vec<ComplexMatrix>> {
    let k = junk.first().map(|b| b.nrows()).ok_or(Error::NotNormalizable)?;
    if junk.iter().any(|b| b.shape() != (k, k)) {
        return Err(Error::InvalidInput("junk matrices must share a square dimension".into()));
    }
    let s: ComplexMatrix = junk.iter().map(|b| b.adjoint() * b).sum();
    let (_, isq) = psd_sqrt_and_inv_sqrt(&s).ok_or(Error::NotNormalizable)?;
    Ok(junk.iter().map(|b| b * &isq).collect())
}

/// `A^i = C^i (x) B^i` with the junk set renormalized so the tensor is right-canonical.
pub fn spt_tensor(ops: &LogicalOps, junk: &[ComplexMatrix]) -> Result<MPSTensor> {
    if ops.len() != junk.len() {
        return Err(Error::InvalidInput(format!("{} logical operators but {} junk matrices", ops.len(), junk.len())));
    }
    let junk = normalize_junk(junk)?;
    let logical = ops.matrices();
    let matrices = logical.iter().zip(&junk).map(|(cm, b)| kron(cm, b)).collect();
    let kappa = junk[0].nrows();
    let symmetry = SymmetryLabels {
        group: ops.group().clone(),
        characters: ops.characters(),
        elements: ops.ops().iter().map(|o| o.element.clone()).collect(),
    };
    MPSTensor::new(matrices, ops.dim(), kappa, Some(Factorization { logical, junk }), Some(symmetry))
}

/// Logical operators on `Z_d x Z_d` with the standard Weyl cocycle.
pub fn weyl_logical_ops(d: u32, chars: &[Character]) -> Result<LogicalOps> {
    let g = FiniteAbelianGroup::weyl(d);
    let irrep = projective_irrep(&g, &weyl_cocycle(d)?)?;
    logical_ops_for_rep(&irrep, chars)
}

/// Logical operators `X, Y, Z` of the AKLT state, with wire-basis characters
/// `chi_x = (1,0)`, `chi_y = (1,1)`, `chi_z = (0,1)` of `Z_2 x Z_2`.
pub fn aklt_logical_ops() -> LogicalOps {
    let g = FiniteAbelianGroup::weyl(2);
    let chars = [[1, 0], [1, 1], [0, 1]].iter().map(|e| Character { exponents: e.to_vec() }).collect::<Vec<_>>();
    let mut ops = weyl_logical_ops(2, &chars).expect("Z_2 x Z_2 Weyl operators");
    // V((1,1)) = ZX = iY
    ops.rephase(1, c(0.0, -1.0));
    debug_assert_eq!(ops.group(), &g);
    ops
}

/// AKLT tensor `A^i = sigma^i / sqrt 3`.
pub fn aklt_tensor() -> MPSTensor {
    let b = ComplexMatrix::from_element(1, 1, c(1.0 / 3f64.sqrt(), 0.0));
    spt_tensor(&aklt_logical_ops(), &[b.clone(), b.clone(), b]).expect("AKLT tensor is valid")
}

/// `E` with Kraus `{A^i}` and, for factorized tensors, `E~` with Kraus `{B^i}`.
pub fn transfer_channels(t: &MPSTensor) -> (Channel, Option<Channel>) {
    let e = Channel::new(t.matrices.clone()).expect("tensor matrices are square");
    let et = t.factorization.as_ref().map(|f| Channel::new(f.junk.clone()).expect("junk matrices are square"));
    (e, et)
}

#[derive(Clone, Debug)]
pub struct FixedPointData {
    pub rho_fix: ComplexMatrix,
    /// Adjoint fixed point with `Tr(Lambda rho_fix) = 1`.
    pub lambda_tilde: ComplexMatrix,
    /// Second largest eigenvalue modulus.
    pub lambda1: f64,
    /// `-1/ln(lambda1)`; zero when `lambda1 = 0`.
    pub xi: f64,
}

impl FixedPointData {
    /// `Tr(Lambda X) rho_fix`, the limit of `E^m(X)`.
    pub fn project(&self, x: &ComplexMatrix) -> ComplexMatrix {
        &self.rho_fix * trace(&(&self.lambda_tilde * x))
    }

    /// `||E^m(X) - Tr(Lambda X) rho_fix||_F` for `m = 0..=m_max`.
    pub fn convergence_profile(&self, ch: &Channel, x: &ComplexMatrix, m_max: usize) -> Vec<f64> {
        let limit = self.project(x);
        let mut cur = x.clone();
        let mut out = Vec::with_capacity(m_max + 1);
        for m in 0..=m_max {
            if m > 0 {
                cur = ch.apply(&cur);
            }
            out.push(frobenius(&(&cur - &limit)));
        }
        out
    }

    /// Check `||E^m(X) - Tr(Lambda X) rho_fix|| <= c lambda1^m` on five seeded
    /// random `X`, allowing a polynomial prefactor from non-trivial Jordan
    /// structure below the dominant eigenvalue.
    pub fn verify_convergence(&self, ch: &Channel, seed: u64) -> bool {
        let n = ch.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rate = self.lambda1.max(1e-3) * (1.0 + 1e-6);
        let m_max = 40;
        (0..5).all(|_| {
            let x = random_complex_matrix(&mut rng, n, n);
            let prof = self.convergence_profile(ch, &x, m_max);
            let c0 = 10.0 * prof[0].max(frobenius(&x)).max(1.0);
            prof.iter()
                .enumerate()
                .all(|(m, &e)| e <= c0 * ((m + 1) as f64).powi((n * n) as i32) * rate.powi(m as i32) + 1e-12)
        })
    }
}

/// Fixed points and correlation length of a primitive trace-preserving channel.
pub fn fixed_point_data(ch: &Channel) -> Result<FixedPointData> {
    let n = ch.dim();
    if n == 1 {
        let one = identity(1);
        return Ok(FixedPointData { rho_fix: one.clone(), lambda_tilde: one, lambda1: 0.0, xi: 0.0 });
    }
    let moduli = spectrum_moduli(ch);
    if moduli[1] > moduli[0] - TOL_DEGENERATE {
        return Err(Error::NotPrimitive(format!(
            "dominant eigenvalue modulus {:.12} is degenerate with {:.12}",
            moduli[0], moduli[1]
        )));
    }
    let (rho, _) = crate::algebra::fixed_point_nullspace(ch, false);
    let min_eig = hermitian_eigenvalues(&rho)[0];
    if min_eig < -1e-10 {
        return Err(Error::NotPrimitive(format!("fixed point has negative eigenvalue {min_eig:e}")));
    }
    if frobenius(&(ch.apply(&rho) - &rho)) > 1e-10 {
        return Err(Error::NotPrimitive("channel has no trace-one fixed point".into()));
    }
    let (lam, _) = crate::algebra::fixed_point_nullspace(ch, true);
    let norm = trace(&(&lam * &rho));
    if norm.norm() < 1e-12 {
        return Err(Error::NotPrimitive("adjoint fixed point is orthogonal to rho_fix".into()));
    }
    let lam = hermitian_part(&(lam / norm));
    let lambda1 = moduli[1];
    Ok(FixedPointData { rho_fix: rho, lambda_tilde: lam, lambda1, xi: correlation_length(lambda1) })
}

/// `-1/ln(lambda1)`, with the convention `0` for `lambda1 = 0`.
pub fn correlation_length(lambda1: f64) -> f64 {
    if lambda1 <= 0.0 {
        0.0
    } else {
        -1.0 / lambda1.ln()
    }
}

/// Second eigenvalue modulus of the full transfer channel and its correlation length.
pub fn full_correlation(t: &MPSTensor) -> (f64, f64) {
    let (e, _) = transfer_channels(t);
    let m = spectrum_moduli(&e);
    let l1 = m.get(1).copied().unwrap_or(0.0);
    (l1, correlation_length(l1))
}

/// Spectral primitivity: nondegenerate dominant eigenvalue and a positive
/// definite fixed point.
pub fn is_primitive_spectral(ch: &Channel) -> bool {
    match fixed_point_data(ch) {
        Ok(fp) => ch.dim() == 1 || hermitian_eigenvalues(&fp.rho_fix)[0] > 1e-12,
        Err(_) => false,
    }
}

/// Smallest `L <= l_max` at which the products of exactly `L` Kraus
/// operators span the full matrix algebra.
pub fn kraus_span_full_length(kraus: &[ComplexMatrix], l_max: usize) -> Option<usize> {
    let n = kraus.first()?.nrows();
    let full = n * n;
    let mut basis: Vec<ComplexMatrix> = Vec::new();
    let mut current: Vec<ComplexMatrix> = kraus.to_vec();
    for l in 1..=l_max {
        basis.clear();
        let mut vecs: Vec<DVector<C64>> = Vec::new();
        for m in &current {
            let mut v = vec_row(m);
            for _ in 0..2 {
                for b in &vecs {
                    let p = b.dotc(&v);
                    v -= b * p;
                }
            }
            let nv = v.norm();
            if nv > 1e-10 {
                vecs.push(v.unscale(nv));
                basis.push(m.unscale(frobenius(m)));
                if vecs.len() == full {
                    return Some(l);
                }
            }
        }
        current = basis.iter().flat_map(|b| kraus.iter().map(move |k| k * b)).collect();
    }
    None
}

/// Kraus-span primitivity at the length `4 kappa^2`.
pub fn is_primitive_kraus(kraus: &[ComplexMatrix]) -> bool {
    let Some(k) = kraus.first() else { return false };
    let n = k.nrows();
    kraus_span_full_length(kraus, 4 * n * n).is_some()
}

/// `nu_ij = Tr(Lambda B^i rho_fix B^{j dag})`, the limit coefficients of the
/// junk channel applied to `B^i rho_fix B^{j dag}`.
pub fn nu_spectral(junk: &[ComplexMatrix], fp: &FixedPointData) -> ComplexMatrix {
    let d = junk.len();
    ComplexMatrix::from_fn(d, d, |i, j| trace(&(&fp.lambda_tilde * &junk[i] * &fp.rho_fix * junk[j].adjoint())))
}

pub(crate) fn random_complex_matrix(rng: &mut impl Rng, r: usize, cdim: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(r, cdim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    })
}

/// Seeded generic junk set: complex Gaussian matrices, normalized, resampled
/// until the junk channel is primitive and every `|nu_ij|` exceeds the floor.
pub fn random_primitive_junk(d: usize, kappa: usize, seed: u64) -> Result<Vec<ComplexMatrix>> {
    if kappa == 0 || d == 0 {
        return Err(Error::InvalidInput("need d >= 1 and kappa >= 1".into()));
    }
    if kappa > 8 {
        return Err(Error::DimensionTooLarge(format!("junk dimension {kappa} > 8")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..JUNK_RETRIES {
        let raw: Vec<ComplexMatrix> = (0..d).map(|_| random_complex_matrix(&mut rng, kappa, kappa)).collect();
        let Ok(junk) = normalize_junk(&raw) else { continue };
        let ch = Channel::new(junk.clone())?;
        if !is_primitive_kraus(&junk) || !is_primitive_spectral(&ch) {
            continue;
        }
        let fp = fixed_point_data(&ch)?;
        let nu = nu_spectral(&junk, &fp);
        if nu.iter().all(|z| z.norm() > NU_FLOOR) {
            return Ok(junk);
        }
    }
    Err(Error::RetriesExhausted { attempts: JUNK_RETRIES, seed })
}

/// Max over `h` and `i` of `||chi_i(h) A^i - (V(h)^dag (x) I) A^i (V(h) (x) I)||_F`.
pub fn symmetry_check(t: &MPSTensor, irrep: &ProjectiveIrrep) -> Result<f64> {
    let sym = t.require_symmetry()?;
    let g = irrep.group();
    if &sym.group != g {
        return Err(Error::InvalidInput("tensor labels and irrep use different groups".into()));
    }
    if irrep.dim() != t.logical_dim {
        return Err(Error::InvalidInput("irrep dimension differs from the logical dimension".into()));
    }
    let eye = identity(t.junk_dim);
    let mut worst = 0.0f64;
    for h in g.elements() {
        let v = kron(irrep.v(&h), &eye);
        let vd = v.adjoint();
        for (a, chi) in t.matrices.iter().zip(&sym.characters) {
            let lhs = a * chi.value(g, &h);
            let rhs = &vd * a * &v;
            worst = worst.max(frobenius(&(lhs - rhs)));
        }
    }
    Ok(worst)
}

/// Block `b` neighbouring sites: `A^{(i_1..i_b)} = A^{i_b} ... A^{i_1}`, flat
/// index with `i_1` most significant.
pub fn block_sites(t: &MPSTensor, b: usize) -> Result<MPSTensor> {
    if b == 0 {
        return Err(Error::InvalidInput("block size must be at least 1".into()));
    }
    let d = t.phys_dim;
    let total = (0..b).try_fold(1usize, |acc, _| acc.checked_mul(d).filter(|&x| x <= MAX_BLOCKED_PHYS_DIM));
    let Some(total) = total else {
        return Err(Error::DimensionTooLarge(format!("{d}^{b} exceeds {MAX_BLOCKED_PHYS_DIM}")));
    };
    if b == 1 {
        return Ok(t.clone());
    }
    let digits = |mut idx: usize| {
        let mut v = vec![0usize; b];
        for k in (0..b).rev() {
            v[k] = idx % d;
            idx /= d;
        }
        v
    };
    let product = |ms: &[ComplexMatrix], idx: &[usize]| {
        idx.iter().skip(1).fold(ms[idx[0]].clone(), |acc, &i| &ms[i] * acc)
    };
    let tuples: Vec<Vec<usize>> = (0..total).map(digits).collect();
    let matrices = tuples.iter().map(|ix| product(&t.matrices, ix)).collect();
    let factorization = t.factorization.as_ref().map(|f| Factorization {
        logical: tuples.iter().map(|ix| product(&f.logical, ix)).collect(),
        junk: tuples.iter().map(|ix| product(&f.junk, ix)).collect(),
    });
    let symmetry = t.symmetry.as_ref().map(|s| SymmetryLabels {
        group: s.group.clone(),
        characters: tuples
            .iter()
            .map(|ix| ix.iter().skip(1).fold(s.characters[ix[0]].clone(), |acc, &i| acc.mul(&s.group, &s.characters[i])))
            .collect(),
        elements: tuples
            .iter()
            .map(|ix| ix.iter().skip(1).fold(s.elements[ix[0]].clone(), |acc, &i| s.group.add(&acc, &s.elements[i])))
            .collect(),
    });
    MPSTensor::new(matrices, t.logical_dim, t.junk_dim, factorization, symmetry)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FactorizationDoc {
    logical: Vec<MatrixDoc>,
    junk: Vec<MatrixDoc>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SymmetryDoc {
    group_orders: Vec<u32>,
    characters: Vec<Vec<u32>>,
    elements: Vec<Vec<u32>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorDoc {
    header: Header,
    phys_dim: usize,
    logical_dim: usize,
    junk_dim: usize,
    matrices: Vec<MatrixDoc>,
    factorization: Option<FactorizationDoc>,
    symmetry: Option<SymmetryDoc>,
}

const TENSOR_KIND: &str = "tensor";

impl From<&MPSTensor> for TensorDoc {
    fn from(t: &MPSTensor) -> Self {
        TensorDoc {
            header: Header::new(TENSOR_KIND),
            phys_dim: t.phys_dim,
            logical_dim: t.logical_dim,
            junk_dim: t.junk_dim,
            matrices: matrices_to_docs(&t.matrices),
            factorization: t
                .factorization
                .as_ref()
                .map(|f| FactorizationDoc { logical: matrices_to_docs(&f.logical), junk: matrices_to_docs(&f.junk) }),
            symmetry: t.symmetry.as_ref().map(|s| SymmetryDoc {
                group_orders: s.group.orders().to_vec(),
                characters: s.characters.iter().map(|c| c.exponents.clone()).collect(),
                elements: s.elements.iter().map(|e| e.0.clone()).collect(),
            }),
        }
    }
}

impl TensorDoc {
    fn into_tensor(self) -> Result<MPSTensor> {
        self.header.check(TENSOR_KIND)?;
        let matrices = docs_to_matrices(&self.matrices)?;
        if matrices.len() != self.phys_dim {
            return Err(Error::Schema(format!("phys_dim {} but {} matrices", self.phys_dim, matrices.len())));
        }
        let factorization = match self.factorization {
            Some(f) => Some(Factorization { logical: docs_to_matrices(&f.logical)?, junk: docs_to_matrices(&f.junk)? }),
            None => None,
        };
        let symmetry = match self.symmetry {
            Some(s) => {
                let group = FiniteAbelianGroup::new(s.group_orders)?;
                let characters = s.characters.into_iter().map(|e| Character::new(&group, e)).collect::<Result<Vec<_>>>()?;
                let elements = s
                    .elements
                    .into_iter()
                    .map(|e| {
                        let e = GroupElement(e);
                        if group.contains(&e) {
                            Ok(e)
                        } else {
                            Err(Error::Schema(format!("group element {e} outside {:?}", group.orders())))
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                Some(SymmetryLabels { group, characters, elements })
            }
            None => None,
        };
        MPSTensor::new(matrices, self.logical_dim, self.junk_dim, factorization, symmetry)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{channel_spectrum, TOL_MAT};
    use approx::assert_abs_diff_eq;

    fn paulis() -> [ComplexMatrix; 3] {
        let x = ComplexMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let y = ComplexMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]);
        let z = ComplexMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
        [x, y, z]
    }

    #[test]
    fn aklt_matrices_are_scaled_paulis() {
        let t = aklt_tensor();
        assert_eq!((t.phys_dim(), t.logical_dim(), t.junk_dim()), (3, 2, 1));
        for (a, s) in t.matrices().iter().zip(paulis()) {
            assert!(frobenius(&(a - s.unscale(3f64.sqrt()))) < TOL_MAT);
        }
        let chars: Vec<Vec<u32>> = t.characters().unwrap().iter().map(|c| c.exponents.clone()).collect();
        assert_eq!(chars, vec![vec![1, 0], vec![1, 1], vec![0, 1]]);
    }

    #[test]
    fn aklt_transfer_spectrum() {
        let (e, et) = transfer_channels(&aklt_tensor());
        let spec = channel_spectrum(&e).unwrap();
        assert_abs_diff_eq!(spec[0].eigenvalue.re, 1.0, epsilon = 1e-12);
        for p in &spec[1..] {
            assert_abs_diff_eq!((p.eigenvalue - c(-1.0 / 3.0, 0.0)).norm(), 0.0, epsilon = 1e-12);
        }
        let et = et.unwrap();
        assert_eq!(et.dim(), 1);
        assert_abs_diff_eq!((et.kraus().iter().map(|k| k[(0, 0)].norm_sqr()).sum::<f64>()), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn aklt_full_fixed_point_is_maximally_mixed() {
        let (e, _) = transfer_channels(&aklt_tensor());
        let fp = fixed_point_data(&e).unwrap();
        assert!(frobenius(&(&fp.rho_fix - identity(2).scale(0.5))) < 1e-12);
        assert!(frobenius(&(&fp.lambda_tilde - identity(2))) < 1e-12);
        assert_abs_diff_eq!(fp.lambda1, 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn scalar_junk_convention() {
        let fp = fixed_point_data(&transfer_channels(&aklt_tensor()).1.unwrap()).unwrap();
        assert_eq!(fp.lambda1, 0.0);
        assert_eq!(fp.xi, 0.0);
        assert_eq!(fp.rho_fix[(0, 0)], c(1.0, 0.0));
    }

    #[test]
    fn non_normalizable_junk() {
        let z = ComplexMatrix::zeros(2, 2);
        let err = spt_tensor(&aklt_logical_ops(), &[z.clone(), z.clone(), z]).unwrap_err();
        assert!(matches!(err, Error::NotNormalizable));
    }

    #[test]
    fn seeded_junk_is_deterministic_and_primitive() {
        let a = random_primitive_junk(3, 2, 7).unwrap();
        let b = random_primitive_junk(3, 2, 7).unwrap();
        assert_eq!(a, b);
        assert!(kraus_span_full_length(&a, 16).is_some());
        let s: ComplexMatrix = a.iter().map(|m| m.adjoint() * m).sum();
        assert!(frobenius(&(s - identity(2))) < 1e-12);
    }

    #[test]
    fn scalar_random_junk_is_normalized() {
        let j = random_primitive_junk(3, 1, 11).unwrap();
        let s: f64 = j.iter().map(|b| b[(0, 0)].norm_sqr()).sum();
        assert_abs_diff_eq!(s, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn seeded_junk_fixed_points() {
        let junk = random_primitive_junk(3, 2, 7).unwrap();
        let ch = Channel::new(junk.clone()).unwrap();
        let fp = fixed_point_data(&ch).unwrap();
        assert!(fp.lambda1 < 1.0 && fp.lambda1 > 0.0);
        assert!(fp.xi > 0.0 && fp.xi.is_finite());
        assert!(frobenius(&(ch.apply(&fp.rho_fix) - &fp.rho_fix)) < 1e-10);
        assert!(frobenius(&(ch.apply_adjoint(&fp.lambda_tilde) - &fp.lambda_tilde)) < 1e-10);
        assert_abs_diff_eq!(trace(&(&fp.lambda_tilde * &fp.rho_fix)).re, 1.0, epsilon = 1e-12);
        assert!(fp.verify_convergence(&ch, 1));
        let nu = nu_spectral(&junk, &fp);
        let tr: C64 = (0..3).map(|i| nu[(i, i)]).sum();
        assert_abs_diff_eq!((tr - c(1.0, 0.0)).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn reducible_channel_is_not_primitive() {
        // two decoupled blocks
        let p0 = ComplexMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let p1 = ComplexMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let ch = Channel::new(vec![p0.clone(), p1.clone()]).unwrap();
        assert!(matches!(fixed_point_data(&ch), Err(Error::NotPrimitive(_))));
        assert!(!is_primitive_kraus(&[p0, p1]));
    }

    #[test]
    fn symmetry_checks() {
        let t = aklt_tensor();
        let irrep = projective_irrep(&FiniteAbelianGroup::weyl(2), &weyl_cocycle(2).unwrap()).unwrap();
        assert!(symmetry_check(&t, &irrep).unwrap() <= 1e-10);
        // rescaling keeps the covariance relation; mixing two labels breaks it
        let scaled = t.with_matrix_unchecked(0, t.matrices()[0].scale(1.1));
        assert!(symmetry_check(&scaled, &irrep).unwrap() <= 1e-10);
        let mixed = t.with_matrix_unchecked(0, &t.matrices()[0] + t.matrices()[1].scale(0.1));
        let v = symmetry_check(&mixed, &irrep).unwrap();
        assert_abs_diff_eq!(v, 0.2 * (2.0f64 / 3.0).sqrt(), epsilon = 1e-12);
        assert!(v > 0.05);
        let junk = random_primitive_junk(3, 2, 7).unwrap();
        let t2 = spt_tensor(&aklt_logical_ops(), &junk).unwrap();
        assert!(symmetry_check(&t2, &irrep).unwrap() <= 1e-10);
    }

    #[test]
    fn blocking_aklt_twice() {
        let t = aklt_tensor();
        assert_eq!(block_sites(&t, 1).unwrap(), t);
        let t2 = block_sites(&t, 2).unwrap();
        assert_eq!(t2.phys_dim(), 9);
        let (e, _) = transfer_channels(&t);
        let (e2, _) = transfer_channels(&t2);
        for k in 0..4 {
            let mut x = ComplexMatrix::zeros(2, 2);
            x[(k / 2, k % 2)] = c(1.0, 0.0);
            assert!(frobenius(&(e2.apply(&x) - e.apply(&e.apply(&x)))) < 1e-14);
        }
        assert!(t2.characters().unwrap().iter().any(|c| c.is_trivial()));
        assert!(matches!(block_sites(&t, 7), Err(Error::DimensionTooLarge(_))));
    }

    #[test]
    fn weyl_d3_scalar_junk() {
        let g = FiniteAbelianGroup::weyl(3);
        let chars: Vec<Character> = g.characters().into_iter().filter(|c| !c.is_trivial()).collect();
        let ops = weyl_logical_ops(3, &chars).unwrap();
        let junk = vec![ComplexMatrix::from_element(1, 1, c(1.0, 0.0)); 8];
        let t = spt_tensor(&ops, &junk).unwrap();
        let fp = fixed_point_data(&transfer_channels(&t).1.unwrap()).unwrap();
        let nu = nu_spectral(&t.factorization().unwrap().junk, &fp);
        for z in nu.iter() {
            assert_abs_diff_eq!((z - c(1.0 / 8.0, 0.0)).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn json_round_trip_bit_exact() {
        let junk = random_primitive_junk(3, 2, 5).unwrap();
        let t = spt_tensor(&aklt_logical_ops(), &junk).unwrap();
        let s = t.to_json().unwrap();
        let back = MPSTensor::from_json(&s).unwrap();
        for (a, b) in t.matrices().iter().zip(back.matrices()) {
            for (x, y) in a.iter().zip(b.iter()) {
                assert_eq!(x.re.to_bits(), y.re.to_bits());
                assert_eq!(x.im.to_bits(), y.im.to_bits());
            }
        }
        assert_eq!(back, t);
    }
}
