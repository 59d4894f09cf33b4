//! Virtual-space simulation of measurement-based computation on a factorized
//! tensor `A^i = C^i (x) B^i`.
//!
//! Measuring a site in a basis `{|o_s>}` applies `A[s] = sum_i <o_s|i> A^i`
//! to the virtual state. Outcome `s` carries the byproduct `C^{l(s)}` of its
//! wire label `l(s)`. The exact sum-over-outcomes evolution folds the
//! byproduct into the Kraus operator, `Gamma_s = (C^{l(s)} (x) I)^dag A[s]`,
//! and renormalizes after every step.
//!
//! The first-order action of a basis tilted in the `(i, j)` plane by
//! `a = dtheta e^{i phi}` is `exp{dtheta |nu_ij|/nu (e^{-i(phi+delta_ij)} M - h.c.)}`
//! with `M = C^{i dag} C^j` and `nu_ij = |nu_ij| e^{i delta_ij}`.

use std::f64::consts::PI;

use nalgebra::{DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{
    c, expm, frobenius, hermitian_eigenvalues, hermitian_part, identity, is_hermitian, kron, log_unitary,
    partial_trace_first, partial_trace_second, pure_state, trace, trace_distance, Channel, ComplexMatrix, C64,
};
use crate::cohomology::{weyl_matrix, GroupElement};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::mps::{fixed_point_data, nu_spectral, transfer_channels, FixedPointData, MPSTensor, NU_FLOOR};
use crate::serialize::{Header, MatrixDoc};

/// Largest tilt amplitude accepted by [`MeasurementBasis::tilted`].
pub const MAX_TILT: f64 = 0.3;
/// Largest per-step physical angle used by compiled programs.
pub const MAX_STEP_ANGLE: f64 = 0.05;
/// `|nu_ij|/nu` of the AKLT state, the reference for step counts.
pub const REFERENCE_RATIO: f64 = 1.0 / 3.0;
/// Default number of bootstrap resamples.
pub const DEFAULT_BOOTSTRAP: usize = 200;

/// Orthonormal single-site basis. Outcome `s` is the vector `vectors[s]`
/// and carries the byproduct of wire label `labels[s]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementBasis {
    vectors: Vec<DVector<C64>>,
    labels: Vec<usize>,
}

impl MeasurementBasis {
    pub fn new(vectors: Vec<DVector<C64>>, labels: Vec<usize>) -> Result<Self> {
        let d = vectors.len();
        if labels.len() != d || vectors.iter().any(|v| v.len() != d) {
            return Err(Error::InvalidInput("basis needs d vectors of length d and d labels".into()));
        }
        if labels.iter().any(|&l| l >= d) {
            return Err(Error::IndexOutOfRange("byproduct label outside the wire basis".into()));
        }
        let b = MeasurementBasis { vectors, labels };
        let dev = b.gram_deviation();
        if dev > 1e-10 {
            return Err(Error::InvalidInput(format!("basis is not orthonormal (Gram deviation {dev:e})")));
        }
        Ok(b)
    }

    /// Symmetry-diagonal basis `{|0>, ..., |d-1>}`.
    pub fn wire(d: usize) -> Self {
        let vectors = (0..d)
            .map(|k| {
                let mut v = DVector::zeros(d);
                v[k] = c(1.0, 0.0);
                v
            })
            .collect();
        MeasurementBasis { vectors, labels: (0..d).collect() }
    }

    /// Wire basis with `|i>, |j>` replaced by `cos t |i> + sin t e^{i phi} |j>`
    /// and `cos t |j> - sin t e^{-i phi} |i>`.
    pub fn rotation(d: usize, i: usize, j: usize, t: f64, phi: f64) -> Result<Self> {
        if i >= d || j >= d || i == j {
            return Err(Error::IndexOutOfRange(format!("pair ({i},{j}) invalid for d = {d}")));
        }
        let mut b = Self::wire(d);
        let (s, co) = t.sin_cos();
        let e = C64::from_polar(1.0, phi);
        let mut vi = DVector::zeros(d);
        vi[i] = c(co, 0.0);
        vi[j] = e * s;
        let mut vj = DVector::zeros(d);
        vj[j] = c(co, 0.0);
        vj[i] = -e.conj() * s;
        b.vectors[i] = vi;
        b.vectors[j] = vj;
        Ok(b)
    }

    /// Normalized `|i> + dtheta e^{i phi}|j>` and `|j> - dtheta e^{-i phi}|i>`.
    pub fn tilted(d: usize, i: usize, j: usize, dtheta: f64, phi: f64) -> Result<Self> {
        if dtheta.abs() > MAX_TILT {
            return Err(Error::InvalidInput(format!("tilt {dtheta} outside the perturbative range |dtheta| <= {MAX_TILT}")));
        }
        Self::rotation(d, i, j, dtheta.atan(), phi)
    }

    /// AKLT basis `{cos(theta/2)|x> - sin(theta/2)|y>, sin(theta/2)|x> + cos(theta/2)|y>, |z>}`.
    pub fn aklt_z(theta: f64) -> Self {
        Self::rotation(3, 0, 1, theta / 2.0, PI).expect("valid AKLT pair")
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[DVector<C64>] {
        &self.vectors
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn is_wire(&self) -> bool {
        self.vectors.iter().enumerate().all(|(k, v)| v.iter().enumerate().all(|(i, z)| *z == if i == k { c(1.0, 0.0) } else { c(0.0, 0.0) }))
            && self.labels.iter().enumerate().all(|(k, &l)| k == l)
    }

    pub fn gram_deviation(&self) -> f64 {
        let d = self.dim();
        let mut dev = 0.0f64;
        for a in 0..d {
            for b in 0..d {
                let g = self.vectors[a].dotc(&self.vectors[b]);
                let e = if a == b { c(1.0, 0.0) } else { c(0.0, 0.0) };
                dev = dev.max((g - e).norm());
            }
        }
        dev
    }

    /// Basis to measure in the lab frame when the accumulated byproduct is
    /// `V(g)`: `o'_k = o_k chi_k(g)`.
    pub fn adapted(&self, t: &MPSTensor, g: &GroupElement) -> Result<Self> {
        let sym = t.require_symmetry()?;
        let phases: Vec<C64> = sym.characters.iter().map(|chi| chi.value(&sym.group, g)).collect();
        let vectors = self.vectors.iter().map(|v| DVector::from_iterator(v.len(), v.iter().zip(&phases).map(|(z, p)| z * p))).collect();
        Ok(MeasurementBasis { vectors, labels: self.labels.clone() })
    }

    /// `A[s] = sum_i conj(o_s[i]) A^i`.
    pub fn readout_operator(&self, t: &MPSTensor, s: usize) -> ComplexMatrix {
        let n = t.bond_dim();
        let mut out = ComplexMatrix::zeros(n, n);
        for (z, a) in self.vectors[s].iter().zip(t.matrices()) {
            if *z != c(0.0, 0.0) {
                out += a * z.conj();
            }
        }
        out
    }
}

/// Accumulated byproduct as a group element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ByproductFrame {
    pub accumulated: GroupElement,
}

impl ByproductFrame {
    pub fn identity(t: &MPSTensor) -> Result<Self> {
        Ok(ByproductFrame { accumulated: t.require_symmetry()?.group.identity() })
    }

    pub fn compose(&self, t: &MPSTensor, label: usize) -> Result<Self> {
        let sym = t.require_symmetry()?;
        Ok(ByproductFrame { accumulated: sym.group.add(&self.accumulated, &sym.elements[label]) })
    }
}

/// Density matrix on `logical (x) junk`.
#[derive(Clone, Debug, PartialEq)]
pub struct MixedVirtualState {
    rho: ComplexMatrix,
    logical_dim: usize,
    junk_dim: usize,
}

impl MixedVirtualState {
    pub fn new(rho: ComplexMatrix, logical_dim: usize, junk_dim: usize) -> Result<Self> {
        let n = logical_dim * junk_dim;
        if rho.shape() != (n, n) {
            return Err(Error::InvalidInput(format!("state must be {n}x{n}")));
        }
        if (trace(&rho) - c(1.0, 0.0)).norm() > 1e-10 {
            return Err(Error::InvalidInput("state must have unit trace".into()));
        }
        if !is_hermitian(&rho, 1e-10) {
            return Err(Error::InvalidInput("state must be hermitian".into()));
        }
        if hermitian_eigenvalues(&rho)[0] < -1e-10 {
            return Err(Error::InvalidInput("state must be positive semidefinite".into()));
        }
        Ok(MixedVirtualState { rho, logical_dim, junk_dim })
    }

    pub fn product(logical: &ComplexMatrix, junk: &ComplexMatrix) -> Result<Self> {
        Self::new(kron(logical, junk), logical.nrows(), junk.nrows())
    }

    /// `logical (x) rho_fix` of the tensor's junk channel.
    pub fn with_fixed_junk(logical: &ComplexMatrix, t: &MPSTensor) -> Result<Self> {
        let fp = junk_fixed_point(t)?;
        Self::product(logical, &fp.rho_fix)
    }

    pub fn rho(&self) -> &ComplexMatrix {
        &self.rho
    }

    pub fn logical_dim(&self) -> usize {
        self.logical_dim
    }

    pub fn junk_dim(&self) -> usize {
        self.junk_dim
    }

    pub fn logical(&self) -> ComplexMatrix {
        partial_trace_second(&self.rho, self.logical_dim, self.junk_dim)
    }

    pub fn junk(&self) -> ComplexMatrix {
        partial_trace_first(&self.rho, self.logical_dim, self.junk_dim)
    }

    fn from_unnormalized(rho: ComplexMatrix, logical_dim: usize, junk_dim: usize) -> (Self, f64) {
        let tr = trace(&rho).re;
        let rho = hermitian_part(&rho.unscale(tr));
        (MixedVirtualState { rho, logical_dim, junk_dim }, tr)
    }
}

fn junk_channel(t: &MPSTensor) -> Result<Channel> {
    t.require_factorization()?;
    Ok(transfer_channels(t).1.expect("factorized tensor has a junk channel"))
}

fn junk_fixed_point(t: &MPSTensor) -> Result<FixedPointData> {
    fixed_point_data(&junk_channel(t)?)
}

/// Byproduct-corrected Kraus operators `Gamma_s = (C^{l(s)} (x) I)^dag A[s]`,
/// assembled from `C^{l dag} C^i (x) B^i` with `C^{l dag} C^l = I` exactly.
pub fn corrected_kraus(t: &MPSTensor, basis: &MeasurementBasis) -> Result<Vec<ComplexMatrix>> {
    let f = t.require_factorization()?;
    if basis.dim() != t.phys_dim() {
        return Err(Error::InvalidInput(format!("basis dimension {} differs from d = {}", basis.dim(), t.phys_dim())));
    }
    let n = t.bond_dim();
    let id = identity(t.logical_dim());
    Ok((0..basis.dim())
        .map(|s| {
            let l = basis.labels[s];
            let cl = f.logical[l].adjoint();
            let mut g = ComplexMatrix::zeros(n, n);
            for (k, z) in basis.vectors[s].iter().enumerate() {
                if *z == c(0.0, 0.0) {
                    continue;
                }
                let logical = if k == l { id.clone() } else { &cl * &f.logical[k] };
                g += kron(&logical, &f.junk[k]) * z.conj();
            }
            g
        })
        .collect())
}

fn apply_kraus(rho: &ComplexMatrix, kraus: &[ComplexMatrix]) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(rho.nrows(), rho.ncols());
    for k in kraus {
        out += k * rho * k.adjoint();
    }
    out
}

/// `sigma <- sum_s Gamma_s sigma Gamma_s^dag`, renormalized. Returns the new
/// state and the trace before normalization.
pub fn sum_over_outcomes_step(
    sigma: &MixedVirtualState,
    basis: &MeasurementBasis,
    t: &MPSTensor,
) -> Result<(MixedVirtualState, f64)> {
    let kraus = corrected_kraus(t, basis)?;
    let out = apply_kraus(&sigma.rho, &kraus);
    Ok(MixedVirtualState::from_unnormalized(out, sigma.logical_dim, sigma.junk_dim))
}

fn wire_kraus(t: &MPSTensor) -> Result<Vec<ComplexMatrix>> {
    let f = t.require_factorization()?;
    let id = identity(t.logical_dim());
    Ok(f.junk.iter().map(|b| kron(&id, b)).collect())
}

/// `m` wire-basis steps: `I (x) E~^m`.
pub fn pump_fixed_point(sigma: &MixedVirtualState, t: &MPSTensor, m: usize) -> Result<MixedVirtualState> {
    let kraus = wire_kraus(t)?;
    let mut s = sigma.clone();
    for _ in 0..m {
        let out = apply_kraus(&s.rho, &kraus);
        s = MixedVirtualState::from_unnormalized(out, s.logical_dim, s.junk_dim).0;
    }
    Ok(s)
}

/// Calibration constants `nu_ij`.
#[derive(Clone, Debug, PartialEq)]
pub struct NuMatrix {
    pub nu: ComplexMatrix,
}

impl NuMatrix {
    pub fn dim(&self) -> usize {
        self.nu.nrows()
    }

    /// `nu = sum_i nu_ii`.
    pub fn scalar(&self) -> f64 {
        (0..self.dim()).map(|i| self.nu[(i, i)].re).sum()
    }

    pub fn modulus(&self, i: usize, j: usize) -> f64 {
        self.nu[(i, j)].norm()
    }

    /// `delta_ij`.
    pub fn phase(&self, i: usize, j: usize) -> f64 {
        self.nu[(i, j)].arg()
    }

    /// `|nu_ij| / nu`.
    pub fn ratio(&self, i: usize, j: usize) -> f64 {
        self.modulus(i, j) / self.scalar()
    }

    pub fn is_dead(&self, i: usize, j: usize) -> bool {
        self.modulus(i, j) < NU_FLOOR
    }

    /// Off-diagonal pairs `i < j` below the floor.
    pub fn dead_pairs(&self) -> Vec<(usize, usize)> {
        let d = self.dim();
        (0..d).flat_map(|i| ((i + 1)..d).map(move |j| (i, j))).filter(|&(i, j)| self.is_dead(i, j)).collect()
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        frobenius(&(&self.nu - self.nu.adjoint()))
    }

    pub fn check_live(&self, i: usize, j: usize) -> Result<()> {
        if i >= self.dim() || j >= self.dim() || i == j {
            return Err(Error::IndexOutOfRange(format!("pair ({i},{j}) invalid for d = {}", self.dim())));
        }
        if self.is_dead(i, j) {
            return Err(Error::DeadDirection { i, j, modulus: self.modulus(i, j) });
        }
        Ok(())
    }

    /// Header `i,j,re,im,modulus,phase,ratio,dead` and one record per entry.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("i,j,re,im,modulus,phase,ratio,dead\n");
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                let z = self.nu[(i, j)];
                s.push_str(&format!(
                    "{i},{j},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{}\n",
                    z.re,
                    z.im,
                    z.norm(),
                    z.arg(),
                    self.ratio(i, j),
                    i != j && self.is_dead(i, j)
                ));
            }
        }
        s
    }
}

/// `nu_ij = Tr(Lambda~ B^i rho_fix B^{j dag})`.
pub fn calibrate_nu(t: &MPSTensor) -> Result<NuMatrix> {
    let f = t.require_factorization()?;
    let fp = junk_fixed_point(t)?;
    Ok(NuMatrix { nu: nu_spectral(&f.junk, &fp) })
}

/// Cross-check of [`calibrate_nu`] by iterating the junk channel `m` times on
/// `B^i rho_fix B^{j dag}` and projecting onto `rho_fix`.
pub fn calibrate_nu_iterative(t: &MPSTensor, m: usize) -> Result<NuMatrix> {
    let f = t.require_factorization()?;
    let ch = junk_channel(t)?;
    let fp = fixed_point_data(&ch)?;
    let d = t.phys_dim();
    let rr = trace(&(&fp.rho_fix * &fp.rho_fix)).re;
    let nu = ComplexMatrix::from_fn(d, d, |i, j| {
        let x = &f.junk[i] * &fp.rho_fix * f.junk[j].adjoint();
        let y = ch.apply_power(&x, m);
        trace(&(&fp.rho_fix * y)) / rr
    });
    Ok(NuMatrix { nu })
}

/// `M = C^{i dag} C^j`.
pub fn pair_operator(t: &MPSTensor, i: usize, j: usize) -> Result<ComplexMatrix> {
    let f = t.require_factorization()?;
    if i >= t.phys_dim() || j >= t.phys_dim() {
        return Err(Error::IndexOutOfRange(format!("pair ({i},{j}) invalid for d = {}", t.phys_dim())));
    }
    Ok(f.logical[i].adjoint() * &f.logical[j])
}

/// First-order gate of one tilted step with amplitude `dtheta` and phase `phi`.
pub fn predicted_gate(t: &MPSTensor, i: usize, j: usize, dtheta: f64, phi: f64, nu: &NuMatrix) -> Result<ComplexMatrix> {
    nu.check_live(i, j)?;
    let m = pair_operator(t, i, j)?;
    let e = C64::from_polar(1.0, -(phi + nu.phase(i, j)));
    let gen = (&m * e - m.adjoint() * e.conj()) * c(dtheta * nu.ratio(i, j), 0.0);
    Ok(expm(&gen))
}

/// `K(phi) = (e^{i phi} M - e^{-i phi} M^dag) / 2`.
pub fn target_generator(t: &MPSTensor, i: usize, j: usize, phi: f64) -> Result<ComplexMatrix> {
    let m = pair_operator(t, i, j)?;
    let e = C64::from_polar(1.0, phi);
    Ok((&m * e - m.adjoint() * e.conj()) * c(0.5, 0.0))
}

/// `U(theta) = exp(theta K(phi) / 2)`. For AKLT, pair `(x, y)` with
/// `phi = pi` gives `exp(-i theta sigma_z / 2)`.
pub fn target_unitary(t: &MPSTensor, i: usize, j: usize, phi: f64, theta: f64) -> Result<ComplexMatrix> {
    Ok(expm(&(target_generator(t, i, j, phi)? * c(theta / 2.0, 0.0))))
}

/// One tilted step followed by `m` pumping steps, compared with the
/// first-order prediction `T sigma_0 T^dag (x) rho_fix`.
pub fn execute_and_compare(
    sigma0: &ComplexMatrix,
    t: &MPSTensor,
    i: usize,
    j: usize,
    dtheta: f64,
    phi: f64,
    m: usize,
) -> Result<(MixedVirtualState, f64)> {
    let nu = calibrate_nu(t)?;
    let fp = junk_fixed_point(t)?;
    let start = MixedVirtualState::product(sigma0, &fp.rho_fix)?;
    let basis = MeasurementBasis::tilted(t.phys_dim(), i, j, dtheta, phi)?;
    let (s1, _) = sum_over_outcomes_step(&start, &basis, t)?;
    let out = pump_fixed_point(&s1, t, m)?;
    let gate = predicted_gate(t, i, j, dtheta, phi, &nu)?;
    let ideal = kron(&(&gate * sigma0 * gate.adjoint()), &fp.rho_fix);
    let residual = trace_distance(out.rho(), &ideal);
    Ok((out, residual))
}

/// Rotation target of a program.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotationTarget {
    pub i: usize,
    pub j: usize,
    pub phi: f64,
    pub theta: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProgramStep {
    pub basis: MeasurementBasis,
    pub pump: usize,
}

/// Sequence of tilted measurements, each followed by `pump` wire steps.
#[derive(Clone, Debug, PartialEq)]
pub struct GateProgram {
    pub steps: Vec<ProgramStep>,
    pub target: RotationTarget,
    pub n_steps: usize,
    pub pump_length: usize,
    /// Physical angle per step in the `B(z, theta)` convention; the basis is
    /// rotated by half of it.
    pub physical_angle: f64,
    pub basis_phase: f64,
    pub predicted_cost: usize,
}

/// `ceil(max(2 xi~ ln N, 1))`, or zero for a scalar junk space.
pub fn pump_length_for(t: &MPSTensor, n: usize) -> Result<usize> {
    if t.junk_dim() == 1 {
        return Ok(0);
    }
    let fp = junk_fixed_point(t)?;
    Ok((2.0 * fp.xi * (n as f64).ln()).max(1.0).ceil() as usize)
}

/// Program with exactly `n` steps and pump length `m`.
#[allow(clippy::too_many_arguments)]
pub fn uniform_program(
    t: &MPSTensor,
    nu: &NuMatrix,
    i: usize,
    j: usize,
    phi: f64,
    theta: f64,
    n: usize,
    m: usize,
) -> Result<GateProgram> {
    nu.check_live(i, j)?;
    if n == 0 {
        return Err(Error::InvalidInput("program needs at least one step".into()));
    }
    let physical_angle = (theta / n as f64) / (2.0 * nu.ratio(i, j));
    let basis_phase = -phi - nu.phase(i, j);
    let basis = MeasurementBasis::rotation(t.phys_dim(), i, j, physical_angle / 2.0, basis_phase)?;
    let steps = vec![ProgramStep { basis, pump: m }; n];
    Ok(GateProgram {
        steps,
        target: RotationTarget { i, j, phi, theta },
        n_steps: n,
        pump_length: m,
        physical_angle,
        basis_phase,
        predicted_cost: n * (m + 1),
    })
}

/// Compile `exp(theta K(phi)/2)` to error budget `epsilon`:
/// `N = ceil(max(w theta^2/epsilon, |theta|/0.05))` with
/// `w = max(1, (1/3 / (|nu_ij|/nu))^2)`, raised further while the per-step
/// physical angle exceeds 0.05; pump length from [`pump_length_for`].
///
/// The second-order error per step grows with the physical angle, which is
/// `1/(2 |nu_ij|/nu)` times the logical one, so weak directions need
/// proportionally more steps.
pub fn compile_rotation(
    t: &MPSTensor,
    nu: &NuMatrix,
    i: usize,
    j: usize,
    phi: f64,
    theta: f64,
    epsilon: f64,
) -> Result<GateProgram> {
    nu.check_live(i, j)?;
    if !(epsilon > 0.0) || !theta.is_finite() {
        return Err(Error::InvalidInput("need epsilon > 0 and finite theta".into()));
    }
    let a = theta.abs();
    let weak = (REFERENCE_RATIO / nu.ratio(i, j)).powi(2).max(1.0);
    let mut n = ((a * a * weak / epsilon).max(a / MAX_STEP_ANGLE)).ceil().max(1.0) as usize;
    let per_unit = 1.0 / (2.0 * nu.ratio(i, j));
    let cap = (a * per_unit / MAX_STEP_ANGLE).ceil() as usize;
    n = n.max(cap).max(1);
    let m = pump_length_for(t, n)?;
    uniform_program(t, nu, i, j, phi, theta, n, m)
}

/// Run every step exactly, starting from `logical (x) rho_fix`.
pub fn run_program(p: &GateProgram, logical: &ComplexMatrix, t: &MPSTensor) -> Result<MixedVirtualState> {
    let start = MixedVirtualState::with_fixed_junk(logical, t)?;
    run_program_from(p, &start, t).map(|(s, _)| s)
}

/// Run from an arbitrary virtual state; also returns the pre-normalization
/// trace of every measurement.
pub fn run_program_from(p: &GateProgram, start: &MixedVirtualState, t: &MPSTensor) -> Result<(MixedVirtualState, Vec<f64>)> {
    let wire = wire_kraus(t)?;
    let mut cache: Option<(&MeasurementBasis, Vec<ComplexMatrix>)> = None;
    let mut s = start.clone();
    let mut traces = Vec::with_capacity(p.steps.len());
    for step in &p.steps {
        let reuse = matches!(&cache, Some((b, _)) if *b == &step.basis);
        if !reuse {
            cache = Some((&step.basis, corrected_kraus(t, &step.basis)?));
        }
        let kraus = &cache.as_ref().expect("filled").1;
        let (next, tr) = MixedVirtualState::from_unnormalized(apply_kraus(&s.rho, kraus), s.logical_dim, s.junk_dim);
        traces.push(tr);
        s = next;
        for _ in 0..step.pump {
            let out = apply_kraus(&s.rho, &wire);
            s = MixedVirtualState::from_unnormalized(out, s.logical_dim, s.junk_dim).0;
        }
    }
    Ok((s, traces))
}

/// Linear (unnormalized) evolution of an operator on virtual space.
fn run_linear(p: &GateProgram, x: &ComplexMatrix, t: &MPSTensor) -> Result<ComplexMatrix> {
    let wire = wire_kraus(t)?;
    let mut cache: Option<(&MeasurementBasis, Vec<ComplexMatrix>)> = None;
    let mut s = x.clone();
    for step in &p.steps {
        if !matches!(&cache, Some((b, _)) if *b == &step.basis) {
            cache = Some((&step.basis, corrected_kraus(t, &step.basis)?));
        }
        s = apply_kraus(&s, &cache.as_ref().expect("filled").1);
        for _ in 0..step.pump {
            s = apply_kraus(&s, &wire);
        }
    }
    Ok(s)
}

/// Logical channel of a program with the junk started at `rho_fix`, as a
/// Choi matrix `sum_kl E_kl (x) Phi(E_kl)`.
pub fn logical_choi(p: &GateProgram, t: &MPSTensor) -> Result<ComplexMatrix> {
    let fp = junk_fixed_point(t)?;
    let dl = t.logical_dim();
    let kappa = t.junk_dim();
    let mut choi = ComplexMatrix::zeros(dl * dl, dl * dl);
    for k in 0..dl {
        for l in 0..dl {
            let mut e = ComplexMatrix::zeros(dl, dl);
            e[(k, l)] = c(1.0, 0.0);
            let out = partial_trace_second(&run_linear(p, &kron(&e, &fp.rho_fix), t)?, dl, kappa);
            choi += kron(&e, &out);
        }
    }
    Ok(choi)
}

/// Unitary closest to the dominant Kraus operator of a Choi matrix, with the
/// global phase chosen so that `Tr U` is real and positive.
pub fn dominant_unitary(choi: &ComplexMatrix, dl: usize) -> ComplexMatrix {
    let eig = SymmetricEigen::new(hermitian_part(choi));
    let (k, _) = eig.eigenvalues.iter().enumerate().fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let v = eig.eigenvectors.column(k);
    let u = ComplexMatrix::from_fn(dl, dl, |a, kk| v[kk * dl + a]);
    let svd = u.svd(true, true);
    let w = svd.u.expect("u") * svd.v_t.expect("v_t");
    let tr = trace(&w);
    if tr.norm() > 1e-14 {
        w * (tr.conj() / tr.norm())
    } else {
        w
    }
}

/// Operational estimate of `nu_ji / nu` from the realized logical rotation.
#[derive(Clone, Debug)]
pub struct OperationalNu {
    pub i: usize,
    pub j: usize,
    /// Estimated `nu_ji / nu`.
    pub estimate: C64,
    /// Spectral `|nu_ij| / nu`.
    pub spectral_ratio: f64,
    /// `| |estimate| - spectral | / spectral`.
    pub relative_error: f64,
}

/// Run `steps` tilted measurements of amplitude `amp` at basis phases 0 and
/// `pi/2`, extract the logical generators `L_0`, `L_90` and solve
/// `nu_ji / nu = Tr(M^dag (L_0 + i L_90)) / (2 steps amp D)`.
pub fn operational_nu(t: &MPSTensor, i: usize, j: usize, steps: usize, amp: f64) -> Result<OperationalNu> {
    let nu = calibrate_nu(t)?;
    nu.check_live(i, j)?;
    if steps == 0 || !(amp > 0.0 && amp < 0.5) {
        return Err(Error::InvalidInput("need steps >= 1 and 0 < amp < 0.5".into()));
    }
    let m = pump_length_for(t, steps)?.max(if t.junk_dim() > 1 { pump_length_for(t, steps * steps)? } else { 0 });
    let dl = t.logical_dim();
    let angle = 0.5 * (2.0 * amp).asin();
    let mut gens = Vec::with_capacity(2);
    for phase in [0.0, PI / 2.0] {
        let basis = MeasurementBasis::rotation(t.phys_dim(), i, j, angle, phase)?;
        let p = GateProgram {
            steps: vec![ProgramStep { basis, pump: m }; steps],
            target: RotationTarget { i, j, phi: 0.0, theta: 0.0 },
            n_steps: steps,
            pump_length: m,
            physical_angle: 2.0 * angle,
            basis_phase: phase,
            predicted_cost: steps * (m + 1),
        };
        let u = dominant_unitary(&logical_choi(&p, t)?, dl);
        gens.push(log_unitary(&u));
    }
    let mop = pair_operator(t, i, j)?;
    let comb = &gens[0] + &gens[1] * c(0.0, 1.0);
    let estimate = trace(&(mop.adjoint() * comb)) / c(2.0 * steps as f64 * amp * dl as f64, 0.0);
    let spectral_ratio = nu.ratio(i, j);
    Ok(OperationalNu { i, j, estimate, spectral_ratio, relative_error: (estimate.norm() - spectral_ratio).abs() / spectral_ratio })
}

/// Probe states used for gate errors: the uniform superposition and a fixed
/// generic state.
pub fn probe_states(dl: usize) -> Vec<ComplexMatrix> {
    let uniform: Vec<C64> = vec![c(1.0, 0.0); dl];
    let generic: Vec<C64> = (0..dl).map(|k| C64::from_polar(1.0 + 0.3 * k as f64, 0.7 * k as f64 + 0.2)).collect();
    vec![pure_state(&uniform), pure_state(&generic)]
}

/// Max over probe states of the trace distance between the program's
/// logical output and the ideal rotation.
pub fn program_error(p: &GateProgram, t: &MPSTensor) -> Result<f64> {
    let u = target_unitary(t, p.target.i, p.target.j, p.target.phi, p.target.theta)?;
    let mut worst = 0.0f64;
    for rho in probe_states(t.logical_dim()) {
        let out = run_program(p, &rho, t)?.logical();
        worst = worst.max(trace_distance(&out, &(&u * &rho * u.adjoint())));
    }
    Ok(worst)
}

/// Outcome statistics of sampled trajectories.
#[derive(Clone, Debug)]
pub struct TrajectoryReport {
    /// Average of normalized, frame-corrected endpoints.
    pub mean: MixedVirtualState,
    pub shots: usize,
    /// `counts[step][outcome]`, over every measured site including pumps.
    pub counts: Vec<Vec<u64>>,
    /// Per-shot outcome strings, when requested.
    pub outcome_log: Option<Vec<Vec<u16>>>,
    /// Logical observables `Re/Im Tr(W rho)` over non-identity Weyl operators `W`.
    pub observable_means: Vec<f64>,
    /// Bootstrap standard deviations of `observable_means`.
    pub observable_sigmas: Vec<f64>,
    /// Logical reduced endpoint of every shot, when requested.
    pub logical_endpoints: Option<Vec<ComplexMatrix>>,
}

#[derive(Clone, Copy, Debug)]
pub struct TrajectoryOptions {
    pub shots: usize,
    pub seed: u64,
    pub keep_log: bool,
    pub keep_endpoints: bool,
    pub bootstrap: usize,
    pub exec: Execution,
}

impl TrajectoryOptions {
    pub fn new(shots: usize, seed: u64) -> Self {
        TrajectoryOptions { shots, seed, keep_log: false, keep_endpoints: false, bootstrap: DEFAULT_BOOTSTRAP, exec: Execution::default() }
    }
}

/// Observables `Re Tr(W rho)`, `Im Tr(W rho)` for `W = X^x Z^z`, `(x,z) != (0,0)`.
pub fn logical_observables(rho: &ComplexMatrix) -> Vec<f64> {
    let d = rho.nrows() as u32;
    let mut out = Vec::with_capacity(2 * (d * d) as usize);
    for x in 0..d {
        for z in 0..d {
            if x == 0 && z == 0 {
                continue;
            }
            let v = trace(&(weyl_matrix(d, x, z) * rho));
            out.push(v.re);
            out.push(v.im);
        }
    }
    out
}

enum LabState {
    /// Lab state `(W (x) I)(logical (x) junk)(W (x) I)^dag`.
    Product { logical: ComplexMatrix, junk: ComplexMatrix },
    Full(ComplexMatrix),
}

struct Shot {
    endpoint: ComplexMatrix,
    logical: ComplexMatrix,
    outcomes: Vec<u16>,
}

fn sample_index(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let total: f64 = probs.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

fn run_shot(p: &GateProgram, start: &(ComplexMatrix, ComplexMatrix), t: &MPSTensor, seed: u64, shot: u64) -> Result<Shot> {
    let f = t.require_factorization()?;
    let sym = t.require_symmetry()?;
    let dl = t.logical_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shot);
    let mut g = sym.group.identity();
    let mut w = identity(dl);
    let mut state = LabState::Product { logical: start.0.clone(), junk: start.1.clone() };
    let mut outcomes = Vec::new();
    let wire = MeasurementBasis::wire(t.phys_dim());
    let measure = |basis: &MeasurementBasis,
                       state: &mut LabState,
                       g: &mut GroupElement,
                       w: &mut ComplexMatrix,
                       rng: &mut ChaCha8Rng|
     -> Result<u16> {
        let s = if basis.is_wire() {
            if let LabState::Product { junk, .. } = state {
                let probs: Vec<f64> = f.junk.iter().map(|b| trace(&(b * &*junk * b.adjoint())).re).collect();
                let s = sample_index(rng, &probs);
                let nj = &f.junk[s] * &*junk * f.junk[s].adjoint();
                *junk = nj.unscale(probs[s]);
                s
            } else {
                measure_full(basis, state, g, t, rng)?
            }
        } else {
            if let LabState::Product { logical, junk } = state {
                let wk = kron(w, &identity(t.junk_dim()));
                *state = LabState::Full(&wk * kron(logical, junk) * wk.adjoint());
            }
            measure_full(basis, state, g, t, rng)?
        };
        let l = basis.labels[s];
        *g = sym.group.add(g, &sym.elements[l]);
        *w = &*w * &f.logical[l];
        Ok(s as u16)
    };
    for step in &p.steps {
        outcomes.push(measure(&step.basis, &mut state, &mut g, &mut w, &mut rng)?);
        for _ in 0..step.pump {
            outcomes.push(measure(&wire, &mut state, &mut g, &mut w, &mut rng)?);
        }
    }
    let (endpoint, logical) = match state {
        LabState::Product { logical, junk } => (kron(&logical, &junk), logical),
        LabState::Full(rho) => {
            let wk = kron(&w, &identity(t.junk_dim()));
            let e = hermitian_part(&(wk.adjoint() * rho * wk));
            let l = partial_trace_second(&e, dl, t.junk_dim());
            (e, l)
        }
    };
    Ok(Shot { endpoint, logical, outcomes })
}

fn measure_full(basis: &MeasurementBasis, state: &mut LabState, g: &GroupElement, t: &MPSTensor, rng: &mut ChaCha8Rng) -> Result<usize> {
    let LabState::Full(rho) = state else { unreachable!("full state expected") };
    let lab = basis.adapted(t, g)?;
    let ops: Vec<ComplexMatrix> = (0..lab.dim()).map(|s| lab.readout_operator(t, s)).collect();
    let outs: Vec<ComplexMatrix> = ops.iter().map(|a| a * &*rho * a.adjoint()).collect();
    let probs: Vec<f64> = outs.iter().map(|o| trace(o).re.max(0.0)).collect();
    let s = sample_index(rng, &probs);
    *rho = hermitian_part(&outs[s].unscale(probs[s]));
    Ok(s)
}

/// Monte-Carlo sampling of outcome strings with Born probabilities. The
/// byproduct frame is tracked as a group element and resolved by adapting
/// later bases; endpoints are mapped back to the corrected frame.
pub fn sample_trajectories(
    p: &GateProgram,
    logical: &ComplexMatrix,
    t: &MPSTensor,
    opts: &TrajectoryOptions,
) -> Result<TrajectoryReport> {
    if opts.shots == 0 {
        return Err(Error::InvalidInput("need at least one shot".into()));
    }
    t.require_symmetry()?;
    let fp = junk_fixed_point(t)?;
    let start = (logical.clone(), fp.rho_fix.clone());
    MixedVirtualState::product(&start.0, &start.1)?;
    let shots: Vec<Result<Shot>> = exec::map_range(opts.exec, opts.shots, |k| run_shot(p, &start, t, opts.seed, k as u64));
    let shots: Vec<Shot> = shots.into_iter().collect::<Result<_>>()?;
    let n = t.bond_dim();
    let mut sum = ComplexMatrix::zeros(n, n);
    for s in &shots {
        sum += &s.endpoint;
    }
    let mean = MixedVirtualState::from_unnormalized(sum, t.logical_dim(), t.junk_dim()).0;
    let len = shots[0].outcomes.len();
    let mut counts = vec![vec![0u64; t.phys_dim()]; len];
    for s in &shots {
        for (k, &o) in s.outcomes.iter().enumerate() {
            counts[k][o as usize] += 1;
        }
    }
    let logicals: Vec<ComplexMatrix> = shots.iter().map(|s| s.logical.clone()).collect();
    let obs: Vec<Vec<f64>> = logicals.iter().map(logical_observables).collect();
    let k = obs[0].len();
    let means: Vec<f64> = (0..k).map(|q| obs.iter().map(|o| o[q]).sum::<f64>() / obs.len() as f64).collect();
    let sigmas = bootstrap_sigmas(&obs, opts.bootstrap, opts.seed ^ 0x9e37_79b9_7f4a_7c15);
    Ok(TrajectoryReport {
        mean,
        shots: opts.shots,
        counts,
        outcome_log: opts.keep_log.then(|| shots.iter().map(|s| s.outcomes.clone()).collect()),
        observable_means: means,
        observable_sigmas: sigmas,
        logical_endpoints: opts.keep_endpoints.then_some(logicals),
    })
}

/// Standard deviation of the sample mean of each column over `b` bootstrap
/// resamples.
pub fn bootstrap_sigmas(samples: &[Vec<f64>], b: usize, seed: u64) -> Vec<f64> {
    let n = samples.len();
    let k = samples.first().map(|v| v.len()).unwrap_or(0);
    if n == 0 || b < 2 {
        return vec![0.0; k];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut boot = vec![vec![0.0; k]; b];
    for row in boot.iter_mut() {
        for _ in 0..n {
            let s = &samples[rng.random_range(0..n)];
            for q in 0..k {
                row[q] += s[q];
            }
        }
        for v in row.iter_mut() {
            *v /= n as f64;
        }
    }
    (0..k)
        .map(|q| {
            let mu = boot.iter().map(|r| r[q]).sum::<f64>() / b as f64;
            (boot.iter().map(|r| (r[q] - mu).powi(2)).sum::<f64>() / (b - 1) as f64).sqrt()
        })
        .collect()
}

/// `p(o) = Tr[(I (x) Lambda~)(I (x) E~^k)(A[o] sigma A[o]^dag)]`.
pub fn readout_probabilities(sigma: &MixedVirtualState, basis: &MeasurementBasis, t: &MPSTensor, k: usize) -> Result<Vec<f64>> {
    let fp = junk_fixed_point(t)?;
    readout_with_boundary(sigma, basis, t, k, &fp.lambda_tilde, false)
}

/// Readout against a finite junk boundary `R~` instead of `Lambda~`,
/// renormalized to sum to one. Converges to [`readout_probabilities`] as
/// `c lambda1^k`.
pub fn readout_probabilities_boundary(
    sigma: &MixedVirtualState,
    basis: &MeasurementBasis,
    t: &MPSTensor,
    k: usize,
    boundary: &ComplexMatrix,
) -> Result<Vec<f64>> {
    readout_with_boundary(sigma, basis, t, k, boundary, true)
}

fn readout_with_boundary(
    sigma: &MixedVirtualState,
    basis: &MeasurementBasis,
    t: &MPSTensor,
    k: usize,
    boundary: &ComplexMatrix,
    renormalize: bool,
) -> Result<Vec<f64>> {
    if basis.dim() != t.phys_dim() {
        return Err(Error::InvalidInput("basis dimension differs from d".into()));
    }
    if boundary.shape() != (t.junk_dim(), t.junk_dim()) {
        return Err(Error::InvalidInput("boundary must act on the junk space".into()));
    }
    let wire = wire_kraus(t)?;
    let obs = kron(&identity(t.logical_dim()), boundary);
    let mut probs: Vec<f64> = (0..basis.dim())
        .map(|s| {
            let a = basis.readout_operator(t, s);
            let mut x = &a * sigma.rho() * a.adjoint();
            for _ in 0..k {
                x = apply_kraus(&x, &wire);
            }
            trace(&(&obs * x)).re
        })
        .collect();
    if renormalize {
        let total: f64 = probs.iter().sum();
        if total.abs() < 1e-300 {
            return Err(Error::InvalidInput("boundary gives zero total weight".into()));
        }
        probs.iter_mut().for_each(|p| *p /= total);
    }
    Ok(probs)
}

/// `sigma -> (V(g) (x) I) sigma (V(g) (x) I)^dag`, with `V(g)` built from
/// the tensor's own logical operators along the word `labels`.
pub fn apply_byproduct_word(sigma: &MixedVirtualState, t: &MPSTensor, labels: &[usize]) -> Result<(MixedVirtualState, GroupElement)> {
    let f = t.require_factorization()?;
    let sym = t.require_symmetry()?;
    let mut w = identity(t.logical_dim());
    let mut g = sym.group.identity();
    for &l in labels {
        if l >= t.phys_dim() {
            return Err(Error::IndexOutOfRange(format!("label {l} >= d")));
        }
        w = &w * &f.logical[l];
        g = sym.group.add(&g, &sym.elements[l]);
    }
    let wk = kron(&w, &identity(t.junk_dim()));
    let rho = &wk * sigma.rho() * wk.adjoint();
    Ok((MixedVirtualState { rho, logical_dim: sigma.logical_dim, junk_dim: sigma.junk_dim }, g))
}

/// One cell of an error scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub n: usize,
    pub m: usize,
    pub physical_angle: f64,
    pub cost: usize,
    pub error: f64,
}

/// Least-squares line `y = slope x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Logical error of the `(N, m)` program grid, one cell per pair, cells
/// evaluated with `exec`.
#[allow(clippy::too_many_arguments)]
pub fn error_scan(
    t: &MPSTensor,
    i: usize,
    j: usize,
    phi: f64,
    theta: f64,
    n_list: &[usize],
    m_list: &[usize],
    exec: Execution,
) -> Result<Vec<ScanRow>> {
    if n_list.is_empty() || m_list.is_empty() {
        return Err(Error::InvalidInput("error scan needs nonempty N and m lists".into()));
    }
    let nu = calibrate_nu(t)?;
    nu.check_live(i, j)?;
    let cells: Vec<(usize, usize)> = n_list.iter().flat_map(|&n| m_list.iter().map(move |&m| (n, m))).collect();
    let rows = exec::map(exec, &cells, |&(n, m)| -> Result<ScanRow> {
        let p = uniform_program(t, &nu, i, j, phi, theta, n, m)?;
        let error = program_error(&p, t)?;
        Ok(ScanRow { n, m, physical_angle: p.physical_angle, cost: p.predicted_cost, error })
    });
    rows.into_iter().collect()
}

/// Slope of `ln(error)` against `ln(N)` for each `m` with at least two `N`.
pub fn scan_n_slopes(rows: &[ScanRow]) -> Vec<(usize, f64)> {
    let mut ms: Vec<usize> = rows.iter().map(|r| r.m).collect();
    ms.sort_unstable();
    ms.dedup();
    ms.into_iter()
        .filter_map(|m| {
            let sel: Vec<&ScanRow> = rows.iter().filter(|r| r.m == m && r.error > 0.0).collect();
            (sel.len() >= 2).then(|| {
                let xs: Vec<f64> = sel.iter().map(|r| (r.n as f64).ln()).collect();
                let ys: Vec<f64> = sel.iter().map(|r| r.error.ln()).collect();
                (m, linear_fit(&xs, &ys).0)
            })
        })
        .collect()
}

/// Slope of `ln(error)` against `m` for each `N` with at least two `m`.
pub fn scan_m_slopes(rows: &[ScanRow]) -> Vec<(usize, f64)> {
    let mut ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
    ns.sort_unstable();
    ns.dedup();
    ns.into_iter()
        .filter_map(|n| {
            let sel: Vec<&ScanRow> = rows.iter().filter(|r| r.n == n && r.error > 0.0).collect();
            (sel.len() >= 2).then(|| {
                let xs: Vec<f64> = sel.iter().map(|r| r.m as f64).collect();
                let ys: Vec<f64> = sel.iter().map(|r| r.error.ln()).collect();
                (n, linear_fit(&xs, &ys).0)
            })
        })
        .collect()
}

/// CSV with header `N,m,physical_angle,cost,error` and `#`-prefixed footer
/// lines carrying the fitted slopes.
pub fn scan_to_csv(rows: &[ScanRow]) -> String {
    let mut s = String::from("N,m,physical_angle,cost,error\n");
    for r in rows {
        s.push_str(&format!("{},{},{:.17e},{},{:.17e}\n", r.n, r.m, r.physical_angle, r.cost, r.error));
    }
    for (m, slope) in scan_n_slopes(rows) {
        s.push_str(&format!("# slope d ln(error) / d ln(N) at m={m}: {slope:.6}\n"));
    }
    for (n, slope) in scan_m_slopes(rows) {
        s.push_str(&format!("# slope d ln(error) / d m at N={n}: {slope:.6}\n"));
    }
    s
}

/// Junk-state trace distance to `rho_fix` after `m` wire steps from `junk0`,
/// for each `m` in `ms`.
pub fn pumping_errors(t: &MPSTensor, junk0: &ComplexMatrix, ms: &[usize]) -> Result<Vec<f64>> {
    let ch = junk_channel(t)?;
    let fp = fixed_point_data(&ch)?;
    let mut cur = junk0.clone();
    let mut at = 0usize;
    let mut sorted: Vec<(usize, usize)> = ms.iter().copied().enumerate().map(|(k, m)| (m, k)).collect();
    sorted.sort_unstable();
    let mut res = vec![0.0; ms.len()];
    for (m, k) in sorted {
        while at < m {
            cur = ch.apply(&cur);
            at += 1;
        }
        res[k] = trace_distance(&cur, &fp.rho_fix);
    }
    Ok(res)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StepDoc {
    /// Rows are the basis vectors.
    basis: MatrixDoc,
    labels: Vec<usize>,
    pump: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProgramDoc {
    header: Header,
    target: RotationTarget,
    n_steps: usize,
    pump_length: usize,
    physical_angle: f64,
    basis_phase: f64,
    predicted_cost: usize,
    steps: Vec<StepDoc>,
}

const PROGRAM_KIND: &str = "program";

impl GateProgram {
    pub fn to_json(&self) -> Result<String> {
        let steps = self
            .steps
            .iter()
            .map(|s| {
                let d = s.basis.dim();
                let m = ComplexMatrix::from_fn(d, d, |r, col| s.basis.vectors[r][col]);
                StepDoc { basis: MatrixDoc::from(&m), labels: s.basis.labels.clone(), pump: s.pump }
            })
            .collect();
        let doc = ProgramDoc {
            header: Header::new(PROGRAM_KIND),
            target: self.target.clone(),
            n_steps: self.n_steps,
            pump_length: self.pump_length,
            physical_angle: self.physical_angle,
            basis_phase: self.basis_phase,
            predicted_cost: self.predicted_cost,
            steps,
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: ProgramDoc = serde_json::from_str(s)?;
        doc.header.check(PROGRAM_KIND)?;
        let steps = doc
            .steps
            .into_iter()
            .map(|sd| {
                let m = sd.basis.to_matrix()?;
                let vectors = (0..m.nrows()).map(|r| m.row(r).transpose()).collect();
                Ok(ProgramStep { basis: MeasurementBasis::new(vectors, sd.labels)?, pump: sd.pump })
            })
            .collect::<Result<Vec<_>>>()?;
        if steps.len() != doc.n_steps || doc.predicted_cost != doc.n_steps * (doc.pump_length + 1) {
            return Err(Error::Schema("program step count or cost is inconsistent".into()));
        }
        Ok(GateProgram {
            steps,
            target: doc.target,
            n_steps: doc.n_steps,
            pump_length: doc.pump_length,
            physical_angle: doc.physical_angle,
            basis_phase: doc.basis_phase,
            predicted_cost: doc.predicted_cost,
        })
    }
}
