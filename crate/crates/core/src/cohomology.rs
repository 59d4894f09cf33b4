//! Finite abelian groups, linear characters, factor systems stored as exact
//! rational phases, and the Heisenberg-Weyl projective irreps of maximally
//! non-commutative cocycles.
//!
//! Groups are products of cyclic factors `Z_{n_1} x ... x Z_{n_k}`. Elements
//! are exponent vectors; element and character enumerations are
//! lexicographic with the first factor most significant.
//!
//! Clock and shift conventions: `Z = diag(1, w, ..., w^{q-1})` and
//! `X |k> = |k-1>` with `w = exp(2 pi i / q)`, so that `XZ = w ZX`. The
//! standard cocycle on `Z_q x Z_q` is `omega((a,b),(c,d)) = w^{bc}`, realized
//! by `V((a,b)) = Z^a X^b`.

use std::fmt;

use num_integer::Integer;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::algebra::{c, ComplexMatrix, C64};
use crate::error::{Error, Result};

/// Unit-modulus complex number `exp(2 pi i * value)` with `value` an exact
/// rational in `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Phase(Ratio<i64>);

impl Phase {
    pub fn zero() -> Self {
        Phase(Ratio::from_integer(0))
    }

    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "phase denominator must be nonzero");
        Phase(Self::reduce(Ratio::new(num, den)))
    }

    fn reduce(r: Ratio<i64>) -> Ratio<i64> {
        let f = r - r.floor();
        if f < Ratio::from_integer(0) {
            f + 1
        } else {
            f
        }
    }

    pub fn value(&self) -> Ratio<i64> {
        self.0
    }

    pub fn numer(&self) -> i64 {
        *self.0.numer()
    }

    pub fn denom(&self) -> i64 {
        *self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        *self.0.numer() == 0
    }

    pub fn to_complex(&self) -> C64 {
        let t = 2.0 * std::f64::consts::PI * (*self.0.numer() as f64) / (*self.0.denom() as f64);
        C64::from_polar(1.0, t)
    }

    pub fn scale(&self, k: i64) -> Phase {
        Phase(Self::reduce(self.0 * k))
    }

    /// Some `n`-th root.
    pub fn root(&self, n: i64) -> Phase {
        Phase(Self::reduce(self.0 / n))
    }
}

impl std::ops::Add for Phase {
    type Output = Phase;
    fn add(self, o: Phase) -> Phase {
        Phase(Phase::reduce(self.0 + o.0))
    }
}

impl std::ops::Sub for Phase {
    type Output = Phase;
    fn sub(self, o: Phase) -> Phase {
        Phase(Phase::reduce(self.0 - o.0))
    }
}

impl std::ops::Neg for Phase {
    type Output = Phase;
    fn neg(self) -> Phase {
        Phase(Phase::reduce(-self.0))
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numer(), self.denom())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupElement(pub Vec<u32>);

impl GroupElement {
    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, x) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

/// `Z_{n_1} x ... x Z_{n_k}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FiniteAbelianGroup {
    orders: Vec<u32>,
}

impl FiniteAbelianGroup {
    pub fn new(orders: Vec<u32>) -> Result<Self> {
        if orders.is_empty() || orders.iter().any(|&n| n == 0) {
            return Err(Error::InvalidInput(format!("invalid cyclic factor orders {orders:?}")));
        }
        let order: u64 = orders.iter().map(|&n| n as u64).product();
        if order > 10_000 {
            return Err(Error::DimensionTooLarge(format!("group order {order} exceeds 10000")));
        }
        Ok(FiniteAbelianGroup { orders })
    }

    /// `Z_q x Z_q`.
    pub fn weyl(q: u32) -> Self {
        FiniteAbelianGroup { orders: vec![q, q] }
    }

    pub fn orders(&self) -> &[u32] {
        &self.orders
    }

    pub fn rank(&self) -> usize {
        self.orders.len()
    }

    pub fn order(&self) -> usize {
        self.orders.iter().map(|&n| n as usize).product()
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement(vec![0; self.rank()])
    }

    pub fn generator(&self, t: usize) -> GroupElement {
        let mut v = vec![0; self.rank()];
        v[t] = 1 % self.orders[t];
        GroupElement(v)
    }

    pub fn contains(&self, h: &GroupElement) -> bool {
        h.0.len() == self.rank() && h.0.iter().zip(&self.orders).all(|(x, n)| x < n)
    }

    pub fn element(&self, mut index: usize) -> GroupElement {
        let mut v = vec![0; self.rank()];
        for t in (0..self.rank()).rev() {
            let n = self.orders[t] as usize;
            v[t] = (index % n) as u32;
            index /= n;
        }
        GroupElement(v)
    }

    pub fn index_of(&self, h: &GroupElement) -> usize {
        h.0.iter().zip(&self.orders).fold(0usize, |acc, (&x, &n)| acc * n as usize + x as usize)
    }

    pub fn elements(&self) -> Vec<GroupElement> {
        (0..self.order()).map(|i| self.element(i)).collect()
    }

    pub fn add(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        GroupElement(a.0.iter().zip(&b.0).zip(&self.orders).map(|((x, y), n)| (x + y) % n).collect())
    }

    pub fn neg(&self, a: &GroupElement) -> GroupElement {
        GroupElement(a.0.iter().zip(&self.orders).map(|(x, n)| (n - x) % n).collect())
    }

    pub fn sub(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        self.add(a, &self.neg(b))
    }

    pub fn scale(&self, k: u32, a: &GroupElement) -> GroupElement {
        GroupElement(a.0.iter().zip(&self.orders).map(|(x, n)| ((*x as u64 * k as u64) % *n as u64) as u32).collect())
    }

    /// Cyclic factor orders of the pairs `(q_1, q_1, q_2, q_2, ...)`, if the
    /// group is presented that way.
    pub fn pair_orders(&self) -> Option<Vec<u32>> {
        if self.rank() % 2 != 0 {
            return None;
        }
        let pairs: Vec<u32> = self.orders.chunks(2).map(|p| p[0]).collect();
        self.orders.chunks(2).all(|p| p[0] == p[1]).then_some(pairs)
    }

    /// All characters, lexicographic in their exponent vectors.
    pub fn characters(&self) -> Vec<Character> {
        self.elements().into_iter().map(|e| Character { exponents: e.0 }).collect()
    }

    pub fn trivial_character(&self) -> Character {
        Character { exponents: vec![0; self.rank()] }
    }
}

/// Linear character `chi(h) = prod_j exp(2 pi i e_j h_j / n_j)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Character {
    pub exponents: Vec<u32>,
}

impl Character {
    pub fn new(group: &FiniteAbelianGroup, exponents: Vec<u32>) -> Result<Self> {
        if !group.contains(&GroupElement(exponents.clone())) {
            return Err(Error::InvalidInput(format!("character exponents {exponents:?} invalid for {:?}", group.orders())));
        }
        Ok(Character { exponents })
    }

    pub fn phase(&self, group: &FiniteAbelianGroup, h: &GroupElement) -> Phase {
        self.exponents
            .iter()
            .zip(&h.0)
            .zip(group.orders())
            .fold(Phase::zero(), |acc, ((&e, &x), &n)| acc + Phase::new(e as i64 * x as i64, n as i64))
    }

    pub fn value(&self, group: &FiniteAbelianGroup, h: &GroupElement) -> C64 {
        self.phase(group, h).to_complex()
    }

    pub fn mul(&self, group: &FiniteAbelianGroup, other: &Character) -> Character {
        let e = group.add(&GroupElement(self.exponents.clone()), &GroupElement(other.exponents.clone()));
        Character { exponents: e.0 }
    }

    pub fn is_trivial(&self) -> bool {
        self.exponents.iter().all(|&x| x == 0)
    }
}

impl fmt::Display for Character {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "chi{}", GroupElement(self.exponents.clone()))
    }
}

/// Factor system `omega: H x H -> U(1)` as a table of exact phases, row-major
/// in the element enumeration of `H`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cocycle {
    group: FiniteAbelianGroup,
    table: Vec<Phase>,
}

/// Largest group order for which the cocycle condition is checked
/// exhaustively on construction.
pub const EXHAUSTIVE_CHECK_ORDER: usize = 100;

impl Cocycle {
    pub fn new(group: FiniteAbelianGroup, table: Vec<Phase>) -> Result<Self> {
        let n = group.order();
        if table.len() != n * n {
            return Err(Error::InvalidInput(format!("cocycle table has {} entries, expected {}", table.len(), n * n)));
        }
        let cocycle = Cocycle { group, table };
        if n <= EXHAUSTIVE_CHECK_ORDER && !cocycle.satisfies_cocycle_condition() {
            return Err(Error::InvalidInput("table violates the cocycle condition".into()));
        }
        Ok(cocycle)
    }

    fn from_fn(group: FiniteAbelianGroup, f: impl Fn(&GroupElement, &GroupElement) -> Phase) -> Self {
        let els = group.elements();
        let table = els.iter().flat_map(|a| els.iter().map(|b| f(a, b)).collect::<Vec<_>>()).collect();
        Cocycle { group, table }
    }

    pub fn trivial(group: FiniteAbelianGroup) -> Self {
        let n = group.order();
        Cocycle { group, table: vec![Phase::zero(); n * n] }
    }

    /// Product of standard Weyl cocycles over the pairs of a paired group.
    pub fn weyl_product(group: FiniteAbelianGroup) -> Result<Self> {
        let pairs = group.pair_orders().ok_or_else(|| Error::NotSquareForm { orders: group.orders().to_vec() })?;
        Ok(Self::from_fn(group, |x, y| {
            pairs.iter().enumerate().fold(Phase::zero(), |acc, (k, &q)| {
                acc + Phase::new(x.0[2 * k + 1] as i64 * y.0[2 * k] as i64, q as i64)
            })
        }))
    }

    /// Componentwise product on `H1 x H2`.
    pub fn product(a: &Cocycle, b: &Cocycle) -> Cocycle {
        let mut orders = a.group.orders().to_vec();
        orders.extend_from_slice(b.group.orders());
        let group = FiniteAbelianGroup { orders };
        let ra = a.group.rank();
        Self::from_fn(group, |x, y| {
            let (xa, xb) = x.0.split_at(ra);
            let (ya, yb) = y.0.split_at(ra);
            a.value(&GroupElement(xa.to_vec()), &GroupElement(ya.to_vec()))
                + b.value(&GroupElement(xb.to_vec()), &GroupElement(yb.to_vec()))
        })
    }

    pub fn group(&self) -> &FiniteAbelianGroup {
        &self.group
    }

    pub fn table(&self) -> &[Phase] {
        &self.table
    }

    pub fn value(&self, a: &GroupElement, b: &GroupElement) -> Phase {
        let n = self.group.order();
        self.table[self.group.index_of(a) * n + self.group.index_of(b)]
    }

    /// `omega(a,b) / omega(b,a)`: `V(a)V(b) = comm(a,b) V(b)V(a)`.
    pub fn commutation(&self, a: &GroupElement, b: &GroupElement) -> Phase {
        self.value(a, b) - self.value(b, a)
    }

    /// `omega(a,b) omega(a+b,c) = omega(b,c) omega(a,b+c)` for all triples.
    pub fn satisfies_cocycle_condition(&self) -> bool {
        let g = &self.group;
        let els = g.elements();
        for a in &els {
            for b in &els {
                let ab = g.add(a, b);
                let w_ab = self.value(a, b);
                for cc in &els {
                    let lhs = w_ab + self.value(&ab, cc);
                    let rhs = self.value(b, cc) + self.value(a, &g.add(b, cc));
                    if lhs != rhs {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Restriction along the homomorphism `Z_P x Z_P -> H`, `(x,y) -> x g1 + y g2`.
    fn pull_back(&self, sub: &FiniteAbelianGroup, g1: &GroupElement, g2: &GroupElement) -> Cocycle {
        let g = &self.group;
        let embed = |e: &GroupElement| g.add(&g.scale(e.0[0], g1), &g.scale(e.0[1], g2));
        Self::from_fn(sub.clone(), |x, y| self.value(&embed(x), &embed(y)))
    }
}

/// Standard maximally non-commutative cocycle on `Z_d x Z_d`.
pub fn weyl_cocycle(d: u32) -> Result<Cocycle> {
    if d < 2 {
        return Err(Error::InvalidInput("Weyl cocycle needs d >= 2".into()));
    }
    Cocycle::weyl_product(FiniteAbelianGroup::weyl(d))
}

/// Exhaustive scan: the only element commuting (under `omega`) with the whole
/// group is the identity.
pub fn is_maximally_noncommutative(group: &FiniteAbelianGroup, omega: &Cocycle) -> bool {
    if omega.group() != group {
        return false;
    }
    let els = group.elements();
    els.iter().filter(|h| !h.is_identity()).all(|h| els.iter().any(|g| !omega.commutation(h, g).is_zero()))
}

/// Clock matrix `diag(w^{s k})`.
pub fn clock(q: u32, s: u32) -> ComplexMatrix {
    let n = q as usize;
    ComplexMatrix::from_fn(n, n, |i, j| if i == j { Phase::new(s as i64 * i as i64, q as i64).to_complex() } else { c(0.0, 0.0) })
}

/// Shift matrix `X |k> = |k-1>`.
pub fn shift(q: u32) -> ComplexMatrix {
    let n = q as usize;
    ComplexMatrix::from_fn(n, n, |i, j| if (i + 1) % n == j { c(1.0, 0.0) } else { c(0.0, 0.0) })
}

fn matrix_power(m: &ComplexMatrix, k: u32) -> ComplexMatrix {
    (0..k).fold(ComplexMatrix::identity(m.nrows(), m.nrows()), |acc, _| acc * m)
}

/// `X^x Z^z` on `C^d`.
pub fn weyl_matrix(d: u32, x: u32, z: u32) -> ComplexMatrix {
    matrix_power(&shift(d), x % d) * clock(d, z % d)
}

/// Unique projective irrep of a maximally non-commutative cocycle.
#[derive(Clone, Debug)]
pub struct ProjectiveIrrep {
    cocycle: Cocycle,
    dim: usize,
    pair_orders: Vec<u32>,
    multipliers: Vec<u32>,
    matrices: Vec<ComplexMatrix>,
    coboundary: Vec<Phase>,
}

impl ProjectiveIrrep {
    pub fn group(&self) -> &FiniteAbelianGroup {
        self.cocycle.group()
    }

    pub fn cocycle(&self) -> &Cocycle {
        &self.cocycle
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn v(&self, h: &GroupElement) -> &ComplexMatrix {
        &self.matrices[self.group().index_of(h)]
    }

    /// `beta` with `omega = omega_std * d(beta)`, one phase per element, where
    /// `omega_std` is the cocycle of the bare clock-shift products.
    pub fn coboundary(&self) -> &[Phase] {
        &self.coboundary
    }

    /// Clock exponent multiplier `s_k` of each `Z_q x Z_q` pair: the pair is
    /// realized as `Z^{s a} X^b`.
    pub fn multipliers(&self) -> &[u32] {
        &self.multipliers
    }

    pub fn pair_orders(&self) -> &[u32] {
        &self.pair_orders
    }

    /// Weyl label `(x, z)` per pair: `V(h)` is proportional to the tensor
    /// product of `X^x Z^z` factors.
    pub fn weyl_label(&self, h: &GroupElement) -> Vec<(u32, u32)> {
        self.pair_orders
            .iter()
            .enumerate()
            .map(|(k, &q)| (h.0[2 * k + 1], ((h.0[2 * k] as u64 * self.multipliers[k] as u64) % q as u64) as u32))
            .collect()
    }
}

/// Clock-shift realization of the irrep of a maximally non-commutative
/// cocycle on a paired group `Z_{q_1}^2 x ... x Z_{q_k}^2`.
///
/// The commutation form must be block diagonal across pairs. Within pair `k`
/// it is `w^{s_k (b a' - a b')}` for some `s_k` coprime to `q_k`; the pair is
/// then realized by `Z^{s_k a} X^b`, and the remaining symmetric part of
/// `omega` is absorbed into a coboundary `beta`, reported on the irrep.
pub fn projective_irrep(group: &FiniteAbelianGroup, omega: &Cocycle) -> Result<ProjectiveIrrep> {
    if omega.group() != group {
        return Err(Error::InvalidInput("cocycle is defined on a different group".into()));
    }
    if !is_maximally_noncommutative(group, omega) {
        return Err(Error::NotMnc);
    }
    let pairs = group.pair_orders().ok_or_else(|| Error::NotSquareForm { orders: group.orders().to_vec() })?;
    let gens: Vec<GroupElement> = (0..group.rank()).map(|t| group.generator(t)).collect();
    let mut multipliers = Vec::with_capacity(pairs.len());
    for (k, &q) in pairs.iter().enumerate() {
        let s = omega.commutation(&gens[2 * k + 1], &gens[2 * k]);
        let s_num = s.value() * q as i64;
        if !s_num.is_integer() {
            return Err(Error::UnsupportedCocycle(format!("pair {k} commutation phase {s} not a q-th root")));
        }
        let s_int = s_num.to_integer() as u32;
        if s_int.gcd(&q) != 1 {
            return Err(Error::UnsupportedCocycle(format!("pair {k} multiplier {s_int} not coprime to {q}")));
        }
        multipliers.push(s_int);
    }
    for a in 0..gens.len() {
        for b in 0..gens.len() {
            if a / 2 != b / 2 && !omega.commutation(&gens[a], &gens[b]).is_zero() {
                return Err(Error::UnsupportedCocycle("commutation form couples different pairs".into()));
            }
        }
    }
    // cocycle of the bare products Z^{s a} X^b
    let standard = Cocycle::from_fn(group.clone(), |x, y| {
        pairs.iter().enumerate().fold(Phase::zero(), |acc, (k, &q)| {
            acc + Phase::new(multipliers[k] as i64 * x.0[2 * k + 1] as i64 * y.0[2 * k] as i64, q as i64)
        })
    });
    let coboundary = solve_coboundary(group, omega, &standard)?;
    let dim: usize = pairs.iter().map(|&q| q as usize).product();
    let matrices = group
        .elements()
        .iter()
        .map(|h| {
            let mut m = ComplexMatrix::identity(1, 1);
            for (k, &q) in pairs.iter().enumerate() {
                let f = matrix_power(&clock(q, multipliers[k]), h.0[2 * k]) * matrix_power(&shift(q), h.0[2 * k + 1]);
                m = m.kronecker(&f);
            }
            m * coboundary[group.index_of(h)].to_complex()
        })
        .collect();
    Ok(ProjectiveIrrep { cocycle: omega.clone(), dim, pair_orders: pairs, multipliers, matrices, coboundary })
}

/// Find `beta` with `omega(h,h') - standard(h,h') = beta(h) + beta(h') - beta(h+h')`.
fn solve_coboundary(group: &FiniteAbelianGroup, omega: &Cocycle, standard: &Cocycle) -> Result<Vec<Phase>> {
    let mu = |a: &GroupElement, b: &GroupElement| omega.value(a, b) - standard.value(a, b);
    let n = group.order();
    let zero = group.identity();
    let mut beta: Vec<Option<Phase>> = vec![None; n];
    beta[0] = Some(mu(&zero, &zero));
    let gen_beta: Vec<Phase> = (0..group.rank())
        .map(|t| {
            let u = group.generator(t);
            let q = group.orders()[t] as i64;
            let mut acc = mu(&zero, &zero);
            let mut x = u.clone();
            for _ in 1..q {
                acc = acc + mu(&x, &u);
                x = group.add(&x, &u);
            }
            acc.root(q)
        })
        .collect();
    // extend along the last nonzero coordinate
    for idx in 1..n {
        let h = group.element(idx);
        let t = (0..group.rank()).rev().find(|&t| h.0[t] != 0).expect("nonzero element");
        let u = group.generator(t);
        let prev = group.sub(&h, &u);
        let bp = beta[group.index_of(&prev)].expect("lexicographic predecessor already assigned");
        beta[idx] = Some(bp + gen_beta[t] - mu(&prev, &u));
    }
    let beta: Vec<Phase> = beta.into_iter().map(|b| b.expect("assigned")).collect();
    let els = group.elements();
    for a in &els {
        for b in &els {
            let ab = group.add(a, b);
            let lhs = mu(a, b);
            let rhs = beta[group.index_of(a)] + beta[group.index_of(b)] - beta[group.index_of(&ab)];
            if lhs != rhs {
                return Err(Error::UnsupportedCocycle("cocycle is not cohomologous to the clock-shift form".into()));
            }
        }
    }
    Ok(beta)
}

/// One logical operator `C^i = V(h_i)` attached to a physical character.
#[derive(Clone, Debug)]
pub struct LogicalOp {
    pub character: Character,
    pub element: GroupElement,
    pub matrix: ComplexMatrix,
    pub weyl: Vec<(u32, u32)>,
}

/// Logical operators for a list of physical characters, in that order.
#[derive(Clone, Debug)]
pub struct LogicalOps {
    group: FiniteAbelianGroup,
    cocycle: Cocycle,
    pair_orders: Vec<u32>,
    dim: usize,
    ops: Vec<LogicalOp>,
}

impl LogicalOps {
    pub fn group(&self) -> &FiniteAbelianGroup {
        &self.group
    }

    pub fn cocycle(&self) -> &Cocycle {
        &self.cocycle
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn ops(&self) -> &[LogicalOp] {
        &self.ops
    }

    pub fn matrices(&self) -> Vec<ComplexMatrix> {
        self.ops.iter().map(|o| o.matrix.clone()).collect()
    }

    pub fn characters(&self) -> Vec<Character> {
        self.ops.iter().map(|o| o.character.clone()).collect()
    }

    pub fn pair_orders(&self) -> &[u32] {
        &self.pair_orders
    }

    /// Multiply operator `i` by a unit phase. Commutation relations and
    /// characters are unchanged.
    pub fn rephase(&mut self, i: usize, phase: C64) {
        self.ops[i].matrix *= phase;
    }

    /// `(x, z)` labels when the logical space is a single `Z_D x Z_D` pair.
    pub fn single_pair_labels(&self) -> Option<Vec<(u32, u32)>> {
        (self.pair_orders.len() == 1).then(|| self.ops.iter().map(|o| o.weyl[0]).collect())
    }

    /// Exponent `k` with `C^i C^j = w^k C^j C^i` for a single pair, `w = exp(2 pi i/D)`.
    pub fn commutation_exponent(&self, i: usize, j: usize) -> Option<u32> {
        let labels = self.single_pair_labels()?;
        Some(symplectic(self.dim as u32, labels[i], labels[j]))
    }

    /// Canonical set on `Z_D x Z_D` with the standard cocycle, built from
    /// Weyl labels `(x, z)`: operator `C = V((z, x)) = Z^z X^x`.
    pub fn from_weyl_labels(d: u32, labels: &[(u32, u32)]) -> Result<Self> {
        let group = FiniteAbelianGroup::weyl(d);
        let irrep = projective_irrep(&group, &weyl_cocycle(d)?)?;
        let chars = labels
            .iter()
            .map(|&(x, z)| {
                let h = GroupElement(vec![z % d, x % d]);
                character_of_element(&irrep, &h)
            })
            .collect::<Vec<_>>();
        logical_ops_for_rep(&irrep, &chars)
    }
}

/// `<(x,z),(x',z')> = x z' - z x' mod d`.
pub fn symplectic(d: u32, a: (u32, u32), b: (u32, u32)) -> u32 {
    let d = d as i64;
    ((a.0 as i64 * b.1 as i64 - a.1 as i64 * b.0 as i64).rem_euclid(d)) as u32
}

/// The character `comm(h, .)`.
pub fn character_of_element(irrep: &ProjectiveIrrep, h: &GroupElement) -> Character {
    let g = irrep.group();
    let omega = irrep.cocycle();
    let exponents = (0..g.rank())
        .map(|t| {
            let ph = omega.commutation(h, &g.generator(t));
            (ph.value() * g.orders()[t] as i64).to_integer() as u32
        })
        .collect();
    Character { exponents }
}

/// For each character find the unique `h_i` with
/// `V(h_i) V(h) = chi_i(h) V(h) V(h_i)` for all `h`, and set `C^i = V(h_i)`.
pub fn logical_ops_for_rep(irrep: &ProjectiveIrrep, chars: &[Character]) -> Result<LogicalOps> {
    let g = irrep.group();
    let omega = irrep.cocycle();
    let gens: Vec<GroupElement> = (0..g.rank()).map(|t| g.generator(t)).collect();
    let els = g.elements();
    let mut ops = Vec::with_capacity(chars.len());
    for chi in chars {
        if chi.exponents.len() != g.rank() || !g.contains(&GroupElement(chi.exponents.clone())) {
            return Err(Error::InvalidInput(format!("{chi} is not a character of {:?}", g.orders())));
        }
        let mut found = els.iter().filter(|h| gens.iter().all(|u| omega.commutation(h, u) == chi.phase(g, u)));
        let h = found.next().ok_or_else(|| Error::NoSolution(format!("no group element realizes {chi}")))?;
        if found.next().is_some() {
            return Err(Error::NoSolution(format!("{chi} is realized by several elements (form degenerate)")));
        }
        ops.push(LogicalOp {
            character: chi.clone(),
            element: h.clone(),
            matrix: irrep.v(h).clone(),
            weyl: irrep.weyl_label(h),
        });
    }
    Ok(LogicalOps {
        group: g.clone(),
        cocycle: omega.clone(),
        pair_orders: irrep.pair_orders().to_vec(),
        dim: irrep.dim(),
        ops,
    })
}

/// Normal form of a generating set on `Z_D x Z_D`, `D = p^n`.
#[derive(Clone, Debug)]
pub struct CanonicalGenerators {
    /// Commutation exponent of the canonical pair, coprime to `p`.
    pub r: u32,
    /// Index whose operator was gauged to the identity.
    pub gauge_index: usize,
    /// Indices `(a, b)` mapped to `X` and `Z^r`.
    pub pair: (usize, usize),
    /// Symplectic change of basis acting on `(x, z)` column vectors, row-major.
    pub transform: [[u32; 2]; 2],
    /// Transformed labels, one per input operator.
    pub labels: Vec<(u32, u32)>,
    /// `X^x Z^z` for each transformed label.
    pub matrices: Vec<ComplexMatrix>,
}

pub fn is_prime(p: u32) -> bool {
    p >= 2 && (2..).take_while(|k| k * k <= p).all(|k| p % k != 0)
}

/// `(p, n)` with `q = p^n`, if `q` is a prime power.
pub fn prime_power_parts(q: u32) -> Option<(u32, u32)> {
    let p = (2..=q).find(|k| q % k == 0)?;
    let mut n = 0;
    let mut r = q;
    while r % p == 0 {
        r /= p;
        n += 1;
    }
    (r == 1).then_some((p, n))
}

fn mod_inverse(a: u32, m: u32) -> Option<u32> {
    let e = (a as i64).extended_gcd(&(m as i64));
    (e.gcd == 1).then(|| e.x.rem_euclid(m as i64) as u32)
}

/// Gauge `C^i -> C^{0 dag} C^i`, pick a pair with commutation exponent `r`
/// coprime to `p`, and change symplectic basis so the pair becomes `X`, `Z^r`.
pub fn canonicalize_generators(labels: &[(u32, u32)], p: u32, n: u32) -> Result<CanonicalGenerators> {
    if !is_prime(p) || n == 0 {
        return Err(Error::InvalidInput(format!("{p}^{n} is not a prime power")));
    }
    let d = p.pow(n);
    if labels.is_empty() {
        return Err(Error::NotGenerating { p });
    }
    let l0 = labels[0];
    let gauged: Vec<(u32, u32)> = labels.iter().map(|&(x, z)| ((x + d - l0.0 % d) % d, (z + d - l0.1 % d) % d)).collect();
    let mut pair = None;
    'outer: for a in 0..gauged.len() {
        for b in (a + 1)..gauged.len() {
            let r = symplectic(d, gauged[a], gauged[b]);
            if r % p != 0 {
                pair = Some((a, b, r));
                break 'outer;
            }
        }
    }
    let (a, b, r) = pair.ok_or(Error::NotGenerating { p })?;
    // P = [l_a l_b] as columns; M = diag(1, r) P^{-1}, with det P = r
    let (xa, za) = (gauged[a].0 as i64, gauged[a].1 as i64);
    let (xb, zb) = (gauged[b].0 as i64, gauged[b].1 as i64);
    let rinv = mod_inverse(r, d).expect("r coprime to p") as i64;
    let dd = d as i64;
    let inv = [[zb * rinv, -xb * rinv], [-za * rinv, xa * rinv]];
    let m = [
        [inv[0][0].rem_euclid(dd), inv[0][1].rem_euclid(dd)],
        [(r as i64 * inv[1][0]).rem_euclid(dd), (r as i64 * inv[1][1]).rem_euclid(dd)],
    ];
    let transform = [[m[0][0] as u32, m[0][1] as u32], [m[1][0] as u32, m[1][1] as u32]];
    let apply = |(x, z): (u32, u32)| -> (u32, u32) {
        let (x, z) = (x as i64, z as i64);
        (((m[0][0] * x + m[0][1] * z).rem_euclid(dd)) as u32, ((m[1][0] * x + m[1][1] * z).rem_euclid(dd)) as u32)
    };
    let new_labels: Vec<(u32, u32)> = gauged.iter().map(|&l| apply(l)).collect();
    let matrices = new_labels.iter().map(|&(x, z)| weyl_matrix(d, x, z)).collect();
    Ok(CanonicalGenerators { r, gauge_index: 0, pair: (a, b), transform, labels: new_labels, matrices })
}

/// `Z_P x Z_P` block of a paired group selected for a prime power.
#[derive(Clone, Debug)]
pub struct RestrictedBlock {
    pub requested: u32,
    pub prime: u32,
    /// Full `p`-part of the selected pair; the logical dimension of the block.
    pub block_dim: u32,
    pub pair_index: usize,
    pub subgroup: FiniteAbelianGroup,
    pub cocycle: Cocycle,
    pub generators: [GroupElement; 2],
}

impl RestrictedBlock {
    pub fn embed(&self, parent: &FiniteAbelianGroup, e: &GroupElement) -> GroupElement {
        parent.add(&parent.scale(e.0[0], &self.generators[0]), &parent.scale(e.0[1], &self.generators[1]))
    }

    /// Restriction of a character of the parent group.
    pub fn restrict_character(&self, parent: &FiniteAbelianGroup, chi: &Character) -> Character {
        let p = self.block_dim as i64;
        let exponents = self
            .generators
            .iter()
            .map(|g| (chi.phase(parent, g).value() * p).to_integer() as u32)
            .collect();
        Character { exponents }
    }
}

/// Restrict a maximally non-commutative cocycle to the `Z_P x Z_P` block
/// containing the prime power `q = p^n`.
///
/// `P` is the full `p`-part of the first pair order divisible by `q`. When
/// `q < P` the proper subgroup of order `q^2` carries a degenerate
/// commutation form, so the block `Z_P x Z_P` is returned instead; it contains
/// `su(q)` through `su(P)`.
pub fn restrict_to_prime_power(group: &FiniteAbelianGroup, omega: &Cocycle, q: u32) -> Result<RestrictedBlock> {
    let (p, _) = prime_power_parts(q).ok_or_else(|| Error::InvalidInput(format!("{q} is not a prime power")))?;
    let pairs = group.pair_orders().ok_or_else(|| Error::NotSquareForm { orders: group.orders().to_vec() })?;
    let k = pairs.iter().position(|&qk| qk % q == 0).ok_or(Error::NotADivisor { requested: q })?;
    let qk = pairs[k];
    let mut big_p = 1;
    while qk % (big_p * p) == 0 {
        big_p *= p;
    }
    let m = qk / big_p;
    let g1 = group.scale(m, &group.generator(2 * k));
    let g2 = group.scale(m, &group.generator(2 * k + 1));
    let subgroup = FiniteAbelianGroup::weyl(big_p);
    let cocycle = omega.pull_back(&subgroup, &g1, &g2);
    Ok(RestrictedBlock { requested: q, prime: p, block_dim: big_p, pair_index: k, subgroup, cocycle, generators: [g1, g2] })
}

/// Prime powers `p^n` dividing some pair order, ascending.
pub fn prime_powers_dividing(group: &FiniteAbelianGroup) -> Vec<u32> {
    let mut out = Vec::new();
    for q in group.pair_orders().unwrap_or_default() {
        let mut r = q;
        let mut p = 2;
        while r > 1 {
            if r % p == 0 {
                let mut pk = 1;
                while r % p == 0 {
                    r /= p;
                    pk *= p;
                    out.push(pk);
                }
            }
            p += 1;
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{frobenius, hs_inner, trace};
    use approx::assert_abs_diff_eq;

    fn close(a: &ComplexMatrix, b: &ComplexMatrix) -> bool {
        frobenius(&(a - b)) < 1e-12
    }

    #[test]
    fn weyl_cocycle_d2_values() {
        let w = weyl_cocycle(2).unwrap();
        let e = |a, b| GroupElement(vec![a, b]);
        assert_eq!(w.value(&e(0, 1), &e(1, 0)), Phase::new(1, 2));
        assert_abs_diff_eq!((w.value(&e(0, 1), &e(1, 0)).to_complex() - c(-1.0, 0.0)).norm(), 0.0, epsilon = 1e-15);
        assert_eq!(w.value(&e(1, 0), &e(0, 1)), Phase::zero());
        assert_eq!(w.value(&e(0, 0), &e(0, 0)), Phase::zero());
        assert!(w.satisfies_cocycle_condition());
    }

    #[test]
    fn weyl_cocycle_d3_commutation_is_omega() {
        let w = weyl_cocycle(3).unwrap();
        let ph = w.commutation(&GroupElement(vec![0, 1]), &GroupElement(vec![1, 0]));
        assert_eq!(ph, Phase::new(1, 3));
    }

    #[test]
    fn mnc_scan() {
        let g = FiniteAbelianGroup::weyl(2);
        assert!(is_maximally_noncommutative(&g, &weyl_cocycle(2).unwrap()));
        assert!(!is_maximally_noncommutative(&g, &Cocycle::trivial(g.clone())));
        let prod = Cocycle::product(&weyl_cocycle(2).unwrap(), &weyl_cocycle(3).unwrap());
        assert_eq!(prod.group().order(), 36);
        assert!(prod.satisfies_cocycle_condition());
        assert!(is_maximally_noncommutative(prod.group(), &prod));
    }

    #[test]
    fn bad_table_is_rejected() {
        let g = FiniteAbelianGroup::weyl(2);
        let mut t = vec![Phase::zero(); 16];
        t[5] = Phase::new(1, 3);
        assert!(Cocycle::new(g, t).is_err());
    }

    #[test]
    fn d2_irrep_is_pauli() {
        let g = FiniteAbelianGroup::weyl(2);
        let irrep = projective_irrep(&g, &weyl_cocycle(2).unwrap()).unwrap();
        assert_eq!(irrep.dim(), 2);
        let x = shift(2);
        let z = clock(2, 1);
        assert!(close(irrep.v(&GroupElement(vec![0, 0])), &ComplexMatrix::identity(2, 2)));
        assert!(close(irrep.v(&GroupElement(vec![0, 1])), &x));
        assert!(close(irrep.v(&GroupElement(vec![1, 0])), &z));
        assert!(close(irrep.v(&GroupElement(vec![1, 1])), &(&z * &x)));
        assert!(irrep.coboundary().iter().all(|b| b.is_zero()));
    }

    #[test]
    fn d3_clock_shift_ratio() {
        let irrep = projective_irrep(&FiniteAbelianGroup::weyl(3), &weyl_cocycle(3).unwrap()).unwrap();
        let z = irrep.v(&GroupElement(vec![1, 0]));
        let x = irrep.v(&GroupElement(vec![0, 1]));
        let w = Phase::new(1, 3).to_complex();
        assert!(close(&(x * z), &((z * x) * w)));
    }

    #[test]
    fn irrep_satisfies_cocycle_relation_and_trace_identity() {
        for d in 2..=5u32 {
            let g = FiniteAbelianGroup::weyl(d);
            let w = weyl_cocycle(d).unwrap();
            let irrep = projective_irrep(&g, &w).unwrap();
            let els = g.elements();
            for a in &els {
                let tr = trace(irrep.v(a));
                let expect = if a.is_identity() { d as f64 } else { 0.0 };
                assert_abs_diff_eq!((tr - c(expect, 0.0)).norm(), 0.0, epsilon = 1e-10);
                for b in &els {
                    let lhs = irrep.v(a) * irrep.v(b);
                    let rhs = irrep.v(&g.add(a, b)) * w.value(a, b).to_complex();
                    assert!(close(&lhs, &rhs));
                }
            }
        }
    }

    #[test]
    fn irrep_of_twisted_representative_reports_coboundary() {
        // omega' = omega_weyl * d(beta) with beta(a,b) = (a + 2b)/5 on Z_3^2
        let g = FiniteAbelianGroup::weyl(3);
        let w = weyl_cocycle(3).unwrap();
        let beta = |h: &GroupElement| Phase::new(h.0[0] as i64 + 2 * h.0[1] as i64, 5) + Phase::new((h.0[0] * h.0[1]) as i64, 7);
        let twisted = Cocycle::from_fn(g.clone(), |a, b| w.value(a, b) + beta(a) + beta(b) - beta(&g.add(a, b)));
        let twisted = Cocycle::new(g.clone(), twisted.table().to_vec()).unwrap();
        let irrep = projective_irrep(&g, &twisted).unwrap();
        for a in g.elements() {
            for b in g.elements() {
                let lhs = irrep.v(&a) * irrep.v(&b);
                let rhs = irrep.v(&g.add(&a, &b)) * twisted.value(&a, &b).to_complex();
                assert!(close(&lhs, &rhs));
            }
        }
        assert!(irrep.coboundary().iter().any(|b| !b.is_zero()));
    }

    #[test]
    fn irrep_errors() {
        let g = FiniteAbelianGroup::weyl(2);
        assert!(matches!(projective_irrep(&g, &Cocycle::trivial(g.clone())), Err(Error::NotMnc)));
        let g4 = FiniteAbelianGroup::new(vec![4]).unwrap();
        let trivial = Cocycle::trivial(g4.clone());
        assert!(matches!(projective_irrep(&g4, &trivial), Err(Error::NotMnc)));
    }

    #[test]
    fn logical_ops_d2() {
        let g = FiniteAbelianGroup::weyl(2);
        let irrep = projective_irrep(&g, &weyl_cocycle(2).unwrap()).unwrap();
        let chars = g.characters();
        let ops = logical_ops_for_rep(&irrep, &chars).unwrap();
        assert!(close(&ops.ops()[0].matrix, &ComplexMatrix::identity(2, 2)));
        let x = shift(2);
        let z = clock(2, 1);
        // chi(0,1) -> Z, chi(1,0) -> X, chi(1,1) -> ZX
        assert!(close(&ops.ops()[1].matrix, &z));
        assert!(close(&ops.ops()[2].matrix, &x));
        assert!(close(&ops.ops()[3].matrix, &(&z * &x)));
        for i in 0..4 {
            for j in 0..4 {
                let ip = hs_inner(&ops.ops()[i].matrix, &ops.ops()[j].matrix);
                let expect = if i == j { 2.0 } else { 0.0 };
                assert_abs_diff_eq!((ip - c(expect, 0.0)).norm(), 0.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn logical_ops_d4_solves_defining_relation() {
        let g = FiniteAbelianGroup::weyl(4);
        let irrep = projective_irrep(&g, &weyl_cocycle(4).unwrap()).unwrap();
        let chi = Character::new(&g, vec![1, 0]).unwrap();
        let ops = logical_ops_for_rep(&irrep, std::slice::from_ref(&chi)).unwrap();
        // solve by hand: comm((a,b),(c,d)) = (bc - ad)/4 must equal c/4 for all (c,d)
        // -> b = 1, a = 0
        assert_eq!(ops.ops()[0].element, GroupElement(vec![0, 1]));
        let ci = &ops.ops()[0].matrix;
        for h in g.elements() {
            let v = irrep.v(&h);
            assert!(close(&(ci * v), &((v * ci) * chi.value(&g, &h))));
        }
    }

    #[test]
    fn canonicalize_examples() {
        // Pauli X, Y, Z as labels (1,0), (1,1), (0,1)
        let can = canonicalize_generators(&[(1, 0), (1, 1), (0, 1)], 2, 1).unwrap();
        assert_eq!(can.r, 1);
        let err = canonicalize_generators(&[(0, 0), (1, 0), (1, 2)], 2, 2).unwrap_err();
        assert!(matches!(err, Error::NotGenerating { p: 2 }));
        let can = canonicalize_generators(&[(0, 0), (1, 0), (0, 3)], 2, 2).unwrap();
        assert_eq!(can.r, 3);
        assert_eq!(can.labels, vec![(0, 0), (1, 0), (0, 3)]);
    }

    #[test]
    fn canonicalize_produces_normal_form_triple() {
        let can = canonicalize_generators(&[(2, 1), (3, 3), (0, 2), (1, 1)], 5, 1).unwrap();
        assert!(can.labels.contains(&(0, 0)));
        assert!(can.labels.contains(&(1, 0)));
        assert!(can.labels.contains(&(0, can.r)));
        // symplectic form preserved
        let gauged: Vec<(u32, u32)> = [(2u32, 1u32), (3, 3), (0, 2), (1, 1)].iter().map(|&(x, z)| ((x + 3) % 5, (z + 4) % 5)).collect();
        for a in 0..4 {
            for b in 0..4 {
                assert_eq!(symplectic(5, gauged[a], gauged[b]), symplectic(5, can.labels[a], can.labels[b]));
            }
        }
    }

    #[test]
    fn restriction_examples() {
        let prod = Cocycle::product(&weyl_cocycle(2).unwrap(), &weyl_cocycle(3).unwrap());
        let h = prod.group().clone();
        let blk = restrict_to_prime_power(&h, &prod, 3).unwrap();
        assert_eq!(blk.block_dim, 3);
        assert_eq!(blk.cocycle, weyl_cocycle(3).unwrap());
        assert!(is_maximally_noncommutative(&blk.subgroup, &blk.cocycle));

        let g2 = FiniteAbelianGroup::weyl(2);
        let blk = restrict_to_prime_power(&g2, &weyl_cocycle(2).unwrap(), 2).unwrap();
        assert_eq!(blk.cocycle, weyl_cocycle(2).unwrap());

        let g4 = FiniteAbelianGroup::weyl(4);
        let w4 = weyl_cocycle(4).unwrap();
        let blk = restrict_to_prime_power(&g4, &w4, 4).unwrap();
        assert_eq!(blk.block_dim, 4);
        let blk2 = restrict_to_prime_power(&g4, &w4, 2).unwrap();
        assert_eq!(blk2.block_dim, 4);
        // the order-2 subgroup {0,2}^2 commutes under omega: not MNC
        let sub = FiniteAbelianGroup::weyl(2);
        let literal = w4.pull_back(&sub, &GroupElement(vec![2, 0]), &GroupElement(vec![0, 2]));
        assert!(!is_maximally_noncommutative(&sub, &literal));

        assert!(matches!(restrict_to_prime_power(&g4, &w4, 3), Err(Error::NotADivisor { requested: 3 })));
    }

    #[test]
    fn z6_blocks_carry_multipliers() {
        let g6 = FiniteAbelianGroup::weyl(6);
        let w6 = weyl_cocycle(6).unwrap();
        let b2 = restrict_to_prime_power(&g6, &w6, 2).unwrap();
        let b3 = restrict_to_prime_power(&g6, &w6, 3).unwrap();
        assert!(is_maximally_noncommutative(&b2.subgroup, &b2.cocycle));
        assert!(is_maximally_noncommutative(&b3.subgroup, &b3.cocycle));
        let irrep3 = projective_irrep(&b3.subgroup, &b3.cocycle).unwrap();
        assert_eq!(irrep3.multipliers(), &[2]);
        assert_eq!(prime_powers_dividing(&g6), vec![2, 3]);
    }

    #[test]
    fn prime_power_helpers() {
        assert_eq!(prime_power_parts(8), Some((2, 3)));
        assert_eq!(prime_power_parts(9), Some((3, 2)));
        assert_eq!(prime_power_parts(6), None);
        assert_eq!(prime_powers_dividing(&FiniteAbelianGroup::weyl(8)), vec![2, 4, 8]);
    }
}
