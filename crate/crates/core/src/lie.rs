//! Reachable gate algebra of a phase.
//!
//! Generators are the families `alpha C^{i dag} C^j - h.c.` over pairs of
//! present characters. On a single `Z_D x Z_D` block each family is a Weyl
//! direction `(x, z)`, a vertex of a `D x D` grid. Commutators with the three
//! canonical directions `(1,0)`, `(0,r)`, `(D-1,r)` move marks along the grid;
//! a full grid means the algebra is `su(D)`. The numerical closure is an
//! independent oracle.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::algebra::{c, identity, real_span_closure_with, trace, ComplexMatrix, LieClosure};
use crate::cohomology::{
    canonicalize_generators, prime_power_parts, prime_powers_dividing, projective_irrep, restrict_to_prime_power,
    symplectic, Character, Cocycle, FiniteAbelianGroup, LogicalOps,
};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::serialize::Header;

/// Pairs of present characters and the Weyl exponents of `C^{i dag} C^j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSet {
    pub d: u32,
    /// Order of each Weyl pair of the logical space.
    pub pair_orders: Vec<u32>,
    /// Operator indices `(i, j)` with `i < j`.
    pub pairs: Vec<(usize, usize)>,
    /// Per pair, `(x_j - x_i, z_j - z_i)` on each Weyl factor.
    pub exponents: Vec<Vec<(u32, u32)>>,
}

impl GeneratorSet {
    /// Grid points, available when the logical space is a single pair.
    pub fn points(&self) -> Option<Vec<(u32, u32)>> {
        (self.pair_orders.len() == 1).then(|| self.exponents.iter().map(|e| e[0]).collect())
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Unordered pairs over `present` indices with nonzero exponent difference.
/// Pairs with equal labels give `C^{i dag} C^j = I` and carry no traceless
/// direction; they are dropped.
pub fn generator_set(ops: &LogicalOps, present: &[usize]) -> Result<GeneratorSet> {
    if let Some(&k) = present.iter().find(|&&k| k >= ops.len()) {
        return Err(Error::IndexOutOfRange(format!("character index {k} >= {}", ops.len())));
    }
    let mut idx: Vec<usize> = present.to_vec();
    idx.sort_unstable();
    idx.dedup();
    let orders = ops.pair_orders().to_vec();
    let mut pairs = Vec::new();
    let mut exponents = Vec::new();
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            let e: Vec<(u32, u32)> = orders
                .iter()
                .zip(ops.ops()[i].weyl.iter().zip(&ops.ops()[j].weyl))
                .map(|(&q, (li, lj))| ((lj.0 + q - li.0) % q, (lj.1 + q - li.1) % q))
                .collect();
            if e.iter().all(|&(x, z)| x == 0 && z == 0) {
                continue;
            }
            pairs.push((i, j));
            exponents.push(e);
        }
    }
    Ok(GeneratorSet { d: ops.dim() as u32, pair_orders: orders, pairs, exponents })
}

/// Traceless parts of `M - M^dag` and `i (M + M^dag)` with `M = C^{i dag} C^j`.
pub fn oracle_generators(ops: &LogicalOps, gs: &GeneratorSet) -> Vec<ComplexMatrix> {
    let n = ops.dim();
    let id = identity(n);
    let traceless = |a: ComplexMatrix| {
        let t = trace(&a) / c(n as f64, 0.0);
        a - &id * t
    };
    let mut out = Vec::with_capacity(2 * gs.len());
    for &(i, j) in &gs.pairs {
        let m = ops.ops()[i].matrix.adjoint() * &ops.ops()[j].matrix;
        out.push(traceless(&m - m.adjoint()));
        out.push(traceless((&m + m.adjoint()) * c(0.0, 1.0)));
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MoveKind {
    X,
    Z,
    Y,
}

/// One applied move: the inspected points and the points it marked.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Move {
    pub kind: MoveKind,
    pub at: (u32, u32),
    pub inspected: [(u32, u32); 2],
    pub marked: Vec<(u32, u32)>,
    pub hermitian: bool,
}

/// Marked Weyl directions on the `D x D` grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridState {
    d: u32,
    r: u32,
    marked: Vec<bool>,
    move_log: Vec<Move>,
}

impl GridState {
    pub fn empty(d: u32, r: u32) -> Self {
        GridState { d, r: r % d.max(1), marked: vec![false; (d * d) as usize], move_log: Vec::new() }
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn move_log(&self) -> &[Move] {
        &self.move_log
    }

    fn idx(&self, p: (u32, u32)) -> usize {
        ((p.0 % self.d) * self.d + p.1 % self.d) as usize
    }

    pub fn is_marked(&self, p: (u32, u32)) -> bool {
        self.marked[self.idx(p)]
    }

    pub fn partner(&self, p: (u32, u32)) -> (u32, u32) {
        ((self.d - p.0 % self.d) % self.d, (self.d - p.1 % self.d) % self.d)
    }

    /// `(D/2, 0)`, `(0, D/2)`, `(D/2, D/2)` for even `D`.
    pub fn is_hermitian_point(&self, p: (u32, u32)) -> bool {
        let (i, j) = (p.0 % self.d, p.1 % self.d);
        self.d % 2 == 0 && (i, j) != (0, 0) && (2 * i) % self.d == 0 && (2 * j) % self.d == 0
    }

    /// Mark a point and its partner. Returns the newly marked points.
    pub fn mark(&mut self, p: (u32, u32)) -> Vec<(u32, u32)> {
        let p = (p.0 % self.d, p.1 % self.d);
        let mut out = Vec::new();
        if p == (0, 0) {
            return out;
        }
        for q in [p, self.partner(p)] {
            let k = self.idx(q);
            if !self.marked[k] {
                self.marked[k] = true;
                out.push(q);
            }
        }
        out
    }

    pub fn marked_points(&self) -> Vec<(u32, u32)> {
        (0..self.d).flat_map(|i| (0..self.d).map(move |j| (i, j))).filter(|&p| self.is_marked(p)).collect()
    }

    pub fn count(&self) -> usize {
        self.marked.iter().filter(|&&m| m).count()
    }

    /// All `D^2 - 1` nonzero points marked.
    pub fn is_complete(&self) -> bool {
        self.count() + 1 == (self.d * self.d) as usize
    }

    pub fn is_symmetric(&self) -> bool {
        self.marked_points().into_iter().all(|p| self.is_marked(self.partner(p)))
    }

    fn add(&self, a: (u32, u32), di: i64, dj: i64) -> (u32, u32) {
        let d = self.d as i64;
        (((a.0 as i64 + di).rem_euclid(d)) as u32, ((a.1 as i64 + dj).rem_euclid(d)) as u32)
    }

    /// Inspected points of a move from `at`, and whether the move is forbidden.
    pub fn inspect(&self, kind: MoveKind, at: (u32, u32)) -> ([(u32, u32); 2], bool) {
        let d = self.d as u64;
        let (i, j) = (at.0 as u64 % d, at.1 as u64 % d);
        let r = self.r as i64;
        match kind {
            MoveKind::X => ([self.add(at, 1, 0), self.add(at, -1, 0)], j == 0),
            MoveKind::Z => ([self.add(at, 0, r), self.add(at, 0, -r)], (i * self.r as u64) % d == 0),
            MoveKind::Y => ([self.add(at, -1, r), self.add(at, 1, -r)], (i * self.r as u64 + j) % d == 0),
        }
    }

    /// Apply a basic move from a marked point. `None` when the move does not
    /// apply (unmarked start, forbidden line, nothing to infer).
    pub fn apply_move(&mut self, kind: MoveKind, at: (u32, u32)) -> Option<&Move> {
        let at = (at.0 % self.d, at.1 % self.d);
        if !self.is_marked(at) {
            return None;
        }
        let (ins, forbidden) = self.inspect(kind, at);
        if forbidden {
            return None;
        }
        let hermitian = ins.iter().any(|&p| self.is_hermitian_point(p));
        let (m0, m1) = (self.is_marked(ins[0]), self.is_marked(ins[1]));
        let targets: Vec<(u32, u32)> = if hermitian {
            ins.iter().copied().filter(|&p| !self.is_marked(p)).collect()
        } else if m0 && !m1 {
            vec![ins[1]]
        } else if m1 && !m0 {
            vec![ins[0]]
        } else {
            Vec::new()
        };
        let mut marked = Vec::new();
        for p in targets {
            marked.extend(self.mark(p));
        }
        if marked.is_empty() {
            return None;
        }
        self.move_log.push(Move { kind, at, inspected: ins, marked, hermitian });
        self.move_log.last()
    }

    /// Rows printed from `j = D-1` down to `0`, columns `i = 0..D`. `#` marked,
    /// `H` marked hermitian point, `.` unmarked, `o` origin.
    pub fn art(&self) -> String {
        let mut s = String::new();
        for j in (0..self.d).rev() {
            let _ = write!(s, "{j:>3} ");
            for i in 0..self.d {
                let ch = if (i, j) == (0, 0) {
                    'o'
                } else if !self.is_marked((i, j)) {
                    '.'
                } else if self.is_hermitian_point((i, j)) {
                    'H'
                } else {
                    '#'
                };
                s.push(ch);
                s.push(' ');
            }
            s.push('\n');
        }
        s
    }
}

/// Marks each generator point and its partner. `r` is the canonical
/// commutation exponent used by Z and Y moves.
pub fn grid_init(gs: &GeneratorSet, r: u32) -> Result<GridState> {
    let points = gs.points().ok_or_else(|| Error::InvalidInput("grid needs a single Weyl pair".into()))?;
    let mut g = GridState::empty(gs.d, r);
    for p in points {
        g.mark(p);
    }
    Ok(g)
}

const KINDS: [MoveKind; 3] = [MoveKind::X, MoveKind::Z, MoveKind::Y];

fn saturate_where(g: &mut GridState, allow: impl Fn(MoveKind, (u32, u32)) -> bool) -> usize {
    let before = g.move_log.len();
    loop {
        let mut changed = false;
        for i in 0..g.d {
            for j in 0..g.d {
                for kind in KINDS {
                    if allow(kind, (i, j)) && g.apply_move(kind, (i, j)).is_some() {
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            return g.move_log.len() - before;
        }
    }
}

/// Apply every legal move until nothing changes. Points are scanned
/// row-major, moves in X, Z, Y order.
pub fn fill_grid(g: &GridState) -> (bool, GridState) {
    let mut out = g.clone();
    saturate_where(&mut out, |_, _| true);
    (out.is_complete(), out)
}

/// Snapshot of a scheduled fill.
#[derive(Clone, Debug)]
pub struct Milestone {
    pub label: String,
    pub state: GridState,
}

/// Row/column schedule: an X move from `(0, r)`, then alternate X/Z fills
/// of row `c r` and column `c` with Y moves seeding `c + 2`, then for even
/// `D` the hermitian unlock at `(1, D/2)`, then saturation.
pub fn fill_grid_scheduled(g: &GridState) -> (bool, GridState, Vec<Milestone>) {
    let mut s = g.clone();
    let d = s.d;
    let r = s.r;
    let mut milestones = vec![Milestone { label: "initial".into(), state: s.clone() }];
    if d <= 2 {
        saturate_where(&mut s, |_, _| true);
        milestones.push(Milestone { label: "saturated".into(), state: s.clone() });
        return (s.is_complete(), s, milestones);
    }
    s.apply_move(MoveKind::X, (0, r));
    let mut col = 1u32;
    loop {
        let row = (col * r) % d;
        saturate_where(&mut s, |k, p| (k == MoveKind::X && p.1 == row) || (k == MoveKind::Z && p.0 == col));
        milestones.push(Milestone { label: format!("row/column {col}"), state: s.clone() });
        if col + 2 >= d {
            break;
        }
        s.apply_move(MoveKind::Y, (col + 1, r));
        s.apply_move(MoveKind::Y, (1, ((col + 1) * r) % d));
        col += 2;
    }
    if d % 2 == 0 {
        s.apply_move(MoveKind::X, (1, d / 2));
        milestones.push(Milestone { label: format!("hermitian unlock (2,{})", d / 2), state: s.clone() });
    }
    saturate_where(&mut s, |_, _| true);
    milestones.push(Milestone { label: "saturated".into(), state: s.clone() });
    (s.is_complete(), s, milestones)
}

/// Replay a move log from an initial grid, checking each move's
/// precondition at the time it was applied.
pub fn verify_certificate(initial: &GridState, log: &[Move]) -> bool {
    let mut g = GridState { move_log: Vec::new(), ..initial.clone() };
    for mv in log {
        if !g.is_marked(mv.at) {
            return false;
        }
        let (ins, forbidden) = g.inspect(mv.kind, mv.at);
        if forbidden || ins != mv.inspected {
            return false;
        }
        let herm = ins.iter().any(|&p| g.is_hermitian_point(p));
        if herm != mv.hermitian {
            return false;
        }
        if !herm && !(g.is_marked(ins[0]) ^ g.is_marked(ins[1])) {
            return false;
        }
        let mut new = Vec::new();
        for &p in &ins {
            if herm || !g.is_marked(p) {
                new.extend(g.mark(p));
            }
        }
        if new != mv.marked {
            return false;
        }
    }
    true
}

/// Numerical closure of the generator families.
#[derive(Clone, Debug)]
pub struct ClosureReport {
    pub dim: usize,
    pub basis: Vec<ComplexMatrix>,
    pub contains_su_d: bool,
}

pub fn brute_force_closure(ops: &LogicalOps, present: &[usize], tol: f64) -> Result<ClosureReport> {
    brute_force_closure_with(ops, present, tol, Execution::default())
}

pub fn brute_force_closure_with(ops: &LogicalOps, present: &[usize], tol: f64, exec: Execution) -> Result<ClosureReport> {
    let gs = generator_set(ops, present)?;
    let gens = oracle_generators(ops, &gs);
    let n = ops.dim();
    if gens.is_empty() {
        return Ok(ClosureReport { dim: 0, basis: Vec::new(), contains_su_d: n == 1 });
    }
    let LieClosure { dim, basis, .. } = real_span_closure_with(&gens, tol, exec)?;
    Ok(ClosureReport { dim, basis, contains_su_d: dim + 1 == n * n })
}

/// Verdict for one prime-power block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockReport {
    pub prime_power: u32,
    pub block_dim: u32,
    /// Canonical exponent `r`, absent when the restricted set does not
    /// generate.
    pub r: Option<u32>,
    /// Grid verdict; `None` when the grid abstains.
    pub grid_complete: Option<bool>,
    pub grid_marked: Option<usize>,
    pub oracle_dim: usize,
    /// `dim >= p^{2n} - 1` on the block.
    pub contains_su: bool,
    pub grid_art: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    FullSu { d: usize },
    SuAfterBlocking { d: usize, blocking: usize },
    SubClosure { d: usize, dim: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReachabilityReport {
    pub header: Header,
    pub group_orders: Vec<u32>,
    pub present: Vec<Vec<u32>>,
    pub logical_dim: usize,
    pub closure_dim: usize,
    pub blocked_closure_dim: Option<usize>,
    pub verdict: Verdict,
    pub blocks: Vec<BlockReport>,
}

impl ReachabilityReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// All `b`-fold products of the given characters, deduplicated.
pub fn blocked_characters(group: &FiniteAbelianGroup, chars: &[Character], b: usize) -> Vec<Character> {
    let mut cur: Vec<Character> = vec![group.trivial_character()];
    for _ in 0..b {
        let mut next: Vec<Character> = Vec::new();
        for a in &cur {
            for x in chars {
                let p = a.mul(group, x);
                if !next.contains(&p) {
                    next.push(p);
                }
            }
        }
        cur = next;
    }
    cur
}

fn dedup_chars(chars: &[Character]) -> Vec<Character> {
    let mut out: Vec<Character> = Vec::new();
    for c in chars {
        if !out.contains(c) {
            out.push(c.clone());
        }
    }
    out
}

/// Closure of the full generator set, and per prime-power block the grid
/// and oracle verdicts, which must agree.
pub fn reachability_report(
    group: &FiniteAbelianGroup,
    omega: &Cocycle,
    present: &[Character],
    blocking: Option<usize>,
    tol: f64,
) -> Result<ReachabilityReport> {
    let irrep = projective_irrep(group, omega)?;
    let chars = dedup_chars(present);
    let ops = crate::cohomology::logical_ops_for_rep(&irrep, &chars)?;
    let n = ops.dim();
    let all: Vec<usize> = (0..ops.len()).collect();
    let full = brute_force_closure(&ops, &all, tol)?;
    let blocked_closure_dim = match blocking {
        Some(b) if b >= 1 && !full.contains_su_d => {
            let bc = blocked_characters(group, &chars, b);
            let bops = crate::cohomology::logical_ops_for_rep(&irrep, &bc)?;
            Some(brute_force_closure(&bops, &(0..bops.len()).collect::<Vec<_>>(), tol)?.dim)
        }
        _ => None,
    };
    let verdict = if full.contains_su_d {
        Verdict::FullSu { d: n }
    } else if let (Some(b), Some(dim)) = (blocking, blocked_closure_dim) {
        if dim + 1 == n * n {
            Verdict::SuAfterBlocking { d: n, blocking: b }
        } else {
            Verdict::SubClosure { d: n, dim: full.dim }
        }
    } else {
        Verdict::SubClosure { d: n, dim: full.dim }
    };
    let mut blocks = Vec::new();
    for q in prime_powers_dividing(group) {
        blocks.push(block_report(group, omega, &chars, q, tol)?);
    }
    Ok(ReachabilityReport {
        header: Header::new("reachability"),
        group_orders: group.orders().to_vec(),
        present: chars.iter().map(|c| c.exponents.clone()).collect(),
        logical_dim: n,
        closure_dim: full.dim,
        blocked_closure_dim,
        verdict,
        blocks,
    })
}

/// Grid and oracle on the block restricted to `q`.
pub fn block_report(group: &FiniteAbelianGroup, omega: &Cocycle, chars: &[Character], q: u32, tol: f64) -> Result<BlockReport> {
    let block = restrict_to_prime_power(group, omega, q)?;
    let big_p = block.block_dim;
    let (p, n) = prime_power_parts(big_p).expect("block order is a prime power");
    let restricted = dedup_chars(&chars.iter().map(|c| block.restrict_character(group, c)).collect::<Vec<_>>());
    let birrep = projective_irrep(&block.subgroup, &block.cocycle)?;
    let bops = crate::cohomology::logical_ops_for_rep(&birrep, &restricted)?;
    let idx: Vec<usize> = (0..bops.len()).collect();
    let oracle = brute_force_closure(&bops, &idx, tol)?;
    let labels = bops.single_pair_labels().expect("block is a single Weyl pair");
    let (r, grid) = match canonicalize_generators(&labels, p, n) {
        Ok(cg) => {
            let canon = GeneratorSet {
                d: big_p,
                pair_orders: vec![big_p],
                pairs: Vec::new(),
                exponents: Vec::new(),
            };
            let gs = canonical_generator_set(&canon, &cg.labels);
            let g0 = grid_init(&gs, cg.r)?;
            let (complete, g) = fill_grid(&g0);
            (Some(cg.r), Some((complete, g)))
        }
        Err(Error::NotGenerating { .. }) => (None, None),
        Err(e) => return Err(e),
    };
    let full_dim = (big_p * big_p - 1) as usize;
    if let Some((complete, _)) = &grid {
        if *complete != (oracle.dim == full_dim) {
            return Err(Error::InconsistentVerdict(format!(
                "block {big_p}: grid complete = {complete}, oracle dim = {} of {full_dim}",
                oracle.dim
            )));
        }
    }
    let su_q = (q as usize).pow(2) - 1;
    Ok(BlockReport {
        prime_power: q,
        block_dim: big_p,
        r,
        grid_complete: grid.as_ref().map(|g| g.0),
        grid_marked: grid.as_ref().map(|g| g.1.count()),
        oracle_dim: oracle.dim,
        contains_su: oracle.dim >= su_q,
        grid_art: grid.as_ref().map(|g| g.1.art()),
    })
}

fn canonical_generator_set(base: &GeneratorSet, labels: &[(u32, u32)]) -> GeneratorSet {
    let d = base.d;
    let mut pairs = Vec::new();
    let mut exponents = Vec::new();
    for a in 0..labels.len() {
        for b in (a + 1)..labels.len() {
            let e = ((labels[b].0 + d - labels[a].0) % d, (labels[b].1 + d - labels[a].1) % d);
            if e != (0, 0) {
                pairs.push((a, b));
                exponents.push(vec![e]);
            }
        }
    }
    GeneratorSet { d, pair_orders: vec![d], pairs, exponents }
}

/// Canonical labels `{(0,0), (1,0), (0,r)}` on `Z_D x Z_D`.
pub fn canonical_labels(d: u32, r: u32) -> Vec<(u32, u32)> {
    vec![(0, 0), (1 % d, 0), (0, r % d)]
}

/// Generator set of explicit Weyl labels on a single pair.
pub fn generator_set_from_labels(d: u32, labels: &[(u32, u32)]) -> GeneratorSet {
    canonical_generator_set(&GeneratorSet { d, pair_orders: vec![d], pairs: Vec::new(), exponents: Vec::new() }, labels)
}

/// Commutation exponent of two grid points, `<a, b>` mod `D`.
pub fn point_commutation(d: u32, a: (u32, u32), b: (u32, u32)) -> u32 {
    symplectic(d, a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::DEFAULT_CLOSURE_TOL;
    use crate::cohomology::weyl_cocycle;
    use crate::mps::aklt_logical_ops;

    fn canonical_grid(d: u32, r: u32) -> GridState {
        grid_init(&generator_set_from_labels(d, &canonical_labels(d, r)), r).unwrap()
    }

    #[test]
    fn aklt_generator_set() {
        let ops = aklt_logical_ops();
        let gs = generator_set(&ops, &[0, 1, 2]).unwrap();
        assert_eq!(gs.len(), 3);
        let mut pts = gs.points().unwrap();
        pts.sort_unstable();
        assert_eq!(pts, vec![(0, 1), (1, 0), (1, 1)]);
        assert!(generator_set(&ops, &[1]).unwrap().is_empty());
        assert!(generator_set(&ops, &[3]).is_err());
    }

    #[test]
    fn full_character_set_pair_count() {
        for d in [2u32, 3, 4] {
            let labels: Vec<(u32, u32)> = (0..d).flat_map(|x| (0..d).map(move |z| (x, z))).collect();
            let ops = LogicalOps::from_weyl_labels(d, &labels).unwrap();
            let n = labels.len();
            let gs = generator_set(&ops, &(0..n).collect::<Vec<_>>()).unwrap();
            assert_eq!(gs.len(), n * (n - 1) / 2);
        }
    }

    #[test]
    fn canonical_initial_marks() {
        let g = canonical_grid(8, 3);
        let mut expect = vec![(1, 0), (0, 3), (7, 3), (7, 0), (0, 5), (1, 5)];
        expect.sort_unstable();
        assert_eq!(g.marked_points(), expect);
        let g2 = grid_init(&generator_set_from_labels(2, &[(0, 0), (1, 0)]), 1).unwrap();
        assert_eq!(g2.marked_points(), vec![(1, 0)]);
        let e = grid_init(&generator_set_from_labels(5, &[]), 1).unwrap();
        assert_eq!(e.count(), 0);
    }

    #[test]
    fn basic_moves() {
        let mut g = canonical_grid(8, 1);
        let mv = g.apply_move(MoveKind::X, (0, 1)).unwrap().clone();
        assert_eq!(mv.marked[0], (1, 1));
        assert!(g.is_marked((7, 7)));
        assert!(g.apply_move(MoveKind::X, (1, 0)).is_none());
        assert!(g.apply_move(MoveKind::Z, (0, 1)).is_none());
        assert!(g.apply_move(MoveKind::X, (3, 3)).is_none());
        let (_, forbidden) = g.inspect(MoveKind::Y, (1, 7));
        assert!(forbidden);
    }

    #[test]
    fn hermitian_rule() {
        let mut g = GridState::empty(8, 1);
        g.mark((1, 4));
        let mv = g.apply_move(MoveKind::X, (1, 4)).unwrap().clone();
        assert!(mv.hermitian);
        assert!(g.is_marked((2, 4)) && g.is_marked((0, 4)));
        let mut odd = GridState::empty(7, 1);
        assert!((0..7).all(|i| (0..7).all(|j| !odd.is_hermitian_point((i, j)))));
        odd.mark((1, 3));
        assert!(odd.apply_move(MoveKind::X, (1, 3)).is_none());
    }

    #[test]
    fn saturation_completes_canonical_triples() {
        for d in [2u32, 3, 4, 5, 7, 8, 9] {
            let (p, _) = prime_power_parts(d).unwrap();
            for r in (1..d).filter(|r| r % p != 0) {
                let g0 = canonical_grid(d, r);
                let (complete, g) = fill_grid(&g0);
                assert!(complete, "D={d} r={r}\n{}", g.art());
                assert!(g.is_symmetric());
                assert!(verify_certificate(&g0, g.move_log()));
            }
        }
    }

    #[test]
    fn single_direction_does_not_fill() {
        let g0 = grid_init(&generator_set_from_labels(5, &[(0, 0), (1, 0)]), 1).unwrap();
        let (complete, g) = fill_grid(&g0);
        assert!(!complete);
        assert_eq!(g.count(), 2);
    }

    #[test]
    fn row_column_schedule_d8() {
        let g0 = canonical_grid(8, 1);
        let (complete, g, ms) = fill_grid_scheduled(&g0);
        assert!(complete);
        assert!(verify_certificate(&g0, g.move_log()));
        let row1 = &ms.iter().find(|m| m.label == "row/column 1").unwrap().state;
        assert!((0..8).all(|i| row1.is_marked((i, 1)) && row1.is_marked((1, i))));
        assert!(!row1.is_marked((3, 0)));
        let row3 = &ms.iter().find(|m| m.label == "row/column 3").unwrap().state;
        assert!((0..8).all(|i| row3.is_marked((i, 3)) && row3.is_marked((3, i))));
        assert!(!row3.is_marked((2, 4)));
        let unlock = g.move_log().iter().find(|m| m.hermitian).unwrap();
        assert_eq!((unlock.kind, unlock.at), (MoveKind::X, (1, 4)));
        assert!(unlock.marked.contains(&(2, 4)));
    }

    #[test]
    fn tampered_certificate_fails() {
        let g0 = canonical_grid(5, 2);
        let (_, g) = fill_grid(&g0);
        let mut log = g.move_log().to_vec();
        let last = log.len() - 1;
        log.swap(0, last);
        assert!(!verify_certificate(&g0, &log));
    }

    #[test]
    fn oracle_examples() {
        let ops = aklt_logical_ops();
        let rep = brute_force_closure(&ops, &[0, 1, 2], DEFAULT_CLOSURE_TOL).unwrap();
        assert_eq!(rep.dim, 3);
        assert!(rep.contains_su_d);
        let labels: Vec<(u32, u32)> = (0..3).flat_map(|x| (0..3).map(move |z| (x, z))).collect();
        let ops3 = LogicalOps::from_weyl_labels(3, &labels).unwrap();
        assert_eq!(brute_force_closure(&ops3, &(0..9).collect::<Vec<_>>(), DEFAULT_CLOSURE_TOL).unwrap().dim, 8);
    }

    #[test]
    fn reachability_examples() {
        let h = FiniteAbelianGroup::weyl(2);
        let w = weyl_cocycle(2).unwrap();
        let chars: Vec<Character> = h.characters().into_iter().filter(|c| !c.is_trivial()).collect();
        let rep = reachability_report(&h, &w, &chars, None, DEFAULT_CLOSURE_TOL).unwrap();
        assert_eq!(rep.verdict, Verdict::FullSu { d: 2 });
        assert_eq!(rep.blocks[0].grid_complete, Some(true));

        let one = vec![h.trivial_character(), chars[0].clone()];
        let rep1 = reachability_report(&h, &w, &one, None, DEFAULT_CLOSURE_TOL).unwrap();
        assert_eq!(rep1.verdict, Verdict::SubClosure { d: 2, dim: 1 });
        assert_eq!(rep1.blocks[0].grid_complete, None);
        let rep1b = reachability_report(&h, &w, &one, Some(3), DEFAULT_CLOSURE_TOL).unwrap();
        assert_eq!(rep1b.blocked_closure_dim, Some(1));

        let h4 = FiniteAbelianGroup::weyl(4);
        let w4 = weyl_cocycle(4).unwrap();
        let rep4 = reachability_report(&h4, &w4, &h4.characters(), None, DEFAULT_CLOSURE_TOL).unwrap();
        assert_eq!(rep4.verdict, Verdict::FullSu { d: 4 });
        assert!(rep4.blocks.iter().all(|b| b.contains_su && b.grid_complete == Some(true)));
        assert!(rep4.to_json().unwrap().contains("\"full_su\""));
    }

    #[test]
    fn blocking_restores_universality() {
        let h = FiniteAbelianGroup::weyl(3);
        let w = weyl_cocycle(3).unwrap();
        let x = Character::new(&h, vec![1, 0]).unwrap();
        let z = Character::new(&h, vec![0, 1]).unwrap();
        let chars = vec![h.trivial_character(), x, z];
        let bc = blocked_characters(&h, &chars, 2);
        assert_eq!(bc.len(), 6);
        let rep = reachability_report(&h, &w, &chars, Some(2), DEFAULT_CLOSURE_TOL).unwrap();
        assert!(matches!(rep.verdict, Verdict::FullSu { .. } | Verdict::SuAfterBlocking { .. }));
    }
}
