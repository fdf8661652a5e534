//! Linear-programming encoding of stable commutator length in a free group.
//!
//! An admissible surface for a chain `sum c_i w_i` decomposes into rectangles
//! (one per pair of inverse letters it glues) and polygons at the wedge point.
//! Polygons enter the program fan-triangulated: bigons with two real sides and
//! triangles with at least one real side, whose remaining sides are "dummy"
//! diagonals that must pair up with their reverses. At degree one the program
//!
//! ```text
//! minimize  #rectangles + #dummy pairs - #pieces  (= -chi)
//! ```
//!
//! subject to letter coverage and side matching has optimum `2 scl(C)`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::freegroup::{AbelianImage, Chain, GroupError, Letter, Word};
use crate::ratlp::{self, LinearProgram, LpError, LpResult, LpStatus, SolveOptions};
use crate::surfcert::{CellComplex, EdgeKind, Provenance, SurfaceCertificate};
use crate::Rational;

pub const DEFAULT_MAX_LETTERS: usize = 24;

#[derive(Debug, Clone, Copy)]
pub struct Limits {
    pub max_letters: usize,
    pub max_pivots: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_letters: DEFAULT_MAX_LETTERS, max_pivots: ratlp::DEFAULT_MAX_PIVOTS }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SclError {
    #[error("chain is not a boundary (abelian image {0:?})")]
    NotBoundary(Vec<String>),
    #[error("prepared chain has {letters} letters, above the cap of {cap}")]
    TooManyLetters { letters: usize, cap: usize },
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl SclError {
    pub fn is_resource_limit(&self) -> bool {
        matches!(self, SclError::TooManyLetters { .. } | SclError::Lp(LpError::PivotLimit(_)))
    }

    fn not_boundary(image: &AbelianImage) -> Self {
        SclError::NotBoundary(image.0.iter().map(|v| v.to_string()).collect())
    }
}

/// A boundary chain with positive integer coefficients, `scale` times the input.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    pub chain: Chain,
    pub scale: BigInt,
}

impl Prepared {
    pub fn words(&self) -> impl Iterator<Item = &Word> {
        self.chain.terms().iter().map(|t| &t.word)
    }

    /// Integer coefficient of term `i`.
    pub fn weight(&self, i: usize) -> BigInt {
        self.chain.terms()[i].coefficient.to_integer()
    }
}

/// Canonicalizes, clears denominators, and flips negative terms onto their
/// inverse classes.
pub fn prepare(chain: &Chain) -> Result<Prepared, SclError> {
    let canonical = chain.canonicalize();
    let image = canonical.abelianize();
    if !image.is_zero() {
        return Err(SclError::not_boundary(&image));
    }
    let scale = canonical.terms().iter().fold(BigInt::one(), |acc, t| acc.lcm(t.coefficient.denom()));
    let factor = Rational::from_integer(scale.clone());
    let terms = canonical.terms().iter().map(|t| {
        let c = &t.coefficient * &factor;
        if c.is_negative() {
            (-c, t.word.inverse().least_rotation())
        } else {
            (c, t.word.clone())
        }
    });
    let chain = Chain::new(canonical.rank(), terms)?;
    Ok(Prepared { chain, scale })
}

/// Position `pos` of term `term`'s cyclic word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LetterSlot {
    pub term: usize,
    pub pos: usize,
}

/// The gap between letters `gap` and `gap + 1` (cyclically) of term `term`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CornerSlot {
    pub term: usize,
    pub gap: usize,
}

/// Indexing of letter slots and corners of a prepared chain. Corner `k` is the
/// gap right after letter slot `k`.
#[derive(Debug, Clone)]
pub struct SlotTable {
    offsets: Vec<usize>,
    lengths: Vec<usize>,
    letters: Vec<Letter>,
}

impl SlotTable {
    pub fn new<'a>(words: impl IntoIterator<Item = &'a Word>) -> Self {
        let mut offsets = Vec::new();
        let mut lengths = Vec::new();
        let mut letters = Vec::new();
        for w in words {
            offsets.push(letters.len());
            lengths.push(w.len());
            letters.extend_from_slice(w.letters());
        }
        SlotTable { offsets, lengths, letters }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letter(&self, index: usize) -> Letter {
        self.letters[index]
    }

    pub fn slot(&self, index: usize) -> LetterSlot {
        let term = self.offsets.partition_point(|&o| o <= index) - 1;
        LetterSlot { term, pos: index - self.offsets[term] }
    }

    pub fn corner(&self, index: usize) -> CornerSlot {
        let s = self.slot(index);
        CornerSlot { term: s.term, gap: s.pos }
    }

    pub fn index(&self, slot: LetterSlot) -> usize {
        self.offsets[slot.term] + slot.pos
    }

    /// Corner right after letter `index`.
    pub fn corner_after(&self, index: usize) -> usize {
        index
    }

    /// Corner right before letter `index`.
    pub fn corner_before(&self, index: usize) -> usize {
        let s = self.slot(index);
        let len = self.lengths[s.term];
        self.offsets[s.term] + (s.pos + len - 1) % len
    }

    /// Letter slot following corner `corner`.
    pub fn letter_after_corner(&self, corner: usize) -> usize {
        let s = self.slot(corner);
        self.offsets[s.term] + (s.pos + 1) % self.lengths[s.term]
    }

    pub fn term_of(&self, index: usize) -> usize {
        self.slot(index).term
    }
}

/// Which of the two short sides of a rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SideKind {
    /// From the corner after `p` to the corner before `q`.
    First,
    /// From the corner after `q` to the corner before `p`.
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SideId {
    pub rectangle: usize,
    pub kind: SideKind,
}

/// Strip over an edge of the rose gluing letter slot `p` to the inverse letter at `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rectangle {
    pub p: usize,
    pub q: usize,
    /// Corner pair `(after p, before q)`.
    pub first: (usize, usize),
    /// Corner pair `(after q, before p)`.
    pub second: (usize, usize),
}

impl Rectangle {
    pub fn side(&self, kind: SideKind) -> (usize, usize) {
        match kind {
            SideKind::First => self.first,
            SideKind::Second => self.second,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PieceSide {
    Real(SideId),
    /// Diagonal between two corners, oriented `from -> to`.
    Dummy {
        from: usize,
        to: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PieceKind {
    Bigon,
    Triangle,
}

/// Polygon at the wedge point; consecutive sides share corners.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Piece {
    pub kind: PieceKind,
    pub sides: Vec<PieceSide>,
    /// `corners[k]` is the start corner of `sides[k]`.
    pub corners: Vec<usize>,
}

impl Piece {
    pub fn dummy_count(&self) -> usize {
        self.sides.iter().filter(|s| matches!(s, PieceSide::Dummy { .. })).count()
    }
}

pub fn enumerate_rectangles(slots: &SlotTable) -> Vec<Rectangle> {
    let mut out = Vec::new();
    for p in 0..slots.len() {
        for q in p + 1..slots.len() {
            if slots.letter(q) == slots.letter(p).inverse() {
                out.push(Rectangle {
                    p,
                    q,
                    first: (slots.corner_after(p), slots.corner_before(q)),
                    second: (slots.corner_after(q), slots.corner_before(p)),
                });
            }
        }
    }
    out
}

fn side_lookup(rectangles: &[Rectangle]) -> HashMap<(usize, usize), SideId> {
    let mut map = HashMap::new();
    for (r, rect) in rectangles.iter().enumerate() {
        for kind in [SideKind::First, SideKind::Second] {
            map.insert(rect.side(kind), SideId { rectangle: r, kind });
        }
    }
    map
}

/// Bigons on every pair of opposite real sides, and triangles whose apex is
/// their smallest corner and whose side opposite the apex is real. A polygon
/// with distinct corners fan-triangulates from its least corner into exactly
/// such triangles, and splitting a polygon at a repeated corner only lowers
/// `-chi`, so this menu loses nothing.
pub fn enumerate_pieces(rectangles: &[Rectangle]) -> Vec<Piece> {
    let lookup = side_lookup(rectangles);
    let mut real: Vec<((usize, usize), SideId)> = lookup.iter().map(|(k, v)| (*k, *v)).collect();
    real.sort();
    let mut pieces = Vec::new();
    for &((g, h), side) in &real {
        if g < h {
            if let Some(&back) = lookup.get(&(h, g)) {
                pieces.push(Piece {
                    kind: PieceKind::Bigon,
                    sides: vec![PieceSide::Real(side), PieceSide::Real(back)],
                    corners: vec![g, h],
                });
            }
        }
    }
    debug_assert!(real.iter().all(|((g, h), _)| g != h));
    for &((x, y), side) in &real {
        for apex in 0..x.min(y) {
            let into: Vec<PieceSide> = options(&lookup, apex, x);
            let back: Vec<PieceSide> = options(&lookup, y, apex);
            for s1 in &into {
                for s3 in &back {
                    pieces.push(Piece {
                        kind: PieceKind::Triangle,
                        sides: vec![*s1, PieceSide::Real(side), *s3],
                        corners: vec![apex, x, y],
                    });
                }
            }
        }
    }
    pieces
}

fn options(lookup: &HashMap<(usize, usize), SideId>, from: usize, to: usize) -> Vec<PieceSide> {
    let mut v = Vec::with_capacity(2);
    if let Some(&s) = lookup.get(&(from, to)) {
        v.push(PieceSide::Real(s));
    }
    v.push(PieceSide::Dummy { from, to });
    v
}

/// The assembled program and the combinatorics behind each variable.
#[derive(Debug, Clone)]
pub struct Encoding {
    pub prepared: Prepared,
    pub slots: SlotTable,
    pub rectangles: Vec<Rectangle>,
    pub pieces: Vec<Piece>,
    /// Unordered dummy corner pairs `(g, h)` with `g < h`, one matching row each.
    pub dummy_types: Vec<(usize, usize)>,
    pub lp: LinearProgram,
}

impl Encoding {
    pub fn rectangle_var(&self, r: usize) -> usize {
        r
    }

    pub fn piece_var(&self, k: usize) -> usize {
        self.rectangles.len() + k
    }
}

pub fn build_lp(chain: &Chain, limits: &Limits) -> Result<Encoding, SclError> {
    let prepared = prepare(chain)?;
    let letters = prepared.chain.letter_count();
    if letters > limits.max_letters {
        return Err(SclError::TooManyLetters { letters, cap: limits.max_letters });
    }
    let slots = SlotTable::new(prepared.words());
    let rectangles = enumerate_rectangles(&slots);
    let pieces = enumerate_pieces(&rectangles);

    let nr = rectangles.len();
    let mut lp = LinearProgram::new(nr + pieces.len());
    let one = Rational::one;

    for index in 0..slots.len() {
        let coeffs: Vec<(usize, Rational)> = rectangles
            .iter()
            .enumerate()
            .filter(|(_, r)| r.p == index || r.q == index)
            .map(|(k, _)| (k, one()))
            .collect();
        let weight = Rational::from_integer(prepared.weight(slots.term_of(index)));
        lp.add_constraint(coeffs, weight)?;
    }

    let mut side_usage: BTreeMap<SideId, Vec<(usize, Rational)>> = BTreeMap::new();
    let mut dummy_usage: BTreeMap<(usize, usize), Vec<(usize, Rational)>> = BTreeMap::new();
    for (k, piece) in pieces.iter().enumerate() {
        for side in &piece.sides {
            match *side {
                PieceSide::Real(id) => side_usage.entry(id).or_default().push((nr + k, -one())),
                PieceSide::Dummy { from, to } => {
                    let (key, sign) = if from < to { ((from, to), one()) } else { ((to, from), -one()) };
                    dummy_usage.entry(key).or_default().push((nr + k, sign));
                }
            }
        }
    }
    for r in 0..nr {
        for kind in [SideKind::First, SideKind::Second] {
            let mut coeffs = side_usage.remove(&SideId { rectangle: r, kind }).unwrap_or_default();
            coeffs.push((r, one()));
            lp.add_constraint(coeffs, Rational::zero())?;
        }
    }
    let mut dummy_types = Vec::with_capacity(dummy_usage.len());
    for (key, coeffs) in dummy_usage {
        dummy_types.push(key);
        lp.add_constraint(coeffs, Rational::zero())?;
    }

    let half = Rational::new(BigInt::one(), BigInt::from(2));
    for r in 0..nr {
        lp.set_objective(r, one())?;
    }
    for (k, piece) in pieces.iter().enumerate() {
        let cost = &half * Rational::from_integer(BigInt::from(piece.dummy_count())) - one();
        lp.set_objective(nr + k, cost)?;
    }

    Ok(Encoding { prepared, slots, rectangles, pieces, dummy_types, lp })
}

/// An exact scl value with the program and verified optimal vertex behind it.
#[derive(Debug, Clone)]
pub struct SclSolution {
    pub value: Rational,
    pub encoding: Encoding,
    pub result: LpResult,
}

pub fn solve(chain: &Chain, limits: &Limits) -> Result<SclSolution, SclError> {
    let encoding = build_lp(chain, limits)?;
    let result =
        ratlp::solve_min_with(&encoding.lp, SolveOptions { max_pivots: limits.max_pivots, ..SolveOptions::default() })?;
    if result.status != LpStatus::Optimal {
        return Err(SclError::Invariant(format!("scl program reported {:?}", result.status)));
    }
    if !ratlp::verify(&encoding.lp, &result) {
        return Err(SclError::Invariant("LP duality check failed".into()));
    }
    let optimum = result.value.clone().expect("optimal result carries a value");
    let value = optimum / Rational::from_integer(&encoding.prepared.scale * BigInt::from(2));
    Ok(SclSolution { value, encoding, result })
}

/// Exact stable commutator length of a boundary chain.
pub fn scl(chain: &Chain, limits: &Limits) -> Result<Rational, SclError> {
    solve(chain, limits).map(|s| s.value)
}

/// Scales the optimal vertex to integer multiplicities, glues the pieces into a
/// surface, and reads off its Euler characteristic and boundary.
///
/// The result has degree `n` over the prepared chain, `-chi = n * optimum`, and
/// boundary `n * prepared`; anything else is an invariant violation.
pub fn decode_certificate(solution: &SclSolution) -> Result<SurfaceCertificate, SclError> {
    let enc = &solution.encoding;
    let x = &solution.result.primal;
    let degree = x.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
    let scaled = |v: &Rational| -> Result<usize, SclError> {
        (v * Rational::from_integer(degree.clone()))
            .to_integer()
            .to_usize()
            .ok_or_else(|| SclError::Invariant("vertex multiplicity out of range".into()))
    };
    let rank = enc.prepared.chain.rank();
    let mut cx = CellComplex::new();

    // rectangle faces: letter p, first side, letter q, second side
    let mut side_slots: HashMap<SideId, Vec<(usize, usize)>> = HashMap::new();
    for (r, rect) in enc.rectangles.iter().enumerate() {
        for _ in 0..scaled(&x[enc.rectangle_var(r)])? {
            let f = cx.add_face(vec![
                EdgeKind::Boundary(Some(enc.slots.letter(rect.p))),
                EdgeKind::Glued,
                EdgeKind::Boundary(Some(enc.slots.letter(rect.q))),
                EdgeKind::Glued,
            ]);
            side_slots.entry(SideId { rectangle: r, kind: SideKind::First }).or_default().push((f, 1));
            side_slots.entry(SideId { rectangle: r, kind: SideKind::Second }).or_default().push((f, 3));
        }
    }

    // polygon faces traverse corners against the side orientation:
    // corner c_0, side k-1 reversed, corner c_{k-1}, ..., side 0 reversed
    let mut real_uses: HashMap<SideId, Vec<(usize, usize)>> = HashMap::new();
    let mut dummy_uses: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
    for (k, piece) in enc.pieces.iter().enumerate() {
        let copies = scaled(&x[enc.piece_var(k)])?;
        let m = piece.sides.len();
        for _ in 0..copies {
            let edges = (0..m).flat_map(|_| [EdgeKind::Boundary(None), EdgeKind::Glued]).collect();
            let f = cx.add_face(edges);
            // edge 2*step+1 carries the side ending at corner (m - step) mod m
            for step in 0..m {
                let side_index = (2 * m - step - 1) % m;
                let edge = 2 * step + 1;
                match piece.sides[side_index] {
                    PieceSide::Real(id) => real_uses.entry(id).or_default().push((f, edge)),
                    PieceSide::Dummy { from, to } => dummy_uses.entry((from, to)).or_default().push((f, edge)),
                }
            }
        }
    }

    for (id, rect_edges) in &side_slots {
        let uses = real_uses.remove(id).unwrap_or_default();
        if uses.len() != rect_edges.len() {
            return Err(SclError::Invariant(format!(
                "side {id:?}: {} rectangles vs {} uses",
                rect_edges.len(),
                uses.len()
            )));
        }
        for (a, b) in rect_edges.iter().zip(&uses) {
            cx.glue(*a, *b);
        }
    }
    if real_uses.values().any(|v| !v.is_empty()) {
        return Err(SclError::Invariant("piece side without a rectangle".into()));
    }
    let mut keys: Vec<(usize, usize)> = dummy_uses.keys().copied().filter(|(g, h)| g < h).collect();
    keys.sort();
    for (g, h) in keys {
        let forward = &dummy_uses[&(g, h)];
        let backward = dummy_uses.get(&(h, g)).map(Vec::as_slice).unwrap_or(&[]);
        if forward.len() != backward.len() {
            return Err(SclError::Invariant(format!("dummy pair ({g},{h}) unbalanced")));
        }
        for (a, b) in forward.iter().zip(backward) {
            cx.glue(*a, *b);
        }
    }
    for (&(g, h), uses) in &dummy_uses {
        if g > h && !dummy_uses.contains_key(&(h, g)) && !uses.is_empty() {
            return Err(SclError::Invariant(format!("dummy pair ({h},{g}) unbalanced")));
        }
    }

    let euler = cx.euler_characteristic().map_err(SclError::Invariant)?;
    let boundary_words = cx.boundary_words(rank).map_err(SclError::Invariant)?;
    let boundary = Chain::new(rank, boundary_words.into_iter().map(|w| (Rational::one(), w)))?.canonicalize();

    let degree_q = Rational::from_integer(degree.clone());
    let optimum = solution.result.value.clone().unwrap_or_default();
    if Rational::from_integer(BigInt::from(-euler)) != &optimum * &degree_q {
        return Err(SclError::Invariant(format!(
            "cell count chi = {euler} disagrees with LP optimum {optimum} at degree {degree}"
        )));
    }
    let expected = enc.prepared.chain.scale(&degree_q).canonicalize();
    if boundary != expected {
        return Err(SclError::Invariant(format!("decoded boundary {boundary} is not {expected}")));
    }
    let degree = degree.to_u64().ok_or_else(|| SclError::Invariant("degree out of range".into()))?;
    Ok(SurfaceCertificate { euler_characteristic: euler, degree, boundary, provenance: Provenance::LinearProgram })
}

impl fmt::Display for Prepared {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (scale {})", self.chain, self.scale)
    }
}
