//! Surface certificates.
//!
//! A band surface is specified by boundary cycles cut into letter-labeled arcs
//! and a perfect matching of arcs with inverse labels: each matched pair is a
//! rectangle, and the corners between consecutive arcs close up into polygons.
//! Its Euler characteristic is `#corner orbits - #pairs`; the same number is
//! also obtained by building the cell complex and counting `V - E + F`.
//!
//! Also here: a generic polygon complex used to glue LP-decoded pieces, an
//! exhaustive matching search that gives upper bounds for scl, and a
//! line-based certificate file format.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::freegroup::{Chain, GroupError, Letter, Word};
use crate::sclenc::{self, Limits, SclError};
use crate::Rational;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CertError {
    #[error("invalid matching: {0}")]
    InvalidMatching(String),
    #[error("invalid arc system: {0}")]
    InvalidArcs(String),
    #[error("boundary {boundary} is not a positive multiple of {chain}")]
    BoundaryMismatch { boundary: String, chain: String },
    #[error("certificate line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("search limit reached: {0}")]
    ResourceLimit(String),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Scl(#[from] SclError),
}

/// Boundary edges carry a letter (or nothing, for corner arcs); glued edges
/// are identified in pairs with opposite orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    Boundary(Option<Letter>),
    Glued,
}

/// Polygons glued edge to edge. Edge `k` of a face runs from its vertex `k`
/// to vertex `k + 1`.
#[derive(Debug, Clone, Default)]
pub struct CellComplex {
    faces: Vec<Vec<EdgeKind>>,
    base: Vec<usize>,
    vertices: usize,
    glue: Vec<((usize, usize), (usize, usize))>,
}

impl CellComplex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_face(&mut self, edges: Vec<EdgeKind>) -> usize {
        self.base.push(self.vertices);
        self.vertices += edges.len();
        self.faces.push(edges);
        self.faces.len() - 1
    }

    pub fn glue(&mut self, a: (usize, usize), b: (usize, usize)) {
        self.glue.push((a, b));
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    fn start(&self, (f, e): (usize, usize)) -> usize {
        self.base[f] + e
    }

    fn end(&self, (f, e): (usize, usize)) -> usize {
        self.base[f] + (e + 1) % self.faces[f].len()
    }

    fn classes(&self) -> Result<UnionFind, String> {
        let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
        for &(a, b) in &self.glue {
            for e in [a, b] {
                if self.faces[e.0][e.1] != EdgeKind::Glued {
                    return Err(format!("edge {e:?} is a boundary edge"));
                }
                *seen.entry(e).or_default() += 1;
            }
        }
        for (f, edges) in self.faces.iter().enumerate() {
            for (e, kind) in edges.iter().enumerate() {
                if *kind == EdgeKind::Glued && seen.get(&(f, e)) != Some(&1) {
                    return Err(format!("edge ({f}, {e}) glued {} times", seen.get(&(f, e)).unwrap_or(&0)));
                }
            }
        }
        let mut uf = UnionFind::new(self.vertices);
        for &(a, b) in &self.glue {
            uf.union(self.start(a), self.end(b));
            uf.union(self.end(a), self.start(b));
        }
        Ok(uf)
    }

    /// `V - E + F` of the glued complex.
    pub fn euler_characteristic(&self) -> Result<i64, String> {
        let mut uf = self.classes()?;
        let v = uf.count();
        let boundary = self.faces.iter().flatten().filter(|k| matches!(k, EdgeKind::Boundary(_))).count();
        let e = boundary + self.glue.len();
        Ok(v as i64 - e as i64 + self.faces.len() as i64)
    }

    /// Words read along the boundary circles, one per circle.
    pub fn boundary_words(&self, rank: usize) -> Result<Vec<Word>, String> {
        let mut uf = self.classes()?;
        let mut outgoing: HashMap<usize, (usize, usize)> = HashMap::new();
        let mut edges = Vec::new();
        for (f, kinds) in self.faces.iter().enumerate() {
            for (e, kind) in kinds.iter().enumerate() {
                if let EdgeKind::Boundary(_) = kind {
                    let s = uf.find(self.start((f, e)));
                    if outgoing.insert(s, (f, e)).is_some() {
                        return Err(format!("two boundary edges leave vertex {s}"));
                    }
                    edges.push((f, e));
                }
            }
        }
        let mut visited: HashMap<(usize, usize), bool> = HashMap::new();
        let mut words = Vec::new();
        for &first in &edges {
            if visited.contains_key(&first) {
                continue;
            }
            let mut letters = Vec::new();
            let mut cur = first;
            loop {
                visited.insert(cur, true);
                if let EdgeKind::Boundary(Some(l)) = self.faces[cur.0][cur.1] {
                    letters.push(l);
                }
                let next_vertex = uf.find(self.end(cur));
                cur = *outgoing.get(&next_vertex).ok_or("boundary circle does not close")?;
                if cur == first {
                    break;
                }
                if visited.contains_key(&cur) {
                    return Err("boundary edges do not form circles".into());
                }
            }
            words.push(Word::new(letters, rank).map_err(|e| e.to_string())?);
        }
        Ok(words)
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }

    fn count(&mut self) -> usize {
        (0..self.parent.len()).filter(|&x| self.find(x) == x).count()
    }
}

/// Boundary cycles of a band surface, each cut into single-letter arcs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArcSystem {
    rank: usize,
    cycles: Vec<Word>,
    offsets: Vec<usize>,
}

impl ArcSystem {
    pub fn new(rank: usize, cycles: Vec<Word>) -> Result<Self, CertError> {
        let mut offsets = Vec::with_capacity(cycles.len());
        let mut total = 0;
        for (i, w) in cycles.iter().enumerate() {
            if w.rank() != rank {
                return Err(GroupError::RankMismatch { left: rank, right: w.rank() }.into());
            }
            if w.is_empty() || !w.is_cyclically_reduced() {
                return Err(CertError::InvalidArcs(format!(
                    "cycle {i} ({w}) is not a nonempty cyclically reduced word"
                )));
            }
            offsets.push(total);
            total += w.len();
        }
        Ok(ArcSystem { rank, cycles, offsets })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn cycles(&self) -> &[Word] {
        &self.cycles
    }

    pub fn arc_count(&self) -> usize {
        self.cycles.iter().map(Word::len).sum()
    }

    pub fn label(&self, arc: usize) -> Letter {
        let (c, i) = self.locate(arc);
        self.cycles[c].letters()[i]
    }

    /// `(cycle, index within cycle)` of a global arc index.
    pub fn locate(&self, arc: usize) -> (usize, usize) {
        let c = self.offsets.partition_point(|&o| o <= arc) - 1;
        (c, arc - self.offsets[c])
    }

    pub fn arc(&self, cycle: usize, index: usize) -> Option<usize> {
        (cycle < self.cycles.len() && index < self.cycles[cycle].len()).then(|| self.offsets[cycle] + index)
    }

    /// Arc preceding `arc` on its cycle.
    pub fn prev(&self, arc: usize) -> usize {
        let (c, i) = self.locate(arc);
        let len = self.cycles[c].len();
        self.offsets[c] + (i + len - 1) % len
    }

    pub fn next(&self, arc: usize) -> usize {
        let (c, i) = self.locate(arc);
        self.offsets[c] + (i + 1) % self.cycles[c].len()
    }
}

/// Fixed-point-free involution on arcs pairing inverse labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Matching {
    partner: Vec<usize>,
}

impl Matching {
    pub fn new(arcs: &ArcSystem, partner: Vec<usize>) -> Result<Self, CertError> {
        let m = Matching { partner };
        m.validate(arcs)?;
        Ok(m)
    }

    pub fn from_pairs(arcs: &ArcSystem, pairs: &[(usize, usize)]) -> Result<Self, CertError> {
        let n = arcs.arc_count();
        let mut partner = vec![usize::MAX; n];
        for &(p, q) in pairs {
            if p >= n || q >= n {
                return Err(CertError::InvalidMatching(format!("arc index out of range in ({p}, {q})")));
            }
            if partner[p] != usize::MAX || partner[q] != usize::MAX {
                return Err(CertError::InvalidMatching(format!("arc paired twice in ({p}, {q})")));
            }
            partner[p] = q;
            partner[q] = p;
        }
        Matching::new(arcs, partner)
    }

    pub fn partner(&self, arc: usize) -> usize {
        self.partner[arc]
    }

    /// Pairs `(p, q)` with `p < q`, in increasing order of `p`.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        (0..self.partner.len()).filter(|&p| p < self.partner[p]).map(|p| (p, self.partner[p])).collect()
    }

    fn validate(&self, arcs: &ArcSystem) -> Result<(), CertError> {
        if self.partner.len() != arcs.arc_count() {
            return Err(CertError::InvalidMatching(format!(
                "{} partners for {} arcs",
                self.partner.len(),
                arcs.arc_count()
            )));
        }
        for (p, &q) in self.partner.iter().enumerate() {
            if q >= self.partner.len() || q == p || self.partner[q] != p {
                return Err(CertError::InvalidMatching(format!("arc {p} is not properly paired")));
            }
            if arcs.label(q) != arcs.label(p).inverse() {
                return Err(CertError::InvalidMatching(format!(
                    "arcs {p} ({}) and {q} ({}) do not carry inverse labels",
                    arcs.label(p),
                    arcs.label(q)
                )));
            }
        }
        Ok(())
    }
}

/// Number of cycles of the corner permutation `after p -> before partner(p)`.
pub fn corner_orbits(arcs: &ArcSystem, m: &Matching) -> usize {
    let n = arcs.arc_count();
    let mut seen = vec![false; n];
    let mut orbits = 0;
    for start in 0..n {
        if seen[start] {
            continue;
        }
        orbits += 1;
        let mut g = start;
        while !seen[g] {
            seen[g] = true;
            g = arcs.prev(m.partner(g));
        }
    }
    orbits
}

/// `#corner orbits - #pairs`.
pub fn euler_characteristic(arcs: &ArcSystem, m: &Matching) -> Result<i64, CertError> {
    m.validate(arcs)?;
    Ok(corner_orbits(arcs, m) as i64 - (arcs.arc_count() / 2) as i64)
}

/// Builds the band surface as a cell complex (rectangles, plus each polygon
/// coned off into one triangle per rectangle end and per corner) and counts
/// `V - E + F`. The cone points are identified only through local gluings.
pub fn band_complex(arcs: &ArcSystem, m: &Matching) -> Result<CellComplex, CertError> {
    use EdgeKind::{Boundary, Glued};
    m.validate(arcs)?;
    let n = arcs.arc_count();
    let mut cx = CellComplex::new();
    // spoke_out[p]: wedge spoke leaving the end of arc p; spoke_in[p]: wedge spoke into the start of p
    let mut spoke_at_end = vec![(0, 0); n];
    let mut spoke_at_start = vec![(0, 0); n];
    for (p, q) in m.pairs() {
        let rect = cx.add_face(vec![Boundary(Some(arcs.label(p))), Glued, Boundary(Some(arcs.label(q))), Glued]);
        // rectangle end (end of x -> start of y) and its wedge (start of y -> end of x -> cone -> start of y)
        for (edge, x, y) in [(1, p, q), (3, q, p)] {
            let wedge = cx.add_face(vec![Glued, Glued, Glued]);
            cx.glue((rect, edge), (wedge, 0));
            spoke_at_end[x] = (wedge, 1);
            spoke_at_start[y] = (wedge, 2);
        }
    }
    for p in 0..n {
        // corner after p: end of p -> start of next(p) -> cone -> end of p
        let corner = cx.add_face(vec![Boundary(None), Glued, Glued]);
        cx.glue(spoke_at_end[p], (corner, 2));
        cx.glue(spoke_at_start[arcs.next(p)], (corner, 1));
    }
    Ok(cx)
}

pub fn euler_characteristic_cells(arcs: &ArcSystem, m: &Matching) -> Result<i64, CertError> {
    band_complex(arcs, m)?.euler_characteristic().map_err(CertError::InvalidMatching)
}

/// Canonical chain represented by the boundary cycles.
pub fn boundary_chain(arcs: &ArcSystem) -> Chain {
    Chain::new(arcs.rank, arcs.cycles.iter().map(|w| (Rational::one(), w.clone())))
        .expect("cycles share the arc system rank")
        .canonicalize()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    LinearProgram,
    ArcMatching,
}

/// Surface with Euler characteristic `euler_characteristic` whose boundary is
/// `boundary`, stated as `degree` times some base chain.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceCertificate {
    pub euler_characteristic: i64,
    pub degree: u64,
    pub boundary: Chain,
    pub provenance: Provenance,
}

impl SurfaceCertificate {
    pub fn from_band(arcs: &ArcSystem, m: &Matching) -> Result<Self, CertError> {
        Ok(SurfaceCertificate {
            euler_characteristic: euler_characteristic(arcs, m)?,
            degree: 1,
            boundary: boundary_chain(arcs),
            provenance: Provenance::ArcMatching,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extremality {
    /// Boundary over chain.
    pub degree: Rational,
    pub ratio: Rational,
    pub scl: Rational,
    pub extremal: bool,
}

/// `-chi / (2n)` where the certificate boundary is `n` times `chain`, compared
/// against the exact scl of `chain`.
pub fn extremality_ratio(cert: &SurfaceCertificate, chain: &Chain, limits: &Limits) -> Result<Extremality, CertError> {
    let degree = boundary_degree(&cert.boundary, chain)?;
    let two = Rational::from_integer(BigInt::from(2));
    let ratio = Rational::from_integer(BigInt::from(-cert.euler_characteristic)) / (two * &degree);
    let scl = sclenc::scl(chain, limits)?;
    let extremal = ratio == scl;
    Ok(Extremality { degree, ratio, scl, extremal })
}

/// The positive `n` with `boundary = n * chain` in normal form.
pub fn boundary_degree(boundary: &Chain, chain: &Chain) -> Result<Rational, CertError> {
    let mismatch = || CertError::BoundaryMismatch { boundary: boundary.to_string(), chain: chain.to_string() };
    let b = boundary.canonicalize();
    let c = chain.canonicalize();
    let (Some(bt), Some(ct)) = (b.terms().first(), c.terms().first()) else {
        return Err(mismatch());
    };
    let n = &bt.coefficient / &ct.coefficient;
    if !n.is_positive() || b != c.scale(&n).canonicalize() {
        return Err(mismatch());
    }
    Ok(n)
}

#[derive(Debug, Clone, Copy)]
pub struct SearchLimits {
    /// Arc count up to which the search is expected to finish.
    pub max_exact_arcs: usize,
    /// Hard cap on the number of arcs handed to the search.
    pub max_arcs: usize,
    /// Search nodes per arc system before falling back to the best found so far.
    pub max_nodes: u64,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits { max_exact_arcs: 24, max_arcs: 48, max_nodes: 20_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestMatching {
    pub matching: Matching,
    pub euler_characteristic: i64,
    /// False when the node budget ran out; the matching is still valid.
    pub exhaustive: bool,
}

/// Best `(orbits, partner)` found under one first choice, and whether the branch finished.
type BranchResult = (Option<(usize, Vec<usize>)>, bool);

/// Matching with the most corner orbits (hence the largest `chi`). Ties go to
/// the lexicographically first partner assignment. `None` if no perfect
/// matching of inverse labels exists.
pub fn best_matching(arcs: &ArcSystem, limits: &SearchLimits) -> Result<Option<BestMatching>, CertError> {
    let n = arcs.arc_count();
    if n > limits.max_arcs {
        return Err(CertError::ResourceLimit(format!("{n} arcs exceed the cap of {}", limits.max_arcs)));
    }
    if n == 0 {
        return Ok(Some(BestMatching {
            matching: Matching { partner: Vec::new() },
            euler_characteristic: 0,
            exhaustive: true,
        }));
    }
    let labels: Vec<Letter> = (0..n).map(|p| arcs.label(p)).collect();
    let prev: Vec<usize> = (0..n).map(|p| arcs.prev(p)).collect();
    let mut counts: HashMap<Letter, i64> = HashMap::new();
    for l in &labels {
        *counts.entry(*l).or_default() += 1;
    }
    if counts.iter().any(|(l, c)| counts.get(&l.inverse()).copied().unwrap_or(0) != *c) {
        return Ok(None);
    }
    let first_choices: Vec<usize> = (1..n).filter(|&q| labels[q] == labels[0].inverse()).collect();
    let per_branch = (limits.max_nodes / first_choices.len().max(1) as u64).max(1);
    let results: Vec<BranchResult> = first_choices
        .par_iter()
        .map(|&q| {
            let mut s = Search::new(&labels, &prev, per_branch);
            s.pair(0, q);
            s.dfs();
            (s.best, s.aborted)
        })
        .collect();
    let exhaustive = results.iter().all(|(_, aborted)| !aborted);
    let mut best: Option<(usize, Vec<usize>)> = None;
    for (found, _) in results {
        if let Some((orbits, partner)) = found {
            if best.as_ref().is_none_or(|(b, _)| orbits > *b) {
                best = Some((orbits, partner));
            }
        }
    }
    match best {
        Some((orbits, partner)) => {
            let matching = Matching::new(arcs, partner)?;
            Ok(Some(BestMatching { matching, euler_characteristic: orbits as i64 - (n / 2) as i64, exhaustive }))
        }
        None if exhaustive => Ok(None),
        None => Err(CertError::ResourceLimit("node budget exhausted before any complete matching".into())),
    }
}

/// Depth-first search over matchings, tracking the corner permutation as a
/// set of open paths and closed cycles.
struct Search<'a> {
    labels: &'a [Letter],
    prev: &'a [usize],
    partner: Vec<usize>,
    head_of_tail: Vec<usize>,
    tail_of_head: Vec<usize>,
    len_of_head: Vec<usize>,
    closed: usize,
    closed_gaps: usize,
    undo: Vec<Undo>,
    best: Option<(usize, Vec<usize>)>,
    nodes: u64,
    max_nodes: u64,
    aborted: bool,
}

enum Undo {
    Closed { len: usize },
    Merged { head: usize, old_tail: usize, tail: usize, old_head: usize, old_len: usize },
}

const UNMATCHED: usize = usize::MAX;

impl<'a> Search<'a> {
    fn new(labels: &'a [Letter], prev: &'a [usize], max_nodes: u64) -> Self {
        let n = labels.len();
        Search {
            labels,
            prev,
            partner: vec![UNMATCHED; n],
            head_of_tail: (0..n).collect(),
            tail_of_head: (0..n).collect(),
            len_of_head: vec![1; n],
            closed: 0,
            closed_gaps: 0,
            undo: Vec::new(),
            best: None,
            nodes: 0,
            max_nodes,
            aborted: false,
        }
    }

    /// Corner permutation edge `x -> y`; `x` is a path tail, `y` a path head.
    fn link(&mut self, x: usize, y: usize) {
        let head = self.head_of_tail[x];
        if head == y {
            let len = self.len_of_head[head];
            self.closed += 1;
            self.closed_gaps += len;
            self.undo.push(Undo::Closed { len });
        } else {
            let tail = self.tail_of_head[y];
            self.undo.push(Undo::Merged {
                head,
                old_tail: self.tail_of_head[head],
                tail,
                old_head: self.head_of_tail[tail],
                old_len: self.len_of_head[head],
            });
            self.len_of_head[head] += self.len_of_head[y];
            self.tail_of_head[head] = tail;
            self.head_of_tail[tail] = head;
        }
    }

    fn unlink(&mut self) {
        match self.undo.pop().expect("unlink without link") {
            Undo::Closed { len } => {
                self.closed -= 1;
                self.closed_gaps -= len;
            }
            Undo::Merged { head, old_tail, tail, old_head, old_len } => {
                self.tail_of_head[head] = old_tail;
                self.head_of_tail[tail] = old_head;
                self.len_of_head[head] = old_len;
            }
        }
    }

    fn pair(&mut self, p: usize, q: usize) {
        self.partner[p] = q;
        self.partner[q] = p;
        self.link(p, self.prev[q]);
        self.link(q, self.prev[p]);
    }

    fn unpair(&mut self, p: usize, q: usize) {
        self.unlink();
        self.unlink();
        self.partner[p] = UNMATCHED;
        self.partner[q] = UNMATCHED;
    }

    fn upper_bound(&self) -> usize {
        self.closed + (self.labels.len() - self.closed_gaps) / 2
    }

    fn dfs(&mut self) {
        self.nodes += 1;
        if self.nodes > self.max_nodes {
            self.aborted = true;
            return;
        }
        if let Some((best, _)) = &self.best {
            if self.upper_bound() <= *best {
                return;
            }
        }
        let Some(p) = self.partner.iter().position(|&x| x == UNMATCHED) else {
            self.best = Some((self.closed, self.partner.clone()));
            return;
        };
        let want = self.labels[p].inverse();
        for q in p + 1..self.labels.len() {
            if self.partner[q] != UNMATCHED || self.labels[q] != want {
                continue;
            }
            self.pair(p, q);
            self.dfs();
            self.unpair(p, q);
            if self.aborted {
                return;
            }
        }
    }
}

/// Best band surface found over all degree-`degree` boundary configurations
/// of the prepared chain.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchingSearch {
    pub arcs: ArcSystem,
    pub matching: Matching,
    pub euler_characteristic: i64,
    pub degree: u64,
    /// `-chi / (2 * degree * scale)`: an upper bound for scl of the input chain.
    pub bound: Rational,
    pub exhaustive: bool,
}

/// Searches every way of covering `degree` times the prepared chain by
/// boundary cycles (each class `w` with weight `c` split into powers
/// `w^k` summing to `degree * c`) and every matching of their arcs.
pub fn search_matching(chain: &Chain, degree: u64, limits: &SearchLimits) -> Result<MatchingSearch, CertError> {
    if degree == 0 {
        return Err(CertError::InvalidArcs("degree must be positive".into()));
    }
    let prepared = sclenc::prepare(chain)?;
    let rank = prepared.chain.rank();
    let total: BigInt =
        prepared.chain.terms().iter().map(|t| t.coefficient.to_integer() * BigInt::from(t.word.len())).sum::<BigInt>()
            * BigInt::from(degree);
    if total > BigInt::from(limits.max_arcs) {
        return Err(CertError::ResourceLimit(format!("{total} arcs exceed the cap of {}", limits.max_arcs)));
    }
    let per_term: Vec<Vec<Vec<u64>>> = prepared
        .chain
        .terms()
        .iter()
        .map(|t| {
            let c: u64 = t.coefficient.to_integer().try_into().expect("bounded by the arc cap");
            partitions(c * degree)
        })
        .collect();
    let mut best: Option<MatchingSearch> = None;
    let mut choice = vec![0usize; per_term.len()];
    loop {
        let mut cycles = Vec::new();
        for (i, t) in prepared.chain.terms().iter().enumerate() {
            for &k in &per_term[i][choice[i]] {
                cycles.push(t.word.pow(k as i64));
            }
        }
        let arcs = ArcSystem::new(rank, cycles)?;
        if let Some(found) = best_matching(&arcs, limits)? {
            let better = best.as_ref().is_none_or(|b| found.euler_characteristic > b.euler_characteristic);
            let exhaustive = found.exhaustive && best.as_ref().is_none_or(|b| b.exhaustive);
            if better {
                let denom = Rational::from_integer(BigInt::from(2 * degree) * &prepared.scale);
                best = Some(MatchingSearch {
                    bound: Rational::from_integer(BigInt::from(-found.euler_characteristic)) / denom,
                    arcs,
                    matching: found.matching,
                    euler_characteristic: found.euler_characteristic,
                    degree,
                    exhaustive,
                });
            } else if let Some(b) = best.as_mut() {
                b.exhaustive = exhaustive;
            }
        }
        // odometer over partition choices
        let mut i = 0;
        loop {
            if i == choice.len() {
                return best.ok_or_else(|| CertError::InvalidArcs("no perfect matching exists".into()));
            }
            choice[i] += 1;
            if choice[i] < per_term[i].len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

/// Integer partitions of `n` as nonincreasing part lists.
fn partitions(n: u64) -> Vec<Vec<u64>> {
    fn go(n: u64, max: u64, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if n == 0 {
            out.push(cur.clone());
            return;
        }
        for k in (1..=n.min(max)).rev() {
            cur.push(k);
            go(n - k, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(n, n, &mut Vec::new(), &mut out);
    out
}

/// Line-based certificate file:
///
/// ```text
/// rank 2
/// cycle 0: a b A B
/// pair 0.0 0.2
/// pair 0.1 0.3
/// chain abAB
/// degree 1
/// ```
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CertificateFile {
    pub rank: usize,
    pub cycles: Vec<Word>,
    /// `((cycle, arc), (cycle, arc))` references.
    pub pairs: Vec<((usize, usize), (usize, usize))>,
    pub chain: Option<String>,
    pub degree: Option<u64>,
}

impl CertificateFile {
    pub fn from_matching(arcs: &ArcSystem, m: &Matching) -> Self {
        CertificateFile {
            rank: arcs.rank(),
            cycles: arcs.cycles().to_vec(),
            pairs: m.pairs().into_iter().map(|(p, q)| (arcs.locate(p), arcs.locate(q))).collect(),
            chain: None,
            degree: None,
        }
    }

    pub fn arc_system(&self) -> Result<ArcSystem, CertError> {
        ArcSystem::new(self.rank, self.cycles.clone())
    }

    /// The matching, if the file lists any pairs.
    pub fn matching(&self, arcs: &ArcSystem) -> Result<Option<Matching>, CertError> {
        if self.pairs.is_empty() {
            return Ok(None);
        }
        let resolve = |(c, i): (usize, usize)| {
            arcs.arc(c, i).ok_or_else(|| CertError::InvalidMatching(format!("no arc {c}.{i}")))
        };
        let pairs =
            self.pairs.iter().map(|&(a, b)| Ok((resolve(a)?, resolve(b)?))).collect::<Result<Vec<_>, CertError>>()?;
        Matching::from_pairs(arcs, &pairs).map(Some)
    }

    pub fn parse(text: &str) -> Result<Self, CertError> {
        let err = |line: usize, message: &str| CertError::Format { line, message: message.to_string() };
        let mut rank = None;
        let mut cycles = Vec::new();
        let mut pairs = Vec::new();
        let mut chain = None;
        let mut degree = None;
        for (k, raw) in text.lines().enumerate() {
            let line_no = k + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
            match key {
                "rank" => {
                    rank = Some(rest.trim().parse::<usize>().map_err(|_| err(line_no, "bad rank"))?);
                }
                "cycle" => {
                    let r = rank.ok_or_else(|| err(line_no, "cycle before rank"))?;
                    let (id, letters) =
                        rest.split_once(':').ok_or_else(|| err(line_no, "expected 'cycle <id>: ...'"))?;
                    let id: usize = id.trim().parse().map_err(|_| err(line_no, "bad cycle id"))?;
                    if id != cycles.len() {
                        return Err(err(line_no, "cycle ids must be 0, 1, 2, ... in order"));
                    }
                    let mut ls = Vec::new();
                    for tok in letters.split_whitespace() {
                        let mut chars = tok.chars();
                        match (chars.next(), chars.next()) {
                            (Some(c), None) => ls.push(Letter::from_char(c).map_err(|e| err(line_no, &e.to_string()))?),
                            _ => return Err(err(line_no, "letters are single characters")),
                        }
                    }
                    cycles.push(Word::new(ls, r).map_err(|e| err(line_no, &e.to_string()))?);
                }
                "pair" => {
                    let refs: Vec<&str> = rest.split_whitespace().collect();
                    if refs.len() != 2 {
                        return Err(err(line_no, "expected 'pair <c>.<i> <c>.<i>'"));
                    }
                    let parse_ref = |s: &str| -> Result<(usize, usize), CertError> {
                        let (c, i) =
                            s.split_once('.').ok_or_else(|| err(line_no, "arc reference is <cycle>.<index>"))?;
                        Ok((
                            c.parse().map_err(|_| err(line_no, "bad cycle in arc reference"))?,
                            i.parse().map_err(|_| err(line_no, "bad index in arc reference"))?,
                        ))
                    };
                    pairs.push((parse_ref(refs[0])?, parse_ref(refs[1])?));
                }
                "chain" => chain = Some(rest.trim().to_string()),
                "degree" => {
                    degree = Some(rest.trim().parse::<u64>().map_err(|_| err(line_no, "bad degree"))?);
                }
                _ => return Err(err(line_no, &format!("unknown directive '{key}'"))),
            }
        }
        let rank = rank.ok_or_else(|| err(0, "missing rank line"))?;
        Ok(CertificateFile { rank, cycles, pairs, chain, degree })
    }
}

impl fmt::Display for CertificateFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rank {}", self.rank)?;
        for (i, w) in self.cycles.iter().enumerate() {
            write!(f, "cycle {i}:")?;
            for l in w.letters() {
                write!(f, " {l}")?;
            }
            writeln!(f)?;
        }
        for ((c1, i1), (c2, i2)) in &self.pairs {
            writeln!(f, "pair {c1}.{i1} {c2}.{i2}")?;
        }
        if let Some(c) = &self.chain {
            writeln!(f, "chain {c}")?;
        }
        if let Some(d) = self.degree {
            writeln!(f, "degree {d}")?;
        }
        Ok(())
    }
}

/// Degree check helper: true when `k` is a positive integer.
pub fn is_positive_integer(k: &Rational) -> bool {
    k.is_integer() && k.is_positive() && !k.is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arcs(rank: usize, cycles: &[&str]) -> ArcSystem {
        ArcSystem::new(rank, cycles.iter().map(|c| Word::parse(c, rank).unwrap()).collect()).unwrap()
    }

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn torus_and_annulus() {
        let a = arcs(2, &["abAB"]);
        let m = Matching::from_pairs(&a, &[(0, 2), (1, 3)]).unwrap();
        assert_eq!(euler_characteristic(&a, &m).unwrap(), -1);
        assert_eq!(euler_characteristic_cells(&a, &m).unwrap(), -1);
        let a = arcs(1, &["a", "A"]);
        let m = Matching::from_pairs(&a, &[(0, 1)]).unwrap();
        assert_eq!(euler_characteristic(&a, &m).unwrap(), 0);
        assert_eq!(euler_characteristic_cells(&a, &m).unwrap(), 0);
    }

    #[test]
    fn band_complex_boundary_reads_cycles() {
        let a = arcs(2, &["abAB", "a", "b", "BA"]);
        let m = Matching::from_pairs(&a, &[(0, 2), (1, 3), (4, 7), (5, 6)]).unwrap();
        let cx = band_complex(&a, &m).unwrap();
        let chain = Chain::new(2, cx.boundary_words(2).unwrap().into_iter().map(|w| (Rational::one(), w))).unwrap();
        assert_eq!(chain.canonicalize(), boundary_chain(&a));
    }

    #[test]
    fn invalid_matchings_rejected() {
        let a = arcs(2, &["abAB"]);
        assert!(Matching::from_pairs(&a, &[(0, 1), (2, 3)]).is_err());
        assert!(Matching::from_pairs(&a, &[(0, 2)]).is_err());
        assert!(Matching::from_pairs(&a, &[(0, 2), (0, 2)]).is_err());
        assert!(ArcSystem::new(2, vec![Word::parse("aA", 2).unwrap()]).is_err());
    }

    #[test]
    fn boundary_chain_examples() {
        let a = arcs(2, &["abABabAB", "abABabAB", "BA", "BA", "aa", "bb"]);
        assert_eq!(
            boundary_chain(&a),
            Chain::from_pairs(2, &[(4, "abAB"), (2, "a"), (2, "b"), (-2, "ab")]).unwrap().canonicalize()
        );
        assert_eq!(boundary_chain(&arcs(2, &["abAB"])), Chain::from_pairs(2, &[(1, "abAB")]).unwrap());
        assert!(boundary_chain(&arcs(1, &["a", "A"])).is_empty());
    }

    #[test]
    fn extremality_of_torus_and_suboptimal_matching() {
        let limits = Limits::default();
        let chain = Chain::from_pairs(2, &[(1, "abAB")]).unwrap();
        let a = arcs(2, &["abAB"]);
        let m = Matching::from_pairs(&a, &[(0, 2), (1, 3)]).unwrap();
        let e = extremality_ratio(&SurfaceCertificate::from_band(&a, &m).unwrap(), &chain, &limits).unwrap();
        assert_eq!((e.ratio.clone(), e.extremal), (q(1, 2), true));
        // aabbAABB with parallel bands: one corner orbit, chi = -3
        let chain = Chain::from_pairs(2, &[(1, "aabbAABB")]).unwrap();
        let a = arcs(2, &["aabbAABB"]);
        let m = Matching::from_pairs(&a, &[(0, 4), (1, 5), (2, 6), (3, 7)]).unwrap();
        let cert = SurfaceCertificate::from_band(&a, &m).unwrap();
        assert_eq!(cert.euler_characteristic, -3);
        let e = extremality_ratio(&cert, &chain, &limits).unwrap();
        assert_eq!((e.degree.clone(), e.ratio.clone(), e.scl.clone()), (q(1, 1), q(3, 2), q(1, 2)));
        assert!(!e.extremal);
    }

    #[test]
    fn boundary_mismatch() {
        let a = arcs(2, &["abAB"]);
        let m = Matching::from_pairs(&a, &[(0, 2), (1, 3)]).unwrap();
        let cert = SurfaceCertificate::from_band(&a, &m).unwrap();
        let other = Chain::from_pairs(2, &[(1, "aabbAABB")]).unwrap();
        assert!(matches!(
            extremality_ratio(&cert, &other, &Limits::default()),
            Err(CertError::BoundaryMismatch { .. })
        ));
    }

    #[test]
    fn search_small_corpus() {
        let limits = SearchLimits::default();
        let cases: [(&[(i64, &str)], Rational); 4] = [
            (&[(1, "abAB")], q(1, 2)),
            (&[(1, "a"), (1, "b"), (1, "BA")], q(1, 2)),
            (&[(1, "abABAbaB")], q(1, 2)),
            (&[(1, "a"), (1, "A")], q(0, 1)),
        ];
        for (pairs, expected) in cases {
            let chain = Chain::from_pairs(2, pairs).unwrap();
            let found = search_matching(&chain, 1, &limits).unwrap();
            assert_eq!(found.bound, expected, "{chain}");
            assert!(found.exhaustive);
        }
    }

    #[test]
    fn partitions_enumerated() {
        assert_eq!(partitions(3), vec![vec![3], vec![2, 1], vec![1, 1, 1]]);
        assert_eq!(partitions(4).len(), 5);
    }

    #[test]
    fn certificate_file_round_trip() {
        let text = "rank 2\ncycle 0: a b A B\npair 0.0 0.2\npair 0.1 0.3\nchain abAB\ndegree 1\n";
        let file = CertificateFile::parse(text).unwrap();
        assert_eq!(file.to_string(), text);
        let a = file.arc_system().unwrap();
        let m = file.matching(&a).unwrap().unwrap();
        assert_eq!(euler_characteristic(&a, &m).unwrap(), -1);
        assert!(matches!(CertificateFile::parse("rank 2\nfoo\n"), Err(CertError::Format { line: 2, .. })));
        assert!(matches!(CertificateFile::parse("rank 2\ncycle 0: ab\n"), Err(CertError::Format { line: 2, .. })));
    }
}
