//! The immersion criterion `scl(C) = rot(C)/2` on the once-punctured torus
//! and experiments built from it: stabilization by multiples of the boundary,
//! the commutator scan, and the rank-3 corollary formula.

use num_bigint::BigInt;
use num_traits::One;
use rayon::prelude::*;
use thiserror::Error;

use crate::freegroup::{Chain, GroupError, Letter, Word};
use crate::rotation::{self, PTRep, RotationError};
use crate::sclenc::{self, Limits, SclError};
use crate::Rational;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ImmersionError {
    #[error("the criterion needs a rank-2 chain, got rank {0}")]
    Rank(usize),
    #[error("chain is not a boundary")]
    NotBoundary,
    #[error("{0} must be a nontrivial element of the commutator subgroup")]
    NotCommutator(String),
    #[error("Bavard bound violated for {chain}: scl {scl} < rot/2 {half_rot}")]
    Bavard { chain: String, scl: String, half_rot: String },
    #[error("equality at R = {holds} but not at R = {fails}")]
    Tail { holds: u64, fails: u64 },
    #[error(transparent)]
    Scl(#[from] SclError),
    #[error(transparent)]
    Rotation(#[from] RotationError),
    #[error(transparent)]
    Group(#[from] GroupError),
}

impl ImmersionError {
    pub fn is_resource_limit(&self) -> bool {
        matches!(self, ImmersionError::Scl(e) if e.is_resource_limit())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionReport {
    pub chain: Chain,
    pub scl: Rational,
    pub rot: Rational,
    pub bounds_immersed: bool,
    /// Same predicate, read as membership of the chain in the face dual to rot.
    pub on_face: bool,
}

impl CriterionReport {
    pub fn half_rot(&self) -> Rational {
        &self.rot / Rational::from_integer(BigInt::from(2))
    }
}

/// Boundary of the once-punctured torus.
pub fn torus_boundary() -> Word {
    Word::parse("abAB", 2).expect("valid rank-2 word")
}

/// Exact comparison of scl with half the rotation number.
pub fn bounds_immersed(chain: &Chain, limits: &Limits) -> Result<CriterionReport, ImmersionError> {
    bounds_immersed_with(&rotation::pt_holonomy(), chain, limits)
}

pub fn bounds_immersed_with(rep: &PTRep, chain: &Chain, limits: &Limits) -> Result<CriterionReport, ImmersionError> {
    if chain.rank() != 2 {
        return Err(ImmersionError::Rank(chain.rank()));
    }
    let chain = chain.canonicalize();
    if !chain.is_boundary() {
        return Err(ImmersionError::NotBoundary);
    }
    let scl = sclenc::scl(&chain, limits)?;
    let rot = rotation::rot_chain(rep, &chain)?;
    let half_rot = &rot / Rational::from_integer(BigInt::from(2));
    if scl < half_rot {
        return Err(ImmersionError::Bavard {
            chain: chain.to_string(),
            scl: scl.to_string(),
            half_rot: half_rot.to_string(),
        });
    }
    let equal = scl == half_rot;
    Ok(CriterionReport { chain, scl, rot, bounds_immersed: equal, on_face: equal })
}

/// The criterion for `C` and for the reversed chain `C⁻`, whose rotation
/// number is negated. Both are compared against `rot/2`, never `|rot|/2`.
pub fn orientation_pair(chain: &Chain, limits: &Limits) -> Result<(CriterionReport, CriterionReport), ImmersionError> {
    let forward = bounds_immersed(chain, limits)?;
    let backward = bounds_immersed(&chain.reversed(), limits)?;
    Ok((forward, backward))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilizationReport {
    pub base: Chain,
    pub boundary: Chain,
    /// One row per `R = 0..=max_r`.
    pub rows: Vec<(u64, CriterionReport)>,
    pub minimal: Option<u64>,
}

/// The criterion on `C + R * abAB` for `R = 0..=max_r`. Equality must persist
/// once it holds; a later failure is an error.
pub fn minimal_stabilization(
    chain: &Chain,
    max_r: u64,
    limits: &Limits,
) -> Result<StabilizationReport, ImmersionError> {
    if chain.rank() != 2 {
        return Err(ImmersionError::Rank(chain.rank()));
    }
    let boundary = Chain::from_word(torus_boundary());
    let rows = (0..=max_r)
        .into_par_iter()
        .map(|r| {
            let k = Rational::from_integer(BigInt::from(r));
            let c = chain.add(&boundary.scale(&k))?;
            Ok((r, bounds_immersed(&c, limits)?))
        })
        .collect::<Result<Vec<_>, ImmersionError>>()?;
    let minimal = rows.iter().find(|(_, rep)| rep.bounds_immersed).map(|(r, _)| *r);
    if let Some(m) = minimal {
        if let Some((r, _)) = rows.iter().find(|(r, rep)| *r > m && !rep.bounds_immersed) {
            return Err(ImmersionError::Tail { holds: m, fails: *r });
        }
    }
    Ok(StabilizationReport { base: chain.canonicalize(), boundary, rows, minimal })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanReport {
    pub word: Word,
    pub rows: Vec<(i64, CriterionReport)>,
    pub first_equal: Option<i64>,
    /// Whether equality holds at every `n` after `first_equal` in the range.
    pub persists: bool,
}

fn check_commutator(w: &Word) -> Result<Word, ImmersionError> {
    if w.rank() != 2 {
        return Err(ImmersionError::Rank(w.rank()));
    }
    let r = w.reduce();
    if r.is_empty() || r.exponent_sums().iter().any(|&e| e != 0) {
        return Err(ImmersionError::NotCommutator(w.to_string()));
    }
    Ok(r)
}

/// The criterion on the single element `w (abAB)^n` for each `n` in the range.
pub fn scan_conjecture(
    w: &Word,
    n_range: std::ops::RangeInclusive<i64>,
    limits: &Limits,
) -> Result<ScanReport, ImmersionError> {
    let w = check_commutator(w)?;
    let ns: Vec<i64> = n_range.collect();
    let rows = ns
        .par_iter()
        .map(|&n| {
            let element = w.concat(&torus_boundary().pow(n))?.reduce();
            let chain = Chain::from_word(element).canonicalize();
            Ok((n, bounds_immersed(&chain, limits)?))
        })
        .collect::<Result<Vec<_>, ImmersionError>>()?;
    let first = rows.iter().position(|(_, rep)| rep.bounds_immersed);
    let persists = first.is_some_and(|i| rows[i..].iter().all(|(_, rep)| rep.bounds_immersed));
    Ok(ScanReport { word: w, first_equal: first.map(|i| rows[i].0), persists, rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorollaryReport {
    pub word: Word,
    pub rot_w: i64,
    pub lhs: Rational,
    pub rhs: Rational,
    pub equal: bool,
}

/// scl of `(abAB)^n c w C` in rank 3 against `(|n + rot(w)| + 1) / 2`.
pub fn corollary_check(w: &Word, n: i64, limits: &Limits) -> Result<CorollaryReport, ImmersionError> {
    let w = check_commutator(w)?;
    let rot_w = rotation::rot_element(&rotation::pt_holonomy(), &w)?;
    let c = Word::new(vec![Letter::new(3, false)], 3)?;
    let word =
        torus_boundary().with_rank(3)?.pow(n).concat(&c)?.concat(&w.with_rank(3)?)?.concat(&c.inverse())?.reduce();
    let lhs = sclenc::scl(&Chain::from_word(word.clone()), limits)?;
    let rhs = Rational::new(BigInt::from((n + rot_w).abs()) + BigInt::one(), BigInt::from(2));
    let equal = lhs == rhs;
    Ok(CorollaryReport { word, rot_w, lhs, rhs, equal })
}
