//! Words, conjugacy classes and rational chains in a free group of explicit rank.
//!
//! Generators are written `a, b, c, ...` and their inverses `A, B, C, ...`.
//! Chains live in the space of group 1-boundaries modulo powers and
//! conjugation, so a class `g^n` is identified with `n * g` and `g^-1` with `-g`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::Rational;

/// Highest rank that still has single-character letter names.
pub const MAX_RANK: usize = 26;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupError {
    #[error("generator {generator} out of range for rank {rank}")]
    LetterOutOfRange { generator: usize, rank: usize },
    #[error("rank mismatch: {left} vs {right}")]
    RankMismatch { left: usize, right: usize },
    #[error("rank {0} exceeds the supported maximum of {MAX_RANK}")]
    RankOverflow(usize),
    #[error("'{0}' is not a generator letter")]
    InvalidLetter(char),
    #[error("empty sequence of words")]
    EmptySequence,
}

/// A generator or its inverse. Ordered by `(generator, inverse)`, so `a < A < b < B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    generator: u8,
    inverse: bool,
}

impl Letter {
    /// `generator` is 1-based.
    pub fn new(generator: usize, inverse: bool) -> Self {
        assert!((1..=MAX_RANK).contains(&generator), "generator index {generator}");
        Letter { generator: generator as u8, inverse }
    }

    pub fn from_char(c: char) -> Result<Self, GroupError> {
        match c {
            'a'..='z' => Ok(Letter::new((c as u8 - b'a') as usize + 1, false)),
            'A'..='Z' => Ok(Letter::new((c as u8 - b'A') as usize + 1, true)),
            _ => Err(GroupError::InvalidLetter(c)),
        }
    }

    pub fn to_char(self) -> char {
        let base = if self.inverse { b'A' } else { b'a' };
        (base + self.generator - 1) as char
    }

    pub fn generator(self) -> usize {
        self.generator as usize
    }

    pub fn is_inverse(self) -> bool {
        self.inverse
    }

    /// +1 for a generator, -1 for an inverse.
    pub fn sign(self) -> i64 {
        if self.inverse {
            -1
        } else {
            1
        }
    }

    pub fn inverse(self) -> Self {
        Letter { generator: self.generator, inverse: !self.inverse }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

/// A (not necessarily reduced) word in the free group of rank `rank`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word {
    letters: Vec<Letter>,
    rank: usize,
}

impl Word {
    pub fn new(letters: Vec<Letter>, rank: usize) -> Result<Self, GroupError> {
        if rank > MAX_RANK {
            return Err(GroupError::RankOverflow(rank));
        }
        if let Some(l) = letters.iter().find(|l| l.generator() > rank) {
            return Err(GroupError::LetterOutOfRange { generator: l.generator(), rank });
        }
        Ok(Word { letters, rank })
    }

    pub fn identity(rank: usize) -> Self {
        Word { letters: Vec::new(), rank }
    }

    /// Parses a plain letter string such as `"abAB"`.
    pub fn parse(s: &str, rank: usize) -> Result<Self, GroupError> {
        let letters = s.chars().map(Letter::from_char).collect::<Result<Vec<_>, _>>()?;
        Word::new(letters, rank)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_reduced(&self) -> bool {
        self.letters.windows(2).all(|w| w[0] != w[1].inverse())
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        self.is_reduced()
            && match (self.letters.first(), self.letters.last()) {
                (Some(&f), Some(&l)) => self.len() == 1 || f != l.inverse(),
                _ => true,
            }
    }

    /// Free reduction.
    pub fn reduce(&self) -> Word {
        let mut out: Vec<Letter> = Vec::with_capacity(self.letters.len());
        for &l in &self.letters {
            if out.last() == Some(&l.inverse()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word { letters: out, rank: self.rank }
    }

    /// Returns `(core, conjugator)` with `core` cyclically reduced and
    /// `self = conjugator * core * conjugator^-1` in the group.
    pub fn cyclic_reduce(&self) -> (Word, Word) {
        let reduced = self.reduce();
        let n = reduced.len();
        let mut k = 0;
        while 2 * k + 1 < n && reduced.letters[k] == reduced.letters[n - 1 - k].inverse() {
            k += 1;
        }
        let core = reduced.letters[k..n - k].to_vec();
        let conjugator = reduced.letters[..k].to_vec();
        (Word { letters: core, rank: self.rank }, Word { letters: conjugator, rank: self.rank })
    }

    /// Reduced inverse.
    pub fn inverse(&self) -> Word {
        let letters = self.letters.iter().rev().map(|l| l.inverse()).collect();
        Word { letters, rank: self.rank }.reduce()
    }

    /// `self = root^exponent` with `root` not a proper power. Expects a
    /// nonempty cyclically reduced word.
    pub fn primitive_root(&self) -> (Word, usize) {
        let n = self.len();
        for d in 1..=n {
            if !n.is_multiple_of(d) {
                continue;
            }
            if (d..n).all(|i| self.letters[i] == self.letters[i - d]) {
                let root = Word { letters: self.letters[..d].to_vec(), rank: self.rank };
                return (root, n / d);
            }
        }
        (self.clone(), 1)
    }

    /// Lexicographically least cyclic rotation.
    pub fn least_rotation(&self) -> Word {
        let n = self.len();
        let mut best = self.letters.clone();
        for s in 1..n {
            let rotated: Vec<Letter> = self.letters[s..].iter().chain(&self.letters[..s]).copied().collect();
            if rotated < best {
                best = rotated;
            }
        }
        Word { letters: best, rank: self.rank }
    }

    pub fn rotate(&self, shift: usize) -> Word {
        let n = self.len();
        if n == 0 {
            return self.clone();
        }
        let s = shift % n;
        let letters = self.letters[s..].iter().chain(&self.letters[..s]).copied().collect();
        Word { letters, rank: self.rank }
    }

    /// Canonical representative of the conjugacy class: cyclic reduction
    /// followed by the least rotation.
    pub fn conjugacy_representative(&self) -> Word {
        self.cyclic_reduce().0.least_rotation()
    }

    /// Reduced product.
    pub fn concat(&self, other: &Word) -> Result<Word, GroupError> {
        check_rank(self.rank, other.rank)?;
        let letters = self.letters.iter().chain(&other.letters).copied().collect();
        Ok(Word { letters, rank: self.rank }.reduce())
    }

    /// Reduced power; negative exponents invert.
    pub fn pow(&self, n: i64) -> Word {
        let base = if n < 0 { self.inverse() } else { self.reduce() };
        let mut letters = Vec::with_capacity(base.len() * n.unsigned_abs() as usize);
        for _ in 0..n.unsigned_abs() {
            letters.extend_from_slice(&base.letters);
        }
        Word { letters, rank: self.rank }.reduce()
    }

    /// Same letters viewed in a larger ambient rank.
    pub fn with_rank(&self, rank: usize) -> Result<Word, GroupError> {
        Word::new(self.letters.clone(), rank)
    }

    pub fn exponent_sums(&self) -> Vec<i64> {
        let mut sums = vec![0i64; self.rank];
        for l in &self.letters {
            sums[l.generator() - 1] += l.sign();
        }
        sums
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.letters.cmp(&other.letters).then(self.rank.cmp(&other.rank))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.letters {
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

fn check_rank(left: usize, right: usize) -> Result<(), GroupError> {
    if left == right {
        Ok(())
    } else {
        Err(GroupError::RankMismatch { left, right })
    }
}

/// `coefficient * [word]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainTerm {
    pub coefficient: Rational,
    pub word: Word,
}

/// Finite rational combination of conjugacy classes.
///
/// Terms are kept as given; [`Chain::canonicalize`] produces the normal form
/// in which every class is primitive, appears once, and never together with
/// its inverse class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chain {
    terms: Vec<ChainTerm>,
    rank: usize,
}

impl Chain {
    pub fn zero(rank: usize) -> Self {
        Chain { terms: Vec::new(), rank }
    }

    pub fn new<I>(rank: usize, terms: I) -> Result<Self, GroupError>
    where
        I: IntoIterator<Item = (Rational, Word)>,
    {
        if rank > MAX_RANK {
            return Err(GroupError::RankOverflow(rank));
        }
        let mut out = Vec::new();
        for (coefficient, word) in terms {
            check_rank(rank, word.rank())?;
            out.push(ChainTerm { coefficient, word });
        }
        Ok(Chain { terms: out, rank })
    }

    /// Single class with coefficient one.
    pub fn from_word(word: Word) -> Self {
        let rank = word.rank();
        Chain { terms: vec![ChainTerm { coefficient: Rational::one(), word }], rank }
    }

    /// Convenience for integer coefficients and plain letter strings.
    pub fn from_pairs(rank: usize, pairs: &[(i64, &str)]) -> Result<Self, GroupError> {
        let terms = pairs
            .iter()
            .map(|&(c, w)| Ok((Rational::from_integer(c.into()), Word::parse(w, rank)?)))
            .collect::<Result<Vec<_>, GroupError>>()?;
        Chain::new(rank, terms)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn terms(&self) -> &[ChainTerm] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total number of letters over all terms.
    pub fn letter_count(&self) -> usize {
        self.terms.iter().map(|t| t.word.len()).sum()
    }

    pub fn add(&self, other: &Chain) -> Result<Chain, GroupError> {
        check_rank(self.rank, other.rank)?;
        let terms = self.terms.iter().chain(&other.terms).cloned().collect();
        Ok(Chain { terms, rank: self.rank })
    }

    pub fn scale(&self, k: &Rational) -> Chain {
        let terms =
            self.terms.iter().map(|t| ChainTerm { coefficient: &t.coefficient * k, word: t.word.clone() }).collect();
        Chain { terms, rank: self.rank }
    }

    /// Orientation reversal: every class replaced by its inverse class.
    pub fn reversed(&self) -> Chain {
        let terms = self
            .terms
            .iter()
            .map(|t| ChainTerm { coefficient: t.coefficient.clone(), word: t.word.inverse() })
            .collect();
        Chain { terms, rank: self.rank }
    }

    pub fn with_rank(&self, rank: usize) -> Result<Chain, GroupError> {
        let terms = self
            .terms
            .iter()
            .map(|t| Ok((t.coefficient.clone(), t.word.with_rank(rank)?)))
            .collect::<Result<Vec<_>, GroupError>>()?;
        Chain::new(rank, terms)
    }

    /// Coefficient-weighted exponent sums per generator.
    pub fn abelianize(&self) -> AbelianImage {
        let mut sums = vec![Rational::zero(); self.rank];
        for t in &self.terms {
            for (s, e) in sums.iter_mut().zip(t.word.exponent_sums()) {
                *s += &t.coefficient * Rational::from_integer(e.into());
            }
        }
        AbelianImage(sums)
    }

    pub fn is_boundary(&self) -> bool {
        self.abelianize().is_zero()
    }

    /// Normal form: primitive roots, merged conjugacy classes, and each pair of
    /// mutually inverse classes collapsed onto the lexicographically smaller
    /// representative (`g^-1 = -g`). Terms are sorted by representative.
    pub fn canonicalize(&self) -> Chain {
        let mut classes: BTreeMap<Word, Rational> = BTreeMap::new();
        for t in &self.terms {
            if t.coefficient.is_zero() {
                continue;
            }
            let (core, _) = t.word.cyclic_reduce();
            if core.is_empty() {
                continue;
            }
            let (root, power) = core.primitive_root();
            let rep = root.least_rotation();
            let inv = root.inverse().least_rotation();
            let mass = &t.coefficient * Rational::from_integer((power as i64).into());
            if rep <= inv {
                *classes.entry(rep).or_insert_with(Rational::zero) += mass;
            } else {
                *classes.entry(inv).or_insert_with(Rational::zero) -= mass;
            }
        }
        let terms = classes
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(word, coefficient)| ChainTerm { coefficient, word })
            .collect();
        Chain { terms, rank: self.rank }
    }

    /// Equality in the normal form.
    pub fn equivalent(&self, other: &Chain) -> bool {
        self.rank == other.rank && self.canonicalize() == other.canonicalize()
    }
}

impl fmt::Display for Chain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            let magnitude = t.coefficient.abs();
            match (i, t.coefficient.is_negative()) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            if !magnitude.is_one() {
                write!(f, "{magnitude}*")?;
            }
            if t.word.is_empty() {
                write!(f, "1")?;
            } else {
                write!(f, "{}", t.word)?;
            }
        }
        Ok(())
    }
}

/// Image in the abelianization, one entry per generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbelianImage(pub Vec<Rational>);

impl AbelianImage {
    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }
}

/// For `g_1, ..., g_m` of rank `k`, builds `g_1 x_1 g_2 x_1^-1 ... x_{m-1} g_m x_{m-1}^-1`
/// in rank `k + m - 1`, where `x_i` is generator `k + i`. Its scl equals
/// `scl(g_1 + ... + g_m) + (m - 1)/2`.
pub fn addition_lemma_word(words: &[Word]) -> Result<Word, GroupError> {
    let first = words.first().ok_or(GroupError::EmptySequence)?;
    let rank = first.rank();
    for w in words {
        check_rank(rank, w.rank())?;
    }
    let new_rank = rank + words.len() - 1;
    if new_rank > MAX_RANK {
        return Err(GroupError::RankOverflow(new_rank));
    }
    let mut letters: Vec<Letter> = first.letters().to_vec();
    for (i, w) in words.iter().enumerate().skip(1) {
        let x = Letter::new(rank + i, false);
        letters.push(x);
        letters.extend_from_slice(w.letters());
        letters.push(x.inverse());
    }
    Word::new(letters, new_rank)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        Word::parse(s, 3).unwrap()
    }

    #[test]
    fn reduce_examples() {
        assert_eq!(w("abB").reduce(), w("a"));
        assert_eq!(w("aA").reduce(), w(""));
        assert_eq!(w("abAB").reduce(), w("abAB"));
        assert_eq!(w("abBAab").reduce(), w("ab"));
    }

    #[test]
    fn cyclic_reduce_examples() {
        assert_eq!(w("cabAC").cyclic_reduce(), (w("b"), w("ca")));
        assert_eq!(w("abAB").cyclic_reduce(), (w("abAB"), w("")));
        assert_eq!(w("Aba").cyclic_reduce(), (w("b"), w("A")));
        assert_eq!(w("aA").cyclic_reduce(), (w(""), w("")));
    }

    #[test]
    fn invert_examples() {
        assert_eq!(w("ab").inverse(), w("BA"));
        assert_eq!(w("").inverse(), w(""));
        assert_eq!(w("abAB").inverse(), w("baBA"));
    }

    #[test]
    fn primitive_root_examples() {
        assert_eq!(w("abab").primitive_root(), (w("ab"), 2));
        assert_eq!(w("abAB").primitive_root(), (w("abAB"), 1));
        assert_eq!(w("aaa").primitive_root(), (w("a"), 3));
    }

    #[test]
    fn abelianize_examples() {
        let z = Rational::zero;
        let c = Chain::from_pairs(2, &[(1, "abAB")]).unwrap();
        assert_eq!(c.abelianize().0, vec![z(), z()]);
        let c = Chain::from_pairs(2, &[(1, "ab"), (-1, "a"), (-1, "b")]).unwrap();
        assert!(c.abelianize().is_zero());
        let c = Chain::from_pairs(2, &[(1, "a"), (1, "b")]).unwrap();
        assert_eq!(c.abelianize().0, vec![Rational::one(), Rational::one()]);
    }

    #[test]
    fn canonicalize_examples() {
        let c = Chain::from_pairs(2, &[(1, "abab")]).unwrap().canonicalize();
        assert_eq!(c, Chain::from_pairs(2, &[(2, "ab")]).unwrap());
        let c = Chain::from_pairs(2, &[(1, "ab"), (1, "ba")]).unwrap().canonicalize();
        assert_eq!(c, Chain::from_pairs(2, &[(2, "ab")]).unwrap());
        let c = Chain::from_pairs(2, &[(1, "a"), (1, "A"), (1, "abAB")]).unwrap().canonicalize();
        assert_eq!(c, Chain::from_pairs(2, &[(1, "abAB")]).unwrap());
    }

    #[test]
    fn canonical_survivor_is_smaller_representative() {
        // BA ~ AB, whose inverse class ab is smaller
        let c = Chain::from_pairs(2, &[(1, "a"), (1, "b"), (1, "BA")]).unwrap().canonicalize();
        assert_eq!(c.to_string(), "a - ab + b");
        let c = Chain::from_pairs(2, &[(1, "baBA")]).unwrap().canonicalize();
        assert_eq!(c.to_string(), "-abAB");
    }

    #[test]
    fn addition_lemma_examples() {
        let g = Word::parse("abAB", 2).unwrap();
        let out = addition_lemma_word(&[g.clone(), g.clone()]).unwrap();
        assert_eq!(out, Word::parse("abABcabABC", 3).unwrap());
        assert_eq!(addition_lemma_word(std::slice::from_ref(&g)).unwrap(), g);
        let (w1, w2, w3) = (Word::parse("a", 2).unwrap(), Word::parse("b", 2).unwrap(), Word::parse("ab", 2).unwrap());
        let out = addition_lemma_word(&[w1, w2, w3]).unwrap();
        assert_eq!(out, Word::parse("acbCdabD", 4).unwrap());
        assert_eq!(addition_lemma_word(&[]), Err(GroupError::EmptySequence));
    }

    #[test]
    fn rank_is_checked() {
        assert!(matches!(Word::parse("c", 2), Err(GroupError::LetterOutOfRange { generator: 3, rank: 2 })));
        let a = Chain::from_pairs(2, &[(1, "a")]).unwrap();
        let b = Chain::from_pairs(3, &[(1, "c")]).unwrap();
        assert_eq!(a.add(&b), Err(GroupError::RankMismatch { left: 2, right: 3 }));
        assert!(Word::parse("a", 2).unwrap().concat(&Word::parse("a", 3).unwrap()).is_err());
    }

    #[test]
    fn display_of_fractions() {
        let c = Chain::new(2, vec![(Rational::new((-1).into(), 2.into()), Word::parse("abAB", 2).unwrap())]).unwrap();
        assert_eq!(c.to_string(), "-1/2*abAB");
        assert_eq!(Chain::zero(2).to_string(), "0");
    }
}
