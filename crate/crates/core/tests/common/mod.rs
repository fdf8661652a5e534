#![allow(dead_code)]

use proptest::prelude::*;
use sclkit::freegroup::{Chain, Letter, Word};
use sclkit::Rational;

/// Rank-2 boundary chains shared by the property suites.
pub const RANK2_CORPUS: &[&[(i64, &str)]] = &[
    &[(1, "abAB")],
    &[(1, "abABAbaB")],
    &[(1, "aabbAABB")],
    &[(1, "abABabAB")],
    &[(2, "abAB"), (1, "ab"), (-1, "a"), (-1, "b")],
    &[(2, "abAB"), (-1, "ab"), (1, "a"), (1, "b")],
    &[(1, "a"), (1, "b"), (1, "BA")],
    &[(1, "ab"), (-1, "a"), (-1, "b")],
    &[(1, "a"), (1, "A")],
    &[(1, "abAB"), (1, "abABAbaB")],
    &[(1, "aaBAAb")],
    &[(1, "abAB"), (1, "AbaB")],
    &[(1, "abaBAB"), (1, "A"), (1, "b")],
    &[(3, "abAB"), (1, "ab"), (-1, "a"), (-1, "b")],
    &[(1, "aabAAB")],
    &[(1, "aa"), (1, "bb"), (2, "BA")],
];

/// Chains on which the band-surface search is known to reach scl.
pub const PINNED_MATCHING_CORPUS: &[&[(i64, &str)]] =
    &[&[(1, "abAB")], &[(1, "a"), (1, "b"), (1, "BA")], &[(1, "abABAbaB")], &[(1, "a"), (1, "A")]];

pub fn chain(rank: usize, pairs: &[(i64, &str)]) -> Chain {
    Chain::from_pairs(rank, pairs).unwrap()
}

pub fn corpus() -> Vec<Chain> {
    RANK2_CORPUS.iter().map(|p| chain(2, p)).collect()
}

pub fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(n.into())
}

fn letter(code: usize) -> Letter {
    Letter::new(code / 2 + 1, code % 2 == 1)
}

/// Random rank-2 word of length `1..=max_len`, not necessarily reduced.
pub fn word(max_len: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec(0usize..4, 1..=max_len)
        .prop_map(|codes| Word::new(codes.into_iter().map(letter).collect(), 2).unwrap())
}

/// Random nonzero rank-2 boundary chain with at most `max_letters` letters in
/// normal form: a few weighted words plus single-letter terms that cancel
/// their abelian image.
pub fn boundary_chain(max_letters: usize) -> impl Strategy<Value = Chain> {
    prop::collection::vec((1i64..=3, word(5)), 1..=2)
        .prop_map(|terms| {
            let mut sums = [0i64; 2];
            let mut out: Vec<(Rational, Word)> = Vec::new();
            for (k, w) in terms {
                for (s, e) in sums.iter_mut().zip(w.exponent_sums()) {
                    *s += k * e;
                }
                out.push((int(k), w));
            }
            for (g, s) in sums.into_iter().enumerate() {
                if s != 0 {
                    let l = Letter::new(g + 1, s > 0);
                    out.push((int(s.abs()), Word::new(vec![l], 2).unwrap()));
                }
            }
            Chain::new(2, out).unwrap().canonicalize()
        })
        .prop_filter("nonzero chain of bounded size", move |c| !c.is_empty() && c.letter_count() <= max_letters)
}

/// Every cyclically reduced rank-2 word of length `1..=max_len` with zero
/// exponent sums.
pub fn commutator_words(max_len: usize) -> Vec<Word> {
    let mut out = Vec::new();
    let mut stack: Vec<Vec<usize>> = (0..4).map(|c| vec![c]).collect();
    while let Some(codes) = stack.pop() {
        let w = Word::new(codes.iter().copied().map(letter).collect(), 2).unwrap();
        if w.is_cyclically_reduced() && w.exponent_sums().iter().all(|&e| e == 0) {
            out.push(w);
        }
        if codes.len() < max_len {
            let last = *codes.last().unwrap();
            for c in 0..4 {
                if c != (last ^ 1) {
                    let mut next = codes.clone();
                    next.push(c);
                    stack.push(next);
                }
            }
        }
    }
    out
}
