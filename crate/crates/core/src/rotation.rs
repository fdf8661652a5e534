//! The rotation quasimorphism of the once-punctured torus.
//!
//! Two independent computations: the turning number of the lattice path read
//! from a word (`a` = right, `b` = up), and the translation number of a lifted
//! holonomy of a hyperbolic structure acting on the boundary circle of the
//! hyperbolic plane.
//!
//! The circle is the real projective line, parametrized by `t` in `[0, 1)`
//! through the direction at angle `-pi * t`. The sign of the angle fixes the
//! orientation so that `rot(abAB) = +1`.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::freegroup::{Chain, Letter, Word};
use crate::Rational;

/// Determinant tolerance for [`Mobius::new`].
pub const DET_TOLERANCE: f64 = 1e-12;

/// Largest distance from an integer accepted as a rotation number.
pub const INTEGRALITY_MARGIN: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RotationError {
    #[error("determinant {0} is not 1")]
    Determinant(f64),
    #[error("rotation numbers are defined on the once-punctured torus only (rank 2, got {0})")]
    Rank(usize),
    #[error("word {0} is not a closed lattice path")]
    NotClosed(String),
    #[error("word {0} is not cyclically reduced")]
    NotCyclicallyReduced(String),
    #[error("the identity has no attracting fixed point")]
    Identity,
    #[error("translation number {value} of {word} is not within {margin} of an integer")]
    Margin { word: String, value: f64, margin: f64 },
    #[error("element {0} is not hyperbolic")]
    NotHyperbolic(String),
    #[error("chain is not a boundary")]
    NotBoundary,
}

/// Element of SL(2, R) acting on the projective line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mobius {
    m: [[f64; 2]; 2],
    hyperbolic: bool,
}

impl Mobius {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self, RotationError> {
        let det = a * d - b * c;
        if (det - 1.0).abs() > DET_TOLERANCE {
            return Err(RotationError::Determinant(det));
        }
        Ok(Self::unchecked([[a, b], [c, d]]))
    }

    fn unchecked(m: [[f64; 2]; 2]) -> Self {
        Mobius { m, hyperbolic: (m[0][0] + m[1][1]).abs() > 2.0 }
    }

    pub fn identity() -> Self {
        Self::unchecked([[1.0, 0.0], [0.0, 1.0]])
    }

    pub fn entries(&self) -> [[f64; 2]; 2] {
        self.m
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn is_hyperbolic(&self) -> bool {
        self.hyperbolic
    }

    pub fn mul(&self, other: &Mobius) -> Mobius {
        let (a, b) = (self.m, other.m);
        let mut out = [[0.0; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Self::unchecked(out)
    }

    pub fn inverse(&self) -> Mobius {
        let [[a, b], [c, d]] = self.m;
        Self::unchecked([[d, -b], [-c, a]])
    }

    /// Conjugate `r * self * r^-1` by a rotation through `theta`.
    pub fn rotated(&self, theta: f64) -> Mobius {
        let (s, c) = theta.sin_cos();
        let r = Self::unchecked([[c, -s], [s, c]]);
        r.mul(self).mul(&r.inverse())
    }

    /// Action on the circle coordinate.
    pub fn act(&self, t: f64) -> f64 {
        let (x, y) = direction(t);
        let [[a, b], [c, d]] = self.m;
        coordinate(a * x + b * y, c * x + d * y)
    }

    /// Circle coordinate of the attracting fixed point, for hyperbolic elements.
    pub fn attracting_fixed_point(&self) -> Option<f64> {
        if !self.hyperbolic {
            return None;
        }
        let [[a, b], [c, d]] = self.m;
        let tr = a + d;
        let disc = (tr * tr - 4.0).sqrt();
        let lambda = if tr > 0.0 { (tr + disc) / 2.0 } else { (tr - disc) / 2.0 };
        // (M - lambda) v = 0; use whichever row is better conditioned
        let v1 = (b, lambda - a);
        let v2 = (lambda - d, c);
        let (x, y) = if v1.0.hypot(v1.1) >= v2.0.hypot(v2.1) { v1 } else { v2 };
        Some(coordinate(x, y))
    }
}

fn direction(t: f64) -> (f64, f64) {
    let (s, c) = (-PI * t).sin_cos();
    (c, s)
}

fn coordinate(x: f64, y: f64) -> f64 {
    (-y.atan2(x) / PI).rem_euclid(1.0)
}

/// Lift of a circle action to an increasing map of the line commuting with
/// unit translation, fixed by its value at 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftedMobius {
    mobius: Mobius,
    at_zero: f64,
}

impl LiftedMobius {
    /// The lift with value at 0 in `[0, 1)`, shifted by `offset`.
    pub fn new(mobius: Mobius, offset: i64) -> Self {
        LiftedMobius { mobius, at_zero: mobius.act(0.0) + offset as f64 }
    }

    pub fn mobius(&self) -> &Mobius {
        &self.mobius
    }

    pub fn at_zero(&self) -> f64 {
        self.at_zero
    }

    pub fn eval(&self, x: f64) -> f64 {
        let k = x.floor();
        let f = x - k;
        let image0 = self.mobius.act(0.0);
        let d = (self.mobius.act(f) - image0).rem_euclid(1.0);
        k + self.at_zero + d
    }

    /// The inverse map, which lifts the inverse element.
    pub fn inverse(&self) -> LiftedMobius {
        let inv = self.mobius.inverse();
        // F^-1(0) is the unique y with F(y) = 0; F(y) = at_zero + arc(0 -> y)
        let y0 = inv.act(0.0);
        let guess = LiftedMobius { mobius: inv, at_zero: y0 };
        let shift = -(self.eval(guess.at_zero)).round();
        LiftedMobius { mobius: inv, at_zero: y0 + shift }
    }
}

/// Holonomy of a hyperbolic once-punctured torus with geodesic boundary, with
/// chosen lifts of both generators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PTRep {
    a: LiftedMobius,
    b: LiftedMobius,
    a_inv: LiftedMobius,
    b_inv: LiftedMobius,
}

/// The fixed representation with trace triple `(4, 3, 3)` and
/// `tr [A, B] = -4`.
pub fn pt_holonomy() -> PTRep {
    let s3 = 3f64.sqrt();
    let theta = 0.3;
    let a = Mobius::unchecked([[2.0 + s3, 0.0], [0.0, 2.0 - s3]]).rotated(theta);
    let b = Mobius::unchecked([[(3.0 - s3) / 2.0, 1.0], [0.5, (3.0 + s3) / 2.0]]).rotated(theta);
    let a = Mobius::new(a.m[0][0], a.m[0][1], a.m[1][0], a.m[1][1]).expect("det 1 up to rounding");
    let b = Mobius::new(b.m[0][0], b.m[0][1], b.m[1][0], b.m[1][1]).expect("det 1 up to rounding");
    PTRep::new(a, b)
}

impl PTRep {
    pub fn new(a: Mobius, b: Mobius) -> Self {
        Self::with_offsets(a, b, 0, 0)
    }

    fn with_offsets(a: Mobius, b: Mobius, ka: i64, kb: i64) -> Self {
        let a = LiftedMobius::new(a, ka);
        let b = LiftedMobius::new(b, kb);
        PTRep { a, b, a_inv: a.inverse(), b_inv: b.inverse() }
    }

    /// Same representation with the generator lifts translated by integers.
    pub fn with_lift_offsets(&self, ka: i64, kb: i64) -> Self {
        Self::with_offsets(self.a.mobius, self.b.mobius, ka, kb)
    }

    pub fn generator(&self, l: Letter) -> &LiftedMobius {
        match (l.generator(), l.is_inverse()) {
            (1, false) => &self.a,
            (1, true) => &self.a_inv,
            (_, false) => &self.b,
            (_, true) => &self.b_inv,
        }
    }

    pub fn matrix(&self, word: &Word) -> Mobius {
        word.letters().iter().fold(Mobius::identity(), |m, l| m.mul(self.generator(*l).mobius()))
    }

    /// `(tr A, tr B, tr AB)`.
    pub fn trace_triple(&self) -> (f64, f64, f64) {
        let (a, b) = (self.a.mobius, self.b.mobius);
        (a.trace(), b.trace(), a.mul(&b).trace())
    }

    pub fn commutator_trace(&self) -> f64 {
        let (a, b) = (self.a.mobius, self.b.mobius);
        a.mul(&b).mul(&a.inverse()).mul(&b.inverse()).trace()
    }

    /// Composite lift of `word`, applied to `x`.
    pub fn lift_eval(&self, word: &Word, x: f64) -> f64 {
        word.letters().iter().rev().fold(x, |y, l| self.generator(*l).eval(y))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RotMethod {
    Turning,
    Dynamical,
    Both,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RotationResult {
    pub value: Rational,
    pub method: RotMethod,
    /// Set when both methods ran.
    pub agreement: Option<bool>,
}

/// Winding number of the lattice path of a closed, cyclically reduced rank-2
/// word: quarter turns to the left minus quarter turns to the right, over 4.
pub fn turning_number(word: &Word) -> Result<i64, RotationError> {
    if word.rank() != 2 {
        return Err(RotationError::Rank(word.rank()));
    }
    if !word.is_cyclically_reduced() {
        return Err(RotationError::NotCyclicallyReduced(word.to_string()));
    }
    if word.exponent_sums().iter().any(|&e| e != 0) {
        return Err(RotationError::NotClosed(word.to_string()));
    }
    let step = |l: &Letter| -> (i64, i64) {
        let s = l.sign();
        if l.generator() == 1 {
            (s, 0)
        } else {
            (0, s)
        }
    };
    let letters = word.letters();
    let n = letters.len();
    let turns: i64 = (0..n)
        .map(|i| {
            let (u, v) = (step(&letters[i]), step(&letters[(i + 1) % n]));
            u.0 * v.1 - u.1 * v.0
        })
        .sum();
    Ok(turns / 4)
}

/// Translation number of the lifted holonomy of `word`, which is an integer.
pub fn rot_element(rep: &PTRep, word: &Word) -> Result<i64, RotationError> {
    if word.rank() != 2 {
        return Err(RotationError::Rank(word.rank()));
    }
    let w = word.reduce();
    if w.is_empty() {
        return Err(RotationError::Identity);
    }
    let m = rep.matrix(&w);
    let x = m.attracting_fixed_point().ok_or_else(|| RotationError::NotHyperbolic(w.to_string()))?;
    let value = rep.lift_eval(&w, x) - x;
    let rounded = value.round();
    if (value - rounded).abs() > INTEGRALITY_MARGIN {
        return Err(RotationError::Margin { word: w.to_string(), value, margin: INTEGRALITY_MARGIN });
    }
    Ok(rounded as i64)
}

/// `sum t_i rot(g_i)` over a boundary chain.
pub fn rot_chain(rep: &PTRep, chain: &Chain) -> Result<Rational, RotationError> {
    if chain.rank() != 2 {
        return Err(RotationError::Rank(chain.rank()));
    }
    if !chain.is_boundary() {
        return Err(RotationError::NotBoundary);
    }
    chain.terms().iter().try_fold(Rational::zero(), |acc, t| {
        Ok(acc + &t.coefficient * Rational::from_integer(BigInt::from(rot_element(rep, &t.word)?)))
    })
}

/// Algebraic area enclosed by a boundary chain, in units of `pi`.
pub fn area_coefficient(rep: &PTRep, chain: &Chain) -> Result<Rational, RotationError> {
    Ok(rot_chain(rep, chain)? * Rational::from_integer(BigInt::from(2)))
}

/// Rotation number of a chain by the requested method.
pub fn rotation(rep: &PTRep, chain: &Chain, method: RotMethod) -> Result<RotationResult, RotationError> {
    let turning = || -> Result<Rational, RotationError> {
        if !chain.is_boundary() {
            return Err(RotationError::NotBoundary);
        }
        chain.terms().iter().try_fold(Rational::zero(), |acc, t| {
            Ok(acc + &t.coefficient * Rational::from_integer(BigInt::from(turning_number(&t.word)?)))
        })
    };
    match method {
        RotMethod::Turning => Ok(RotationResult { value: turning()?, method, agreement: None }),
        RotMethod::Dynamical => Ok(RotationResult { value: rot_chain(rep, chain)?, method, agreement: None }),
        RotMethod::Both => {
            let dynamical = rot_chain(rep, chain)?;
            let agreement = turning().map(|t| t == dynamical).ok();
            Ok(RotationResult { value: dynamical, method, agreement: Some(agreement.unwrap_or(false)) })
        }
    }
}

/// Largest `|rot(g) + rot(h) - rot(gh)|` over `samples` random pairs of
/// reduced words of length `1..=max_len`. The identity counts as rotation 0.
pub fn defect_probe(rep: &PTRep, samples: usize, max_len: usize, seed: u64) -> Result<Rational, RotationError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0i64;
    for _ in 0..samples {
        let g = random_word(&mut rng, max_len);
        let h = random_word(&mut rng, max_len);
        let gh = g.concat(&h).expect("same rank").reduce();
        let d = (rot_or_zero(rep, &g)? + rot_or_zero(rep, &h)? - rot_or_zero(rep, &gh)?).abs();
        worst = worst.max(d);
    }
    Ok(Rational::from_integer(BigInt::from(worst)))
}

fn rot_or_zero(rep: &PTRep, w: &Word) -> Result<i64, RotationError> {
    match rot_element(rep, w) {
        Err(RotationError::Identity) => Ok(0),
        other => other,
    }
}

/// Uniform reduced rank-2 word with length uniform in `1..=max_len`.
pub fn random_word(rng: &mut impl Rng, max_len: usize) -> Word {
    let len = rng.gen_range(1..=max_len.max(1));
    let mut letters: Vec<Letter> = Vec::with_capacity(len);
    while letters.len() < len {
        let l = Letter::new(rng.gen_range(1..=2), rng.gen_bool(0.5));
        if letters.last().is_some_and(|p| p.inverse() == l) {
            continue;
        }
        letters.push(l);
    }
    Word::new(letters, 2).expect("letters within rank 2")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        Word::parse(s, 2).unwrap()
    }

    fn q(n: i64) -> Rational {
        Rational::from_integer(n.into())
    }

    #[test]
    fn holonomy_traces() {
        let rep = pt_holonomy();
        let (x, y, z) = rep.trace_triple();
        assert!((x - 4.0).abs() < 1e-12 && (y - 3.0).abs() < 1e-12 && (z - 3.0).abs() < 1e-12);
        let fricke = x * x + y * y + z * z - x * y * z - 2.0;
        assert!((fricke + 4.0).abs() < 1e-9);
        assert!((rep.commutator_trace() + 4.0).abs() < 1e-9);
        assert!(rep.matrix(&w("abAB")).is_hyperbolic());
    }

    #[test]
    fn determinant_checked() {
        assert!(matches!(Mobius::new(3.0, 1.0, 1.0, 1.0), Err(RotationError::Determinant(_))));
        assert!(Mobius::new(2.0, 1.0, 1.0, 1.0).is_ok());
    }

    #[test]
    fn lifts_are_normalized_and_periodic() {
        let rep = pt_holonomy();
        for l in ['a', 'b', 'A', 'B'] {
            let f = rep.generator(Letter::from_char(l).unwrap());
            for x in [0.0, 0.13, 0.5, 0.77, 0.99] {
                assert!((f.eval(x + 3.0) - f.eval(x) - 3.0).abs() < 1e-12);
                assert!(f.eval(x + 0.01) > f.eval(x));
            }
        }
        assert!((0.0..1.0).contains(&rep.generator(Letter::from_char('a').unwrap()).at_zero()));
        for x in [0.0, 0.3, 0.9] {
            let a = rep.generator(Letter::from_char('a').unwrap());
            let ai = rep.generator(Letter::from_char('A').unwrap());
            assert!((ai.eval(a.eval(x)) - x).abs() < 1e-9);
        }
    }

    #[test]
    fn turning_examples() {
        assert_eq!(turning_number(&w("abAB")).unwrap(), 1);
        assert_eq!(turning_number(&w("abABAbaB")).unwrap(), 0);
        assert_eq!(turning_number(&w("aabbAABB")).unwrap(), 1);
        assert_eq!(turning_number(&w("abABabAB")).unwrap(), 2);
        assert_eq!(turning_number(&w("baBA")).unwrap(), -1);
        assert!(matches!(turning_number(&w("ab")), Err(RotationError::NotClosed(_))));
    }

    #[test]
    fn rot_examples() {
        let rep = pt_holonomy();
        assert_eq!(rot_element(&rep, &w("abAB")).unwrap(), 1);
        assert_eq!(rot_element(&rep, &w("abAB").pow(3)).unwrap(), 3);
        assert_eq!(rot_element(&rep, &w("babABB")).unwrap(), 1);
        assert_eq!(rot_element(&rep, &w("abABAbaB")).unwrap(), 0);
        assert!(matches!(rot_element(&rep, &w("aA")), Err(RotationError::Identity)));
    }

    #[test]
    fn rot_chain_examples() {
        let rep = pt_holonomy();
        let c = |p: &[(i64, &str)]| Chain::from_pairs(2, p).unwrap();
        assert_eq!(rot_chain(&rep, &c(&[(1, "ab"), (-1, "a"), (-1, "b")])).unwrap(), q(0));
        assert_eq!(rot_chain(&rep, &c(&[(2, "abAB"), (1, "ab"), (-1, "a"), (-1, "b")])).unwrap(), q(2));
        assert_eq!(rot_chain(&rep, &c(&[(1, "a"), (1, "A")])).unwrap(), q(0));
        assert!(matches!(rot_chain(&rep, &c(&[(1, "a")])), Err(RotationError::NotBoundary)));
        assert_eq!(area_coefficient(&rep, &c(&[(1, "abAB")])).unwrap(), q(2));
        assert_eq!(area_coefficient(&rep, &c(&[(3, "abAB")])).unwrap(), q(6));
        assert_eq!(area_coefficient(&rep, &c(&[(1, "ab"), (-1, "a"), (-1, "b")])).unwrap(), q(0));
    }

    #[test]
    fn lift_offsets_shift_elements_not_boundaries() {
        let rep = pt_holonomy();
        let shifted = rep.with_lift_offsets(2, -1);
        for s in ["a", "b", "ab", "aab", "abABb", "BBa"] {
            let word = w(s);
            let e = word.exponent_sums();
            let expected = rot_element(&rep, &word).unwrap() + 2 * e[0] - e[1];
            assert_eq!(rot_element(&shifted, &word).unwrap(), expected, "{s}");
        }
        let c = Chain::from_pairs(2, &[(2, "abAB"), (1, "ab"), (-1, "a"), (-1, "b")]).unwrap();
        assert_eq!(rot_chain(&shifted, &c).unwrap(), rot_chain(&rep, &c).unwrap());
    }

    #[test]
    fn defect_at_most_one_and_attained() {
        let rep = pt_holonomy();
        assert_eq!(defect_probe(&rep, 300, 8, 7).unwrap(), q(1));
        let (a, big_a) = (w("a"), w("A"));
        let d = rot_element(&rep, &a).unwrap() + rot_element(&rep, &big_a).unwrap();
        assert_eq!(d, 0);
    }

    #[test]
    fn both_methods_agree() {
        let rep = pt_holonomy();
        let c = Chain::from_pairs(2, &[(1, "aabbAABB"), (1, "abABAbaB")]).unwrap();
        let r = rotation(&rep, &c, RotMethod::Both).unwrap();
        assert_eq!((r.value, r.agreement), (q(1), Some(true)));
    }
}
