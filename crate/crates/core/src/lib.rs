//! Exact stable commutator length on rational chains in free groups, the
//! rotation quasimorphism of the once-punctured torus, and the immersion
//! criterion `scl(C) = rot(C)/2` built from the two.

pub mod cli;
pub mod freegroup;
pub mod immersion;
pub mod ratlp;
pub mod rotation;
pub mod sclenc;
pub mod surfcert;

/// Exact rational scalar used throughout.
pub type Rational = num_rational::BigRational;
