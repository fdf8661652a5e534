mod common;

use common::*;
use num_traits::Zero;
use proptest::prelude::*;
use sclkit::freegroup::{addition_lemma_word, Chain, Word};
use sclkit::immersion::{self, bounds_immersed};
use sclkit::ratlp::{self, LinearProgram, LpStatus, SolveOptions};
use sclkit::rotation::{self, pt_holonomy, rot_element, turning_number};
use sclkit::sclenc::{self, decode_certificate, Limits};
use sclkit::surfcert::{self, boundary_degree, search_matching, SearchLimits};
use sclkit::Rational;

fn scl(c: &Chain) -> Rational {
    sclenc::scl(c, &Limits::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn reduce_is_idempotent_and_shortens(w in word(12)) {
        let r = w.reduce();
        prop_assert!(r.is_reduced());
        prop_assert!(r.len() <= w.len());
        prop_assert_eq!(r.reduce(), r);
    }

    #[test]
    fn canonicalize_is_idempotent_and_keeps_homology(c in boundary_chain(16), w in word(6)) {
        let c = c.add(&Chain::from_word(w)).unwrap();
        let n = c.canonicalize();
        prop_assert_eq!(n.canonicalize(), n.clone());
        prop_assert_eq!(n.abelianize(), c.abelianize());
    }

    #[test]
    fn powers_collapse_to_multiples(w in word(6), n in 1i64..=3) {
        let power = Chain::from_word(w.pow(n)).canonicalize();
        let multiple = Chain::from_word(w).scale(&int(n)).canonicalize();
        prop_assert_eq!(power, multiple);
    }

    #[test]
    fn cyclic_core_is_conjugacy_invariant(w in word(8), u in word(4)) {
        let conj = u.concat(&w).unwrap().concat(&u.inverse()).unwrap();
        let (a, _) = w.cyclic_reduce();
        let (b, _) = conj.cyclic_reduce();
        prop_assert_eq!(a.conjugacy_representative(), b.conjugacy_representative());
    }

    #[test]
    fn addition_lemma_word_stays_cyclically_reduced(ws in prop::collection::vec(word(6), 1..=3)) {
        let cores: Vec<Word> = ws.iter().map(|w| w.cyclic_reduce().0).filter(|w| !w.is_empty()).collect();
        prop_assume!(!cores.is_empty());
        prop_assert!(addition_lemma_word(&cores).unwrap().is_cyclically_reduced());
    }
}

/// Feasible bounded program `min c.x, A x = A x0, x >= 0` with `c >= 0`.
fn small_lp() -> impl Strategy<Value = (LinearProgram, Vec<Vec<Rational>>, Vec<Rational>, Vec<Rational>)> {
    (1usize..=4, 1usize..=6).prop_flat_map(|(m, n)| {
        (
            prop::collection::vec(prop::collection::vec(-3i64..=3, n), m),
            prop::collection::vec(0i64..=3, n),
            prop::collection::vec(0i64..=4, n),
        )
            .prop_map(move |(a, x0, c)| {
                let a: Vec<Vec<Rational>> = a.iter().map(|r| r.iter().map(|&v| int(v)).collect()).collect();
                let b: Vec<Rational> = a.iter().map(|r| r.iter().zip(&x0).map(|(v, &x)| v * int(x)).sum()).collect();
                let c: Vec<Rational> = c.iter().map(|&v| int(v)).collect();
                (LinearProgram::from_dense(&a, &b, &c).unwrap(), a, b, c)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn lp_strong_duality_and_guided_agreement((lp, ..) in small_lp()) {
        let guided = ratlp::solve_min(&lp).unwrap();
        let exact = ratlp::solve_min_with(&lp, SolveOptions { guided: false, ..SolveOptions::default() }).unwrap();
        prop_assert_eq!(guided.status, LpStatus::Optimal);
        prop_assert_eq!(exact.status, LpStatus::Optimal);
        prop_assert!(ratlp::verify(&lp, &guided));
        prop_assert!(ratlp::verify(&lp, &exact));
        prop_assert_eq!(guided.value, exact.value);
    }

    #[test]
    fn lp_scales_with_right_hand_side((_, a, b, c) in small_lp(), k in 1i64..=5, d in 1i64..=3) {
        let k = q(k, d);
        let scaled: Vec<Rational> = b.iter().map(|v| v * &k).collect();
        let base = ratlp::solve_min(&LinearProgram::from_dense(&a, &b, &c).unwrap()).unwrap();
        let lp = LinearProgram::from_dense(&a, &scaled, &c).unwrap();
        let big = ratlp::solve_min(&lp).unwrap();
        prop_assert!(ratlp::verify(&lp, &big));
        prop_assert_eq!(big.value.unwrap(), base.value.unwrap() * k);
    }

    #[test]
    fn lp_is_deterministic((lp, ..) in small_lp()) {
        prop_assert_eq!(ratlp::solve_min(&lp).unwrap(), ratlp::solve_min(&lp).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn scl_is_homogeneous(c in boundary_chain(12)) {
        let base = scl(&c);
        for k in [2, 3] {
            prop_assert_eq!(scl(&c.scale(&int(k))), &base * int(k));
        }
    }

    #[test]
    fn scl_is_subadditive(c1 in boundary_chain(10), c2 in boundary_chain(10)) {
        let sum = c1.add(&c2).unwrap();
        prop_assume!(!sum.canonicalize().is_empty());
        prop_assert!(scl(&sum) <= scl(&c1) + scl(&c2));
    }

    #[test]
    fn decoded_certificates_are_sound(c in boundary_chain(12)) {
        certificate_is_sound(&c);
    }

    #[test]
    fn bavard_bound_on_random_chains(c in boundary_chain(12)) {
        let rot = rotation::rot_chain(&pt_holonomy(), &c).unwrap();
        prop_assert!(scl(&c) >= rot / int(2));
    }
}

fn certificate_is_sound(c: &Chain) {
    let solution = sclenc::solve(c, &Limits::default()).unwrap();
    assert!(ratlp::verify(&solution.encoding.lp, &solution.result));
    let cert = decode_certificate(&solution).unwrap();
    let optimum = solution.result.value.clone().unwrap();
    assert_eq!(int(-cert.euler_characteristic), int(cert.degree as i64) * optimum, "{c}");
    let prepared = &solution.encoding.prepared.chain;
    if prepared.canonicalize().is_empty() {
        assert!(cert.boundary.canonicalize().is_empty());
    } else {
        assert_eq!(boundary_degree(&cert.boundary, prepared).unwrap(), int(cert.degree as i64), "{c}");
    }
}

#[test]
fn corpus_certificates_are_sound() {
    for c in corpus() {
        certificate_is_sound(&c);
    }
    certificate_is_sound(&chain(3, &[(1, "abABcabABC")]));
    certificate_is_sound(&chain(4, &[(1, "abAB"), (1, "cdCD")]));
}

#[test]
fn bavard_bound_on_corpus() {
    let rep = pt_holonomy();
    for c in corpus() {
        let rot = rotation::rot_chain(&rep, &c).unwrap();
        assert!(scl(&c) >= rot / int(2), "{c}");
        bounds_immersed(&c, &Limits::default()).unwrap();
    }
}

#[test]
fn matching_bound_dominates_scl() {
    let limits = SearchLimits::default();
    // any matching bounds scl, so a truncated search is still a valid check
    let truncated = SearchLimits { max_nodes: 200_000, ..limits };
    for c in corpus() {
        for (degree, limits) in [(1, &limits), (2, &truncated)] {
            let s = search_matching(&c, degree, limits).unwrap();
            assert!(s.bound >= scl(&c), "{c} at degree {degree}");
        }
    }
    for p in PINNED_MATCHING_CORPUS {
        let c = chain(2, p);
        assert_eq!(search_matching(&c, 1, &limits).unwrap().bound, scl(&c), "{c}");
    }
}

#[test]
fn band_euler_characteristic_matches_cell_count() {
    let limits = SearchLimits::default();
    for c in corpus() {
        let s = search_matching(&c, 1, &limits).unwrap();
        assert_eq!(
            surfcert::euler_characteristic(&s.arcs, &s.matching).unwrap(),
            surfcert::euler_characteristic_cells(&s.arcs, &s.matching).unwrap()
        );
    }
}

#[test]
fn rotation_defect_is_at_most_one() {
    let rep = pt_holonomy();
    let worst = rotation::defect_probe(&rep, 2000, 8, 7).unwrap();
    assert!(worst <= int(1));
    assert_eq!(rotation::defect_probe(&rep, 2000, 6, 11).unwrap(), int(1));
}

#[test]
fn turning_number_agrees_with_dynamics() {
    let rep = pt_holonomy();
    let words = commutator_words(12);
    assert!(words.len() > 10_000);
    for w in &words {
        assert_eq!(rot_element(&rep, w).unwrap(), turning_number(w).unwrap(), "{w}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn rot_is_homogeneous_and_conjugation_invariant(w in word(8), u in word(5), n in 1i64..=4) {
        let rep = pt_holonomy();
        let w = w.reduce();
        prop_assume!(!w.is_empty());
        let r = rot_element(&rep, &w).unwrap();
        prop_assert_eq!(rot_element(&rep, &w.pow(n)).unwrap(), n * r);
        let conj = u.concat(&w).unwrap().concat(&u.inverse()).unwrap();
        prop_assert_eq!(rot_element(&rep, &conj).unwrap(), r);
    }

    #[test]
    fn lift_offsets_shift_by_exponent_sums(w in word(8), ka in -2i64..=2, kb in -2i64..=2) {
        let rep = pt_holonomy();
        let w = w.reduce();
        prop_assume!(!w.is_empty());
        let shifted = rep.with_lift_offsets(ka, kb);
        let e = w.exponent_sums();
        prop_assert_eq!(rot_element(&shifted, &w).unwrap(), rot_element(&rep, &w).unwrap() + ka * e[0] + kb * e[1]);
    }

    #[test]
    fn lift_offsets_leave_boundaries_alone(c in boundary_chain(12), ka in -2i64..=2, kb in -2i64..=2) {
        let rep = pt_holonomy();
        prop_assert_eq!(
            rotation::rot_chain(&rep.with_lift_offsets(ka, kb), &c).unwrap(),
            rotation::rot_chain(&rep, &c).unwrap()
        );
    }
}

#[test]
fn immersion_closed_under_addition() {
    let limits = Limits::default();
    let immersed: Vec<Chain> =
        corpus().into_iter().filter(|c| bounds_immersed(c, &limits).unwrap().bounds_immersed).collect();
    assert!(immersed.len() >= 3);
    for (i, c1) in immersed.iter().enumerate() {
        for c2 in &immersed[i..] {
            let sum = c1.add(c2).unwrap();
            if sum.canonicalize().is_empty() || sum.canonicalize().letter_count() > 24 {
                continue;
            }
            assert!(bounds_immersed(&sum, &limits).unwrap().bounds_immersed, "{c1} + {c2}");
        }
    }
}

#[test]
fn reversal_negates_rot_and_keeps_scl() {
    for c in corpus() {
        let (f, b) = immersion::orientation_pair(&c, &Limits::default()).unwrap();
        assert_eq!(b.rot, -f.rot.clone());
        assert_eq!(b.scl, f.scl);
        if !f.rot.is_zero() {
            assert!(!(f.bounds_immersed && b.bounds_immersed), "{c}");
        }
    }
}
