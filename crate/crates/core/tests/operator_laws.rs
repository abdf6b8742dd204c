//! Algebraic laws of the symbol and operator calculus on randomized
//! inputs: composition, normal ordering, right division, the Poisson
//! bracket, the star product's classical limit, and the density
//! representation of the conformal algebra.

use proptest::prelude::*;

use confsym_core::conformal::{bracket_fields, expand_in_generators, generators, lie_density};
use confsym_core::opalg::{
    laplacian_power, normal_order_n, right_divide, DiffOp, OpMonom, PhaseOp,
};
use confsym_core::ring::{rat, Monom, PhasePoly, Rat, Signature};
use confsym_core::starproduct::star_component;

const N: usize = 3;

fn sig30() -> Signature {
    Signature::new(3, 0).unwrap()
}

fn arb_exps(max: u16) -> impl Strategy<Value = Vec<u16>> {
    prop::collection::vec(0..=max, N)
}

fn arb_coeff() -> impl Strategy<Value = Rat> {
    (-6i64..=6, 1i64..=4).prop_map(|(a, b)| rat(a, b))
}

fn arb_poly(max_x: u16, max_p: u16, max_terms: usize) -> impl Strategy<Value = PhasePoly> {
    prop::collection::vec((arb_exps(max_x), arb_exps(max_p), arb_coeff()), 1..=max_terms)
        .prop_map(|ts| {
            let mut f = PhasePoly::zero(N);
            for (xe, pe, c) in ts {
                f.add_term(Monom::new(xe, pe), c);
            }
            f
        })
}

fn arb_op(max_terms: usize) -> impl Strategy<Value = PhaseOp> {
    prop::collection::vec(
        (arb_exps(1), arb_exps(1), arb_exps(1), arb_exps(1), arb_coeff()),
        1..=max_terms,
    )
    .prop_map(|ts| {
        let mut op = PhaseOp::zero(N);
        for (x, p, dx, dp, c) in ts {
            op.add_term(OpMonom::new(x, p, dx, dp), c);
        }
        op
    })
}

fn arb_weight() -> impl Strategy<Value = Rat> {
    (-3i64..=3, 1i64..=3).prop_map(|(a, b)| rat(a, b))
}

proptest! {
    #[test]
    fn composition_is_associative(a in arb_op(3), b in arb_op(3), c in arb_op(3)) {
        let left = a.compose(&b).unwrap().compose(&c).unwrap();
        let right = a.compose(&b.compose(&c).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn composition_agrees_with_application(
        a in arb_op(3),
        b in arb_op(3),
        f in arb_poly(2, 2, 4),
    ) {
        let composed = a.compose(&b).unwrap().apply(&f).unwrap();
        let chained = a.apply(&b.apply(&f).unwrap()).unwrap();
        prop_assert_eq!(composed, chained);
    }

    #[test]
    fn normal_ordering_round_trips_through_the_full_symbol(
        f in arb_poly(2, 2, 5),
        lambda in arb_weight(),
        mu in arb_weight(),
    ) {
        prop_assert_eq!(normal_order_n(&f, lambda, mu).full_symbol(), f);
    }

    #[test]
    fn poisson_bracket_laws(
        f in arb_poly(2, 2, 4),
        g in arb_poly(2, 2, 4),
        h in arb_poly(2, 2, 4),
    ) {
        prop_assert_eq!(f.poisson(&g).unwrap(), g.poisson(&f).unwrap().neg());
        let leibniz = f
            .poisson(&g)
            .unwrap()
            .mul(&h)
            .unwrap()
            .add(&g.mul(&f.poisson(&h).unwrap()).unwrap())
            .unwrap();
        prop_assert_eq!(f.poisson(&g.mul(&h).unwrap()).unwrap(), leibniz);
        let jacobi = f
            .poisson(&g.poisson(&h).unwrap())
            .unwrap()
            .add(&g.poisson(&h.poisson(&f).unwrap()).unwrap())
            .unwrap()
            .add(&h.poisson(&f.poisson(&g).unwrap()).unwrap())
            .unwrap();
        prop_assert!(jacobi.is_zero());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn right_division_recovers_the_left_factor(
        w in arb_poly(2, 2, 3),
        ell in 1usize..=2,
        lambda in arb_weight(),
        nu in arb_weight(),
    ) {
        let sig = sig30();
        let delta_l = laplacian_power(&sig, ell, lambda);
        let b = normal_order_n(&w, delta_l.mu().clone(), nu);
        let a = b.compose(&delta_l).unwrap();
        let q = right_divide(&a, ell, &sig).unwrap().unwrap();
        prop_assert_eq!(&q, &b);
        prop_assert_eq!(q.compose(&delta_l).unwrap(), a);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // antisymmetrizing the level-1 component yields the Poisson
    // bracket at every weight
    #[test]
    fn star_level_one_antisymmetrizes_to_the_poisson_bracket(
        f in arb_poly(1, 1, 2),
        g in arb_poly(1, 1, 2),
        half in any::<bool>(),
    ) {
        let sig = sig30();
        let lambda = if half { rat(1, 2) } else { rat(2, 7) };
        let fg = star_component(&f, &g, 1, &lambda, &sig).unwrap().value;
        let gf = star_component(&g, &f, 1, &lambda, &sig).unwrap().value;
        prop_assert_eq!(fg.sub(&gf).unwrap(), f.poisson(&g).unwrap());
    }
}

#[test]
fn density_lie_derivative_is_a_homomorphism() {
    let sig = sig30();
    let gens = generators(&sig).unwrap();
    let lambda = rat(2, 7);
    for x in &gens {
        let lx = lie_density(x, &lambda);
        for y in &gens {
            let ly = lie_density(y, &lambda);
            let comm = lx.compose(&ly).unwrap().sub(&ly.compose(&lx).unwrap()).unwrap();
            let coeffs =
                expand_in_generators(&bracket_fields(x.field(), y.field()), &gens).unwrap();
            let mut want = DiffOp::zero(N, lambda.clone(), lambda.clone());
            for (c, g) in coeffs.iter().zip(&gens) {
                want = want.add(&lie_density(g, &lambda).scale(c)).unwrap();
            }
            assert_eq!(comm, want, "[{}, {}]", x.label(), y.label());
        }
    }
}
