mod common;

use common::{build, check_order, check_tivifn, integral_indices, Raw};
use ivif_lexopt::ivifn::{Ivifn, ShapeSpec, Shapes};
use ivif_lexopt::ranking::{accuracy, score};
use proptest::prelude::*;

fn number() -> impl Strategy<Value = Ivifn> {
    let inc = || prop_oneof![1 => Just(0.0), 5 => 0.0..10.0f64];
    (
        prop::array::uniform4(inc()),
        prop::array::uniform4(inc()),
        1u8..=10,
        0.0..1.0f64,
    )
        .prop_map(|(left, right, class, t)| build(&Raw { left, right, class, t }))
}

/// Triples in which the second entry repeats the first now and then, so
/// that key ties are exercised.
fn triple() -> impl Strategy<Value = (Ivifn, Ivifn, Ivifn)> {
    (number(), number(), number(), prop::bool::weighted(0.1)).prop_map(|(x, y, z, dup)| {
        let y = if dup { x.clone() } else { y };
        (x, y, z)
    })
}

fn sorted9() -> impl Strategy<Value = [f64; 9]> {
    prop::array::uniform9(-100.0..100.0f64).prop_map(|mut p| {
        p.sort_by(|a, b| a.partial_cmp(b).unwrap());
        p
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn total_order_laws((x, y, z) in triple(), l1 in -5.0..5.0f64, l2 in -5.0..5.0f64) {
        if let Err(e) = check_order(&x, &y, &z, l1, l2) {
            prop_assert!(false, "{}", e);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1_000))]

    #[test]
    fn triangular_closed_form_matches_integral(p in sorted9()) {
        if let Err(e) = check_tivifn(p) {
            prop_assert!(false, "{}", e);
        }
    }

    #[test]
    fn custom_shape_closed_form_matches_quadrature(x in number()) {
        let sq = ShapeSpec::custom("square", |a: f64| (1.0 - a) * (1.0 - a)).unwrap();
        let cube = ShapeSpec::custom("cube", |a: f64| (1.0 - a).powi(3)).unwrap();
        let shapes = Shapes {
            left: sq.clone(),
            right: cube.clone(),
            left_upper: cube,
            right_upper: sq,
        };
        let y = Ivifn::with_shapes(x.mean(), *x.spreads(), shapes).unwrap();
        let f2 = |a: f64| (1.0 - a) * (1.0 - a);
        let f3 = |a: f64| (1.0 - a).powi(3);
        let (s, acc) = integral_indices(&y, [&f2, &f3, &f3, &f2], 512);
        prop_assert!((score(&y) - s).abs() <= 1e-8, "{} vs {}", score(&y), s);
        prop_assert!((accuracy(&y) - acc).abs() <= 1e-8 * acc.abs().max(1.0));
    }

    #[test]
    fn collapsed_levels_reduce(a in -50.0..50.0f64, l in 0.0..10.0f64, r in 0.0..10.0f64, dl in 0.0..10.0f64, dr in 0.0..10.0f64) {
        let x = Ivifn::new(a, [l, r, l, r, l + dl, r + dr, l + dl, r + dr]).unwrap();
        // four-spread formula for intuitionistic numbers with linear shapes
        let s = ((r - l) - ((r + dr) - (l + dl))) / 4.0;
        let acc = 2.0 * a + ((r - l) + ((r + dr) - (l + dl))) / 4.0;
        prop_assert!((score(&x) - s).abs() < 1e-9);
        prop_assert!((accuracy(&x) - acc).abs() < 1e-9);
    }
}
