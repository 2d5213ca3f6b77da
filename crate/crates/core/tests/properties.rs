use iss_smallgain::dynamics::VectorFieldSpec;
use iss_smallgain::lyapunov::{compose_v, derive_parts, PartSpec};
use iss_smallgain::path::OmegaPath;
use iss_smallgain::transform::weak_triangle;
use iss_smallgain::verify::verify_linear;
use iss_smallgain::{Aggregation, GainNetwork, ScalarFn};
use proptest::prelude::*;

fn gain() -> impl Strategy<Value = ScalarFn> {
    prop_oneof![
        (0.05f64..5.0).prop_map(|c| ScalarFn::linear(c).unwrap()),
        (0.05f64..5.0, 0.5f64..2.5).prop_map(|(c, p)| ScalarFn::power(c, p).unwrap()),
        (0.05f64..2.0, 0.05f64..2.0).prop_map(|(a, b)| {
            ScalarFn::max(vec![ScalarFn::linear(a).unwrap(), ScalarFn::power(b, 2.0).unwrap()]).unwrap()
        }),
        (0.05f64..2.0, 0.05f64..2.0).prop_map(|(a, b)| {
            ScalarFn::sum(vec![ScalarFn::linear(a).unwrap(), ScalarFn::power(b, 0.5).unwrap()]).unwrap()
        }),
        (0.1f64..3.0, 0.1f64..3.0, 0.1f64..3.0)
            .prop_map(|(a, b, s)| { ScalarFn::piecewise(vec![(1.0, a), (4.0, a + b)], s).unwrap() }),
    ]
}

fn gain_net(n: usize) -> impl Strategy<Value = GainNetwork> {
    (
        prop::collection::vec(any::<bool>(), n),
        prop::collection::vec(prop::collection::vec(prop::option::weighted(0.6, gain()), n), n),
    )
        .prop_map(move |(sum, rows)| {
            let agg = sum.iter().map(|&s| if s { Aggregation::Sum } else { Aggregation::Max }).collect();
            let gamma = rows
                .into_iter()
                .enumerate()
                .map(|(i, row)| {
                    row.into_iter()
                        .enumerate()
                        .map(|(j, g)| if i == j { ScalarFn::zero() } else { g.unwrap_or_else(ScalarFn::zero) })
                        .collect()
                })
                .collect();
            GainNetwork::new(agg, gamma, vec![ScalarFn::zero(); n]).unwrap()
        })
}

fn point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1e-3f64..1e3, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn inverse_undoes_gain(f in gain(), r in 1e-3f64..1e3) {
        let y = f.eval(r).unwrap();
        let back = f.eval_inverse(y).unwrap();
        prop_assert!((back - r).abs() <= 1e-8 * r, "{f}: {r} -> {y} -> {back}");
        let g = ScalarFn::inverse(&f).unwrap();
        prop_assert!((g.eval(y).unwrap() - r).abs() <= 1e-8 * r);
    }

    #[test]
    fn gains_are_strictly_increasing(f in gain(), a in 1e-3f64..1e3, b in 1e-3f64..1e3) {
        prop_assume!(a < b * (1.0 - 1e-9));
        prop_assert!(f.eval(a).unwrap() < f.eval(b).unwrap());
        prop_assert_eq!(f.eval(0.0).unwrap(), 0.0);
    }

    #[test]
    fn printed_expressions_parse_back(f in gain(), g in gain()) {
        let h = ScalarFn::compose(&f, &g);
        let text = h.to_string();
        let parsed: ScalarFn = text.parse().unwrap();
        prop_assert_eq!(parsed.to_string(), text);
        for r in [1e-2, 0.7, 3.0, 40.0] {
            let (x, y) = (h.eval(r).unwrap(), parsed.eval(r).unwrap());
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-300));
        }
    }

    #[test]
    fn weak_triangle_bounds_sums(a in gain(), b in gain(), eta in gain(), r in 1e-3f64..1e2, s in 1e-3f64..1e2) {
        let (left, right) = weak_triangle(&a, &b, &eta).unwrap();
        let lhs = a.eval(r).unwrap() + b.eval(s).unwrap();
        let rhs = left.eval(r).unwrap().max(right.eval(s).unwrap());
        prop_assert!(lhs <= rhs * (1.0 + 1e-12));
    }

    #[test]
    fn d_alpha_round_trips(net in gain_net(4), alpha in gain(), s in point(4)) {
        let t = net.apply_d(&alpha, &s).unwrap();
        let back = net.apply_d_inverse(&alpha, &t).unwrap();
        for (x, y) in s.iter().zip(&back) {
            prop_assert!((x - y).abs() <= 1e-9 * x);
        }
        for (i, (x, y)) in s.iter().zip(&t).enumerate() {
            match net.agg()[i] {
                Aggregation::Sum => prop_assert!(y > x),
                Aggregation::Max => prop_assert_eq!(x, y),
            }
        }
    }

    #[test]
    fn gain_operator_is_monotone(net in gain_net(4), s in point(4), bump in point(4)) {
        let bigger: Vec<f64> = s.iter().zip(&bump).map(|(a, b)| a + b).collect();
        let lo = net.apply_gamma(&s, None).unwrap();
        let hi = net.apply_gamma(&bigger, None).unwrap();
        prop_assert!(lo.iter().zip(&hi).all(|(a, b)| a <= b));
    }

    #[test]
    fn spectral_radius_scales(slopes in prop::collection::vec(prop::collection::vec(0.0f64..2.0, 3), 3), c in 0.1f64..10.0) {
        let zeroed: Vec<Vec<f64>> = slopes.iter().enumerate().map(|(i, row)| {
            row.iter().enumerate().map(|(j, &x)| if i == j { 0.0 } else { x }).collect()
        }).collect();
        let scaled: Vec<Vec<f64>> = zeroed.iter().map(|row| row.iter().map(|x| c * x).collect()).collect();
        let agg = vec![Aggregation::Sum; 3];
        let a = verify_linear(&GainNetwork::linear(agg.clone(), &zeroed, &[0.0; 3]).unwrap()).unwrap().rho;
        let b = verify_linear(&GainNetwork::linear(agg, &scaled, &[0.0; 3]).unwrap()).unwrap().rho;
        prop_assert!((b - c * a).abs() <= 1e-6 * (1.0 + c * a));
    }

    // The active component of V = max sigma_i^{-1}(V_i) does not change when every state is
    // scaled along a linear path.
    #[test]
    fn active_component_is_scale_invariant(x in prop::collection::vec(-10.0f64..10.0, 3), k in 0.01f64..100.0) {
        prop_assume!(x.iter().any(|v| v.abs() > 1e-3));
        use Aggregation::*;
        let net = GainNetwork::linear(
            vec![Sum, Max, Max],
            &[vec![0.0, 0.0, 0.9], vec![0.9, 0.0, 0.9], vec![0.0, 0.9, 0.0]],
            &[1.0, 0.0, 1.0],
        ).unwrap();
        let dynamics = VectorFieldSpec::from_network(&net).unwrap();
        let parts = derive_parts(&dynamics, &vec![PartSpec::default(); 3]).unwrap();
        let path = OmegaPath { sigma: vec![ScalarFn::linear(0.95).unwrap(), ScalarFn::linear(0.97).unwrap(), ScalarFn::identity()], validation: None };
        let v = compose_v(path, parts).unwrap();
        let (a, tie) = v.active(&x).unwrap();
        prop_assume!(!tie);
        let scaled: Vec<f64> = x.iter().map(|t| k * t).collect();
        let (b, _) = v.active(&scaled).unwrap();
        prop_assert_eq!(a, b);
        let ratio = v.value(&scaled).unwrap() / v.value(&x).unwrap();
        prop_assert!((ratio - k).abs() <= 1e-9 * k);
    }
}
