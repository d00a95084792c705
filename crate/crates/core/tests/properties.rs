use proptest::prelude::*;

use splitsys::geometry::project_halfspace;
use splitsys::harness::{generate_planted_system, Component};
use splitsys::operators::{forward_backward_map, soft_threshold};
use splitsys::solver::{component_step, solve_with_monitor};
use splitsys::verify::InvariantChecker;
use splitsys::{
    AlgoParams, ConvexSet, ForwardOp, Halfspace, ProblemInstance, SetValuedOp, SetValuedOperator, Structure, Vector,
};

const N: usize = 4;

fn vector(n: usize) -> impl Strategy<Value = Vector> {
    prop::collection::vec(-5.0..5.0f64, n).prop_map(Vector::from_vec)
}

fn set(n: usize) -> impl Strategy<Value = ConvexSet> {
    prop_oneof![
        (vector(n), prop::collection::vec(0.0..3.0f64, n)).prop_map(|(lo, w)| {
            let hi = &lo + Vector::from_vec(w);
            ConvexSet::Box { lo, hi }
        }),
        (vector(n), 0.0..4.0f64).prop_map(|(center, radius)| ConvexSet::Ball { center, radius }),
        (vector(n), vector(n)).prop_map(|(normal, anchor)| ConvexSet::Halfspace { normal, anchor }),
        (vector(n), -3.0..3.0f64)
            .prop_filter("nonzero normal", |(a, _)| a.norm() > 1e-3)
            .prop_map(|(normal, offset)| ConvexSet::AffineHyperplane { normal, offset }),
        Just(ConvexSet::whole_space(n)),
    ]
}

fn operator(n: usize) -> impl Strategy<Value = SetValuedOp> {
    prop_oneof![
        Just(SetValuedOp::Zero),
        set(n).prop_map(SetValuedOp::normal_cone),
        (0.01..3.0f64).prop_map(SetValuedOp::l1),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn projection_lands_in_the_set_and_is_idempotent(c in set(N), x in vector(N)) {
        let p = c.project(&x).unwrap();
        prop_assert!(c.distance(&p).unwrap() <= 1e-9);
        let pp = c.project(&p).unwrap();
        prop_assert!((&pp - &p).norm() <= 1e-12 * (1.0 + p.norm()));
    }

    #[test]
    fn projection_is_firmly_nonexpansive(c in set(N), x in vector(N), y in vector(N)) {
        let (px, py) = (c.project(&x).unwrap(), c.project(&y).unwrap());
        let lhs = (&px - &py).norm_squared();
        let disp = ((&px - &x) - (&py - &y)).norm_squared();
        prop_assert!(lhs <= (&x - &y).norm_squared() - disp + 1e-9);
    }

    #[test]
    fn projection_satisfies_the_obtuse_angle_property(c in set(N), x in vector(N), y in vector(N)) {
        let p = c.project(&x).unwrap();
        let member = c.project(&y).unwrap();
        prop_assert!((&x - &p).dot(&(&member - &p)) <= 1e-10 * (1.0 + x.norm() * member.norm()));
    }

    #[test]
    fn halfspace_projection_is_minimal(normal in vector(N), anchor in vector(N), z in vector(N), y in vector(N)) {
        let h = Halfspace::new(normal, anchor).unwrap();
        let p = project_halfspace(&h, &z).unwrap();
        prop_assert!(h.violation(&p) <= 1e-9);
        // any other member is at least as far away
        let q = h.project(&y).unwrap();
        prop_assert!((&z - &p).norm() <= (&z - &q).norm() + 1e-9);
    }

    #[test]
    fn resolvents_are_firmly_nonexpansive(b in operator(N), beta in 0.05..5.0f64, x in vector(N), y in vector(N)) {
        let (rx, ry) = (b.resolvent(beta, &x).unwrap(), b.resolvent(beta, &y).unwrap());
        let d = &rx - &ry;
        prop_assert!(d.norm_squared() <= d.dot(&(&x - &y)) + 1e-9);
    }

    #[test]
    fn resolvent_output_pairs_lie_in_the_graph(b in operator(N), beta in 0.05..5.0f64, x in vector(N)) {
        let r = b.resolvent(beta, &x).unwrap();
        let u = (&x - &r) / beta;
        prop_assert!(b.in_graph(&r, &u, 1e-9).unwrap());
    }

    #[test]
    fn selections_are_bounded_graph_points(b in operator(N), x in vector(N)) {
        let radius = 1.0 + 3.0 * (N as f64).sqrt();
        // selections are only defined on the domain
        let x = match &b {
            SetValuedOp::NormalCone { set } => set.project(&x).unwrap(),
            _ => x,
        };
        let u = b.selection(&x, radius).unwrap();
        prop_assert!(u.norm() <= radius + 1e-12);
        prop_assert!(b.in_graph(&x, &u, 1e-9).unwrap());
    }

    #[test]
    fn normal_cone_resolvent_ignores_the_step(c in set(N), x in vector(N), b1 in 0.01..10.0f64, b2 in 0.01..10.0f64) {
        let op = SetValuedOp::normal_cone(c);
        let d = op.resolvent(b1, &x).unwrap() - op.resolvent(b2, &x).unwrap();
        prop_assert!(d.norm() <= 1e-12);
    }

    #[test]
    fn soft_threshold_matches_the_scalar_prox(lambda in 0.01..3.0f64, beta in 0.05..3.0f64, x in vector(N)) {
        let s = soft_threshold(lambda, beta, &x);
        for (xi, si) in x.iter().zip(s.iter()) {
            // optimality of 1/2 (s - x)^2 + beta*lambda*|s|
            let t = beta * lambda;
            if *si == 0.0 {
                prop_assert!(xi.abs() <= t + 1e-12);
            } else {
                prop_assert!((si - xi + t * si.signum()).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn component_step_never_moves_away_from_a_common_zero(
        seed in 1u64..500,
        z in vector(N),
    ) {
        let inst = generate_planted_system(N, 2, seed, Structure::MixedL1).unwrap();
        let star = inst.known_solution.clone().unwrap();
        let params = AlgoParams::default();
        let z = inst.x_set.project(&z).unwrap();
        for c in &inst.components {
            let step = component_step(&c.a, &c.b, &inst.x_set, &z, params.beta_mid(), &params, inst.radius).unwrap();
            prop_assert!((&step.z_next - &star).norm() <= (&z - &star).norm() + 1e-10);
            prop_assert!(inst.x_set.distance(&step.z_next).unwrap() <= 1e-10);
            if let Some(ls) = step.linesearch() {
                // the separating halfspace keeps the solution on its closed side
                prop_assert!(ls.normal.dot(&(&star - &ls.x_bar)) <= 1e-9);
            }
        }
    }

    #[test]
    fn solve_keeps_every_invariant(seed in 1u64..200, n in 1usize..8, m in 1usize..4, mixed in any::<bool>()) {
        let structure = if mixed && m >= 2 { Structure::MixedL1 } else { Structure::AffineVi };
        let inst = generate_planted_system(n, m, seed, structure).unwrap();
        let params = AlgoParams::default();
        let mut checker = InvariantChecker::new(&inst, &params, false);
        let out = solve_with_monitor(&inst, &params, &inst.default_start(), &mut checker).unwrap();
        prop_assert_eq!(checker.counts.total_violations(), 0, "{:?}", checker.first_violation);
        prop_assert_eq!(out.status, splitsys::SolveStatus::Solved);
        prop_assert!(out.final_residual() <= params.tol_outer);
    }

    #[test]
    fn fixed_points_of_the_forward_backward_map_are_zeros(a in vector(N), beta in 0.1..1.0f64) {
        // A(x) = x - a with no constraint has the single zero a
        let op = ForwardOp::shifted_identity(&a);
        let j = forward_backward_map(&op, &SetValuedOp::Zero, beta, &a).unwrap();
        prop_assert!((&j - &a).norm() <= 1e-12 * (1.0 + a.norm()));
        let inst = ProblemInstance::new(
            "shift",
            N,
            vec![Component { a: op, b: SetValuedOp::Zero }],
            ConvexSet::whole_space(N),
            Some(a.clone()),
            1.0,
        )
        .unwrap();
        prop_assert!(inst.planted_residual(beta).unwrap().unwrap() <= 1e-12 * (1.0 + a.norm()));
    }
}
