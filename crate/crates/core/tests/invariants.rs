use proptest::prelude::*;

use ppot::cable::{build_cable_system, cable_energy, interpolate, CableRegion};
use ppot::canon::to_canonical_json;
use ppot::capacity::{capacity, CondenserSpec};
use ppot::netgraph::{ball, MetricKind, NetGraph, VertexSet};
use ppot::penergy::{energy, solve_dirichlet, DirichletProblem, SolverOptions};
use ppot::scaling::PowerScaling;

const SIDE: usize = 6;

/// `SIDE x SIDE` grid with unit spacing and diagonal edges.
fn grid() -> NetGraph {
    let idx = |i: usize, j: usize| i * SIDE + j;
    let coords = (0..SIDE * SIDE).map(|k| [(k / SIDE) as f64, (k % SIDE) as f64]).collect();
    let mut edges = Vec::new();
    let mut lengths = Vec::new();
    for i in 0..SIDE {
        for j in 0..SIDE {
            for (di, dj) in [(0, 1), (1, 0), (1, 1)] {
                if i + di < SIDE && j + dj < SIDE {
                    edges.push((idx(i, j), idx(i + di, j + dj)));
                    lengths.push(((di * di + dj * dj) as f64).sqrt());
                }
            }
        }
    }
    NetGraph::from_edges(coords, 2, 1.0, PowerScaling::volume(2.0), PowerScaling::walk(2.0), edges, lengths)
}

/// The inner `(SIDE-2)^2` block; its ring is the outer frame.
fn interior() -> VertexSet {
    VertexSet::new((0..SIDE * SIDE).filter(|k| (1..SIDE - 1).contains(&(k / SIDE)) && (1..SIDE - 1).contains(&(k % SIDE))).collect())
}

fn values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, SIDE * SIDE)
}

fn exponent() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.5), Just(2.0), Just(3.0), 1.2..4.0f64]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn energy_is_p_homogeneous(u in values(), p in exponent(), t in -3.0..3.0f64) {
        let g = grid();
        let scaled: Vec<f64> = u.iter().map(|x| t * x).collect();
        let lhs = energy(&g, &scaled, p, None);
        let rhs = t.abs().powf(p) * energy(&g, &u, p, None);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.max(1e-300));
    }

    #[test]
    fn energy_ignores_constants(u in values(), p in exponent(), c in -5.0..5.0f64) {
        let g = grid();
        let shifted: Vec<f64> = u.iter().map(|x| x + c).collect();
        let e = energy(&g, &u, p, None);
        prop_assert!((energy(&g, &shifted, p, None) - e).abs() <= 1e-10 * e.max(1.0));
    }

    #[test]
    fn harmonic_solution_obeys_maximum_principle(g_vals in values(), p in exponent()) {
        let g = grid();
        let prob = DirichletProblem::harmonic(&g, interior(), g_vals.clone(), p).unwrap();
        let sol = solve_dirichlet(&prob, &SolverOptions::default()).unwrap();
        let ring = g.boundary_ring(&interior());
        let lo = ring.iter().map(|v| g_vals[v]).fold(f64::INFINITY, f64::min);
        let hi = ring.iter().map(|v| g_vals[v]).fold(f64::NEG_INFINITY, f64::max);
        for v in interior().iter() {
            prop_assert!(sol.u[v] >= lo - 1e-8 && sol.u[v] <= hi + 1e-8);
        }
    }

    #[test]
    fn minimizer_scales_with_data(g_vals in values(), p in exponent(), t in 0.1..10.0f64, lambda in 0.0..2.0f64) {
        let g = grid();
        let n = g.n();
        let opts = SolverOptions::default();
        let base = DirichletProblem::new(&g, interior(), g_vals.clone(), lambda, vec![0.0; n], p).unwrap();
        let scaled_vals: Vec<f64> = g_vals.iter().map(|x| t * x).collect();
        let scaled = DirichletProblem::new(&g, interior(), scaled_vals, lambda, vec![0.0; n], p).unwrap();
        let u = solve_dirichlet(&base, &opts).unwrap().u;
        let w = solve_dirichlet(&scaled, &opts).unwrap().u;
        let size = g_vals.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for v in interior().iter() {
            prop_assert!((w[v] - t * u[v]).abs() <= 1e-6 * t * size.max(1e-3));
        }
    }

    #[test]
    fn cable_energy_matches_graph_energy(u in values(), p in exponent()) {
        let g = grid();
        let cs = build_cable_system(&g);
        let f = interpolate(&g, &u).unwrap();
        let e = energy(&g, &u, p, None);
        let c = cable_energy(&g, &cs, &f, p, CableRegion::All);
        prop_assert!((c - e).abs() <= 1e-12 * e.max(1e-300));
    }

    #[test]
    fn balls_are_nested(center in 0..SIDE * SIDE, r1 in 0.0..8.0f64, dr in 0.0..4.0f64) {
        let g = grid();
        for metric in [MetricKind::Intrinsic, MetricKind::Euclidean] {
            let small = ball(&g, center, r1, metric);
            let big = ball(&g, center, r1 + dr, metric);
            prop_assert!(small.is_subset(&big));
        }
    }

    #[test]
    fn capacity_shrinks_as_plates_separate(p in exponent()) {
        let g = grid();
        let near = CondenserSpec::new(VertexSet::new(vec![0]), VertexSet::new(vec![SIDE + 1, 1, SIDE]).difference(&VertexSet::new(vec![0])));
        let far = CondenserSpec::new(VertexSet::new(vec![0]), VertexSet::new(vec![SIDE * SIDE - 1]));
        let opts = SolverOptions::default();
        prop_assert!(capacity(&g, &far, p, &opts).unwrap().value < capacity(&g, &near, p, &opts).unwrap().value);
    }

    #[test]
    fn canonical_json_round_trips(xs in prop::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 0..20)) {
        let text = to_canonical_json(&xs, false).unwrap();
        let back: Vec<f64> = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(&back, &xs);
        prop_assert_eq!(to_canonical_json(&back, false).unwrap(), text);
    }
}
