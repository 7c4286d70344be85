use std::f64::consts::PI;
use std::sync::Arc;

use approx::assert_relative_eq;
use proptest::prelude::*;
use spectral_covers::bundle::{
    build_cycle_connection, connection_lambda0, connection_spectrum, cycle_connection_formula, cyclic_cover,
    holonomy_gap_experiment, parse_bundle, pullback, write_bundle, GraphBundle, Matrix, Section,
};
use spectral_covers::covering::{lift_cover, FiberAction, Generator, Move, Voltages};
use spectral_covers::graph::{explicit, Measure};
use spectral_covers::spectral::SymOperator;

fn cycle_walk(n: usize) -> Vec<usize> {
    (0..=n).map(|i| i % n).collect()
}

#[test]
fn cycle_connection_holonomy() {
    let flat = build_cycle_connection(8, 0.0f64).unwrap();
    assert!(flat.edge_matrix(0).distance(&Matrix::identity(2)) < 1e-15);

    let full = build_cycle_connection(8, 2.0 * PI).unwrap();
    assert!(full.edge_matrix(3).distance(&Matrix::rotation(PI / 4.0)) < 1e-15);
    let h = full.holonomy(&cycle_walk(8)).unwrap();
    assert!(h.distance(&Matrix::identity(2)) < 1e-12);

    let half = build_cycle_connection(8, PI).unwrap();
    let h = half.holonomy(&cycle_walk(8)).unwrap();
    let minus = Matrix::from_rows(2, vec![-1.0, 0.0, 0.0, -1.0]).unwrap();
    assert!(h.distance(&minus) < 1e-12);

    assert!(build_cycle_connection(2, PI).is_err());
    assert!(half.holonomy(&[0, 1, 2]).is_err());
    assert!(half.holonomy(&[0, 2, 0]).is_err());
}

#[test]
fn cycle_connection_bottoms() {
    let flat = build_cycle_connection(8, 0.0f64).unwrap();
    assert!(connection_lambda0(&flat).unwrap().lambda0().abs() < 1e-12);

    let half = connection_lambda0(&build_cycle_connection(8, PI).unwrap()).unwrap();
    assert_relative_eq!(half.lambda0(), 2.0 - 2.0 * (PI / 8.0).cos(), epsilon = 1e-12);
    assert_relative_eq!(half.lambda0(), 0.152241, epsilon = 5e-7);
    assert!(half.residuals[0] < 1e-10);

    let full = connection_lambda0(&build_cycle_connection(8, 2.0 * PI).unwrap()).unwrap();
    assert!(full.lambda0().abs() < 1e-12);

    // Whole spectrum against the block-circulant formula.
    let b = build_cycle_connection(10, 1.3).unwrap();
    let spec = connection_spectrum(&b, 20, 1e-10).unwrap();
    let mut expected: Vec<f64> = (0..10)
        .flat_map(|k| {
            let t = 2.0 * PI * k as f64 / 10.0;
            [2.0 - 2.0 * (0.13 + t).cos(), 2.0 - 2.0 * (-0.13 + t).cos()]
        })
        .collect();
    expected.sort_by(f64::total_cmp);
    for (a, b) in spec.values.iter().zip(&expected) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn pullback_to_double_cover() {
    let base = build_cycle_connection(8, PI).unwrap();
    let cover = cyclic_cover::<f64>(8, 2).unwrap();
    assert_eq!(cover.num_vertices(), 16);
    let lifted = pullback(&cover, &base).unwrap();
    assert_eq!(lifted.dim(), 2);
    for e in 0..lifted.graph().num_edges() {
        assert!(lifted.edge_matrix(e).distance(&Matrix::rotation(PI / 8.0)) < 1e-15);
    }
    // Walk once around the 16-cycle through the total space.
    let g = lifted.graph();
    let mut walk = vec![cover.root()];
    let mut prev = usize::MAX;
    loop {
        let here = *walk.last().unwrap();
        let next = g.halves(here).iter().map(|&h| g.head(h)).find(|&y| y != prev).unwrap();
        prev = here;
        walk.push(next);
        if next == cover.root() {
            break;
        }
    }
    assert_eq!(walk.len(), 17);
    let h = lifted.holonomy(&walk).unwrap();
    assert!(h.distance(&Matrix::identity(2)) < 1e-12);
    assert_eq!(lifted.parallel_dimension().unwrap(), 2);
    assert_eq!(base.parallel_dimension().unwrap(), 0);

    let trivial = GraphBundle::trivial(cover.base().clone(), 3);
    let up = pullback(&cover, &trivial).unwrap();
    assert!((0..up.graph().num_edges()).all(|e| up.edge_matrix(e) == &Matrix::identity(3)));
}

#[test]
fn holonomy_experiments() {
    let r = holonomy_gap_experiment(8, 2).unwrap();
    assert_relative_eq!(r.base_lambda0, 0.152241, epsilon = 5e-7);
    assert!(r.cover_lambda0.abs() < 1e-12);
    assert!(r.gap > 0.15);
    assert_eq!((r.base_parallel, r.cover_parallel), (0, 2));
    assert!(r.control_base_lambda0.abs() < 1e-12 && r.control_cover_lambda0.abs() < 1e-12);

    let r = holonomy_gap_experiment(8, 1).unwrap();
    assert!(r.base_lambda0.abs() < 1e-12 && r.cover_lambda0.abs() < 1e-12);

    let r = holonomy_gap_experiment(12, 3).unwrap();
    assert!((r.base_lambda0 - r.base_formula).abs() < 1e-10);
    assert!((r.cover_lambda0 - r.cover_formula).abs() < 1e-10);
    assert_relative_eq!(r.base_formula, 2.0 - 2.0 * (PI / 18.0).cos(), epsilon = 1e-14);
    assert!(r.cover_formula.abs() < 1e-14);
}

/// λ₀ vanishes exactly when some parallel section exists.
#[test]
fn parallel_sections_detect_zero_bottom() {
    for n in [3, 5, 8] {
        for theta in [0.0, 0.4, PI, 2.0 * PI, 3.0 * PI, 4.0 * PI] {
            let b = build_cycle_connection(n, theta).unwrap();
            let zero = connection_lambda0(&b).unwrap().lambda0().abs() < 1e-10;
            let parallel = b.parallel_dimension().unwrap() > 0;
            assert_eq!(zero, parallel, "n = {n}, θ = {theta}");
            let h = b.holonomy(&cycle_walk(n)).unwrap();
            assert_eq!(parallel, h.distance(&Matrix::identity(2)) < 1e-9);
        }
    }
}

#[test]
fn bundle_file_round_trip() {
    let b = build_cycle_connection(5, 1.1).unwrap();
    let text = write_bundle(&b);
    assert_eq!(text.lines().filter(|l| l.starts_with("conn")).count(), 5);
    let back = parse_bundle::<f64>(&text).unwrap();
    for e in 0..5 {
        assert!(back.edge_matrix(e).distance(b.edge_matrix(e)) < 1e-15);
    }

    let base = "graph tri 3 3\nv 0 1 0 0\nv 1 1 0 0\nv 2 1 0 0\ne 0 1 1\ne 1 2 1\ne 2 0 1\n";
    let reversed = format!("{base}conn 1 0 0 -1 1 0\n");
    let b = parse_bundle::<f64>(&reversed).unwrap();
    // The line gives O_{10}; edge 0 stores O_{01}, its transpose.
    assert!(b.edge_matrix(0).distance(&Matrix::rotation(-PI / 2.0)) < 1e-15);
    assert!(b.edge_matrix(1).distance(&Matrix::identity(2)) < 1e-15);

    assert!(parse_bundle::<f64>(&format!("{base}conn 0 1 1 1 0 1\n")).is_err());
    assert!(parse_bundle::<f64>(&format!("{base}conn 0 1 1 0 0\n")).is_err());
    assert!(parse_bundle::<f64>(&format!("{base}conn 0 1 1\nconn 1 2 1 0 0 1\n")).is_err());
    assert!(parse_bundle::<f64>(base).is_err());
}

fn givens(d: usize, i: usize, j: usize, a: f64) -> Matrix<f64> {
    let mut m = Matrix::identity(d);
    let (s, c) = a.sin_cos();
    m.entries[i * d + i] = c;
    m.entries[j * d + j] = c;
    m.entries[i * d + j] = -s;
    m.entries[j * d + i] = s;
    m
}

fn random_orthogonal(d: usize, angles: &[f64], flip: bool) -> Matrix<f64> {
    let mut m = Matrix::identity(d);
    let mut k = 0;
    for i in 0..d {
        for j in i + 1..d {
            m = m.mul(&givens(d, i, j, angles[k % angles.len()]));
            k += 1;
        }
    }
    if flip {
        for c in 0..d {
            m.entries[c] = -m.entries[c];
        }
    }
    m
}

fn theta_graph_bundle(d: usize, angles: &[f64], flips: &[bool], normalized: bool) -> GraphBundle<f64> {
    let edges = [(0, 1, 1.0), (1, 2, 2.0), (2, 3, 0.5), (3, 0, 1.0), (0, 2, 1.5)];
    let mut b = explicit::<f64>("theta", 4, &edges);
    if normalized {
        b = b.measure(Measure::Normalized);
    }
    let g = Arc::new(b.build().unwrap());
    let conn = (0..5)
        .map(|e| random_orthogonal(d, &angles[e * 3..e * 3 + 3], flips[e]))
        .collect();
    GraphBundle::new(g, d, conn).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn block_operator_is_symmetric(
        d in 1usize..=3,
        angles in prop::collection::vec(-PI..PI, 15),
        flips in prop::collection::vec(any::<bool>(), 5),
        f in prop::collection::vec(-1.0f64..1.0, 12),
        g in prop::collection::vec(-1.0f64..1.0, 12),
        normalized in any::<bool>(),
    ) {
        let b = theta_graph_bundle(d, &angles, &flips, normalized);
        let mu = b.graph().measure().to_vec();
        let f = Section { dim: d, values: f[..4 * d].to_vec() };
        let g = Section { dim: d, values: g[..4 * d].to_vec() };
        let inner = |a: &Section<f64>, c: &Section<f64>| {
            (0..4).map(|v| mu[v] * a.at(v).iter().zip(c.at(v)).map(|(x, y)| x * y).sum::<f64>()).sum::<f64>()
        };
        prop_assert!((inner(&b.apply(&f), &g) - inner(&f, &b.apply(&g))).abs() < 1e-12);

        let a = b.symmetrized();
        let x: Vec<f64> = (0..4 * d).map(|i| f.values[i] * mu[i / d].sqrt()).collect();
        let mut y = vec![0.0; 4 * d];
        a.apply(&x, &mut y);
        let direct = b.apply(&f);
        for i in 0..4 * d {
            prop_assert!((y[i] / mu[i / d].sqrt() - direct.values[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn pullback_never_raises_bottom(
        angles in prop::collection::vec(-PI..PI, 15),
        flips in prop::collection::vec(any::<bool>(), 5),
        q in 1usize..=4,
        n in 3usize..=9,
        theta in 0.0f64..(2.0 * PI),
    ) {
        let base = build_cycle_connection(n, theta).unwrap();
        let cover = cyclic_cover::<f64>(n, q).unwrap();
        let up = pullback(&cover, &base).unwrap();
        let l1 = connection_lambda0(&base).unwrap().lambda0();
        let l2 = connection_lambda0(&up).unwrap().lambda0();
        prop_assert!(l2 <= l1 + 1e-9);
        prop_assert!((l1 - cycle_connection_formula(n, theta)).abs() < 1e-10);
        prop_assert!((l2 - cycle_connection_formula(n * q, theta * q as f64)).abs() < 1e-10);

        let b = theta_graph_bundle(2, &angles, &flips, true);
        let gens = vec![
            Generator { name: "s".into(), action: Move::from_cycles(5, "(1 2)(3 4 5)").unwrap() },
            Generator { name: "t".into(), action: Move::from_cycles(5, "(2 3)").unwrap() },
        ];
        let v = Voltages::new(b.graph(), 0, &[(3, 0), (4, 1)]).unwrap();
        let cover = lift_cover(b.graph().clone(), v, Arc::new(FiberAction::new(gens).unwrap()), 0).unwrap();
        let up = pullback(&cover, &b).unwrap();
        let l1 = connection_lambda0(&b).unwrap().lambda0();
        let l2 = connection_lambda0(&up).unwrap().lambda0();
        prop_assert!(l2 <= l1 + 1e-9);
    }
}
