use std::sync::Arc;

use spectral_covers::covering::{
    fiber_ball_multiplicity, fundamental_domains, lift_cover, preimage_in_domain, spec::parse_cover, CoveringGraph,
    FiberAction, Generator, Move, Voltages,
};
use spectral_covers::graph::{bouquet, cycle, SchrodingerOp, VertexFunction};
use spectral_covers::spectral::{lowest_eigenpairs, rayleigh};
use spectral_covers::Error;

fn z_line(r: usize) -> CoveringGraph<f64> {
    let base = Arc::new(bouquet::<f64>(1).build().unwrap());
    let v = Voltages::new(&base, 0, &[(0, 0)]).unwrap();
    lift_cover(base, v, Arc::new(FiberAction::z_shift()), r).unwrap()
}

fn c6_over_c3() -> CoveringGraph<f64> {
    let base = Arc::new(cycle::<f64>(3).build().unwrap());
    let swap = Generator {
        name: "s".into(),
        action: Move::from_cycles(2, "(1 2)").unwrap(),
    };
    let action = Arc::new(FiberAction::new(vec![swap]).unwrap());
    let v = Voltages::new(&base, 0, &[(2, 0)]).unwrap();
    lift_cover(base, v, action, 0).unwrap()
}

fn free_tree(r: usize) -> CoveringGraph<f64> {
    let base = Arc::new(bouquet::<f64>(2).build().unwrap());
    let v = Voltages::new(&base, 0, &[(0, 0), (1, 1)]).unwrap();
    lift_cover(base, v, Arc::new(FiberAction::free(2)), r).unwrap()
}

#[test]
fn line_over_bouquet_is_a_path() {
    let c = z_line(5);
    let g = c.total();
    assert_eq!(g.num_vertices(), 11);
    assert_eq!(g.num_edges(), 10);
    let frontier: Vec<usize> = (0..11).filter(|&t| c.is_frontier(t)).collect();
    assert_eq!(frontier.len(), 2);
    for t in frontier {
        assert_eq!(c.depth(t), 5);
    }
}

#[test]
fn two_fold_cover_of_triangle_is_hexagon() {
    let c = c6_over_c3();
    let g = c.total();
    assert_eq!(g.num_vertices(), 6);
    assert_eq!(g.num_edges(), 6);
    assert!((0..6).all(|v| g.degree(v) == 2));
    assert_eq!(g.diameter(), 3);
    assert!(c.is_finite());
    for v in 0..3 {
        assert_eq!(c.fiber(v).len(), 2);
    }
}

#[test]
fn free_group_cover_is_tree_ball() {
    let c = free_tree(3);
    let g = c.total();
    assert_eq!(g.num_vertices(), 53);
    assert_eq!(g.num_edges(), 52);
    assert_eq!(c.interior().len(), 17);
}

#[test]
fn local_isometry_at_interior_vertices() {
    for c in [z_line(6), c6_over_c3(), free_tree(3)] {
        let base = c.base();
        for t in c.interior() {
            let mut lifted: Vec<(usize, f64)> = c.total().neighbors(t).map(|(s, w)| (c.project(s), w)).collect();
            let mut below: Vec<(usize, f64)> = base.neighbors(c.project(t)).collect();
            lifted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            below.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert_eq!(lifted, below);
            let image: std::collections::HashSet<usize> = c.total().neighbors(t).map(|(s, _)| s).collect();
            assert_eq!(image.len(), c.total().degree(t), "1-ball maps injectively");
        }
    }
}

#[test]
fn fundamental_domains_match_hand_partitions() {
    let line = z_line(6);
    let d = fundamental_domains(&line, 0).unwrap();
    assert!(d.domains.iter().filter(|dom| !dom.is_empty()).all(|dom| dom.len() == 1));

    let hex = c6_over_c3();
    let d = fundamental_domains(&hex, 0).unwrap();
    assert_eq!(d.domains.len(), 2);
    assert!(d.domains.iter().all(|dom| dom.len() == 3));

    let tree = free_tree(3);
    let d = fundamental_domains(&tree, 0).unwrap();
    for (y, dom) in d.fiber.iter().zip(&d.domains) {
        if !tree.is_frontier(*y) {
            assert_eq!(dom, &vec![*y]);
        }
    }
}

#[test]
fn fiber_ball_multiplicity_values() {
    assert_eq!(fiber_ball_multiplicity(&z_line(6), 0, 1).unwrap(), 3);
    assert_eq!(fiber_ball_multiplicity(&c6_over_c3(), 0, 1).unwrap(), 1);
    assert_eq!(fiber_ball_multiplicity(&free_tree(3), 0, 0).unwrap(), 1);
    assert!(matches!(
        fiber_ball_multiplicity(&z_line(3), 0, 4),
        Err(Error::Truncation(_))
    ));
    let line = z_line(8);
    let counts: Vec<usize> = (0..6).map(|r| fiber_ball_multiplicity(&line, 0, r).unwrap()).collect();
    assert!(counts.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn preimages_stay_in_domain_balls() {
    let hex = c6_over_c3();
    let d = fundamental_domains(&hex, 0).unwrap();
    for &y in &d.fiber {
        assert_eq!(preimage_in_domain(&hex, &d, &[0], 0, y).unwrap(), vec![y]);
        let all = preimage_in_domain(&hex, &d, &[0, 1, 2], 1, y).unwrap();
        assert_eq!(all.len(), 3);
        let near = hex.total().ball(y, 1);
        assert!(all.iter().all(|t| near.contains(t)));
    }
    let line = z_line(6);
    let d = fundamental_domains(&line, 0).unwrap();
    for &y in d.fiber.iter().filter(|&&y| !line.is_frontier(y)) {
        assert_eq!(preimage_in_domain(&line, &d, &[0], 1, y).unwrap(), vec![y]);
    }
}

#[test]
fn lifted_eigenvector_is_eigenvector() {
    let hex = c6_over_c3();
    let op = SchrodingerOp::new(hex.base().clone(), vec![0.0, 0.5, 1.0]).unwrap();
    let lifted = hex.lift_operator(&op).unwrap();
    let rep = lowest_eigenpairs(&op, 3, 1e-10).unwrap();
    for (lambda, f) in rep.values.iter().zip(&rep.vectors) {
        let g = hex.lift_function(f);
        let sg = lifted.apply(&g).unwrap();
        for t in 0..6 {
            assert!((sg.get(t) - lambda * g.get(t)).abs() < 1e-10);
        }
        assert!((rayleigh(&lifted, &g).unwrap() - lambda).abs() < 1e-12);
    }
    let one = hex.lift_function(&VertexFunction::constant(3, 1.0));
    assert!(one.values().iter().all(|&x| x == 1.0));
}

#[test]
fn bad_voltages_are_rejected() {
    let base = Arc::new(cycle::<f64>(3).build().unwrap());
    assert!(Voltages::new(&base, 0, &[(0, 0), (1, 0)]).is_err());
    assert!(Voltages::with_tree(&base, 0, vec![0, 1], &[(1, 0)]).is_err());
    assert!(Voltages::with_tree(&base, 0, vec![0], &[]).is_err());
    let v = Voltages::new(&base, 0, &[(2, 3)]).unwrap();
    assert!(lift_cover(base, v, Arc::new(FiberAction::z_shift()), 4).is_err());
}

#[test]
fn truncation_without_interior_fails() {
    let base = Arc::new(bouquet::<f64>(1).build().unwrap());
    let v = Voltages::new(&base, 0, &[(0, 0)]).unwrap();
    assert!(matches!(
        lift_cover(base, v, Arc::new(FiberAction::z_shift()), 0),
        Err(Error::Truncation(_))
    ));
}

#[test]
fn cover_file_round_trip() {
    let triangle = "graph tri 3 3\nv 0 1 0 0\nv 1 1 0 0\nv 2 1 0 0\ne 0 1 1\ne 1 2 1\ne 2 0 1\n";
    let text = "# double cover\nbase tri.graph\nroot 0\ntree 0 1\nperm s (1 2)\nvoltage 2 s\n";
    let spec = parse_cover::<f64>(text, |name| {
        assert_eq!(name, "tri.graph");
        Ok(triangle.to_string())
    })
    .unwrap();
    let c = spec.build().unwrap();
    assert_eq!(c.total().num_vertices(), 6);

    let lazy = "base tri.graph\nrule t z-shift\nvoltage 2 t\ntrunc 7\n";
    let spec = parse_cover::<f64>(lazy, |_| Ok(triangle.to_string())).unwrap();
    let c = spec.build().unwrap();
    assert_eq!(spec.trunc, 7);
    assert!(!c.is_finite());

    let bad = "base tri.graph\nrule t warp\n";
    assert!(matches!(
        parse_cover::<f64>(bad, |_| Ok(triangle.to_string())),
        Err(Error::Parse { line: 2, .. })
    ));
}
