use std::collections::HashSet;
use std::sync::Arc;

use proptest::prelude::*;
use spectral_covers::amenability::{cover_orbits, generator_set};
use spectral_covers::covering::{lift_cover, Coset, CoveringGraph, FiberAction, Generator, Move, Voltages};
use spectral_covers::graph::{bouquet, cycle, explicit, GraphBuilder, SchrodingerOp, VertexFunction};
use spectral_covers::spectral::lowest_eigenpairs;
use spectral_covers::transplant::{
    assemble_chi, build_partition, transplant, transplant_rayleigh, weyl_family, PartitionOfUnity,
};
use spectral_covers::{Error, Exact, Scalar};

fn z_line<T: Scalar>(r: usize) -> CoveringGraph<T> {
    let base = Arc::new(bouquet::<T>(1).build().unwrap());
    let v = Voltages::new(&base, 0, &[(0, 0)]).unwrap();
    lift_cover(base, v, Arc::new(FiberAction::z_shift()), r).unwrap()
}

fn c6_over_c3() -> CoveringGraph<f64> {
    let base = Arc::new(cycle::<f64>(3).build().unwrap());
    let swap = Generator {
        name: "s".into(),
        action: Move::from_cycles(2, "(1 2)").unwrap(),
    };
    let v = Voltages::new(&base, 0, &[(2, 0)]).unwrap();
    lift_cover(base, v, Arc::new(FiberAction::new(vec![swap]).unwrap()), 0).unwrap()
}

fn at<T: Scalar>(cover: &CoveringGraph<T>, n: i64) -> usize {
    cover.vertex(0, Coset::Int(n)).unwrap()
}

fn ints<T: Scalar>(cover: &CoveringGraph<T>, set: &[usize]) -> Vec<i64> {
    let mut out: Vec<i64> = set
        .iter()
        .map(|&t| match cover.coset(t) {
            Coset::Int(n) => n,
            other => panic!("unexpected coset {other}"),
        })
        .collect();
    out.sort_unstable();
    out
}

fn unit_constant(op: &SchrodingerOp<f64>) -> VertexFunction<f64> {
    let one = VertexFunction::constant(op.num_vertices(), 1.0);
    one.scaled(1.0 / op.norm_sq(&one).sqrt())
}

#[test]
fn line_partition_is_one_third() {
    let line = z_line::<Exact>(12);
    let pou = build_partition(&line, 0, 1, 1).unwrap();
    assert!(pou.compact_branch);
    let third = Exact::new(1, 3);
    for (i, &y) in pou.fiber.iter().enumerate() {
        let phi = pou.phi_dense(i);
        for z in (0..line.num_vertices()).filter(|&z| pou.complete[z]) {
            let gap = (ints(&line, &[z])[0] - ints(&line, &[y])[0]).abs();
            let expected = if gap <= 1 { third } else { Exact::from(0) };
            assert_eq!(phi[z], expected);
        }
    }
    assert!(pou.phi1.iter().all(|x| *x == Exact::from(0)));
}

#[test]
fn line_q_sets_by_hand() {
    let line = z_line::<Exact>(30);
    let pou = build_partition(&line, 0, 1, 1).unwrap();
    let p: Vec<usize> = (0..10).map(|n| at(&line, n)).collect();
    let plan = assemble_chi(&line, &pou, &p, None).unwrap();
    assert_eq!(ints(&line, &plan.q_plus), (2..=7).collect::<Vec<_>>());
    assert_eq!(ints(&line, &plan.q_minus), vec![-2, -1, 0, 1, 8, 9, 10, 11]);
    assert!((plan.ratio() - 8.0 / 6.0).abs() < 1e-15);
    assert_eq!(plan.q.len(), 14);
}

#[test]
fn finite_cover_partition_sums_to_one() {
    let hex = c6_over_c3();
    for r in [1, 3, 4] {
        let pou = build_partition(&hex, 0, r, 1).unwrap();
        assert_eq!(pou.fiber.len(), 2);
        let total: Vec<f64> = (0..6).map(|z| pou.phi_dense(0)[z] + pou.phi_dense(1)[z]).collect();
        assert!(total.iter().all(|&t| (t - 1.0).abs() < 1e-12), "r = {r}");
        assert!(pou.phi1.iter().all(|&x| x == 0.0));
    }
}

#[test]
fn identity_cover_partition_is_trivial() {
    let base = Arc::new(cycle::<f64>(4).build().unwrap());
    let v = Voltages::new(&base, 0, &[]).unwrap();
    let cover = lift_cover(base, v, Arc::new(FiberAction::new(vec![]).unwrap()), 0).unwrap();
    assert_eq!(cover.num_vertices(), 4);
    let pou = build_partition(&cover, 0, 2, 1).unwrap();
    assert!(pou.phi_dense(0).iter().all(|&x| x == 1.0));
    assert!(pou.phi1.iter().all(|&x| x == 0.0));

    let op = SchrodingerOp::new(cover.base().clone(), vec![0.2, 0.0, 0.7, 0.1]).unwrap();
    let f = lowest_eigenpairs(&op, 2, 1e-12).unwrap().vectors[1].clone();
    let plan = assemble_chi(&cover, &pou, &pou.fiber, None).unwrap();
    let (zeta, rep) = transplant(&cover, &op, &f, 0.4, &pou, &plan).unwrap();
    for v in 0..4 {
        assert!((zeta.get(cover.vertex(v, Coset::Index(0)).unwrap()) - f.get(v)).abs() < 1e-12);
    }
    assert!((rep.rho1 - rep.rho2).abs() < 1e-12);
    let (_, ray) = transplant_rayleigh(&cover, &op, &f, &pou, &plan).unwrap();
    assert!((ray.base - ray.total).abs() < 1e-12);
}

#[test]
fn full_fiber_of_finite_cover_preserves_residual() {
    let hex = c6_over_c3();
    let op = SchrodingerOp::new(hex.base().clone(), vec![0.0, 0.5, 1.0]).unwrap();
    let pou = build_partition(&hex, 0, 1, 1).unwrap();
    let plan = assemble_chi(&hex, &pou, &pou.fiber, None).unwrap();
    assert!(plan.q_minus.is_empty());
    assert_eq!(plan.ratio(), 0.0);
    assert!(plan.chi.iter().all(|&c| (c - 1.0).abs() < 1e-15));

    let raw = VertexFunction::new(vec![0.3, -0.8, 0.5]);
    let f = raw.scaled(1.0 / op.norm_sq(&raw).sqrt());
    let (_, rep) = transplant(&hex, &op, &f, 0.7, &pou, &plan).unwrap();
    assert!((rep.rho1 - rep.rho2).abs() < 1e-12);
    assert!(rep.budget_holds);
    let (_, ray) = transplant_rayleigh(&hex, &op, &f, &pou, &plan).unwrap();
    assert!((ray.base - ray.total).abs() < 1e-12);
    assert!(ray.holds);
}

#[test]
fn line_budget_and_monotone_residuals() {
    let line = z_line::<f64>(200);
    let op = SchrodingerOp::laplacian(line.base().clone());
    let f = unit_constant(&op);
    for (r, s) in [(1, 1), (2, 1), (1, 2)] {
        let pou = build_partition(&line, 0, r, s).unwrap();
        let mut last = f64::INFINITY;
        let mut c0 = None;
        let mut last_rayleigh = f64::INFINITY;
        for n in [10i64, 40, 160] {
            let p: Vec<usize> = (0..n).map(|k| at(&line, k - n / 2)).collect();
            let plan = assemble_chi(&line, &pou, &p, None).unwrap();
            let (zeta, rep) = transplant(&line, &op, &f, 0.0, &pou, &plan).unwrap();
            assert!(rep.budget_holds, "r={r} s={s} n={n}: {rep:?}");
            assert!(rep.rho2 * rep.rho2 <= rep.budget_rhs);
            assert_eq!(rep.rho1, 0.0);
            assert!(rep.rho2 < last);
            last = rep.rho2;
            // The uniform bound does not depend on P.
            let c = *c0.get_or_insert(rep.c0);
            assert!((rep.c0 - c).abs() < 1e-12);
            let norm: f64 = zeta.values().iter().map(|x| x * x).sum();
            assert!((norm - 1.0).abs() < 1e-12);

            let (_, ray) = transplant_rayleigh(&line, &op, &f, &pou, &plan).unwrap();
            assert!(ray.holds);
            assert!(ray.total < last_rayleigh);
            last_rayleigh = ray.total;
        }
    }
}

#[test]
fn support_and_truncation_errors() {
    let line = z_line::<f64>(20);
    let op = SchrodingerOp::laplacian(line.base().clone());
    let f = unit_constant(&op);
    assert!(matches!(build_partition(&line, 0, 19, 1), Err(Error::Truncation(_))));
    assert!(build_partition(&line, 0, 2, 0).is_err());
    let pou = build_partition(&line, 0, 1, 1).unwrap();
    assert!(matches!(
        assemble_chi(&line, &pou, &[at(&line, 17)], None),
        Err(Error::Truncation(_))
    ));
    let p = [at(&line, 0)];
    let k = line.total().ball(at(&line, 1), 0);
    assert!(assemble_chi(&line, &pou, &p, Some(&k)).is_err());
    let far = line.total().ball(at(&line, 5), 1);
    let plan = assemble_chi(&line, &pou, &p, Some(&far)).unwrap();
    // A single point of ℤ never has χ = 1 on a whole ball.
    assert!(matches!(
        transplant(&line, &op, &f, 0.0, &pou, &plan),
        Err(Error::EmptyDomain(_))
    ));

    let path = Arc::new(spectral_covers::graph::path::<f64>(5).build().unwrap());
    let v = Voltages::new(&path, 0, &[]).unwrap();
    let cover = lift_cover(path, v, Arc::new(FiberAction::new(vec![]).unwrap()), 0).unwrap();
    let op = SchrodingerOp::laplacian(cover.base().clone());
    let pou = build_partition(&cover, 0, 2, 1).unwrap();
    let plan = assemble_chi(&cover, &pou, &pou.fiber, None).unwrap();
    let f = VertexFunction::indicator(5, &[4]);
    assert!(matches!(
        transplant(&cover, &op, &f, 0.0, &pou, &plan),
        Err(Error::Support { vertex: 4, .. })
    ));
}

/// Two 4-cycles glued at vertex 0; the chord of the first carries the ℤ
/// shift and the chord of the second is trivial.
fn figure_eight_line(trunc: usize) -> CoveringGraph<f64> {
    let edges = [
        (0, 1, 1.0),
        (1, 2, 1.0),
        (2, 3, 1.0),
        (3, 0, 1.0),
        (0, 4, 1.0),
        (4, 5, 1.0),
        (5, 6, 1.0),
        (6, 0, 1.0),
    ];
    let base = Arc::new(explicit::<f64>("figure-eight", 7, &edges).build().unwrap());
    let action = FiberAction::new(vec![
        Generator {
            name: "a".into(),
            action: Move::ZShift,
        },
        Generator {
            name: "e".into(),
            action: Move::Identity,
        },
    ])
    .unwrap();
    let v = Voltages::new(&base, 0, &[(3, 0), (7, 1)]).unwrap();
    lift_cover(base, v, Arc::new(action), trunc).unwrap()
}

#[test]
fn finite_orbit_has_empty_q_minus() {
    let cover = figure_eight_line(40);
    let (r, s) = (1, 1);
    let g = generator_set(&cover, (2 * r + 2) as f64, false).unwrap();
    assert!(g.is_empty(), "consecutive fiber points are 4 apart");
    let orbits = cover_orbits(&cover, &g).unwrap();
    assert!(orbits.finite_count() > 10);

    let pou = build_partition(&cover, 0, r, s).unwrap();
    assert!(!pou.compact_branch);
    let y = cover.vertex(0, Coset::Int(3)).unwrap();
    let plan = assemble_chi(&cover, &pou, &[y], None).unwrap();
    assert_eq!(plan.q_plus, vec![y]);
    assert!(plan.q_minus.is_empty());
}

#[test]
fn weyl_family_escapes() {
    let line = z_line::<f64>(120);
    let op = SchrodingerOp::laplacian(line.base().clone());
    let f = unit_constant(&op);
    let pou = build_partition(&line, 0, 1, 1).unwrap();
    let fam = weyl_family(&line, &op, &f, 0.0, &pou, &[5, 15, 45], &[5, 5, 5], 1.0).unwrap();
    assert!(!fam.partial);
    assert_eq!(fam.members.len(), 3);
    for m in &fam.members {
        assert!(m.report.escape_radius > m.exclusion_radius);
        assert!(m.report.budget_holds);
        assert!(m.report.rho2 <= m.report.rho1 + m.report.budget_rhs.sqrt());
    }
    for w in fam.members.windows(2) {
        let a: HashSet<usize> = w[0].zeta.support().iter().copied().collect();
        assert!(w[1].zeta.support().iter().all(|z| !a.contains(z)));
    }
    assert!(fam.to_csv().starts_with("k,ratio,rho1,rho2,budget_rhs,escape_radius\n"));

    let grow = weyl_family(&line, &op, &f, 0.0, &pou, &[5, 15, 45], &[10, 40, 60], 1.0).unwrap();
    let rho: Vec<f64> = grow.members.iter().map(|m| m.report.rho2).collect();
    assert!(rho.windows(2).all(|w| w[1] < w[0]));
    // G_4 on the line is the shifts by at most 3.
    let eps: Vec<f64> = grow
        .members
        .iter()
        .map(|m| m.folner_epsilon * m.p.len() as f64)
        .collect();
    assert_eq!(eps, vec![3.0; 3]);

    let short = weyl_family(&line, &op, &f, 0.0, &pou, &[5, 112], &[5, 5], 1.0).unwrap();
    assert!(short.partial);
    assert_eq!(short.members.len(), 1);

    let hex = c6_over_c3();
    let op = SchrodingerOp::laplacian(hex.base().clone());
    let pou = build_partition(&hex, 0, 1, 1).unwrap();
    assert!(matches!(
        weyl_family(&hex, &op, &unit_constant(&op), 0.0, &pou, &[1], &[1], 1.0),
        Err(Error::FiniteCover)
    ));
}

fn check_partition(cover: &CoveringGraph<f64>, pou: &PartitionOfUnity<f64>) {
    let g = cover.total();
    let n = cover.num_vertices();
    let (r, s) = (pou.radius, pou.taper);
    let dense: Vec<Vec<f64>> = (0..pou.fiber.len()).map(|i| pou.phi_dense(i)).collect();
    let sum: Vec<f64> = (0..n).map(|z| dense.iter().map(|p| p[z]).sum()).collect();
    for (i, &y) in pou.fiber.iter().enumerate() {
        let d = g.hop_distances(&[y], None);
        for z in 0..n {
            let v = dense[i][z];
            assert!((0.0..=1.0 + 1e-12).contains(&v));
            if v > 0.0 {
                assert!(d[z] < r + s);
            }
            if d[z] <= r && pou.complete[z] {
                assert!(v > 0.0);
                assert!((sum[z] - 1.0).abs() < 1e-12);
            }
        }
    }
    for z in (0..n).filter(|&z| pou.complete[z]) {
        assert!((pou.phi1[z] + sum[z] - 1.0).abs() < 1e-12);
        assert!((0.0..=1.0).contains(&pou.phi1[z]));
        if sum[z] > 0.0 {
            assert!(pou.denominator[z] >= 1.0 - 1e-12);
        }
    }
}

fn random_cover(n: usize, extra: &[(usize, usize)], fiber: usize, perms: &[Vec<u32>]) -> Option<CoveringGraph<f64>> {
    let mut b = GraphBuilder::<f64>::new("rand", n);
    let mut seen = HashSet::new();
    for v in 1..n {
        b.add_edge(v - 1, v, 1.0);
        seen.insert((v - 1, v));
    }
    let mut chords = Vec::new();
    for &(u, v) in extra {
        let (u, v) = (u.min(v) % n, u.max(v) % n);
        if u != v && seen.insert((u.min(v), u.max(v))) {
            chords.push(n - 1 + chords.len());
            b.add_edge(u, v, 1.0);
        }
    }
    let base = Arc::new(b.build().ok()?);
    let gens: Vec<Generator> = perms
        .iter()
        .enumerate()
        .map(|(i, p)| Generator {
            name: format!("g{i}"),
            action: Move::perm(p.iter().map(|&x| x % fiber as u32).collect()).unwrap_or(Move::Identity),
        })
        .collect();
    let action = FiberAction::new(gens).ok()?;
    let assigned: Vec<(usize, usize)> = chords.iter().enumerate().map(|(i, &e)| (e, i % perms.len())).collect();
    let v = Voltages::with_tree(&base, 0, (0..n - 1).collect(), &assigned).ok()?;
    lift_cover(base, v, Arc::new(action), 0).ok()
}

fn perm_strategy(k: usize) -> impl Strategy<Value = Vec<u32>> {
    Just((0..k as u32).collect::<Vec<u32>>()).prop_shuffle()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn partition_identities_on_finite_covers(
        n in 3usize..8,
        extra in prop::collection::vec((0usize..8, 0usize..8), 1..4),
        perms in prop::collection::vec(perm_strategy(4), 1..3),
        x in 0usize..8,
        r in 0usize..3,
        s in 1usize..3,
    ) {
        if let Some(cover) = random_cover(n, &extra, 4, &perms) {
            let pou = build_partition(&cover, x % n, r, s).unwrap();
            check_partition(&cover, &pou);
        }
    }

    #[test]
    fn partition_identities_on_truncated_lattice(r in 0usize..3, s in 1usize..3) {
        let base = Arc::new(bouquet::<f64>(2).build().unwrap());
        let v = Voltages::new(&base, 0, &[(0, 0), (1, 1)]).unwrap();
        let cover = lift_cover(base, v, Arc::new(FiberAction::z2_shifts()), 9).unwrap();
        let pou = build_partition(&cover, 0, r, s).unwrap();
        check_partition(&cover, &pou);
    }

    /// Q-classification against a direct scan of χ over each ball.
    #[test]
    fn q_sets_match_scan(picks in prop::collection::btree_set((-3i32..=3, -3i32..=3), 1..12), r in 1usize..3) {
        let base = Arc::new(bouquet::<f64>(2).build().unwrap());
        let v = Voltages::new(&base, 0, &[(0, 0), (1, 1)]).unwrap();
        let cover = lift_cover(base, v, Arc::new(FiberAction::z2_shifts()), 16).unwrap();
        let pou = build_partition(&cover, 0, r, 1).unwrap();
        let p: Vec<usize> = picks.iter().map(|&(i, j)| cover.vertex(0, Coset::Lattice(i, j)).unwrap()).collect();
        let plan = assemble_chi(&cover, &pou, &p, None).unwrap();
        let chi: Vec<f64> = (0..cover.num_vertices())
            .map(|z| p.iter().map(|&y| pou.phi_dense(pou.position(y).unwrap())[z]).sum())
            .collect();
        let mut plus = Vec::new();
        let mut minus = Vec::new();
        for y in pou.fiber.iter().copied().filter(|&y| cover.depth(y) + r <= 16) {
            let d = cover.total().hop_distances(&[y], Some(r));
            let ball: Vec<usize> = (0..d.len()).filter(|&z| d[z] <= r).collect();
            if ball.iter().all(|&z| (chi[z] - 1.0).abs() < 1e-12) {
                plus.push(y);
            } else if ball.iter().any(|&z| chi[z] > 1e-12) {
                minus.push(y);
            }
        }
        plus.sort_unstable();
        minus.sort_unstable();
        prop_assert_eq!(&plan.q_plus, &plus);
        prop_assert_eq!(&plan.q_minus, &minus);
        prop_assert!(plan.p.iter().all(|y| plan.q.contains(y)));
    }

    /// Budget soundness over random Følner-like subsets of the line.
    #[test]
    fn budget_holds_on_line(start in -40i64..40, len in 1i64..60, r in 1usize..4, s in 1usize..3, lambda in 0.0f64..0.5) {
        let line = z_line::<f64>(150);
        let op = SchrodingerOp::new(line.base().clone(), vec![0.25]).unwrap();
        let f = unit_constant(&op);
        let pou = build_partition(&line, 0, r, s).unwrap();
        let p: Vec<usize> = (start..start + len).map(|n| at(&line, n)).collect();
        let plan = assemble_chi(&line, &pou, &p, None).unwrap();
        match transplant(&line, &op, &f, lambda, &pou, &plan) {
            Ok((_, rep)) => prop_assert!(rep.budget_holds, "{:?}", rep),
            Err(Error::EmptyDomain(_)) => prop_assert!(plan.q_plus.is_empty()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }
}
