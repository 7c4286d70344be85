use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use spectral_covers::cheeger::{bottom_comparison, ground_state};
use spectral_covers::covering::{lift_cover, FiberAction, Voltages};
use spectral_covers::graph::{GraphBuilder, SchrodingerOp};
use spectral_covers::spectral::lambda0_ess_estimate;
use spectral_covers::transplant::{build_partition, weyl_family};
use spectral_covers::Operator;

use super::record_weyl;
use crate::config::{check_radii, parse_params, require};
use crate::error::{Context, Result};
use crate::report::{Check, Recorder, ScenarioOutput};

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    /// Length of the path hanging off the loop vertex; its far end is Dirichlet.
    pub hair: usize,
    /// The potential is drawn uniformly from `[0, vmax]` on free base vertices.
    pub vmax: f64,
    pub truncation: usize,
    pub removal_radii: Vec<usize>,
    pub outer_radius: usize,
    pub exclusion_radii: Vec<usize>,
    pub sizes: Vec<usize>,
    pub partition_radius: usize,
    pub taper: usize,
    pub max_epsilon: f64,
    /// Certified ceiling for the last transplanted residual.
    pub residual_target: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            hair: 2,
            vmax: 1.0,
            truncation: 260,
            removal_radii: vec![0, 10, 20, 40],
            outer_radius: 200,
            exclusion_radii: vec![5, 20, 40],
            sizes: vec![10, 40, 160],
            partition_radius: 1,
            taper: 1,
            max_epsilon: 1.0,
            residual_target: 0.1,
        }
    }
}

/// A loop at vertex 0 (carrying the shift) with a path `0 − 1 − … − hair`,
/// the last vertex masked.
pub(crate) fn hairy_loop(hair: usize, vmax: f64, seed: u64) -> Result<Operator> {
    let mut b = GraphBuilder::<f64>::new("hairy-loop", hair + 1)
        .voltage_base()
        .mask([hair]);
    b.add_edge(0, 0, 1.0);
    for v in 0..hair {
        b.add_edge(v, v + 1, 1.0);
    }
    let graph = Arc::new(b.build().ctx("graph")?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let potential: Vec<f64> = (0..=hair)
        .map(|v| if v < hair { rng.random_range(0.0..=vmax) } else { 0.0 })
        .collect();
    SchrodingerOp::new(graph, potential).ctx("graph")
}

pub(crate) fn run(table: &toml::Table, seed: u64) -> Result<ScenarioOutput> {
    let p: Params = parse_params(table)?;
    require(p.hair >= 1, || "hair must be at least 1".into())?;
    require(p.vmax >= 0.0 && p.vmax.is_finite(), || {
        "vmax must be finite and nonnegative".into()
    })?;
    check_radii("removal_radii", &p.removal_radii, p.outer_radius)?;
    require(p.outer_radius < p.truncation, || {
        format!("outer_radius {} needs truncation above it", p.outer_radius)
    })?;
    check_radii("exclusion_radii", &p.exclusion_radii, p.truncation)?;
    require(p.sizes.len() == p.exclusion_radii.len(), || {
        "sizes and exclusion_radii differ in length".into()
    })?;

    let mut rec = Recorder::default();
    let op = hairy_loop(p.hair, p.vmax, seed)?;
    let gs = ground_state(&op).ctx("cheeger")?;
    rec.diagnostic("base-bottom", gs.lambda0, op.min_potential());
    let base = op.graph_arc().clone();
    let voltages = Voltages::new(&base, 0, &[(0, 0)]).ctx("covering")?;
    let cover = lift_cover(
        base,
        voltages,
        std::sync::Arc::new(FiberAction::z_shift()),
        p.truncation,
    )
    .ctx("covering")?;

    let cmp = bottom_comparison(&cover, &op).ctx("cheeger")?;
    rec.check(Check::ge(
        "bottom-inequality",
        cmp.lifted_lambda0,
        cmp.base_lambda0,
        1e-9,
    ));

    let annuli = lambda0_ess_estimate(&cover, &op, &p.removal_radii, p.outer_radius).ctx("spectral")?;
    for (&k, &l) in annuli.radii.iter().zip(&annuli.lambda0) {
        rec.check(Check::ge(format!("annulus-above-bottom-k{k}"), l, gs.lambda0, 1e-9));
    }
    rec.diagnostic("annulus-excess", annuli.last() - gs.lambda0, 0.0);
    rec.csv("annuli.csv", annuli.to_csv());

    let pou = build_partition(&cover, cover.root(), p.partition_radius, p.taper).ctx("transplant")?;
    let family = weyl_family(
        &cover,
        &op,
        &gs.phi,
        gs.lambda0,
        &pou,
        &p.exclusion_radii,
        &p.sizes,
        p.max_epsilon,
    )
    .ctx("transplant")?;
    record_weyl(&mut rec, &family, p.sizes.len());
    if let Some(m) = family.members.last() {
        rec.check(Check::le("residual-target", m.report.rho2, p.residual_target, 0.0));
    }
    rec.csv("weyl.csv", family.to_csv());
    rec.finish("friedrichs-bottom", seed, &p)
}
