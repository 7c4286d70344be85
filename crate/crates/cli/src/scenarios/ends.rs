use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use spectral_covers::amenability::{folner_search, GeneratorSet};
use spectral_covers::cheeger::bottom_comparison;
use spectral_covers::covering::{lift_cover, FiberAction, Voltages};
use spectral_covers::graph::{GraphBuilder, SchrodingerOp, VertexFunction};
use spectral_covers::spectral::{lambda0, rayleigh, weyl_residual};
use spectral_covers::Operator;

use super::{path_bottom, tree_bottom};
use crate::config::{parse_params, require};
use crate::error::{CliError, Context, Result};
use crate::report::{Check, Recorder, ScenarioOutput};

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    /// Loops at the core vertex, each carrying a free generator.
    pub loops: usize,
    /// Ray `0 − 1 − … − ray` attached to the core; its far end is Dirichlet.
    pub ray: usize,
    pub truncation: usize,
    /// Frequencies of the wave packets placed on the ray.
    pub frequencies: Vec<f64>,
    /// First ray vertex carrying a packet.
    pub packet_start: usize,
    pub folner_epsilon: f64,
    pub folner_budget: usize,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            loops: 2,
            ray: 8,
            truncation: 9,
            frequencies: vec![0.0, 0.5, 1.0, 1.5, 2.5],
            packet_start: 2,
            folner_epsilon: 0.1,
            folner_budget: 6,
        }
    }
}

fn core_with_ray(loops: usize, ray: usize) -> Result<Operator> {
    let mut b = GraphBuilder::<f64>::new("bouquet-with-ray", ray + 1)
        .voltage_base()
        .mask([ray]);
    for _ in 0..loops {
        b.add_edge(0, 0, 1.0);
    }
    for v in 0..ray {
        b.add_edge(v, v + 1, 1.0);
    }
    Ok(SchrodingerOp::laplacian(Arc::new(b.build().ctx("graph")?)))
}

/// `sin`-windowed plane wave on the ray vertices `start..ray`.
fn packet(ray: usize, start: usize, theta: f64) -> VertexFunction<f64> {
    let width = (ray - start + 1) as f64;
    let values = (0..=ray)
        .map(|j| {
            if j < start || j >= ray {
                0.0
            } else {
                let s = (j - start + 1) as f64;
                (std::f64::consts::PI * s / width).sin() * (theta * j as f64).cos()
            }
        })
        .collect();
    VertexFunction::new(values)
}

pub(crate) fn run(table: &toml::Table, seed: u64) -> Result<ScenarioOutput> {
    let p: Params = parse_params(table)?;
    require((1..=4).contains(&p.loops), || "loops must be between 1 and 4".into())?;
    require(p.ray >= 2, || "ray must have at least two edges".into())?;
    require(p.packet_start >= 1 && p.packet_start < p.ray, || {
        "packet_start must lie inside the ray".into()
    })?;
    require(p.truncation > p.ray, || {
        format!("truncation {} must exceed the ray length {}", p.truncation, p.ray)
    })?;

    let mut rec = Recorder::default();
    let op = core_with_ray(p.loops, p.ray)?;
    let base = op.graph_arc().clone();
    let assigned: Vec<(usize, usize)> = (0..p.loops).map(|e| (e, e)).collect();
    let voltages = Voltages::new(&base, 0, &assigned).ctx("covering")?;
    let ray_voltages = voltages.per_edge[p.loops..].iter().filter(|g| g.is_some()).count();
    rec.check(Check::eq("ray-carries-no-voltage", ray_voltages as f64, 0.0, 0.0));
    let action = Arc::new(FiberAction::free(p.loops));
    let cover = lift_cover(base, voltages, action.clone(), p.truncation).ctx("covering")?;

    let cert =
        folner_search(&GeneratorSet::basic(action.clone()), p.folner_epsilon, p.folner_budget).ctx("amenability")?;
    if p.loops >= 2 {
        rec.check(Check::ge("deck-group-not-folner", cert.epsilon, p.folner_epsilon, 0.0));
    }

    let cmp = bottom_comparison(&cover, &op).ctx("cheeger")?;
    rec.check(Check::ge(
        "bottom-inequality",
        cmp.lifted_lambda0,
        cmp.base_lambda0,
        1e-9,
    ));

    let lifted = cover.lift_operator(&op).ctx("covering")?;
    let sheet: Vec<usize> = (1..p.ray)
        .map(|j| cover.vertex(j, action.basepoint()))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| CliError::Config("root sheet ray lies outside the truncation".into()))?;
    let ray_op = lifted.induced_dirichlet(&sheet).ctx("graph")?;
    let (ray_bottom, _, _) = lambda0(&ray_op, 1e-12).ctx("spectral")?;
    rec.check(Check::eq("ray-closed-form", ray_bottom, path_bottom(p.ray - 1), 1e-9));
    rec.check(Check::le("ray-bounds-bottom", cmp.lifted_lambda0, ray_bottom, 1e-9));
    rec.check(Check::le(
        "below-tree-bottom",
        cmp.lifted_lambda0,
        tree_bottom(2 * p.loops),
        0.0,
    ));

    let mut csv = String::from("theta,lambda,rho1,rho2\n");
    for &theta in &p.frequencies {
        let f = packet(p.ray, p.packet_start, theta);
        let lambda = rayleigh(&op, &f).ctx("spectral")?;
        let rho1 = weyl_residual(&op, &f, lambda, None).ctx("spectral")?.residual;
        let mut up = vec![0.0; cover.num_vertices()];
        for (j, &t) in (1..p.ray).zip(&sheet) {
            up[t] = f.get(j);
        }
        let rho2 = weyl_residual(&lifted, &VertexFunction::new(up), lambda, None)
            .ctx("spectral")?
            .residual;
        rec.check(Check::eq(format!("packet-transfers-theta{theta}"), rho2, rho1, 1e-12));
        let _ = writeln!(csv, "{theta},{lambda:.12e},{rho1:.12e},{rho2:.12e}");
    }
    rec.csv("packets.csv", csv);
    rec.diagnostic("lifted-bottom", cmp.lifted_lambda0, cmp.base_lambda0);
    rec.finish("piecewise-amenable-ends", seed, &p)
}
