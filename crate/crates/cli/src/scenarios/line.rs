use serde::{Deserialize, Serialize};
use spectral_covers::amenability::{folner_search, GeneratorSet};
use spectral_covers::cheeger::ground_state;
use spectral_covers::covering::FiberAction;
use spectral_covers::spectral::lambda0_exhaustion;
use spectral_covers::transplant::{build_partition, weyl_family};

use super::{bouquet_cover, bouquet_laplacian, path_bottom, record_weyl};
use crate::config::{check_radii, parse_params, require};
use crate::error::{Context, Result};
use crate::report::{Check, Recorder, ScenarioOutput};

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub truncation: usize,
    pub radii: Vec<usize>,
    /// Upper bound certified for the bottom at the largest radius.
    pub bottom_bound: f64,
    pub folner_epsilon: f64,
    pub folner_budget: usize,
    pub exclusion_radii: Vec<usize>,
    pub sizes: Vec<usize>,
    /// Radius and taper of the partition of unity.
    pub partition_radius: usize,
    pub taper: usize,
    pub max_epsilon: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            truncation: 260,
            radii: vec![25, 50, 100, 200],
            bottom_bound: 2.5e-4,
            folner_epsilon: 0.1,
            folner_budget: 40,
            exclusion_radii: vec![5, 20, 40],
            sizes: vec![10, 40, 160],
            partition_radius: 1,
            taper: 1,
            max_epsilon: 1.0,
        }
    }
}

pub(crate) fn run(table: &toml::Table, seed: u64) -> Result<ScenarioOutput> {
    let p: Params = parse_params(table)?;
    check_radii("radii", &p.radii, p.truncation)?;
    check_radii("exclusion_radii", &p.exclusion_radii, p.truncation)?;
    require(p.sizes.len() == p.exclusion_radii.len(), || {
        "sizes and exclusion_radii differ in length".into()
    })?;
    require(p.folner_epsilon > 0.0, || "folner_epsilon must be positive".into())?;

    let mut rec = Recorder::default();
    let op = bouquet_laplacian(1)?;
    let gs = ground_state(&op).ctx("cheeger")?;
    let line = bouquet_cover(&op, FiberAction::z_shift(), p.truncation)?;

    let trace = lambda0_exhaustion(&line, &op, &p.radii).ctx("spectral")?;
    for (&r, &l) in trace.radii.iter().zip(&trace.lambda0) {
        rec.check(Check::ge(format!("bottom-inequality-R{r}"), l, gs.lambda0, 1e-9));
        rec.check(Check::eq(format!("closed-form-R{r}"), l, path_bottom(2 * r + 1), 1e-9));
    }
    let top = p.radii[p.radii.len() - 1];
    rec.check(Check::le(
        format!("bottom-bound-R{top}"),
        trace.last(),
        p.bottom_bound,
        0.0,
    ));
    rec.check(Check::le(
        "exhaustion-monotone",
        trace.monotonicity_defect(),
        0.0,
        1e-12,
    ));
    rec.diagnostic("exhaustion-limit", trace.limit, gs.lambda0);
    rec.csv("exhaustion.csv", trace.to_csv());

    let generators = GeneratorSet::basic(line.action().clone());
    let cert = folner_search(&generators, p.folner_epsilon, p.folner_budget).ctx("amenability")?;
    rec.check(Check::le("folner-certified", cert.epsilon, p.folner_epsilon, 0.0));
    rec.diagnostic("folner-radius", cert.radius as f64, p.folner_budget as f64);
    if cert.budget_exhausted {
        rec.note(format!(
            "Folner search exhausted its budget {} with best epsilon {}",
            p.folner_budget, cert.epsilon
        ));
    }

    let pou = build_partition(&line, line.root(), p.partition_radius, p.taper).ctx("transplant")?;
    let family = weyl_family(
        &line,
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
    rec.csv("weyl.csv", family.to_csv());
    rec.finish("amenable-line-inclusion", seed, &p)
}
