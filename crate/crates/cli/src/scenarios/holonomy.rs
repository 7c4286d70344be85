use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use spectral_covers::bundle::holonomy_gap_experiment;

use crate::config::{parse_params, require};
use crate::error::{Context, Result};
use crate::report::{Check, Recorder, ScenarioOutput};

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub n: usize,
    pub q: usize,
    /// Strict gap required between the two bottoms when `q ≥ 2`.
    pub min_gap: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            n: 8,
            q: 2,
            min_gap: 1e-6,
        }
    }
}

pub(crate) fn run(table: &toml::Table, seed: u64) -> Result<ScenarioOutput> {
    let p: Params = parse_params(table)?;
    require(p.n >= 3, || "n must be at least 3".into())?;
    require(p.q >= 1, || "q must be positive".into())?;

    let mut rec = Recorder::default();
    let h = holonomy_gap_experiment(p.n, p.q).ctx("bundle")?;
    rec.check(Check::eq("base-closed-form", h.base_lambda0, h.base_formula, 1e-10));
    rec.check(Check::eq("cover-closed-form", h.cover_lambda0, h.cover_formula, 1e-10));
    rec.check(Check::eq("cover-bottom", h.cover_lambda0, 0.0, 1e-10));
    if p.q >= 2 {
        rec.check(Check::ge(
            "strict-gap",
            h.base_lambda0,
            h.cover_lambda0 + p.min_gap,
            0.0,
        ));
        rec.check(Check::eq("base-parallel-sections", h.base_parallel as f64, 0.0, 0.0));
    }
    rec.check(Check::ge("cover-parallel-sections", h.cover_parallel as f64, 1.0, 0.0));
    rec.check(Check::eq("control-base-bottom", h.control_base_lambda0, 0.0, 1e-10));
    rec.check(Check::eq("control-cover-bottom", h.control_cover_lambda0, 0.0, 1e-10));
    rec.diagnostic("gap", h.gap, 0.0);

    let tau = 2.0 * std::f64::consts::PI;
    let rows = [
        (
            "base",
            p.n,
            h.theta,
            h.base_lambda0,
            h.base_formula,
            Some(h.base_parallel),
        ),
        (
            "cover",
            p.n * p.q,
            h.theta,
            h.cover_lambda0,
            h.cover_formula,
            Some(h.cover_parallel),
        ),
        ("control-base", p.n, tau, h.control_base_lambda0, 0.0, None),
        ("control-cover", p.n * p.q, tau, h.control_cover_lambda0, 0.0, None),
    ];
    let mut csv = String::from("case,n,theta,lambda0,closed_form,parallel\n");
    for (case, n, theta, l, f, parallel) in rows {
        let parallel = parallel.map(|d| d.to_string()).unwrap_or_default();
        let _ = writeln!(csv, "{case},{n},{theta:.12e},{l:.12e},{f:.12e},{parallel}");
    }
    rec.csv("holonomy.csv", csv);
    rec.finish("holonomy-q2", seed, &p)
}
