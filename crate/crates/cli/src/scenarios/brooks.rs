use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use spectral_covers::amenability::{folner_search, GeneratorSet};
use spectral_covers::cheeger::{cheeger_ess, ground_state};
use spectral_covers::covering::FiberAction;
use spectral_covers::spectral::lambda0_exhaustion;

use super::{bouquet_cover, bouquet_laplacian};
use crate::config::{check_radii, parse_params, require};
use crate::error::{Context, Result};
use crate::report::{Check, Recorder, ScenarioOutput};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    /// ℤ over the one-loop bouquet.
    Z,
    /// ℤ² over the two-loop bouquet.
    Z2,
    /// The free group of rank two over the two-loop bouquet.
    Free,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CoverParams {
    pub group: Group,
    /// Outer radii of the Cheeger and bottom traces.
    pub outer: Vec<usize>,
    /// Removed balls for the essential Cheeger estimate.
    pub removal: Vec<usize>,
    pub folner_budget: usize,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub folner_epsilon: f64,
    /// Amenable covers must push both the bottom and the Cheeger estimate
    /// below this.
    pub vanishing: f64,
    /// Non-amenable covers must keep the bottom above `vanishing` and the
    /// Cheeger estimate above this.
    pub cheeger_floor: f64,
    pub covers: Vec<CoverParams>,
}

impl Default for Params {
    fn default() -> Self {
        let cover = |group, outer: &[usize], removal: &[usize], folner_budget| CoverParams {
            group,
            outer: outer.to_vec(),
            removal: removal.to_vec(),
            folner_budget,
        };
        Self {
            folner_epsilon: 0.1,
            vanishing: 0.05,
            cheeger_floor: 0.5,
            covers: vec![
                cover(Group::Z, &[50, 100, 200], &[0, 5], 40),
                cover(Group::Z2, &[25, 50, 100], &[0, 5], 40),
                cover(Group::Free, &[4, 6, 8], &[0, 2], 6),
            ],
        }
    }
}

impl Group {
    fn name(self) -> &'static str {
        match self {
            Group::Z => "z",
            Group::Z2 => "z2",
            Group::Free => "free",
        }
    }

    fn loops(self) -> usize {
        match self {
            Group::Z => 1,
            Group::Z2 | Group::Free => 2,
        }
    }

    fn action(self) -> FiberAction {
        match self {
            Group::Z => FiberAction::z_shift(),
            Group::Z2 => FiberAction::z2_shifts(),
            Group::Free => FiberAction::free(2),
        }
    }
}

pub(crate) fn run(table: &toml::Table, seed: u64) -> Result<ScenarioOutput> {
    let p: Params = parse_params(table)?;
    require(p.folner_epsilon > 0.0, || "folner_epsilon must be positive".into())?;
    require(!p.covers.is_empty(), || "no covers listed".into())?;
    for c in &p.covers {
        check_radii("outer", &c.outer, usize::MAX)?;
        check_radii("removal", &c.removal, c.outer[0])?;
    }

    let mut rec = Recorder::default();
    let mut csv = String::from("group,outer,lambda0,h_estimate,folner_epsilon,amenable\n");
    for c in &p.covers {
        let g = c.group.name();
        let op = bouquet_laplacian(c.group.loops())?;
        let base_bottom = ground_state(&op).ctx("cheeger")?.lambda0;
        let top = c.outer[c.outer.len() - 1];
        let cover = bouquet_cover(&op, c.group.action(), top + 1)?;

        let generators = GeneratorSet::basic(cover.action().clone());
        let cert = folner_search(&generators, p.folner_epsilon, c.folner_budget).ctx("amenability")?;
        let amenable = !cert.budget_exhausted && cert.epsilon < p.folner_epsilon;

        let bottoms = lambda0_exhaustion(&cover, &op, &c.outer).ctx("spectral")?;
        let mut h = Vec::with_capacity(c.outer.len());
        for &outer in &c.outer {
            h.push(cheeger_ess(&cover, &c.removal, outer, None).ctx("cheeger")?.estimate);
        }
        for (i, &outer) in c.outer.iter().enumerate() {
            rec.check(Check::ge(
                format!("{g}-bottom-inequality-R{outer}"),
                bottoms.lambda0[i],
                base_bottom,
                1e-9,
            ));
            let _ = writeln!(
                csv,
                "{g},{outer},{:.12e},{:.12e},{:.12e},{}",
                bottoms.lambda0[i],
                h[i],
                cert.epsilon,
                u8::from(amenable)
            );
        }
        let (last_bottom, last_h) = (bottoms.last(), h[h.len() - 1]);
        rec.diagnostic(format!("{g}-folner-epsilon"), cert.epsilon, p.folner_epsilon);
        if amenable {
            rec.check(Check::le(
                format!("{g}-amenable-bottom-preserved"),
                last_bottom,
                p.vanishing,
                0.0,
            ));
            rec.check(Check::le(
                format!("{g}-amenable-cheeger-vanishes"),
                last_h,
                p.vanishing,
                0.0,
            ));
            rec.check(Check::le(format!("{g}-cheeger-trend"), last_h, h[0], 0.0));
        } else {
            rec.note(format!(
                "{g}: Folner search exhausted budget {} at epsilon {}",
                c.folner_budget, cert.epsilon
            ));
            rec.check(Check::ge(
                format!("{g}-nonamenable-bottom-gap"),
                last_bottom,
                p.vanishing,
                0.0,
            ));
            rec.check(Check::ge(
                format!("{g}-nonamenable-cheeger-floor"),
                last_h,
                p.cheeger_floor,
                0.0,
            ));
        }
    }
    rec.csv("brooks.csv", csv);
    rec.finish("brooks-equivalences", seed, &p)
}
