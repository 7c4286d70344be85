use std::sync::Arc;

use spectral_covers::covering::{lift_cover, FiberAction, Voltages};
use spectral_covers::graph::{bouquet, SchrodingerOp};
use spectral_covers::transplant::WeylFamily;
use spectral_covers::{Cover, Operator};

use crate::error::{Context, Result};
use crate::report::{Check, Recorder, ScenarioOutput};

mod brooks;
mod ends;
mod friedrichs;
mod holonomy;
mod line;
mod multiplicity;
mod tree;

/// A named experiment. `run` receives the raw parameter table and the seed.
pub struct Scenario {
    pub name: &'static str,
    pub about: &'static str,
    pub(crate) run: fn(&toml::Table, u64) -> Result<ScenarioOutput>,
}

pub(crate) static SCENARIOS: &[Scenario] = &[
    Scenario {
        name: "amenable-line-inclusion",
        about: "Z-line over the one-loop bouquet: bottom preserved, Weyl family escapes to infinity",
        run: line::run,
    },
    Scenario {
        name: "friedrichs-bottom",
        about: "Z-line with hairs and a random potential: the base bottom is approximated at infinity",
        run: friedrichs::run,
    },
    Scenario {
        name: "tree-gap",
        about: "4-regular tree over the two-loop bouquet: truncated bottoms stay above the tree bottom",
        run: tree::run,
    },
    Scenario {
        name: "brooks-equivalences",
        about: "Folner sets, bottoms and Cheeger constants of Z, Z^2 and the free group side by side",
        run: brooks::run,
    },
    Scenario {
        name: "multiplicity-growth",
        about: "eigenvalue counts of Z-line truncations near the bottom grow linearly in the radius",
        run: multiplicity::run,
    },
    Scenario {
        name: "piecewise-amenable-ends",
        about: "free-group core with an amenable ray end: ray spectrum transfers, bottom stays low",
        run: ends::run,
    },
    Scenario {
        name: "holonomy-q2",
        about: "rotation connection on C_n against its pullback to the q-fold cyclic cover",
        run: holonomy::run,
    },
];

pub(crate) fn find(name: &str) -> Option<&'static Scenario> {
    SCENARIOS.iter().find(|s| s.name == name)
}

pub(crate) fn bouquet_laplacian(loops: usize) -> Result<Operator> {
    let base = Arc::new(bouquet::<f64>(loops).build().ctx("graph")?);
    Ok(SchrodingerOp::laplacian(base))
}

/// The cover of the `loops`-bouquet whose loops carry the generators of `action`.
pub(crate) fn bouquet_cover(op: &Operator, action: FiberAction, truncation: usize) -> Result<Cover> {
    let base = op.graph_arc().clone();
    let assigned: Vec<(usize, usize)> = (0..base.num_edges()).map(|e| (e, e)).collect();
    let voltages = Voltages::new(&base, 0, &assigned).ctx("covering")?;
    lift_cover(base, voltages, Arc::new(action), truncation).ctx("covering")
}

/// `2 − 2cos(π/(n+1))`, the Dirichlet bottom of a path with `n` vertices.
pub(crate) fn path_bottom(n: usize) -> f64 {
    2.0 - 2.0 * (std::f64::consts::PI / (n as f64 + 1.0)).cos()
}

/// Bottom of the spectrum of the `d`-regular tree.
pub(crate) fn tree_bottom(d: usize) -> f64 {
    d as f64 - 2.0 * ((d - 1) as f64).sqrt()
}

/// Budget, escape and monotonicity checks for a Weyl family.
pub(crate) fn record_weyl(rec: &mut Recorder, family: &WeylFamily<f64>, expected: usize) {
    rec.notes.extend(family.notes.iter().cloned());
    rec.check(Check::eq(
        "weyl-family-complete",
        family.members.len() as f64,
        expected as f64,
        0.0,
    ));
    for m in &family.members {
        let r = &m.report;
        rec.check(Check::le(
            format!("transplant-budget-k{}", m.k),
            r.rho2 * r.rho2,
            r.budget_rhs,
            r.budget_rhs * 1e-12,
        ));
        rec.check(Check::ge(
            format!("escape-k{}", m.k),
            r.escape_radius as f64,
            (m.exclusion_radius + 1) as f64,
            0.0,
        ));
    }
    for w in family.members.windows(2) {
        rec.check(Check::le(
            format!("residual-decrease-k{}", w[1].k),
            w[1].report.rho2,
            w[0].report.rho2,
            0.0,
        ));
    }
}
