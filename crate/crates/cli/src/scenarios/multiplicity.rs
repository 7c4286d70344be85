use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use spectral_covers::covering::FiberAction;
use spectral_covers::spectral::eigenvalue_count;

use super::{bouquet_cover, bouquet_laplacian};
use crate::config::{check_radii, parse_params, require};
use crate::error::{Context, Result};
use crate::report::{Check, Recorder, ScenarioOutput};

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub radii: Vec<usize>,
    /// Counting window `[lower, upper]`.
    pub lower: f64,
    pub upper: f64,
    /// The count at `floor_radius` must be at least `floor`.
    pub floor_radius: usize,
    pub floor: usize,
    /// The count at the larger radius must be at least twice the count at the
    /// smaller one, minus `doubling_slack`.
    pub doubling: [usize; 2],
    pub doubling_slack: usize,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            radii: vec![50, 100, 200, 300, 600],
            lower: 0.0,
            upper: 0.01,
            floor_radius: 300,
            floor: 5,
            doubling: [300, 600],
            doubling_slack: 2,
        }
    }
}

/// Eigenvalues `2 − 2cos(kπ/(n+1))` of the Dirichlet path on `n` vertices in `[a, b]`.
pub(crate) fn path_count(n: usize, a: f64, b: f64) -> usize {
    (1..=n)
        .map(|k| 2.0 - 2.0 * (k as f64 * PI / (n as f64 + 1.0)).cos())
        .filter(|&l| l >= a && l <= b)
        .count()
}

pub(crate) fn run(table: &toml::Table, seed: u64) -> Result<ScenarioOutput> {
    let p: Params = parse_params(table)?;
    check_radii("radii", &p.radii, usize::MAX)?;
    require(p.lower <= p.upper, || "lower must not exceed upper".into())?;
    for r in [p.floor_radius, p.doubling[0], p.doubling[1]] {
        require(p.radii.contains(&r), || format!("radius {r} is not among the radii"))?;
    }

    let mut rec = Recorder::default();
    let op = bouquet_laplacian(1)?;
    let top = p.radii[p.radii.len() - 1];
    let line = bouquet_cover(&op, FiberAction::z_shift(), top + 1)?;
    let lifted = line.lift_operator(&op).ctx("covering")?;
    let total = line.total();

    let mut counts = Vec::with_capacity(p.radii.len());
    let mut csv = String::from("radius,count,closed_form,density\n");
    for &r in &p.radii {
        let ball = lifted.induced_dirichlet(&total.ball(line.root(), r)).ctx("graph")?;
        let count = eigenvalue_count(&ball, p.lower, p.upper).ctx("spectral")?;
        let exact = path_count(2 * r + 1, p.lower, p.upper);
        // Eigenvalues below b fill (n+1)·arccos(1 − b/2)/π of the path.
        let density = (2 * r + 2) as f64 * (1.0 - p.upper / 2.0).acos() / PI;
        rec.check(Check::eq(format!("closed-form-R{r}"), count as f64, exact as f64, 0.0));
        let _ = writeln!(csv, "{r},{count},{exact},{density:.6}");
        counts.push(count);
    }
    let at = |r: usize| counts[p.radii.iter().position(|&x| x == r).expect("validated radius")] as f64;
    for (w, r) in counts.windows(2).zip(&p.radii[1..]) {
        rec.check(Check::ge(format!("non-decreasing-R{r}"), w[1] as f64, w[0] as f64, 0.0));
    }
    rec.check(Check::ge(
        format!("floor-R{}", p.floor_radius),
        at(p.floor_radius),
        p.floor as f64,
        0.0,
    ));
    let [small, large] = p.doubling;
    rec.check(Check::ge(
        format!("doubling-R{large}"),
        at(large),
        2.0 * at(small) - p.doubling_slack as f64,
        0.0,
    ));
    rec.csv("counts.csv", csv);
    rec.finish("multiplicity-growth", seed, &p)
}
