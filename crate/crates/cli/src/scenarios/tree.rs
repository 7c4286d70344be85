use serde::{Deserialize, Serialize};
use spectral_covers::cheeger::ground_state;
use spectral_covers::covering::FiberAction;
use spectral_covers::spectral::{lambda0_exhaustion, regular_tree_exhaustion};

use super::{bouquet_cover, bouquet_laplacian, tree_bottom};
use crate::config::{check_radii, parse_params, require};
use crate::error::{Context, Result};
use crate::report::{Check, Recorder, ScenarioOutput};

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    /// Even degree; the base is the bouquet with `degree/2` loops.
    pub degree: usize,
    /// Ball radii, solved through the radial quotient.
    pub radii: Vec<usize>,
    /// The explicit cover is built up to this radius to cross-check the quotient.
    pub cover_radius: usize,
    pub gap_radius: usize,
    pub gap_floor: f64,
    /// Distance to the tree bottom reported at the largest radius.
    pub closed_form_tol: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            degree: 4,
            radii: vec![2, 4, 6, 8, 10, 12, 14],
            cover_radius: 6,
            gap_radius: 10,
            gap_floor: 0.53,
            closed_form_tol: 0.05,
        }
    }
}

pub(crate) fn run(table: &toml::Table, seed: u64) -> Result<ScenarioOutput> {
    let p: Params = parse_params(table)?;
    require(p.degree >= 2 && p.degree % 2 == 0, || {
        "degree must be even and at least 2".into()
    })?;
    require(p.degree <= 8, || {
        "degree above 8 needs more than four free generators".into()
    })?;
    check_radii("radii", &p.radii, usize::MAX)?;
    require(p.radii.contains(&p.gap_radius), || {
        format!("gap_radius {} is not among the radii", p.gap_radius)
    })?;

    let mut rec = Recorder::default();
    let loops = p.degree / 2;
    let op = bouquet_laplacian(loops)?;
    let base_bottom = ground_state(&op).ctx("cheeger")?.lambda0;
    rec.check(Check::eq("base-bottom", base_bottom, 0.0, 1e-10));

    let bottom = tree_bottom(p.degree);
    let radial = regular_tree_exhaustion(p.degree, &p.radii).ctx("spectral")?;
    for (&r, &l) in radial.radii.iter().zip(&radial.lambda0) {
        rec.check(Check::ge(format!("bottom-inequality-R{r}"), l, base_bottom, 1e-9));
        rec.check(Check::ge(format!("above-tree-bottom-R{r}"), l, bottom, 1e-9));
        if r == p.gap_radius {
            rec.check(Check::ge(format!("gap-floor-R{r}"), l, p.gap_floor, 0.0));
        }
    }
    rec.check(Check::le(
        "exhaustion-monotone",
        radial.monotonicity_defect(),
        0.0,
        1e-12,
    ));
    let top = p.radii[p.radii.len() - 1];
    rec.diagnostic(
        format!("closed-form-distance-R{top}"),
        (radial.last() - bottom).abs(),
        p.closed_form_tol,
    );
    rec.diagnostic("tree-bottom", bottom, bottom);
    rec.diagnostic("fitted-limit", radial.limit, bottom);
    rec.csv("exhaustion.csv", radial.to_csv());

    let explicit: Vec<usize> = p.radii.iter().copied().filter(|&r| r <= p.cover_radius).collect();
    if !explicit.is_empty() {
        let tree = bouquet_cover(&op, FiberAction::free(loops), p.cover_radius + 1)?;
        let trace = lambda0_exhaustion(&tree, &op, &explicit).ctx("spectral")?;
        for (&r, &l) in trace.radii.iter().zip(&trace.lambda0) {
            let i = radial
                .radii
                .iter()
                .position(|&x| x == r)
                .expect("radius taken from radii");
            rec.check(Check::eq(
                format!("radial-matches-cover-R{r}"),
                radial.lambda0[i],
                l,
                1e-8,
            ));
        }
        rec.csv("cover_exhaustion.csv", trace.to_csv());
    }
    rec.finish("tree-gap", seed, &p)
}
