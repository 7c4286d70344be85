//! Følner sets and orbits of the coset action on a fiber.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;

use crate::covering::{reduce_word, Coset, CoveringGraph, FiberAction, Word};
use crate::error::{Error, Result};
use crate::graph::{GraphBuilder, WeightedGraph};
use crate::scalar::Scalar;

/// One element of `G_r`: a word together with the length of the closed walk
/// realizing it, which bounds `d(u, g·u)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupElement {
    pub word: Word,
    pub displacement: usize,
}

/// `G_r = {g : d(u, g·u) < r}`, closed under inverses.
#[derive(Clone, Debug)]
pub struct GeneratorSet {
    pub action: Arc<FiberAction>,
    pub radius: f64,
    pub elements: Vec<GroupElement>,
}

impl GeneratorSet {
    /// The basic generators and their inverses.
    pub fn basic(action: Arc<FiberAction>) -> Self {
        let elements = (0..action.num_generators())
            .flat_map(|g| {
                [false, true].map(|inv| GroupElement {
                    word: vec![(g, inv)],
                    displacement: 1,
                })
            })
            .collect();
        Self {
            action,
            radius: 2.0,
            elements,
        }
    }

    /// Arbitrary words, each listed with its formal inverse.
    pub fn from_words(action: Arc<FiberAction>, words: &[Word]) -> Self {
        let mut elements = Vec::new();
        let mut seen = HashSet::new();
        for w in words {
            let w = reduce_word(w);
            for candidate in [w.clone(), crate::covering::inverse_word(&w)] {
                if seen.insert(candidate.clone()) {
                    elements.push(GroupElement {
                        displacement: candidate.len(),
                        word: candidate,
                    });
                }
            }
        }
        Self {
            action,
            radius: f64::INFINITY,
            elements,
        }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn apply(&self, i: usize, x: Coset) -> Result<Coset> {
        self.action.apply_word(&self.elements[i].word, x)
    }

    pub fn names(&self) -> Vec<String> {
        self.elements.iter().map(|e| self.action.word_name(&e.word)).collect()
    }
}

/// Voltage words of the non-backtracking closed walks at the base root of
/// length `< r`, deduplicated by their action on the discovered fiber over the
/// root. A closed walk lifts from `u` to `g·u`, and a geodesic from `u` to
/// `g·u` projects to such a walk, so this is exactly `G_r`.
pub fn generator_set<T: Scalar>(cover: &CoveringGraph<T>, r: f64, include_identity: bool) -> Result<GeneratorSet> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("radius {r} must be positive")));
    }
    let max_len = (r.ceil() as usize).saturating_sub(1);
    if let Some(t) = cover.truncation() {
        if max_len > t {
            return Err(Error::Truncation(format!(
                "walks of length {max_len} leave the truncation radius {t}"
            )));
        }
    }
    let base = cover.base();
    let x = cover.base_root();
    let action = cover.action().clone();
    let fiber: Vec<Coset> = cover.fiber(x).into_iter().map(|t| cover.coset(t)).collect();
    let voltages = &cover.voltages().per_edge;

    // Depth-first over non-backtracking half-edge walks.
    let mut found: HashMap<Vec<Coset>, GroupElement> = HashMap::new();
    let mut stack: Vec<(usize, Option<usize>, Word, usize)> = vec![(x, None, Vec::new(), 0)];
    while let Some((v, came, word, len)) = stack.pop() {
        if len > 0 && v == x {
            let word = reduce_word(&word);
            let signature = fiber
                .iter()
                .map(|&y| action.apply_word(&word, y))
                .collect::<Result<Vec<_>>>()?;
            let is_identity = signature == fiber;
            if include_identity || !is_identity {
                let entry = found.entry(signature).or_insert_with(|| GroupElement {
                    word: word.clone(),
                    displacement: len,
                });
                if (len, word.len()) < (entry.displacement, entry.word.len()) {
                    *entry = GroupElement {
                        word,
                        displacement: len,
                    };
                }
            }
        }
        if len == max_len {
            continue;
        }
        for &h in base.halves(v) {
            if came == Some(h ^ 1) {
                continue;
            }
            let mut next = word.clone();
            if let Some(g) = voltages[h / 2] {
                next.push((g, h % 2 == 1));
            }
            stack.push((base.head(h), Some(h), next, len + 1));
        }
    }
    if include_identity {
        let signature = fiber.clone();
        found.entry(signature).or_insert(GroupElement {
            word: Vec::new(),
            displacement: 0,
        });
    }
    let mut elements: Vec<GroupElement> = found.into_values().collect();
    elements.sort_by(|a, b| (a.displacement, a.word.len(), &a.word).cmp(&(b.displacement, b.word.len(), &b.word)));
    Ok(GeneratorSet {
        action,
        radius: r,
        elements,
    })
}

/// Cosets reachable from the basepoint in at most `radius` generator steps.
#[derive(Clone, Debug)]
pub struct SchreierGraph<T> {
    pub graph: WeightedGraph<T>,
    pub cosets: Vec<Coset>,
    pub depth: Vec<usize>,
}

pub fn schreier_graph<T: Scalar>(
    action: &FiberAction,
    generators: &GeneratorSet,
    radius: usize,
) -> Result<SchreierGraph<T>> {
    let (cosets, depth, index) = schreier_ball(action, generators, radius)?;
    let mut edges = BTreeSet::new();
    for (i, &x) in cosets.iter().enumerate() {
        for e in &generators.elements {
            let y = action.apply_word(&e.word, x)?;
            if let Some(&j) = index.get(&y) {
                if i != j {
                    edges.insert((i.min(j), i.max(j)));
                }
            }
        }
    }
    let mut b = GraphBuilder::new(format!("schreier-{}", action.describe()), cosets.len());
    for (i, j) in edges {
        b.add_edge(i, j, T::one());
    }
    Ok(SchreierGraph {
        graph: b.build()?,
        cosets,
        depth,
    })
}

type Ball = (Vec<Coset>, Vec<usize>, HashMap<Coset, usize>);

fn schreier_ball(action: &FiberAction, generators: &GeneratorSet, radius: usize) -> Result<Ball> {
    let start = action.basepoint();
    let mut cosets = vec![start];
    let mut depth = vec![0];
    let mut index = HashMap::from([(start, 0)]);
    let mut head = 0;
    while head < cosets.len() {
        let (x, d) = (cosets[head], depth[head]);
        head += 1;
        if d == radius {
            continue;
        }
        for e in &generators.elements {
            let y = action.apply_word(&e.word, x)?;
            if !index.contains_key(&y) {
                index.insert(y, cosets.len());
                cosets.push(y);
                depth.push(d + 1);
            }
        }
    }
    Ok((cosets, depth, index))
}

/// A finite set of cosets with its exact invariance defect.
#[derive(Clone, Debug, PartialEq)]
pub struct FolnerCertificate {
    pub action: String,
    /// Sorted cosets.
    pub set: Vec<Coset>,
    pub generators: Vec<String>,
    /// `max_g #(F ∖ Fg)`.
    pub displaced: usize,
    pub epsilon: f64,
    pub target: f64,
    /// Schreier radius of the ball the set was grown from.
    pub radius: usize,
    pub greedy_steps: usize,
    pub budget_exhausted: bool,
}

impl FolnerCertificate {
    pub fn size(&self) -> usize {
        self.set.len()
    }

    pub fn dump(&self) -> String {
        let mut out = format!("folner {} {} {}\n", self.action, self.epsilon, self.set.len());
        for x in &self.set {
            let _ = writeln!(out, "{x}");
        }
        out
    }
}

/// `max_g #(F ∖ Fg)`, counted as `#{x ∈ F : g·x ∉ F}`.
pub fn folner_defect(generators: &GeneratorSet, set: &[Coset]) -> Result<usize> {
    let members: HashSet<Coset> = set.iter().copied().collect();
    let mut worst = 0;
    for i in 0..generators.len() {
        let mut out = 0;
        for &x in set {
            if !members.contains(&generators.apply(i, x)?) {
                out += 1;
            }
        }
        worst = worst.max(out);
    }
    Ok(worst)
}

fn defect_ratio(displaced: usize, size: usize) -> f64 {
    displaced as f64 / size as f64
}

/// Removes the point that leaves the set under the most generators while
/// the defect ratio improves.
fn shed_boundary(generators: &GeneratorSet, mut set: Vec<Coset>) -> Result<(Vec<Coset>, usize, usize)> {
    let mut displaced = folner_defect(generators, &set)?;
    let mut steps = 0;
    while set.len() > 1 {
        let members: HashSet<Coset> = set.iter().copied().collect();
        let mut best: Option<(usize, usize)> = None;
        for (k, &x) in set.iter().enumerate() {
            let mut leaving = 0;
            for i in 0..generators.len() {
                if !members.contains(&generators.apply(i, x)?) {
                    leaving += 1;
                }
            }
            if best.is_none_or(|(b, _)| leaving > b) {
                best = Some((leaving, k));
            }
        }
        let (_, k) = best.expect("nonempty set");
        let mut trial = set.clone();
        trial.remove(k);
        let d = folner_defect(generators, &trial)?;
        if defect_ratio(d, trial.len()) < defect_ratio(displaced, set.len()) {
            set = trial;
            displaced = d;
            steps += 1;
        } else {
            break;
        }
    }
    Ok((set, displaced, steps))
}

/// Searches Schreier balls of radius `0..=budget` (grown with the basic
/// generators) for a set with defect ratio below `epsilon` against `G`. When
/// no ball succeeds each is refined greedily and the best candidate is
/// returned with the budget flag set; this is evidence, never a proof of
/// non-amenability.
pub fn folner_search(generators: &GeneratorSet, epsilon: f64, budget: usize) -> Result<FolnerCertificate> {
    if generators.is_empty() {
        return Err(Error::InvalidArgument("empty generator set".into()));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon {epsilon} must be positive")));
    }
    let action = generators.action.clone();
    let basic = GeneratorSet::basic(action.clone());
    let (cosets, depth, _) = schreier_ball(&action, &basic, budget)?;
    let balls: Vec<Vec<Coset>> = (0..=budget)
        .map(|r| {
            let mut ball: Vec<Coset> = cosets
                .iter()
                .zip(&depth)
                .filter(|(_, &d)| d <= r)
                .map(|(&c, _)| c)
                .collect();
            ball.sort_unstable();
            ball
        })
        .collect();
    let certificate =
        |set: Vec<Coset>, displaced: usize, radius: usize, steps: usize, exhausted: bool| FolnerCertificate {
            action: action.describe(),
            epsilon: defect_ratio(displaced, set.len()),
            set,
            generators: generators.names(),
            displaced,
            target: epsilon,
            radius,
            greedy_steps: steps,
            budget_exhausted: exhausted,
        };

    let defects = balls
        .par_iter()
        .map(|b| folner_defect(generators, b))
        .collect::<Result<Vec<_>>>()?;
    if let Some(r) = (0..=budget).find(|&r| defect_ratio(defects[r], balls[r].len()) < epsilon) {
        return Ok(certificate(balls[r].clone(), defects[r], r, 0, false));
    }

    let refined = balls
        .into_par_iter()
        .enumerate()
        .map(|(r, b)| shed_boundary(generators, b).map(|(s, d, k)| (r, s, d, k)))
        .collect::<Result<Vec<_>>>()?;
    let (r, mut set, d, k) = refined
        .into_iter()
        .min_by(|a, b| {
            defect_ratio(a.2, a.1.len())
                .partial_cmp(&defect_ratio(b.2, b.1.len()))
                .expect("finite ratios")
                .then(a.0.cmp(&b.0))
        })
        .expect("at least one candidate");
    set.sort_unstable();
    let exhausted = defect_ratio(d, set.len()) >= epsilon;
    Ok(certificate(set, d, r, k, exhausted))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrbitKind {
    /// Closed under `G` inside the discovered fiber and away from the frontier.
    Finite,
    /// Meets the frontier or leaves the discovered fiber: possibly infinite.
    FrontierTouching,
}

#[derive(Clone, Debug)]
pub struct OrbitReport {
    pub orbits: Vec<Vec<Coset>>,
    pub kinds: Vec<OrbitKind>,
    pub radius: f64,
}

impl OrbitReport {
    pub fn finite_count(&self) -> usize {
        self.kinds.iter().filter(|&&k| k == OrbitKind::Finite).count()
    }

    /// The only claim a truncated fiber supports.
    pub fn summary(&self) -> String {
        if self.finite_count() == 0 {
            format!(
                "no finite orbit away from the frontier among {} discovered orbits",
                self.orbits.len()
            )
        } else {
            format!(
                "{} finite orbits and {} frontier-touching orbits",
                self.finite_count(),
                self.orbits.len() - self.finite_count()
            )
        }
    }
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        parent[r] = parent[parent[r]];
        r = parent[r];
    }
    r
}

/// Orbits of `⟨G⟩` on the given fiber points; `frontier[i]` flags points
/// whose neighbourhood is truncated.
pub fn orbit_decomposition(generators: &GeneratorSet, points: &[Coset], frontier: &[bool]) -> Result<OrbitReport> {
    let n = points.len();
    let index: HashMap<Coset, usize> = points.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut parent: Vec<usize> = (0..n).collect();
    let mut open = frontier.to_vec();
    for (i, &x) in points.iter().enumerate() {
        for g in 0..generators.len() {
            match index.get(&generators.apply(g, x)?) {
                Some(&j) => {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    parent[a] = b;
                }
                None => open[i] = true,
            }
        }
    }
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let mut orbits: Vec<Vec<usize>> = groups.into_values().collect();
    orbits.sort_by_key(|o| points[o[0]]);
    let kinds = orbits
        .iter()
        .map(|o| {
            if o.iter().any(|&i| open[i]) {
                OrbitKind::FrontierTouching
            } else {
                OrbitKind::Finite
            }
        })
        .collect();
    let orbits = orbits
        .into_iter()
        .map(|o| {
            let mut c: Vec<Coset> = o.into_iter().map(|i| points[i]).collect();
            c.sort_unstable();
            c
        })
        .collect();
    Ok(OrbitReport {
        orbits,
        kinds,
        radius: generators.radius,
    })
}

/// Orbits on the discovered fiber over the base root of a cover.
pub fn cover_orbits<T: Scalar>(cover: &CoveringGraph<T>, generators: &GeneratorSet) -> Result<OrbitReport> {
    let fiber = cover.fiber(cover.base_root());
    let points: Vec<Coset> = fiber.iter().map(|&t| cover.coset(t)).collect();
    let frontier: Vec<bool> = fiber.iter().map(|&t| cover.is_frontier(t)).collect();
    orbit_decomposition(generators, &points, &frontier)
}
