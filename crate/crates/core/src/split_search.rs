//! Search over mass splits for rules whose nodes sit inside the region.
//!
//! Masses are parametrized by stick breaking: chain `k < n` takes
//! `mu_k = b_k + f_k (M_{k-1} - b_k)` with `f_k` in `(0, 1)` and `b_k` its
//! Hankel lower bound, and the last chain takes what is left. Every point of
//! the parameter cube is a feasible split, and every feasible split is
//! reachable. With compensation the last mass is `f_n (2 m_1 - sum_{k<n} mu_k)`.

use std::cmp::Ordering;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::assembly::{assemble_rule, CubatureRule};
use crate::decomposition::{chain_moments, compute_constants, DecompositionConstants, MassSplit};
use crate::error::{CubatureError, Result};
use crate::moments::{Region, SymmetricMomentSpec};
use crate::validation::{
    classify_nodes, NodeClass, NodeClassification, DEFAULT_BOUNDARY_TOLERANCE,
};

pub const DEFAULT_MAX_EVALS: usize = 5000;
const STARTS: usize = 8;
/// Parameters are clamped so no chain sits closer than `sigmoid(-20)` to its
/// feasibility bound.
const Z_LIMIT: f64 = 20.0;
const MIN_STEP: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SearchMode {
    /// Any split whose rule assembles with positive chain weights.
    Feasible,
    /// Every node strictly inside the region.
    Interior,
    /// No node outside the region; nodes on the boundary are allowed.
    InteriorOrBoundary,
}

impl FromStr for SearchMode {
    type Err = CubatureError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "feasible" => Ok(SearchMode::Feasible),
            "interior" => Ok(SearchMode::Interior),
            "boundary" | "interior-or-boundary" => Ok(SearchMode::InteriorOrBoundary),
            _ => Err(CubatureError::Parse(format!("unknown search mode {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SearchObjective {
    pub mode: SearchMode,
    pub allow_compensation: bool,
    pub max_evals: usize,
    pub seed: u64,
    pub boundary_tol: f64,
}

impl SearchObjective {
    pub fn new(
        mode: SearchMode,
        allow_compensation: bool,
        max_evals: usize,
        seed: u64,
    ) -> Result<Self> {
        if max_evals == 0 {
            return Err(CubatureError::InvalidSpec(
                "search budget must be positive".into(),
            ));
        }
        Ok(Self {
            mode,
            allow_compensation,
            max_evals,
            seed,
            boundary_tol: DEFAULT_BOUNDARY_TOLERANCE,
        })
    }
}

/// Infimum of `mu_k` keeping chain `k` positive definite, for each chain
/// whose bound is determined by `prefix` (the masses `mu_1..mu_p` fixed so
/// far): entries `1..=min(p + 1, n)`.
pub fn feasible_region_bounds(
    spec: &SymmetricMomentSpec,
    consts: &DecompositionConstants,
    prefix: &[f64],
) -> Vec<f64> {
    let n = spec.n();
    let mut remaining = spec.m_1();
    let mut bounds = Vec::with_capacity(n);
    for k in 1..=(prefix.len() + 1).min(n) {
        bounds.push(chain_bound(spec, consts, k, remaining));
        if let Some(mu) = prefix.get(k - 1) {
            remaining -= mu;
        }
    }
    bounds
}

fn chain_bound(
    spec: &SymmetricMomentSpec,
    consts: &DecompositionConstants,
    k: usize,
    remaining_before: f64,
) -> f64 {
    let m = chain_moments(spec, consts, k, 1.0, remaining_before);
    if m.m2 > 0.0 {
        m.m1 * m.m1 / m.m2
    } else {
        f64::INFINITY
    }
}

/// Split from stick-breaking fractions in `(0, 1)`: `n - 1` of them, plus one
/// more for the last chain when `compensation` is on.
pub fn split_from_fractions(
    spec: &SymmetricMomentSpec,
    consts: &DecompositionConstants,
    fractions: &[f64],
    compensation: bool,
) -> Result<MassSplit> {
    let n = spec.n();
    let expected = if compensation { n } else { n - 1 };
    if fractions.len() != expected {
        return Err(CubatureError::InvalidSplit(format!(
            "expected {expected} fractions, got {}",
            fractions.len()
        )));
    }
    let mut masses = Vec::with_capacity(n);
    let mut remaining = spec.m_1();
    for (k, f) in (1..n).zip(fractions) {
        let bound = chain_bound(spec, consts, k, remaining);
        let mu = bound + f * (remaining - bound);
        masses.push(mu);
        remaining -= mu;
    }
    if compensation {
        masses.push(fractions[n - 1] * (2.0 * spec.m_1() - masses.iter().sum::<f64>()));
    } else {
        masses.push(remaining);
    }
    MassSplit::new(spec, masses, compensation)
}

/// Inverse of [`split_from_fractions`], clamped into the open cube.
fn fractions_of_split(
    spec: &SymmetricMomentSpec,
    consts: &DecompositionConstants,
    split: &MassSplit,
) -> Vec<f64> {
    let n = spec.n();
    let mu = split.masses();
    let mut out = Vec::with_capacity(n);
    let mut remaining = spec.m_1();
    for k in 1..n {
        let bound = chain_bound(spec, consts, k, remaining);
        out.push((mu[k - 1] - bound) / (remaining - bound));
        remaining -= mu[k - 1];
    }
    if split.is_compensated() {
        out.push(mu[n - 1] / (2.0 * spec.m_1() - mu[..n - 1].iter().sum::<f64>()));
    }
    let eps = sigmoid(-Z_LIMIT);
    out.iter()
        .map(|f| {
            if f.is_finite() {
                f.clamp(eps, 1.0 - eps)
            } else {
                0.5
            }
        })
        .collect()
}

/// A random feasible split with every fraction in `[0.05, 0.95]`, keeping
/// chains away from their degenerate limits.
pub fn random_feasible_split<R: Rng + ?Sized>(
    spec: &SymmetricMomentSpec,
    consts: &DecompositionConstants,
    compensation: bool,
    rng: &mut R,
) -> Result<MassSplit> {
    let count = if compensation { spec.n() } else { spec.n() - 1 };
    let fractions: Vec<f64> = (0..count).map(|_| rng.gen_range(0.05..=0.95)).collect();
    split_from_fractions(spec, consts, &fractions, compensation)
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn logit(f: f64) -> f64 {
    (f / (1.0 - f)).ln()
}

/// Lexicographic: objective violations, negative weights, then the smallest
/// boundary margin (larger is better).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Score {
    pub violations: usize,
    pub negative_weights: usize,
    pub min_margin: f64,
}

impl Score {
    pub fn satisfied(&self) -> bool {
        self.violations == 0 && self.negative_weights == 0
    }

    fn cmp(&self, other: &Score) -> Ordering {
        self.violations
            .cmp(&other.violations)
            .then(self.negative_weights.cmp(&other.negative_weights))
            .then(other.min_margin.total_cmp(&self.min_margin))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchReport {
    pub satisfied: bool,
    pub mode: SearchMode,
    pub evaluations: usize,
    pub best_start: usize,
    pub score: Score,
    pub classification: Option<NodeClassification>,
}

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub split: MassSplit,
    pub rule: CubatureRule,
    pub report: SearchReport,
}

struct Problem<'a> {
    spec: &'a SymmetricMomentSpec,
    consts: DecompositionConstants,
    region: Option<&'a Region>,
    objective: SearchObjective,
}

struct Candidate {
    score: Score,
    split: MassSplit,
    rule: CubatureRule,
    classification: Option<NodeClassification>,
}

impl Problem<'_> {
    fn evaluate(&self, z: &[f64]) -> Option<Candidate> {
        let fractions: Vec<f64> = z.iter().map(|&v| sigmoid(v)).collect();
        let split = split_from_fractions(
            self.spec,
            &self.consts,
            &fractions,
            self.objective.allow_compensation,
        )
        .ok()?;
        let rule = assemble_rule(self.spec, &split, &self.consts).ok()?;
        let scored = if self.objective.allow_compensation {
            rule.len() - 1
        } else {
            rule.len()
        };
        let negative_weights = rule.weights[..scored].iter().filter(|&&w| w < 0.0).count();
        let (violations, min_margin, classification) = match self.region {
            Some(region) => {
                let c = classify_nodes(&rule, region, self.objective.boundary_tol).ok()?;
                let violations = match self.objective.mode {
                    SearchMode::Feasible => 0,
                    SearchMode::Interior => c.boundary + c.exterior,
                    SearchMode::InteriorOrBoundary => c.exterior,
                };
                (violations, c.min_margin(), Some(c))
            }
            None => (0, 0.0, None),
        };
        Some(Candidate {
            score: Score {
                violations,
                negative_weights,
                min_margin,
            },
            split,
            rule,
            classification,
        })
    }

    /// Coordinate descent from `z`; returns the best candidate and the number
    /// of evaluations spent.
    fn descend(&self, mut z: Vec<f64>, budget: usize) -> (Option<Candidate>, usize) {
        let stop_early = self.objective.mode == SearchMode::Feasible;
        let mut evals = 1;
        let mut best = self.evaluate(&z);
        if stop_early && best.as_ref().is_some_and(|c| c.score.satisfied()) {
            return (best, evals);
        }
        let mut step = 1.0;
        while evals < budget && step > MIN_STEP {
            let mut improved = false;
            for i in 0..z.len() {
                for dir in [1.0, -1.0] {
                    if evals >= budget {
                        break;
                    }
                    let mut trial = z.clone();
                    trial[i] = (trial[i] + dir * step).clamp(-Z_LIMIT, Z_LIMIT);
                    if trial[i] == z[i] {
                        continue;
                    }
                    evals += 1;
                    let Some(cand) = self.evaluate(&trial) else {
                        continue;
                    };
                    let better = best
                        .as_ref()
                        .is_none_or(|b| cand.score.cmp(&b.score) == Ordering::Less);
                    if better {
                        let done = stop_early && cand.score.satisfied();
                        best = Some(cand);
                        z = trial;
                        improved = true;
                        if done {
                            return (best, evals);
                        }
                        break;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        (best, evals)
    }
}

/// Seeded multi-start coordinate descent over the stick-breaking parameters.
///
/// Start 0 is the equal-mass split (or its nearest feasible point); the others
/// are random. Starts run in parallel and the winner is the best score, ties
/// going to the lower start index. `region` is required for the interior
/// modes.
pub fn search_masses(
    spec: &SymmetricMomentSpec,
    region: Option<&Region>,
    objective: &SearchObjective,
) -> Result<SearchOutcome> {
    if objective.max_evals == 0 {
        return Err(CubatureError::InvalidSpec(
            "search budget must be positive".into(),
        ));
    }
    if objective.mode != SearchMode::Feasible && region.is_none() {
        return Err(CubatureError::InvalidSpec(
            "interior search needs a built-in region".into(),
        ));
    }
    if let Some(r) = region {
        if r.n() != spec.n() {
            return Err(CubatureError::DimensionMismatch {
                expected: spec.n(),
                got: r.n(),
            });
        }
    }
    let problem = Problem {
        spec,
        consts: compute_constants(spec)?,
        region,
        objective: *objective,
    };
    let n = spec.n();
    let dims = if objective.allow_compensation {
        n
    } else {
        n - 1
    };
    let starts = STARTS.min(objective.max_evals);
    let share = objective.max_evals / starts;
    let extra = objective.max_evals % starts;

    let equal = MassSplit::new(
        spec,
        vec![spec.m_1() / n as f64; n],
        objective.allow_compensation,
    )?;
    let first: Vec<f64> = fractions_of_split(spec, &problem.consts, &equal)
        .into_iter()
        .map(logit)
        .collect();
    let initial: Vec<Vec<f64>> = (0..starts)
        .map(|s| {
            if s == 0 {
                first.clone()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(objective.seed);
                rng.set_stream(s as u64);
                (0..dims).map(|_| rng.gen_range(-3.0..3.0)).collect()
            }
        })
        .collect();

    let results: Vec<(Option<Candidate>, usize)> = initial
        .into_par_iter()
        .enumerate()
        .map(|(s, z)| problem.descend(z, share + usize::from(s < extra)))
        .collect();

    let evaluations = results.iter().map(|(_, e)| e).sum();
    let (best_start, best) = results
        .into_iter()
        .enumerate()
        .filter_map(|(s, (c, _))| c.map(|c| (s, c)))
        .min_by(|(i, a), (j, b)| a.score.cmp(&b.score).then(i.cmp(j)))
        .ok_or_else(|| CubatureError::InvalidSplit("no split in the search assembled".into()))?;
    Ok(SearchOutcome {
        split: best.split,
        rule: best.rule,
        report: SearchReport {
            satisfied: best.score.satisfied(),
            mode: objective.mode,
            evaluations,
            best_start,
            score: best.score,
            classification: best.classification,
        },
    })
}

/// Whether every node of `c` is of an acceptable class for `mode`.
pub fn meets_mode(c: &NodeClassification, mode: SearchMode) -> bool {
    c.classes.iter().all(|&class| match mode {
        SearchMode::Feasible => true,
        SearchMode::Interior => class == NodeClass::Interior,
        SearchMode::InteriorOrBoundary => class != NodeClass::Exterior,
    })
}
