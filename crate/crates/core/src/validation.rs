//! Exactness checks, node classification and rule comparison.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::assembly::CubatureRule;
use crate::error::{CubatureError, Result};
use crate::moments::{MomentClass, Region, RegionKind, SymmetricMomentSpec};

/// Largest dimension for which every monomial of degree <= 3 is checked.
pub const FULL_ENUMERATION_MAX_DIM: usize = 8;
/// Random permutations per symmetry class above [`FULL_ENUMERATION_MAX_DIM`].
pub const SAMPLED_PERMUTATIONS: usize = 200;
const SAMPLING_SEED: u64 = 0x5eed_cafe;

/// Relative exactness threshold, applied as `1e-12 * max(1, |L(1)|)`.
pub const EXACTNESS_RELATIVE_TOLERANCE: f64 = 1e-12;
/// A degree-4 error above `1e-6 * L(1)` witnesses that the rule is not
/// degree 4.
pub const DEGREE4_RELATIVE_THRESHOLD: f64 = 1e-6;
pub const DEFAULT_BOUNDARY_TOLERANCE: f64 = 1e-9;

pub fn exactness_tolerance(m_1: f64) -> f64 {
    EXACTNESS_RELATIVE_TOLERANCE * m_1.abs().max(1.0)
}

/// All exponent vectors of length `n` with total degree at most `degree`, in
/// lexicographic order.
pub fn monomials_up_to(n: usize, degree: u32) -> Vec<Vec<u32>> {
    fn fill(prefix: &mut Vec<u32>, n: usize, left: u32, out: &mut Vec<Vec<u32>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for e in 0..=left {
            prefix.push(e);
            fill(prefix, n, left - e, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    fill(&mut Vec::with_capacity(n), n, degree, &mut out);
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExactnessReport {
    pub max_abs_error: f64,
    pub max_rel_error: f64,
    pub worst_monomial: Vec<u32>,
    /// Largest absolute error among monomials of degree 0, 1, 2, 3.
    pub per_degree_max: [f64; 4],
    pub monomials_checked: usize,
    /// `L(1)` of the reference functional, for scaled tolerances.
    pub m_1: f64,
    pub degree4_witness: Option<(Vec<u32>, f64)>,
}

impl ExactnessReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_abs_error <= tol
    }

    /// Pass at the default `1e-12 * max(1, |L(1)|)`.
    pub fn passes_default(&self) -> bool {
        self.passes(exactness_tolerance(self.m_1))
    }
}

fn check_dim(rule: &CubatureRule, n: usize) -> Result<()> {
    rule.check_shape()?;
    if rule.dim != n {
        return Err(CubatureError::DimensionMismatch {
            expected: n,
            got: rule.dim,
        });
    }
    Ok(())
}

fn exponents_to_check(n: usize) -> Vec<Vec<u32>> {
    if n <= FULL_ENUMERATION_MAX_DIM {
        return monomials_up_to(n, 3);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SAMPLING_SEED);
    let mut out = Vec::new();
    for class in MomentClass::available(n) {
        let rep = class.representative(n);
        out.push(rep.clone());
        for _ in 0..SAMPLED_PERMUTATIONS {
            let mut e = rep.clone();
            e.shuffle(&mut rng);
            out.push(e);
        }
    }
    out
}

/// Errors `sum w f(x) - L(f)` over the monomials of degree <= 3 (all of them
/// for `n <= 8`, class representatives plus seeded permutations above).
pub fn check_exactness(rule: &CubatureRule, spec: &SymmetricMomentSpec) -> Result<ExactnessReport> {
    let n = spec.n();
    check_dim(rule, n)?;
    let mut report = ExactnessReport {
        max_abs_error: 0.0,
        max_rel_error: 0.0,
        worst_monomial: vec![0; n],
        per_degree_max: [0.0; 4],
        monomials_checked: 0,
        m_1: spec.m_1(),
        degree4_witness: None,
    };
    for alpha in exponents_to_check(n) {
        let exact = spec.moment_of_monomial(&alpha)?;
        let err = (rule.monomial_sum(&alpha) - exact).abs();
        let degree = alpha.iter().sum::<u32>() as usize;
        report.per_degree_max[degree] = report.per_degree_max[degree].max(err);
        let rel = if exact != 0.0 { err / exact.abs() } else { err };
        report.max_rel_error = report.max_rel_error.max(rel);
        if err > report.max_abs_error {
            report.max_abs_error = err;
            report.worst_monomial = alpha;
        }
        report.monomials_checked += 1;
    }
    Ok(report)
}

/// [`check_exactness`] against a built-in region, with the degree-4 probe.
pub fn check_exactness_in_region(rule: &CubatureRule, region: &Region) -> Result<ExactnessReport> {
    let mut report = check_exactness(rule, &region.spec())?;
    report.degree4_witness = degree4_nonexactness(rule, region)?;
    Ok(report)
}

/// Searches `x_i^4` and `x_i^2 x_j^2` for the largest error; returns it when
/// it exceeds `1e-6 * L(1)`, `None` when the rule looks degree 4.
pub fn degree4_nonexactness(
    rule: &CubatureRule,
    region: &Region,
) -> Result<Option<(Vec<u32>, f64)>> {
    let n = region.n();
    check_dim(rule, n)?;
    let mut candidates = Vec::new();
    for i in 0..n {
        let mut e = vec![0; n];
        e[i] = 4;
        candidates.push(e);
        for j in i + 1..n {
            let mut e = vec![0; n];
            e[i] = 2;
            e[j] = 2;
            candidates.push(e);
        }
    }
    let threshold = DEGREE4_RELATIVE_THRESHOLD * region.monomial_moment(&vec![0; n])?;
    let mut best: Option<(Vec<u32>, f64)> = None;
    for alpha in candidates {
        let err = (rule.monomial_sum(&alpha) - region.monomial_moment(&alpha)?).abs();
        if err > threshold && best.as_ref().is_none_or(|(_, e)| err > *e) {
            best = Some((alpha, err));
        }
    }
    Ok(best)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum NodeClass {
    Interior,
    Boundary,
    Exterior,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NodeClassification {
    pub classes: Vec<NodeClass>,
    /// Signed distance-like margin: smallest constraint slack per node.
    pub margins: Vec<f64>,
    pub interior: usize,
    pub boundary: usize,
    pub exterior: usize,
    pub negative_weights: usize,
    pub tolerance: f64,
}

impl NodeClassification {
    pub fn min_margin(&self) -> f64 {
        self.margins.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// 0-based indices of nodes in `class`.
    pub fn indices_of(&self, class: NodeClass) -> Vec<usize> {
        (0..self.classes.len())
            .filter(|&i| self.classes[i] == class)
            .collect()
    }
}

/// Smallest constraint slack of `x`; positive inside the region.
pub fn region_margin(kind: RegionKind, x: &[f64]) -> f64 {
    let lower = x.iter().copied().fold(f64::INFINITY, f64::min);
    match kind {
        RegionKind::Simplex => lower.min(1.0 - x.iter().sum::<f64>()),
        RegionKind::BallSector => lower.min(1.0 - x.iter().map(|v| v * v).sum::<f64>()),
        RegionKind::Cube => x.iter().fold(lower, |m, &v| m.min(1.0 - v)),
    }
}

pub fn classify_margin(margin: f64, tol: f64) -> NodeClass {
    if margin > tol {
        NodeClass::Interior
    } else if margin >= -tol {
        NodeClass::Boundary
    } else {
        NodeClass::Exterior
    }
}

pub fn classify_nodes(
    rule: &CubatureRule,
    region: &Region,
    tol: f64,
) -> Result<NodeClassification> {
    check_dim(rule, region.n())?;
    let margins: Vec<f64> = rule
        .nodes
        .iter()
        .map(|x| region_margin(region.kind(), x))
        .collect();
    let classes: Vec<NodeClass> = margins.iter().map(|&m| classify_margin(m, tol)).collect();
    let count = |c: NodeClass| classes.iter().filter(|&&k| k == c).count();
    Ok(NodeClassification {
        interior: count(NodeClass::Interior),
        boundary: count(NodeClass::Boundary),
        exterior: count(NodeClass::Exterior),
        negative_weights: rule.weights.iter().filter(|&&w| w < 0.0).count(),
        classes,
        margins,
        tolerance: tol,
    })
}

/// One matched pair that exceeds a tolerance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiffEntry {
    pub rule_row: usize,
    pub reference_row: usize,
    pub node_distance: f64,
    pub weight_deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RuleDiff {
    pub max_node_distance: f64,
    pub max_weight_deviation: f64,
    /// `assignment[i]` is the reference row matched to rule row `i`.
    pub assignment: Vec<usize>,
    pub exceeding: Vec<DiffEntry>,
}

impl RuleDiff {
    pub fn within_tolerance(&self) -> bool {
        self.exceeding.is_empty()
    }
}

fn chebyshev(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Order-insensitive comparison. Rows are paired by a minimum-cost
/// assignment where the cost is the max-norm distance of `(x, w)`, so equal
/// nodes with different weights still pair sensibly.
pub fn compare_to_reference(
    rule: &CubatureRule,
    reference: &CubatureRule,
    node_tol: f64,
    weight_tol: f64,
) -> Result<RuleDiff> {
    rule.check_shape()?;
    reference.check_shape()?;
    if rule.dim != reference.dim {
        return Err(CubatureError::DimensionMismatch {
            expected: reference.dim,
            got: rule.dim,
        });
    }
    if rule.len() != reference.len() {
        return Err(CubatureError::NodeCountMismatch {
            left: rule.len(),
            right: reference.len(),
        });
    }
    let node_dist = |i: usize, j: usize| chebyshev(&rule.nodes[i], &reference.nodes[j]);
    let weight_dev = |i: usize, j: usize| (rule.weights[i] - reference.weights[j]).abs();
    let cost: Vec<Vec<f64>> = (0..rule.len())
        .map(|i| {
            (0..reference.len())
                .map(|j| node_dist(i, j).max(weight_dev(i, j)))
                .collect()
        })
        .collect();
    let assignment = min_cost_assignment(&cost);
    let mut diff = RuleDiff {
        max_node_distance: 0.0,
        max_weight_deviation: 0.0,
        assignment,
        exceeding: Vec::new(),
    };
    for (i, &j) in diff.assignment.iter().enumerate() {
        let (d, w) = (node_dist(i, j), weight_dev(i, j));
        diff.max_node_distance = diff.max_node_distance.max(d);
        diff.max_weight_deviation = diff.max_weight_deviation.max(w);
        if d > node_tol || w > weight_tol {
            diff.exceeding.push(DiffEntry {
                rule_row: i,
                reference_row: j,
                node_distance: d,
                weight_deviation: w,
            });
        }
    }
    Ok(diff)
}

/// Hungarian algorithm (shortest augmenting paths with potentials) on a
/// square cost matrix; returns the column assigned to each row.
fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    // 1-based arrays; column 0 is the virtual start
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let reduced = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if reduced < minv[j] {
                    minv[j] = reduced;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        while j0 != 0 {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        assignment[row_of[j] - 1] = j - 1;
    }
    assignment
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::region_rule;
    use crate::moments::{cube_spec, simplex_spec};
    use proptest::prelude::*;

    fn simplex3() -> Region {
        Region::new(RegionKind::Simplex, 3).unwrap()
    }

    #[test]
    fn monomial_counts() {
        // C(n + 3, 3)
        assert_eq!(monomials_up_to(3, 3).len(), 20);
        assert_eq!(monomials_up_to(8, 3).len(), 165);
        assert_eq!(monomials_up_to(2, 0), vec![vec![0, 0]]);
    }

    #[test]
    fn assembled_rule_is_exact() {
        let rule = region_rule(&simplex3(), None).unwrap();
        let report = check_exactness_in_region(&rule, &simplex3()).unwrap();
        assert!(report.max_abs_error <= 1e-13, "{report:?}");
        assert!(report.passes_default());
        assert_eq!(report.monomials_checked, 20);
        let (alpha, err) = report.degree4_witness.unwrap();
        assert_eq!(alpha.iter().sum::<u32>(), 4);
        assert!(err > 1e-5);
    }

    #[test]
    fn sampled_check_in_high_dimension() {
        let region = Region::new(RegionKind::Cube, 10).unwrap();
        let rule = region_rule(&region, None).unwrap();
        let report = check_exactness(&rule, &region.spec()).unwrap();
        assert_eq!(report.monomials_checked, 7 * (SAMPLED_PERMUTATIONS + 1));
        assert!(report.passes_default(), "{report:?}");
    }

    #[test]
    fn wrong_functional_fails() {
        let rule = region_rule(&simplex3(), None).unwrap();
        let report = check_exactness(&rule, &cube_spec(3).unwrap()).unwrap();
        assert!(!report.passes_default());
        assert!(check_exactness(&rule, &simplex_spec(4).unwrap()).is_err());
    }

    #[test]
    fn margins_by_region() {
        assert_eq!(region_margin(RegionKind::Simplex, &[0.25, 0.25]), 0.25);
        assert_eq!(region_margin(RegionKind::Simplex, &[0.5, 0.5]), 0.0);
        assert!(region_margin(RegionKind::BallSector, &[0.8, 0.8]) < 0.0);
        assert_eq!(region_margin(RegionKind::Cube, &[0.9, 0.5]), 1.0 - 0.9);
        assert_eq!(classify_margin(1e-10, 1e-9), NodeClass::Boundary);
        assert_eq!(classify_margin(-2e-9, 1e-9), NodeClass::Exterior);
        assert_eq!(classify_margin(2e-9, 1e-9), NodeClass::Interior);
    }

    #[test]
    fn table1_first_node_outside() {
        let rule = region_rule(&simplex3(), None).unwrap();
        let c = classify_nodes(&rule, &simplex3(), 1e-9).unwrap();
        assert_eq!(c.indices_of(NodeClass::Exterior), vec![0]);
        assert_eq!(c.interior, 5);
        assert_eq!(c.negative_weights, 0);
    }

    #[test]
    fn assignment_is_optimal_on_small_case() {
        let cost = vec![
            vec![4.0, 1.0, 3.0],
            vec![2.0, 0.0, 5.0],
            vec![3.0, 2.0, 2.0],
        ];
        // rows -> columns (1, 0, 2): 1 + 2 + 2 = 5
        assert_eq!(min_cost_assignment(&cost), vec![1, 0, 2]);
    }

    #[test]
    fn self_diff_is_zero() {
        let rule = region_rule(&simplex3(), None).unwrap();
        let diff = compare_to_reference(&rule, &rule, 0.0, 0.0).unwrap();
        assert_eq!(diff.max_node_distance, 0.0);
        assert_eq!(diff.max_weight_deviation, 0.0);
        assert!(diff.within_tolerance());
        let mut short = rule.clone();
        short.nodes.pop();
        short.weights.pop();
        assert!(compare_to_reference(&rule, &short, 1.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn classification_is_permutation_equivariant(
            x in proptest::collection::vec(-0.2f64..1.0, 4),
            seed in any::<u64>(),
        ) {
            let mut y = x.clone();
            y.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            for kind in [RegionKind::Simplex, RegionKind::BallSector, RegionKind::Cube] {
                prop_assert_eq!(
                    classify_margin(region_margin(kind, &x), 1e-9),
                    classify_margin(region_margin(kind, &y), 1e-9)
                );
            }
        }

        #[test]
        fn diff_is_symmetric(
            rows in proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, 3), 2..7),
            noise in proptest::collection::vec(-1e-3f64..1e-3, 21),
            rot in 0usize..7,
        ) {
            let n = rows.len();
            let a = CubatureRule::new(2, rows.iter().map(|r| r[..2].to_vec()).collect(),
                                      rows.iter().map(|r| r[2]).collect()).unwrap();
            let mut nodes: Vec<Vec<f64>> = a.nodes.iter().enumerate()
                .map(|(i, x)| vec![x[0] + noise[3 * i], x[1] + noise[3 * i + 1]]).collect();
            let mut weights: Vec<f64> = a.weights.iter().enumerate()
                .map(|(i, w)| w + noise[3 * i + 2]).collect();
            nodes.rotate_left(rot % n);
            weights.rotate_left(rot % n);
            let b = CubatureRule::new(2, nodes, weights).unwrap();
            let ab = compare_to_reference(&a, &b, 1.0, 1.0).unwrap();
            let ba = compare_to_reference(&b, &a, 1.0, 1.0).unwrap();
            prop_assert_eq!(ab.max_node_distance, ba.max_node_distance);
            prop_assert_eq!(ab.max_weight_deviation, ba.max_weight_deviation);
        }
    }
}
