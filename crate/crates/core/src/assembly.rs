//! Mapping one-dimensional nodes back into `R^n` and packaging the rule.

use serde::{Deserialize, Serialize};

use crate::decomposition::{
    compute_constants, default_split, reduced_moment_chain, DecompositionConstants, MassSplit,
    OneDimMoments,
};
use crate::error::{CubatureError, Result};
use crate::moment_1d::{solve_two_point, OneDimRule};
use crate::moments::{Region, SymmetricMomentSpec};

/// Provenance of a rule. Every field has a default so hand-written rule files
/// only need `dim`, `nodes` and `weights`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleMetadata {
    /// Region name, `"custom"` for user specs, or a reference table id.
    pub source: String,
    pub masses: Vec<f64>,
    pub compensation: bool,
    pub constants: Option<DecompositionConstants>,
    /// Number of nodes produced by each chain (1 for an atomic chain).
    pub chain_sizes: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubatureRule {
    pub dim: usize,
    pub degree: u32,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    #[serde(default)]
    pub metadata: RuleMetadata,
}

impl CubatureRule {
    /// A degree-3 rule with empty metadata.
    pub fn new(dim: usize, nodes: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let rule = Self {
            dim,
            degree: 3,
            nodes,
            weights,
            metadata: RuleMetadata::default(),
        };
        rule.check_shape()?;
        Ok(rule)
    }

    /// Node/weight counts agree and every node has `dim` coordinates.
    pub fn check_shape(&self) -> Result<()> {
        if self.nodes.len() != self.weights.len() {
            return Err(CubatureError::NodeCountMismatch {
                left: self.nodes.len(),
                right: self.weights.len(),
            });
        }
        if let Some(bad) = self.nodes.iter().find(|x| x.len() != self.dim) {
            return Err(CubatureError::DimensionMismatch {
                expected: self.dim,
                got: bad.len(),
            });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `sum_i w_i x_i^alpha`.
    pub fn monomial_sum(&self, exponents: &[u32]) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * monomial(x, exponents))
            .sum()
    }
}

pub(crate) fn monomial(x: &[f64], exponents: &[u32]) -> f64 {
    x.iter()
        .zip(exponents)
        .filter(|(_, &a)| a > 0)
        .map(|(xi, &a)| xi.powi(a as i32))
        .product()
}

/// Image in `R^n` of the node `t` of chain `k`.
///
/// * `k = 1`: every coordinate `(t - c_n) / n`;
/// * `1 < k < n`: `alpha` repeated `n-k+1` times, then `beta`, then `gamma`
///   repeated `k-2` times, with `beta = gamma - t/(n-k+2)` and
///   `alpha = beta + (t - c_mid)/(n-k+1)`;
/// * `k = n`: `(beta + t, beta, gamma, ...)` with `beta = gamma - (t + c_2)/2`.
pub fn map_node(k: usize, t: f64, consts: &DecompositionConstants) -> Vec<f64> {
    let n = consts.n;
    assert!((1..=n).contains(&k), "chain index {k} out of range 1..={n}");
    let gamma = consts.gamma;
    if k == 1 {
        return vec![(t - consts.c_n) / n as f64; n];
    }
    let mut x = Vec::with_capacity(n);
    if k == n {
        let beta = gamma - (t + consts.c_two()) / 2.0;
        x.push(beta + t);
        x.push(beta);
    } else {
        let lead = n - k + 1;
        let beta = gamma - t / (lead + 1) as f64;
        let alpha = beta + (t - consts.chain_constant(k)) / lead as f64;
        x.extend(std::iter::repeat_n(alpha, lead));
        x.push(beta);
    }
    x.resize(n, gamma);
    x
}

/// The extra node `(gamma - c_2/2, gamma - c_2/2, gamma, ..., gamma)`: the
/// last chain's image of `t = 0`, which only touches that chain's mass.
pub fn compensation_node(consts: &DecompositionConstants) -> Vec<f64> {
    map_node(consts.n, 0.0, consts)
}

fn solve_chain(m: &OneDimMoments) -> Result<OneDimRule> {
    solve_two_point(m).map_err(|err| match err {
        CubatureError::InfeasibleMoments { hankel } => CubatureError::InfeasibleChain {
            chain: m.k,
            mass: m.m0,
            lower_bound: if m.m2 > 0.0 {
                m.m1 * m.m1 / m.m2
            } else {
                f64::INFINITY
            },
            hankel,
        },
        other => other,
    })
}

/// Solves every chain and maps its nodes; chain-major order, nodes descending
/// within a chain, compensation node last.
pub fn assemble_rule(
    spec: &SymmetricMomentSpec,
    split: &MassSplit,
    consts: &DecompositionConstants,
) -> Result<CubatureRule> {
    let chain = reduced_moment_chain(spec, split, consts)?;
    let n = spec.n();
    let mut nodes = Vec::with_capacity(2 * n + 1);
    let mut weights = Vec::with_capacity(2 * n + 1);
    let mut chain_sizes = Vec::with_capacity(n);
    for m in &chain {
        let rule = solve_chain(m)?;
        chain_sizes.push(rule.nodes.len());
        for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
            nodes.push(map_node(m.k, t, consts));
            weights.push(w);
        }
    }
    if let Some(w) = split.compensation_weight(spec.m_1()) {
        nodes.push(compensation_node(consts));
        weights.push(w);
    }
    Ok(CubatureRule {
        dim: n,
        degree: 3,
        nodes,
        weights,
        metadata: RuleMetadata {
            source: "custom".to_string(),
            masses: split.masses().to_vec(),
            compensation: split.is_compensated(),
            constants: Some(*consts),
            chain_sizes,
        },
    })
}

/// Constants, chain and assembly in one call.
pub fn build_rule(spec: &SymmetricMomentSpec, split: &MassSplit) -> Result<CubatureRule> {
    let consts = compute_constants(spec)?;
    assemble_rule(spec, split, &consts)
}

/// Rule for a built-in region; `split = None` means equal masses.
pub fn region_rule(region: &Region, split: Option<&MassSplit>) -> Result<CubatureRule> {
    let spec = region.spec();
    let default;
    let split = match split {
        Some(s) => s,
        None => {
            default = default_split(&spec);
            &default
        }
    };
    let mut rule = build_rule(&spec, split)?;
    rule.metadata.source = region.kind().name().to_string();
    Ok(rule)
}
