//! Splitting a symmetric functional into `n` one-dimensional moment problems.
//!
//! Symbol table (chain index `k` runs `1..=n`):
//!
//! | name            | meaning                                                      |
//! |-----------------|--------------------------------------------------------------|
//! | `c_n`           | constant of the sum direction `x1 + ... + xn + c_n`           |
//! | `c_mid`         | shared constant `c_2 = ... = c_{n-1}` of the middle chains    |
//! | `gamma`         | trailing coordinate `(c_mid - c_n) / n` of chains `k >= 2`     |
//! | `mu_k`          | zeroth moment (mass) assigned to chain `k`                    |
//! | `M_k`           | remaining mass `m_1 - mu_1 - ... - mu_k`                      |
//!
//! Chain 1 integrates along the sum direction, chains `2..n-1` along
//! `x1 + ... + x_{n-k+1} - (n-k+1) x_{n-k+2}`, and chain `n` along `x1 - x2`.

use serde::{Deserialize, Serialize};

use crate::error::{CubatureError, Result};
use crate::moments::SymmetricMomentSpec;

/// Relative tolerance for `sum(mu) = m_1` on uncompensated splits.
pub const MASS_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionConstants {
    pub n: usize,
    pub c_n: f64,
    /// Absent for `n = 2`.
    pub c_mid: Option<f64>,
    /// Zero for `n = 2`.
    pub gamma: f64,
}

impl DecompositionConstants {
    /// The constant `c_2` entering the last chain's node map; equals `c_n`
    /// when `n = 2`.
    pub fn c_two(&self) -> f64 {
        self.c_mid.unwrap_or(self.c_n)
    }

    /// Shift constant of the transformed variable of chain `k`.
    pub fn chain_constant(&self, k: usize) -> f64 {
        if k == 1 {
            self.c_n
        } else {
            self.c_two()
        }
    }
}

pub fn compute_constants(spec: &SymmetricMomentSpec) -> Result<DecompositionConstants> {
    let n = spec.n();
    let m = spec.moments();
    let d = spec.half_difference_square();
    if d <= 0.0 {
        return Err(CubatureError::InvalidSpec(format!(
            "L(x1^2) - L(x1 x2) must be positive, got {d:e}"
        )));
    }
    let nf = n as f64;
    let c_n = -(m.m_xxx + (nf - 3.0) * m.m_xxy - (nf - 2.0) * m.m_xyz) / d;
    let (c_mid, gamma) = if n >= 3 {
        let c = -(m.m_xxx - 3.0 * m.m_xxy + 2.0 * m.m_xyz) / d;
        (Some(c), (c - c_n) / nf)
    } else {
        (None, 0.0)
    };
    Ok(DecompositionConstants {
        n,
        c_n,
        c_mid,
        gamma,
    })
}

/// Zeroth moments of the `n` reduced functionals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassSplit {
    masses: Vec<f64>,
    compensation: bool,
}

impl MassSplit {
    /// Direct masses `mu_1..mu_n`. Without compensation they must sum to `m_1`.
    pub fn new(spec: &SymmetricMomentSpec, masses: Vec<f64>, compensation: bool) -> Result<Self> {
        if masses.len() != spec.n() {
            return Err(CubatureError::InvalidSplit(format!(
                "expected {} masses, got {}",
                spec.n(),
                masses.len()
            )));
        }
        if let Some((k, mu)) = masses
            .iter()
            .enumerate()
            .find(|(_, mu)| !(mu.is_finite() && **mu > 0.0))
        {
            return Err(CubatureError::InvalidSplit(format!(
                "mass mu_{} = {mu} must be positive",
                k + 1
            )));
        }
        let total: f64 = masses.iter().sum();
        if !compensation && (total - spec.m_1()).abs() > MASS_SUM_TOLERANCE * spec.m_1() {
            return Err(CubatureError::InvalidSplit(format!(
                "masses sum to {total}, expected L(1) = {}; enable compensation to allow \
                 a residual node",
                spec.m_1()
            )));
        }
        Ok(Self {
            masses,
            compensation,
        })
    }

    /// Masses given as multiples of the uniform share: `mu_k = t_k m_1 / n`.
    pub fn from_t(spec: &SymmetricMomentSpec, t: &[f64], compensation: bool) -> Result<Self> {
        let share = spec.m_1() / spec.n() as f64;
        Self::new(spec, t.iter().map(|tk| tk * share).collect(), compensation)
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn is_compensated(&self) -> bool {
        self.compensation
    }

    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn t_parameters(&self, spec: &SymmetricMomentSpec) -> Vec<f64> {
        let share = spec.m_1() / spec.n() as f64;
        self.masses.iter().map(|mu| mu / share).collect()
    }

    /// Weight of the extra node, `m_1 - sum(mu)`, when compensation is on.
    pub fn compensation_weight(&self, m_1: f64) -> Option<f64> {
        self.compensation.then(|| m_1 - self.total())
    }
}

/// Equal masses `m_1 / n`, no compensation.
pub fn default_split(spec: &SymmetricMomentSpec) -> MassSplit {
    MassSplit {
        masses: vec![spec.m_1() / spec.n() as f64; spec.n()],
        compensation: false,
    }
}

/// `m_1 - (mu_1 + ... + mu_k)`; `k = 0` gives `m_1`.
pub fn remaining_mass(split: &MassSplit, m_1: f64, k: usize) -> f64 {
    assert!(k <= split.masses.len(), "chain prefix {k} out of range");
    m_1 - split.masses[..k].iter().sum::<f64>()
}

/// Moments `(m0, m1, m2, m3)` of one reduced functional in its variable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OneDimMoments {
    /// Chain index `1..=n`, or 0 for a free-standing problem.
    pub k: usize,
    pub m0: f64,
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
}

impl OneDimMoments {
    pub fn new(m0: f64, m1: f64, m2: f64, m3: f64) -> Self {
        Self {
            k: 0,
            m0,
            m1,
            m2,
            m3,
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.m0, self.m1, self.m2, self.m3]
    }
}

/// Moments of chain `k` given its mass and the mass left before it
/// (`M_{k-1}`, which equals `m_1` for `k = 1`).
///
/// Chain 1 uses the full functional; chain `n` is the `x1 - x2` problem with
/// odd moments identically zero; the middle chains depend only on the base
/// moments, `c_mid` and `M_{k-1}`.
pub fn chain_moments(
    spec: &SymmetricMomentSpec,
    consts: &DecompositionConstants,
    k: usize,
    mass: f64,
    remaining_before: f64,
) -> OneDimMoments {
    let n = spec.n();
    assert!((1..=n).contains(&k), "chain index {k} out of range 1..={n}");
    let m = spec.moments();
    let d = spec.half_difference_square();
    let (m1, m2, m3) = if k == 1 {
        let nf = n as f64;
        let c = consts.c_n;
        let second = nf * m.m_xx + nf * (nf - 1.0) * m.m_xy;
        let m1 = nf * m.m_x + c * m.m_1;
        let m2 = second + 2.0 * nf * c * m.m_x + c * c * m.m_1;
        let m3 = nf * m.m_xxx
            + 3.0 * nf * (nf - 1.0) * m.m_xxy
            + nf * (nf - 1.0) * (nf - 2.0) * m.m_xyz
            + 3.0 * c * second
            + 3.0 * nf * c * c * m.m_x
            + c * c * c * m.m_1;
        (m1, m2, m3)
    } else if k == n {
        (0.0, 2.0 * d, 0.0)
    } else {
        let c = consts.chain_constant(k);
        let s = (n - k + 1) as f64;
        let rest = remaining_before;
        let skew = -m.m_xxx + 3.0 * m.m_xxy - 2.0 * m.m_xyz;
        (
            c * rest,
            s * (s + 1.0) * d + c * c * rest,
            s * (s + 1.0) * (s + 2.0) * skew + c * c * c * rest,
        )
    };
    OneDimMoments {
        k,
        m0: mass,
        m1,
        m2,
        m3,
    }
}

/// Moments of all `n` reduced functionals for a split.
pub fn reduced_moment_chain(
    spec: &SymmetricMomentSpec,
    split: &MassSplit,
    consts: &DecompositionConstants,
) -> Result<Vec<OneDimMoments>> {
    let n = spec.n();
    if split.masses.len() != n || consts.n != n {
        return Err(CubatureError::DimensionMismatch {
            expected: n,
            got: if consts.n != n {
                consts.n
            } else {
                split.masses.len()
            },
        });
    }
    let mut remaining = spec.m_1();
    let mut chain = Vec::with_capacity(n);
    for (i, &mu) in split.masses.iter().enumerate() {
        chain.push(chain_moments(spec, consts, i + 1, mu, remaining));
        remaining -= mu;
    }
    Ok(chain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{cube_spec, sector_spec, simplex_spec, MomentClasses};
    use std::f64::consts::PI;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    #[test]
    fn simplex_constants() {
        let c = compute_constants(&simplex_spec(3).unwrap()).unwrap();
        assert!(close(c.c_n, -5.0 / 6.0, 1e-14));
        assert!(close(c.c_mid.unwrap(), -1.0 / 3.0, 1e-14));
        assert!(close(c.gamma, 1.0 / 6.0, 1e-14));
        for n in 3..=8 {
            let c = compute_constants(&simplex_spec(n).unwrap()).unwrap();
            let nf = n as f64;
            assert!(close(c.c_mid.unwrap(), -2.0 / (nf + 3.0), 1e-14), "n={n}");
            assert!(close(c.c_n, -(nf + 2.0) / (nf + 3.0), 1e-14), "n={n}");
            assert!(close(c.gamma, 1.0 / (nf + 3.0), 1e-13), "n={n}");
            assert_eq!(c.gamma, (c.c_mid.unwrap() - c.c_n) / nf);
        }
    }

    #[test]
    fn sector_constants() {
        let c = compute_constants(&sector_spec(3).unwrap()).unwrap();
        let scale = 15.0 / 48.0;
        assert!(close(
            c.c_mid.unwrap(),
            -scale * (4.0 - PI) / (PI - 2.0),
            1e-13
        ));
        assert!(close(c.c_n, -scale * (2.0 * PI - 2.0) / (PI - 2.0), 1e-13));
        assert!(close(c.gamma, 0.3125, 1e-13));

        // closed forms for general n: (n+2)!!/(n+3)!! (pi/2)^([(n-1)/2]-[n/2])
        let dfact = |k: u64| (1..=k).rev().step_by(2).product::<u64>() as f64;
        for n in 3..=8u64 {
            let c = compute_constants(&sector_spec(n as usize).unwrap()).unwrap();
            let p = ((n as i32 - 1) / 2) - (n as i32 / 2);
            let g = dfact(n + 2) / dfact(n + 3) * (PI / 2.0).powi(p);
            let nf = n as f64;
            assert!(close(c.gamma, g, 1e-13), "n={n}");
            assert!(close(c.c_mid.unwrap(), -g * (4.0 - PI) / (PI - 2.0), 1e-13));
            assert!(close(
                c.c_n,
                -g * ((nf - 1.0) * PI - (2.0 * nf - 4.0)) / (PI - 2.0),
                1e-13
            ));
        }
    }

    #[test]
    fn cube_constants_from_ratio() {
        let c = compute_constants(&cube_spec(3).unwrap()).unwrap();
        // -(1/4 + 0 - 1/8) / (1/3 - 1/4)
        assert!(close(c.c_n, -1.5, 1e-14));
    }

    #[test]
    fn two_dimensional_constants() {
        let spec = simplex_spec(2).unwrap();
        let c = compute_constants(&spec).unwrap();
        // -(1/20 - 1/60) / (1/12 - 1/24)
        assert!(close(c.c_n, -0.8, 1e-14));
        assert_eq!(c.c_mid, None);
        assert_eq!(c.gamma, 0.0);
        assert_eq!(c.c_two(), c.c_n);
    }

    #[test]
    fn default_splits() {
        let s = default_split(&simplex_spec(3).unwrap());
        for mu in s.masses() {
            assert!(close(*mu, 1.0 / 18.0, 1e-15));
        }
        assert_eq!(default_split(&cube_spec(4).unwrap()).masses(), &[0.25; 4]);
        let s = default_split(&sector_spec(3).unwrap());
        for mu in s.masses() {
            assert!(close(*mu, PI / 18.0, 1e-15));
        }
    }

    #[test]
    fn simplex_three_chain() {
        let spec = simplex_spec(3).unwrap();
        let consts = compute_constants(&spec).unwrap();
        let chain = reduced_moment_chain(&spec, &default_split(&spec), &consts).unwrap();
        let want = [
            [1.0 / 18.0, -1.0 / 72.0, 32.0 / 4320.0, -70.0 / 25920.0],
            [
                1.0 / 18.0,
                -1.0 / 27.0,
                6.0 / 120.0 + 1.0 / 81.0,
                -24.0 / 360.0 - 1.0 / 243.0,
            ],
            [1.0 / 18.0, 0.0, 1.0 / 60.0, 0.0],
        ];
        for (entry, w) in chain.iter().zip(want) {
            for (g, e) in entry.as_array().iter().zip(w) {
                assert!((g - e).abs() <= 1e-15, "chain {}: {g} vs {e}", entry.k);
            }
        }
        assert_eq!(chain[2].m1, 0.0);
        assert_eq!(chain[2].m3, 0.0);
    }

    #[test]
    fn simplex_chain_matches_closed_forms() {
        for n in 3..=7usize {
            let spec = simplex_spec(n).unwrap();
            let consts = compute_constants(&spec).unwrap();
            let t: Vec<f64> = (0..n).map(|i| 0.8 + 0.1 * i as f64).collect();
            let split = MassSplit::from_t(&spec, &t, true).unwrap();
            let chain = reduced_moment_chain(&spec, &split, &consts).unwrap();
            let nf = n as f64;
            let fact = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
            let nn = nf * fact(n);
            // first chain
            let e = &chain[0];
            assert!(close(e.m1, -2.0 / (fact(n + 1) * (nf + 3.0)), 1e-13));
            assert!(close(
                e.m2,
                (nf * nf + 5.0 * nf + 8.0) / (fact(n + 3) * (nf + 3.0)),
                1e-13
            ));
            assert!(close(
                e.m3,
                -2.0 * (nf + 2.0) * (nf + 4.0) / ((nf + 3.0).powi(2) * fact(n + 3)),
                1e-12
            ));
            // middle chains, index k + 1
            for k in 1..=(n - 2) {
                let e = &chain[k];
                let rest: f64 = nf - t[..k].iter().sum::<f64>();
                let s = (n - k) as f64;
                assert!(close(e.m1, -2.0 * rest / ((nf + 3.0) * nn), 1e-13));
                assert!(close(
                    e.m2,
                    s * (s + 1.0) / fact(n + 2) + 4.0 * rest / (nn * (nf + 3.0).powi(2)),
                    1e-13
                ));
                assert!(close(
                    e.m3,
                    -2.0 * s * (s + 1.0) * (s + 2.0) / fact(n + 3)
                        - 8.0 * rest / (nn * (nf + 3.0).powi(3)),
                    1e-12
                ));
            }
            let last = chain.last().unwrap();
            assert!(close(last.m2, 2.0 / fact(n + 2), 1e-13));
        }
    }

    #[test]
    fn remaining_mass_examples() {
        let spec = simplex_spec(3).unwrap();
        let split = default_split(&spec);
        assert!(close(
            remaining_mass(&split, spec.m_1(), 1),
            1.0 / 9.0,
            1e-15
        ));
        assert_eq!(remaining_mass(&split, spec.m_1(), 0), spec.m_1());

        let s4 = simplex_spec(4).unwrap();
        let t = [104.0 / 75.0, 3577.0 / 2775.0, 9947.0 / 8880.0, 49.0 / 60.0];
        let split = MassSplit::from_t(&s4, &t, true).unwrap();
        let r = remaining_mass(&split, s4.m_1(), 4);
        assert!(close(r, -49.0 / 7680.0, 1e-12), "{r}");
        assert_eq!(split.compensation_weight(s4.m_1()), Some(r));
    }

    #[test]
    fn chain_mass_is_conserved() {
        let spec = sector_spec(5).unwrap();
        let consts = compute_constants(&spec).unwrap();
        let split = MassSplit::from_t(&spec, &[1.2, 0.7, 1.1, 0.9, 1.4], true).unwrap();
        let chain = reduced_moment_chain(&spec, &split, &consts).unwrap();
        let total: f64 = chain.iter().map(|c| c.m0).sum::<f64>()
            + split.compensation_weight(spec.m_1()).unwrap();
        assert!(close(total, spec.m_1(), 1e-12));
        assert!(chain.iter().all(|c| c.m0 > 0.0));
    }

    #[test]
    fn centrally_symmetric_functional() {
        // symmetric product measure on [-1, 1]^3 with odd moments zero
        let spec = SymmetricMomentSpec::new(
            3,
            MomentClasses {
                m_1: 8.0,
                m_x: 0.0,
                m_xx: 8.0 / 3.0,
                m_xy: 0.0,
                m_xxx: 0.0,
                m_xxy: 0.0,
                m_xyz: 0.0,
            },
        )
        .unwrap();
        let consts = compute_constants(&spec).unwrap();
        assert_eq!(consts.c_n, 0.0);
        let chain = reduced_moment_chain(&spec, &default_split(&spec), &consts).unwrap();
        for e in chain {
            assert_eq!(e.m1, 0.0);
            assert_eq!(e.m3, 0.0);
        }
    }

    #[test]
    fn split_validation() {
        let spec = simplex_spec(3).unwrap();
        assert!(MassSplit::from_t(&spec, &[1.0, 1.0], false).is_err());
        assert!(MassSplit::from_t(&spec, &[1.0, -1.0, 3.0], false).is_err());
        let err = MassSplit::from_t(&spec, &[1.0, 1.0, 1.5], false).unwrap_err();
        assert!(err.to_string().contains("compensation"));
        assert!(MassSplit::from_t(&spec, &[1.0, 1.0, 1.5], true).is_ok());
        let t = [93.0 / 85.0, 378.0 / 391.0, 108.0 / 115.0];
        let split = MassSplit::from_t(&spec, &t, false).unwrap();
        for (a, b) in split.t_parameters(&spec).iter().zip(t) {
            assert!(close(*a, b, 1e-15));
        }
    }
}
