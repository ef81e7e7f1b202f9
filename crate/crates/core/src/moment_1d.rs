//! Truncated one-dimensional moment problem of order three.
//!
//! Given `(m0, m1, m2, m3)` find at most two nodes `t_i` and weights `w_i`
//! with `sum w_i t_i^j = m_j` for `j = 0..=3`. The nodes are the roots of the
//! monic quadratic `t^2 + b t + c` orthogonal to `1` and `t`.

use serde::{Deserialize, Serialize};

use crate::decomposition::OneDimMoments;
use crate::error::{CubatureError, Result};

/// Relative threshold on the Hankel determinant below which the moments are
/// treated as a single point mass.
pub const HANKEL_RELATIVE_TOLERANCE: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Feasibility {
    /// `m0 > 0` and `m0 m2 - m1^2 > 0`: two real nodes, positive weights.
    PositiveDefinite,
    /// `m0 > 0` and `m0 m2 - m1^2 = 0`: a single point mass.
    Atomic,
    Indefinite,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OneDimRule {
    /// Sorted descending.
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub feasibility: Feasibility,
}

impl OneDimRule {
    /// `sum w_i t_i^j`.
    pub fn moment(&self, j: i32) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(t, w)| w * t.powi(j))
            .sum()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolveOptions {
    /// Accept `m0 m2 - m1^2 < 0` when the quadratic still has real roots;
    /// one weight comes out negative.
    pub allow_indefinite: bool,
}

/// `m0 m2 - m1^2`, evaluated with a fused multiply-add so the cancellation
/// does not cost more than a couple of ulps of the result.
pub fn hankel_determinant(m: &OneDimMoments) -> f64 {
    det2(m.m0, m.m2, m.m1, m.m1)
}

/// `a d - b c` (Kahan).
fn det2(a: f64, d: f64, b: f64, c: f64) -> f64 {
    let bc = b * c;
    let err = (-b).mul_add(c, bc);
    a.mul_add(d, -bc) + err
}

/// `1e-13 * max(m0 |m2|, m1^2)`, i.e. the cancellation scale of the
/// determinant.
pub fn hankel_tolerance(m: &OneDimMoments) -> f64 {
    HANKEL_RELATIVE_TOLERANCE * (m.m0 * m.m2.abs()).max(m.m1 * m.m1)
}

pub fn hankel_feasibility(m: &OneDimMoments) -> Feasibility {
    if m.m0.is_nan() || m.m0 <= 0.0 {
        return Feasibility::Indefinite;
    }
    let h = hankel_determinant(m);
    let tol = hankel_tolerance(m);
    if h > tol {
        Feasibility::PositiveDefinite
    } else if h.abs() <= tol {
        Feasibility::Atomic
    } else {
        Feasibility::Indefinite
    }
}

pub fn solve_two_point(m: &OneDimMoments) -> Result<OneDimRule> {
    solve_two_point_with(m, SolveOptions::default())
}

pub fn solve_two_point_with(m: &OneDimMoments, options: SolveOptions) -> Result<OneDimRule> {
    match hankel_feasibility(m) {
        Feasibility::PositiveDefinite => two_point(m, Feasibility::PositiveDefinite),
        Feasibility::Atomic => point_mass(m),
        Feasibility::Indefinite if options.allow_indefinite && m.m0 > 0.0 => {
            two_point(m, Feasibility::Indefinite)
        }
        Feasibility::Indefinite => Err(CubatureError::InfeasibleMoments {
            hankel: hankel_determinant(m),
        }),
    }
}

fn point_mass(m: &OneDimMoments) -> Result<OneDimRule> {
    let t = m.m1 / m.m0;
    let m2_residual = m.m2 - m.m0 * t * t;
    let m3_residual = m.m3 - m.m0 * t * t * t;
    let tol2 = hankel_tolerance(m) / m.m0;
    let tol3 = 1e-12 * m.m3.abs().max(m.m0 * t.abs().powi(3));
    if m2_residual.abs() > tol2.max(1e-12 * m.m2.abs()) || m3_residual.abs() > tol3 {
        return Err(CubatureError::InconsistentAtom {
            node: t,
            m2_residual,
            m3_residual,
        });
    }
    Ok(OneDimRule {
        nodes: vec![t],
        weights: vec![m.m0],
        feasibility: Feasibility::Atomic,
    })
}

/// Coefficients `(b, c)` of the monic quadratic from
/// `m2 + b m1 + c m0 = 0`, `m3 + b m2 + c m1 = 0`.
pub fn orthogonal_quadratic(m: &OneDimMoments) -> (f64, f64) {
    let (b, c) = quadratic_dd(m);
    (b.value(), c.value())
}

// The closed form cancels twice (the Hankel determinant, then the
// discriminant, which is the squared node gap), so it is evaluated in
// double-double: outputs are then accurate to roughly the precision the
// input moments themselves determine.
fn quadratic_dd(m: &OneDimMoments) -> (Dd, Dd) {
    let h = Dd::prod(m.m0, m.m2) - Dd::prod(m.m1, m.m1);
    let p = Dd::prod(m.m2, m.m2) - Dd::prod(m.m1, m.m3);
    let q = Dd::prod(m.m0, m.m3) - Dd::prod(m.m1, m.m2);
    (-(q / h), -(p / h))
}

fn two_point(m: &OneDimMoments, feasibility: Feasibility) -> Result<OneDimRule> {
    let (b, c) = quadratic_dd(m);
    let disc = b * b - c * 4.0;
    if !disc.0.is_finite() || disc.0 <= 0.0 {
        return Err(CubatureError::InfeasibleMoments {
            hankel: hankel_determinant(m),
        });
    }
    let root = disc.sqrt();
    let (mut t1, mut t2) = if b.0 == 0.0 {
        (root * 0.5, -(root * 0.5))
    } else {
        let q = -((if b.0 > 0.0 { b + root } else { b - root }) * 0.5);
        (q, c / q)
    };
    if t1.0 < t2.0 {
        std::mem::swap(&mut t1, &mut t2);
    }
    let gap = t1 - t2;
    let (m0, m1) = (Dd::from(m.m0), Dd::from(m.m1));
    let w1 = (m1 - m0 * t2) / gap;
    let w2 = (m0 * t1 - m1) / gap;
    Ok(OneDimRule {
        nodes: vec![t1.value(), t2.value()],
        weights: vec![w1.value(), w2.value()],
        feasibility,
    })
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Clone, Copy, Debug)]
struct Dd(f64, f64);

fn two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let bb = s - a;
    Dd(s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    Dd(s, b - (s - a))
}

impl Dd {
    fn from(x: f64) -> Self {
        Dd(x, 0.0)
    }

    /// Exact product of two doubles.
    fn prod(a: f64, b: f64) -> Self {
        let p = a * b;
        Dd(p, a.mul_add(b, -p))
    }

    fn value(self) -> f64 {
        self.0 + self.1
    }

    fn sqrt(self) -> Self {
        let x = self.0.sqrt();
        let r = self - Dd::prod(x, x);
        quick_two_sum(x, r.0 / (2.0 * x))
    }
}

impl std::ops::Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd(-self.0, -self.1)
    }
}

impl std::ops::Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let s = two_sum(self.0, o.0);
        quick_two_sum(s.0, s.1 + self.1 + o.1)
    }
}

impl std::ops::Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + -o
    }
}

impl std::ops::Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let p = Dd::prod(self.0, o.0);
        quick_two_sum(p.0, p.1 + self.0 * o.1 + self.1 * o.0)
    }
}

impl std::ops::Mul<f64> for Dd {
    type Output = Dd;
    fn mul(self, x: f64) -> Dd {
        let p = Dd::prod(self.0, x);
        quick_two_sum(p.0, p.1 + self.1 * x)
    }
}

impl std::ops::Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        let q1 = self.0 / o.0;
        let r = self - o * q1;
        let q2 = r.0 / o.0;
        let r = r - o * q2;
        let q3 = r.0 / o.0;
        quick_two_sum(q1, q2) + Dd::from(q3)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mom(m0: f64, m1: f64, m2: f64, m3: f64) -> OneDimMoments {
        OneDimMoments::new(m0, m1, m2, m3)
    }

    #[test]
    fn feasibility_classes() {
        assert_eq!(
            hankel_feasibility(&mom(1.0, 0.0, 1.0, 0.0)),
            Feasibility::PositiveDefinite
        );
        assert_eq!(
            hankel_feasibility(&mom(1.0, 1.0, 1.0, 1.0)),
            Feasibility::Atomic
        );
        assert_eq!(
            hankel_feasibility(&mom(1.0, 0.0, -1.0, 0.0)),
            Feasibility::Indefinite
        );
        assert_eq!(
            hankel_feasibility(&mom(0.0, 0.0, 1.0, 0.0)),
            Feasibility::Indefinite
        );
        assert_eq!(
            hankel_feasibility(&mom(-1.0, 0.0, 1.0, 0.0)),
            Feasibility::Indefinite
        );
    }

    #[test]
    fn symmetric_problem() {
        let r = solve_two_point(&mom(1.0 / 18.0, 0.0, 1.0 / 60.0, 0.0)).unwrap();
        let t = 0.3f64.sqrt();
        assert!((r.nodes[0] - t).abs() < 1e-15);
        assert!((r.nodes[1] + t).abs() < 1e-15);
        assert!((r.weights[0] - 1.0 / 36.0).abs() < 1e-16);
        assert!((r.weights[1] - 1.0 / 36.0).abs() < 1e-16);
    }

    #[test]
    fn first_simplex_chain() {
        let m = mom(1.0 / 18.0, -1.0 / 72.0, 32.0 / 4320.0, -70.0 / 25920.0);
        let (b, c) = orthogonal_quadratic(&m);
        assert!((b - 0.2156863).abs() < 1e-7, "{b}");
        assert!((c + 0.0794118).abs() < 1e-7, "{c}");
        let r = solve_two_point(&m).unwrap();
        assert_eq!(r.feasibility, Feasibility::PositiveDefinite);
        assert!((r.nodes[0] - 0.1938884).abs() < 1e-7);
        assert!((r.nodes[1] + 0.4095747).abs() < 1e-7);
        assert!((r.weights[0] - 0.01469064053612).abs() < 1e-13);
        assert!((r.weights[1] - 0.04086491501944).abs() < 1e-13);
    }

    #[test]
    fn close_nodes_keep_the_determinant_identity() {
        let m = mom(
            3.205805325524693,
            -6.228256808485134,
            12.100292736135652,
            -23.508517532825984,
        );
        let r = solve_two_point(&m).unwrap();
        let gap = r.nodes[0] - r.nodes[1];
        assert!(gap > 0.0 && gap < 1e-4);
        let lhs = r.weights[0] * r.weights[1] * gap * gap;
        let h = hankel_determinant(&m);
        assert!((lhs - h).abs() <= 1e-12 * h, "{lhs} vs {h}");
    }

    #[test]
    fn point_mass_input() {
        let r = solve_two_point(&mom(2.0, 2.0, 2.0, 2.0)).unwrap();
        assert_eq!(r.feasibility, Feasibility::Atomic);
        assert_eq!(r.nodes, vec![1.0]);
        assert_eq!(r.weights, vec![2.0]);
        assert!(matches!(
            solve_two_point(&mom(2.0, 2.0, 2.0, 5.0)),
            Err(CubatureError::InconsistentAtom { .. })
        ));
    }

    #[test]
    fn indefinite_rejected_unless_allowed() {
        // measure 2 delta(1) - delta(-1): m = (1, 3, 1, 3)
        let m = mom(1.0, 3.0, 1.0, 3.0);
        let err = solve_two_point(&m).unwrap_err();
        assert!(matches!(err, CubatureError::InfeasibleMoments { hankel } if hankel == -8.0));
        let r = solve_two_point_with(
            &m,
            SolveOptions {
                allow_indefinite: true,
            },
        )
        .unwrap();
        assert_eq!(r.feasibility, Feasibility::Indefinite);
        assert!((r.nodes[0] - 1.0).abs() < 1e-14 && (r.nodes[1] + 1.0).abs() < 1e-14);
        assert!((r.weights[0] - 2.0).abs() < 1e-14 && (r.weights[1] + 1.0).abs() < 1e-14);
    }

    fn well_separated() -> impl Strategy<Value = (f64, f64, f64, f64)> {
        (-2.0f64..2.0, 0.1f64..2.0, 0.05f64..10.0, 0.05f64..1.0)
            .prop_map(|(t2, gap, m0, frac)| (t2 + gap, t2, m0 * frac, m0 * (1.0 - frac)))
            .prop_filter("positive weights", |(_, _, w1, w2)| {
                *w1 > 1e-3 && *w2 > 1e-3
            })
    }

    proptest! {
        #[test]
        fn recovers_forward_moments((t1, t2, w1, w2) in well_separated()) {
            let m = mom(
                w1 + w2,
                w1 * t1 + w2 * t2,
                w1 * t1 * t1 + w2 * t2 * t2,
                w1 * t1.powi(3) + w2 * t2.powi(3),
            );
            let r = solve_two_point(&m).unwrap();
            prop_assert_eq!(r.feasibility, Feasibility::PositiveDefinite);
            for (got, want) in r.nodes.iter().zip([t1, t2]) {
                prop_assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0));
            }
            for (got, want) in r.weights.iter().zip([w1, w2]) {
                prop_assert!((got - want).abs() <= 1e-9 * want);
            }
            // reality: b^2 - 4c = (m0 b^2 + 4 m1 b + 4 m2) / m0 > 0
            let (b, c) = orthogonal_quadratic(&m);
            let alt = (m.m0 * b * b + 4.0 * m.m1 * b + 4.0 * m.m2) / m.m0;
            prop_assert!(b * b - 4.0 * c > 0.0 && alt > 0.0);
            // w1 w2 (t1 - t2)^2 = m0 m2 - m1^2
            let lhs = r.weights[0] * r.weights[1] * (r.nodes[0] - r.nodes[1]).powi(2);
            let h = hankel_determinant(&m);
            prop_assert!((lhs - h).abs() <= 1e-12 * h, "{} vs {}", lhs, h);
        }

        #[test]
        fn reproduces_moments(m0 in 0.01f64..10.0, mean in -2.0f64..2.0, var in 0.01f64..4.0, skew in -3.0f64..3.0) {
            // build a positive-definite quadruple from central moments
            let m1 = m0 * mean;
            let m2 = m0 * (var + mean * mean);
            let m3 = m0 * (skew * var.powf(1.5) + 3.0 * mean * var + mean.powi(3));
            let m = mom(m0, m1, m2, m3);
            let r = solve_two_point(&m).unwrap();
            prop_assert!(r.weights.iter().all(|w| *w > 0.0));
            prop_assert!(r.nodes[0] > r.nodes[1]);
            for (j, want) in m.as_array().iter().enumerate() {
                let scale = m0 * (mean.abs() + var.sqrt() * (1.0 + skew.abs())).max(1.0).powi(j as i32);
                prop_assert!((r.moment(j as i32) - want).abs() <= 1e-12 * scale);
            }
        }
    }
}
