//! Permutation-symmetric moment functionals up to degree three.
//!
//! A functional that is invariant under permutations of the coordinates is
//! determined on cubic polynomials by seven numbers, one per exponent
//! pattern: `1, x1, x1^2, x1 x2, x1^3, x1^2 x2, x1 x2 x3`. The built-in
//! regions (unit simplex, positive sector of the unit ball, unit cube) also
//! expose exact moments of any degree for the non-exactness probes.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{CubatureError, Result};

/// The seven symmetry classes of monomials of degree at most three.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MomentClass {
    One,
    X,
    XX,
    XY,
    XXX,
    XXY,
    XYZ,
}

impl MomentClass {
    pub const ALL: [MomentClass; 7] = [
        MomentClass::One,
        MomentClass::X,
        MomentClass::XX,
        MomentClass::XY,
        MomentClass::XXX,
        MomentClass::XXY,
        MomentClass::XYZ,
    ];

    /// Classes that exist in dimension `n` (`x1 x2 x3` needs three variables).
    pub fn available(n: usize) -> &'static [MomentClass] {
        if n >= 3 {
            &Self::ALL
        } else {
            &Self::ALL[..6]
        }
    }

    /// Classify an exponent vector by its sorted nonzero pattern.
    pub fn of_exponents(exponents: &[u32]) -> Result<MomentClass> {
        let degree: u32 = exponents.iter().sum();
        if degree > 3 {
            return Err(CubatureError::DegreeOutOfRange(degree));
        }
        let mut pattern: Vec<u32> = exponents.iter().copied().filter(|&e| e > 0).collect();
        pattern.sort_unstable_by(|a, b| b.cmp(a));
        Ok(match pattern.as_slice() {
            [] => MomentClass::One,
            [1] => MomentClass::X,
            [2] => MomentClass::XX,
            [1, 1] => MomentClass::XY,
            [3] => MomentClass::XXX,
            [2, 1] => MomentClass::XXY,
            [1, 1, 1] => MomentClass::XYZ,
            _ => unreachable!("degree <= 3 leaves only seven patterns"),
        })
    }

    /// Leading-coordinate representative, e.g. `XXY -> (2, 1, 0, ...)`.
    pub fn representative(self, n: usize) -> Vec<u32> {
        let head: &[u32] = match self {
            MomentClass::One => &[],
            MomentClass::X => &[1],
            MomentClass::XX => &[2],
            MomentClass::XY => &[1, 1],
            MomentClass::XXX => &[3],
            MomentClass::XXY => &[2, 1],
            MomentClass::XYZ => &[1, 1, 1],
        };
        let mut v = vec![0; n];
        v[..head.len()].copy_from_slice(head);
        v
    }

    pub fn degree(self) -> u32 {
        match self {
            MomentClass::One => 0,
            MomentClass::X => 1,
            MomentClass::XX | MomentClass::XY => 2,
            _ => 3,
        }
    }
}

/// Values of the functional on the seven class representatives.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentClasses {
    pub m_1: f64,
    pub m_x: f64,
    pub m_xx: f64,
    pub m_xy: f64,
    pub m_xxx: f64,
    pub m_xxy: f64,
    /// Unused (stored as 0) when `n = 2`.
    pub m_xyz: f64,
}

impl MomentClasses {
    pub fn get(&self, class: MomentClass) -> f64 {
        match class {
            MomentClass::One => self.m_1,
            MomentClass::X => self.m_x,
            MomentClass::XX => self.m_xx,
            MomentClass::XY => self.m_xy,
            MomentClass::XXX => self.m_xxx,
            MomentClass::XXY => self.m_xxy,
            MomentClass::XYZ => self.m_xyz,
        }
    }
}

/// A validated permutation-symmetric functional restricted to cubics.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricMomentSpec {
    n: usize,
    moments: MomentClasses,
}

impl SymmetricMomentSpec {
    /// Validate and wrap the seven moments.
    ///
    /// Rejects `n < 2`, `m_1 <= 0`, `m_xx - m_xy <= 0`, `m_xx <= 0` and
    /// `m_1 m_xx - m_x^2 < 0`, naming the violated inequality.
    pub fn new(n: usize, mut moments: MomentClasses) -> Result<Self> {
        if n < 2 {
            return Err(CubatureError::InvalidDimension(n));
        }
        if n == 2 {
            moments.m_xyz = 0.0;
        }
        let all = [
            moments.m_1,
            moments.m_x,
            moments.m_xx,
            moments.m_xy,
            moments.m_xxx,
            moments.m_xxy,
            moments.m_xyz,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(CubatureError::InvalidSpec("moments must be finite".into()));
        }
        if moments.m_1 <= 0.0 {
            return Err(CubatureError::InvalidSpec(format!(
                "L(1) > 0 violated: m1 = {}",
                moments.m_1
            )));
        }
        if moments.m_xx - moments.m_xy <= 0.0 {
            return Err(CubatureError::InvalidSpec(format!(
                "L(x1^2) - L(x1 x2) > 0 violated: mxx - mxy = {:e}",
                moments.m_xx - moments.m_xy
            )));
        }
        if moments.m_xx <= 0.0 {
            return Err(CubatureError::InvalidSpec(format!(
                "L(x1^2) > 0 violated: mxx = {}",
                moments.m_xx
            )));
        }
        let gram = moments.m_1 * moments.m_xx - moments.m_x * moments.m_x;
        if gram < 0.0 {
            return Err(CubatureError::InvalidSpec(format!(
                "L(1) L(x1^2) - L(x1)^2 >= 0 violated: {gram:e}"
            )));
        }
        Ok(Self { n, moments })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn moments(&self) -> &MomentClasses {
        &self.moments
    }

    pub fn m_1(&self) -> f64 {
        self.moments.m_1
    }

    /// `L(x1^2 - x1 x2)`, half of `L((x1 - x2)^2)`; positive by validation.
    pub fn half_difference_square(&self) -> f64 {
        self.moments.m_xx - self.moments.m_xy
    }

    /// `L(x^alpha)` for `|alpha| <= 3` by symmetry-class lookup.
    pub fn moment_of_monomial(&self, exponents: &[u32]) -> Result<f64> {
        if exponents.len() != self.n {
            return Err(CubatureError::DimensionMismatch {
                expected: self.n,
                got: exponents.len(),
            });
        }
        Ok(self.moments.get(MomentClass::of_exponents(exponents)?))
    }

    /// Parse the flat JSON key/value custom-spec document.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: SpecFile = serde_json::from_str(text)?;
        file.into_spec()
    }

    pub fn to_json_string(&self) -> String {
        let file = SpecFile {
            n: self.n,
            m1: self.moments.m_1,
            mx: self.moments.m_x,
            mxx: self.moments.m_xx,
            mxy: self.moments.m_xy,
            mxxx: self.moments.m_xxx,
            mxxy: self.moments.m_xxy,
            mxyz: (self.n >= 3).then_some(self.moments.m_xyz),
        };
        serde_json::to_string_pretty(&file).expect("plain struct serializes")
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    n: usize,
    m1: f64,
    mx: f64,
    mxx: f64,
    mxy: f64,
    mxxx: f64,
    mxxy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mxyz: Option<f64>,
}

impl SpecFile {
    fn into_spec(self) -> Result<SymmetricMomentSpec> {
        let m_xyz = match (self.n, self.mxyz) {
            (n, _) if n < 3 => 0.0,
            (_, Some(v)) => v,
            (_, None) => {
                return Err(CubatureError::InvalidSpec(
                    "key \"mxyz\" is required when n >= 3".into(),
                ))
            }
        };
        SymmetricMomentSpec::new(
            self.n,
            MomentClasses {
                m_1: self.m1,
                m_x: self.mx,
                m_xx: self.mxx,
                m_xy: self.mxy,
                m_xxx: self.mxxx,
                m_xxy: self.mxxy,
                m_xyz,
            },
        )
    }
}

/// Built-in integration regions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    /// `{x >= 0, x1 + ... + xn <= 1}`
    Simplex,
    /// `{x >= 0, |x| <= 1}`
    BallSector,
    /// `[0, 1]^n`
    Cube,
}

impl RegionKind {
    pub fn name(self) -> &'static str {
        match self {
            RegionKind::Simplex => "simplex",
            RegionKind::BallSector => "ball_sector",
            RegionKind::Cube => "cube",
        }
    }
}

impl fmt::Display for RegionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RegionKind {
    type Err = CubatureError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "simplex" => Ok(RegionKind::Simplex),
            "sector" | "ball_sector" | "ballsector" => Ok(RegionKind::BallSector),
            "cube" => Ok(RegionKind::Cube),
            other => Err(CubatureError::Parse(format!(
                "unknown region {other:?} (expected simplex, sector or cube)"
            ))),
        }
    }
}

/// A built-in region in a fixed dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Region {
    kind: RegionKind,
    n: usize,
}

impl Region {
    pub fn new(kind: RegionKind, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(CubatureError::InvalidDimension(n));
        }
        Ok(Self { kind, n })
    }

    pub fn kind(&self) -> RegionKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Exact moment of `x^alpha` of any total degree.
    pub fn monomial_moment(&self, exponents: &[u32]) -> Result<f64> {
        if exponents.len() != self.n {
            return Err(CubatureError::DimensionMismatch {
                expected: self.n,
                got: exponents.len(),
            });
        }
        Ok(match self.kind {
            RegionKind::Simplex => simplex_moment(exponents),
            RegionKind::BallSector => sector_moment(exponents),
            RegionKind::Cube => cube_moment(exponents),
        })
    }

    /// The seven degree-<=3 moments of the region.
    pub fn spec(&self) -> SymmetricMomentSpec {
        let at = |class: MomentClass| {
            if class == MomentClass::XYZ && self.n < 3 {
                0.0
            } else {
                self.monomial_moment(&class.representative(self.n))
                    .expect("representative has length n")
            }
        };
        let moments = MomentClasses {
            m_1: at(MomentClass::One),
            m_x: at(MomentClass::X),
            m_xx: at(MomentClass::XX),
            m_xy: at(MomentClass::XY),
            m_xxx: at(MomentClass::XXX),
            m_xxy: at(MomentClass::XXY),
            m_xyz: at(MomentClass::XYZ),
        };
        SymmetricMomentSpec::new(self.n, moments).expect("built-in regions are positive")
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} n={}", self.kind, self.n)
    }
}

pub fn simplex_spec(n: usize) -> Result<SymmetricMomentSpec> {
    Ok(Region::new(RegionKind::Simplex, n)?.spec())
}

pub fn sector_spec(n: usize) -> Result<SymmetricMomentSpec> {
    Ok(Region::new(RegionKind::BallSector, n)?.spec())
}

pub fn cube_spec(n: usize) -> Result<SymmetricMomentSpec> {
    Ok(Region::new(RegionKind::Cube, n)?.spec())
}

pub fn region_monomial_moment(region: &Region, exponents: &[u32]) -> Result<f64> {
    region.monomial_moment(exponents)
}

fn factorial(k: u32) -> Option<u128> {
    (1..=k as u128).try_fold(1u128, |acc, i| acc.checked_mul(i))
}

/// `k!!`, with `k!! = 1` for `k <= 0`.
fn double_factorial(k: i64) -> Option<u128> {
    let mut acc = 1u128;
    let mut i = k;
    while i > 1 {
        acc = acc.checked_mul(i as u128)?;
        i -= 2;
    }
    Some(acc)
}

fn ratio(num: Option<u128>, den: Option<u128>) -> Option<f64> {
    Some(num? as f64 / den? as f64)
}

// alpha_1! ... alpha_n! / (n + |alpha|)!
fn simplex_moment(exponents: &[u32]) -> f64 {
    let n = exponents.len() as u32;
    let total: u32 = exponents.iter().sum();
    let num = exponents
        .iter()
        .try_fold(1u128, |acc, &a| acc.checked_mul(factorial(a)?));
    if let Some(v) = ratio(num, factorial(n + total)) {
        return v;
    }
    let mut v = 1.0;
    for &a in exponents {
        for i in 1..=a {
            v *= i as f64;
        }
    }
    for i in 1..=(n + total) {
        v /= i as f64;
    }
    v
}

// prod (alpha_i - 1)!! / (n + |alpha|)!! * (pi/2)^floor((n - n_odd) / 2)
fn sector_moment(exponents: &[u32]) -> f64 {
    let n = exponents.len() as i64;
    let total: i64 = exponents.iter().map(|&a| a as i64).sum();
    let odd = exponents.iter().filter(|&&a| a % 2 == 1).count() as i64;
    let power = (n - odd) / 2;
    let num = exponents.iter().try_fold(1u128, |acc, &a| {
        acc.checked_mul(double_factorial(a as i64 - 1)?)
    });
    let base = ratio(num, double_factorial(n + total)).unwrap_or_else(|| {
        let mut v = 1.0;
        for &a in exponents {
            let mut i = a as i64 - 1;
            while i > 1 {
                v *= i as f64;
                i -= 2;
            }
        }
        let mut i = n + total;
        while i > 1 {
            v /= i as f64;
            i -= 2;
        }
        v
    });
    base * FRAC_PI_2.powi(power as i32)
}

fn cube_moment(exponents: &[u32]) -> f64 {
    match exponents
        .iter()
        .try_fold(1u128, |acc, &a| acc.checked_mul(a as u128 + 1))
    {
        Some(den) => 1.0 / den as f64,
        None => exponents.iter().map(|&a| 1.0 / (a as f64 + 1.0)).product(),
    }
}
