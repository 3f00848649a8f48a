//! Valuations and lower convex hulls.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_rational::Rational64;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rational = Rational64;

/// A rational valuation or `+inf`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Valuation {
    Finite(Rational),
    Infinite,
}

impl Valuation {
    pub fn int(n: i64) -> Self {
        Valuation::Finite(Rational::from_integer(n))
    }
    pub fn frac(n: i64, d: i64) -> Self {
        Valuation::Finite(Rational::new(n, d))
    }
    pub fn finite(self) -> Option<Rational> {
        match self {
            Valuation::Finite(r) => Some(r),
            Valuation::Infinite => None,
        }
    }
    pub fn is_infinite(self) -> bool {
        matches!(self, Valuation::Infinite)
    }
    pub fn plus(self, other: Valuation) -> Valuation {
        match (self, other) {
            (Valuation::Finite(a), Valuation::Finite(b)) => Valuation::Finite(a + b),
            _ => Valuation::Infinite,
        }
    }
}

impl PartialOrd for Valuation {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Valuation {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Valuation::Infinite, Valuation::Infinite) => Ordering::Equal,
            (Valuation::Infinite, _) => Ordering::Greater,
            (_, Valuation::Infinite) => Ordering::Less,
            (Valuation::Finite(a), Valuation::Finite(b)) => a.cmp(b),
        }
    }
}

impl From<Rational> for Valuation {
    fn from(r: Rational) -> Self {
        Valuation::Finite(r)
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(r) => write!(f, "{}", fmt_rational(*r)),
            Valuation::Infinite => write!(f, "inf"),
        }
    }
}

impl FromStr for Valuation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "inf" || s == "+inf" {
            return Ok(Valuation::Infinite);
        }
        parse_rational(s).map(Valuation::Finite)
    }
}

impl Serialize for Valuation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Valuation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `a/b`, or `a` for integers.
pub fn fmt_rational(r: Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn ser_rational<S: serde::Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&fmt_rational(*r))
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    let bad = || Error::parse(1, 1, format!("not a rational: {s:?}"));
    let s = s.trim();
    match s.split_once('/') {
        Some((a, b)) => {
            let a: i64 = a.trim().parse().map_err(|_| bad())?;
            let b: i64 = b.trim().parse().map_err(|_| bad())?;
            if b == 0 {
                return Err(bad());
            }
            Ok(Rational::new(a, b))
        }
        None => Ok(Rational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

/// A slope with its horizontal length.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Segment {
    #[serde(serialize_with = "ser_rational")]
    pub slope: Rational,
    pub length: i64,
}

/// Lower convex hull of a finite point set with `+inf` points ignored.
#[derive(Clone, Debug, PartialEq)]
pub struct NewtonPolygon {
    points: Vec<(i64, Valuation)>,
    hull: Vec<(i64, Rational)>,
}

impl NewtonPolygon {
    pub fn new(points: &[(i64, Valuation)]) -> Result<Self> {
        let mut pts: Vec<(i64, Valuation)> = points.to_vec();
        pts.sort_by_key(|p| p.0);
        for w in pts.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::RepeatedAbscissa(w[0].0));
            }
        }
        let finite: Vec<(i64, Rational)> = pts
            .iter()
            .filter_map(|&(x, y)| y.finite().map(|y| (x, y)))
            .collect();
        if finite.len() < 2 {
            return Err(Error::TooFewPoints(finite.len()));
        }
        // monotone chain, lower part
        let mut hull: Vec<(i64, Rational)> = Vec::new();
        for &p in &finite {
            while hull.len() >= 2 {
                let a = hull[hull.len() - 2];
                let b = hull[hull.len() - 1];
                // remove b if it is on or above segment a-p
                let cross = (Rational::from_integer(b.0 - a.0)) * (p.1 - a.1)
                    - (b.1 - a.1) * Rational::from_integer(p.0 - a.0);
                if !cross.is_positive() {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        Ok(NewtonPolygon { points: pts, hull })
    }

    pub fn points(&self) -> &[(i64, Valuation)] {
        &self.points
    }

    pub fn vertices(&self) -> &[(i64, Rational)] {
        &self.hull
    }

    /// Slopes left to right, consecutive equal slopes merged.
    pub fn segments(&self) -> Vec<Segment> {
        let mut out: Vec<Segment> = Vec::new();
        for w in self.hull.windows(2) {
            let len = w[1].0 - w[0].0;
            let slope = (w[1].1 - w[0].1) / Rational::from_integer(len);
            match out.last_mut() {
                Some(s) if s.slope == slope => s.length += len,
                _ => out.push(Segment { slope, length: len }),
            }
        }
        out
    }

    /// Slope multiset as `(slope, multiplicity)`.
    pub fn slopes(&self) -> Vec<(Rational, i64)> {
        self.segments().into_iter().map(|s| (s.slope, s.length)).collect()
    }

    pub fn is_vertex(&self, x: i64) -> bool {
        self.hull.iter().any(|v| v.0 == x)
    }

    /// Interior break point: a vertex other than the two ends.
    pub fn is_break(&self, x: i64) -> bool {
        let n = self.hull.len();
        n >= 3 && self.hull[1..n - 1].iter().any(|v| v.0 == x)
    }

    /// Value of the hull at `x`, if `x` lies within the x-span.
    pub fn value_at(&self, x: i64) -> Option<Rational> {
        let first = self.hull.first()?;
        let last = self.hull.last()?;
        if x < first.0 || x > last.0 {
            return None;
        }
        for w in self.hull.windows(2) {
            if x >= w[0].0 && x <= w[1].0 {
                let t = Rational::from_integer(x - w[0].0);
                let len = Rational::from_integer(w[1].0 - w[0].0);
                return Some(w[0].1 + (w[1].1 - w[0].1) * t / len);
            }
        }
        Some(first.1)
    }

    pub fn x_span(&self) -> i64 {
        self.hull.last().unwrap().0 - self.hull[0].0
    }

    /// Number of slopes (with multiplicity) strictly below `cut`, and whether
    /// `cut` itself is a slope.
    pub fn count_below(&self, cut: Rational) -> (i64, bool) {
        let mut n = 0;
        let mut tie = false;
        for s in self.segments() {
            match s.slope.cmp(&cut) {
                Ordering::Less => n += s.length,
                Ordering::Equal => tie = true,
                Ordering::Greater => {}
            }
        }
        (n, tie)
    }
}

/// `|x|` for rationals, handy in tests and reports.
pub fn rabs(r: Rational) -> Rational {
    if r < Rational::zero() {
        -r
    } else {
        r
    }
}
