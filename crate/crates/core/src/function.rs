//! Classical variables on phase space.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::borel::BorelSet1D;
use crate::error::{Error, Result};
use crate::grid::{PhaseGrid, PhasePoint};

/// Regions whose indicator functions are the question variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Region {
    /// `B_q × B_p`.
    Rectangle {
        q: BorelSet1D,
        p: BorelSet1D,
    },
    /// `{(q, p) : q cos(angle) + p sin(angle) ≥ offset}`.
    HalfPlane {
        angle: f64,
        offset: f64,
    },
    /// Points whose polar angle `atan2(p, q)` lies in `[theta_min, theta_max)` (mod 2π).
    Sector {
        theta_min: f64,
        theta_max: f64,
    },
    /// Closed disc.
    Disc {
        center: PhasePoint,
        radius: f64,
    },
    Complement {
        inner: Box<Region>,
    },
}

fn quarter_turns(angle: f64) -> Option<i64> {
    let k = (angle / FRAC_PI_2).round();
    ((angle - k * FRAC_PI_2).abs() < 1e-12).then_some(k as i64)
}

impl Region {
    pub fn position_cylinder(b: BorelSet1D) -> Self {
        Region::Rectangle { q: b, p: BorelSet1D::real_line() }
    }

    pub fn momentum_cylinder(b: BorelSet1D) -> Self {
        Region::Rectangle { q: BorelSet1D::real_line(), p: b }
    }

    pub fn complement(self) -> Self {
        match self {
            Region::Complement { inner } => *inner,
            r => Region::Complement { inner: Box::new(r) },
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Region::Sector { theta_min, theta_max } => {
                let span = theta_max - theta_min;
                if !(span > 0.0 && span <= TAU) {
                    return Err(Error::InvalidConfig(format!("sector span {span} must lie in (0, 2π]")));
                }
            }
            Region::Disc { radius, .. } if radius.is_nan() || *radius <= 0.0 => {
                return Err(Error::InvalidConfig(format!("disc radius {radius} must be positive")));
            }
            Region::HalfPlane { angle, offset } if !(angle.is_finite() && offset.is_finite()) => {
                return Err(Error::InvalidConfig("half-plane parameters must be finite".into()));
            }
            Region::Complement { inner } => inner.validate()?,
            _ => {}
        }
        Ok(())
    }

    pub fn contains(&self, q: f64, p: f64) -> bool {
        match self {
            Region::Rectangle { q: bq, p: bp } => bq.contains(q) && bp.contains(p),
            Region::HalfPlane { angle, offset } => q * angle.cos() + p * angle.sin() >= *offset,
            Region::Sector { theta_min, theta_max } => {
                let theta = p.atan2(q);
                let rel = (theta - theta_min).rem_euclid(TAU);
                rel < theta_max - theta_min
            }
            Region::Disc { center, radius } => (q - center.q).hypot(p - center.p) <= *radius,
            Region::Complement { inner } => !inner.contains(q, p),
        }
    }

    /// Disjoint decomposition into `B_q × B_p` products, when one exists without
    /// approximation (axis-aligned half-planes, quadrant-aligned sectors, rectangles
    /// and the complement of a single rectangle).
    pub fn rectangles(&self) -> Option<Vec<(BorelSet1D, BorelSet1D)>> {
        let r = BorelSet1D::real_line;
        match self {
            Region::Rectangle { q, p } => Some(vec![(q.clone(), p.clone())]),
            Region::HalfPlane { angle, offset } => {
                let o = *offset;
                match quarter_turns(*angle)?.rem_euclid(4) {
                    0 => Some(vec![(BorelSet1D::at_least(o), r())]),
                    1 => Some(vec![(r(), BorelSet1D::at_least(o))]),
                    2 => Some(vec![(BorelSet1D::at_most(-o), r())]),
                    _ => Some(vec![(r(), BorelSet1D::at_most(-o))]),
                }
            }
            Region::Sector { theta_min, theta_max } => {
                let start = quarter_turns(*theta_min)?;
                let end = quarter_turns(*theta_max)?;
                let quadrant = |j: i64| match j.rem_euclid(4) {
                    0 => (BorelSet1D::greater_than(0.0), BorelSet1D::at_least(0.0)),
                    1 => (BorelSet1D::at_most(0.0), BorelSet1D::greater_than(0.0)),
                    2 => (BorelSet1D::less_than(0.0), BorelSet1D::at_most(0.0)),
                    _ => (BorelSet1D::at_least(0.0), BorelSet1D::less_than(0.0)),
                };
                Some((start..end).map(quadrant).collect())
            }
            Region::Disc { .. } => None,
            Region::Complement { inner } => {
                let rects = inner.rectangles()?;
                match rects.as_slice() {
                    [(bq, bp)] => Some(vec![(bq.complement(), r()), (bq.clone(), bp.complement())]),
                    _ => None,
                }
            }
        }
    }

    /// The region shifted by `(dq, dp)`.
    pub fn translated(&self, dq: f64, dp: f64) -> Result<Region> {
        Ok(match self {
            Region::Rectangle { q, p } => Region::Rectangle { q: q.shifted(dq), p: p.shifted(dp) },
            Region::HalfPlane { angle, offset } => {
                Region::HalfPlane { angle: *angle, offset: offset + dq * angle.cos() + dp * angle.sin() }
            }
            Region::Disc { center, radius } => {
                Region::Disc { center: PhasePoint { q: center.q + dq, p: center.p + dp }, radius: *radius }
            }
            Region::Sector { .. } => {
                return Err(Error::Unsupported("sectors are anchored at the origin and cannot be translated".into()))
            }
            Region::Complement { inner } => Region::Complement { inner: Box::new(inner.translated(dq, dp)?) },
        })
    }
}

/// A classical dynamical variable `f: ℝ² → ℝ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PhaseSpaceFunction {
    /// `q^a p^b`; `Monomial { a: 0, b: 0 }` is the constant 1.
    Monomial { a: u32, b: u32 },
    /// Question variable `χ_X`.
    Indicator(Region),
    /// `f(q, p) = −q/p`, defined for `p ≠ 0`.
    ArrivalTime,
    /// Values on the nodes of `grid` (row-major in `q`), read by nearest-node lookup.
    GridSampled { grid: PhaseGrid, values: Vec<f64> },
}

impl PhaseSpaceFunction {
    pub const ONE: PhaseSpaceFunction = PhaseSpaceFunction::Monomial { a: 0, b: 0 };
    pub const POSITION: PhaseSpaceFunction = PhaseSpaceFunction::Monomial { a: 1, b: 0 };
    pub const MOMENTUM: PhaseSpaceFunction = PhaseSpaceFunction::Monomial { a: 0, b: 1 };

    pub fn indicator(region: Region) -> Self {
        PhaseSpaceFunction::Indicator(region)
    }

    pub fn grid_sampled(grid: PhaseGrid, values: Vec<f64>) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.n_q * grid.n_p {
            return Err(Error::InvalidConfig(format!("{} samples for a {}x{} grid", values.len(), grid.n_q, grid.n_p)));
        }
        Ok(PhaseSpaceFunction::GridSampled { grid, values })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PhaseSpaceFunction::Indicator(r) => r.validate(),
            PhaseSpaceFunction::GridSampled { grid, values } => {
                grid.validate()?;
                if values.len() != grid.n_q * grid.n_p {
                    return Err(Error::InvalidConfig("grid sample count mismatch".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn is_indicator(&self) -> bool {
        matches!(self, PhaseSpaceFunction::Indicator(_))
    }

    pub fn eval(&self, q: f64, p: f64) -> f64 {
        match self {
            PhaseSpaceFunction::Monomial { a, b } => q.powi(*a as i32) * p.powi(*b as i32),
            PhaseSpaceFunction::Indicator(r) => {
                if r.contains(q, p) {
                    1.0
                } else {
                    0.0
                }
            }
            PhaseSpaceFunction::ArrivalTime => {
                if p == 0.0 {
                    f64::NAN
                } else {
                    -q / p
                }
            }
            PhaseSpaceFunction::GridSampled { grid, values } => match grid.nearest_node(q, p) {
                Some((i, j)) => values[i * grid.n_p + j],
                None => 0.0,
            },
        }
    }

    pub fn eval_at(&self, pt: PhasePoint) -> f64 {
        self.eval(pt.q, pt.p)
    }

    /// The pointwise power `f^k`, expressed again as a phase-space function.
    pub fn pow(&self, k: u32) -> Result<Self> {
        Ok(match self {
            PhaseSpaceFunction::Monomial { a, b } => PhaseSpaceFunction::Monomial { a: a * k, b: b * k },
            PhaseSpaceFunction::Indicator(r) if k >= 1 => PhaseSpaceFunction::Indicator(r.clone()),
            PhaseSpaceFunction::Indicator(_) => PhaseSpaceFunction::ONE,
            PhaseSpaceFunction::GridSampled { grid, values } => PhaseSpaceFunction::GridSampled {
                grid: grid.clone(),
                values: values.iter().map(|v| v.powi(k as i32)).collect(),
            },
            PhaseSpaceFunction::ArrivalTime => {
                return Err(Error::Unsupported("powers of the arrival-time variable are not representable".into()))
            }
        })
    }

    pub fn translated(&self, dq: f64, dp: f64) -> Result<Self> {
        match self {
            PhaseSpaceFunction::Indicator(r) => Ok(PhaseSpaceFunction::Indicator(r.translated(dq, dp)?)),
            PhaseSpaceFunction::Monomial { a: 0, b: 0 } => Ok(self.clone()),
            _ => Err(Error::Unsupported("translation is implemented for indicators only".into())),
        }
    }
}

impl fmt::Display for PhaseSpaceFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhaseSpaceFunction::Monomial { a, b } => write!(f, "monomial:{a}:{b}"),
            PhaseSpaceFunction::ArrivalTime => write!(f, "arrival-time"),
            PhaseSpaceFunction::GridSampled { grid, .. } => write!(f, "grid-sampled:{}x{}", grid.n_q, grid.n_p),
            PhaseSpaceFunction::Indicator(r) => write!(f, "indicator:{}", RegionSpec(r)),
        }
    }
}

struct RegionSpec<'a>(&'a Region);

impl fmt::Display for RegionSpec<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Region::Rectangle { q, p } => write!(f, "rect:{q}x{p}"),
            Region::HalfPlane { angle, offset } => write!(f, "halfplane:{}:{}", angle.to_degrees(), offset),
            Region::Sector { theta_min, theta_max } => {
                write!(f, "sector:{}:{}", theta_min.to_degrees(), theta_max.to_degrees())
            }
            Region::Disc { center, radius } => write!(f, "disc:{}:{}:{}", center.q, center.p, radius),
            Region::Complement { inner } => write!(f, "not:{}", RegionSpec(inner)),
        }
    }
}

fn num(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("expected a number, got '{s}'")))
}

fn parse_region(spec: &str) -> Result<Region> {
    let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let args: Vec<&str> = if rest.is_empty() { Vec::new() } else { rest.split(':').collect() };
    let region = match (kind, args.as_slice()) {
        ("rect", _) => {
            let (q, p) = rest
                .split_once('x')
                .ok_or_else(|| Error::Parse(format!("rectangle '{rest}' must look like <Bq>x<Bp>")))?;
            Region::Rectangle { q: q.parse()?, p: p.parse()? }
        }
        ("halfplane", [angle, offset]) => Region::HalfPlane { angle: num(angle)?.to_radians(), offset: num(offset)? },
        ("sector", [lo, hi]) => Region::Sector { theta_min: num(lo)?.to_radians(), theta_max: num(hi)?.to_radians() },
        ("disc", [q, p, r]) => Region::Disc { center: PhasePoint::new(num(q)?, num(p)?)?, radius: num(r)? },
        ("not", _) => parse_region(rest)?.complement(),
        _ => return Err(Error::Parse(format!("unknown region '{spec}'"))),
    };
    region.validate()?;
    Ok(region)
}

impl FromStr for PhaseSpaceFunction {
    type Err = Error;

    /// Parses `monomial:a:b`, `constant`, `arrival-time` and `indicator:<region>` with
    /// regions `rect:<Bq>x<Bp>`, `halfplane:<deg>:<offset>`, `sector:<deg>:<deg>`,
    /// `disc:<q>:<p>:<r>` and `not:<region>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "constant" || s == "one" {
            return Ok(PhaseSpaceFunction::ONE);
        }
        if s == "arrival-time" {
            return Ok(PhaseSpaceFunction::ArrivalTime);
        }
        if let Some(rest) = s.strip_prefix("monomial:") {
            let (a, b) =
                rest.split_once(':').ok_or_else(|| Error::Parse(format!("monomial '{s}' needs two exponents")))?;
            let parse = |t: &str| t.trim().parse::<u32>().map_err(|_| Error::Parse(format!("bad exponent '{t}'")));
            return Ok(PhaseSpaceFunction::Monomial { a: parse(a)?, b: parse(b)? });
        }
        if let Some(rest) = s.strip_prefix("indicator:") {
            return Ok(PhaseSpaceFunction::Indicator(parse_region(rest)?));
        }
        Err(Error::Parse(format!("unknown function spec '{s}'")))
    }
}

/// Quadrant-aligned sector between two angles given in units of π.
pub fn sector(theta_min_over_pi: f64, theta_max_over_pi: f64) -> Region {
    Region::Sector { theta_min: theta_min_over_pi * PI, theta_max: theta_max_over_pi * PI }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_specs() {
        let f: PhaseSpaceFunction = "indicator:rect:[-1,2]xR".parse().unwrap();
        assert_eq!(f, PhaseSpaceFunction::Indicator(Region::position_cylinder(BorelSet1D::closed(-1.0, 2.0))));
        let f: PhaseSpaceFunction = "indicator:sector:90:180".parse().unwrap();
        assert!(f.eval(-1.0, 1.0) == 1.0 && f.eval(1.0, 1.0) == 0.0);
        assert_eq!("monomial:1:0".parse::<PhaseSpaceFunction>().unwrap(), PhaseSpaceFunction::POSITION);
        assert!("indicator:disc:0:0:-1".parse::<PhaseSpaceFunction>().is_err());
        assert!("indicator:sector:90:90".parse::<PhaseSpaceFunction>().is_err());
        assert!("cubic".parse::<PhaseSpaceFunction>().is_err());
    }

    #[test]
    fn display_round_trips() {
        for s in [
            "monomial:2:1",
            "indicator:rect:[0,inf)xR",
            "indicator:disc:1:-1:2",
            "arrival-time",
            "indicator:not:rect:[-1,1]x[0,2]",
            "indicator:halfplane:0:0.5",
        ] {
            let f: PhaseSpaceFunction = s.parse().unwrap();
            assert_eq!(f.to_string().parse::<PhaseSpaceFunction>().unwrap(), f, "{s}");
        }
    }

    #[test]
    fn arrival_time_values() {
        let t = PhaseSpaceFunction::ArrivalTime;
        assert_eq!(t.eval(-4.0, 2.0), 2.0);
        assert!(t.eval(1.0, 0.0).is_nan());
        assert!(t.pow(2).is_err());
    }

    #[test]
    fn indicator_powers_are_idempotent() {
        let f = PhaseSpaceFunction::Indicator(sector(0.5, 1.0));
        assert_eq!(f.pow(3).unwrap(), f);
        assert_eq!(PhaseSpaceFunction::POSITION.pow(3).unwrap(), PhaseSpaceFunction::Monomial { a: 3, b: 0 });
    }

    #[test]
    fn sector_decomposes_into_quadrants() {
        let r = sector(0.5, 1.0);
        let rects = r.rectangles().unwrap();
        assert_eq!(rects.len(), 1);
        let half = sector(0.0, 1.0).rectangles().unwrap();
        assert_eq!(half.len(), 2);
        assert!(sector(0.1, 1.0).rectangles().is_none());
    }

    #[test]
    fn grid_sampled_nearest_lookup() {
        let grid = PhaseGrid::square(1.0, 2);
        let f = PhaseSpaceFunction::grid_sampled(grid, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(f.eval(-0.6, 0.4), 2.0);
        assert_eq!(f.eval(0.6, -0.4), 3.0);
        assert_eq!(f.eval(5.0, 0.0), 0.0);
    }

    fn arb_region() -> impl Strategy<Value = Region> {
        prop_oneof![
            (-3.0..3.0f64, 0.1..3.0f64, -3.0..3.0f64, 0.1..3.0f64).prop_map(|(a, la, b, lb)| Region::Rectangle {
                q: BorelSet1D::closed(a, a + la),
                p: BorelSet1D::closed(b, b + lb)
            }),
            (0..4i32, -2.0..2.0f64).prop_map(|(k, o)| Region::HalfPlane { angle: k as f64 * FRAC_PI_2, offset: o }),
            (0..4i32, 1..4i32).prop_map(|(s, l)| sector(s as f64 / 2.0, (s + l) as f64 / 2.0)),
        ]
    }

    proptest! {
        // The rectangle decomposition describes the same set away from measure-zero edges.
        #[test]
        fn rectangles_agree_with_membership(r in arb_region(), q in -5.0..5.0f64, p in -5.0..5.0f64) {
            let rects = r.rectangles().unwrap();
            let inside = rects.iter().filter(|(bq, bp)| bq.contains(q) && bp.contains(p)).count();
            prop_assert!(inside <= 1);
            prop_assert_eq!(inside == 1, r.contains(q, p));
            let c = r.clone().complement();
            if let Some(cr) = c.rectangles() {
                let inside_c = cr.iter().filter(|(bq, bp)| bq.contains(q) && bp.contains(p)).count();
                prop_assert_eq!(inside_c == 1, !r.contains(q, p));
            }
        }

        #[test]
        fn translation_moves_membership(r in arb_region(), q in -4.0..4.0f64, p in -4.0..4.0f64,
                                        dq in -2.0..2.0f64, dp in -2.0..2.0f64) {
            if let Ok(t) = r.translated(dq, dp) {
                prop_assert_eq!(t.contains(q + dq, p + dp), r.contains(q, p));
            }
        }
    }
}
