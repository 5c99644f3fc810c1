//! Textual specs for topologies, schemes and numbers.

use std::f64::consts::PI;

use shrinker_core::discrete::Topology;
use shrinker_core::heat::Scheme;

use crate::error::{LabError, LabResult};

/// A float, optionally with a `pi` factor: `0.5`, `pi`, `2pi`, `-1.5pi`.
pub fn parse_real(s: &str) -> LabResult<f64> {
    let t = s.trim();
    let bad = || LabError::usage(format!("not a number: {s:?}"));
    if let Some(head) = t.strip_suffix("pi") {
        let c = match head {
            "" | "+" => 1.0,
            "-" => -1.0,
            h => h.parse::<f64>().map_err(|_| bad())?,
        };
        return Ok(c * PI);
    }
    let v: f64 = t.parse().map_err(|_| bad())?;
    if !v.is_finite() {
        return Err(bad());
    }
    Ok(v)
}

pub fn parse_usize(s: &str) -> LabResult<usize> {
    s.trim().parse().map_err(|_| LabError::usage(format!("not a nonnegative integer: {s:?}")))
}

/// `line:<L>:<h>`, `periodic:<P>:<nodes>`, `cylinder:<polar>x<azimuthal>:<L>:<h>`.
pub fn parse_topology(s: &str) -> LabResult<Topology> {
    let parts: Vec<&str> = s.trim().split(':').collect();
    let bad = || LabError::usage(format!("bad topology {s:?}; expected line:L:h, periodic:P:nodes or cylinder:PxA:L:h"));
    match parts.as_slice() {
        ["line", l, h] => Ok(Topology::TruncatedLine { half_length: parse_real(l)?, spacing: parse_real(h)? }),
        ["periodic", p, n] => {
            let period = parse_real(p)?;
            let n = parse_usize(n)?;
            if n == 0 {
                return Err(bad());
            }
            Ok(Topology::PeriodicLine { period, spacing: period / n as f64 })
        }
        ["cylinder", res, l, h] => {
            let (a, b) = res.split_once('x').ok_or_else(bad)?;
            Ok(Topology::CylinderProduct {
                polar: parse_usize(a)?,
                azimuthal: parse_usize(b)?,
                axial_half_length: parse_real(l)?,
                axial_spacing: parse_real(h)?,
            })
        }
        _ => Err(bad()),
    }
}

/// `explicit`, `cn` or `closed-form`, with `dt` for the steppers.
pub fn parse_scheme(s: &str, dt: f64) -> LabResult<Scheme> {
    match s.trim() {
        "explicit" => Ok(Scheme::Explicit { dt }),
        "cn" | "crank-nicolson" => Ok(Scheme::CrankNicolson { dt }),
        "closed-form" | "closed" => Ok(Scheme::ClosedForm),
        other => Err(LabError::usage(format!("unknown scheme {other:?}; expected explicit, cn or closed-form"))),
    }
}

/// Comma-separated chart coordinates.
pub fn parse_point(s: &str) -> LabResult<Vec<f64>> {
    s.split(',').map(parse_real).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_and_topologies() {
        assert_eq!(parse_real("2pi").unwrap(), 2.0 * PI);
        assert_eq!(parse_real("-pi").unwrap(), -PI);
        assert!(parse_real("nan").is_err());
        match parse_topology("periodic:2pi:256").unwrap() {
            Topology::PeriodicLine { spacing, .. } => assert_eq!(spacing, 2.0 * PI / 256.0),
            t => panic!("{t:?}"),
        }
        assert!(matches!(parse_topology("cylinder:32x64:3:0.125").unwrap(), Topology::CylinderProduct { polar: 32, .. }));
        assert!(parse_topology("disc:1").is_err());
    }
}
