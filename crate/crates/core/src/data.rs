//! Closed-form data and the heat flows they generate on one-dimensional models.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::discrete::{Grid, GridField};
use crate::error::{Error, Result};
use crate::math::{exp, sin, sqrt, PI};
use crate::tychonov;

#[derive(Debug, Clone, PartialEq)]
pub enum ClosedForm {
    /// `e^{-t} sin x`
    Sin,
    Constant(f64),
    /// `sum_d c_d x^d` and its polynomial heat flow
    Polynomial(Vec<f64>),
    /// `(4 pi (t+shift))^{-1/2} exp(-x^2 / (4 (t+shift)))`
    HeatKernel { shift: f64 },
    /// `(tau/(tau-t))^{1/2} exp(x^2 / (4 (tau-t)))`, blowing up at `t = tau`
    ExpQuadratic { tau: f64 },
    /// Tychonov's solution shifted in time: `v(x, time + t)` summed to `terms`
    Tychonov { time: f64, terms: usize },
}

impl ClosedForm {
    /// Value of the heat flow started from this data, at time `t`.
    pub fn solution(&self, x: f64, t: f64) -> f64 {
        match self {
            ClosedForm::Sin => exp(-t) * sin(x),
            ClosedForm::Constant(c) => *c,
            ClosedForm::Polynomial(c) => polynomial_flow(c, x, t),
            ClosedForm::HeatKernel { shift } => {
                let s = t + shift;
                exp(-x * x / (4.0 * s)) / sqrt(4.0 * PI * s)
            }
            ClosedForm::ExpQuadratic { tau } => {
                let s = tau - t;
                sqrt(tau / s) * exp(x * x / (4.0 * s))
            }
            ClosedForm::Tychonov { time, terms } => tychonov::tychonov_value(x, time + t, *terms).value,
        }
    }

    /// Initial data at `t = 0`.
    pub fn value(&self, x: f64) -> f64 {
        self.solution(x, 0.0)
    }

    pub fn sample(&self, grid: &Arc<Grid>) -> GridField {
        self.sample_at(grid, 0.0)
    }

    /// The flow at time `t` on every node.
    pub fn sample_at(&self, grid: &Arc<Grid>, t: f64) -> GridField {
        if let ClosedForm::Tychonov { time, terms } = self {
            let table = tychonov::TychonovTable::new((*terms).max(1));
            return GridField::from_fn(grid.clone(), |p| table.value(p.coords[0], time + t, (*terms).max(1)).value);
        }
        GridField::from_fn(grid.clone(), |p| self.solution(p.coords[0], t))
    }

    /// Largest time at which the closed form is defined (exclusive).
    pub fn blow_up_time(&self) -> f64 {
        match self {
            ClosedForm::ExpQuadratic { tau } => *tau,
            _ => f64::INFINITY,
        }
    }

    /// Earliest time at which the closed form is defined (exclusive).
    pub fn birth_time(&self) -> f64 {
        match self {
            ClosedForm::HeatKernel { shift } => -shift,
            _ => f64::NEG_INFINITY,
        }
    }

    pub fn is_exactly_sampleable(&self) -> bool {
        matches!(
            self,
            ClosedForm::Constant(_) | ClosedForm::Polynomial(_) | ClosedForm::ExpQuadratic { .. }
        )
    }
}

/// `sum_j t^j/j! * p^{(2j)}(x)`.
fn polynomial_flow(c: &[f64], x: f64, t: f64) -> f64 {
    let mut coeffs: Vec<f64> = c.to_vec();
    let mut total = 0.0;
    let mut tj = 1.0;
    let mut j = 0usize;
    while !coeffs.is_empty() {
        let v = coeffs.iter().rev().fold(0.0, |acc, a| acc * x + a);
        total += tj * v;
        j += 1;
        tj *= t / j as f64;
        // second derivative
        coeffs = (2..coeffs.len())
            .map(|d| coeffs[d] * (d * (d - 1)) as f64)
            .collect();
    }
    total
}

impl fmt::Display for ClosedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClosedForm::Sin => write!(f, "sin"),
            ClosedForm::Constant(c) => write!(f, "const:{c}"),
            ClosedForm::Polynomial(c) => {
                let parts: Vec<String> = c.iter().map(|v| format!("{v}")).collect();
                write!(f, "poly:{}", parts.join(","))
            }
            ClosedForm::HeatKernel { shift } => write!(f, "kernel:{shift}"),
            ClosedForm::ExpQuadratic { tau } => write!(f, "expq:{tau}"),
            ClosedForm::Tychonov { time, terms } => write!(f, "tychonov:{time}:{terms}"),
        }
    }
}

impl FromStr for ClosedForm {
    type Err = Error;

    /// `sin`, `const:<c>`, `x2`, `poly:<c0>,<c1>,..`, `kernel:<shift>`, `expq:<tau>`,
    /// `tychonov:<time>[:<terms>]`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::validation(format!("unrecognised data spec `{s}`"));
        let num = |v: &str| v.trim().parse::<f64>().map_err(|_| bad());
        let (head, rest) = match s.split_once(':') {
            Some((h, r)) => (h.trim(), Some(r)),
            None => (s.trim(), None),
        };
        let out = match (head, rest) {
            ("sin", None) => ClosedForm::Sin,
            ("x2", None) => ClosedForm::Polynomial(alloc::vec![0.0, 0.0, 1.0]),
            ("one", None) => ClosedForm::Constant(1.0),
            ("const", Some(r)) => ClosedForm::Constant(num(r)?),
            ("poly", Some(r)) => ClosedForm::Polynomial(r.split(',').map(num).collect::<Result<_>>()?),
            ("kernel", Some(r)) => {
                let shift = num(r)?;
                if shift <= 0.0 {
                    return Err(Error::validation("kernel shift must be positive"));
                }
                ClosedForm::HeatKernel { shift }
            }
            ("expq", Some(r)) => {
                let tau = num(r)?;
                if tau <= 0.0 {
                    return Err(Error::validation("tau must be positive"));
                }
                ClosedForm::ExpQuadratic { tau }
            }
            ("tychonov", Some(r)) => {
                let (t, k) = match r.split_once(':') {
                    Some((t, k)) => (num(t)?, k.trim().parse::<usize>().map_err(|_| bad())?),
                    None => (num(r)?, tychonov::DEFAULT_TERMS),
                };
                ClosedForm::Tychonov { time: t, terms: k }
            }
            _ => return Err(bad()),
        };
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_flow_terminates() {
        let p = ClosedForm::Polynomial(alloc::vec![0.0, 0.0, 1.0]);
        assert_eq!(p.solution(3.0, 7.0), 9.0 + 14.0);
        let q = ClosedForm::Polynomial(alloc::vec![0.0, 0.0, 0.0, 0.0, 1.0]);
        // x^4 + 12 x^2 t + 12 t^2
        assert_eq!(q.solution(1.0, 1.0), 1.0 + 12.0 + 12.0);
    }

    #[test]
    fn parse_round_trip() {
        for s in ["sin", "const:2.5", "poly:1,0,3", "kernel:3", "expq:0.5", "tychonov:0.5:40"] {
            let d: ClosedForm = s.parse().unwrap();
            let back: ClosedForm = alloc::string::ToString::to_string(&d).parse().unwrap();
            assert_eq!(d, back);
        }
        assert!("kernel:-1".parse::<ClosedForm>().is_err());
        assert!("wave".parse::<ClosedForm>().is_err());
    }

    #[test]
    fn kernel_solves_heat_equation() {
        let k = ClosedForm::HeatKernel { shift: 3.0 };
        let (x, t, h) = (0.7, -0.4, 1e-3);
        let uxx = (k.solution(x + h, t) - 2.0 * k.solution(x, t) + k.solution(x - h, t)) / (h * h);
        let ut = (k.solution(x, t + h) - k.solution(x, t - h)) / (2.0 * h);
        assert!((uxx - ut).abs() < 1e-6);
    }
}
