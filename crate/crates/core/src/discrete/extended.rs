//! Exact-arithmetic iterated Laplacian on truncated lines.
//!
//! With `h = 1/m` and `L` a multiple of `h`, the Neumann line stencil times `m^2`
//! has integer entries, so fixed-point data can be iterated without any
//! rounding. Only the initial sampling is approximate, at a precision chosen so
//! that `(4 m^2)^J` amplification of its error stays far below `f64` resolution.

use alloc::format;
use alloc::vec::Vec;

use num_bigint::{BigInt, Sign};
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::grid::{Grid, Shape, Topology};
use crate::data::ClosedForm;
use crate::error::{Error, Result};
use crate::math::{abs, ldexp, round};

const GUARD_BITS: u64 = 64;

/// Exact dyadic decomposition `x = mant * 2^exp`.
fn dyadic(x: f64) -> (BigInt, i64) {
    if x == 0.0 {
        return (BigInt::zero(), 0);
    }
    let bits = x.to_bits();
    let sign = if (bits >> 63) == 1 { -1i64 } else { 1 };
    let exp_raw = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, e) = if exp_raw == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp_raw - 1075)
    };
    (BigInt::from(sign) * BigInt::from(mant), e)
}

/// `round(num / den * 2^shift)` for `den > 0`.
fn scaled_ratio(num: &BigInt, den: &BigInt, shift: i64) -> BigInt {
    let (n, d) = if shift >= 0 {
        (num << (shift as usize), den.clone())
    } else {
        (num.clone(), den << ((-shift) as usize))
    };
    let twice = (&n << 1usize) + if n.sign() == Sign::Minus { -d.clone() } else { d.clone() };
    twice / (&d << 1usize)
}

/// `exp(num/den)` as a fixed-point integer with `bits` fractional bits.
pub fn fixed_exp(num: &BigInt, den: &BigInt, bits: u64) -> BigInt {
    let p = bits + GUARD_BITS;
    let y = scaled_ratio(num, den, p as i64);
    let mag = y.abs().bits();
    let k = mag.saturating_sub(p - 4);
    let z = &y >> (k as usize);
    let one = BigInt::one() << (p as usize);
    let mut sum = one.clone();
    let mut term = one;
    let mut i = 1u64;
    loop {
        term = (&term * &z) >> (p as usize);
        term /= BigInt::from(i);
        if term.is_zero() {
            break;
        }
        sum += &term;
        i += 1;
    }
    for _ in 0..k {
        sum = (&sum * &sum) >> (p as usize);
    }
    sum >> (GUARD_BITS as usize)
}

/// Fixed-point integer with `bits` fractional bits to the nearest `f64`.
pub fn fixed_to_f64(x: &BigInt, bits: u64) -> f64 {
    let len = x.bits();
    if len == 0 {
        return 0.0;
    }
    let drop = len.saturating_sub(120);
    let head = (x >> (drop as usize)).to_f64().unwrap_or(f64::NAN);
    ldexp(head, drop as i32 - bits as i32)
}

/// Line parameters as integers: `h = 1/m`, `L = big_m / m`.
fn integer_layout(grid: &Grid) -> Result<(i64, i64, usize)> {
    let (l, h) = match grid.topology() {
        Topology::TruncatedLine { half_length, spacing } => (half_length, spacing),
        _ => return Err(Error::unsupported("exact iteration needs a truncated line")),
    };
    let m = round(1.0 / h);
    if m < 1.0 || abs(m * h - 1.0) > 1e-12 {
        return Err(Error::unsupported(format!("exact iteration needs 1/h integral, got h={h}")));
    }
    let big_m = round(l * m);
    if abs(big_m - l * m) > 1e-9 {
        return Err(Error::unsupported("exact iteration needs L to be a multiple of h"));
    }
    let n = match grid.shape() {
        Shape::Line { nodes, .. } => nodes,
        _ => unreachable!(),
    };
    Ok((m as i64, big_m as i64, n))
}

/// Sample closed-form data at `x = num / m` with `bits` fractional bits.
fn sample_fixed(data: &ClosedForm, num: i64, m: i64, bits: u64) -> Result<BigInt> {
    let xn = BigInt::from(num);
    let mm = BigInt::from(m);
    match data {
        ClosedForm::Constant(c) => {
            let (mant, e) = dyadic(*c);
            Ok(scaled_ratio(&mant, &BigInt::one(), e + bits as i64))
        }
        ClosedForm::Polynomial(coeffs) => {
            // numerator over the common denominator m^deg, see `sample_denominator`
            let deg = coeffs.len().saturating_sub(1);
            let mut acc = BigInt::zero();
            for (d, c) in coeffs.iter().enumerate() {
                let (mant, e) = dyadic(*c);
                let term = mant * num_traits::pow(xn.clone(), d) * num_traits::pow(mm.clone(), deg - d);
                acc += scaled_ratio(&term, &BigInt::one(), e + bits as i64);
            }
            Ok(acc)
        }
        ClosedForm::ExpQuadratic { tau } => {
            // x^2 / (4 tau) with tau = mant * 2^e
            let (mant, e) = dyadic(*tau);
            if mant.sign() != Sign::Plus {
                return Err(Error::validation("tau must be positive"));
            }
            let mut qn = &xn * &xn;
            let mut qd = BigInt::from(4) * &mm * &mm * mant;
            if e >= 0 {
                qd <<= e as usize;
            } else {
                qn <<= (-e) as usize;
            }
            Ok(fixed_exp(&qn, &qd, bits))
        }
        other => Err(Error::unsupported(format!(
            "exact sampling is not available for {other}"
        ))),
    }
}

/// Integer factor carried by the samples on top of the `2^bits` scale.
fn sample_denominator(data: &ClosedForm, m: i64) -> BigInt {
    match data {
        ClosedForm::Polynomial(coeffs) => num_traits::pow(BigInt::from(m), coeffs.len().saturating_sub(1)),
        _ => BigInt::one(),
    }
}

fn to_f64_over(v: &BigInt, den: &BigInt, bits: u64) -> f64 {
    if den.is_one() {
        return fixed_to_f64(v, bits);
    }
    fixed_to_f64(&scaled_ratio(v, den, 64), bits + 64)
}

/// Taylor coefficients `a_0..a_J` of the heat flow of `data` under the Neumann
/// line stencil, computed in exact integer arithmetic and rounded to `f64` at the end.
pub fn exact_taylor_coefficients(grid: &Grid, data: &ClosedForm, j_max: usize) -> Result<Vec<Vec<f64>>> {
    let (m, big_m, n) = integer_layout(grid)?;
    let log_amp = 64 - ((4 * m * m) as u64).leading_zeros() as u64;
    let bits = 160 + j_max as u64 * log_amp;
    let mut u: Vec<BigInt> = (0..n)
        .map(|i| sample_fixed(data, i as i64 - big_m, m, bits))
        .collect::<Result<_>>()?;
    let den = sample_denominator(data, m);
    let m2 = BigInt::from(m * m);
    let mut out = Vec::with_capacity(j_max + 1);
    out.push(u.iter().map(|v| to_f64_over(v, &den, bits)).collect());
    for _ in 0..j_max {
        let mut next = Vec::with_capacity(n);
        for i in 0..n {
            let v = if i == 0 {
                (&u[1] - &u[0]) * BigInt::from(2)
            } else if i == n - 1 {
                (&u[n - 2] - &u[n - 1]) * BigInt::from(2)
            } else {
                &u[i + 1] - (&u[i] << 1usize) + &u[i - 1]
            };
            next.push(v * &m2);
        }
        u = next;
        out.push(u.iter().map(|v| to_f64_over(v, &den, bits)).collect());
    }
    Ok(out)
}
