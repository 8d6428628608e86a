//! Exact integer helpers: gcd over lists, extended Euclid / Bézout
//! coefficients, and ceiling division.
//!
//! All routines are exact. Bézout coefficients are returned as
//! arbitrary-precision integers because the left-fold over a list can grow
//! them multiplicatively.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};

/// gcd and Bézout coefficients for a list of values: `sum(coefficients[i] *
/// values[i]) == d` and `d == gcd(values)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BezoutCertificate {
    pub d: u64,
    pub coefficients: Vec<BigInt>,
}

impl BezoutCertificate {
    /// Checks the defining identity against the values the certificate was
    /// built from.
    pub fn verify(&self, values: &[u64]) -> bool {
        if values.len() != self.coefficients.len() || self.d == 0 {
            return false;
        }
        let sum: BigInt = self
            .coefficients
            .iter()
            .zip(values)
            .map(|(c, &v)| c * BigInt::from(v))
            .sum();
        sum == BigInt::from(self.d) && values.iter().all(|&v| v % self.d == 0)
    }
}

/// gcd of a list with the convention gcd(0, x) = x.
///
/// Errors on an all-zero (or empty) list.
pub fn gcd_list(values: &[u64]) -> Result<u64> {
    let g = values.iter().fold(0u64, |acc, &v| acc.gcd(&v));
    if g == 0 {
        return Err(Error::ZeroVector);
    }
    Ok(g)
}

/// Extended Euclid on a pair: returns (g, s, t) with s*a + t*b = g = gcd(a, b).
fn extended_gcd(a: u64, b: u64) -> (u64, i128, i128) {
    let (mut old_r, mut r) = (a as i128, b as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    let (mut old_t, mut t) = (0i128, 1i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
        (old_t, t) = (t, old_t - q * t);
    }
    (old_r as u64, old_s, old_t)
}

/// Bézout certificate for a list, built by left-folding the two-argument
/// extended Euclid. No attempt is made to minimize coefficient magnitudes.
///
/// Errors on an all-zero (or empty) list. The returned certificate is
/// verified before being handed out.
pub fn bezout_list(values: &[u64]) -> Result<BezoutCertificate> {
    if values.iter().all(|&v| v == 0) {
        return Err(Error::ZeroVector);
    }
    let mut coefficients: Vec<BigInt> = Vec::with_capacity(values.len());
    let mut d = 0u64;
    for &v in values {
        let (g, s, t) = extended_gcd(d, v);
        // s scales every coefficient accumulated so far, t is the new one.
        for c in &mut coefficients {
            *c *= s;
        }
        coefficients.push(BigInt::from(t));
        d = g;
    }
    let cert = BezoutCertificate { d, coefficients };
    if !cert.verify(values) {
        return Err(Error::Certification("bezout identity does not hold".into()));
    }
    Ok(cert)
}

/// Smallest integer >= n / d, exact for negative numerators. d must be > 0.
pub fn ceil_div(n: i128, d: i128) -> Result<i128> {
    if d <= 0 {
        return Err(Error::NonPositiveDenominator);
    }
    let q = n.div_euclid(d);
    let r = n.rem_euclid(d);
    Ok(if r == 0 { q } else { q + 1 })
}

/// Arbitrary-precision variant of [`ceil_div`].
pub fn ceil_div_big(n: &BigInt, d: &BigInt) -> Result<BigInt> {
    if !d.is_positive() {
        return Err(Error::NonPositiveDenominator);
    }
    let (q, r) = n.div_mod_floor(d);
    Ok(if r.is_zero() { q } else { q + 1 })
}
