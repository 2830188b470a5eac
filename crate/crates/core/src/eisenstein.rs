//! Exact arithmetic in the Eisenstein integers `Z[ω]`, `ω = e^{2πi/3}`.
//!
//! Elements are stored as `a + bω`. Products use `ω² = -1 - ω`; every
//! operation is checked so that corrupt input surfaces as [`Error::Overflow`]
//! instead of wrapping.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Complex64;

/// `a + bω` with `ω = e^{2πi/3}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(from = "[i64; 2]", into = "[i64; 2]")]
pub struct EisensteinInt {
    pub a: i64,
    pub b: i64,
}

impl From<[i64; 2]> for EisensteinInt {
    fn from([a, b]: [i64; 2]) -> Self {
        Self { a, b }
    }
}

impl From<EisensteinInt> for [i64; 2] {
    fn from(z: EisensteinInt) -> Self {
        [z.a, z.b]
    }
}

impl EisensteinInt {
    pub const ZERO: Self = Self::new(0, 0);
    pub const ONE: Self = Self::new(1, 0);
    pub const OMEGA: Self = Self::new(0, 1);
    /// `ω² = -1 - ω`.
    pub const OMEGA_SQ: Self = Self::new(-1, -1);

    pub const fn new(a: i64, b: i64) -> Self {
        Self { a, b }
    }

    pub fn is_zero(self) -> bool {
        self.a == 0 && self.b == 0
    }

    /// Complex conjugate: `conj(a + bω) = (a - b) - bω`.
    pub fn checked_conj(self) -> Result<Self> {
        Ok(Self {
            a: self.a.checked_sub(self.b).ok_or(Error::Overflow)?,
            b: self.b.checked_neg().ok_or(Error::Overflow)?,
        })
    }

    pub fn conj(self) -> Self {
        self.checked_conj()
            .expect("Eisenstein conjugate overflowed")
    }

    pub fn checked_add(self, rhs: Self) -> Result<Self> {
        Ok(Self {
            a: self.a.checked_add(rhs.a).ok_or(Error::Overflow)?,
            b: self.b.checked_add(rhs.b).ok_or(Error::Overflow)?,
        })
    }

    pub fn checked_sub(self, rhs: Self) -> Result<Self> {
        Ok(Self {
            a: self.a.checked_sub(rhs.a).ok_or(Error::Overflow)?,
            b: self.b.checked_sub(rhs.b).ok_or(Error::Overflow)?,
        })
    }

    /// Ring product: `(a + bω)(c + dω) = (ac - bd) + (ad + bc - bd)ω`.
    pub fn checked_mul(self, rhs: Self) -> Result<Self> {
        let ac = self.a.checked_mul(rhs.a).ok_or(Error::Overflow)?;
        let bd = self.b.checked_mul(rhs.b).ok_or(Error::Overflow)?;
        let ad = self.a.checked_mul(rhs.b).ok_or(Error::Overflow)?;
        let bc = self.b.checked_mul(rhs.a).ok_or(Error::Overflow)?;
        let a = ac.checked_sub(bd).ok_or(Error::Overflow)?;
        let b = ad
            .checked_add(bc)
            .and_then(|s| s.checked_sub(bd))
            .ok_or(Error::Overflow)?;
        Ok(Self { a, b })
    }

    /// Squared modulus `|a + bω|² = a² - ab + b²`, always a nonnegative integer.
    pub fn checked_norm(self) -> Result<i64> {
        let a2 = self.a.checked_mul(self.a).ok_or(Error::Overflow)?;
        let b2 = self.b.checked_mul(self.b).ok_or(Error::Overflow)?;
        let ab = self.a.checked_mul(self.b).ok_or(Error::Overflow)?;
        a2.checked_sub(ab)
            .and_then(|s| s.checked_add(b2))
            .ok_or(Error::Overflow)
    }

    pub fn to_complex(self) -> Complex64 {
        let half_sqrt3 = 3f64.sqrt() / 2.0;
        Complex64::new(
            self.a as f64 - 0.5 * self.b as f64,
            half_sqrt3 * self.b as f64,
        )
    }
}

/// Ring product of two Eisenstein integers, reporting overflow.
pub fn eisenstein_mul(x: EisensteinInt, y: EisensteinInt) -> Result<EisensteinInt> {
    x.checked_mul(y)
}

impl Add for EisensteinInt {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.checked_add(rhs)
            .expect("Eisenstein addition overflowed")
    }
}

impl Sub for EisensteinInt {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.checked_sub(rhs)
            .expect("Eisenstein subtraction overflowed")
    }
}

impl Mul for EisensteinInt {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.checked_mul(rhs)
            .expect("Eisenstein multiplication overflowed")
    }
}

impl Neg for EisensteinInt {
    type Output = Self;
    fn neg(self) -> Self {
        Self::ZERO - self
    }
}

impl fmt::Display for EisensteinInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.a, self.b) {
            (a, 0) => write!(f, "{a}"),
            (0, b) => write!(f, "{b}ω"),
            (a, b) if b < 0 => write!(f, "{a}-{}ω", -b),
            (a, b) => write!(f, "{a}+{b}ω"),
        }
    }
}
