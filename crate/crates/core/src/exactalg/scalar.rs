//! Exact field elements: arbitrary-precision rationals and residues modulo a prime.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Largest modulus accepted for prime fields; keeps products inside `u64`.
pub const MAX_PRIME: u64 = (1 << 31) - 1;

/// The scalar field a computation runs over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Field {
    /// The ordered field of rationals.
    Rationals,
    /// The prime field of the given characteristic (unordered).
    Prime(u64),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LiteralError {
    #[error("empty literal")]
    Empty,
    #[error("malformed literal {0:?}")]
    Malformed(String),
    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),
    #[error("fractional literal {0:?} is not allowed over a prime field")]
    FractionInPrimeField(String),
    #[error("{0} is not a prime below 2^31")]
    NotPrime(u64),
}

impl Field {
    /// Builds a prime field, rejecting composite or oversized moduli.
    pub fn prime(p: u64) -> Result<Field, LiteralError> {
        if !(2..=MAX_PRIME).contains(&p) || !is_prime(p) {
            return Err(LiteralError::NotPrime(p));
        }
        Ok(Field::Prime(p))
    }

    pub fn zero(self) -> Scalar {
        self.from_i64(0)
    }

    pub fn one(self) -> Scalar {
        self.from_i64(1)
    }

    pub fn from_i64(self, v: i64) -> Scalar {
        match self {
            Field::Rationals => Scalar::Rational(BigRational::from_integer(BigInt::from(v))),
            Field::Prime(p) => Scalar::Residue {
                value: v.rem_euclid(p as i64) as u64,
                modulus: p,
            },
        }
    }

    /// Builds `num/den`; panics if `den == 0` or the denominator is not invertible.
    pub fn from_ratio(self, num: i64, den: i64) -> Scalar {
        assert!(den != 0, "zero denominator");
        let n = self.from_i64(num);
        let d = self.from_i64(den);
        n.div(&d)
            .expect("denominator must be invertible in the field")
    }

    /// Whether the field carries an order (and hence an absolute value).
    pub fn is_ordered(self) -> bool {
        matches!(self, Field::Rationals)
    }

    /// Parses `"p/q"` or `"p"` (decimal, optional leading minus). Prime fields
    /// accept integers only and reduce them modulo the characteristic.
    pub fn parse_literal(self, text: &str) -> Result<Scalar, LiteralError> {
        let raw: RationalLiteral = text.parse()?;
        match self {
            Field::Rationals => Ok(Scalar::Rational(raw.0)),
            Field::Prime(p) => {
                if !raw.0.is_integer() {
                    return Err(LiteralError::FractionInPrimeField(text.to_string()));
                }
                let m = BigInt::from(p);
                let value = raw.0.to_integer().mod_floor(&m).to_u64().unwrap_or(0);
                Ok(Scalar::Residue { value, modulus: p })
            }
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Rationals => write!(f, "Q"),
            Field::Prime(p) => write!(f, "F{p}"),
        }
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// A rational number parsed from literal syntax, before it is placed in a field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalLiteral(pub BigRational);

impl FromStr for RationalLiteral {
    type Err = LiteralError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let t = text.trim();
        if t.is_empty() {
            return Err(LiteralError::Empty);
        }
        let parse_int = |s: &str, allow_sign: bool| -> Result<BigInt, LiteralError> {
            let digits = if allow_sign {
                s.strip_prefix('-').unwrap_or(s)
            } else {
                s
            };
            if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
                return Err(LiteralError::Malformed(text.to_string()));
            }
            s.parse::<BigInt>()
                .map_err(|_| LiteralError::Malformed(text.to_string()))
        };
        match t.split_once('/') {
            None => Ok(RationalLiteral(BigRational::from_integer(parse_int(
                t, true,
            )?))),
            Some((n, d)) => {
                let n = parse_int(n, true)?;
                let d = parse_int(d, false)?;
                if d.is_zero() {
                    return Err(LiteralError::ZeroDenominator(text.to_string()));
                }
                Ok(RationalLiteral(BigRational::new(n, d)))
            }
        }
    }
}

/// An exact scalar. Rationals are kept in lowest terms with a positive
/// denominator; residues live in `[0, modulus)`.
///
/// Arithmetic between scalars of different fields is a programming error and panics.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Scalar {
    Rational(BigRational),
    Residue { value: u64, modulus: u64 },
}

impl Scalar {
    pub fn field(&self) -> Field {
        match self {
            Scalar::Rational(_) => Field::Rationals,
            Scalar::Residue { modulus, .. } => Field::Prime(*modulus),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Rational(r) => r.is_zero(),
            Scalar::Residue { value, .. } => *value == 0,
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Scalar::Rational(r) => r.is_one(),
            Scalar::Residue { value, .. } => *value == 1,
        }
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self) -> Option<Scalar> {
        if self.is_zero() {
            return None;
        }
        Some(match self {
            Scalar::Rational(r) => Scalar::Rational(r.recip()),
            Scalar::Residue { value, modulus } => Scalar::Residue {
                value: pow_mod(*value, modulus - 2, *modulus),
                modulus: *modulus,
            },
        })
    }

    pub fn div(&self, rhs: &Scalar) -> Option<Scalar> {
        rhs.inv().map(|r| self * &r)
    }

    /// Absolute value, available only over the ordered field.
    pub fn abs(&self) -> Option<Scalar> {
        match self {
            Scalar::Rational(r) => Some(Scalar::Rational(r.abs())),
            Scalar::Residue { .. } => None,
        }
    }

    /// Sign comparison with zero, available only over the ordered field.
    pub fn signum_cmp(&self) -> Option<Ordering> {
        match self {
            Scalar::Rational(r) => Some(r.cmp(&BigRational::zero())),
            Scalar::Residue { .. } => None,
        }
    }

    /// The residue value as an integer, if this is a prime-field element.
    pub fn residue(&self) -> Option<u64> {
        match self {
            Scalar::Residue { value, .. } => Some(*value),
            Scalar::Rational(_) => None,
        }
    }

    fn binary(
        &self,
        rhs: &Scalar,
        rat: impl FnOnce(&BigRational, &BigRational) -> BigRational,
        res: impl FnOnce(u64, u64, u64) -> u64,
    ) -> Scalar {
        match (self, rhs) {
            (Scalar::Rational(a), Scalar::Rational(b)) => Scalar::Rational(rat(a, b)),
            (
                Scalar::Residue {
                    value: a,
                    modulus: p,
                },
                Scalar::Residue {
                    value: b,
                    modulus: q,
                },
            ) if p == q => Scalar::Residue {
                value: res(*a, *b, *p),
                modulus: *p,
            },
            _ => panic!(
                "scalars from different fields: {} and {}",
                self.field(),
                rhs.field()
            ),
        }
    }
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % m;
        }
        base = base * base % m;
        exp >>= 1;
    }
    acc
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Rational(r) if r.is_integer() => write!(f, "{}", r.numer()),
            Scalar::Rational(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Scalar::Residue { value, .. } => write!(f, "{value}"),
        }
    }
}

impl<'a> Add<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn add(self, rhs: &'a Scalar) -> Scalar {
        self.binary(rhs, |a, b| a + b, |a, b, p| (a + b) % p)
    }
}

impl<'a> Sub<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn sub(self, rhs: &'a Scalar) -> Scalar {
        self.binary(rhs, |a, b| a - b, |a, b, p| (a + p - b) % p)
    }
}

impl<'a> Mul<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn mul(self, rhs: &'a Scalar) -> Scalar {
        self.binary(rhs, |a, b| a * b, |a, b, p| a * b % p)
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Rational(r) => Scalar::Rational(-r),
            Scalar::Residue { value, modulus } => Scalar::Residue {
                value: (modulus - value) % modulus,
                modulus: *modulus,
            },
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<Scalar> for Scalar {
            type Output = Scalar;
            fn $m(self, rhs: Scalar) -> Scalar {
                (&self).$m(&rhs)
            }
        }
        impl<'a> $tr<&'a Scalar> for Scalar {
            type Output = Scalar;
            fn $m(self, rhs: &'a Scalar) -> Scalar {
                (&self).$m(rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals_are_normalized() {
        let q = Field::Rationals;
        let a = q.parse_literal("6/-4").err();
        assert!(a.is_some(), "sign belongs on the numerator");
        let b = q.parse_literal("-6/4").unwrap();
        match &b {
            Scalar::Rational(r) => {
                assert_eq!(r.numer(), &BigInt::from(-3));
                assert_eq!(r.denom(), &BigInt::from(2));
            }
            _ => unreachable!(),
        }
        assert_eq!(b.to_string(), "-3/2");
        assert_eq!(q.parse_literal("8/4").unwrap().to_string(), "2");
    }

    #[test]
    fn literal_errors() {
        let q = Field::Rationals;
        assert_eq!(
            q.parse_literal("1/0"),
            Err(LiteralError::ZeroDenominator("1/0".into()))
        );
        assert!(q.parse_literal("").is_err());
        assert!(q.parse_literal("1.5").is_err());
        assert!(q.parse_literal("--1").is_err());
        assert!(Field::Prime(5).parse_literal("1/2").is_err());
    }

    #[test]
    fn residues_reduce_mod_p() {
        let f = Field::prime(7).unwrap();
        assert_eq!(f.parse_literal("-1").unwrap(), f.from_i64(6));
        assert_eq!(f.parse_literal("15").unwrap(), f.from_i64(1));
        let three = f.from_i64(3);
        assert!((&three * &three.inv().unwrap()).is_one());
        assert!(Field::prime(9).is_err());
        assert!(Field::prime(1).is_err());
    }

    #[test]
    fn absolute_value_only_when_ordered() {
        assert_eq!(
            Field::Rationals.from_i64(-3).abs(),
            Some(Field::Rationals.from_i64(3))
        );
        assert_eq!(Field::Prime(3).from_i64(2).abs(), None);
        assert!(Field::Rationals.is_ordered());
        assert!(!Field::Prime(2).is_ordered());
    }

    #[test]
    #[should_panic(expected = "different fields")]
    fn mixing_fields_panics() {
        let _ = Field::Rationals.one() + Field::Prime(2).one();
    }
}
