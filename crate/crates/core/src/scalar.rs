//! Scalar abstraction for walk masses and conductance values.
//!
//! The walk kernel and the sweep machinery are written once against
//! [`Scalar`] and instantiated with
//!
//! * `f64` / `f32` for fast floating-point experiments,
//! * [`BigRational`] for exact arithmetic (symmetry checks, oracle runs),
//! * [`Fixed`], the 64-bit fixed-point format that crosses simulated edges.
//!
//! Only the operations the kernel needs are required: addition,
//! subtraction, division and multiplication by small integers, and exact
//! comparison of ratios `a/da` against `b/db`.

use std::cmp::Ordering;
use std::fmt::Debug;
use std::ops::{Add, Mul, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// Number type usable as a probability mass.
pub trait Scalar:
    Clone + Debug + PartialOrd + Zero + One + Sub<Output = Self> + ToPrimitive + Send + Sync + 'static
{
    /// The value `num / den`, rounded toward zero where not representable.
    fn from_ratio(num: u64, den: u64) -> Self;
    /// Converts a float, rounding toward zero where not representable.
    fn from_f64(x: f64) -> Self;
    /// `self / d`, rounded toward zero where not representable.
    fn div_int(&self, d: u64) -> Self;
    /// `self * k`.
    fn mul_int(&self, k: u64) -> Self;
    /// Lossy conversion for reporting.
    fn as_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
    /// Orders `a / da` against `b / db` for positive `da`, `db`.
    fn cmp_ratio(a: &Self, da: u64, b: &Self, db: u64) -> Ordering {
        a.mul_int(db)
            .partial_cmp(&b.mul_int(da))
            .unwrap_or(Ordering::Equal)
    }
    /// True when the value is strictly positive.
    fn is_positive(&self) -> bool {
        *self > Self::zero()
    }
}

macro_rules! float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            fn from_ratio(num: u64, den: u64) -> Self {
                num as $t / den as $t
            }
            fn from_f64(x: f64) -> Self {
                x as $t
            }
            fn div_int(&self, d: u64) -> Self {
                *self / d as $t
            }
            fn mul_int(&self, k: u64) -> Self {
                *self * k as $t
            }
            fn cmp_ratio(a: &Self, da: u64, b: &Self, db: u64) -> Ordering {
                (*a / da as $t)
                    .partial_cmp(&(*b / db as $t))
                    .unwrap_or(Ordering::Equal)
            }
        }
    };
}

float_scalar!(f32);
float_scalar!(f64);

impl Scalar for BigRational {
    fn from_ratio(num: u64, den: u64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).unwrap_or_else(BigRational::zero)
    }
    fn div_int(&self, d: u64) -> Self {
        self / BigInt::from(d)
    }
    fn mul_int(&self, k: u64) -> Self {
        self * BigInt::from(k)
    }
}

/// Unsigned fixed-point number with [`Fixed::FRAC_BITS`] fractional bits.
///
/// This is the wire format for probability masses: one value fits in a
/// single 64-bit word, and every operation the walk needs is exact or
/// rounds toward zero, so a lazy step never creates mass.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fixed(u64);

impl Fixed {
    /// Fractional bits. Four integer bits remain, enough for sums of masses.
    pub const FRAC_BITS: u32 = 60;
    const ONE: u64 = 1 << Self::FRAC_BITS;
    /// Encoded width on the wire.
    pub const BITS: u64 = 64;

    pub const fn from_raw(raw: u64) -> Self {
        Fixed(raw)
    }
    pub const fn raw(self) -> u64 {
        self.0
    }
}

impl Debug for Fixed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Fixed({})", self.as_f64())
    }
}

impl Add for Fixed {
    type Output = Fixed;
    fn add(self, rhs: Fixed) -> Fixed {
        Fixed(self.0.checked_add(rhs.0).expect("fixed-point overflow"))
    }
}

impl Sub for Fixed {
    type Output = Fixed;
    fn sub(self, rhs: Fixed) -> Fixed {
        Fixed(self.0.checked_sub(rhs.0).expect("fixed-point underflow"))
    }
}

impl Mul for Fixed {
    type Output = Fixed;
    fn mul(self, rhs: Fixed) -> Fixed {
        let wide = (self.0 as u128 * rhs.0 as u128) >> Self::FRAC_BITS;
        Fixed(u64::try_from(wide).expect("fixed-point overflow"))
    }
}

impl Zero for Fixed {
    fn zero() -> Self {
        Fixed(0)
    }
    fn is_zero(&self) -> bool {
        self.0 == 0
    }
}

impl One for Fixed {
    fn one() -> Self {
        Fixed(Self::ONE)
    }
}

impl ToPrimitive for Fixed {
    fn to_i64(&self) -> Option<i64> {
        i64::try_from(self.0 >> Self::FRAC_BITS).ok()
    }
    fn to_u64(&self) -> Option<u64> {
        Some(self.0 >> Self::FRAC_BITS)
    }
    fn to_f64(&self) -> Option<f64> {
        Some(self.0 as f64 / Self::ONE as f64)
    }
}

impl Scalar for Fixed {
    fn from_ratio(num: u64, den: u64) -> Self {
        let wide = ((num as u128) << Self::FRAC_BITS) / den as u128;
        Fixed(u64::try_from(wide).expect("fixed-point overflow"))
    }
    fn from_f64(x: f64) -> Self {
        if x <= 0.0 {
            return Fixed(0);
        }
        let scaled = (x * Self::ONE as f64).floor();
        assert!(scaled < u64::MAX as f64, "fixed-point overflow");
        Fixed(scaled as u64)
    }
    fn div_int(&self, d: u64) -> Self {
        Fixed(self.0 / d)
    }
    fn mul_int(&self, k: u64) -> Self {
        Fixed(self.0.checked_mul(k).expect("fixed-point overflow"))
    }
    fn cmp_ratio(a: &Self, da: u64, b: &Self, db: u64) -> Ordering {
        (a.0 as u128 * db as u128).cmp(&(b.0 as u128 * da as u128))
    }
}
