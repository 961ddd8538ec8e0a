//! Prime fields with large power-of-two subgroups.
//!
//! All protocol code is generic over [`PrimeField`]. Two concrete fields are
//! provided through [`Fp`]: the 64-bit production field
//! `p = 2^64 - 2^32 + 1` (two-adicity 32) and the toy field `p = 257`
//! (two-adicity 8) used for exhaustive and Monte Carlo checks.

mod fft;
mod poly;

pub use fft::{coset_fft, coset_ifft, fft, ifft};
pub use poly::{interpolate, lagrange_coefficients, Poly};

use std::fmt;
use std::hash::Hash;
use std::iter::{Product, Sum};
use std::marker::PhantomData;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_traits::{One, Zero};
use rand::Rng;
use thiserror::Error;

/// Width of the canonical little-endian encoding of a field element.
pub const ELEMENT_BYTES: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("size {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("size 2^{log_size} exceeds the field two-adicity {two_adicity}")]
    SizeExceedsTwoAdicity { log_size: u32, two_adicity: u32 },
    #[error("{len} coefficients do not fit an evaluation domain of size {size}")]
    TooManyCoefficients { len: usize, size: usize },
    #[error("duplicate interpolation point x = {0}")]
    DuplicatePoint(u64),
    #[error("interpolation needs at least one point")]
    NoPoints,
    #[error("value {value} is not a canonical element of F_{modulus}")]
    NonCanonical { value: u64, modulus: u64 },
    #[error("expected {expected} bytes, got {got}")]
    BadLength { expected: usize, got: usize },
}

/// Runtime description of a field: modulus, two-adicity and a generator of
/// the order-`2^two_adicity` subgroup.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldParams {
    pub modulus: u64,
    pub two_adicity: u32,
    pub generator: u64,
}

/// A prime field `F_p` with `p < 2^64` and a power-of-two multiplicative subgroup.
pub trait PrimeField:
    Copy
    + Clone
    + fmt::Debug
    + fmt::Display
    + Default
    + Eq
    + Ord
    + Hash
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + Sum
    + Product
{
    const MODULUS: u64;
    const TWO_ADICITY: u32;
    const NAME: &'static str;

    /// Reduces an arbitrary `u64` modulo `p`.
    fn from_u64(value: u64) -> Self;

    /// Accepts only values already in `[0, p)`.
    fn from_canonical(value: u64) -> Option<Self>;

    fn to_canonical(self) -> u64;

    /// Generator of the subgroup of order `2^TWO_ADICITY`.
    fn two_adic_generator() -> Self;

    fn random<R: Rng + ?Sized>(rng: &mut R) -> Self;

    fn from_i64(value: i64) -> Self {
        if value >= 0 {
            Self::from_u64(value as u64)
        } else {
            -Self::from_u64(value.unsigned_abs())
        }
    }

    /// Centered lift into `(-p/2, p/2]`.
    fn to_signed(self) -> i64 {
        let v = self.to_canonical();
        if v > Self::MODULUS / 2 {
            -((Self::MODULUS - v) as i64)
        } else {
            v as i64
        }
    }

    fn pow(self, mut exp: u64) -> Self {
        let mut base = self;
        let mut acc = Self::one();
        while exp > 0 {
            if exp & 1 == 1 {
                acc *= base;
            }
            base *= base;
            exp >>= 1;
        }
        acc
    }

    fn inverse(self) -> Option<Self> {
        if self.is_zero() {
            None
        } else {
            Some(self.pow(Self::MODULUS - 2))
        }
    }

    /// Primitive `2^log_size`-th root of unity.
    fn root_of_unity(log_size: u32) -> Result<Self, FieldError> {
        if log_size > Self::TWO_ADICITY {
            return Err(FieldError::SizeExceedsTwoAdicity {
                log_size,
                two_adicity: Self::TWO_ADICITY,
            });
        }
        let mut g = Self::two_adic_generator();
        for _ in log_size..Self::TWO_ADICITY {
            g = g * g;
        }
        Ok(g)
    }

    fn params() -> FieldParams {
        FieldParams {
            modulus: Self::MODULUS,
            two_adicity: Self::TWO_ADICITY,
            generator: Self::two_adic_generator().to_canonical(),
        }
    }

    fn to_le_bytes(self) -> [u8; ELEMENT_BYTES] {
        self.to_canonical().to_le_bytes()
    }

    fn from_le_bytes(bytes: &[u8]) -> Result<Self, FieldError> {
        let arr: [u8; ELEMENT_BYTES] = bytes.try_into().map_err(|_| FieldError::BadLength {
            expected: ELEMENT_BYTES,
            got: bytes.len(),
        })?;
        let value = u64::from_le_bytes(arr);
        Self::from_canonical(value).ok_or(FieldError::NonCanonical {
            value,
            modulus: Self::MODULUS,
        })
    }
}

/// Compile-time parameters of a concrete prime field.
pub trait FieldConfig:
    'static + Copy + Clone + fmt::Debug + Default + PartialEq + Eq + PartialOrd + Ord + Hash + Send + Sync
{
    const MODULUS: u64;
    const TWO_ADICITY: u32;
    /// Element of multiplicative order exactly `2^TWO_ADICITY`.
    const TWO_ADIC_GENERATOR: u64;
    const NAME: &'static str;

    fn reduce128(x: u128) -> u64 {
        (x % Self::MODULUS as u128) as u64
    }
}

/// `p = 2^64 - 2^32 + 1`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GoldilocksConfig;

const GOLDILOCKS_EPSILON: u64 = 0xffff_ffff;

impl FieldConfig for GoldilocksConfig {
    const MODULUS: u64 = 0xffff_ffff_0000_0001;
    const TWO_ADICITY: u32 = 32;
    // 7^((p-1)/2^32); 7 generates the full multiplicative group.
    const TWO_ADIC_GENERATOR: u64 = 1_753_635_133_440_165_772;
    const NAME: &'static str = "goldilocks";

    #[inline]
    fn reduce128(x: u128) -> u64 {
        // 2^64 = 2^32 - 1 and 2^96 = -1 (mod p).
        let lo = x as u64;
        let hi = (x >> 64) as u64;
        let hi_hi = hi >> 32;
        let hi_lo = hi & GOLDILOCKS_EPSILON;
        let (mut t0, borrow) = lo.overflowing_sub(hi_hi);
        if borrow {
            t0 = t0.wrapping_sub(GOLDILOCKS_EPSILON);
        }
        let t1 = hi_lo * GOLDILOCKS_EPSILON;
        let (mut r, carry) = t0.overflowing_add(t1);
        if carry {
            r = r.wrapping_add(GOLDILOCKS_EPSILON);
        }
        if r >= Self::MODULUS {
            r -= Self::MODULUS;
        }
        r
    }
}

/// `p = 257`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Toy257Config;

impl FieldConfig for Toy257Config {
    const MODULUS: u64 = 257;
    const TWO_ADICITY: u32 = 8;
    const TWO_ADIC_GENERATOR: u64 = 3;
    const NAME: &'static str = "toy257";

    #[inline]
    fn reduce128(x: u128) -> u64 {
        // operands are canonical, so the product fits in 17 bits
        (x as u64) % Self::MODULUS
    }
}

/// Element of the prime field described by `C`, stored canonically.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fp<C: FieldConfig> {
    value: u64,
    _config: PhantomData<C>,
}

impl<C: FieldConfig> Fp<C> {
    #[inline]
    const fn new_unchecked(value: u64) -> Self {
        Fp {
            value,
            _config: PhantomData,
        }
    }
}

impl<C: FieldConfig> fmt::Debug for Fp<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl<C: FieldConfig> fmt::Display for Fp<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl<C: FieldConfig> Add for Fp<C> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        let (s, carry) = self.value.overflowing_add(rhs.value);
        if carry || s >= C::MODULUS {
            Self::new_unchecked(s.wrapping_sub(C::MODULUS))
        } else {
            Self::new_unchecked(s)
        }
    }
}

impl<C: FieldConfig> Sub for Fp<C> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        let (d, borrow) = self.value.overflowing_sub(rhs.value);
        if borrow {
            Self::new_unchecked(d.wrapping_add(C::MODULUS))
        } else {
            Self::new_unchecked(d)
        }
    }
}

impl<C: FieldConfig> Mul for Fp<C> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        Self::new_unchecked(C::reduce128(self.value as u128 * rhs.value as u128))
    }
}

impl<C: FieldConfig> Neg for Fp<C> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        if self.value == 0 {
            self
        } else {
            Self::new_unchecked(C::MODULUS - self.value)
        }
    }
}

impl<C: FieldConfig> Div for Fp<C> {
    type Output = Self;
    /// Panics on division by zero, like integer division.
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Self) -> Self {
        self * rhs.inverse().expect("division by zero in prime field")
    }
}

impl<C: FieldConfig> AddAssign for Fp<C> {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl<C: FieldConfig> SubAssign for Fp<C> {
    #[inline]
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl<C: FieldConfig> MulAssign for Fp<C> {
    #[inline]
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

impl<C: FieldConfig> Sum for Fp<C> {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::zero(), |a, b| a + b)
    }
}

impl<'a, C: FieldConfig> Sum<&'a Fp<C>> for Fp<C> {
    fn sum<I: Iterator<Item = &'a Self>>(iter: I) -> Self {
        iter.fold(Self::zero(), |a, b| a + *b)
    }
}

impl<C: FieldConfig> Product for Fp<C> {
    fn product<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::one(), |a, b| a * b)
    }
}

impl<C: FieldConfig> Zero for Fp<C> {
    fn zero() -> Self {
        Self::new_unchecked(0)
    }
    fn is_zero(&self) -> bool {
        self.value == 0
    }
}

impl<C: FieldConfig> One for Fp<C> {
    fn one() -> Self {
        Self::new_unchecked(1)
    }
}

impl<C: FieldConfig> PrimeField for Fp<C> {
    const MODULUS: u64 = C::MODULUS;
    const TWO_ADICITY: u32 = C::TWO_ADICITY;
    const NAME: &'static str = C::NAME;

    #[inline]
    fn from_u64(value: u64) -> Self {
        Self::new_unchecked(value % C::MODULUS)
    }

    fn from_canonical(value: u64) -> Option<Self> {
        (value < C::MODULUS).then(|| Self::new_unchecked(value))
    }

    #[inline]
    fn to_canonical(self) -> u64 {
        self.value
    }

    fn two_adic_generator() -> Self {
        Self::new_unchecked(C::TWO_ADIC_GENERATOR)
    }

    fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::new_unchecked(rng.gen_range(0..C::MODULUS))
    }
}

/// Samples `len` independent uniform elements.
pub fn random_vec<F: PrimeField, R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<F> {
    (0..len).map(|_| F::random(rng)).collect()
}

/// Canonical concatenated encoding of a slice of elements.
pub fn encode_elements<F: PrimeField>(values: &[F], out: &mut Vec<u8>) {
    out.reserve(values.len() * ELEMENT_BYTES);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn decode_elements<F: PrimeField>(bytes: &[u8]) -> Result<Vec<F>, FieldError> {
    if bytes.len() % ELEMENT_BYTES != 0 {
        return Err(FieldError::BadLength {
            expected: bytes.len().next_multiple_of(ELEMENT_BYTES),
            got: bytes.len(),
        });
    }
    bytes.chunks_exact(ELEMENT_BYTES).map(F::from_le_bytes).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{Goldilocks, Toy257};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
        (a as u128 * b as u128 % m as u128) as u64
    }

    fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
        let mut acc = 1u64 % m;
        b %= m;
        while e > 0 {
            if e & 1 == 1 {
                acc = mul_mod(acc, b, m);
            }
            b = mul_mod(b, b, m);
            e >>= 1;
        }
        acc
    }

    // Deterministic Miller-Rabin, exact for all u64 with these bases.
    fn is_prime_u64(n: u64) -> bool {
        if n < 2 {
            return false;
        }
        for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
            if n % p == 0 {
                return n == p;
            }
        }
        let mut d = n - 1;
        let mut s = 0;
        while d % 2 == 0 {
            d /= 2;
            s += 1;
        }
        'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
            let mut x = pow_mod(a, d, n);
            if x == 1 || x == n - 1 {
                continue;
            }
            for _ in 1..s {
                x = mul_mod(x, x, n);
                if x == n - 1 {
                    continue 'witness;
                }
            }
            return false;
        }
        true
    }

    fn check_params<F: PrimeField>(min_bits: u32, min_adicity: u32) {
        let p = F::MODULUS;
        assert!(is_prime_u64(p), "{} modulus not prime", F::NAME);
        assert!(64 - p.leading_zeros() >= min_bits);
        let adicity = (p - 1).trailing_zeros();
        assert_eq!(adicity, F::TWO_ADICITY);
        assert!(adicity >= min_adicity);
        let g = F::two_adic_generator();
        assert_eq!(g.pow(1u64 << F::TWO_ADICITY), F::one());
        assert_ne!(g.pow(1u64 << (F::TWO_ADICITY - 1)), F::one());
    }

    #[test]
    fn production_field_is_prime_with_large_two_adicity() {
        check_params::<Goldilocks>(61, 10);
        assert_eq!(Goldilocks::MODULUS as u128, (1u128 << 64) - (1u128 << 32) + 1);
    }

    #[test]
    fn toy_field_is_prime_with_two_adicity_eight() {
        check_params::<Toy257>(9, 5);
        assert_eq!(Toy257::TWO_ADICITY, 8);
    }

    #[test]
    fn goldilocks_reduction_matches_u128_modulo() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let p = Goldilocks::MODULUS as u128;
        let edge = [0u128, 1, p - 1, p, p + 1, u64::MAX as u128, (p - 1) * (p - 1)];
        for x in edge {
            assert_eq!(GoldilocksConfig::reduce128(x) as u128, x % p, "x = {x}");
        }
        for _ in 0..100_000 {
            let a: u64 = rng.gen_range(0..Goldilocks::MODULUS);
            let b: u64 = rng.gen_range(0..Goldilocks::MODULUS);
            let x = a as u128 * b as u128;
            assert_eq!(GoldilocksConfig::reduce128(x) as u128, x % p);
        }
    }

    fn field_axioms<F: PrimeField>(seed: u64) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        for _ in 0..10_000 {
            let (a, b, c) = (F::random(&mut rng), F::random(&mut rng), F::random(&mut rng));
            assert_eq!((a + b) + c, a + (b + c));
            assert_eq!((a * b) * c, a * (b * c));
            assert_eq!(a * (b + c), a * b + a * c);
            assert_eq!(a - b + b, a);
            assert_eq!(a + (-a), F::zero());
            if let Some(inv) = a.inverse() {
                assert_eq!(a * inv, F::one());
            } else {
                assert!(a.is_zero());
            }
        }
    }

    #[test]
    fn field_axioms_hold_on_random_samples() {
        field_axioms::<Goldilocks>(2);
        field_axioms::<Toy257>(3);
    }

    #[test]
    fn serialization_rejects_non_canonical_values() {
        let bytes = Goldilocks::MODULUS.to_le_bytes();
        assert!(matches!(
            Goldilocks::from_le_bytes(&bytes),
            Err(FieldError::NonCanonical { .. })
        ));
        let v = Goldilocks::from_u64(123456789);
        assert_eq!(Goldilocks::from_le_bytes(&v.to_le_bytes()).unwrap(), v);
        assert_eq!(v.to_le_bytes(), 123456789u64.to_le_bytes());
        assert!(Toy257::from_le_bytes(&257u64.to_le_bytes()).is_err());
        assert!(Toy257::from_le_bytes(&[1, 2, 3]).is_err());
    }

    #[test]
    fn signed_lift_roundtrips() {
        for v in [-128i64, -1, 0, 1, 128] {
            assert_eq!(Toy257::from_i64(v).to_signed(), v);
        }
        for v in [i64::MIN / 2, -5, 0, 7, i64::MAX / 2] {
            assert_eq!(Goldilocks::from_i64(v).to_signed(), v);
        }
    }
}
