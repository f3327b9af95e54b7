//! Forward-mode differentiation over three seed directions.
//!
//! `DualValue<N>` carries a value and its partials with respect to x, y and
//! z. The inner type `N` is either a plain [`Real`] (first derivatives) or
//! another `DualValue` (second derivatives), so the same field evaluator
//! produces values, gradients and Hessians.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::scalar::Real;

/// Number type a field can be evaluated in.
///
/// Branching decisions (min/max, abs, shell sign) are taken on
/// [`FieldNum::real`], so every instantiation follows the same branch and
/// the value part is bit-identical to plain evaluation.
pub trait FieldNum<T: Real>:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
{
    fn constant(v: T) -> Self;
    fn real(&self) -> T;
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn ln(self) -> Self;
    /// `self ^ exponent` for non-integer exponents.
    fn powf(self, exponent: Self) -> Self;
    /// True when every derivative component is exactly zero.
    fn is_constant(&self) -> bool;

    /// Integer power by repeated squaring; exact for small exponents and
    /// differentiable at zero.
    fn powi(self, n: i32) -> Self {
        let mut result = Self::constant(T::one());
        let mut base = self;
        let mut e = n.unsigned_abs();
        while e > 0 {
            if e & 1 == 1 {
                result = result * base;
            }
            e >>= 1;
            if e > 0 {
                base = base * base;
            }
        }
        if n < 0 {
            Self::constant(T::one()) / result
        } else {
            result
        }
    }

    /// Active-branch minimum; ties go to `self`.
    fn min_of(self, other: Self) -> Self {
        if other.real() < self.real() {
            other
        } else {
            self
        }
    }

    /// Active-branch maximum; ties go to `self`.
    fn max_of(self, other: Self) -> Self {
        if other.real() > self.real() {
            other
        } else {
            self
        }
    }
}

impl<T: Real> FieldNum<T> for T {
    #[inline]
    fn constant(v: T) -> Self {
        v
    }
    #[inline]
    fn real(&self) -> T {
        *self
    }
    #[inline]
    fn sqrt(self) -> Self {
        num_traits::Float::sqrt(self)
    }
    #[inline]
    fn abs(self) -> Self {
        num_traits::Float::abs(self)
    }
    #[inline]
    fn sin(self) -> Self {
        num_traits::Float::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        num_traits::Float::cos(self)
    }
    #[inline]
    fn ln(self) -> Self {
        num_traits::Float::ln(self)
    }
    #[inline]
    fn powf(self, exponent: Self) -> Self {
        num_traits::Float::powf(self, exponent)
    }
    #[inline]
    fn is_constant(&self) -> bool {
        true
    }
}

/// A value together with its partial derivatives along x, y and z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualValue<N> {
    pub value: N,
    pub partials: [N; 3],
}

impl<N: Copy> DualValue<N> {
    pub fn new(value: N, partials: [N; 3]) -> Self {
        Self { value, partials }
    }

    #[inline]
    fn map_partials(self, f: impl Fn(N) -> N) -> [N; 3] {
        [f(self.partials[0]), f(self.partials[1]), f(self.partials[2])]
    }
}

impl<T: Real> DualValue<T> {
    /// Seeds the three coordinates of a point as independent variables.
    pub fn seed(p: [T; 3]) -> [Self; 3] {
        let (o, z) = (T::one(), T::zero());
        [
            Self::new(p[0], [o, z, z]),
            Self::new(p[1], [z, o, z]),
            Self::new(p[2], [z, z, o]),
        ]
    }
}

impl<T: Real> DualValue<DualValue<T>> {
    /// Seeds a point for second-order evaluation: the outer partials and
    /// the inner partials both run over (x, y, z).
    pub fn seed2(p: [T; 3]) -> [Self; 3] {
        let inner = DualValue::seed(p);
        let zero = DualValue::new(T::zero(), [T::zero(); 3]);
        let one = DualValue::new(T::one(), [T::zero(); 3]);
        [
            Self::new(inner[0], [one, zero, zero]),
            Self::new(inner[1], [zero, one, zero]),
            Self::new(inner[2], [zero, zero, one]),
        ]
    }

    /// Splits a second-order result into value, gradient and Hessian.
    pub fn split(&self) -> (T, [T; 3], [[T; 3]; 3]) {
        let grad = self.value.partials;
        let hess = [
            self.partials[0].partials,
            self.partials[1].partials,
            self.partials[2].partials,
        ];
        (self.value.value, grad, hess)
    }
}

impl<N: Copy + Add<Output = N>> Add for DualValue<N> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(
            self.value + o.value,
            [
                self.partials[0] + o.partials[0],
                self.partials[1] + o.partials[1],
                self.partials[2] + o.partials[2],
            ],
        )
    }
}

impl<N: Copy + Sub<Output = N>> Sub for DualValue<N> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(
            self.value - o.value,
            [
                self.partials[0] - o.partials[0],
                self.partials[1] - o.partials[1],
                self.partials[2] - o.partials[2],
            ],
        )
    }
}

impl<N: Copy + Add<Output = N> + Mul<Output = N>> Mul for DualValue<N> {
    type Output = Self;
    #[inline]
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, o: Self) -> Self {
        let d = |i: usize| self.partials[i] * o.value + self.value * o.partials[i];
        Self::new(self.value * o.value, [d(0), d(1), d(2)])
    }
}

impl<N> Div for DualValue<N>
where
    N: Copy + Sub<Output = N> + Mul<Output = N> + Div<Output = N>,
{
    type Output = Self;
    #[inline]
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Self) -> Self {
        let q = self.value / o.value;
        let d = |i: usize| (self.partials[i] - q * o.partials[i]) / o.value;
        Self::new(q, [d(0), d(1), d(2)])
    }
}

impl<N: Copy + Neg<Output = N>> Neg for DualValue<N> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.value, [-self.partials[0], -self.partials[1], -self.partials[2]])
    }
}

impl<T: Real, N: FieldNum<T>> FieldNum<T> for DualValue<N> {
    #[inline]
    fn constant(v: T) -> Self {
        let z = N::constant(T::zero());
        Self::new(N::constant(v), [z, z, z])
    }

    #[inline]
    fn real(&self) -> T {
        self.value.real()
    }

    fn sqrt(self) -> Self {
        let s = self.value.sqrt();
        if self.is_constant() {
            return Self::new(s, self.partials);
        }
        let two_s = s + s;
        Self::new(s, self.map_partials(|d| d / two_s))
    }

    fn abs(self) -> Self {
        if self.value.real() < T::zero() {
            -self
        } else {
            self
        }
    }

    fn sin(self) -> Self {
        let c = self.value.cos();
        Self::new(self.value.sin(), self.map_partials(|d| d * c))
    }

    fn cos(self) -> Self {
        let s = -self.value.sin();
        Self::new(self.value.cos(), self.map_partials(|d| d * s))
    }

    fn ln(self) -> Self {
        let v = self.value;
        Self::new(v.ln(), self.map_partials(|d| d / v))
    }

    fn powf(self, exponent: Self) -> Self {
        let value = self.value.powf(exponent.value);
        let one = N::constant(T::one());
        // d(a^b) = b a^(b-1) da + a^b ln(a) db; the log term only when b varies.
        let base_coeff = exponent.value * self.value.powf(exponent.value - one);
        let mut partials = self.map_partials(|d| d * base_coeff);
        if !exponent.is_constant() {
            let log_coeff = value * self.value.ln();
            for (p, db) in partials.iter_mut().zip(exponent.partials) {
                *p = *p + db * log_coeff;
            }
        }
        Self::new(value, partials)
    }

    fn is_constant(&self) -> bool {
        self.partials
            .iter()
            .all(|p| p.real() == T::zero() && p.is_constant())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule() {
        let [x, y, _] = DualValue::seed([2.0, 3.0, 0.0]);
        let p = x * y;
        assert_eq!(p.value, 6.0);
        assert_eq!(p.partials, [3.0, 2.0, 0.0]);
    }

    #[test]
    fn quotient_rule() {
        let [x, y, _] = DualValue::seed([2.0, 4.0, 0.0]);
        let q = x / y;
        assert_eq!(q.value, 0.5);
        assert_eq!(q.partials, [0.25, -0.125, 0.0]);
    }

    #[test]
    fn powi_at_zero_is_differentiable() {
        let [x, _, _] = DualValue::seed([0.0, 0.0, 0.0]);
        let p = FieldNum::<f64>::powi(x, 2);
        assert_eq!(p.value, 0.0);
        assert_eq!(p.partials[0], 0.0);
        assert!(!p.partials[0].is_nan());
    }

    #[test]
    fn powi_negative_exponent() {
        let [x, _, _] = DualValue::seed([2.0, 0.0, 0.0]);
        let p = FieldNum::<f64>::powi(x, -2);
        assert_eq!(p.value, 0.25);
        assert_eq!(p.partials[0], -0.25);
    }

    #[test]
    fn second_order_seed_gives_hessian() {
        // f = x^2 y + z^3 at (1, 2, 3)
        let [x, y, z] = DualValue::seed2([1.0, 2.0, 3.0]);
        let f = x * x * y + z * z * z;
        let (v, g, h) = f.split();
        assert_eq!(v, 29.0);
        assert_eq!(g, [4.0, 1.0, 27.0]);
        assert_eq!(h, [[4.0, 2.0, 0.0], [2.0, 0.0, 0.0], [0.0, 0.0, 18.0]]);
    }

    #[test]
    fn sqrt_of_constant_zero_has_zero_partials() {
        let c = <DualValue<f64> as FieldNum<f64>>::constant(0.0);
        let s = c.sqrt();
        assert_eq!(s.partials, [0.0; 3]);
    }
}
