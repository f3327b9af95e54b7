//! Implicit scalar fields `f: R³ → R`.
//!
//! Sign convention for every kind: negative inside, positive outside, zero
//! on the surface. Gradients are exact (forward-mode) except where a shell
//! is nested inside another shell, whose Hessian falls back to central
//! differences.

pub mod dual;
pub mod expr;

use thiserror::Error;

use crate::scalar::Real;
use crate::vec3::Vec3;
use dual::{DualValue, FieldNum};
pub use expr::{parse_expr, FieldExpr, ParseError};

/// Gradient magnitude below which shell normalization is skipped.
pub const EPS_GRAD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("shell thickness must be positive and finite, got {0}")]
    InvalidThickness(f64),
    #[error("sphere radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("box max corner must exceed min corner on every axis")]
    InvalidBox,
    #[error("half-space normal must be nonzero")]
    ZeroNormal,
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// Side information collected while evaluating; fields themselves stay
/// immutable.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalDiagnostics {
    /// Shell evaluations where `|∇f| < EPS_GRAD` and the unnormalized
    /// fallback was used.
    pub shell_degenerate: usize,
}

impl EvalDiagnostics {
    pub fn merge(&mut self, other: EvalDiagnostics) {
        self.shell_degenerate += other.shell_degenerate;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScalarField<T> {
    Expr(FieldExpr<T>),
    /// Barth's sextic `P6 − α K²`.
    Barth,
    /// `|p − c|² − r²`.
    Sphere { center: Vec3<T>, radius: T },
    /// Max-norm box: `max_i(|p_i − c_i| − h_i)`.
    Box { min: Vec3<T>, max: Vec3<T> },
    /// `n·p − offset`, `n` unit length.
    HalfSpace { normal: Vec3<T>, offset: T },
    Union(Box<ScalarField<T>>, Box<ScalarField<T>>),
    Intersect(Box<ScalarField<T>>, Box<ScalarField<T>>),
    Complement(Box<ScalarField<T>>),
    Shell { inner: Box<ScalarField<T>>, thickness: T },
}

impl<T: Real> ScalarField<T> {
    pub fn parse(source: &str) -> Result<Self, FieldError> {
        Ok(ScalarField::Expr(parse_expr(source)?))
    }

    pub fn barth() -> Self {
        ScalarField::Barth
    }

    pub fn sphere(center: Vec3<T>, radius: T) -> Result<Self, FieldError> {
        if !(radius > T::zero() && radius.is_finite()) {
            return Err(FieldError::InvalidRadius(radius.to_f64_lossy()));
        }
        Ok(ScalarField::Sphere { center, radius })
    }

    pub fn cuboid(min: Vec3<T>, max: Vec3<T>) -> Result<Self, FieldError> {
        if !(max.x > min.x && max.y > min.y && max.z > min.z) {
            return Err(FieldError::InvalidBox);
        }
        Ok(ScalarField::Box { min, max })
    }

    pub fn half_space(normal: Vec3<T>, offset: T) -> Result<Self, FieldError> {
        let normal = normal.normalized().ok_or(FieldError::ZeroNormal)?;
        Ok(ScalarField::HalfSpace { normal, offset })
    }

    pub fn union(self, other: Self) -> Self {
        ScalarField::Union(Box::new(self), Box::new(other))
    }

    pub fn intersect(self, other: Self) -> Self {
        ScalarField::Intersect(Box::new(self), Box::new(other))
    }

    pub fn complement(self) -> Self {
        ScalarField::Complement(Box::new(self))
    }

    /// Thickened band `|f/|∇f|| − thickness/2` around the zero set.
    pub fn shell(self, thickness: T) -> Result<Self, FieldError> {
        if !(thickness > T::zero() && thickness.is_finite()) {
            return Err(FieldError::InvalidThickness(thickness.to_f64_lossy()));
        }
        Ok(ScalarField::Shell {
            inner: Box::new(self),
            thickness,
        })
    }

    pub fn eval(&self, p: Vec3<T>) -> T {
        self.eval_with_diagnostics(p, &mut EvalDiagnostics::default())
    }

    pub fn eval_with_diagnostics(&self, p: Vec3<T>, diag: &mut EvalDiagnostics) -> T {
        self.eval_num(&p.to_array(), p, diag)
    }

    /// Value and exact gradient.
    pub fn eval_grad(&self, p: Vec3<T>) -> (T, Vec3<T>) {
        let seeded = DualValue::seed(p.to_array());
        let d: DualValue<T> = self.eval_num(&seeded, p, &mut EvalDiagnostics::default());
        (d.value, Vec3::from_array(d.partials))
    }

    /// Value, gradient and Hessian.
    pub fn eval_hessian(&self, p: Vec3<T>) -> (T, Vec3<T>, [[T; 3]; 3]) {
        let seeded = DualValue::seed2(p.to_array());
        let d: DualValue<DualValue<T>> = self.eval_num(&seeded, p, &mut EvalDiagnostics::default());
        let (v, g, h) = d.split();
        (v, Vec3::from_array(g), h)
    }

    /// Evaluates in any supported number type. `at` is the real point the
    /// seeded coordinates `p` sit on; shell nodes need it to re-seed.
    pub(crate) fn eval_num<N: ShellEval<T>>(&self, p: &[N; 3], at: Vec3<T>, diag: &mut EvalDiagnostics) -> N {
        match self {
            ScalarField::Expr(e) => e.eval_num(p),
            ScalarField::Barth => barth(p),
            ScalarField::Sphere { center, radius } => {
                let d = |i: usize| p[i] - N::constant(center[i]);
                let sq = |v: N| v * v;
                sq(d(0)) + sq(d(1)) + sq(d(2)) - N::constant(*radius * *radius)
            }
            ScalarField::Box { min, max } => {
                let two = T::two();
                let axis = |i: usize| {
                    let c = (min[i] + max[i]) / two;
                    let h = (max[i] - min[i]) / two;
                    (p[i] - N::constant(c)).abs() - N::constant(h)
                };
                axis(0).max_of(axis(1)).max_of(axis(2))
            }
            ScalarField::HalfSpace { normal, offset } => {
                p[0] * N::constant(normal.x) + p[1] * N::constant(normal.y) + p[2] * N::constant(normal.z)
                    - N::constant(*offset)
            }
            ScalarField::Union(a, b) => a.eval_num(p, at, diag).min_of(b.eval_num(p, at, diag)),
            ScalarField::Intersect(a, b) => a.eval_num(p, at, diag).max_of(b.eval_num(p, at, diag)),
            ScalarField::Complement(a) => -a.eval_num(p, at, diag),
            ScalarField::Shell { inner, thickness } => N::shell(inner, at, *thickness / T::two(), diag),
        }
    }
}

/// Barth's sextic with τ the golden ratio and α = (2 + √5)/4.
///
/// The three product factors and the three squares are combined in sorted
/// order, which makes the result exactly invariant under coordinate
/// permutations (not only up to rounding).
fn barth<T: Real, N: FieldNum<T>>(p: &[N; 3]) -> N {
    let tau = expr::tau_golden::<T>();
    let tau2 = N::constant(tau * tau);
    let alpha = N::constant((T::two() + T::lit(5.0).sqrt()) / T::lit(4.0));
    let sq = [p[0] * p[0], p[1] * p[1], p[2] * p[2]];
    let mut factors = [
        tau2 * sq[0] - sq[1],
        tau2 * sq[1] - sq[2],
        tau2 * sq[2] - sq[0],
    ];
    sort3(&mut factors);
    let p6 = factors[0] * factors[1] * factors[2];
    let mut squares = sq;
    sort3(&mut squares);
    let k = squares[0] + squares[1] + squares[2] - N::constant(T::one());
    p6 - alpha * k * k
}

fn sort3<T: Real, N: FieldNum<T>>(v: &mut [N; 3]) {
    v.sort_by(|a, b| a.real().partial_cmp(&b.real()).unwrap_or(std::cmp::Ordering::Equal));
}

/// Number types that can evaluate a shell node.
///
/// A shell at derivative order k needs its inner field at order k + 1, so
/// each order is implemented separately rather than recursively.
pub trait ShellEval<T: Real>: FieldNum<T> {
    fn shell(inner: &ScalarField<T>, at: Vec3<T>, half_thickness: T, diag: &mut EvalDiagnostics) -> Self;
}

/// Value of the shell band from the inner value and gradient.
fn shell_value<T: Real>(f: T, grad: [T; 3], half: T, diag: &mut EvalDiagnostics) -> (T, Option<T>) {
    let n = (grad[0] * grad[0] + grad[1] * grad[1] + grad[2] * grad[2]).sqrt();
    if n < T::lit(EPS_GRAD) {
        diag.shell_degenerate += 1;
        (f.abs() - half, None)
    } else {
        ((f / n).abs() - half, Some(n))
    }
}

impl<T: Real> ShellEval<T> for T {
    fn shell(inner: &ScalarField<T>, at: Vec3<T>, half: T, diag: &mut EvalDiagnostics) -> Self {
        let seeded = DualValue::seed(at.to_array());
        let d: DualValue<T> = inner.eval_num(&seeded, at, diag);
        shell_value(d.value, d.partials, half, diag).0
    }
}

impl<T: Real> ShellEval<T> for DualValue<T> {
    fn shell(inner: &ScalarField<T>, at: Vec3<T>, half: T, diag: &mut EvalDiagnostics) -> Self {
        let seeded = DualValue::seed2(at.to_array());
        let d: DualValue<DualValue<T>> = inner.eval_num(&seeded, at, diag);
        let (f, g, h) = d.split();
        let (value, norm) = shell_value(f, g, half, diag);
        let sign = if f < T::zero() { -T::one() } else { T::one() };
        let partials = match norm {
            None => [sign * g[0], sign * g[1], sign * g[2]],
            Some(n) => {
                // ∇(f/n) = ∇f/n − f (H ∇f)/n³
                let n3 = n * n * n;
                let hg = |i: usize| h[i][0] * g[0] + h[i][1] * g[1] + h[i][2] * g[2];
                let d = |i: usize| sign * (g[i] / n - f * hg(i) / n3);
                [d(0), d(1), d(2)]
            }
        };
        DualValue::new(value, partials)
    }
}

impl<T: Real> ShellEval<T> for DualValue<DualValue<T>> {
    fn shell(inner: &ScalarField<T>, at: Vec3<T>, half: T, diag: &mut EvalDiagnostics) -> Self {
        let first = <DualValue<T> as ShellEval<T>>::shell(inner, at, half, diag);
        // Third derivatives of the inner field are not tracked; the Hessian
        // of a nested shell is a central difference of its exact gradient.
        let step = T::lit(1e-5) * T::one().max(at.norm());
        let mut scratch = EvalDiagnostics::default();
        let mut rows = [DualValue::new(T::zero(), [T::zero(); 3]); 3];
        for (i, row) in rows.iter_mut().enumerate() {
            let mut e = Vec3::zero();
            match i {
                0 => e.x = step,
                1 => e.y = step,
                _ => e.z = step,
            }
            let plus = <DualValue<T> as ShellEval<T>>::shell(inner, at + e, half, &mut scratch);
            let minus = <DualValue<T> as ShellEval<T>>::shell(inner, at - e, half, &mut scratch);
            let two_h = step + step;
            let hess_row = [
                (plus.partials[0] - minus.partials[0]) / two_h,
                (plus.partials[1] - minus.partials[1]) / two_h,
                (plus.partials[2] - minus.partials[2]) / two_h,
            ];
            *row = DualValue::new(first.partials[i], hess_row);
        }
        DualValue::new(first, rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64, z: f64) -> Vec3<f64> {
        Vec3::new(x, y, z)
    }

    #[test]
    fn barth_at_origin_is_minus_alpha() {
        let expected = -(2.0 + 5f64.sqrt()) / 4.0;
        assert!((ScalarField::<f64>::barth().eval(v(0.0, 0.0, 0.0)) - expected).abs() < 1e-15);
    }

    #[test]
    fn barth_vanishes_on_axis_unit_points() {
        let f = ScalarField::<f64>::barth();
        assert_eq!(f.eval(v(1.0, 0.0, 0.0)), 0.0);
        assert_eq!(f.eval(v(0.0, 1.0, 0.0)), 0.0);
        assert_eq!(f.eval(v(0.0, 0.0, 1.0)), 0.0);
    }

    #[test]
    fn barth_cyclic_symmetry_is_exact() {
        let f = ScalarField::<f64>::barth();
        assert_eq!(f.eval(v(0.3, 0.5, 0.7)), f.eval(v(0.5, 0.7, 0.3)));
        assert_eq!(f.eval(v(0.3, 0.5, 0.7)), f.eval(v(-0.3, 0.5, 0.7)));
    }

    #[test]
    fn sphere_value_outside() {
        let s = ScalarField::sphere(Vec3::zero(), 1.0).unwrap();
        assert_eq!(s.eval(v(2.0, 0.0, 0.0)), 3.0);
    }

    #[test]
    fn polynomial_gradient() {
        let f = ScalarField::<f64>::parse("x^2+y^2+z^2-1").unwrap();
        let (val, g) = f.eval_grad(v(1.0, 2.0, 3.0));
        assert_eq!(val, 13.0);
        assert_eq!(g, v(2.0, 4.0, 6.0));
    }

    #[test]
    fn union_takes_active_branch_gradient() {
        let s = ScalarField::sphere(Vec3::zero(), 1.0).unwrap();
        let b = ScalarField::cuboid(v(2.0, 2.0, 2.0), v(3.0, 3.0, 3.0)).unwrap();
        let u = s.clone().union(b);
        let p = v(0.2, 0.1, -0.3);
        assert_eq!(u.eval_grad(p), s.eval_grad(p));
    }

    #[test]
    fn csg_laws_pointwise() {
        let a = ScalarField::sphere(Vec3::zero(), 1.0).unwrap();
        let b = ScalarField::parse("x - 0.25").unwrap();
        let p = v(0.4, -0.2, 0.1);
        let (fa, fb) = (a.eval(p), b.eval(p));
        assert_eq!(a.clone().union(b.clone()).eval(p), fa.min(fb));
        assert_eq!(a.clone().intersect(b.clone()).eval(p), fa.max(fb));
        assert_eq!(a.complement().eval(p), -fa);
    }

    #[test]
    fn min_tie_goes_to_first_argument() {
        let f = ScalarField::<f64>::parse("min(x, y)").unwrap();
        let (_, g) = f.eval_grad(v(0.5, 0.5, 0.0));
        assert_eq!(g, v(1.0, 0.0, 0.0));
    }

    #[test]
    fn shell_of_distance_field() {
        let inner = ScalarField::<f64>::parse("sqrt(x^2+y^2+z^2) - 1").unwrap();
        let shell = inner.shell(0.2).unwrap();
        assert!(shell.eval(v(0.9, 0.0, 0.0)).abs() < 1e-12);
        assert!(shell.eval(v(0.0, 1.1, 0.0)).abs() < 1e-12);
        assert!(shell.eval(v(1.0, 0.0, 0.0)) < 0.0);
        assert!(shell.eval(v(0.0, 0.0, 0.5)) > 0.0);
    }

    #[test]
    fn shell_of_quadratic_sphere() {
        // |r²−1|/(2r) = 0.1  ⇒  r = ±0.1 + sqrt(0.01 + 1)
        let inner = ScalarField::<f64>::parse("x^2+y^2+z^2-1").unwrap();
        let shell = inner.shell(0.2).unwrap();
        let r_in = -0.1 + 1.01f64.sqrt();
        let r_out = 0.1 + 1.01f64.sqrt();
        assert!((r_in - 0.9050).abs() < 1e-4 && (r_out - 1.1050).abs() < 1e-4);
        assert!(shell.eval(v(r_in, 0.0, 0.0)).abs() < 1e-12);
        assert!(shell.eval(v(0.0, 0.0, r_out)).abs() < 1e-12);
    }

    #[test]
    fn zero_thickness_rejected() {
        assert!(matches!(
            ScalarField::<f64>::barth().shell(0.0),
            Err(FieldError::InvalidThickness(_))
        ));
    }

    #[test]
    fn shell_degeneracy_is_flagged() {
        let shell = ScalarField::<f64>::parse("x^2").unwrap().shell(0.2).unwrap();
        let mut diag = EvalDiagnostics::default();
        let val = shell.eval_with_diagnostics(v(0.0, 0.0, 0.0), &mut diag);
        assert_eq!(val, -0.1);
        assert_eq!(diag.shell_degenerate, 1);
    }

    #[test]
    fn shell_gradient_matches_finite_difference() {
        let shell = ScalarField::<f64>::barth().shell(0.1).unwrap();
        let p = v(0.31, 0.52, 0.77);
        let (val, g) = shell.eval_grad(p);
        assert_eq!(val, shell.eval(p));
        let h = 1e-6;
        for i in 0..3 {
            let mut e = Vec3::zero();
            match i {
                0 => e.x = h,
                1 => e.y = h,
                _ => e.z = h,
            }
            let fd = (shell.eval(p + e) - shell.eval(p - e)) / (2.0 * h);
            assert!((fd - g[i]).abs() <= 1e-5 * (1.0 + fd.abs()), "axis {i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn nested_shell_hessian_is_finite() {
        let f = ScalarField::sphere(Vec3::zero(), 1.0).unwrap().shell(0.2).unwrap().shell(0.05).unwrap();
        let (val, g, h) = f.eval_hessian(v(0.3, 0.4, 0.8));
        assert_eq!(val, f.eval(v(0.3, 0.4, 0.8)));
        assert!(g.is_finite());
        assert!(h.iter().flatten().all(|x| x.is_finite()));
    }

    #[test]
    fn works_in_single_precision() {
        let f = ScalarField::<f32>::barth();
        let expected = -(2.0 + 5f32.sqrt()) / 4.0;
        assert!((f.eval(Vec3::zero()) - expected).abs() < 1e-6);
    }
}
