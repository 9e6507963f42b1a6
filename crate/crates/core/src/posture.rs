//! Shape subsystem: a thin uniform elliptical ring whose semi-axes are
//! driven by two rate inputs under a fixed-perimeter constraint.
//!
//! The ring lies in the body x–z plane with semi-axis `a` along x and `b`
//! along z. The posture state tracks one material point of the ring in
//! polar coordinates together with the two semi-axes; material points keep
//! their polar angle and move radially as the ellipse deforms.

use thiserror::Error;

use crate::quadrature::{integrate, Tolerance};
use crate::scalar::{lit, Real};

/// Semi-axes below this length are treated as a collapsed ellipse.
pub const MIN_SEMI_AXIS: f64 = 1e-6;

/// Step of the central differences used by [`inertia_rate`].
pub const INERTIA_FD_STEP: f64 = 1e-6;

const QUAD_REL: f64 = 1e-13;
const QUAD_ABS: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PostureError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate ellipse: semi-axes ({a}, {b}) below {MIN_SEMI_AXIS} m")]
    DegenerateEllipse { a: f64, b: f64 },
    #[error("infeasible shape: no ellipse of perimeter {perimeter} has semi-axis {b} (requires 4·b < P)")]
    Infeasible { perimeter: f64, b: f64 },
}

pub type Result<T> = std::result::Result<T, PostureError>;

/// Mass and (fixed) perimeter of the ring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingProperties<T> {
    pub mass: T,
    pub perimeter: T,
}

impl<T: Real> RingProperties<T> {
    pub fn new(mass: T, perimeter: T) -> Result<Self> {
        if !(mass > T::zero() && mass.is_finite()) {
            return Err(PostureError::InvalidArgument(format!("ring mass must be positive, got {mass}")));
        }
        if !(perimeter > T::zero() && perimeter.is_finite()) {
            return Err(PostureError::InvalidArgument(format!(
                "ring perimeter must be positive, got {perimeter}"
            )));
        }
        Ok(Self { mass, perimeter })
    }

    /// Radius of the circle with this perimeter.
    pub fn circle_radius(&self) -> T {
        self.perimeter / (lit::<T>(2.0) * T::PI())
    }
}

impl<T: Real> Default for RingProperties<T> {
    fn default() -> Self {
        Self { mass: lit(6.0), perimeter: lit(1.6) }
    }
}

/// Hidden posture state: tracked point `(x, z)`, its polar radius and
/// angle, and the semi-axes `(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PostureState<T> {
    pub x: T,
    pub z: T,
    pub radius: T,
    pub angle: T,
    pub a: T,
    pub b: T,
}

impl<T: Real> PostureState<T> {
    /// State tracking the ring point at polar angle `angle`.
    pub fn on_ellipse(angle: T, a: T, b: T) -> Result<Self> {
        check_axes(a, b)?;
        let radius = polar_radius(angle, a, b)?;
        let (s, c) = angle.sin_cos();
        Ok(Self { x: radius * c, z: radius * s, radius, angle, a, b })
    }

    pub fn to_array(&self) -> [T; 6] {
        [self.x, self.z, self.radius, self.angle, self.a, self.b]
    }

    pub fn from_slice(v: &[T]) -> Self {
        Self { x: v[0], z: v[1], radius: v[2], angle: v[3], a: v[4], b: v[5] }
    }

    /// Residual of `x²/a² + z²/b² = 1`.
    pub fn ellipse_residual(&self) -> T {
        self.x * self.x / (self.a * self.a) + self.z * self.z / (self.b * self.b) - T::one()
    }

    /// Largest deviation of `(x, z)` from `radius·(cos, sin)(angle)`.
    pub fn polar_residual(&self) -> T {
        let (s, c) = self.angle.sin_cos();
        (self.x - self.radius * c).abs().max((self.z - self.radius * s).abs())
    }
}

/// Semi-axis rates `u₁ = ȧ`, `u₂ = ḃ`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlInput<T> {
    pub a_rate: T,
    pub b_rate: T,
}

/// Semi-axes together with their first and second time derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeMotion<T> {
    pub a: T,
    pub b: T,
    pub a_dot: T,
    pub b_dot: T,
    pub a_ddot: T,
    pub b_ddot: T,
}

impl<T: Real> ShapeMotion<T> {
    /// A shape held fixed.
    pub fn rigid(a: T, b: T) -> Self {
        let z = T::zero();
        Self { a, b, a_dot: z, b_dot: z, a_ddot: z, b_ddot: z }
    }

    pub fn rates(&self) -> ControlInput<T> {
        ControlInput { a_rate: self.a_dot, b_rate: self.b_dot }
    }
}

/// Which body axis an in-plane moment is attributed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InertiaLabels {
    /// `I_xx = ∫z² dm`, `I_zz = ∫x² dm` (moments about the axes).
    #[default]
    Physical,
    /// `I_xx = ∫x² dm`, `I_zz = ∫z² dm` (coordinate-squared labelling).
    Coordinate,
}

/// Principal mass moments of inertia about the body axes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InertiaTriple<T> {
    pub xx: T,
    pub yy: T,
    pub zz: T,
}

impl<T: Real> InertiaTriple<T> {
    pub fn to_array(&self) -> [T; 3] {
        [self.xx, self.yy, self.zz]
    }

    /// Relative residual of `I_yy = I_xx + I_zz`.
    pub fn perpendicular_axis_residual(&self) -> T {
        (self.yy - self.xx - self.zz).abs() / self.yy.abs().max(T::min_positive_value())
    }

    pub fn satisfies_triangle_inequalities(&self) -> bool {
        self.xx + self.yy >= self.zz && self.yy + self.zz >= self.xx && self.xx + self.zz >= self.yy
    }
}

fn check_finite<T: Real>(vals: &[T]) -> Result<()> {
    if vals.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(PostureError::InvalidArgument(format!("non-finite input {vals:?}")))
    }
}

fn check_axes<T: Real>(a: T, b: T) -> Result<()> {
    check_finite(&[a, b])?;
    let min: T = lit(MIN_SEMI_AXIS);
    if a < min || b < min {
        return Err(PostureError::DegenerateEllipse { a: a.to_f64_lossy(), b: b.to_f64_lossy() });
    }
    Ok(())
}

fn quad_tol<T: Real>() -> Tolerance<T> {
    Tolerance::new(QUAD_REL, QUAD_ABS)
}

/// Arc-length density `√(a²cos²θ + b²sin²θ)` of the perimeter integrand.
pub fn gamma_arc<T: Real>(angle: T, a: T, b: T) -> Result<T> {
    check_finite(&[angle, a, b])?;
    if a <= T::zero() || b <= T::zero() {
        return Err(PostureError::InvalidArgument(format!("semi-axes must be positive, got ({a}, {b})")));
    }
    Ok(gamma_unchecked(angle, a, b))
}

#[inline]
fn gamma_unchecked<T: Real>(angle: T, a: T, b: T) -> T {
    let (s, c) = angle.sin_cos();
    (a * a * c * c + b * b * s * s).sqrt()
}

/// Polar radius of the ellipse at polar angle `angle`.
pub fn polar_radius<T: Real>(angle: T, a: T, b: T) -> Result<T> {
    check_axes(a, b)?;
    check_finite(&[angle])?;
    let (s, c) = angle.sin_cos();
    Ok(a * b / (b * b * c * c + a * a * s * s).sqrt())
}

/// Ellipse perimeter by adaptive quadrature of [`gamma_arc`].
pub fn perimeter<T: Real>(a: T, b: T) -> Result<T> {
    check_finite(&[a, b])?;
    if a < T::zero() || b < T::zero() || (a == T::zero() && b == T::zero()) {
        return Err(PostureError::InvalidArgument(format!(
            "perimeter needs non-negative semi-axes, not both zero; got ({a}, {b})"
        )));
    }
    let [q] = integrate(|t| [gamma_unchecked(t, a, b)], T::zero(), T::FRAC_PI_2(), quad_tol());
    Ok(q * lit(4.0))
}

/// Perimeter and its first and second partial derivatives in `(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerimeterPartials<T> {
    pub p: T,
    pub pa: T,
    pub pb: T,
    pub paa: T,
    pub pab: T,
    pub pbb: T,
}

pub fn perimeter_partials<T: Real>(a: T, b: T) -> Result<PerimeterPartials<T>> {
    check_axes(a, b)?;
    let q = integrate(
        |t: T| {
            let (s, c) = t.sin_cos();
            let (c2, s2) = (c * c, s * s);
            let g = (a * a * c2 + b * b * s2).sqrt();
            let g3 = g * g * g;
            [g, a * c2 / g, b * s2 / g, b * b * c2 * s2 / g3, -a * b * c2 * s2 / g3, a * a * c2 * s2 / g3]
        },
        T::zero(),
        T::FRAC_PI_2(),
        quad_tol(),
    )
    .map(|v| v * lit(4.0));
    Ok(PerimeterPartials { p: q[0], pa: q[1], pb: q[2], paa: q[3], pab: q[4], pbb: q[5] })
}

/// Semi-axis `a` such that `perimeter(a, b) = P`.
///
/// `a ↦ perimeter(a, b)` is strictly increasing from `4b` (at `a = 0`) and
/// exceeds `P` at `a = P/4`, so the root is bracketed; a Newton iteration
/// safeguarded by bisection refines it.
pub fn solve_conjugate_axis<T: Real>(perimeter_target: T, b: T) -> Result<T> {
    check_finite(&[perimeter_target, b])?;
    if perimeter_target <= T::zero() || b <= T::zero() {
        return Err(PostureError::InvalidArgument(format!(
            "conjugate axis needs P > 0 and b > 0, got ({perimeter_target}, {b})"
        )));
    }
    if lit::<T>(4.0) * b >= perimeter_target {
        return Err(PostureError::Infeasible {
            perimeter: perimeter_target.to_f64_lossy(),
            b: b.to_f64_lossy(),
        });
    }
    let tol = perimeter_target * lit(1e-14);
    let (mut lo, mut hi) = (T::zero(), perimeter_target / lit(4.0));
    // Ramanujan's approximation inverted around the circle is a good start.
    let circle = perimeter_target / (lit::<T>(2.0) * T::PI());
    let mut a = (lit::<T>(2.0) * circle - b).max(hi * lit(0.01)).min(hi * lit(0.99));
    for _ in 0..200 {
        let res = perimeter(a, b)? - perimeter_target;
        if res.abs() <= tol {
            return Ok(a);
        }
        if res > T::zero() {
            hi = a;
        } else {
            lo = a;
        }
        let pa = if a > lit(MIN_SEMI_AXIS) { perimeter_partials(a, b)?.pa } else { T::zero() };
        let newton = if pa > T::zero() { a - res / pa } else { T::nan() };
        a = if newton > lo && newton < hi { newton } else { (lo + hi) * lit(0.5) };
        if hi - lo <= T::epsilon() * hi {
            return Ok(a);
        }
    }
    Ok(a)
}

/// `ȧ` that keeps the perimeter fixed while `b` moves at `b_dot`.
pub fn conjugate_rate<T: Real>(a: T, b: T, b_dot: T) -> Result<T> {
    let p = perimeter_partials(a, b)?;
    Ok(-b_dot * p.pb / p.pa)
}

/// Full perimeter-preserving shape motion given `b` and its derivatives,
/// with `a` read from the current posture (it is integrated, not solved).
pub fn slaved_shape_motion<T: Real>(a: T, b: T, b_dot: T, b_ddot: T) -> Result<ShapeMotion<T>> {
    let p = perimeter_partials(a, b)?;
    let ratio = p.pb / p.pa;
    let a_dot = -b_dot * ratio;
    let pa2 = p.pa * p.pa;
    let ratio_a = (p.pab * p.pa - p.pb * p.paa) / pa2;
    let ratio_b = (p.pbb * p.pa - p.pb * p.pab) / pa2;
    let a_ddot = -b_ddot * ratio - b_dot * (ratio_a * a_dot + ratio_b * b_dot);
    Ok(ShapeMotion { a, b, a_dot, b_dot, a_ddot, b_ddot })
}

/// Posture state derivative for semi-axis rates `u`.
///
/// The material polar angle is frozen, so the tracked point moves radially
/// at the rate implied by differentiating the ellipse equation:
/// `ṙ/r = x²ȧ/a³ + z²ḃ/b³`.
pub fn posture_rhs<T: Real>(xi: &PostureState<T>, u: &ControlInput<T>) -> Result<[T; 6]> {
    check_axes(xi.a, xi.b)?;
    check_finite(&[xi.x, xi.z, xi.radius, xi.angle, u.a_rate, u.b_rate])?;
    let (a, b) = (xi.a, xi.b);
    let log_rate = xi.x * xi.x * u.a_rate / (a * a * a) + xi.z * xi.z * u.b_rate / (b * b * b);
    let r_dot = xi.radius * log_rate;
    let (s, c) = xi.angle.sin_cos();
    Ok([r_dot * c, r_dot * s, r_dot, T::zero(), u.a_rate, u.b_rate])
}

/// Mass moments of inertia of the uniform ring with semi-axes `(a, b)`.
///
/// Integrated over the eccentric anomaly `s`, with `(x, z) = (a cos s,
/// b sin s)` and arc-length density `|dp/ds|`; the mass per length is
/// `m / perimeter(a, b)`.
pub fn inertia_outputs<T: Real>(a: T, b: T, props: &RingProperties<T>) -> Result<InertiaTriple<T>> {
    inertia_outputs_labelled(a, b, props, InertiaLabels::Physical)
}

pub fn inertia_outputs_labelled<T: Real>(
    a: T,
    b: T,
    props: &RingProperties<T>,
    labels: InertiaLabels,
) -> Result<InertiaTriple<T>> {
    check_axes(a, b)?;
    let [len, x2, z2] = integrate(
        |s: T| {
            let (sn, cs) = s.sin_cos();
            let ds = (a * a * sn * sn + b * b * cs * cs).sqrt();
            let (x, z) = (a * cs, b * sn);
            [ds, x * x * ds, z * z * ds]
        },
        T::zero(),
        T::FRAC_PI_2(),
        quad_tol(),
    );
    // Quarter-period integrals; the factor 4 cancels in the density.
    let density = props.mass / len;
    let (ix, iz) = (z2 * density, x2 * density);
    let (xx, zz) = match labels {
        InertiaLabels::Physical => (ix, iz),
        InertiaLabels::Coordinate => (iz, ix),
    };
    Ok(InertiaTriple { xx, yy: xx + zz, zz })
}

/// Time derivative of the inertia triple along semi-axis rates `(ȧ, ḃ)`,
/// by central differences of step [`INERTIA_FD_STEP`] in each semi-axis.
pub fn inertia_rate<T: Real>(a: T, b: T, a_dot: T, b_dot: T, props: &RingProperties<T>) -> Result<InertiaTriple<T>> {
    inertia_rate_labelled(a, b, a_dot, b_dot, props, InertiaLabels::Physical)
}

pub fn inertia_rate_labelled<T: Real>(
    a: T,
    b: T,
    a_dot: T,
    b_dot: T,
    props: &RingProperties<T>,
    labels: InertiaLabels,
) -> Result<InertiaTriple<T>> {
    check_finite(&[a_dot, b_dot])?;
    check_axes(a, b)?;
    let h: T = lit(INERTIA_FD_STEP);
    let two_h = h + h;
    let mut out = [T::zero(); 3];
    for (rate, da, db) in [(a_dot, h, T::zero()), (b_dot, T::zero(), h)] {
        if rate == T::zero() {
            continue;
        }
        let plus = inertia_outputs_labelled(a + da, b + db, props, labels)?.to_array();
        let minus = inertia_outputs_labelled(a - da, b - db, props, labels)?.to_array();
        for k in 0..3 {
            out[k] += rate * (plus[k] - minus[k]) / two_h;
        }
    }
    Ok(InertiaTriple { xx: out[0], yy: out[0] + out[2], zz: out[2] })
}
