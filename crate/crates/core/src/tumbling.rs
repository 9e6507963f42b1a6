//! Rolling subsystem: a deformable elliptical ring rolling without slip on
//! an inclined plane.
//!
//! Frames: the slope frame has x downhill, y across the slope and z along
//! the outward plane normal. The body frame is centred at the ring's centre
//! of mass with the ring in its x–z plane and the axle along y.
//!
//! The attitude used by the equations of motion is
//! `R = Rz(θ)·Rx(ψ)·Ry(φ)`: heading θ about the plane normal, lean ψ about
//! the rolling direction and rolling angle φ about the axle. It is regular
//! for every `|ψ| < π/2`, which covers all rolling configurations.
//! [`rotation_matrix`] and [`body_angular_velocity`] expose the
//! `Rz·Ry·Rx` composition and the spin-precession rate formulas as
//! standalone helpers.

use thiserror::Error;

use crate::linalg::{Mat3, Vec3};
use crate::posture::{InertiaTriple, PostureError, RingProperties, ShapeMotion};
use crate::scalar::{lit, Real};

/// Number of entries in a [`TumblingState`].
pub const STATE_DIM: usize = 8;

/// Mass-matrix condition number above which the state is rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// Ring planes closer than this angle (rad) to the slope plane have no
/// well-defined contact point.
pub const DEGENERATE_CONTACT_ANGLE: f64 = 1e-6;

/// Slope-plane speeds below this hold the previous heading.
pub const HEADING_MIN_SPEED: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TumblingError {
    #[error("ring plane within {angle:e} rad of the slope plane")]
    DegenerateContact { angle: f64 },
    #[error("mass matrix condition number {condition:e} exceeds {MAX_CONDITION:e}")]
    SingularMassMatrix { condition: f64 },
    #[error("invalid slope: {0}")]
    InvalidSlope(String),
    #[error(transparent)]
    Posture(#[from] PostureError),
}

pub type Result<T> = std::result::Result<T, TumblingError>;

/// Incline angle and gravitational acceleration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeGeometry<T> {
    pub alpha: T,
    pub g: T,
}

impl<T: Real> SlopeGeometry<T> {
    pub fn new(alpha: T, g: T) -> Result<Self> {
        if !(alpha >= T::zero() && alpha < T::FRAC_PI_2()) {
            return Err(TumblingError::InvalidSlope(format!("incline {alpha} rad outside [0, π/2)")));
        }
        if !(g > T::zero() && g.is_finite()) {
            return Err(TumblingError::InvalidSlope(format!("gravity must be positive, got {g}")));
        }
        Ok(Self { alpha, g })
    }

    pub fn from_degrees(alpha_deg: T, g: T) -> Result<Self> {
        Self::new(alpha_deg.to_radians(), g)
    }

    /// Gravity in slope coordinates.
    pub fn gravity(&self) -> Vec3<T> {
        let (s, c) = self.alpha.sin_cos();
        Vec3::new(self.g * s, T::zero(), -self.g * c)
    }
}

impl<T: Real> Default for SlopeGeometry<T> {
    /// 15° incline, g = 9.81 m/s².
    fn default() -> Self {
        Self { alpha: lit::<T>(15.0).to_radians(), g: lit(9.81) }
    }
}

/// `[θ, ψ, φ, θ̇, ψ̇, φ̇, p_c,x, p_c,y]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TumblingState<T> {
    pub theta: T,
    pub psi: T,
    pub phi: T,
    pub theta_dot: T,
    pub psi_dot: T,
    pub phi_dot: T,
    pub pcx: T,
    pub pcy: T,
}

impl<T: Real> TumblingState<T> {
    pub fn to_array(&self) -> [T; STATE_DIM] {
        [self.theta, self.psi, self.phi, self.theta_dot, self.psi_dot, self.phi_dot, self.pcx, self.pcy]
    }

    pub fn from_slice(v: &[T]) -> Self {
        Self {
            theta: v[0],
            psi: v[1],
            phi: v[2],
            theta_dot: v[3],
            psi_dot: v[4],
            phi_dot: v[5],
            pcx: v[6],
            pcy: v[7],
        }
    }

    pub fn angle_rates(&self) -> Vec3<T> {
        Vec3::new(self.theta_dot, self.psi_dot, self.phi_dot)
    }
}

/// Contact force on the ring, slope coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundReaction<T> {
    pub f_c: Vec3<T>,
    pub f_n: T,
}

/// `Rz(θ)·Ry(φ)·Rx(ψ)`.
pub fn rotation_matrix<T: Real>(theta: T, phi: T, psi: T) -> Mat3<T> {
    Mat3::rot_z(theta) * Mat3::rot_y(phi) * Mat3::rot_x(psi)
}

/// Body rates from the spin-precession component formulas:
/// `ω = (ψ̇ sθ sφ + θ̇ cφ, ψ̇ sθ cφ − θ̇ sφ, ψ̇ cθ + φ̇)`.
///
/// These are the body rates of [`zxz_rotation_matrix`]`(ψ, θ, φ)`.
pub fn body_angular_velocity<T: Real>(theta: T, phi: T, _psi: T, theta_dot: T, phi_dot: T, psi_dot: T) -> Vec3<T> {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Vec3::new(
        psi_dot * st * sp + theta_dot * cp,
        psi_dot * st * cp - theta_dot * sp,
        psi_dot * ct + phi_dot,
    )
}

/// `Rz(precession)·Rx(nutation)·Rz(spin)`.
pub fn zxz_rotation_matrix<T: Real>(precession: T, nutation: T, spin: T) -> Mat3<T> {
    Mat3::rot_z(precession) * Mat3::rot_x(nutation) * Mat3::rot_z(spin)
}

/// Orientation of the body in the slope frame, `Rz(θ)·Rx(ψ)·Ry(φ)`.
pub fn attitude<T: Real>(theta: T, psi: T, phi: T) -> Mat3<T> {
    Mat3::rot_z(theta) * Mat3::rot_x(psi) * Mat3::rot_y(phi)
}

/// Recovers `(θ, ψ, φ)` from an attitude matrix, with `ψ ∈ [−π/2, π/2]`.
pub fn attitude_angles<T: Real>(r: &Mat3<T>) -> (T, T, T) {
    let m = &r.m;
    let psi = m[2][1].max(-T::one()).min(T::one()).asin();
    let phi = (-m[2][0]).atan2(m[2][2]);
    let theta = (-m[0][1]).atan2(m[1][1]);
    (theta, psi, phi)
}

/// Attitude together with the map from angle rates to angular velocity.
#[derive(Debug, Clone, Copy)]
pub struct AttitudeKinematics<T> {
    pub rotation: Mat3<T>,
    /// Columns are the slope-frame axes of θ̇, ψ̇ and φ̇.
    pub jacobian: Mat3<T>,
    /// Angular velocity in slope coordinates.
    pub omega: Vec3<T>,
    pub omega_body: Vec3<T>,
    /// `J̇·q̇`.
    pub bias: Vec3<T>,
}

impl<T: Real> AttitudeKinematics<T> {
    pub fn new(x: &TumblingState<T>) -> Self {
        let rz = Mat3::rot_z(x.theta);
        let rzx = rz * Mat3::rot_x(x.psi);
        let rotation = rzx * Mat3::rot_y(x.phi);
        let e_z = Vec3::unit_z();
        let a2 = rz * Vec3::unit_x();
        let a3 = rzx * Vec3::unit_y();
        let jacobian = Mat3::from_cols(e_z, a2, a3);
        let omega = jacobian * x.angle_rates();
        let precess = e_z * x.theta_dot;
        let bias = precess.cross(a2) * x.psi_dot + (precess + a2 * x.psi_dot).cross(a3) * x.phi_dot;
        Self { rotation, jacobian, omega, omega_body: rotation.transpose() * omega, bias }
    }
}

/// `diag(y)·ω_b`.
pub fn angular_momentum<T: Real>(omega_body: Vec3<T>, y: &InertiaTriple<T>) -> Vec3<T> {
    omega_body.hadamard(Vec3::new(y.xx, y.yy, y.zz))
}

/// Lowest point of the ring relative to the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactGeometry<T> {
    /// Contact point relative to the centre of mass, body coordinates.
    pub point_body: Vec3<T>,
    /// Same vector in slope coordinates.
    pub offset: Vec3<T>,
    /// Outward plane normal in body coordinates.
    pub normal_body: Vec3<T>,
    /// Height of the centre of mass above the plane.
    pub height: T,
}

fn support_matrix<T: Real>(a: T, b: T) -> Vec3<T> {
    Vec3::new(a * a, T::zero(), b * b)
}

/// Support point of the ellipse in the direction of the plane.
pub fn contact_point<T: Real>(a: T, b: T, rotation: &Mat3<T>, _slope: &SlopeGeometry<T>) -> Result<ContactGeometry<T>> {
    let n = rotation.transpose() * Vec3::unit_z();
    let in_plane = (n.x * n.x + n.z * n.z).sqrt();
    if in_plane < lit::<T>(DEGENERATE_CONTACT_ANGLE).sin() {
        return Err(TumblingError::DegenerateContact { angle: in_plane.asin().to_f64_lossy() });
    }
    let an = support_matrix(a, b).hadamard(n);
    let height = n.dot(an).sqrt();
    let point_body = -an * height.recip();
    Ok(ContactGeometry { point_body, offset: *rotation * point_body, normal_body: n, height })
}

/// Everything the equations of motion produce at one state.
#[derive(Debug, Clone, Copy)]
pub struct RollingSolution<T> {
    pub derivative: [T; STATE_DIM],
    pub kinematics: AttitudeKinematics<T>,
    pub contact: ContactGeometry<T>,
    pub omega_body_dot: Vec3<T>,
    /// Centre-of-mass position, velocity and acceleration in slope coordinates.
    pub com: Vec3<T>,
    pub com_velocity: Vec3<T>,
    pub com_acceleration: Vec3<T>,
    pub reaction: GroundReaction<T>,
}

/// Contact-point quantities shared by the right-hand side and the observers.
struct ContactRates<T> {
    contact: ContactGeometry<T>,
    /// Velocity of the contact point relative to the CoM due to shape change, body frame.
    deform: Vec3<T>,
    /// Body-frame velocity of the CoM relative to the contact material point, negated.
    u: Vec3<T>,
    rho_dot: Vec3<T>,
    /// Part of the body-frame CoM acceleration that does not involve ω̇.
    a_rest: Vec3<T>,
}

fn contact_rates<T: Real>(
    kin: &AttitudeKinematics<T>,
    shape: &ShapeMotion<T>,
    slope: &SlopeGeometry<T>,
) -> Result<ContactRates<T>> {
    let ShapeMotion { a, b, a_dot, b_dot, a_ddot, b_ddot } = *shape;
    let two = lit::<T>(2.0);
    let three = lit::<T>(3.0);
    let contact = contact_point(a, b, &kin.rotation, slope)?;
    let w = kin.omega_body;
    let n = contact.normal_body;
    let h = contact.height;
    let rho = contact.point_body;
    let amat = support_matrix(a, b);
    let amat_dot = Vec3::new(two * a * a_dot, T::zero(), two * b * b_dot);

    let n_dot = -w.cross(n);
    let h_dot = (two * n.dot(amat.hadamard(n_dot)) + n.dot(amat_dot.hadamard(n))) / (two * h);
    let rho_dot = -(amat_dot.hadamard(n) + amat.hadamard(n_dot)) * h.recip() + amat.hadamard(n) * (h_dot / (h * h));

    // Material points move radially: ẋ = λx with λ = x²ȧ/a³ + z²ḃ/b³.
    let (a3, b3) = (a * a * a, b * b * b);
    let lambda = rho.x * rho.x * a_dot / a3 + rho.z * rho.z * b_dot / b3;
    let lambda_dot = two * rho.x * rho_dot.x * a_dot / a3 + rho.x * rho.x * a_ddot / a3
        - three * rho.x * rho.x * a_dot * a_dot / (a3 * a)
        + two * rho.z * rho_dot.z * b_dot / b3
        + rho.z * rho.z * b_ddot / b3
        - three * rho.z * rho.z * b_dot * b_dot / (b3 * b);
    let deform = rho * lambda;
    let deform_dot = rho * lambda_dot + rho_dot * lambda;

    let u = w.cross(rho) + deform;
    let a_rest = -(w.cross(u) + w.cross(rho_dot) + deform_dot);
    Ok(ContactRates { contact, deform, u, rho_dot, a_rest })
}

fn com_position<T: Real>(x: &TumblingState<T>, contact: &ContactGeometry<T>) -> Vec3<T> {
    Vec3::new(x.pcx, x.pcy, T::zero()) - contact.offset
}

/// Full solution of the rolling equations at one state.
///
/// `y` and `y_dot` are the current body inertia and its rate, `shape` the
/// semi-axes and their first two derivatives.
pub fn solve_rolling<T: Real>(
    x: &TumblingState<T>,
    y: &InertiaTriple<T>,
    y_dot: &InertiaTriple<T>,
    shape: &ShapeMotion<T>,
    slope: &SlopeGeometry<T>,
    props: &RingProperties<T>,
) -> Result<RollingSolution<T>> {
    let kin = AttitudeKinematics::new(x);
    let cr = contact_rates(&kin, shape, slope)?;
    let m = props.mass;
    let rho = cr.contact.point_body;
    let w = kin.omega_body;
    let r = kin.rotation;
    let rt = r.transpose();
    let g_body = rt * slope.gravity();

    let inertia = Mat3::diagonal(Vec3::new(y.xx, y.yy, y.zz));
    let inertia_dot = Vec3::new(y_dot.xx, y_dot.yy, y_dot.zz);
    let mass_matrix = inertia + (Mat3::identity() * rho.norm_squared() - Mat3::outer(rho, rho)) * m;
    let generalized = mass_matrix * (rt * kin.jacobian);
    let condition = generalized.condition_1();
    if !(condition <= lit(MAX_CONDITION)) {
        return Err(TumblingError::SingularMassMatrix { condition: condition.to_f64_lossy() });
    }
    let rhs = -inertia_dot.hadamard(w) - w.cross(inertia * w) + rho.cross(cr.a_rest - g_body) * m;
    let inv = mass_matrix.inverse().ok_or(TumblingError::SingularMassMatrix { condition: f64::INFINITY })?;
    let omega_body_dot = inv * rhs;
    let jinv = kin
        .jacobian
        .inverse()
        .ok_or(TumblingError::SingularMassMatrix { condition: f64::INFINITY })?;
    let q_ddot = jinv * (r * omega_body_dot - kin.bias);
    let pc_dot = r * (cr.rho_dot - cr.deform);

    let com_acceleration = r * (cr.a_rest - omega_body_dot.cross(rho));
    let f_c = (com_acceleration - slope.gravity()) * m;
    Ok(RollingSolution {
        derivative: [x.theta_dot, x.psi_dot, x.phi_dot, q_ddot.x, q_ddot.y, q_ddot.z, pc_dot.x, pc_dot.y],
        kinematics: kin,
        contact: cr.contact,
        omega_body_dot,
        com: com_position(x, &cr.contact),
        com_velocity: -(r * cr.u),
        com_acceleration,
        reaction: GroundReaction { f_c, f_n: f_c.z },
    })
}

/// `ẋ` of the rolling subsystem; see [`solve_rolling`].
pub fn tumbling_rhs<T: Real>(
    x: &TumblingState<T>,
    y: &InertiaTriple<T>,
    y_dot: &InertiaTriple<T>,
    shape: &ShapeMotion<T>,
    slope: &SlopeGeometry<T>,
    props: &RingProperties<T>,
) -> Result<[T; STATE_DIM]> {
    solve_rolling(x, y, y_dot, shape, slope, props).map(|s| s.derivative)
}

/// Contact force implied by a state derivative `x_dot` (not necessarily
/// the one produced by [`tumbling_rhs`]).
pub fn ground_reaction<T: Real>(
    x: &TumblingState<T>,
    x_dot: &[T; STATE_DIM],
    shape: &ShapeMotion<T>,
    slope: &SlopeGeometry<T>,
    props: &RingProperties<T>,
) -> Result<GroundReaction<T>> {
    let kin = AttitudeKinematics::new(x);
    let cr = contact_rates(&kin, shape, slope)?;
    let q_ddot = Vec3::new(x_dot[3], x_dot[4], x_dot[5]);
    let omega_body_dot = kin.rotation.transpose() * (kin.jacobian * q_ddot + kin.bias);
    let acc = kin.rotation * (cr.a_rest - omega_body_dot.cross(cr.contact.point_body));
    let f_c = (acc - slope.gravity()) * props.mass;
    Ok(GroundReaction { f_c, f_n: f_c.z })
}

/// Centre-of-mass position and velocity in slope coordinates.
pub fn center_of_mass<T: Real>(
    x: &TumblingState<T>,
    shape: &ShapeMotion<T>,
    slope: &SlopeGeometry<T>,
) -> Result<(Vec3<T>, Vec3<T>)> {
    let kin = AttitudeKinematics::new(x);
    let cr = contact_rates(&kin, shape, slope)?;
    Ok((com_position(x, &cr.contact), -(kin.rotation * cr.u)))
}

/// Velocity of the ring material currently touching the plane, rebuilt
/// from the CoM velocity, the angular velocity and the contact offset.
pub fn contact_velocity<T: Real>(
    x: &TumblingState<T>,
    shape: &ShapeMotion<T>,
    slope: &SlopeGeometry<T>,
) -> Result<Vec3<T>> {
    let kin = AttitudeKinematics::new(x);
    let cr = contact_rates(&kin, shape, slope)?;
    let v_cm = -(kin.rotation * cr.u);
    Ok(v_cm + kin.omega.cross(cr.contact.offset) + kin.rotation * cr.deform)
}

/// Kinetic plus gravitational potential energy (zero potential at the plane origin).
pub fn total_energy<T: Real>(
    x: &TumblingState<T>,
    y: &InertiaTriple<T>,
    shape: &ShapeMotion<T>,
    slope: &SlopeGeometry<T>,
    props: &RingProperties<T>,
) -> Result<T> {
    let kin = AttitudeKinematics::new(x);
    let (p, v) = center_of_mass(x, shape, slope)?;
    let w = kin.omega_body;
    let half = lit::<T>(0.5);
    Ok(half * props.mass * v.norm_squared() + half * w.dot(angular_momentum(w, y)) - props.mass * slope.gravity().dot(p))
}

/// `atan2(v_y, v_x)` of a slope-plane velocity.
pub fn heading_angle<T: Real>(vx: T, vy: T) -> T {
    vy.atan2(vx)
}

/// Unwraps headings along a trace and holds the last value while the ring
/// is (nearly) stationary.
#[derive(Debug, Clone, Copy, Default)]
pub struct HeadingTracker<T> {
    last: Option<T>,
}

impl<T: Real> HeadingTracker<T> {
    pub fn new() -> Self {
        Self { last: None }
    }

    pub fn update(&mut self, vx: T, vy: T) -> T {
        if (vx * vx + vy * vy).sqrt() <= lit(HEADING_MIN_SPEED) {
            return *self.last.get_or_insert(T::zero());
        }
        let raw = heading_angle(vx, vy);
        let h = match self.last {
            None => raw,
            Some(prev) => {
                let tau = T::TAU();
                prev + (raw - prev + T::PI()).rem_euclid(&tau) - T::PI()
            }
        };
        self.last = Some(h);
        h
    }
}

trait RemEuclid {
    fn rem_euclid(self, m: &Self) -> Self;
}

impl<T: Real> RemEuclid for T {
    fn rem_euclid(self, m: &T) -> T {
        let r = self % *m;
        if r < T::zero() {
            r + *m
        } else {
            r
        }
    }
}
