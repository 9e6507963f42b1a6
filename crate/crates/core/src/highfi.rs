//! Discrete-element ring with penalty contact and regularized friction.
//!
//! The ring is `n` point masses at fixed body-frame polar angles whose radii
//! follow the prescribed ellipse. Because every element moves radially and
//! the layout is mirror-symmetric, the internal motion carries no net
//! momentum and the ring behaves as one rigid body with a time-varying
//! inertia tensor. Each element touches the plane as a sphere of radius
//! `half_thickness`.
//!
//! The stepper is semi-implicit Euler on linear and world-frame angular
//! momentum. Normal forces are explicit; friction is linearly implicit,
//! because its slope `μ·f_n/v_eps` is far too stiff for an explicit update
//! at practical step sizes.

use thiserror::Error;

use crate::linalg::{solve_dense, Mat3, Vec3};
use crate::posture::{PostureError, ShapeMotion, MIN_SEMI_AXIS};
use crate::scalar::{lit, Real};
use crate::tumbling::SlopeGeometry;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HighFiError {
    #[error("invalid discretization: {0}")]
    InvalidDiscretization(String),
    #[error("invalid contact parameters: {0}")]
    InvalidContact(String),
    #[error("non-finite state after step {step} (t = {t}); the step size is likely too large")]
    NonFiniteState { step: usize, t: f64 },
    #[error(transparent)]
    Shape(#[from] PostureError),
}

pub type Result<T> = std::result::Result<T, HighFiError>;

/// Element layout of the discretized ring.
#[derive(Debug, Clone, PartialEq)]
pub struct RingDiscretization<T> {
    mass: T,
    half_thickness: T,
    angles: Vec<T>,
    /// `(cos θ_i, sin θ_i)`.
    directions: Vec<(T, T)>,
}

impl<T: Real> RingDiscretization<T> {
    pub fn new(n: usize, mass: T, half_thickness: T) -> Result<Self> {
        if n < 4 || !n.is_multiple_of(2) {
            return Err(HighFiError::InvalidDiscretization(format!("element count must be even and ≥ 4, got {n}")));
        }
        if !(mass > T::zero() && mass.is_finite()) {
            return Err(HighFiError::InvalidDiscretization(format!("mass must be positive, got {mass}")));
        }
        if !(half_thickness >= T::zero() && half_thickness.is_finite()) {
            return Err(HighFiError::InvalidDiscretization(format!(
                "half thickness must be non-negative, got {half_thickness}"
            )));
        }
        let step = T::TAU() / T::from_usize(n).expect("element count");
        let angles: Vec<T> = (0..n).map(|i| step * T::from_usize(i).expect("index")).collect();
        let directions = angles.iter().map(|&t| (t.cos(), t.sin())).collect();
        Ok(Self { mass, half_thickness, angles, directions })
    }

    /// 150 elements, 5 mm contact radius.
    pub fn standard(mass: T) -> Result<Self> {
        Self::new(150, mass, lit(0.005))
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn mass(&self) -> T {
        self.mass
    }

    pub fn element_mass(&self) -> T {
        self.mass / T::from_usize(self.len()).expect("element count")
    }

    pub fn half_thickness(&self) -> T {
        self.half_thickness
    }

    pub fn angles(&self) -> &[T] {
        &self.angles
    }
}

/// Penalty-contact and friction constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactParams<T> {
    /// N/m.
    pub stiffness: T,
    /// N·s/m.
    pub damping: T,
    /// Penetration over which the contact force is blended in (m).
    pub width: T,
    pub friction: T,
    /// Slip speed at which friction reaches `tanh(1)` of its Coulomb limit (m/s).
    pub v_eps: T,
}

impl<T: Real> Default for ContactParams<T> {
    fn default() -> Self {
        Self { stiffness: lit(1e4), damping: lit(1e3), width: lit(1e-3), friction: lit(5.0), v_eps: lit(1e-3) }
    }
}

impl<T: Real> ContactParams<T> {
    pub fn validate(&self) -> Result<()> {
        let all = [self.stiffness, self.damping, self.width, self.friction, self.v_eps];
        if all.iter().all(|v| *v > T::zero() && v.is_finite()) {
            Ok(())
        } else {
            Err(HighFiError::InvalidContact(format!("all parameters must be positive: {self:?}")))
        }
    }
}

fn check_shape<T: Real>(a: T, b: T) -> Result<()> {
    let min = lit::<T>(MIN_SEMI_AXIS);
    if a.is_finite() && b.is_finite() && a >= min && b >= min {
        Ok(())
    } else {
        Err(PostureError::DegenerateEllipse { a: a.to_f64_lossy(), b: b.to_f64_lossy() }.into())
    }
}

/// `(r, ∂r/∂a, ∂r/∂b)` of the polar radius at direction `(cos θ, sin θ)`.
fn radius_and_partials<T: Real>(a: T, b: T, c: T, s: T) -> (T, T, T) {
    let q2 = b * b * c * c + a * a * s * s;
    let q = q2.sqrt();
    let q3 = q2 * q;
    (a * b / q, b * b * b * c * c / q3, a * a * a * s * s / q3)
}

/// Distance from the ring centre to the ellipse along polar angle `angle`.
pub fn element_radius<T: Real>(a: T, b: T, angle: T) -> Result<T> {
    check_shape(a, b)?;
    let (s, c) = angle.sin_cos();
    Ok(radius_and_partials(a, b, c, s).0)
}

/// Body-frame element positions and their rates under the shape motion.
fn element_kinematics<T: Real>(disc: &RingDiscretization<T>, shape: &ShapeMotion<T>) -> (Vec<Vec3<T>>, Vec<Vec3<T>>) {
    let mut pos = Vec::with_capacity(disc.len());
    let mut vel = Vec::with_capacity(disc.len());
    for &(c, s) in &disc.directions {
        let (r, ra, rb) = radius_and_partials(shape.a, shape.b, c, s);
        let rdot = ra * shape.a_dot + rb * shape.b_dot;
        pos.push(Vec3::new(r * c, T::zero(), r * s));
        vel.push(Vec3::new(rdot * c, T::zero(), rdot * s));
    }
    (pos, vel)
}

/// `Σ m_i (|c_i|²·1 − c_i c_iᵀ)` over the element positions.
pub fn composite_inertia<T: Real>(disc: &RingDiscretization<T>, a: T, b: T) -> Result<Mat3<T>> {
    check_shape(a, b)?;
    let mi = disc.element_mass();
    let mut acc = Mat3::zero();
    for &(c, s) in &disc.directions {
        let r = radius_and_partials(a, b, c, s).0;
        let p = Vec3::new(r * c, T::zero(), r * s);
        acc = acc + (Mat3::identity() * p.norm_squared() - Mat3::outer(p, p));
    }
    Ok(acc * mi)
}

/// Time derivative of [`composite_inertia`] for semi-axis rates `(ȧ, ḃ)`.
pub fn composite_inertia_rate<T: Real>(disc: &RingDiscretization<T>, a: T, b: T, a_dot: T, b_dot: T) -> Result<Mat3<T>> {
    check_shape(a, b)?;
    let mi = disc.element_mass();
    let two = lit::<T>(2.0);
    let mut acc = Mat3::zero();
    for &(c, s) in &disc.directions {
        let (r, ra, rb) = radius_and_partials(a, b, c, s);
        let rdot = ra * a_dot + rb * b_dot;
        let u = Vec3::new(c, T::zero(), s);
        // d/dt of r²(1 − u uᵀ) with u fixed.
        acc = acc + (Mat3::identity() - Mat3::outer(u, u)) * (two * r * rdot);
    }
    Ok(acc * mi)
}

/// C¹ blend: 0 for `x ≤ 0`, 1 for `x ≥ 1`, `3x² − 2x³` between.
pub fn smoothstep<T: Real>(x: T) -> T {
    if x <= T::zero() {
        T::zero()
    } else if x >= T::one() {
        T::one()
    } else {
        x * x * (lit::<T>(3.0) - lit::<T>(2.0) * x)
    }
}

/// Normal force for penetration `d` and penetration rate `d_dot`, never adhesive.
pub fn contact_force<T: Real>(d: T, d_dot: T, params: &ContactParams<T>) -> T {
    let s = smoothstep(d / params.width);
    if s == T::zero() {
        return T::zero();
    }
    (s * (params.stiffness * d + params.damping * d_dot)).max(T::zero())
}

/// Friction slope `|f|/|v|` at slip speed `speed`; finite at zero slip.
fn friction_coefficient<T: Real>(f_n: T, speed: T, params: &ContactParams<T>) -> T {
    let limit = params.friction * f_n;
    let x = speed / params.v_eps;
    if x < lit(1e-8) {
        limit / params.v_eps
    } else {
        limit * x.tanh() / speed
    }
}

/// `−μ·f_n·tanh(|v_t|/v_eps)·v̂_t`.
pub fn friction_force<T: Real>(f_n: T, v_t: Vec3<T>, params: &ContactParams<T>) -> Vec3<T> {
    -v_t * friction_coefficient(f_n, v_t.norm(), params)
}

/// Unit quaternion `w + xi + yj + zk`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion<T> {
    pub w: T,
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Quaternion<T> {
    pub fn identity() -> Self {
        Self { w: T::one(), x: T::zero(), y: T::zero(), z: T::zero() }
    }

    pub fn norm(&self) -> T {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn normalized(self) -> Self {
        let n = self.norm();
        Self { w: self.w / n, x: self.x / n, y: self.y / n, z: self.z / n }
    }

    pub fn mul(self, o: Self) -> Self {
        Self {
            w: self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            x: self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            y: self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            z: self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        }
    }

    /// Rotation by `|v|` about `v̂`.
    pub fn from_rotation_vector(v: Vec3<T>) -> Self {
        let angle = v.norm();
        let half = angle * lit(0.5);
        // sin(|v|/2)/|v|, with its Taylor series near zero.
        let k = if angle < lit(1e-6) { lit::<T>(0.5) - angle * angle / lit(48.0) } else { half.sin() / angle };
        Self { w: half.cos(), x: v.x * k, y: v.y * k, z: v.z * k }
    }

    pub fn from_rotation_matrix(r: &Mat3<T>) -> Self {
        let m = &r.m;
        let one = T::one();
        let quarter = lit::<T>(0.25);
        let tr = m[0][0] + m[1][1] + m[2][2];
        let q = if tr > T::zero() {
            let s = (tr + one).sqrt() * lit(2.0);
            Self { w: quarter * s, x: (m[2][1] - m[1][2]) / s, y: (m[0][2] - m[2][0]) / s, z: (m[1][0] - m[0][1]) / s }
        } else if m[0][0] > m[1][1] && m[0][0] > m[2][2] {
            let s = (one + m[0][0] - m[1][1] - m[2][2]).sqrt() * lit(2.0);
            Self { w: (m[2][1] - m[1][2]) / s, x: quarter * s, y: (m[0][1] + m[1][0]) / s, z: (m[0][2] + m[2][0]) / s }
        } else if m[1][1] > m[2][2] {
            let s = (one + m[1][1] - m[0][0] - m[2][2]).sqrt() * lit(2.0);
            Self { w: (m[0][2] - m[2][0]) / s, x: (m[0][1] + m[1][0]) / s, y: quarter * s, z: (m[1][2] + m[2][1]) / s }
        } else {
            let s = (one + m[2][2] - m[0][0] - m[1][1]).sqrt() * lit(2.0);
            Self { w: (m[1][0] - m[0][1]) / s, x: (m[0][2] + m[2][0]) / s, y: (m[1][2] + m[2][1]) / s, z: quarter * s }
        };
        q.normalized()
    }

    pub fn to_rotation_matrix(&self) -> Mat3<T> {
        let Self { w, x, y, z } = *self;
        let one = T::one();
        let two = lit::<T>(2.0);
        Mat3::from_rows([
            [one - two * (y * y + z * z), two * (x * y - w * z), two * (x * z + w * y)],
            [two * (x * y + w * z), one - two * (x * x + z * z), two * (y * z - w * x)],
            [two * (x * z - w * y), two * (y * z + w * x), one - two * (x * x + y * y)],
        ])
    }
}

/// Rigid-body state of the ring in slope coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyState<T> {
    /// Ring centre (= centre of mass).
    pub p: Vec3<T>,
    pub q: Quaternion<T>,
    pub v: Vec3<T>,
    pub omega_body: Vec3<T>,
}

impl<T: Real> BodyState<T> {
    pub fn rotation(&self) -> Mat3<T> {
        self.q.to_rotation_matrix()
    }

    /// World-frame angular velocity.
    pub fn omega(&self) -> Vec3<T> {
        self.rotation() * self.omega_body
    }

    pub fn is_finite(&self) -> bool {
        self.p.is_finite()
            && self.v.is_finite()
            && self.omega_body.is_finite()
            && [self.q.w, self.q.x, self.q.y, self.q.z].iter().all(|v| v.is_finite())
    }

    pub fn angular_momentum(&self, inertia_body: &Mat3<T>) -> Vec3<T> {
        let r = self.rotation();
        r * (*inertia_body * self.omega_body)
    }
}

/// Aggregate contact quantities at one configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactSummary<T> {
    /// Sum of element normal forces.
    pub normal_total: T,
    /// Normal-force-weighted mean contact position in the plane.
    pub center_of_pressure: Option<(T, T)>,
    pub active_elements: usize,
    /// Normal-force-weighted mean slip speed.
    pub mean_slip: T,
    /// Lowest element centre height, minus the contact radius.
    pub clearance: T,
    /// Position of the lowest element centre.
    pub lowest: Vec3<T>,
}

/// The discrete ring on a plane.
#[derive(Debug, Clone)]
pub struct HighFiModel<T> {
    pub disc: RingDiscretization<T>,
    pub contact: ContactParams<T>,
    pub slope: SlopeGeometry<T>,
}

struct ElementContact<T> {
    arm: Vec3<T>,
    normal: T,
    /// Friction slope `D_i`.
    drag: T,
    /// Tangential velocity from the prescribed shape motion.
    shape_slip: Vec3<T>,
}

fn tangential<T: Real>(v: Vec3<T>) -> Vec3<T> {
    Vec3::new(v.x, v.y, T::zero())
}

impl<T: Real> HighFiModel<T> {
    pub fn new(disc: RingDiscretization<T>, contact: ContactParams<T>, slope: SlopeGeometry<T>) -> Result<Self> {
        contact.validate()?;
        Ok(Self { disc, contact, slope })
    }

    fn contacts(&self, state: &BodyState<T>, shape: &ShapeMotion<T>) -> (Vec<ElementContact<T>>, ContactSummary<T>) {
        let r = state.rotation();
        let omega = r * state.omega_body;
        let (pos, vel) = element_kinematics(&self.disc, shape);
        let mut out = Vec::new();
        let mut summary = ContactSummary {
            normal_total: T::zero(),
            center_of_pressure: None,
            active_elements: 0,
            mean_slip: T::zero(),
            clearance: T::infinity(),
            lowest: state.p,
        };
        let (mut cx, mut cy, mut slip) = (T::zero(), T::zero(), T::zero());
        for (c, cdot) in pos.iter().zip(&vel) {
            let arm = r * *c;
            let centre = state.p + arm;
            let d = self.disc.half_thickness - centre.z;
            if -d < summary.clearance {
                summary.clearance = -d;
                summary.lowest = centre;
            }
            if d <= T::zero() {
                continue;
            }
            let shape_vel = r * *cdot;
            let v = state.v + omega.cross(arm) + shape_vel;
            let f_n = contact_force(d, -v.z, &self.contact);
            if f_n <= T::zero() {
                continue;
            }
            let vt = tangential(v);
            let speed = vt.norm();
            summary.normal_total += f_n;
            summary.active_elements += 1;
            cx += f_n * centre.x;
            cy += f_n * centre.y;
            slip += f_n * speed;
            out.push(ElementContact {
                arm,
                normal: f_n,
                drag: friction_coefficient(f_n, speed, &self.contact),
                shape_slip: tangential(shape_vel),
            });
        }
        if summary.normal_total > T::zero() {
            summary.center_of_pressure = Some((cx / summary.normal_total, cy / summary.normal_total));
            summary.mean_slip = slip / summary.normal_total;
        }
        (out, summary)
    }

    /// Contact forces and slip at a configuration, without stepping.
    pub fn contact_summary(&self, state: &BodyState<T>, shape: &ShapeMotion<T>) -> ContactSummary<T> {
        self.contacts(state, shape).1
    }

    /// Advances `state` by `dt`. `shape` holds the shape at the start of
    /// the step and `shape_next` at its end. The returned summary describes
    /// the contacts at the start of the step.
    pub fn step(
        &self,
        state: &BodyState<T>,
        shape: &ShapeMotion<T>,
        shape_next: &ShapeMotion<T>,
        dt: T,
    ) -> Result<(BodyState<T>, ContactSummary<T>)> {
        let m = self.disc.mass;
        let r = state.rotation();
        let i_now = composite_inertia(&self.disc, shape.a, shape.b)?;
        let i_next = composite_inertia(&self.disc, shape_next.a, shape_next.b)?;
        let l = r * (i_now * state.omega_body);
        let (contacts, summary) = self.contacts(state, shape);

        let gravity = self.slope.gravity() * m;
        let mut force = gravity;
        let mut torque = Vec3::zero();
        for c in &contacts {
            let f = Vec3::new(T::zero(), T::zero(), c.normal);
            force += f;
            torque += c.arm.cross(f);
        }

        let (v_new, l_new) = if contacts.is_empty() {
            (state.v + force * (dt / m), l + torque * dt)
        } else {
            // (M + dt Σ D JᵀJ) u⁺ = M u + dt F − dt Σ D Jᵀ s with u = (v, ω),
            // J = [P, −P·[r]×] and P the in-plane projector.
            let inertia_world = r * i_next * r.transpose();
            let p = Mat3::diagonal(Vec3::new(T::one(), T::one(), T::zero()));
            let mut a = [[T::zero(); 6]; 6];
            let mut blocks = [Mat3::identity() * m, Mat3::zero(), Mat3::zero(), inertia_world];
            let mut rhs_v = state.v * m + force * dt;
            let mut rhs_w = l + torque * dt;
            for c in &contacts {
                let s = Mat3::skew(c.arm);
                let k = c.drag * dt;
                let ps = p * s;
                blocks[0] = blocks[0] + p * k;
                blocks[1] = blocks[1] - ps * k;
                blocks[2] = blocks[2] + s * p * k;
                blocks[3] = blocks[3] - s * ps * k;
                rhs_v -= c.shape_slip * k;
                rhs_w -= c.arm.cross(c.shape_slip) * k;
            }
            for (bi, blk) in blocks.iter().enumerate() {
                let (r0, c0) = ((bi / 2) * 3, (bi % 2) * 3);
                for i in 0..3 {
                    for j in 0..3 {
                        a[r0 + i][c0 + j] = blk.m[i][j];
                    }
                }
            }
            let mut flat: Vec<T> = a.iter().flatten().copied().collect();
            let mut b = vec![rhs_v.x, rhs_v.y, rhs_v.z, rhs_w.x, rhs_w.y, rhs_w.z];
            if solve_dense(&mut flat, &mut b, 6).is_none() {
                return Err(HighFiError::NonFiniteState { step: 0, t: f64::NAN });
            }
            let v_solved = Vec3::new(b[0], b[1], b[2]);
            let w_solved = Vec3::new(b[3], b[4], b[5]);
            // Re-apply the resulting friction impulses explicitly so the
            // momentum update is an exact impulse sum.
            let mut f_total = force;
            let mut t_total = torque;
            for c in &contacts {
                let vt = p * (v_solved + w_solved.cross(c.arm)) + c.shape_slip;
                let f = -vt * c.drag;
                f_total += f;
                t_total += c.arm.cross(f);
            }
            (state.v + f_total * (dt / m), l + t_total * dt)
        };

        let i_next_inv = i_next
            .inverse()
            .ok_or(HighFiError::NonFiniteState { step: 0, t: f64::NAN })?;
        let omega_body_mid = i_next_inv * (r.transpose() * l_new);
        let q_new = state.q.mul(Quaternion::from_rotation_vector(omega_body_mid * dt)).normalized();
        let r_new = q_new.to_rotation_matrix();
        let next = BodyState {
            p: state.p + v_new * dt,
            q: q_new,
            v: v_new,
            omega_body: i_next_inv * (r_new.transpose() * l_new),
        };
        if !next.is_finite() {
            return Err(HighFiError::NonFiniteState { step: 0, t: f64::NAN });
        }
        Ok((next, summary))
    }

    /// Total normal force when the body sits at height `z` with the given
    /// attitude and no velocity.
    fn static_load(&self, rotation: &Mat3<T>, shape: &ShapeMotion<T>, z: T) -> T {
        let (pos, _) = element_kinematics(&self.disc, shape);
        pos.iter()
            .map(|c| {
                let d = self.disc.half_thickness - (z + (*rotation * *c).z);
                contact_force(d, T::zero(), &self.contact)
            })
            .sum()
    }

    /// Height of the ring centre at which the static penalty forces carry
    /// the normal component of the weight.
    pub fn settled_height(&self, rotation: &Mat3<T>, shape: &ShapeMotion<T>) -> T {
        let (pos, _) = element_kinematics(&self.disc, shape);
        let lowest = pos.iter().map(|c| (*rotation * *c).z).fold(T::infinity(), T::min);
        let target = self.disc.mass * self.slope.g * self.slope.alpha.cos();
        let mut hi = self.disc.half_thickness - lowest;
        let mut lo = hi - lit(0.1);
        let two = lit::<T>(2.0);
        for _ in 0..200 {
            let mid = (lo + hi) / two;
            if mid <= lo || mid >= hi {
                break;
            }
            if self.static_load(rotation, shape, mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (lo + hi) / two
    }
}

/// Fixed-step driver: calls `shape_at(t)` for the prescribed shape and
/// `observe(t, state, summary)` at every step start and at the end.
pub fn simulate<T: Real>(
    model: &HighFiModel<T>,
    initial: BodyState<T>,
    shape_at: impl Fn(T) -> std::result::Result<ShapeMotion<T>, PostureError>,
    duration: T,
    dt: T,
    mut observe: impl FnMut(T, &BodyState<T>, &ContactSummary<T>),
) -> Result<BodyState<T>> {
    let steps = (duration / dt).round().to_usize().unwrap_or(0).max(1);
    let dt = duration / T::from_usize(steps).expect("step count");
    let mut state = initial;
    let mut shape = shape_at(T::zero())?;
    for k in 0..steps {
        let t = dt * T::from_usize(k).expect("step index");
        let t_next = dt * T::from_usize(k + 1).expect("step index");
        let shape_next = shape_at(t_next)?;
        let (next, summary) = model.step(&state, &shape, &shape_next, dt).map_err(|e| match e {
            HighFiError::NonFiniteState { .. } => HighFiError::NonFiniteState { step: k, t: t.to_f64_lossy() },
            other => other,
        })?;
        observe(t, &state, &summary);
        state = next;
        shape = shape_next;
    }
    observe(duration, &state, &model.contact_summary(&state, &shape));
    Ok(state)
}
