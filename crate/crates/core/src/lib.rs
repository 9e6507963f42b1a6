//! Rolling and posture-shifting dynamics of a deformable elliptical ring
//! on an inclined plane, with a reduced cascade model, a penalty-contact
//! multibody reference model and a harness comparing the two.
//!
//! Numerical code is generic over [`scalar::Real`] (`f32` or `f64`); the
//! aliases below fix it to `f64`, which is what the harness uses.

pub mod harness;
pub mod highfi;
pub mod linalg;
pub mod ode;
pub mod posture;
pub mod quadrature;
pub mod scalar;
pub mod trace;
pub mod tumbling;

pub use scalar::Real;

pub type Vec3 = linalg::Vec3<f64>;
pub type Mat3 = linalg::Mat3<f64>;
pub type RingProperties = posture::RingProperties<f64>;
pub type PostureState = posture::PostureState<f64>;
pub type ShapeMotion = posture::ShapeMotion<f64>;
pub type SlopeGeometry = tumbling::SlopeGeometry<f64>;
pub type TumblingState = tumbling::TumblingState<f64>;
pub type IntegratorConfig = ode::IntegratorConfig<f64>;
pub type HighFiModel = highfi::HighFiModel<f64>;
pub type BodyState = highfi::BodyState<f64>;
pub type Trace = trace::Trace<f64>;
