//! Sigmoid-bump posture input.

use crate::posture::{slaved_shape_motion, solve_conjugate_axis, PostureError, ShapeMotion};

/// How the second semi-axis follows the prescribed one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SignalMode {
    /// `a` is recomputed from the perimeter constraint at every instant.
    #[default]
    Slaved,
    /// `a` stays at its initial value (the perimeter is not conserved).
    Independent,
}

impl SignalMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            SignalMode::Slaved => "slaved",
            SignalMode::Independent => "independent",
        }
    }
}

/// `b(t) = 4b′σ(1 − σ) + b₀` with `σ = σ(γ(t − t₀))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpulseSignal {
    pub b0: f64,
    pub b_prime: f64,
    pub t0: f64,
    pub gamma: f64,
}

impl Default for ImpulseSignal {
    fn default() -> Self {
        Self { b0: 0.3, b_prime: 0.0, t0: 2.0, gamma: 10.0 }
    }
}

/// `b`, `ḃ` and `b̈` of the bump at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalValue {
    pub b: f64,
    pub b_dot: f64,
    pub b_ddot: f64,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn impulse_signal(t: f64, sig: &ImpulseSignal) -> SignalValue {
    let s = sigmoid(sig.gamma * (t - sig.t0));
    let bump = s * (1.0 - s);
    let k = 4.0 * sig.b_prime;
    SignalValue {
        b: k * bump + sig.b0,
        b_dot: k * sig.gamma * bump * (1.0 - 2.0 * s),
        b_ddot: k * sig.gamma * sig.gamma * bump * (1.0 - 6.0 * s + 6.0 * s * s),
    }
}

/// Shape and its first two derivatives at time `t` for a ring of the given
/// perimeter. `a0` is used by [`SignalMode::Independent`].
pub fn shape_at(t: f64, sig: &ImpulseSignal, mode: SignalMode, perimeter: f64, a0: f64) -> Result<ShapeMotion<f64>, PostureError> {
    let v = impulse_signal(t, sig);
    match mode {
        SignalMode::Slaved => {
            let a = solve_conjugate_axis(perimeter, v.b)?;
            slaved_shape_motion(a, v.b, v.b_dot, v.b_ddot)
        }
        SignalMode::Independent => Ok(ShapeMotion {
            a: a0,
            b: v.b,
            a_dot: 0.0,
            b_dot: v.b_dot,
            a_ddot: 0.0,
            b_ddot: v.b_ddot,
        }),
    }
}
