//! Runs a scenario through either model and records the common channels.

use std::f64::consts::{FRAC_PI_4, PI, TAU};

use crate::highfi::{
    composite_inertia, simulate, BodyState, ContactParams, HighFiModel, Quaternion, RingDiscretization,
};
use crate::ode::{integrate_adaptive, Direction, EventSpec, IntegratorConfig, Termination};
use crate::posture::{
    inertia_outputs_labelled, inertia_rate_labelled, posture_rhs, solve_conjugate_axis, ControlInput,
    InertiaTriple, PostureError, PostureState, RingProperties, ShapeMotion,
};
use crate::trace::{uniform_grid, Trace, TraceBuilder, TraceMetadata};
use crate::tumbling::{
    attitude_angles, center_of_mass, solve_rolling, AttitudeKinematics, HeadingTracker, RollingSolution,
    SlopeGeometry, TumblingError, TumblingState,
};

use super::config::ScenarioConfig;
use super::signal::shape_at;
use super::HarnessError;

/// Channel names shared by both models (the time column is separate).
pub const CHANNELS: [&str; 22] = [
    "theta",
    "psi",
    "phi",
    "theta_dot",
    "psi_dot",
    "phi_dot",
    "pcx",
    "pcy",
    "com_x",
    "com_y",
    "com_z",
    "vx",
    "vy",
    "vz",
    "heading_deg",
    "v_tumble",
    "f_n",
    "a",
    "b",
    "Ixx",
    "Iyy",
    "Izz",
];

pub const CASCADE_MODEL: &str = "rom";
pub const HIGHFI_MODEL: &str = "highfi";

/// Polar angle of the material point tracked by the posture state.
const TRACKED_POINT_ANGLE: f64 = FRAC_PI_4;

fn metadata(cfg: &ScenarioConfig, scenario: &str, model: &str) -> TraceMetadata {
    TraceMetadata { scenario: scenario.to_owned(), model: model.to_owned(), config_hash: cfg.hash() }
}

/// Both models' view of the scenario's physical parameters.
struct Setup {
    props: RingProperties<f64>,
    slope: SlopeGeometry<f64>,
    a0: f64,
}

impl Setup {
    fn new(cfg: &ScenarioConfig) -> Result<Self, HarnessError> {
        let props = RingProperties::new(cfg.ring_mass, cfg.ring_perimeter)?;
        let slope = SlopeGeometry::from_degrees(cfg.slope_deg, cfg.gravity)?;
        let a0 = solve_conjugate_axis(cfg.ring_perimeter, cfg.signal.b0)?;
        Ok(Self { props, slope, a0 })
    }

    /// Prescribed shape at time `t`.
    fn shape(&self, cfg: &ScenarioConfig, t: f64) -> Result<ShapeMotion<f64>, PostureError> {
        if cfg.signal_enabled {
            shape_at(t, &cfg.signal, cfg.signal_mode, cfg.ring_perimeter, self.a0)
        } else {
            Ok(ShapeMotion::rigid(self.a0, cfg.signal.b0))
        }
    }
}

fn initial_rolling_state(cfg: &ScenarioConfig) -> TumblingState<f64> {
    let i = &cfg.init;
    TumblingState {
        theta: i.theta,
        psi: i.psi,
        phi: i.phi,
        theta_dot: i.theta_dot,
        psi_dot: i.psi_dot,
        phi_dot: i.phi_dot,
        pcx: 0.0,
        pcy: 0.0,
    }
}

/// The augmented `[x; ξ]` system integrated by the cascade model.
struct Cascade<'a> {
    cfg: &'a ScenarioConfig,
    setup: Setup,
    /// Inertia when the shape never changes.
    frozen: Option<InertiaTriple<f64>>,
}

struct CascadeEval {
    rolling: RollingSolution<f64>,
    inertia: InertiaTriple<f64>,
    posture: [f64; 6],
    shape: ShapeMotion<f64>,
}

impl<'a> Cascade<'a> {
    fn new(cfg: &'a ScenarioConfig) -> Result<Self, HarnessError> {
        let setup = Setup::new(cfg)?;
        let frozen = if cfg.signal_enabled {
            None
        } else {
            Some(inertia_outputs_labelled(setup.a0, cfg.signal.b0, &setup.props, cfg.inertia_labels)?)
        };
        Ok(Self { cfg, setup, frozen })
    }

    fn initial_state(&self) -> Result<Vec<f64>, HarnessError> {
        // Start on the prescribed shape, which differs from (a0, b0) when the
        // impulse is already under way at t = 0.
        let s0 = self.setup.shape(self.cfg, 0.0)?;
        let xi = PostureState::on_ellipse(TRACKED_POINT_ANGLE, s0.a, s0.b)?;
        let mut z = initial_rolling_state(self.cfg).to_array().to_vec();
        z.extend_from_slice(&xi.to_array());
        Ok(z)
    }

    fn eval(&self, t: f64, z: &[f64]) -> Result<CascadeEval, TumblingError> {
        let x = TumblingState::from_slice(&z[..8]);
        let xi = PostureState::from_slice(&z[8..]);
        let signal = self.setup.shape(self.cfg, t)?;
        // The rolling subsystem sees the integrated semi-axes and the
        // prescribed rates.
        let shape = ShapeMotion { a: xi.a, b: xi.b, ..signal };
        let (inertia, rate) = match self.frozen {
            Some(y) => (y, InertiaTriple::default()),
            None => {
                let p = &self.setup.props;
                let labels = self.cfg.inertia_labels;
                (
                    inertia_outputs_labelled(xi.a, xi.b, p, labels)?,
                    inertia_rate_labelled(xi.a, xi.b, shape.a_dot, shape.b_dot, p, labels)?,
                )
            }
        };
        let rolling = solve_rolling(&x, &inertia, &rate, &shape, &self.setup.slope, &self.setup.props)?;
        let posture = posture_rhs(&xi, &ControlInput { a_rate: shape.a_dot, b_rate: shape.b_dot })?;
        Ok(CascadeEval { rolling, inertia, posture, shape })
    }

    fn rhs(&self, t: f64, z: &[f64], dz: &mut [f64]) -> Result<(), TumblingError> {
        let e = self.eval(t, z)?;
        dz[..8].copy_from_slice(&e.rolling.derivative);
        dz[8..].copy_from_slice(&e.posture);
        Ok(())
    }

    fn row(&self, t: f64, z: &[f64], heading: &mut HeadingTracker<f64>) -> Result<Vec<f64>, TumblingError> {
        let e = self.eval(t, z)?;
        let s = &e.rolling;
        let (p, v) = (s.com, s.com_velocity);
        let h = heading.update(v.x, v.y);
        let mut row = z[..8].to_vec();
        row.extend_from_slice(&[
            p.x,
            p.y,
            p.z,
            v.x,
            v.y,
            v.z,
            h.to_degrees(),
            v.norm(),
            s.reaction.f_n,
            e.shape.a,
            e.shape.b,
            e.inertia.xx,
            e.inertia.yy,
            e.inertia.zz,
        ]);
        Ok(row)
    }

    fn trace(&self, samples: Vec<(f64, Vec<f64>)>, meta: TraceMetadata) -> Result<Trace<f64>, TumblingError> {
        let mut b = TraceBuilder::new(CHANNELS);
        let mut heading = HeadingTracker::new();
        for (t, z) in samples {
            let row = self.row(t, &z, &mut heading)?;
            b.push(t, row).expect("rows match the channel list");
        }
        Ok(b.finish(meta))
    }
}

/// Integrates the cascade model and samples it on the output grid.
///
/// A normal force falling through zero stops the run with
/// [`HarnessError::ContactLoss`] carrying the trace up to that instant,
/// unless the event is disarmed in the configuration.
pub fn run_cascade(cfg: &ScenarioConfig, scenario: &str) -> Result<Trace<f64>, HarnessError> {
    cfg.validate()?;
    let model = Cascade::new(cfg)?;
    let z0 = model.initial_state()?;
    let icfg = IntegratorConfig::default().with_tolerances(cfg.cascade.rtol, cfg.cascade.atol);
    let observer = |t: f64, z: &[f64]| model.eval(t, z).map(|e| e.rolling.reaction.f_n).unwrap_or(f64::NAN);
    let events = if cfg.cascade.contact_event {
        vec![EventSpec::new("contact_loss", Direction::Falling, true, observer)]
    } else {
        Vec::new()
    };
    let sol = integrate_adaptive(|t, z: &[f64], dz: &mut [f64]| model.rhs(t, z, dz), &z0, (0.0, cfg.duration), &icfg, &events)?;
    let trace = model.trace(sol.resample(cfg.output_dt), metadata(cfg, scenario, CASCADE_MODEL))?;
    match sol.termination {
        Termination::Completed => Ok(trace),
        Termination::Event(_) => Err(HarnessError::ContactLoss { t: sol.t_end, trace: Box::new(trace) }),
    }
}

fn unwrap_angle(prev: Option<f64>, raw: f64) -> f64 {
    match prev {
        None => raw,
        Some(p) => p + (raw - p + PI).rem_euclid(TAU) - PI,
    }
}

/// High-fidelity initial state matching the cascade's initial conditions:
/// same attitude, rolling velocity, centre height from the static contact
/// balance.
pub fn highfi_initial_state(
    model: &HighFiModel<f64>,
    x0: &TumblingState<f64>,
    shape: &ShapeMotion<f64>,
) -> Result<BodyState<f64>, TumblingError> {
    let kin = AttitudeKinematics::new(x0);
    let (com, v) = center_of_mass(x0, shape, &model.slope)?;
    let z = model.settled_height(&kin.rotation, shape);
    Ok(BodyState {
        p: crate::linalg::Vec3::new(com.x, com.y, z),
        q: Quaternion::from_rotation_matrix(&kin.rotation),
        v,
        omega_body: kin.omega_body,
    })
}

/// Fixed-step high-fidelity run sampled on the output grid.
pub fn run_highfi(cfg: &ScenarioConfig, scenario: &str) -> Result<Trace<f64>, HarnessError> {
    cfg.validate()?;
    let setup = Setup::new(cfg)?;
    let disc = RingDiscretization::new(cfg.highfi.elements, cfg.ring_mass, 0.005)?;
    let model = HighFiModel::new(disc, ContactParams::default(), setup.slope)?;
    let x0 = initial_rolling_state(cfg);
    let shape0 = setup.shape(cfg, 0.0)?;
    let initial = highfi_initial_state(&model, &x0, &shape0)?;

    let grid = uniform_grid(0.0, cfg.duration, cfg.output_dt);
    let mut next = 0usize;
    let mut builder = TraceBuilder::new(CHANNELS);
    let mut heading = HeadingTracker::new();
    let mut angles: Option<(f64, f64)> = None;
    let mut failure: Option<HarnessError> = None;
    let half_step = 0.5 * cfg.highfi.dt;

    let shape_fn = |t: f64| setup.shape(cfg, t);
    let observe = |t: f64, s: &BodyState<f64>, c: &crate::highfi::ContactSummary<f64>| {
        if next >= grid.len() || (t - grid[next]).abs() > half_step || failure.is_some() {
            return;
        }
        let tk = grid[next];
        next += 1;
        let shape = match setup.shape(cfg, tk) {
            Ok(v) => v,
            Err(e) => {
                failure = Some(e.into());
                return;
            }
        };
        let r = s.rotation();
        let (th_raw, psi, ph_raw) = attitude_angles(&r);
        let theta = unwrap_angle(angles.map(|a| a.0), th_raw);
        let phi = unwrap_angle(angles.map(|a| a.1), ph_raw);
        angles = Some((theta, phi));
        let kin = AttitudeKinematics::new(&TumblingState { theta, psi, phi, ..Default::default() });
        let rates = kin.jacobian.inverse().map(|j| j * s.omega()).unwrap_or(crate::linalg::Vec3::zero());
        let (pcx, pcy) = c.center_of_pressure.unwrap_or((c.lowest.x, c.lowest.y));
        let inertia = match composite_inertia(&model.disc, shape.a, shape.b) {
            Ok(i) => i,
            Err(e) => {
                failure = Some(e.into());
                return;
            }
        };
        let h = heading.update(s.v.x, s.v.y);
        let row = vec![
            theta,
            psi,
            phi,
            rates.x,
            rates.y,
            rates.z,
            pcx,
            pcy,
            s.p.x,
            s.p.y,
            s.p.z,
            s.v.x,
            s.v.y,
            s.v.z,
            h.to_degrees(),
            s.v.norm(),
            c.normal_total,
            shape.a,
            shape.b,
            inertia.m[0][0],
            inertia.m[1][1],
            inertia.m[2][2],
        ];
        builder.push(tk, row).expect("grid times increase");
    };
    simulate(&model, initial, shape_fn, cfg.duration, cfg.highfi.dt, observe)?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(builder.finish(metadata(cfg, scenario, HIGHFI_MODEL)))
}
