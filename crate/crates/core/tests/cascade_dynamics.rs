use std::f64::consts::{FRAC_PI_6, PI, TAU};

use ringtumble::harness::{parse_config, run_cascade, HarnessError};
use ringtumble::linalg::Mat3;
use ringtumble::ode::{integrate_adaptive, IntegratorConfig, Solution};
use ringtumble::posture::{inertia_outputs, solve_conjugate_axis, InertiaTriple, RingProperties, ShapeMotion};
use ringtumble::tumbling::{
    contact_velocity, total_energy, tumbling_rhs, AttitudeKinematics, SlopeGeometry, TumblingError, TumblingState,
};

struct Rigid {
    props: RingProperties<f64>,
    slope: SlopeGeometry<f64>,
    shape: ShapeMotion<f64>,
    y: InertiaTriple<f64>,
}

impl Rigid {
    fn new(b: f64) -> Self {
        let props = RingProperties::default();
        let a = solve_conjugate_axis(props.perimeter, b).unwrap();
        Self {
            y: inertia_outputs(a, b, &props).unwrap(),
            props,
            slope: SlopeGeometry::default(),
            shape: ShapeMotion::rigid(a, b),
        }
    }

    fn solve(&self, x0: TumblingState<f64>, t1: f64) -> Solution<f64> {
        self.solve_with(x0, t1, &IntegratorConfig::default())
    }

    fn solve_with(&self, x0: TumblingState<f64>, t1: f64, cfg: &IntegratorConfig<f64>) -> Solution<f64> {
        let rhs = |_t: f64, z: &[f64], dz: &mut [f64]| -> Result<(), TumblingError> {
            let x = TumblingState::from_slice(z);
            let d = tumbling_rhs(&x, &self.y, &InertiaTriple::default(), &self.shape, &self.slope, &self.props)?;
            dz.copy_from_slice(&d);
            Ok(())
        };
        integrate_adaptive(rhs, &x0.to_array(), (0.0, t1), cfg, &[]).unwrap()
    }

    fn energy(&self, z: &[f64]) -> f64 {
        total_energy(&TumblingState::from_slice(z), &self.y, &self.shape, &self.slope, &self.props).unwrap()
    }
}

fn spinning() -> TumblingState<f64> {
    TumblingState { psi_dot: FRAC_PI_6, phi_dot: TAU, ..Default::default() }
}

#[test]
fn energy_is_conserved_without_input() {
    let sys = Rigid::new(0.3);
    let sol = sys.solve(spinning(), 4.0);
    let e0 = sys.energy(&sol.x_start);
    let drift = sol
        .resample(0.01)
        .iter()
        .map(|(_, z)| ((sys.energy(z) - e0) / e0).abs())
        .fold(0.0, f64::max);
    assert!(drift < 1e-5, "relative energy drift {drift:e}");
}

#[test]
fn contact_point_is_at_rest_at_every_accepted_step() {
    let sys = Rigid::new(0.3);
    let sol = sys.solve(spinning(), 2.0);
    assert!(sol.segments.len() > 10);
    for seg in &sol.segments {
        let x = TumblingState::from_slice(seg.start_state());
        let v = contact_velocity(&x, &sys.shape, &sys.slope).unwrap();
        assert!(v.norm() < 1e-8, "slip {:e} at t = {}", v.norm(), seg.t0);
    }
}

#[test]
fn planar_descent_accelerates_at_half_g_sin_alpha() {
    // Hoop: I = m R², so a = g sin α / (1 + I / (m R²)).
    let expected = 9.81 * 15f64.to_radians().sin() / 2.0;
    let sys = Rigid::new(1.6 / TAU);
    let sol = sys.solve(TumblingState::default(), 0.5);
    for (t, z) in sol.resample(0.05).into_iter().skip(1) {
        let x = TumblingState::from_slice(&z);
        let r = sys.shape.b;
        let v = x.phi_dot * r;
        assert!((v / t / expected - 1.0).abs() < 5e-3, "t = {t}: v = {v}");
        assert!(x.psi.abs() < 1e-12 && x.pcy.abs() < 1e-12);
    }
}

#[test]
fn rotation_rate_matches_angular_velocity_along_trajectory() {
    let sys = Rigid::new(0.3);
    // Tight tolerances keep the integrated angles consistent with the
    // integrated rates well below the checked bound.
    let tight = IntegratorConfig::default().with_tolerances(1e-12, 1e-13);
    let sol = sys.solve_with(spinning(), 1.0, &tight);
    let h = 1e-3;
    for k in 1..20 {
        let t = k as f64 * 0.05;
        let at = |s: f64| AttitudeKinematics::new(&TumblingState::from_slice(&sol.eval(s).unwrap()));
        let c = at(t);
        // Five-point central difference.
        let rdot = ((at(t - 2.0 * h).rotation - at(t + 2.0 * h).rotation)
            + (at(t + h).rotation - at(t - h).rotation) * 8.0)
            * (1.0 / (12.0 * h));
        let err = (rdot * c.rotation.transpose() - Mat3::skew(c.omega)).frobenius();
        assert!(err < 1e-6, "t = {t}: {err:e}");
    }
}

fn config(extra: &str) -> ringtumble::harness::ScenarioConfig {
    parse_config(extra).unwrap()
}

#[test]
fn straight_circle_descent_keeps_zero_heading() {
    let cfg = config("signal.b0 = 0.25464790894703254\ninit.psi_dot = 0\n");
    let tr = run_cascade(&cfg, "straight").unwrap();
    assert!(tr.channel("heading_deg").unwrap().iter().all(|h| h.to_radians().abs() < 1e-6));
    assert!(tr.channel("pcy").unwrap().iter().all(|y| y.abs() < 1e-9));
}

#[test]
fn circle_from_rest_reaches_oracle_velocity() {
    let cfg = config("signal.b0 = 0.25464790894703254\ninit.psi_dot = 0\ninit.phi_dot = 0\nduration = 0.5\n");
    let tr = run_cascade(&cfg, "rest").unwrap();
    let v = *tr.channel("vx").unwrap().last().unwrap();
    let expected = 9.81 * 15f64.to_radians().sin() / 2.0 * 0.5;
    assert!((v / expected - 1.0).abs() < 5e-3, "v = {v}, expected {expected}");
}

#[test]
fn negated_lean_rate_mirrors_the_track() {
    let base = "duration = 1\nsignal.b_prime = 0.08\nsignal.t0 = 0.5\ncascade.contact_event = false\n";
    let left = run_cascade(&config(base), "left").unwrap();
    let right = run_cascade(&config(&format!("{base}init.psi_dot = {}\n", -PI / 6.0)), "right").unwrap();
    for ch in ["pcy", "heading_deg", "com_y", "psi"] {
        let (l, r) = (left.channel(ch).unwrap(), right.channel(ch).unwrap());
        let worst = l.iter().zip(&r).map(|(a, b)| (a + b).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-6, "{ch}: {worst:e}");
    }
    for ch in ["pcx", "v_tumble", "f_n"] {
        let (l, r) = (left.channel(ch).unwrap(), right.channel(ch).unwrap());
        let worst = l.iter().zip(&r).map(|(a, b)| (a - b).abs() / (1.0 + a.abs())).fold(0.0, f64::max);
        assert!(worst < 1e-6, "{ch}: {worst:e}");
    }
}

#[test]
fn default_scenario_reports_contact_loss_with_partial_trace() {
    let cfg = config("signal.b_prime = 0.08\n");
    match run_cascade(&cfg, "default") {
        Err(HarnessError::ContactLoss { t, trace }) => {
            assert!(t > 0.3 && t < 0.4, "t* = {t}");
            assert!(*trace.times().last().unwrap() <= t);
            let f_n = trace.channel("f_n").unwrap();
            let (last, before) = f_n.split_last().unwrap();
            assert!(before.iter().all(|&f| f > 0.0));
            assert!(last.abs() < 1e-6, "f_n at the crossing: {last:e}");
        }
        other => panic!("expected contact loss, got {other:?}"),
    }
}

#[test]
fn perimeter_is_conserved_through_the_impulse() {
    let cfg = config("signal.b_prime = 0.08\ncascade.contact_event = false\n");
    let tr = run_cascade(&cfg, "open").unwrap();
    let (a, b) = (tr.channel("a").unwrap(), tr.channel("b").unwrap());
    let peak = b.iter().copied().fold(0.0, f64::max);
    assert!((peak - 0.38).abs() < 1e-6);
    for (a, b) in a.iter().zip(&b) {
        let p = ringtumble::posture::perimeter(*a, *b).unwrap();
        assert!(((p - 1.6) / 1.6).abs() < 1e-6);
    }
}

#[test]
fn cascade_runs_are_bitwise_repeatable() {
    let cfg = config("signal.b_prime = 0.08\nsignal.t0 = 0.5\nduration = 1\ncascade.contact_event = false\n");
    assert_eq!(run_cascade(&cfg, "a").unwrap(), run_cascade(&cfg, "a").unwrap());
}
