//! Adaptive Dormand–Prince 5(4) integration with dense output and
//! sign-change event location.

use thiserror::Error;

use crate::scalar::{lit, Real};
use crate::trace::{uniform_grid, Trace, TraceBuilder, TraceMetadata};

/// Event crossings are refined until the bracket is narrower than this.
pub const EVENT_TIME_TOL: f64 = 1e-12;

/// Observer evaluations per step when scanning for sign changes.
const EVENT_SUBSAMPLES: usize = 4;

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order minus fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;
const BETA: f64 = 0.04;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrationError<E> {
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error("step size {h:e} below minimum at t = {t}")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("step budget of {steps} exhausted at t = {t}")]
    StepBudgetExceeded { t: f64, steps: usize },
    #[error("non-finite derivative at t = {t}")]
    NonFiniteDerivative { t: f64 },
    #[error(transparent)]
    System(E),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig<T> {
    pub rtol: T,
    pub atol: T,
    pub h_init: T,
    pub h_min: T,
    pub h_max: T,
    pub max_steps: usize,
}

impl<T: Real> Default for IntegratorConfig<T> {
    fn default() -> Self {
        Self {
            rtol: lit(1e-8),
            atol: lit(1e-10),
            h_init: lit(1e-4),
            h_min: lit(1e-12),
            h_max: lit(1e-2),
            max_steps: 2_000_000,
        }
    }
}

impl<T: Real> IntegratorConfig<T> {
    pub fn with_tolerances(mut self, rtol: T, atol: T) -> Self {
        self.rtol = rtol;
        self.atol = atol;
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.rtol > T::zero() && self.atol > T::zero()) {
            return Err(format!("tolerances must be positive (rtol {}, atol {})", self.rtol, self.atol));
        }
        if !(self.h_min > T::zero() && self.h_min <= self.h_init && self.h_init <= self.h_max) {
            return Err(format!(
                "step bounds must satisfy 0 < h_min ≤ h_init ≤ h_max (got {}, {}, {})",
                self.h_min, self.h_init, self.h_max
            ));
        }
        if self.max_steps == 0 {
            return Err("step budget must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Observer goes from positive to non-positive.
    Falling,
    /// Observer goes from negative to non-negative.
    Rising,
    Any,
}

impl Direction {
    fn crosses<T: Real>(self, g0: T, g1: T) -> bool {
        let z = T::zero();
        match self {
            Direction::Falling => g0 > z && g1 <= z,
            Direction::Rising => g0 < z && g1 >= z,
            Direction::Any => (g0 > z && g1 <= z) || (g0 < z && g1 >= z),
        }
    }
}

pub type Observer<'a, T> = Box<dyn Fn(T, &[T]) -> T + 'a>;

/// Scalar observer `g(t, x)` whose sign change marks an event.
pub struct EventSpec<'a, T> {
    pub name: String,
    pub observer: Observer<'a, T>,
    pub direction: Direction,
    pub terminal: bool,
}

impl<'a, T> EventSpec<'a, T> {
    pub fn new(name: impl Into<String>, direction: Direction, terminal: bool, observer: impl Fn(T, &[T]) -> T + 'a) -> Self {
        Self { name: name.into(), observer: Box::new(observer), direction, terminal }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord<T> {
    /// Index into the event list passed to [`integrate_adaptive`].
    pub event: usize,
    pub t: T,
    pub state: Vec<T>,
}

/// Dense output over one accepted step.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSegment<T> {
    pub t0: T,
    pub h: T,
    coeffs: [Vec<T>; 5],
}

impl<T: Real> DenseSegment<T> {
    pub fn t1(&self) -> T {
        self.t0 + self.h
    }

    pub fn eval_into(&self, t: T, out: &mut [T]) {
        let s = (t - self.t0) / self.h;
        let s1 = T::one() - s;
        let [r1, r2, r3, r4, r5] = &self.coeffs;
        for i in 0..out.len() {
            out[i] = r1[i] + s * (r2[i] + s1 * (r3[i] + s * (r4[i] + s1 * r5[i])));
        }
    }

    pub fn eval(&self, t: T) -> Vec<T> {
        let mut out = vec![T::zero(); self.coeffs[0].len()];
        self.eval_into(t, &mut out);
        out
    }

    pub fn start_state(&self) -> &[T] {
        &self.coeffs[0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Reached the end of the requested span.
    Completed,
    /// Stopped by the terminal event with this index.
    Event(usize),
}

/// Accepted steps of one integration.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution<T> {
    pub segments: Vec<DenseSegment<T>>,
    pub events: Vec<EventRecord<T>>,
    pub termination: Termination,
    pub t_start: T,
    pub t_end: T,
    pub x_start: Vec<T>,
    pub x_end: Vec<T>,
    pub rejected_steps: usize,
}

impl<T: Real> Solution<T> {
    pub fn accepted_steps(&self) -> usize {
        self.segments.len()
    }

    /// Dense-output state at `t ∈ [t_start, t_end]`.
    pub fn eval(&self, t: T) -> Option<Vec<T>> {
        if t < self.t_start || t > self.t_end {
            return None;
        }
        if t == self.t_end {
            return Some(self.x_end.clone());
        }
        if self.segments.is_empty() {
            return Some(self.x_start.clone());
        }
        let k = self.segments.partition_point(|s| s.t1() <= t).min(self.segments.len() - 1);
        Some(self.segments[k].eval(t))
    }

    /// States on `t_start + k·dt`, ending exactly at `t_end`.
    pub fn resample(&self, dt: T) -> Vec<(T, Vec<T>)> {
        if self.t_end <= self.t_start {
            return vec![(self.t_start, self.x_start.clone())];
        }
        uniform_grid(self.t_start, self.t_end, dt)
            .into_iter()
            .map(|t| (t, self.eval(t).expect("grid inside span")))
            .collect()
    }

    /// [`Solution::resample`] packed into a trace whose channels are `names`.
    pub fn resample_trace<S: Into<String>>(&self, dt: T, names: impl IntoIterator<Item = S>) -> Trace<T> {
        let mut b = TraceBuilder::new(names);
        for (t, x) in self.resample(dt) {
            b.push(t, x).expect("state arity matches channel names");
        }
        b.finish(TraceMetadata::default())
    }
}

/// Locates a sign change of `g` on `[t0, t1]` in the given direction by
/// bisection. Returns the right end of the final bracket.
pub fn locate_crossing<T: Real>(g: impl Fn(T) -> T, t0: T, t1: T, direction: Direction, tol: T) -> Option<T> {
    let (g0, g1) = (g(t0), g(t1));
    if !direction.crosses(g0, g1) {
        return None;
    }
    let (mut lo, mut hi) = (t0, t1);
    let two = lit::<T>(2.0);
    while hi - lo > tol {
        let mid = (lo + hi) / two;
        if mid <= lo || mid >= hi {
            break;
        }
        if direction.crosses(g0, g(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Earliest crossing of `spec` inside one dense segment.
pub fn detect_event<T: Real>(seg: &DenseSegment<T>, t_end: T, spec: &EventSpec<'_, T>) -> Option<T> {
    let g = |t: T| (spec.observer)(t, &seg.eval(t));
    let n = T::from_usize(EVENT_SUBSAMPLES).expect("small integer");
    let span = t_end - seg.t0;
    let tol = lit::<T>(EVENT_TIME_TOL);
    let mut a = seg.t0;
    for k in 1..=EVENT_SUBSAMPLES {
        let b = if k == EVENT_SUBSAMPLES { t_end } else { seg.t0 + span * T::from_usize(k).expect("small") / n };
        if let Some(t) = locate_crossing(g, a, b, spec.direction, tol) {
            return Some(t);
        }
        a = b;
    }
    None
}

fn error_norm<T: Real>(err: &[T], x0: &[T], x1: &[T], rtol: T, atol: T) -> T {
    let sum: T = err
        .iter()
        .zip(x0.iter().zip(x1))
        .map(|(&e, (&a, &b))| {
            let sc = atol + rtol * a.abs().max(b.abs());
            (e / sc) * (e / sc)
        })
        .sum();
    (sum / T::from_usize(err.len().max(1)).expect("dimension")).sqrt()
}

/// Integrates `x' = rhs(t, x)` from `x0` over `t_span`.
///
/// `rhs` writes the derivative into its third argument. Event observers are
/// scanned on the dense output of every accepted step; a terminal event
/// truncates the solution at the located crossing.
pub fn integrate_adaptive<T: Real, E, F>(
    mut rhs: F,
    x0: &[T],
    t_span: (T, T),
    cfg: &IntegratorConfig<T>,
    events: &[EventSpec<'_, T>],
) -> Result<Solution<T>, IntegrationError<E>>
where
    F: FnMut(T, &[T], &mut [T]) -> Result<(), E>,
{
    cfg.validate().map_err(IntegrationError::InvalidConfig)?;
    let (t_start, t_final) = t_span;
    if !(t_final > t_start) {
        return Err(IntegrationError::InvalidConfig(format!("empty time span [{t_start}, {t_final}]")));
    }
    let n = x0.len();
    let mut eval = |t: T, x: &[T], out: &mut [T]| -> Result<(), IntegrationError<E>> {
        rhs(t, x, out).map_err(IntegrationError::System)?;
        if out.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(IntegrationError::NonFiniteDerivative { t: t.to_f64_lossy() })
        }
    };

    let mut k: [Vec<T>; 7] = std::array::from_fn(|_| vec![T::zero(); n]);
    let mut stage = vec![T::zero(); n];
    let mut x1 = vec![T::zero(); n];
    let mut err = vec![T::zero(); n];
    let mut x = x0.to_vec();
    let mut t = t_start;
    eval(t, &x, &mut k[0])?;

    let mut sol = Solution {
        segments: Vec::new(),
        events: Vec::new(),
        termination: Termination::Completed,
        t_start,
        t_end: t_start,
        x_start: x0.to_vec(),
        x_end: x0.to_vec(),
        rejected_steps: 0,
    };

    let expo = lit::<T>(0.2 - 0.75 * BETA);
    let beta = lit::<T>(BETA);
    let (safety, fac_min, fac_max) = (lit::<T>(SAFETY), lit::<T>(FAC_MIN), lit::<T>(FAC_MAX));
    let mut err_old = lit::<T>(1e-4);
    let mut h = cfg.h_init.min(cfg.h_max).min(t_final - t);
    let mut last_rejected = false;
    let mut attempts = 0usize;

    while t < t_final {
        attempts += 1;
        if attempts > cfg.max_steps {
            return Err(IntegrationError::StepBudgetExceeded { t: t.to_f64_lossy(), steps: cfg.max_steps });
        }
        let remaining = t_final - t;
        let last = h >= remaining * (T::one() - lit(1e-12));
        if last {
            h = remaining;
        } else if h < cfg.h_min {
            return Err(IntegrationError::StepSizeUnderflow { t: t.to_f64_lossy(), h: h.to_f64_lossy() });
        }

        for s in 1..7 {
            for i in 0..n {
                let mut acc = T::zero();
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += lit::<T>(A[s][j]) * kj[i];
                }
                stage[i] = x[i] + h * acc;
            }
            let ts = if s >= 5 { t + h } else { t + lit::<T>(C[s]) * h };
            eval(ts, &stage, &mut k[s])?;
            if s == 6 {
                x1.copy_from_slice(&stage);
            }
        }
        // Stage 7 is the derivative at the new point (first-same-as-last).
        eval(t + h, &x1, &mut k[6])?;

        for i in 0..n {
            let mut e = T::zero();
            for (j, kj) in k.iter().enumerate() {
                e += lit::<T>(E[j]) * kj[i];
            }
            err[i] = h * e;
        }
        let en = error_norm(&err, &x, &x1, cfg.rtol, cfg.atol);

        if en <= T::one() {
            let fac = (safety * err_old.powf(beta) / en.max(lit(1e-300)).powf(expo)).max(fac_min).min(fac_max);
            err_old = en.max(lit(1e-4));

            let mut coeffs: [Vec<T>; 5] = std::array::from_fn(|_| vec![T::zero(); n]);
            for i in 0..n {
                let dy = x1[i] - x[i];
                let bspl = h * k[0][i] - dy;
                coeffs[0][i] = x[i];
                coeffs[1][i] = dy;
                coeffs[2][i] = bspl;
                coeffs[3][i] = dy - h * k[6][i] - bspl;
                let mut d = T::zero();
                for (j, kj) in k.iter().enumerate() {
                    d += lit::<T>(D[j]) * kj[i];
                }
                coeffs[4][i] = h * d;
            }
            let seg = DenseSegment { t0: t, h, coeffs };
            let t_next = if last { t_final } else { t + h };

            let mut first_terminal: Option<(T, usize)> = None;
            let mut crossings: Vec<(T, usize)> = Vec::new();
            for (ei, spec) in events.iter().enumerate() {
                if let Some(tc) = detect_event(&seg, t_next, spec) {
                    crossings.push((tc, ei));
                    if spec.terminal && first_terminal.is_none_or(|(tf, _)| tc < tf) {
                        first_terminal = Some((tc, ei));
                    }
                }
            }
            crossings.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite event times"));
            for &(tc, ei) in &crossings {
                if first_terminal.is_some_and(|(tf, _)| tc > tf) {
                    continue;
                }
                sol.events.push(EventRecord { event: ei, t: tc, state: seg.eval(tc) });
            }
            sol.segments.push(seg);
            if let Some((tf, ei)) = first_terminal {
                sol.t_end = tf;
                sol.x_end = sol.segments.last().expect("just pushed").eval(tf);
                sol.termination = Termination::Event(ei);
                return Ok(sol);
            }

            t = t_next;
            x.copy_from_slice(&x1);
            k.swap(0, 6);
            let mut h_new = h * fac;
            if last_rejected {
                h_new = h_new.min(h);
            }
            h = h_new.min(cfg.h_max);
            last_rejected = false;
        } else {
            sol.rejected_steps += 1;
            let fac = (safety / en.powf(expo)).max(fac_min);
            h *= fac;
            last_rejected = true;
        }
    }
    sol.t_end = t_final;
    sol.x_end = x;
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn run(
        rhs: impl FnMut(f64, &[f64], &mut [f64]) -> Result<(), Infallible>,
        x0: &[f64],
        t1: f64,
        cfg: &IntegratorConfig<f64>,
        events: &[EventSpec<'_, f64>],
    ) -> Solution<f64> {
        integrate_adaptive(rhs, x0, (0.0, t1), cfg, events).unwrap()
    }

    fn decay(_: f64, x: &[f64], d: &mut [f64]) -> Result<(), Infallible> {
        d[0] = -x[0];
        Ok(())
    }

    fn oscillator(_: f64, x: &[f64], d: &mut [f64]) -> Result<(), Infallible> {
        d[0] = x[1];
        d[1] = -x[0];
        Ok(())
    }

    #[test]
    fn constant_solution_is_exact() {
        let s = run(|_, _, d| Ok(d[0] = 0.0), &[7.0], 1.0, &IntegratorConfig::default(), &[]);
        assert_eq!(s.x_end, vec![7.0]);
        assert_eq!(s.t_end, 1.0);
    }

    #[test]
    fn exponential_decay() {
        let s = run(decay, &[1.0], 1.0, &IntegratorConfig::default(), &[]);
        assert!((s.x_end[0] - (-1.0f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn oscillator_energy_over_ten_periods() {
        let s = run(oscillator, &[1.0, 0.0], 20.0 * PI, &IntegratorConfig::default(), &[]);
        let e = s.x_end[0].powi(2) + s.x_end[1].powi(2);
        assert!((e - 1.0).abs() < 1e-6, "{e}");
    }

    #[test]
    fn dense_output_is_accurate_between_steps() {
        let cfg = IntegratorConfig { h_max: 0.2, ..Default::default() };
        let s = run(decay, &[1.0], 2.0, &cfg, &[]);
        for (t, x) in s.resample(0.01) {
            assert!((x[0] - (-t).exp()).abs() < 1e-7, "t = {t}");
        }
        let g = s.resample(0.01);
        assert_eq!(g.first().unwrap().0, 0.0);
        assert_eq!(g.last().unwrap().0, 2.0);
        assert_eq!(g.last().unwrap().1, s.x_end);
    }

    #[test]
    fn tighter_tolerances_do_not_increase_error() {
        let mut prev_exp = f64::INFINITY;
        let mut prev_osc = f64::INFINITY;
        let mut cfg = IntegratorConfig::<f64>::default().with_tolerances(1e-4, 1e-6);
        for _ in 0..10 {
            let e = (run(decay, &[1.0], 1.0, &cfg, &[]).x_end[0] - (-1.0f64).exp()).abs();
            let x = run(oscillator, &[1.0, 0.0], 20.0 * PI, &cfg, &[]).x_end;
            let o = ((x[0] - 1.0).powi(2) + x[1].powi(2)).sqrt();
            assert!(e <= prev_exp * 1.0000001, "{e} > {prev_exp}");
            assert!(o <= prev_osc * 1.0000001, "{o} > {prev_osc}");
            prev_exp = e;
            prev_osc = o;
            cfg = cfg.with_tolerances(cfg.rtol / 2.0, cfg.atol / 2.0);
        }
    }

    #[test]
    fn crossing_examples() {
        let tol = EVENT_TIME_TOL;
        let t = locate_crossing(|t: f64| 1.0 - t, 0.0, 2.0, Direction::Falling, tol).unwrap();
        assert!((t - 1.0).abs() < 1e-11);
        assert!(locate_crossing(|t: f64| 2.0 + t.sin(), 0.0, 2.0, Direction::Any, tol).is_none());
        let t = locate_crossing(|t: f64| t.cos(), 0.0, 2.0, Direction::Falling, tol).unwrap();
        assert!((t - FRAC_PI_2).abs() < 1e-9);
        assert!(t.cos().abs() < 1e-9);
        assert!(locate_crossing(|t: f64| t.cos(), 0.0, 2.0, Direction::Rising, tol).is_none());
    }

    #[test]
    fn terminal_event_stops_integration() {
        // x = cos t, v = −sin t; stop when x falls through zero.
        let ev = [EventSpec::new("zero", Direction::Falling, true, |_, x: &[f64]| x[0])];
        let s = run(oscillator, &[1.0, 0.0], 10.0, &IntegratorConfig::default(), &ev);
        assert_eq!(s.termination, Termination::Event(0));
        assert!((s.t_end - FRAC_PI_2).abs() < 1e-9);
        assert_eq!(s.events.len(), 1);
        assert!(s.eval(s.t_end + 1e-6).is_none());
    }

    #[test]
    fn non_terminal_events_are_all_recorded() {
        let ev = [EventSpec::new("zero", Direction::Any, false, |_, x: &[f64]| x[0])];
        let s = run(oscillator, &[1.0, 0.0], 10.0, &IntegratorConfig::default(), &ev);
        let times: Vec<f64> = s.events.iter().map(|e| e.t).collect();
        assert_eq!(times.len(), 3);
        for (k, t) in times.iter().enumerate() {
            assert!((t - (FRAC_PI_2 + k as f64 * PI)).abs() < 1e-8);
        }
    }

    #[test]
    fn event_time_independent_of_initial_step() {
        let mut times = Vec::new();
        for h0 in [1e-6, 1e-4, 1e-3, 1e-2] {
            let cfg = IntegratorConfig { h_init: h0, ..Default::default() };
            let ev = [EventSpec::new("line", Direction::Falling, true, |t: f64, _: &[f64]| 1.0 - t)];
            times.push(run(|_, _, d| Ok(d[0] = 1.0), &[0.0], 2.0, &cfg, &ev).t_end);
        }
        for t in &times {
            assert!((t - times[0]).abs() < 1e-8);
        }
    }

    #[test]
    fn integration_is_deterministic() {
        let a = run(oscillator, &[1.0, 0.3], 7.0, &IntegratorConfig::default(), &[]);
        let b = run(oscillator, &[1.0, 0.3], 7.0, &IntegratorConfig::default(), &[]);
        assert_eq!(a, b);
    }

    #[test]
    fn failures_are_reported() {
        let r = integrate_adaptive::<f64, Infallible, _>(|_, _, d| Ok(d[0] = f64::NAN), &[1.0], (0.0, 1.0), &IntegratorConfig::default(), &[]);
        assert!(matches!(r, Err(IntegrationError::NonFiniteDerivative { .. })));
        let cfg = IntegratorConfig { max_steps: 3, ..Default::default() };
        let r = integrate_adaptive(decay, &[1.0], (0.0, 1.0), &cfg, &[]);
        assert!(matches!(r, Err(IntegrationError::StepBudgetExceeded { .. })));
        let cfg = IntegratorConfig { h_min: 1e-3, h_init: 1e-3, ..Default::default() };
        let r = integrate_adaptive(|t: f64, _: &[f64], d: &mut [f64]| Ok::<_, Infallible>(d[0] = (1e4 * t).sin() * 1e4), &[0.0], (0.0, 1.0), &cfg, &[]);
        assert!(matches!(r, Err(IntegrationError::StepSizeUnderflow { .. })));
        let r = integrate_adaptive(|_, _, _: &mut [f64]| Err("boom"), &[0.0], (0.0, 1.0), &IntegratorConfig::default(), &[]);
        assert!(matches!(r, Err(IntegrationError::System("boom"))));
    }

    #[test]
    fn single_precision_runs() {
        let cfg = IntegratorConfig::<f32> { rtol: 1e-5, atol: 1e-6, ..Default::default() };
        let s = integrate_adaptive(|_, x: &[f32], d: &mut [f32]| Ok::<_, Infallible>(d[0] = -x[0]), &[1.0], (0.0, 1.0), &cfg, &[]).unwrap();
        assert!((s.x_end[0] - (-1.0f32).exp()).abs() < 1e-4);
    }
}
