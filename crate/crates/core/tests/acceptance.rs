//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::f64::consts::{FRAC_PI_6, PI, TAU};
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{rngs::StdRng, Rng, SeedableRng};

use ringtumble::harness::{
    compare_traces, parse_config, run_cascade, run_highfi, ConfigError, HarnessError, ScenarioConfig,
};
use ringtumble::highfi::{composite_inertia, RingDiscretization};
use ringtumble::ode::{integrate_adaptive, Direction, EventSpec, IntegratorConfig};
use ringtumble::posture::{inertia_outputs, perimeter, solve_conjugate_axis, RingProperties, ShapeMotion};
use ringtumble::trace::Trace;
use ringtumble::tumbling::{total_energy, SlopeGeometry, TumblingState};

const P: f64 = 1.6;
const MASS: f64 = 6.0;
const CIRCLE_B: &str = "signal.b0 = 0.25464790894703254\n";
const DEFAULT_CONF: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/default.conf");

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn cfg(text: &str) -> ScenarioConfig {
    parse_config(text).expect("acceptance scenario parses")
}

fn default_text() -> String {
    fs::read_to_string(DEFAULT_CONF).expect("default config present")
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

fn col(tr: &Trace<f64>, name: &str) -> Vec<f64> {
    tr.channel(name).expect("channel present")
}

/// Least-squares slope of `y` against `t` for `t >= t_from`.
fn fitted_slope(t: &[f64], y: &[f64], t_from: f64) -> f64 {
    let pts: Vec<(f64, f64)> = t.iter().zip(y).filter(|(t, _)| **t >= t_from).map(|(t, y)| (*t, *y)).collect();
    let n = pts.len() as f64;
    let (mt, my) = pts.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + t / n, b + y / n));
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + (t - mt) * (y - my), b + (t - mt).powi(2)));
    sxy / sxx
}

fn circle_inertia() -> Outcome {
    let start = Instant::now();
    let props = RingProperties::new(MASS, P).unwrap();
    let r = P / TAU;
    let closed = MASS * r * r;
    let cont = inertia_outputs(r, r, &props).unwrap().yy;
    let disc = composite_inertia(&RingDiscretization::standard(MASS).unwrap(), r, r).unwrap().m[1][1];
    let elapsed = start.elapsed().as_secs_f64();
    let (e_cont, e_disc) = ((cont / closed - 1.0).abs(), (disc / closed - 1.0).abs());
    outcome(
        e_cont < 1e-9 && e_disc < 5e-3 && elapsed < 1.0,
        format!(
            "mR^2 = {closed:.9}; quadrature {cont:.12} (rel {e_cont:.1e} < 1e-9); 150 elements {disc:.9} (rel {e_disc:.1e} < 5e-3); {elapsed:.3} s < 1 s"
        ),
    )
}

fn perpendicular_axis() -> Outcome {
    let props = RingProperties::new(MASS, P).unwrap();
    let disc = RingDiscretization::standard(MASS).unwrap();
    let mut rng = StdRng::seed_from_u64(7);
    let (mut worst_c, mut worst_d) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let b = rng.gen_range(0.05..0.39);
        let a = solve_conjugate_axis(P, b).unwrap();
        let y = inertia_outputs(a, b, &props).unwrap();
        worst_c = worst_c.max(((y.xx + y.zz - y.yy) / y.yy).abs());
        let m = composite_inertia(&disc, a, b).unwrap().m;
        worst_d = worst_d.max(((m[0][0] + m[2][2] - m[1][1]) / m[1][1]).abs());
    }
    outcome(
        worst_c < 1e-12 && worst_d < 1e-12,
        format!("20 shapes: continuous {worst_c:.1e}, discrete {worst_d:.1e} (< 1e-12 relative)"),
    )
}

fn perimeter_conservation() -> Outcome {
    // The armed run stops at contact loss (see criterion 8); the perimeter
    // check covers the whole 4 s impulse scenario.
    let c = cfg(&format!("{}cascade.contact_event = false\n", default_text()));
    match run_cascade(&c, "perimeter") {
        Ok(tr) => {
            let drift = col(&tr, "a")
                .iter()
                .zip(col(&tr, "b"))
                .map(|(a, b)| ((perimeter(*a, b).unwrap() - P) / P).abs())
                .fold(0.0, f64::max);
            let span = tr.times().last().copied().unwrap_or(0.0);
            outcome(drift < 1e-6, format!("max |P(t) - P|/P = {drift:.2e} < 1e-6 over {span} s (contact event disarmed)"))
        }
        Err(e) => outcome(false, format!("run failed: {e}")),
    }
}

fn planar_rolling() -> Outcome {
    let expected = 9.81 * 15f64.to_radians().sin() / 2.0;
    let c = cfg(&format!("{CIRCLE_B}init.psi_dot = 0\ninit.phi_dot = 0\n"));
    let start = Instant::now();
    let rom = run_cascade(&c, "planar");
    let t_rom = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let hf = run_highfi(&c, "planar");
    let t_hf = start.elapsed().as_secs_f64();
    let (Ok(rom), Ok(hf)) = (rom, hf) else {
        return outcome(false, "a planar run failed".into());
    };
    let acc_rom = fitted_slope(rom.times(), &col(&rom, "vx"), 0.0);
    let acc_hf = fitted_slope(hf.times(), &col(&hf, "vx"), 0.1);
    let (e_rom, e_hf) = (acc_rom / expected - 1.0, acc_hf / expected - 1.0);
    outcome(
        e_rom.abs() < 5e-3 && e_hf.abs() < 2e-2 && t_rom < 5.0 && t_hf < 600.0,
        format!(
            "oracle {expected:.4} m/s^2; cascade {acc_rom:.4} ({:+.2}% vs 0.5%, {t_rom:.2} s); high-fidelity {acc_hf:.4} ({:+.2}% vs 2%, {t_hf:.1} s at dt 2e-5)",
            100.0 * e_rom,
            100.0 * e_hf
        ),
    )
}

fn energy_balance() -> Outcome {
    let c = cfg("cascade.contact_event = false\n");
    let tr = match run_cascade(&c, "energy") {
        Ok(t) => t,
        Err(e) => return outcome(false, format!("run failed: {e}")),
    };
    let props = RingProperties::new(MASS, P).unwrap();
    let slope = SlopeGeometry::default();
    let a = solve_conjugate_axis(P, 0.3).unwrap();
    let shape = ShapeMotion::rigid(a, 0.3);
    let y = inertia_outputs(a, 0.3, &props).unwrap();
    let energy = |row: &[f64]| total_energy(&TumblingState::from_slice(&row[..8]), &y, &shape, &slope, &props).unwrap();
    let e0 = energy(&tr.rows()[0]);
    let drift = tr.rows().iter().map(|r| ((energy(r) - e0) / e0).abs()).fold(0.0, f64::max);
    outcome(drift < 1e-5, format!("max relative drift {drift:.2e} < 1e-5 over 4 s (E0 = {e0:.4} J)"))
}

fn straight_descent() -> Outcome {
    let c = cfg(&format!("{CIRCLE_B}init.psi_dot = 0\n"));
    let (rom, hf) = match (run_cascade(&c, "straight"), run_highfi(&c, "straight")) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return outcome(false, format!("run failed: {e}")),
    };
    let h_rom = max_abs(&col(&rom, "heading_deg")).to_radians();
    let h_hf = max_abs(&col(&hf, "heading_deg"));
    outcome(
        h_rom < 1e-6 && h_hf < 0.5,
        format!("cascade max |heading| {h_rom:.1e} rad < 1e-6; high-fidelity {h_hf:.2e} deg < 0.5"),
    )
}

fn scenario_reproduction() -> Outcome {
    let c = cfg(&default_text());
    let hf = match run_highfi(&c, "default") {
        Ok(t) => t,
        Err(e) => return outcome(false, format!("high-fidelity run failed: {e}")),
    };
    match run_cascade(&c, "default") {
        Ok(rom) => {
            let r = compare_traces(("rom", &rom), ("highfi", &hf)).unwrap();
            let (d0, d1) = (r.models[0].heading_deflection_deg.unwrap(), r.models[1].heading_deflection_deg.unwrap());
            let (h, v) = (r.heading_rmse_deg.unwrap(), r.v_tumble_rmse.unwrap());
            outcome(
                d0 != 0.0 && d0.signum() == d1.signum() && h < 5.0 && v < 0.1,
                format!("deflection rom {d0:.3} / highfi {d1:.3} deg; heading RMSE {h:.3} < 5 deg; v_tumble RMSE {v:.4} < 0.1 m/s"),
            )
        }
        Err(HarnessError::ContactLoss { t, .. }) => {
            // Diagnostic only: the same comparison with the event disarmed.
            let open = cfg(&format!("{}cascade.contact_event = false\n", default_text()));
            let extra = run_cascade(&open, "default-open")
                .ok()
                .and_then(|rom| compare_traces(("rom", &rom), ("highfi", &hf)).ok())
                .map(|r| {
                    format!(
                        "; with the event disarmed: deflection rom {:.3} / highfi {:.3} deg, heading RMSE {:.3} deg, v_tumble RMSE {:.3} m/s",
                        r.models[0].heading_deflection_deg.unwrap(),
                        r.models[1].heading_deflection_deg.unwrap(),
                        r.heading_rmse_deg.unwrap(),
                        r.v_tumble_rmse.unwrap()
                    )
                })
                .unwrap_or_default();
            outcome(false, format!("cascade contact loss at t = {t:.4} s, before the impulse at 2 s{extra}"))
        }
        Err(e) => outcome(false, format!("cascade run failed: {e}")),
    }
}

fn grf_positivity() -> Outcome {
    let c = cfg(&default_text());
    let positive = match run_cascade(&c, "default") {
        Ok(tr) => {
            let m = col(&tr, "f_n").into_iter().fold(f64::INFINITY, f64::min);
            (m > 0.0, format!("min f_n {m:.3} N"))
        }
        Err(HarnessError::ContactLoss { t, .. }) => (false, format!("f_n crosses zero at t = {t:.4} s")),
        Err(e) => (false, format!("run failed: {e}")),
    };
    let oversized = parse_config(&format!("{}signal.b_prime = 0.2\n", default_text()));
    let rejected = match &oversized {
        Err(ConfigError::Infeasible(msg)) => (msg.contains("4·(b0 + b') = 2 < P = 1.6"), format!("b' = 0.2 rejected: {msg}")),
        other => (false, format!("b' = 0.2 not rejected: {other:?}")),
    };
    outcome(positive.0 && rejected.0, format!("{}; {}", positive.1, rejected.1))
}

fn mirror_symmetry() -> Outcome {
    let base = format!("{CIRCLE_B}");
    let flipped = format!("{base}init.psi_dot = {}\n", -FRAC_PI_6);
    let run = |f: fn(&ScenarioConfig, &str) -> Result<Trace<f64>, HarnessError>| {
        Some((f(&cfg(&base), "left").ok()?, f(&cfg(&flipped), "right").ok()?))
    };
    let odd = |(l, r): &(Trace<f64>, Trace<f64>), ch: &str| {
        col(l, ch).iter().zip(col(r, ch)).map(|(a, b)| (a + b).abs()).fold(0.0, f64::max)
    };
    let (Some(rom), Some(hf)) = (run(run_cascade), run(run_highfi)) else {
        return outcome(false, "a mirror run failed".into());
    };
    let (rp, rh) = (odd(&rom, "pcy"), odd(&rom, "heading_deg").to_radians());
    let (hp, hh) = (odd(&hf, "pcy"), odd(&hf, "heading_deg").to_radians());
    let (sr, sh) = (max_abs(&col(&rom.0, "pcy")), max_abs(&col(&hf.0, "pcy")));
    outcome(
        rp < 1e-6 && rh < 1e-6 && hp < 1e-3 && hh < 1e-3 && sr > 1e-2 && sh > 1e-2,
        format!(
            "max |pcy| {sr:.3} / {sh:.3} m; mirror error cascade pcy {rp:.1e} m, heading {rh:.1e} rad (< 1e-6); high-fidelity pcy {hp:.1e} m (< 1e-3), heading {hh:.1e} rad (< 1e-3)"
        ),
    )
}

fn cli(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_ringtumble")).args(args).output().map(|o| o.status.code().is_some()).unwrap_or(false)
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if matches!(p.extension().and_then(|s| s.to_str()), Some("csv" | "svg")) {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let conf = tmp.path().join("det.conf");
    fs::write(&conf, format!("{CIRCLE_B}duration = 1\nsignal.b_prime = 0.02\nsignal.t0 = 0.5\n")).unwrap();
    let conf = conf.to_str().unwrap();
    let pass = |tag: &str| {
        let out = tmp.path().join(tag);
        let o = |s: &str| out.join(s).to_str().unwrap().to_owned();
        let ok = cli(&["rom", "run", "-c", conf, "-o", &o("run")])
            && cli(&["highfi", "run", "-c", conf, "-o", &o("run")])
            && cli(&["compare", &o("run/rom.csv"), &o("run/highfi.csv"), "-o", &o("cmp")])
            && cli(&["sweep", "-c", conf, "--param", "signal.b_prime", "--values", "0.01,0.02", "-o", &o("sweep"), "--model", "both"]);
        (ok, snapshot(&out))
    };
    let (ok_a, a) = pass("a");
    let (ok_b, b) = pass("b");
    let differing: Vec<&str> =
        a.iter().zip(&b).filter(|(x, y)| x != y).map(|(x, _)| x.0.as_str()).collect();
    outcome(
        ok_a && ok_b && a.len() == b.len() && a.len() > 20 && differing.is_empty(),
        format!("rom run, highfi run, compare, sweep twice: {} CSV/SVG files, {} differ", a.len(), differing.len() + a.len().abs_diff(b.len())),
    )
}

fn integrator_self_tests() -> Outcome {
    let cfg = IntegratorConfig::<f64>::default();
    let decay = integrate_adaptive(
        |_, x: &[f64], d: &mut [f64]| -> Result<(), ()> { Ok(d[0] = -x[0]) },
        &[1.0],
        (0.0, 1.0),
        &cfg,
        &[],
    )
    .unwrap();
    let e_decay = (decay.x_end[0] - (-1.0f64).exp()).abs();
    let osc = integrate_adaptive(
        |_, x: &[f64], d: &mut [f64]| -> Result<(), ()> {
            d[0] = x[1];
            d[1] = -x[0];
            Ok(())
        },
        &[1.0, 0.0],
        (0.0, 20.0 * PI),
        &cfg,
        &[],
    )
    .unwrap();
    let e_osc = (osc.x_end[0].powi(2) + osc.x_end[1].powi(2) - 1.0).abs();
    // x = t − 0.7 crosses zero at t = 0.7.
    let ev = [EventSpec::new("line", Direction::Rising, true, |_, x: &[f64]| x[0])];
    let line = integrate_adaptive(|_, _: &[f64], d: &mut [f64]| -> Result<(), ()> { Ok(d[0] = 1.0) }, &[-0.7], (0.0, 2.0), &cfg, &ev)
        .unwrap();
    let e_event = (line.t_end - 0.7).abs();
    outcome(
        e_decay < 1e-8 && e_osc < 1e-6 && e_event < 1e-9,
        format!("decay error {e_decay:.1e} < 1e-8; oscillator energy drift {e_osc:.1e} < 1e-6; event error {e_event:.1e} s < 1e-9"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("circle inertia", circle_inertia),
        ("perpendicular-axis identity", perpendicular_axis),
        ("perimeter conservation", perimeter_conservation),
        ("planar rolling oracle", planar_rolling),
        ("energy balance", energy_balance),
        ("straight-descent symmetry", straight_descent),
        ("impulse scenario reproduction", scenario_reproduction),
        ("ground reaction positivity", grf_positivity),
        ("mirror symmetry", mirror_symmetry),
        ("determinism", determinism),
        ("integrator self-tests", integrator_self_tests),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!("criterion {:>2} {}: {name}: {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
