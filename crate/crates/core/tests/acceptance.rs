//! The nine acceptance criteria, one pass/fail line each.

use std::sync::Arc;
use std::time::{Duration, Instant};

use mcac::approx::{alpha_beta, build_approx_field, build_u2_kernel, ApproxOrder, ApproxSpec};
use mcac::config::SimConfig;
use mcac::diagnostics::{spectral_lower_bound, write_csv, CSV_HEADER};
use mcac::dynamics::MultiplierKind;
use mcac::experiments::{
    cmd_compare_multipliers, cmd_converge, cmd_equilibrium, cmd_profile_constants, fit_order, mass_drift, prepare,
    simulate, MASS_TOL,
};
use mcac::fronttrack::{run_flow, FlowHistory, FlowParams, FlowState};
use mcac::geometry::Curve;
use mcac::grid::{integrate, Field, GridSpec, Snapshot};
use mcac::potential;
use mcac::profile1d::{profile_constants, simpson, theta0, theta0_prime, RhoGrid};

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn within(elapsed: Duration, budget: Duration) -> bool {
    elapsed <= budget
}

fn config(text: &str, out: &std::path::Path) -> SimConfig {
    SimConfig::parse_str(&format!("{text}\noutput_dir = {}", out.display())).unwrap()
}

fn c1_profile_constants() -> Outcome {
    let t = Instant::now();
    let r = cmd_profile_constants();
    let el = t.elapsed();
    let checks: Vec<String> = r.checks.iter().take(3).map(|c| format!("{} = {:.10}", c.name, c.value)).collect();
    let ok = r.checks.iter().take(3).all(|c| c.passed());
    outcome(ok && within(el, Duration::from_secs(1)), format!("{} in {el:.2?}", checks.join(", ")))
}

const MASS_CFG: &str = "
    grid.nx = 256
    grid.ny = 256
    grid.lx = 2.0
    grid.ly = 2.0
    eps = 0.03
    dt = auto
    tmax = 0.45
    initial = circle
    initial.cx = 1.0
    initial.cy = 1.0
    initial.r = 0.3
    record_stride = 50
    fronttrack.npoints = 128
";

fn c2_mass() -> Outcome {
    let t = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(MASS_CFG, dir.path());
    let setup = prepare(&cfg).unwrap();
    let mut details = Vec::new();
    let mut ok = true;
    for kind in [MultiplierKind::Bb, MultiplierKind::Rs] {
        let out = simulate(&cfg, &setup, kind).unwrap();
        let steps = out.records.last().unwrap().step;
        let drift = mass_drift(&out.records, cfg.grid.area());
        ok &= steps == 5000 && drift <= MASS_TOL;
        details.push(format!("{kind}: {steps} steps, max drift {drift:.2e}·|Ω|"));
    }
    let el = t.elapsed();
    outcome(ok && within(el, Duration::from_secs(120)), format!("{} in {el:.2?}", details.join("; ")))
}

fn c3_equilibrium() -> Outcome {
    let t = Instant::now();
    let r0 = 0.3;
    let c = Curve::circle([1.0, 1.0], r0, 512).unwrap();
    let params = FlowParams { dt: FlowState::stable_dt(&c), tmax: 0.1, projection: true, output_interval: 0.01 };
    let flow = run_flow(c, &params).unwrap();
    let tracker = flow
        .snapshots
        .iter()
        .map(|(_, c)| (c.mean_radius(c.centroid()) - r0).abs() / r0)
        .fold(0.0, f64::max);

    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        "grid.nx = 256\ngrid.ny = 256\ngrid.lx = 2.0\ngrid.ly = 2.0\neps = 0.03\ntmax = 0.05\nmultiplier = bb\n\
         initial = circle\ninitial.cx = 1.0\ninitial.cy = 1.0\ninitial.r = 0.3\nrecord_stride = 50\n\
         fronttrack.npoints = 512",
        dir.path(),
    );
    let eq = cmd_equilibrium(&cfg).unwrap();
    let el = t.elapsed();
    outcome(
        tracker < 1e-6 && eq.phase_drift < 0.02 && within(el, Duration::from_secs(180)),
        format!("tracker drift {tracker:.2e} over t = 0.1, level-set radius drift {:.2e} in {el:.2?}", eq.phase_drift),
    )
}

// Sixth-order central second difference: an independent check of ℒψ̂ = -ρθ0'.
fn kernel_residual() -> f64 {
    let k = build_u2_kernel().unwrap();
    let g = *k.psi_hat.grid();
    let p = k.psi_hat.values();
    let c = [1.0 / 90.0, -3.0 / 20.0, 1.5, -49.0 / 18.0, 1.5, -3.0 / 20.0, 1.0 / 90.0];
    let h2 = g.spacing().powi(2);
    (3..g.len() - 3)
        .map(|i| {
            let r = g.node(i);
            let d2: f64 = (0..7).map(|m| c[m] * p[i + m - 3]).sum::<f64>() / h2;
            (-d2 - potential::f_prime(theta0(r)) * p[i] + r * theta0_prime(r)).abs()
        })
        .fold(0.0, f64::max)
}

fn c4_solvability() -> Outcome {
    let t = Instant::now();
    let g = RhoGrid::default();
    let y: Vec<f64> = g.nodes().map(|r| r * theta0_prime(r).powi(2)).collect();
    let moment = simpson(g.spacing(), &y);
    let residual = kernel_residual();
    let k = build_u2_kernel().unwrap();
    let at0 = k.psi_hat.values()[g.center()];
    let el = t.elapsed();
    outcome(
        moment.abs() <= 1e-10 && residual < 1e-6 && at0 == 0.0 && within(el, Duration::from_secs(5)),
        format!("∫ρθ0'² = {moment:.1e}, residual {residual:.2e}, ψ̂(0) = {at0} in {el:.2?}"),
    )
}

fn c5_lemma_some() -> Outcome {
    let t = Instant::now();
    let curve = Curve::circle([1.0, 1.0], 0.3, 512).unwrap();
    let ab = alpha_beta(&curve);
    let flow = Arc::new(FlowHistory::stationary(curve));
    let grid = GridSpec::square(512, 2.0).unwrap();
    let eps = [0.08, 0.04, 0.02];
    let (mut da, mut db) = (Vec::new(), Vec::new());
    for &e in &eps {
        let spec = ApproxSpec::new(e, ApproxOrder::Two, flow.clone()).unwrap();
        let u = build_approx_field(&spec, 0.0, &grid).unwrap().u;
        da.push((integrate(&u.map(potential::f)) - e * e * ab.alpha).abs());
        db.push((integrate(&u.map(potential::sqrt_4w)) - e * ab.beta).abs());
    }
    let (pa, pb) = (fit_order(&eps, &da), fit_order(&eps, &db));
    let i_rho = profile_constants(&RhoGrid::default()).rho_f_moment;
    let el = t.elapsed();
    outcome(
        pa >= 2.5 && pb >= 1.5 && (i_rho - 2.0).abs() <= 1e-8 && within(el, Duration::from_secs(60)),
        format!("A-exponent {pa:.3}, B-exponent {pb:.3}, I_rho = {i_rho:.10} in {el:.2?}"),
    )
}

fn c6_compare() -> Outcome {
    let t = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    // Smallest box that keeps the cutoff width around the ellipse.
    let cfg = config(
        "grid.nx = 192\ngrid.ny = 168\ngrid.lx = 1.5\ngrid.ly = 1.3125\neps = 0.03\ntmax = 0.05\n\
         initial = ellipse\ninitial.cx = 0.75\ninitial.cy = 0.65625\ninitial.a = 0.35\ninitial.b = 0.25\n\
         record_stride = 10",
        dir.path(),
    );
    let r = cmd_compare_multipliers(&cfg).unwrap();
    let el = t.elapsed();
    outcome(
        r.passed() && within(el, Duration::from_secs(600)),
        format!(
            "level-set drift bb {:.2e}, rs {:.2e}, ratio {:.4} in {el:.2?}",
            r.drift_bb,
            r.drift_rs,
            r.ratio()
        ),
    )
}

fn c7_converge() -> Outcome {
    let t = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        "grid.nx = 256\ngrid.ny = 256\ngrid.lx = 2.0\ngrid.ly = 2.0\neps = 0.08\ntmax = 0.05\nmultiplier = bb\n\
         initial = ellipse\ninitial.cx = 1.0\ninitial.cy = 1.0\ninitial.a = 0.35\ninitial.b = 0.25\n\
         record_stride = 100",
        dir.path(),
    );
    let r = cmd_converge(&cfg, &[0.08, 0.057, 0.04, 0.028]).unwrap();
    let el = t.elapsed();
    let errs: Vec<String> = r.rows.iter().map(|(e, err)| format!("{e}:{err:.4}")).collect();
    outcome(
        r.passed() && within(el, Duration::from_secs(1800)),
        format!("errors {}, order {:.3} in {el:.2?}", errs.join(" "), r.order),
    )
}

fn c8_spectral() -> Outcome {
    let t = Instant::now();
    // Each ε on the smallest 128² box that fits the cutoff width.
    let mut lam = Vec::new();
    for (eps, side) in [(0.04, 1.5), (0.02, 1.2)] {
        let c = side / 2.0;
        let flow = Arc::new(FlowHistory::stationary(Curve::circle([c, c], 0.3, 512).unwrap()));
        let grid = GridSpec::square(128, side).unwrap();
        let spec = ApproxSpec::new(eps, ApproxOrder::Two, flow).unwrap();
        let u = build_approx_field(&spec, 0.0, &grid).unwrap().u;
        let ratio = integrate(&u.map(potential::f)) / integrate(&u.map(potential::sqrt_4w));
        lam.push(spectral_lower_bound(&u, eps, ratio).unwrap());
    }
    let el = t.elapsed();
    let ratio = (lam[1] / lam[0]).abs();
    outcome(
        lam[0] >= -20.0 && lam[1] >= -20.0 && ratio <= 2.0 && within(el, Duration::from_secs(300)),
        format!("λ_min(0.04) = {:.3}, λ_min(0.02) = {:.3}, ratio {ratio:.3} in {el:.2?}", lam[0], lam[1]),
    )
}

fn c9_infrastructure() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let spec = GridSpec::new(40, 24, 1.3, 0.7).unwrap();
    let field = Field::from_fn(spec, |x, y| (7.3 * x).sin() * (1.1 * y).exp() / 3.0 + 1e-300);
    let snap = Snapshot { field, time: 0.123456789, eps: 0.03 };
    let path = dir.path().join("s.pfs");
    snap.save(&path).unwrap();
    let back = Snapshot::load(&path).unwrap();
    let bits = |s: &Snapshot| s.field.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    let roundtrip = bits(&back) == bits(&snap) && back.time.to_bits() == snap.time.to_bits() && back.field.spec() == snap.field.spec();

    let cfg_text = "grid.nx = 64\ngrid.ny = 64\ngrid.lx = 2.0\ngrid.ly = 2.0\neps = 0.08\ntmax = 0.01\n\
                    initial = ellipse\ninitial.cx = 1.0\ninitial.cy = 1.0\ninitial.a = 0.35\ninitial.b = 0.25\n\
                    record_stride = 5\nsnapshot_stride = 20";
    let run_once = |sub: &str| {
        let cfg = config(cfg_text, &dir.path().join(sub));
        mcac::experiments::cmd_simulate(&cfg).unwrap();
        let csv = std::fs::read(cfg.output_dir.join("timeseries.csv")).unwrap();
        let snap = std::fs::read(cfg.output_dir.join("snapshots").join("snap_0001.pfs")).unwrap();
        (csv, snap)
    };
    let (a, b) = (run_once("a"), run_once("b"));
    let deterministic = a == b;
    let header_ok = String::from_utf8(a.0).unwrap().lines().next() == Some(CSV_HEADER);
    let mut buf = Vec::new();
    write_csv(&[], &mut buf).unwrap();
    let header_only = String::from_utf8(buf).unwrap() == format!("{CSV_HEADER}\n");
    outcome(
        roundtrip && deterministic && header_ok && header_only,
        format!("round-trip {roundtrip}, header {}, deterministic {deterministic}", header_ok && header_only),
    )
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 9] = [
        ("1 profile constants", c1_profile_constants),
        ("2 discrete mass conservation", c2_mass),
        ("3 sphere equilibrium", c3_equilibrium),
        ("4 solvability machinery", c4_solvability),
        ("5 expansion constants", c5_lemma_some),
        ("6 multiplier comparison", c6_compare),
        ("7 convergence study", c7_converge),
        ("8 spectral probe", c8_spectral),
        ("9 infrastructure", c9_infrastructure),
    ];
    let mut failed = Vec::new();
    for (name, run) in criteria {
        let o = run();
        println!("criterion {name}: {} ({})", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        if !o.passed {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
