//! End-to-end acceptance run: one line per criterion. Criterion 9 is
//! reported but never fails the run.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use riesz_kinetic::blowup::{self, InitialFunctionals};
use riesz_kinetic::closed_form::{ClosedFormDensity, RadialProfile};
use riesz_kinetic::config::RunConfig;
use riesz_kinetic::diagnostics::DiagnosticsOptions;
use riesz_kinetic::fokker_planck::{FokkerPlanck, FpScheme};
use riesz_kinetic::grid::{DistributionField, PhaseGrid};
use riesz_kinetic::identities;
use riesz_kinetic::integrator::{self, IntegratorConfig, NullSink, RunResult, RunStatus};
use riesz_kinetic::riesz::{interaction_energy, riesz_potential, force_field, DensityInput, KernelSpec, KernelTerm};

type Outcome = Result<String, String>;

const LANDAU: &str = include_str!("../../../configs/landau_d1.toml");

fn landau(sigma: f64, dt: f64) -> RunResult<f64> {
    let overrides = [
        format!("integrator.sigma={sigma}"),
        format!("integrator.dt={dt}"),
        "diagnostics.interval=1".to_string(),
    ];
    let cfg = RunConfig::from_toml_str(LANDAU, &overrides).expect("landau config");
    let f0 = cfg.initial_data.generate(cfg.phase_grid().unwrap(), cfg.seed).unwrap();
    let res = integrator::run(&f0, &cfg.kernel, cfg.integrator_config(), cfg.diagnostics_options(), &mut NullSink).unwrap();
    assert_eq!(res.status, RunStatus::Completed);
    res
}

struct LandauRuns {
    fine: [RunResult<f64>; 2],
    coarse: [RunResult<f64>; 2],
    seconds: f64,
}

fn landau_runs() -> LandauRuns {
    let t0 = Instant::now();
    let fine = [landau(0.0, 1e-3), landau(0.5, 1e-3)];
    let seconds = t0.elapsed().as_secs_f64() / 2.0;
    let coarse = [landau(0.0, 2e-3), landau(0.5, 2e-3)];
    LandauRuns { fine, coarse, seconds }
}

fn energy_identity(r: &LandauRuns) -> Outcome {
    let (_, drift) = identities::energy_error(&r.fine[0].series, 0.0).unwrap();
    let (_, ledger) = identities::energy_error(&r.fine[1].series, 0.5).unwrap();
    let msg = format!(
        "tilde-E drift {drift:.2e} (<= 1e-6), sigma=0.5 ledger {ledger:.2e} (<= 1e-4), {:.1}s per run",
        r.seconds
    );
    if drift <= 1e-6 && ledger <= 1e-4 && r.seconds <= 120.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn virial_identity(r: &LandauRuns) -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (k, sigma) in [0.0, 0.5].into_iter().enumerate() {
        let fine = identities::virial_error(&r.fine[k].series, sigma).unwrap();
        let coarse = identities::virial_error(&r.coarse[k].series, sigma).unwrap();
        let order = identities::observed_order(coarse, fine);
        ok &= fine <= 1e-3 && order >= 1.8;
        parts.push(format!("sigma={sigma}: dev {fine:.2e}, order {order:.2}"));
    }
    let msg = parts.join("; ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn second_moment(f: &DistributionField<f64>) -> f64 {
    let g = f.grid;
    let mut num = 0.0;
    for ix in 0..g.x_points() {
        for (iv, &val) in f.velocity_slice(ix).iter().enumerate() {
            num += val * g.v_norm_sq(iv);
        }
    }
    num / f.values.iter().sum::<f64>()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn fokker_planck() -> Outcome {
    let sigma = 1.0;
    let dt = 1e-3;
    let mut moment_err = 0.0f64;
    let mut fixed_res = 0.0f64;
    for dim in [1usize, 2] {
        let nv = if dim == 1 { 128 } else { 64 };
        let g = PhaseGrid::<f64>::new(dim, 1.0, 12.0, 8, nv).unwrap();
        let var = 2.5;
        let mut f = DistributionField::from_fn(g, |_, v| (-0.5 * v.iter().map(|x| x * x).sum::<f64>() / var).exp());
        let m0 = second_moment(&f);
        let fp = FokkerPlanck::new(&g, sigma, dt, FpScheme::ExactOu).unwrap();
        for _ in 0..300 {
            fp.apply(&mut f).unwrap();
        }
        let d = dim as f64;
        let want = d + (m0 - d) * (-2.0 * sigma * 0.3).exp();
        moment_err = moment_err.max((second_moment(&f) - want).abs() / want);

        let g = PhaseGrid::<f64>::new(dim, 1.0, 9.0, 8, 64).unwrap();
        let m = DistributionField::from_fn(g, |x, v| {
            (1.2 + x[0].sin()) * (-0.5 * v.iter().map(|a| a * a).sum::<f64>()).exp()
        });
        let fp = FokkerPlanck::new(&g, 0.8, 0.01, FpScheme::ExactOu).unwrap();
        let mut out = m.clone();
        fp.apply(&mut out).unwrap();
        fixed_res = fixed_res.max(max_abs_diff(&out.values, &m.values));
    }

    let g = PhaseGrid::<f64>::new(1, 1.0, 10.0, 8, 128).unwrap();
    let f0 = DistributionField::from_fn(g, |_, v| (-(v[0] - 1.0).powi(2) / 0.8).exp());
    let mut gaps = Vec::new();
    for steps in [20usize, 40, 80] {
        let dt = 0.2 / steps as f64;
        let exact = FokkerPlanck::new(&g, 1.0, dt, FpScheme::ExactOu).unwrap();
        let fd = FokkerPlanck::new(&g, 1.0, dt, FpScheme::ImplicitFd).unwrap();
        let (mut a, mut b) = (f0.clone(), f0.clone());
        for _ in 0..steps {
            exact.apply(&mut a).unwrap();
            fd.apply(&mut b).unwrap();
        }
        gaps.push(max_abs_diff(&a.values, &b.values));
    }
    let msg = format!(
        "moment law {moment_err:.2e} (<= 1e-4), Maxwellian residual {fixed_res:.2e} (<= 1e-8), ExactOU vs ImplicitFD gap {:.2e} -> {:.2e} -> {:.2e}",
        gaps[0], gaps[1], gaps[2]
    );
    // The gap carries an O(dv²) floor from the discrete Maxwellian, so only
    // require that it keeps shrinking with dt.
    if moment_err <= 1e-4 && fixed_res <= 1e-8 && gaps[1] < 0.7 * gaps[0] && gaps[2] < gaps[1] {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn riesz_solver() -> Outcome {
    let g = PhaseGrid::<f64>::new(1, PI, 4.0, 64, 8).unwrap();
    let spec = KernelSpec::multiplier(1.0, 1.0);
    let rho: Vec<f64> = (0..g.nx).map(|i| (2.0 * g.x_node(i)).cos()).collect();
    let phi = riesz_potential(&g, &rho, &spec).unwrap();
    let u = force_field(&g, &rho, &spec).unwrap();
    let mut mode_err = 0.0f64;
    for i in 0..g.nx {
        let x = g.x_node(i);
        mode_err = mode_err.max((phi[i] - 0.5 * (2.0 * x).cos()).abs());
        mode_err = mode_err.max((u[0][i] + (2.0 * x).sin()).abs());
    }

    let n = 256;
    let g = PhaseGrid::<f64>::new(1, 20.0, 4.0, n, 8).unwrap();
    let spec = KernelSpec::multiplier(1.0, 0.5);
    let rho: Vec<f64> = (0..n).map(|i| (-(g.x_node(i) / 0.5).powi(2)).exp()).collect();
    let phi = riesz_potential(&g, &rho, &spec).unwrap();
    let kernel: Vec<f64> = (0..n)
        .map(|j| {
            (1..n)
                .filter(|&m| m != n / 2)
                .map(|m| {
                    let k = g.kx(m);
                    k.abs().powf(-0.5) * (k * j as f64 * g.dx()).cos()
                })
                .sum::<f64>()
                / n as f64
        })
        .collect();
    let direct: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| kernel[(i + n - j) % n] * rho[j]).sum())
        .collect();
    let err: f64 = phi.iter().zip(&direct).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let norm: f64 = direct.iter().map(|a| a * a).sum::<f64>().sqrt();
    let dense = err / norm;

    let mut scaling = 0.0f64;
    for (d, alpha) in [(1usize, 0.5), (2, 1.2), (3, 2.0)] {
        let base = ClosedFormDensity::separable(
            d,
            1.0,
            RadialProfile::Bump { radius: 1.0 },
            RadialProfile::Gaussian { std: 1.0 },
        )
        .unwrap();
        let spec = KernelSpec::single_term(1.0, alpha);
        let e1 = interaction_energy(DensityInput::ClosedForm(&base), &spec).unwrap();
        for lambda in [0.5f64, 2.0] {
            let el = interaction_energy(DensityInput::ClosedForm(&base.scaled_x(lambda)), &spec).unwrap();
            scaling = scaling.max((el / e1 / lambda.powf(alpha) - 1.0).abs());
        }
    }
    let msg = format!("single mode {mode_err:.1e} (<= 1e-12), dense oracle {dense:.1e} (<= 1e-8), scaling law {scaling:.1e} (<= 1e-4)");
    if mode_err <= 1e-12 && dense <= 1e-8 && scaling <= 1e-4 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn entropy_bound() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20_241);
    let g1 = PhaseGrid::<f64>::new(1, 6.0, 6.0, 32, 32).unwrap();
    let g2 = PhaseGrid::<f64>::new(2, 6.0, 6.0, 8, 8).unwrap();
    let mut violations = 0;
    for trial in 0..1000 {
        let grid = if trial % 2 == 0 { g1 } else { g2 };
        let delta = if trial % 4 < 2 { 0.1 } else { 1.0 };
        let comps: Vec<(f64, [f64; 4], f64, f64)> = (0..rng.random_range(1..=4))
            .map(|_| {
                let w = rng.random_range(0.01..5.0);
                let c = std::array::from_fn(|_| rng.random_range(-3.0..3.0));
                (w, c, rng.random_range(0.05..2.0), rng.random_range(0.05..2.0))
            })
            .collect();
        let f = DistributionField::from_fn(grid, |x, v| {
            comps
                .iter()
                .map(|(w, c, sx, sv)| {
                    let dx: f64 = x.iter().zip(c).map(|(a, b)| (a - b).powi(2)).sum();
                    let dv: f64 = v.iter().zip(&c[2..]).map(|(a, b)| (a - b).powi(2)).sum();
                    w * (-dx / (2.0 * sx * sx) - dv / (2.0 * sv * sv)).exp()
                })
                .sum()
        });
        let (_, _, holds) = blowup::entropy_bound_check(&f, delta).unwrap();
        if !holds {
            violations += 1;
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    let msg = format!("1000 fields, {violations} violations, {secs:.1}s");
    if violations == 0 && secs <= 60.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn rk4(c1: f64, c2: f64, c3: f64, h0: f64, h0p: f64, t_end: f64, dt: f64) -> Vec<(f64, f64)> {
    let rhs = |y: [f64; 2]| [y[1], c2 * y[0] + c3 - c1 * y[1]];
    let mut y = [h0, h0p];
    let n = (t_end / dt).round() as usize;
    let mut out = vec![(0.0, h0)];
    for k in 0..n {
        let k1 = rhs(y);
        let k2 = rhs([y[0] + 0.5 * dt * k1[0], y[1] + 0.5 * dt * k1[1]]);
        let k3 = rhs([y[0] + 0.5 * dt * k2[0], y[1] + 0.5 * dt * k2[1]]);
        let k4 = rhs([y[0] + dt * k3[0], y[1] + dt * k3[1]]);
        for i in 0..2 {
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out.push(((k + 1) as f64 * dt, y[0]));
    }
    out
}

fn gronwall() -> Outcome {
    let (h0, h0p) = (0.8, -0.3);
    let mut saturating = 0.0f64;
    let mut exceed = 0;
    for c1 in [0.3, 1.0, 2.5] {
        for c2 in [0.3, 1.0, 2.5] {
            for c3 in [-1.0, 0.0, 2.0] {
                let traj = rk4(c1, c2, c3, h0, h0p, 1.0, 1e-3);
                let (t1, h1) = *traj.last().unwrap();
                saturating = saturating.max((h1 - blowup::gronwall_bound(h0, h0p, c1, c2, c3, t1)).abs());
                for (t, h) in rk4(c1, c2, c3 - 0.1, h0, h0p, 5.0, 1e-3) {
                    let b = blowup::gronwall_bound(h0, h0p, c1, c2, c3, t);
                    if h > b + 1e-8 * (1.0 + b.abs()) {
                        exceed += 1;
                    }
                }
            }
        }
    }
    let msg = format!("saturating ODE vs bound {saturating:.1e} at t=1 (<= 1e-8), {exceed} strict-trajectory exceedances");
    if saturating <= 1e-8 && exceed == 0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn reduced_virial_crossing(i0: f64, i0p: f64, sigma: f64, cd: f64, c3: f64, dt: f64, t_max: f64) -> Option<f64> {
    let rhs = |y: [f64; 2]| [y[1], c3 + cd * y[0] - sigma * y[1]];
    let mut y = [i0, i0p];
    let mut t = 0.0;
    while t < t_max {
        let k1 = rhs(y);
        let k2 = rhs([y[0] + 0.5 * dt * k1[0], y[1] + 0.5 * dt * k1[1]]);
        let k3 = rhs([y[0] + 0.5 * dt * k2[0], y[1] + 0.5 * dt * k2[1]]);
        let k4 = rhs([y[0] + dt * k3[0], y[1] + dt * k3[1]]);
        for i in 0..2 {
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        t += dt;
        if y[0] <= 0.0 {
            return Some(t);
        }
    }
    None
}

fn fmt_opt(t: Option<f64>) -> String {
    t.map_or_else(|| "none".to_string(), |t| format!("{t:.3e}"))
}

fn blowup_checker() -> Outcome {
    let eps = 0.1;
    let manev = [KernelTerm { c: 1.0, alpha: 2.0 }];
    let concentrated = ClosedFormDensity::concentrated(3, 1.0, eps, eps).unwrap();
    let r = blowup::check_sigma_zero(&InitialFunctionals::from_closed_form(&concentrated, &manev).unwrap(), 10.0).unwrap();
    let manev_ok = r.condition_met == Some(true) && r.predicted_crossing_time.is_some_and(f64::is_finite);

    let hot = ClosedFormDensity::separable(
        3,
        1.0,
        RadialProfile::Bump { radius: eps },
        RadialProfile::Bump { radius: eps * 1000.0 },
    )
    .unwrap();
    let rh = blowup::check_sigma_zero(&InitialFunctionals::from_closed_form(&hot, &manev).unwrap(), 10.0).unwrap();
    let hot_ok = rh.condition_met == Some(false);

    let terms = [KernelTerm { c: 1.0, alpha: 2.5 }];
    let inputs = InitialFunctionals::from_closed_form(&concentrated, &terms).unwrap();
    let rs = blowup::check_sigma_positive(&inputs, 0.5, None, 10.0).unwrap();
    let (ode_ok, ode_msg) = match rs.predicted_crossing_time {
        Some(tc) => {
            let k = &rs.constants;
            let (delta, cd) = (k.delta.unwrap(), k.c_delta.unwrap());
            let c3 = 2.0 * (1.0 + delta) * inputs.energy + k.c0 + cd;
            let ode = reduced_virial_crossing(inputs.inertia, inputs.inertia_prime, 0.5, cd, c3, tc * 1e-5, 2.0 * tc);
            (ode.is_some_and(|t| t <= tc + 1e-6), format!("ODE crossing {} vs predicted {tc:.3e}", fmt_opt(ode)))
        }
        None => (false, "no predicted crossing for sigma=0.5".to_string()),
    };

    let branch = |a2: f64| {
        let f = InitialFunctionals::from_closed_form(&concentrated, &blowup::mixed_terms(2.5, a2)).unwrap();
        blowup::check_mixed(&f, 0.0, None, 10.0).unwrap()
    };
    let (below, above) = (branch(1.9), branch(2.1));
    let mixed_ok = below.branch.as_deref() == Some("indicator-off")
        && below.constants.c0 == 0.0
        && above.branch.as_deref() == Some("indicator-on")
        && (above.constants.c0 - 0.05).abs() < 1e-12;

    let msg = format!(
        "Manev met={:?} t*={}; inflated met={:?}; {ode_msg}; mixed c0 {} / {}",
        r.condition_met,
        fmt_opt(r.predicted_crossing_time), rh.condition_met, below.constants.c0, above.constants.c0
    );
    if manev_ok && hot_ok && ode_ok && mixed_ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn constants() -> Outcome {
    let frozen = [
        (3, 1.0, 136.547_240_369_218_63),
        (1, 0.5, 26.600_517_484_696_086),
        (2, 0.1, 100.988_114_733_677),
        (3, 0.25, 147.885_961_732_797_06),
    ];
    let mut c_rel = 0.0f64;
    let mut c32_rel = 0.0f64;
    for (d, delta, want) in frozen {
        let got: f64 = blowup::c_delta(delta, d).unwrap();
        c_rel = c_rel.max(((got - want) / want).abs());
        let got32 = blowup::c_delta(delta as f32, d).unwrap() as f64;
        c32_rel = c32_rel.max(((got32 - want) / want).abs());
    }
    let mut quad = 0.0f64;
    let mut ident = 0.0f64;
    for (s, c) in [(0.5, 136.5), (1e6, 1e-3), (0.0, 1e-8), (3.0, 7.0), (0.1, 26.6)] {
        let b: f64 = blowup::gronwall_rate(s, c);
        quad = quad.max((b * b + s * b - c).abs() / (b * b + s * b + c));
        ident = ident.max((b - c / (s + b)).abs() / b);
    }
    let two = [KernelTerm { c: 1.0, alpha: 3.0 }, KernelTerm { c: 1.0, alpha: 1.0 }];
    let c0: f64 = blowup::c_zero(&two, 0.0).unwrap();
    let msg = format!(
        "c_delta f64 {c_rel:.1e} f32 {c32_rel:.1e}; rate residual {quad:.1e}, fixed-point {ident:.1e}; c_zero example {c0}"
    );
    if c_rel <= 1e-12 && c32_rel <= 1e-5 && quad <= 1e-12 && ident <= 1e-12 && (c0 - 0.5).abs() < 1e-15 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn concentration_experiment() -> Outcome {
    // Small enough that the repulsive twin stays in the linear (oscillating) regime.
    let amp = 0.1;
    let g = PhaseGrid::<f64>::new(1, 2.0, 3.0, 64, 64).unwrap();
    let gauss = |v: f64| (-0.5 * v * v).exp() / (2.0 * PI).sqrt();
    let f0 = DistributionField::from_fn(g, |x, v| (1.0 + amp * (PI * x[0] / 2.0).cos()) * gauss(v[0] / 0.3) / 0.3);
    let cfg = IntegratorConfig {
        dt: 0.01,
        t_end: 5.0,
        concentration_factor: 1.5,
        diag_interval: 1,
        ..IntegratorConfig::default()
    };
    let run = |kappa: f64| {
        integrator::run(&f0, &KernelSpec::multiplier(kappa, 2.0), cfg, DiagnosticsOptions::default(), &mut NullSink).unwrap()
    };
    let attractive = run(30.0);
    let repulsive = run(-30.0);
    let peaks: Vec<f64> = attractive.series.iter().map(|r| r.max_density).collect();
    let monotone = peaks.windows(2).all(|w| w[1] >= w[0]);
    let msg = format!(
        "attractive: {:?} after {} steps, max rho {:.3} -> {:.3}, monotone {monotone}; repulsive: {:?} after {} steps",
        attractive.status,
        attractive.steps_taken,
        peaks[0],
        peaks.last().unwrap(),
        repulsive.status,
        repulsive.steps_taken
    );
    if attractive.status == RunStatus::ConcentrationHalt && monotone && repulsive.status == RunStatus::Completed {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn main() -> ExitCode {
    let t0 = Instant::now();
    let runs = landau_runs();
    let gated: [(u32, &str, Outcome); 8] = [
        (1, "energy identity", energy_identity(&runs)),
        (2, "virial identity", virial_identity(&runs)),
        (3, "Fokker-Planck", fokker_planck()),
        (4, "Riesz solver", riesz_solver()),
        (5, "entropy bound", entropy_bound()),
        (6, "Gronwall bound", gronwall()),
        (7, "blow-up checker", blowup_checker()),
        (8, "constants", constants()),
    ];
    let mut failed = 0;
    for (n, name, outcome) in &gated {
        match outcome {
            Ok(msg) => println!("criterion {n} PASS {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("criterion {n} FAIL {name}: {msg}");
            }
        }
    }
    match concentration_experiment() {
        Ok(msg) => println!("criterion 9 PASS (logged) concentration: {msg}"),
        Err(msg) => println!("criterion 9 FAIL (logged) concentration: {msg}"),
    }
    println!("acceptance: {}/8 gated criteria passed in {:.1}s", 8 - failed, t0.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
