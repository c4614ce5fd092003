//! Acceptance suite: one test per workbench exit criterion, each printing a
//! pass/fail line with the measured numbers.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the
//! per-criterion report.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smclab::controllers::{csmc_gains_from_lipschitz, DEFAULT_LAMBDA};
use smclab::harmonic_balance::{
    describing_function, hb_solve, log_grid, predict_chattering, sensitivity_map,
};
use smclab::pid_design::{
    design_pid, design_pid_with_gamma, open_loop_margins, open_loop_response, syd_pid_magnitude,
    syd_pid_peak, to_parallel, ParallelPidGains,
};
use smclab::plant::{derive_plant, plant_tf, PhysicalParams, PlantModel, RationalTF};
use smclab::red::red_run;
use smclab::signals::SignalSpec;
use smclab::sim::{
    simulate, steady_state_metrics, windowed_metrics, ControllerConfig, PlantConfig, SimConfig,
};
use smclab::sysid::{estimate_frf_point, fit_plant};

const K: f64 = 0.0408;
const TAU: f64 = 0.006684;
const MU: f64 = 1.2e-3;

fn check(id: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "[acceptance] criterion {id:2} ({name}): {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

fn paper_design() -> smclab::PidDesign {
    design_pid_with_gamma(K, TAU, 400.0, 60.0).unwrap()
}

fn paper_pid_gains() -> ParallelPidGains {
    to_parallel(&paper_design())
}

fn identified_model() -> PlantModel {
    PlantModel::new(K, TAU, MU).unwrap()
}

fn sim_defaults(controller: ControllerConfig, disturbance: SignalSpec, t_end: f64) -> SimConfig {
    SimConfig {
        plant: PlantConfig::Model(identified_model()),
        controller,
        disturbance,
        noise: None,
        reference: 0.009,
        t_end,
        plant_step: 1e-5,
        control_period: 2e-4,
        initial_y: 0.009,
        gravity_comp_enabled: false,
        saturation: None,
        sensor_range: None,
        red_scaling: 8.0,
    }
}

#[test]
fn criterion_01_pid_design_reproduction() {
    let d = paper_design();
    let g = to_parallel(&d);
    let t_i_ok = (0.0915..=0.0925).contains(&d.t_i);
    let rel = |a: f64, b: f64| (a - b).abs() / b;
    let gains_ok = rel(g.kp, 429.064) < 1e-3 && rel(g.ki, 4348.267) < 1e-3
        && rel(g.kd, 2.674) < 1e-3;
    check(
        1,
        "pid design reproduction",
        t_i_ok && gains_ok,
        &format!(
            "T_I = {:.6} s, (Kp, Ki, Kd) = ({:.3}, {:.3}, {:.4})",
            d.t_i, g.kp, g.ki, g.kd
        ),
    );
}

#[test]
fn criterion_02_sensitivity_peak() {
    let d = paper_design();
    let (w_max, peak_db) = syd_pid_peak(&d, K, TAU);
    let pass = (w_max - 13.31).abs() <= 0.15 && (peak_db + 52.08).abs() <= 0.05;
    check(
        2,
        "sensitivity peak",
        pass,
        &format!("omega_max = {w_max:.3} rad/s, peak = {peak_db:.3} dB"),
    );
}

#[test]
fn criterion_03_bound_property() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    let omegas = log_grid(1e-3, 1e5, 10_000);
    let mut violations = 0u64;
    let mut designs = 0u64;
    while designs < 100 {
        let k = 10f64.powf(rng.gen_range(-3.0..1.0));
        let tau = 10f64.powf(rng.gen_range(-4.0..-1.0));
        let s_max_db = rng.gen_range(-80.0..-6.0);
        let phi_deg = rng.gen_range(15.0..85.0);
        let d = match design_pid(k, tau, s_max_db, phi_deg) {
            Ok(d) => d,
            Err(_) => continue,
        };
        designs += 1;
        let bound = (1.0 / d.gamma) * (1.0 + 1e-12);
        for &w in &omegas {
            if syd_pid_magnitude(k, tau, d.gamma, d.t_i, w) > bound {
                violations += 1;
            }
        }
    }
    check(
        3,
        "sensitivity bound property",
        violations == 0,
        &format!("{designs} designs x {} frequencies, {violations} violations", omegas.len()),
    );
}

#[test]
fn criterion_04_margin_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
    let mut worst_phi = 0.0f64;
    let mut worst_mag = 0.0f64;
    for _ in 0..100 {
        let k = 10f64.powf(rng.gen_range(-3.0..1.0));
        let tau = 10f64.powf(rng.gen_range(-4.0..-1.0));
        let gamma = 10f64.powf(rng.gen_range(0.3..4.0));
        let phi_deg = rng.gen_range(10.0..85.0);
        let d = design_pid_with_gamma(k, tau, gamma, phi_deg).unwrap();
        let (omega_s, margin) = open_loop_margins(&d, k);
        worst_phi = worst_phi.max((margin - d.phi).abs() / d.phi);
        worst_mag = worst_mag.max((open_loop_response(&d, k, omega_s).norm() - 1.0).abs());
    }
    let pass = worst_phi <= 1e-9 && worst_mag <= 1e-9;
    check(
        4,
        "margin round trip",
        pass,
        &format!("worst |dPhi|/Phi = {worst_phi:.2e}, worst ||L|-1| = {worst_mag:.2e}"),
    );
}

#[test]
fn criterion_05_attenuation_reproduction() {
    let targets = [(5.0, -58.6), (10.0, -52.9), (20.0, -53.8)];
    let mut detail = String::new();
    let mut pass = true;
    for (w_d, expected_db) in targets {
        let period = std::f64::consts::TAU / w_d;
        let t_end = 3.0 + 8.0 * period;
        let config = sim_defaults(
            ControllerConfig::Pid(paper_pid_gains()),
            SignalSpec::sine(1.0, w_d).unwrap(),
            t_end,
        );
        let trace = simulate(&config).unwrap();
        let t_last = *trace.t.last().unwrap();
        let m = steady_state_metrics(&trace, (t_last - 5.0 * period, t_last), 1.0, Some(w_d))
            .unwrap();
        let ok = (m.attenuation_db - expected_db).abs() <= 0.5;
        pass &= ok;
        detail.push_str(&format!(
            "w={w_d}: {:.2} dB (target {expected_db}); ",
            m.attenuation_db
        ));
    }
    check(5, "attenuation reproduction", pass, &detail);
}

#[test]
fn criterion_06_hb_solver() {
    let gains = csmc_gains_from_lipschitz(0.4, DEFAULT_LAMBDA).unwrap();
    let plant = |mu: f64| RationalTF::new(vec![1.0], vec![0.0, 0.0, 1.0, mu]).unwrap();

    // residual and brute-force agreement at mu = 1.2 ms
    let w = plant(MU);
    let guess = predict_chattering(0.4, DEFAULT_LAMBDA[0], MU, 0.5).unwrap();
    let sol = hb_solve(&gains, &w, guess, Some(MU)).unwrap();
    let residual_ok = sol.residual <= 1e-9;

    let a_grid = log_grid(1e-13, 1e-6, 400);
    let w_grid = log_grid(1e2, 1e5, 400);
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for &a in &a_grid {
        for &om in &w_grid {
            let n = describing_function(&gains, a, om).unwrap();
            let r = (n * w.freq_response(om).unwrap() + 1.0).norm();
            if r < best.0 {
                best = (r, a, om);
            }
        }
    }
    let a_cell = (a_grid[1] / a_grid[0]).ln();
    let w_cell = (w_grid[1] / w_grid[0]).ln();
    let within_cell = (best.1 / sol.amplitude).ln().abs() <= a_cell
        && (best.2 / sol.omega).ln().abs() <= w_cell;

    // amplitude scales as mu^3 within 10%
    let mut ratios = Vec::new();
    for mu in [0.5e-3, 1.0e-3, 2.0e-3] {
        let w = plant(mu);
        let guess = predict_chattering(0.4, DEFAULT_LAMBDA[0], mu, 0.5).unwrap();
        let s = hb_solve(&gains, &w, guess, Some(mu)).unwrap();
        assert!(s.residual <= 1e-9);
        ratios.push(s.amplitude / mu.powi(3));
    }
    let cubic_ok = ratios
        .iter()
        .all(|&r| (r - ratios[0]).abs() / ratios[0] <= 0.10);

    check(
        6,
        "hb solver",
        residual_ok && within_cell && cubic_ok,
        &format!(
            "residual = {:.2e}, A = {:.4e} m at w = {:.1} rad/s (grid min A = {:.4e}, w = {:.1}), A/mu^3 = {:?}",
            sol.residual, sol.amplitude, sol.omega, best.1, best.2, ratios
        ),
    );
}

#[test]
fn criterion_07_sensitivity_map_ordering() {
    let gains = csmc_gains_from_lipschitz(0.4, DEFAULT_LAMBDA).unwrap();
    let w = plant_tf(&identified_model(), true);
    let omega_grid = log_grid(1.0, 2000.0, 60);
    let a = 1e-3;
    let map = sensitivity_map(&gains, &w, &omega_grid, &[a / 3.0, a, 3.0 * a]);

    // monotone ordering in A at every frequency below the peak region
    let mut ordered = true;
    for (j, &om) in omega_grid.iter().enumerate() {
        if om <= 100.0 {
            let col: Vec<f64> = (0..3).map(|i| map.magnitude_db[i][j]).collect();
            if !(col[0] < col[1] && col[1] < col[2]) {
                ordered = false;
            }
        }
    }
    // convergence in the top decade
    let mut max_spread = 0.0f64;
    for (j, &om) in omega_grid.iter().enumerate() {
        if om >= 200.0 {
            let col: Vec<f64> = (0..3).map(|i| map.magnitude_db[i][j]).collect();
            let spread =
                col.iter().cloned().fold(f64::MIN, f64::max) - col.iter().cloned().fold(f64::MAX, f64::min);
            max_spread = max_spread.max(spread);
        }
    }
    let pass = ordered && max_spread < 2.0;
    check(
        7,
        "sensitivity map ordering",
        pass,
        &format!("rows ordered below 100 rad/s: {ordered}, top-decade spread = {max_spread:.3} dB"),
    );
}

#[test]
fn criterion_08_red_exactness() {
    // dt-halving on the quadratic input
    let sup_errors = |dt: f64| {
        let n = (4.0 / dt) as usize;
        let t: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
        let y: Vec<f64> = t.iter().map(|&t| t * t).collect();
        let trace = red_run(&y, 8.0, dt);
        let mut e1 = 0.0f64;
        let mut e2 = 0.0f64;
        for k in 0..n {
            if t[k] > 1.5 {
                e1 = e1.max((trace.x1[k] - 2.0 * t[k]).abs());
                e2 = e2.max((trace.x2[k] - 2.0).abs());
            }
        }
        (e1, e2)
    };
    let (e1_coarse, e2_coarse) = sup_errors(4e-4);
    let (e1_fine, e2_fine) = sup_errors(2e-4);
    let r1 = e1_fine / e1_coarse;
    let r2 = e2_fine / e2_coarse;
    let halving_ok = (0.4..=0.6).contains(&r1) && (0.4..=0.6).contains(&r2);

    // chirp to 80 rad/s with r = 8: x1 RMS error < 10% over the final 10%
    let dt = 2e-4;
    let t_end = 60.0;
    let chirp = SignalSpec::chirp_spanning(1e-3, 0.06, 80.0, t_end).unwrap();
    let rate = (80.0 - 0.06) / (2.0 * t_end);
    let n = (t_end / dt) as usize;
    let t: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
    let y: Vec<f64> = t.iter().map(|&t| chirp.value_at(t).unwrap()).collect();
    let y_dot = |t: f64| 1e-3 * (0.06 + 2.0 * rate * t) * ((0.06 + rate * t) * t).cos();
    let trace = red_run(&y, 8.0, dt);
    let mut err_sq = 0.0;
    let mut ref_sq = 0.0;
    for k in 0..n {
        if t[k] >= 0.9 * t_end {
            err_sq += (trace.x1[k] - y_dot(t[k])).powi(2);
            ref_sq += y_dot(t[k]).powi(2);
        }
    }
    let rms_ratio = (err_sq / ref_sq).sqrt();
    let chirp_ok = rms_ratio < 0.10;

    check(
        8,
        "red exactness",
        halving_ok && chirp_ok,
        &format!(
            "x1 ratio = {r1:.3}, x2 ratio = {r2:.3}, chirp RMS error = {:.2}%",
            rms_ratio * 100.0
        ),
    );
}

#[test]
fn criterion_09_identification_round_trip() {
    let params = PhysicalParams::new(0.538, 80.4884, 17.16, 5.32, 9.81, MU).unwrap();
    let truth = derive_plant(&params);
    let omegas = log_grid(4.0, 380.0, 8);
    let mut points = Vec::new();
    for &w_d in &omegas {
        // amplitude schedule keeps the output inside the sensor range
        let a_d = if w_d < 10.0 { 0.7 } else { 1.5 };
        let period = std::f64::consts::TAU / w_d;
        let t_end = (26.0 * period).max(10.0);
        let config = SimConfig {
            plant: PlantConfig::Physical(params),
            controller: ControllerConfig::Pid(ParallelPidGains { kp: 100.0, ki: 0.0, kd: 0.0 }),
            disturbance: SignalSpec::sine(a_d, w_d).unwrap(),
            noise: None,
            reference: 0.009,
            t_end,
            plant_step: 1e-5,
            control_period: 2e-4,
            initial_y: 0.009,
            gravity_comp_enabled: true,
            saturation: None,
            sensor_range: Some((0.0, 0.018)),
            red_scaling: 8.0,
        };
        let trace = simulate(&config).unwrap();
        // plant input: held control plus disturbance at the tick instants
        let u_tot: Vec<f64> = trace.u.iter().zip(&trace.d).map(|(u, d)| u + d).collect();
        points.push(estimate_frf_point(&u_tot, &trace.y, w_d, 5000.0, 20).unwrap());
    }
    let fit = fit_plant(&points, (4.0, 380.0), &params).unwrap();
    let k_err = (fit.k - truth.k).abs() / truth.k;
    let tau_err = (fit.tau - truth.tau).abs() / truth.tau;
    let pass = k_err <= 0.02 && tau_err <= 0.05;
    check(
        9,
        "identification round trip",
        pass,
        &format!(
            "K = {:.5} ({:+.2}%), tau = {:.5} ms ({:+.2}%), sigma = {:.3}",
            fit.k,
            100.0 * (fit.k / truth.k - 1.0),
            fit.tau * 1e3,
            100.0 * (fit.tau / truth.tau - 1.0),
            fit.sigma
        ),
    );
}

struct ChirpRun {
    wins: Vec<smclab::sim::WindowMetrics>,
    inst_freq: Vec<f64>,
    final_power: f64,
}

fn run_chirp(controller: ControllerConfig) -> ChirpRun {
    let chirp = SignalSpec::chirp_spanning(1.0, 0.06, 30.0, 60.0).unwrap();
    let rate = (30.0 - 0.06) / 120.0;
    let config = sim_defaults(controller, chirp, 60.0);
    let trace = simulate(&config).unwrap();
    let wins = windowed_metrics(&trace, 2.0);
    let inst_freq = wins.iter().map(|w| 0.06 + 2.0 * rate * w.t_center).collect();
    let m = steady_state_metrics(&trace, (40.0, 59.999), 1.0, None).unwrap();
    ChirpRun { wins, inst_freq, final_power: m.control_rms_power }
}

#[test]
fn criterion_10_chirp_comparison() {
    let pid = run_chirp(ControllerConfig::Pid(paper_pid_gains()));
    let csmc = run_chirp(ControllerConfig::Csmc {
        lipschitz: 0.4,
        lambda: DEFAULT_LAMBDA,
    });
    assert_eq!(pid.wins.len(), csmc.wins.len());
    let comparison: Vec<usize> = (0..pid.wins.len())
        .filter(|&i| pid.wins[i].t_center > 10.0)
        .collect();

    // (a) PID error envelope peaks at an instantaneous frequency in [11, 16]
    let peak_i = *comparison
        .iter()
        .max_by(|&&a, &&b| {
            pid.wins[a]
                .error_amplitude
                .total_cmp(&pid.wins[b].error_amplitude)
        })
        .unwrap();
    let peak_freq = pid.inst_freq[peak_i];
    let a_ok = (11.0..=16.0).contains(&peak_freq);

    // (b) envelopes cross at an instantaneous frequency in [7, 12]
    let cross_i = comparison
        .iter()
        .copied()
        .find(|&i| csmc.wins[i].error_amplitude < pid.wins[i].error_amplitude);
    let (b_ok, cross_freq) = match cross_i {
        Some(i) => ((7.0..=12.0).contains(&pid.inst_freq[i]), pid.inst_freq[i]),
        None => (false, f64::NAN),
    };

    // (c) CSMC control amplitude nearly constant; PID effort clearly not,
    //     growing monotonically through the crossing window
    let csmc_amps: Vec<f64> = comparison
        .iter()
        .map(|&i| csmc.wins[i].control_amplitude)
        .collect();
    let csmc_ratio = csmc_amps.iter().cloned().fold(f64::MIN, f64::max)
        / csmc_amps.iter().cloned().fold(f64::MAX, f64::min);
    let pid_amps: Vec<f64> = comparison
        .iter()
        .map(|&i| pid.wins[i].control_amplitude)
        .collect();
    let pid_ratio = pid_amps.iter().cloned().fold(f64::MIN, f64::max)
        / pid_amps.iter().cloned().fold(f64::MAX, f64::min);
    let monotone_through_crossing = match cross_i {
        Some(ci) => comparison
            .iter()
            .zip(comparison.iter().skip(1))
            .take_while(|&(_, &b)| b <= ci)
            .all(|(&a, &b)| pid.wins[a].control_amplitude < pid.wins[b].control_amplitude),
        None => false,
    };
    let c_ok = csmc_ratio < 2.0 && pid_ratio > 1.5 && monotone_through_crossing;

    // energy comparison over the final 20 s
    let energy_ok = pid.final_power > csmc.final_power;

    check(
        10,
        "chirp comparison",
        a_ok && b_ok && c_ok && energy_ok,
        &format!(
            "PID error peak at {peak_freq:.2} rad/s; crossing at {cross_freq:.2} rad/s; \
             CSMC u-amp ratio {csmc_ratio:.3}, PID u-amp ratio {pid_ratio:.3} \
             (monotone to crossing: {monotone_through_crossing}); \
             final-20s power PID {:.4} V^2 vs CSMC {:.4} V^2",
            pid.final_power, csmc.final_power
        ),
    );
}

#[test]
fn criterion_11_linearity_split() {
    let w_d = 2.0;
    let period = std::f64::consts::TAU / w_d;
    let t_end = 20.0 + 5.0 * period;
    let amp_for = |controller: ControllerConfig, a_d: f64| {
        let config = sim_defaults(controller, SignalSpec::sine(a_d, w_d).unwrap(), t_end);
        let trace = simulate(&config).unwrap();
        let t_last = *trace.t.last().unwrap();
        steady_state_metrics(&trace, (t_last - 4.0 * period, t_last), a_d, Some(w_d))
            .unwrap()
            .error_amplitude
    };

    let pid_1 = amp_for(ControllerConfig::Pid(paper_pid_gains()), 1.0);
    let pid_2 = amp_for(ControllerConfig::Pid(paper_pid_gains()), 2.0);
    let pid_dev = (pid_2 / pid_1 - 2.0).abs() / 2.0;

    let csmc = |a_d: f64| {
        amp_for(
            ControllerConfig::Csmc { lipschitz: 0.4, lambda: DEFAULT_LAMBDA },
            a_d,
        )
    };
    let csmc_1 = csmc(1.0);
    let csmc_2 = csmc(2.0);
    let csmc_dev = (csmc_2 / csmc_1 - 2.0).abs() / 2.0;

    let pass = pid_dev <= 0.005 && csmc_dev > 0.05;
    check(
        11,
        "linearity split",
        pass,
        &format!(
            "PID scaling deviation {:.3}% (limit 0.5%), CSMC deviation {:.2}% (must exceed 5%)",
            pid_dev * 100.0,
            csmc_dev * 100.0
        ),
    );
}
