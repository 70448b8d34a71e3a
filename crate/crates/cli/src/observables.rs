//! Per-point evaluation of each observable into table cells. Axis cells are
//! prepended by the caller; the columns here are fixed per observable.

use num_complex::Complex64;
use serde_json::{json, Value};
use udw::quadrature::Tolerance;
use udw::{
    detector_dynamics::single_track, effective_temperature, evolve_correlators, excited_population, extract_markers, monte_carlo_fidelity,
    perturbative_rho11, response_function, run_physical, run_pseudo, slice_state, transition_rate, transition_rate_limit, DetectorParams,
    Foliation, GaussianState, SwitchingFunction, TeleportScenario, WightmanKernel, Worldline,
};

use crate::config::{Observable, Point, RunConfig};
use crate::output::Cell;

/// Boundary terms reported by the rate, zero where a dimension has none.
const BOUNDARY: [&str; 4] = ["constant", "local", "switch_on", "switch_on_cubic"];

pub fn columns(obs: Observable) -> Vec<String> {
    let fixed: &[&str] = match obs {
        Observable::Rate => &["rate", "integral", "error_estimate"],
        Observable::Probability => &["probability", "error_estimate"],
        Observable::Rho11 => &["eta", "rho11_exact", "rho11_perturbative", "t_eff", "min_symplectic", "error_estimate"],
        Observable::Teleport => &[
            "t1",
            "tau_a",
            "tau_b",
            "tau_adv",
            "f_av",
            "f_av_mc",
            "log_negativity",
            "entanglement_margin",
            "error_estimate",
            "f_av_mc_sigma",
        ],
    };
    let mut cols: Vec<String> = fixed.iter().map(|s| s.to_string()).collect();
    if obs == Observable::Rate {
        cols.extend(BOUNDARY.iter().map(|b| format!("boundary_{b}")));
    }
    cols
}

pub struct Evaluation {
    pub rows: Vec<Vec<Cell>>,
    /// Per-point facts that do not fit the row schema.
    pub note: Option<Value>,
}

fn tolerance(cfg: &RunConfig, p: &Point) -> Tolerance {
    Tolerance::new(p.num(cfg, "rel_tol"), p.num(cfg, "abs_tol"))
}

fn worldline(cfg: &RunConfig, p: &Point, d: usize) -> udw::Result<Worldline> {
    let a = p.num(cfg, "a");
    match cfg.raw("trajectory") {
        "inertial" => Worldline::inertial_rest(d),
        "uniform" => Worldline::uniform(d, a),
        "asymptotic" => Worldline::asymptotic_uniform(d, a, p.num(cfg, "width")),
        "truncated" => Worldline::truncated_uniform(d, a, p.num(cfg, "tau2")),
        _ => Worldline::static_at(d, p.num(cfg, "x")),
    }
}

fn kernel(cfg: &RunConfig, p: &Point, d: usize) -> udw::Result<WightmanKernel> {
    if d == 2 {
        WightmanKernel::with_ir_mass(2, p.num(cfg, "mu"))
    } else {
        WightmanKernel::new(d)
    }
}

fn params(cfg: &RunConfig, p: &Point) -> udw::Result<DetectorParams> {
    DetectorParams::from_frequency(p.num(cfg, "m0"), p.num(cfg, "omega"), p.num(cfg, "gamma"), p.num(cfg, "lambda0"), p.num(cfg, "lambda1"))
}

pub fn evaluate(cfg: &RunConfig, p: &Point) -> udw::Result<Evaluation> {
    match cfg.observable {
        Observable::Rate => rate(cfg, p),
        Observable::Probability => probability(cfg, p),
        Observable::Rho11 => rho11(cfg, p),
        Observable::Teleport => teleport(cfg, p),
    }
}

fn rate(cfg: &RunConfig, p: &Point) -> udw::Result<Evaluation> {
    let d = p.int(cfg, "d") as usize;
    let (w, k, tol) = (worldline(cfg, p, d)?, kernel(cfg, p, d)?, tolerance(cfg, p));
    let (omega, tau, dtau) = (p.num(cfg, "omega"), p.num(cfg, "tau"), p.num(cfg, "dtau"));
    let r = if dtau.is_infinite() {
        transition_rate_limit(d, &w, omega, tau, &k, tol)?
    } else {
        transition_rate(d, &w, omega, tau, dtau, &k, tol)?
    };
    let mut row = vec![Cell::Num(r.value), Cell::Num(r.integral), Cell::Num(r.error_estimate)];
    row.extend(BOUNDARY.iter().map(|b| Cell::Num(r.boundary_terms.iter().filter(|t| t.name == *b).fold(0.0, |acc, t| acc + t.value))));
    Ok(Evaluation { rows: vec![row], note: None })
}

fn probability(cfg: &RunConfig, p: &Point) -> udw::Result<Evaluation> {
    let d = p.int(cfg, "d") as usize;
    let chi = SwitchingFunction::new(p.num(cfg, "tau0"), p.num(cfg, "tau"), p.num(cfg, "delta"))?;
    let (w, k) = (worldline(cfg, p, d)?, kernel(cfg, p, d)?);
    let r = response_function(d, &chi, &w, p.num(cfg, "omega"), &k, tolerance(cfg, p))?;
    Ok(Evaluation {
        rows: vec![vec![Cell::Num(r.value), Cell::Num(r.error_estimate)]],
        note: None,
    })
}

fn grid(cfg: &RunConfig, key: &str) -> Vec<f64> {
    crate::config::parse_list(key, cfg.raw(key)).expect("validated")
}

fn rho11(cfg: &RunConfig, p: &Point) -> udw::Result<Evaluation> {
    let params = params(cfg, p)?;
    let a = p.num(cfg, "a");
    let ground = GaussianState::vacuum(&["detector"], params.scale(), 1.0)?;
    let series = evolve_correlators(&params, &[single_track(a)?], &ground, &grid(cfg, "eta"), tolerance(cfg, p))?;
    let rows = series
        .samples
        .iter()
        .map(|s| {
            let eta = s.times[0];
            let (q2, p2, pq) = s.local("detector")?;
            Ok(vec![
                Cell::Num(eta),
                Cell::Num(excited_population(q2, p2, pq, params.m0, params.omega_r, s.hbar)?),
                Cell::Num(perturbative_rho11(&params, a, eta).value),
                Cell::Num(effective_temperature(q2, p2, pq, &params, s.hbar)?),
                Cell::Num(s.min_symplectic),
                Cell::Num(s.error_estimate),
            ])
        })
        .collect::<udw::Result<Vec<_>>>()?;
    Ok(Evaluation { rows, note: None })
}

fn scenario(cfg: &RunConfig, p: &Point) -> udw::Result<TeleportScenario> {
    let alpha = Complex64::new(p.num(cfg, "alpha_re"), p.num(cfg, "alpha_im"));
    let mut s = TeleportScenario::new(p.num(cfg, "a"), p.num(cfg, "b"), p.num(cfg, "r1"), p.num(cfg, "r2"), alpha, params(cfg, p)?)
        .with_moments(grid(cfg, "t1"))
        .with_tolerance(tolerance(cfg, p));
    if cfg.raw("foliation") == "quasi-rindler" {
        s = s.with_foliation(Foliation::QuasiRindler);
    }
    if cfg.raw("mode") == "physical" {
        s = s.physical(p.num(cfg, "tau2"));
    }
    Ok(s)
}

fn teleport(cfg: &RunConfig, p: &Point) -> udw::Result<Evaluation> {
    let s = scenario(cfg, p)?;
    let physical = cfg.raw("mode") == "physical";
    let series = if physical { run_physical(&s)? } else { run_pseudo(&s)? };
    let samples = p.int(cfg, "mc_samples") as usize;
    let seed = p.int(cfg, "seed");
    let opt = |v: Option<f64>| v.map_or(Cell::Empty, Cell::Num);
    let mut rows = Vec::with_capacity(series.points.len());
    for (k, q) in series.points.iter().enumerate() {
        let mc = if samples > 0 {
            let ab = slice_state(&s, q.moment)?;
            Some(monte_carlo_fidelity(&ab, &s, samples, seed.wrapping_add(k as u64))?)
        } else {
            None
        };
        rows.push(vec![
            Cell::Num(q.moment),
            Cell::Num(q.tau_a),
            Cell::Num(q.tau_b),
            opt(q.tau_adv),
            Cell::Num(q.f_av),
            opt(mc.map(|m| m.0)),
            Cell::Num(q.log_negativity),
            Cell::Num(q.entanglement_margin),
            Cell::Num(q.error_estimate),
            opt(mc.map(|m| m.1)),
        ]);
    }
    let note = match extract_markers(&series) {
        Ok(m) => json!({
            "peaks": m.peaks.iter().map(|(t, f)| json!([t, f])).collect::<Vec<_>>(),
            "t_half": m.t_half,
            "t_de": m.t_de,
        }),
        Err(e) => json!({ "markers_unavailable": e.to_string() }),
    };
    Ok(Evaluation { rows, note: Some(note) })
}

/// Fixed conventions of the observable, recorded with every output.
pub fn conventions(cfg: &RunConfig) -> Value {
    let common = json!({ "units": "hbar = c = 1, metric signature (-, +, ..., +)" });
    let specific = match cfg.observable {
        Observable::Rate => json!({
            "rate": "sharp switch-off at tau, switch-on at tau - dtau; dtau = inf is the infinite-past limit",
            "d2_infrared_mass": "mu sets the additive constant of the d = 2 kernel only",
        }),
        Observable::Probability => json!({
            "switching": "plateau [tau0, tau] with ramps of duration delta built from the exp(-1/(x(1-x))) bump",
            "prefactor": "coupling and monopole matrix element excluded",
        }),
        Observable::Rho11 => json!({
            "initial_state": "detector ground state with the field in vacuum",
            "perturbative_planck_term": "taken as 0 when a <= 0",
        }),
        Observable::Teleport => json!({
            "log_negativity_base": 2,
            "foliation_pairing": match cfg.raw("foliation") {
                "minkowski" => "(tau_a, tau_b) = (t1, asinh(a t1) / a)",
                _ => "tau_b = tau1, tau_a = tanh(a tau1) / b on the Rindler slice through the receiver",
            },
            "lightcone_epsilon": "1e-6 / omega",
            "monte_carlo_seed": "seed + moment index",
        }),
    };
    let mut out = common;
    if let (Some(o), Value::Object(s)) = (out.as_object_mut(), specific) {
        o.extend(s);
    }
    out
}
