use rayon::prelude::*;
use serde_json::json;

use super::config::{ConfigError, ExperimentConfig, Group, WindowEnd};
use super::output::{ndjson_footer, num, Provenance, ResultTable, UNITS_LINE};
use super::CliError;
use crate::analysis::{self, CandidatePovmDensity};
use crate::bohm::{self, IntegratorOptions};
use crate::experiments::{self, SpreadingGeometry};
use crate::flux::{self, ProfileOptions};
use crate::numerics;

type CmdResult = Result<String, CliError>;

/// Resolved knobs, printed by `--dry-run`.
struct Plan {
    lines: Vec<(String, String)>,
}

impl Plan {
    fn new() -> Self {
        Self { lines: Vec::new() }
    }

    fn add(&mut self, key: &str, value: impl ToString) {
        self.lines.push((key.to_string(), value.to_string()));
    }

    fn render(&self, command: &str, cfg: &ExperimentConfig) -> String {
        let mut out = format!("# arrival {command} (dry run)\n{UNITS_LINE}\n");
        for (k, v) in &self.lines {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out.push_str(&format!("config_hash = {:016x}\n", cfg.hash()));
        out
    }
}

pub fn plan(command: &'static str, cfg: &ExperimentConfig) -> CmdResult {
    dispatch(command, cfg, true)
}

pub fn run(command: &'static str, cfg: &ExperimentConfig) -> CmdResult {
    dispatch(command, cfg, false)
}

fn dispatch(command: &'static str, cfg: &ExperimentConfig, dry: bool) -> CmdResult {
    match command {
        "current" => current(cfg, dry),
        "cplus" => cplus(cfg, dry),
        "negint" => negint(cfg, dry),
        "threshold" => threshold(cfg, dry),
        "sweep-spreading" => sweep_spreading(cfg, dry),
        "sweep-velocity" => sweep_velocity(cfg, dry),
        "trajectories" => trajectories(cfg, dry),
        "arrival-hist" => arrival_hist(cfg, dry),
        "nogo" => nogo(cfg, dry),
        "farfield" => farfield(cfg, dry),
        other => unreachable!("unknown command {other}"),
    }
}

fn profile_options(cfg: &ExperimentConfig, plan: &mut Plan) -> Result<ProfileOptions, ConfigError> {
    let d = ProfileOptions::default();
    let opts = ProfileOptions {
        n_coarse: cfg.usize_or("n_coarse", d.n_coarse)?,
        eps_rel: cfg.f64_or("eps_rel", d.eps_rel)?,
        quad_tol: cfg.positive_f64_or("quad_tol", d.quad_tol)?,
        refine_tol_rel: cfg.positive_f64_or("refine_tol_rel", d.refine_tol_rel)?,
    };
    if opts.n_coarse < 64 {
        return Err(ConfigError::new(0, "n_coarse", "must be at least 64"));
    }
    plan.add("n_coarse", opts.n_coarse);
    plan.add("eps_rel", num(opts.eps_rel));
    plan.add("quad_tol", num(opts.quad_tol));
    plan.add("refine_tol_rel", num(opts.refine_tol_rel));
    Ok(opts)
}

fn integrator_options(
    cfg: &ExperimentConfig,
    plan: &mut Plan,
) -> Result<IntegratorOptions, ConfigError> {
    let d = IntegratorOptions::default();
    let opts = IntegratorOptions {
        rtol: cfg.positive_f64_or("rtol", d.rtol)?,
        atol: cfg.positive_f64_or("atol", d.atol)?,
        max_step_fraction: cfg.positive_f64_or("max_step_fraction", d.max_step_fraction)?,
        max_halvings: cfg.u64_or("max_halvings", d.max_halvings as u64)? as u32,
        stop_at_first_crossing: false,
    };
    plan.add("rtol", num(opts.rtol));
    plan.add("atol", num(opts.atol));
    plan.add("max_step_fraction", num(opts.max_step_fraction));
    plan.add("max_halvings", opts.max_halvings);
    Ok(opts)
}

fn seed(cfg: &ExperimentConfig, plan: &mut Plan) -> Result<u64, ConfigError> {
    let s = cfg.u64_or("seed", 0)?;
    plan.add("seed", s);
    Ok(s)
}

fn state_and_window(
    cfg: &ExperimentConfig,
    plan: &mut Plan,
) -> Result<(crate::WaveState, crate::DetectorWindow), ConfigError> {
    let state = cfg.state()?;
    let window = cfg.window()?;
    plan.add("packets", state.terms().len());
    plan.add("norm_sqr", num(state.norm_sqr(0.0)));
    plan.add("D", num(window.position));
    plan.add("T", num(window.t_end));
    Ok((state, window))
}

fn current(cfg: &ExperimentConfig, dry: bool) -> CmdResult {
    let mut plan = Plan::new();
    let (state, window) = state_and_window(cfg, &mut plan)?;
    let opts = profile_options(cfg, &mut plan)?;
    if dry {
        return Ok(plan.render("current", cfg));
    }
    let profile = flux::current_profile(&state, &window, &opts)?;
    let mut table = ResultTable::new(&["t", "j", "cumulative"]);
    let mut cumulative = 0.0;
    for i in 0..profile.times.len() {
        if i > 0 {
            let dt = profile.times[i] - profile.times[i - 1];
            cumulative += 0.5 * dt * (profile.values[i] + profile.values[i - 1]);
        }
        table.push(vec![
            num(profile.times[i]),
            num(profile.values[i]),
            num(cumulative),
        ]);
    }
    for m in &profile.refined_minima {
        table.note("minimum", format!("t {} j {}", num(m.t), num(m.j)));
    }
    table.note("min_j", num(profile.min_value));
    table.note("argmin", num(profile.argmin));
    table.note("in_cplus", profile.is_nonnegative());
    report_verdict(&profile);
    Ok(table.render(&Provenance::new("current", cfg.u64_or("seed", 0)?, cfg)))
}

fn report_verdict(profile: &flux::CurrentProfile) {
    if profile.is_nonnegative() {
        eprintln!("verdict: in C+");
    } else {
        eprintln!(
            "verdict: not in C+ (j = {} at t = {})",
            profile.min_value, profile.argmin
        );
    }
}

fn cplus(cfg: &ExperimentConfig, dry: bool) -> CmdResult {
    let mut plan = Plan::new();
    let (state, window) = state_and_window(cfg, &mut plan)?;
    let opts = profile_options(cfg, &mut plan)?;
    if dry {
        return Ok(plan.render("cplus", cfg));
    }
    let verdict = flux::is_in_cplus(&state, &window, &opts)?;
    let p = &verdict.profile;
    let mut table = ResultTable::new(&["t", "j", "negative"]);
    for m in &p.refined_minima {
        table.push(vec![num(m.t), num(m.j), (m.j < -p.tolerance).to_string()]);
    }
    table.note("in_cplus", verdict.member);
    if let Some(w) = verdict.witness {
        table.note("witness_t", num(w.t));
        table.note("witness_j", num(w.j));
    }
    table.note("tolerance", num(p.tolerance));
    report_verdict(p);
    Ok(table.render(&Provenance::new("cplus", cfg.u64_or("seed", 0)?, cfg)))
}

fn negint(cfg: &ExperimentConfig, dry: bool) -> CmdResult {
    let mut plan = Plan::new();
    let (state, window) = state_and_window(cfg, &mut plan)?;
    let opts = profile_options(cfg, &mut plan)?;
    if dry {
        return Ok(plan.render("negint", cfg));
    }
    let p = flux::current_profile(&state, &window, &opts)?;
    let mut table = ResultTable::new(&["n_neg", "min_j", "argmin", "max_abs_j", "tolerance"]);
    table.push(vec![
        num(p.neg_integral),
        num(p.min_value),
        num(p.argmin),
        num(p.max_abs),
        num(p.tolerance),
    ]);
    Ok(table.render(&Provenance::new("negint", cfg.u64_or("seed", 0)?, cfg)))
}

/// Geometry of the equal-momentum pair: `[run] sigma`, `half_separation`
/// and the detector position, defaulting to `±4σ` and `10σ`.
fn spreading_setup(
    cfg: &ExperimentConfig,
    plan: &mut Plan,
) -> Result<(f64, SpreadingGeometry), ConfigError> {
    let sigma = cfg.positive_f64_or("sigma", 1.0)?;
    let mut geometry = SpreadingGeometry::scaled(sigma);
    geometry.half_separation = cfg.positive_f64_or("half_separation", geometry.half_separation)?;
    if let Some(det) = cfg.detector {
        if det.t_end != WindowEnd::Auto {
            return Err(ConfigError::new(
                det.line,
                "T",
                "sweeps derive T per grid point; use T = auto",
            ));
        }
        geometry.detector = det.position;
    }
    if !(geometry.detector > geometry.half_separation) {
        return Err(ConfigError::new(
            0,
            "D",
            "detector must lie beyond the right packet",
        ));
    }
    plan.add("sigma", num(sigma));
    plan.add("half_separation", num(geometry.half_separation));
    plan.add("D", num(geometry.detector));
    Ok((sigma, geometry))
}

fn k_grid(cfg: &ExperimentConfig, sigma: f64, plan: &mut Plan) -> Result<Vec<f64>, ConfigError> {
    let k_min = cfg.f64_or("k_min", 0.0)?;
    let k_max = cfg.f64_or("k_max", 3.0 / sigma)?;
    let step = cfg.positive_f64_or("k_step", 0.05)?;
    if !(k_max > k_min) {
        return Err(ConfigError::new(0, "k_max", "must exceed k_min"));
    }
    let n = ((k_max - k_min) / step).round().max(1.0) as usize;
    plan.add("k_grid", format!("{k_min}..{k_max} ({} points)", n + 1));
    Ok(numerics::linspace(k_min, k_max, n))
}

fn threshold(cfg: &ExperimentConfig, dry: bool) -> CmdResult {
    let mut plan = Plan::new();
    let (sigma, geometry) = spreading_setup(cfg, &mut plan)?;
    let grid = k_grid(cfg, sigma, &mut plan)?;
    let tol = cfg.positive_f64_or("tol", 0.01)?;
    plan.add("tol", num(tol));
    let opts = profile_options(cfg, &mut plan)?;
    if dry {
        return Ok(plan.render("threshold", cfg));
    }
    let b = experiments::threshold_k_sigma_on_grid(sigma, &grid, tol, &geometry, &opts)?;
    let mut table = ResultTable::new(&["sigma", "k_sigma", "lower", "upper", "width"]);
    table.push(vec![
        num(sigma),
        num(b.estimate()),
        num(b.lower),
        num(b.upper),
        num(b.width()),
    ]);
    Ok(table.render(&Provenance::new("threshold", cfg.u64_or("seed", 0)?, cfg)))
}

fn sweep_spreading(cfg: &ExperimentConfig, dry: bool) -> CmdResult {
    let mut plan = Plan::new();
    let (sigma, geometry) = spreading_setup(cfg, &mut plan)?;
    let grid = k_grid(cfg, sigma, &mut plan)?;
    let opts = profile_options(cfg, &mut plan)?;
    if dry {
        return Ok(plan.render("sweep-spreading", cfg));
    }
    let sweep = experiments::spreading_sweep(sigma, &grid, &geometry, &opts)?;
    let mut table = ResultTable::new(&["k", "T", "n_plus", "n_minus", "both_zero"]);
    for (i, &k) in sweep.k_values.iter().enumerate() {
        let t = geometry.window(sigma, k)?.t_end;
        table.push(vec![
            num(k),
            num(t),
            num(sweep.n_plus[i]),
            num(sweep.n_minus[i]),
            sweep.both_zero(i).to_string(),
        ]);
    }
    match sweep.threshold {
        Some(b) => table.note(
            "threshold_bracket",
            format!("{} {}", num(b.lower), num(b.upper)),
        ),
        None => table.note("threshold_bracket", "unbracketed"),
    }
    Ok(table.render(&Provenance::new(
        "sweep-spreading",
        cfg.u64_or("seed", 0)?,
        cfg,
    )))
}

fn sweep_velocity(cfg: &ExperimentConfig, dry: bool) -> CmdResult {
    let mut plan = Plan::new();
    let k1 = cfg.positive_f64_or("k1", 20.0)?;
    let sigma = cfg.positive_f64_or("sigma", 1.0)?;
    let detector = match cfg.detector {
        Some(det) => {
            if det.t_end != WindowEnd::Auto {
                return Err(ConfigError::new(
                    det.line,
                    "T",
                    "sweeps derive T per grid point; use T = auto",
                )
                .into());
            }
            det.position
        }
        None => 40.0,
    };
    let r_min = cfg.f64_or("ratio_min", 0.5)?;
    let r_max = cfg.f64_or("ratio_max", 1.5)?;
    let step = cfg.positive_f64_or("ratio_step", 0.005)?;
    if !(r_max > r_min) {
        return Err(ConfigError::new(0, "ratio_max", "must exceed ratio_min").into());
    }
    let n = ((r_max - r_min) / step).round().max(1.0) as usize;
    plan.add("k1", num(k1));
    plan.add("sigma", num(sigma));
    plan.add("D", num(detector));
    plan.add("ratio_grid", format!("{r_min}..{r_max} ({} points)", n + 1));
    let mut opts = experiments::velocity_profile_options();
    if !cfg.has("n_coarse") {
        // Velocity studies default to the finer grid.
        let mut scratch = Plan::new();
        let o = profile_options(cfg, &mut scratch)?;
        opts = ProfileOptions {
            n_coarse: opts.n_coarse,
            ..o
        };
        plan.add("n_coarse", opts.n_coarse);
    } else {
        opts = profile_options(cfg, &mut plan)?;
    }
    if dry {
        return Ok(plan.render("sweep-velocity", cfg));
    }
    let grid = numerics::linspace(r_min, r_max, n);
    let sweep = experiments::velocity_sweep(k1, &grid, sigma, detector, &opts)?;
    let mut table = ResultTable::new(&[
        "ratio", "k2", "x2", "t_meet", "T", "n_plus", "n_minus", "m", "error",
    ]);
    for p in &sweep.points {
        let (x2, tm) = p
            .placement
            .map_or((f64::NAN, f64::NAN), |pl| (pl.x2, pl.t_meet));
        let error = p.error.as_deref().unwrap_or("").replace(',', ";");
        table.push(vec![
            num(p.ratio),
            num(p.k2),
            num(x2),
            num(tm),
            num(p.t_end),
            num(p.n_plus),
            num(p.n_minus),
            num(p.m),
            error,
        ]);
    }
    let support: Vec<String> = sweep
        .support
        .iter()
        .map(|(a, b)| format!("{}..{}", num(*a), num(*b)))
        .collect();
    table.note("support", support.join(" "));
    table.note("support_width", num(sweep.support_width()));
    table.note("max_m", num(sweep.max_m));
    Ok(table.render(&Provenance::new(
        "sweep-velocity",
        cfg.u64_or("seed", 0)?,
        cfg,
    )))
}

fn downsample(nodes: &[(f64, f64)], max_nodes: usize) -> Vec<[f64; 2]> {
    if nodes.len() <= max_nodes {
        return nodes.iter().map(|&(t, x)| [t, x]).collect();
    }
    let last = nodes.len() - 1;
    (0..max_nodes)
        .map(|i| {
            let (t, x) = nodes[(i * last + (max_nodes - 1) / 2) / (max_nodes - 1)];
            [t, x]
        })
        .collect()
}

fn trajectories(cfg: &ExperimentConfig, dry: bool) -> CmdResult {
    let mut plan = Plan::new();
    let (state, window) = state_and_window(cfg, &mut plan)?;
    let opts = integrator_options(cfg, &mut plan)?;
    let seed = seed(cfg, &mut plan)?;
    let x_init = cfg.opt_f64("x_init")?;
    let n = if x_init.is_some() {
        1
    } else {
        cfg.usize_or("n_samples", 200)?
    };
    let max_nodes = cfg.usize_or("max_nodes", 64)?;
    if max_nodes < 2 {
        return Err(ConfigError::new(0, "max_nodes", "must be at least 2").into());
    }
    let special = cfg.bool_or("special", false)?;
    plan.add("n_samples", n);
    plan.add("max_nodes", max_nodes);
    plan.add("special", special);
    if let Some(x) = x_init {
        plan.add("x_init", num(x));
    }
    if dry {
        return Ok(plan.render("trajectories", cfg));
    }

    let seeds = match x_init {
        Some(x) => vec![x],
        None => bohm::sample_initial_positions(&state, n, seed)?,
    };
    let mut runs: Vec<(bool, f64)> = seeds.iter().map(|&x| (false, x)).collect();
    if special {
        // The trajectory through the detector at the current minimum.
        let profile =
            flux::current_profile(&state, &window, &profile_options(cfg, &mut Plan::new())?)?;
        runs.push((
            true,
            bohm::seed_through(&state, window.position, profile.argmin),
        ));
    }
    let records: Vec<String> = runs
        .par_iter()
        .enumerate()
        .map(|(i, &(is_special, x0))| {
            let traj = bohm::integrate_trajectory(&state, x0, &window, &opts);
            let crossings: Vec<[f64; 2]> = traj
                .crossings
                .iter()
                .map(|c| [c.t, c.direction as f64])
                .collect();
            json!({
                "index": i,
                "special": is_special,
                "x_init": x0,
                "first_crossing": traj.first_crossing().map(|c| c.t),
                "crossing_count": traj.crossing_count(),
                "crossings": crossings,
                "termination": traj.termination.as_str(),
                "nodes": downsample(&traj.nodes, max_nodes),
            })
            .to_string()
        })
        .collect();
    let mut out = String::new();
    for r in records {
        out.push_str(&r);
        out.push('\n');
    }
    out.push_str(&ndjson_footer(&Provenance::new("trajectories", seed, cfg)));
    Ok(out)
}

fn arrival_hist(cfg: &ExperimentConfig, dry: bool) -> CmdResult {
    let mut plan = Plan::new();
    let (state, window) = state_and_window(cfg, &mut plan)?;
    let opts = integrator_options(cfg, &mut plan)?;
    let seed = seed(cfg, &mut plan)?;
    let n = cfg.usize_or("n_samples", 10_000)?;
    let bins = cfg.usize_or("bins", 20)?;
    if bins == 0 {
        return Err(ConfigError::new(0, "bins", "must be positive").into());
    }
    plan.add("n_samples", n);
    plan.add("bins", bins);
    if dry {
        return Ok(plan.render("arrival-hist", cfg));
    }
    let ens = bohm::first_arrival_ensemble(&state, &window, n, seed, bins, &opts)?;
    let probs = bohm::flux_bin_probabilities(&state, &window, bins);
    let mut table = ResultTable::new(&[
        "t_start",
        "t_end",
        "count",
        "flux_probability",
        "expected",
        "z",
    ]);
    for (b, &p) in probs.iter().enumerate() {
        let expected = n as f64 * p;
        let sd = (n as f64 * p.abs() * (1.0 - p).abs()).sqrt();
        let z = if sd > 0.0 {
            (ens.histogram[b] as f64 - expected) / sd
        } else {
            f64::NAN
        };
        table.push(vec![
            num(ens.bin_edges[b]),
            num(ens.bin_edges[b + 1]),
            ens.histogram[b].to_string(),
            num(p),
            num(expected),
            num(z),
        ]);
    }
    table.note("n_samples", n);
    table.note("crossed", ens.crossing_times.len());
    table.note("never_crossed", ens.n_never);
    table.note("failed", ens.n_failed);
    let multi = ens.crossing_counts.iter().filter(|&&c| c > 1).count();
    table.note("multiple_crossers", multi);
    Ok(table.render(&Provenance::new("arrival-hist", seed, cfg)))
}

fn nogo(cfg: &ExperimentConfig, dry: bool) -> CmdResult {
    let mut plan = Plan::new();
    let psi = cfg.group_state(Group::Psi)?;
    let phi = cfg
        .group_state(Group::Phi)
        .map_err(|_| ConfigError::new(0, "group", "nogo needs packets with group = phi"))?;
    let window = cfg.window()?;
    plan.add("psi_packets", psi.terms().len());
    plan.add("phi_packets", phi.terms().len());
    plan.add("D", num(window.position));
    plan.add("T", num(window.t_end));
    let opts = profile_options(cfg, &mut plan)?;
    if dry {
        return Ok(plan.render("nogo", cfg));
    }
    let witness = analysis::verify_nogo_witness(&psi, &phi, &window, &opts)?;
    let mut table = ResultTable::new(&["state", "in_cplus", "min_j", "argmin", "n_neg"]);
    let states = [
        ("psi", psi.clone()),
        ("phi", phi.clone()),
        ("psi+phi", &psi + &phi),
        ("psi-phi", &psi - &phi),
    ];
    for (label, s) in &states {
        let p = flux::current_profile(s, &window, &opts)?;
        table.push(vec![
            label.to_string(),
            p.is_nonnegative().to_string(),
            num(p.min_value),
            num(p.argmin),
            num(p.neg_integral),
        ]);
    }
    table.note("negative_combination", witness.negative.label());
    table.note("t_minus", num(witness.t_minus));
    table.note("j_minus", num(witness.j_minus));
    if window.position > 0.0 {
        let candidate = CandidatePovmDensity::momentum(window.position)?;
        let eps = analysis::epsilon_bound_check(&candidate, &psi, &phi, &window, &opts)?;
        table.note("epsilon_bound_holds", eps.bound_holds);
        table.note("epsilon_min_slack", num(eps.min_slack));
        table.note("epsilon_gap_at_t_minus", num(eps.gap_at_t_minus));
        table.note(
            "epsilon_max_identity_residual",
            num(eps.max_identity_residual),
        );
    }
    Ok(table.render(&Provenance::new("nogo", cfg.u64_or("seed", 0)?, cfg)))
}

fn farfield(cfg: &ExperimentConfig, dry: bool) -> CmdResult {
    let mut plan = Plan::new();
    let (state, window) = state_and_window(cfg, &mut plan)?;
    let n_times = cfg.usize_or("n_times", 512)?;
    let t_max = cfg.positive_f64_or("t_max", window.t_end)?;
    let t_min = cfg.positive_f64_or("t_min", t_max / n_times.max(1) as f64)?;
    if n_times == 0 || !(t_max > t_min) {
        return Err(ConfigError::new(0, "t_max", "need t_max > t_min > 0 and n_times > 0").into());
    }
    plan.add(
        "t_range",
        format!("{t_min}..{t_max} ({} points)", n_times + 1),
    );
    if dry {
        return Ok(plan.render("farfield", cfg));
    }
    let d = window.position;
    let mut table = ResultTable::new(&["t", "j", "j_farfield", "abs_diff"]);
    for &t in &numerics::linspace(t_min, t_max, n_times) {
        let j = flux::current(&state, d, t);
        let f = analysis::farfield_current(&state, d, t)?;
        table.push(vec![num(t), num(j), num(f), num((f - j).abs())]);
    }
    let peak = analysis::transit_peak(&state, d, t_min, t_max)?;
    table.note("peak_t", num(peak.t));
    table.note("peak_j", num(peak.current));
    table.note("peak_farfield", num(peak.farfield));
    table.note("peak_relative_error", num(peak.relative_error()));
    Ok(table.render(&Provenance::new("farfield", cfg.u64_or("seed", 0)?, cfg)))
}
