//! Command implementations: resolve configuration, run the core solvers,
//! write artifacts, assemble claim tables.

use crate::config::*;
use crate::manifest::{render_claims_table, ArtifactWriter, ClaimRow, Manifest};
use crate::{Command, CommonArgs, GridArgs, InstanceArgs, SolverArgs};
use dgpe_core::error::CoreError;
use dgpe_core::experiments::{
    asymptotic_sweep, fit_sweep, splitstep_evolve, stability_probe, sweep_targets, EvolveOptions,
};
use dgpe_core::functional::multiplier_estimate;
use dgpe_core::minimizer::{minimize, verify_claims, GroundStateResult, InitialGuess};
use dgpe_core::params::{
    aux_structure_check, h_c, validate_regime, ModelParams, WellGeometry,
};
use dgpe_core::spectral::{read_field, write_field, Fft3};
use dgpe_core::wp::{
    derive_geometry_cached, gn_constant, gn_constant_cached, ode_residual_max, quartic_constant,
    solve_wp, DEFAULT_RESIDUAL_TOL,
};
use dgpe_core::{Field, Grid3, SolverConfig};
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

pub struct CmdError {
    pub code: u8,
    pub kind: String,
    pub message: String,
}

impl CmdError {
    fn validation(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            kind: "Validation".into(),
            message: message.into(),
        }
    }

    fn io(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            kind: "Io".into(),
            message: message.into(),
        }
    }
}

impl From<CoreError> for CmdError {
    fn from(e: CoreError) -> Self {
        let (code, kind) = match &e {
            CoreError::InvalidGrid { .. }
            | CoreError::InvalidBox { .. }
            | CoreError::GridMismatch
            | CoreError::ExponentOutOfRange { .. }
            | CoreError::ExponentDegenerate { .. }
            | CoreError::NonNegativeLambda3 { .. }
            | CoreError::NonPositiveMass { .. }
            | CoreError::MassAboveThreshold { .. }
            | CoreError::Regime(_)
            | CoreError::NonPositiveDilation { .. }
            | CoreError::ZeroField => (1u8, "Validation"),
            CoreError::Io(_) | CoreError::SnapshotFormat(_) => (3, "Io"),
            _ => (2, "Solver"),
        };
        Self {
            code,
            kind: kind.into(),
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError::io(e.to_string())
    }
}

/// Machine-readable error record on stderr.
pub fn emit_error(code: u8, kind: &str, message: &str) {
    let payload = serde_json::json!({
        "error": { "code": code, "kind": kind, "message": message }
    });
    eprintln!("{payload}");
}

fn fmt_f(v: f64) -> String {
    format!("{v:.17e}")
}

struct Resolved {
    file: FileConfig,
    out_dir: PathBuf,
    formats: BTreeSet<String>,
    seed: u64,
    jobs: usize,
    repro: bool,
}

fn resolve_common(common: &CommonArgs, default_out: &str) -> Result<Resolved, CmdError> {
    let file = match &common.config {
        Some(path) => load_config(path).map_err(CmdError::validation)?,
        None => FileConfig::default(),
    };
    let io = file.io.clone().unwrap_or_default();
    let out_dir = common
        .out
        .clone()
        .or_else(|| io.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs").join(default_out));
    let formats: BTreeSet<String> = common
        .format
        .clone()
        .or(io.formats)
        .unwrap_or_else(|| vec!["json".into(), "csv".into(), "bin".into()])
        .into_iter()
        .collect();
    for f in &formats {
        if !matches!(f.as_str(), "json" | "csv" | "bin") {
            return Err(CmdError::validation(format!("unknown format '{f}'")));
        }
    }
    let repro = common.repro || io.repro.unwrap_or(false);
    let jobs = if repro {
        1
    } else {
        common.jobs.or(io.jobs).unwrap_or(1).max(1)
    };
    Ok(Resolved {
        file,
        out_dir,
        formats,
        seed: common.seed.or(io.seed).unwrap_or(42),
        jobs,
        repro,
    })
}

/// Instance from flags over file config; mass may be given as a fraction of
/// the threshold.
fn resolve_instance(args: &InstanceArgs, file: &FileConfig) -> Result<ModelParams, CmdError> {
    let fc = file.instance.clone();
    let lambda1 = args
        .lambda1
        .or(fc.as_ref().map(|i| i.lambda1))
        .unwrap_or(0.0);
    let lambda2 = args
        .lambda2
        .or(fc.as_ref().map(|i| i.lambda2))
        .unwrap_or(0.0);
    let lambda3 = args
        .lambda3
        .or(fc.as_ref().map(|i| i.lambda3))
        .ok_or_else(|| CmdError::validation("missing --lambda3"))?;
    let p = args
        .p
        .or(fc.as_ref().map(|i| i.p))
        .ok_or_else(|| CmdError::validation("missing --p"))?;
    let mass = args.mass.or(fc.as_ref().and_then(|i| i.c));
    let mass_frac = args.mass_frac.or(fc.as_ref().and_then(|i| i.mass_frac));
    let c = match (mass, mass_frac) {
        (Some(c), _) => c,
        (None, Some(frac)) => {
            let probe = ModelParams::new(lambda1, lambda2, lambda3, p, 1.0);
            let c_star = derive_geometry_cached(&probe).map_err(CmdError::from)?.c_star;
            if !c_star.is_finite() {
                return Err(CmdError::validation(
                    "--mass-frac needs a finite threshold; the scalar case has none",
                ));
            }
            frac * c_star
        }
        (None, None) => return Err(CmdError::validation("missing --mass or --mass-frac")),
    };
    Ok(ModelParams::new(lambda1, lambda2, lambda3, p, c))
}

fn resolve_grid(
    args: &GridArgs,
    file: &FileConfig,
    params: &ModelParams,
) -> Result<Grid3, CmdError> {
    let fg = file.grid.clone().unwrap_or_default();
    let n = args.n.or(fg.n).unwrap_or(64);
    let box_len = match args.box_len.or(fg.box_len) {
        Some(b) => b,
        None => {
            let geom = derive_geometry_cached(params)?;
            dgpe_core::minimizer::suggested_box(params, &geom)?
        }
    };
    Ok(Grid3::cubic(n, box_len)?)
}

fn resolve_solver(args: &SolverArgs, file: &FileConfig) -> SolverConfig {
    let mut config = SolverConfig::default();
    if let Some(fc) = &file.solver {
        fc.apply(&mut config);
    }
    if let Some(tol) = args.tol {
        config.tol_grad = tol;
        config.tol_p = tol;
    }
    if let Some(tol_p) = args.tol_p {
        config.tol_p = tol_p;
    }
    if let Some(m) = args.max_iter {
        config.max_iter = m;
    }
    if args.no_precondition {
        config.precondition = false;
    }
    config
}

fn resolve_init(
    args: &SolverArgs,
    file: &FileConfig,
    seed: u64,
) -> Result<InitialGuess, CmdError> {
    let choice = args
        .init
        .clone()
        .or_else(|| file.solver.as_ref().and_then(|s| s.init.clone()))
        .unwrap_or_else(|| "vc".to_string());
    match choice.as_str() {
        "vc" => Ok(InitialGuess::ScalarReference),
        "random" => Ok(InitialGuess::Random { seed }),
        "file" => {
            let path = args
                .init_file
                .clone()
                .or_else(|| {
                    file.solver
                        .as_ref()
                        .and_then(|s| s.init_file.as_ref().map(PathBuf::from))
                })
                .ok_or_else(|| CmdError::validation("--init file needs --init-file"))?;
            let field = read_snapshot(&path)?;
            Ok(InitialGuess::Field(field))
        }
        other => Err(CmdError::validation(format!(
            "unknown init '{other}' (expected vc, random or file)"
        ))),
    }
}

fn read_snapshot(path: &Path) -> Result<Field, CmdError> {
    let file = std::fs::File::open(path)
        .map_err(|e| CmdError::io(format!("cannot open {}: {e}", path.display())))?;
    Ok(read_field(std::io::BufReader::new(file))?)
}

/// Resolved configuration echoed into the manifest for replay.
#[allow(clippy::too_many_arguments)]
fn echo_config(
    command: &str,
    params: Option<&ModelParams>,
    grid: Option<Grid3>,
    solver: Option<&SolverConfig>,
    resolved: &Resolved,
    evolve: Option<EvolveConfig>,
    sweep: Option<SweepConfig>,
    stability: Option<StabilityConfig>,
    wp: Option<WpConfig>,
) -> serde_json::Value {
    let file = FileConfig {
        command: Some(command.to_string()),
        instance: params.map(InstanceConfig::from_params),
        grid: grid.map(|g| GridConfig {
            n: Some(g.n()[0]),
            box_len: Some(g.box_len()[0]),
        }),
        solver: solver.map(|s| SolverFileConfig {
            step: Some(s.step),
            tol_grad: Some(s.tol_grad),
            tol_p: Some(s.tol_p),
            max_iter: Some(s.max_iter),
            well_cap: s.well_cap,
            precondition: Some(s.precondition),
            init: None,
            init_file: None,
        }),
        io: Some(IoConfig {
            out: Some(resolved.out_dir.display().to_string()),
            formats: Some(resolved.formats.iter().cloned().collect()),
            seed: Some(resolved.seed),
            repro: Some(resolved.repro),
            jobs: Some(resolved.jobs),
        }),
        evolve,
        sweep,
        stability,
        wp,
    };
    serde_json::to_value(file).expect("config serializes")
}

pub fn dispatch(command: Command) -> Result<bool, CmdError> {
    match command {
        Command::Constants { common, instance } => run_constants(&common, &instance),
        Command::Wp {
            common,
            p,
            r_max,
            tol,
        } => run_wp(&common, p, r_max, tol),
        Command::Groundstate {
            common,
            instance,
            grid,
            solver,
        } => run_groundstate(&common, &instance, &grid, &solver),
        Command::Sweep {
            common,
            instance,
            grid,
            solver,
            masses,
            mass_count,
        } => run_sweep(&common, &instance, &grid, &solver, masses, mass_count),
        Command::Evolve {
            common,
            instance,
            grid,
            solver,
            t_final,
            dt,
            psi0,
            sample_every,
        } => run_evolve(
            &common,
            &instance,
            &grid,
            &solver,
            t_final,
            dt,
            psi0,
            sample_every,
        ),
        Command::Stability {
            common,
            instance,
            grid,
            solver,
            eps,
            trials,
            t_final,
            dt,
        } => run_stability(&common, &instance, &grid, &solver, eps, trials, t_final, dt),
        Command::Report { manifest } => run_report(&manifest),
    }
}

fn claim(name: impl Into<String>, passed: bool, observed: f64) -> ClaimRow {
    ClaimRow {
        name: name.into(),
        passed,
        observed,
        bound_lo: None,
        bound_hi: None,
    }
}

fn claim_below(name: impl Into<String>, observed: f64, hi: f64) -> ClaimRow {
    ClaimRow {
        name: name.into(),
        passed: observed < hi,
        observed,
        bound_lo: None,
        bound_hi: Some(hi),
    }
}

fn run_constants(common: &CommonArgs, instance: &InstanceArgs) -> Result<bool, CmdError> {
    let resolved = resolve_common(common, "constants")?;
    let params = resolve_instance(instance, &resolved.file)?;
    dgpe_core::params::check_exponent(params.p)?;
    let c_p = gn_constant_cached(params.p)?;
    let c4 = quartic_constant()?;
    let regime = validate_regime(&params, c_p, c4);
    let geom = derive_geometry_cached(&params)?;
    let aux = aux_structure_check(&params, &geom);

    let mut claims: Vec<ClaimRow> = regime
        .conditions
        .iter()
        .map(|c| claim(format!("regime: {}", c.name), c.ok, if c.ok { 1.0 } else { 0.0 }))
        .collect();
    let scalar = params.is_scalar();
    if !scalar && params.c <= geom.c_star {
        let chain = [
            ("0 < t_bar_c", 0.0, geom.t_bar_c),
            ("t_bar_c < R0", geom.t_bar_c, geom.r0),
            (
                "R0 < (c/c*) t_c*",
                geom.r0,
                params.c / geom.c_star * geom.t_cstar,
            ),
            (
                "(c/c*) t_c* < t_c*",
                params.c / geom.c_star * geom.t_cstar,
                geom.t_cstar,
            ),
            ("t_c* < t_c", geom.t_cstar, geom.t_c),
            ("t_c < R1", geom.t_c, geom.r1),
        ];
        for (name, lo, hi) in chain {
            claims.push(claim(format!("ordering: {name}"), lo < hi, hi - lo));
        }
        claims.push(claim("c* < c^*", geom.c_star < geom.c_upper, geom.c_upper - geom.c_star));
        let scale = geom.r0 * geom.r0;
        claims.push(claim_below(
            "h_c(R0) = 0",
            h_c(geom.r0, &params, &geom).abs() / scale,
            1e-9,
        ));
        claims.push(claim_below(
            "h_c(R1) = 0",
            h_c(geom.r1, &params, &geom).abs() / (geom.r1 * geom.r1),
            1e-9,
        ));
    }
    claims.push(claim(
        "h_c critical-point structure",
        aux.pass,
        aux.critical_points as f64,
    ));

    let mut writer = ArtifactWriter::new(&resolved.out_dir)?;
    if resolved.formats.contains("json") {
        let record = serde_json::json!({
            "instance": InstanceConfig::from_params(&params),
            "geometry": geom,
            "regime": regime,
            "structure": aux,
        });
        writer.write_json("constants.json", &record)?;
    }
    let config = echo_config("constants", Some(&params), None, None, &resolved, None, None, None, None);
    let (manifest, _) = writer.finish("constants", config, claims)?;
    print!("{}", render_claims_table(&manifest));
    Ok(manifest.pass)
}

fn run_wp(
    common: &CommonArgs,
    p: Option<f64>,
    r_max: Option<f64>,
    tol: Option<f64>,
) -> Result<bool, CmdError> {
    let resolved = resolve_common(common, "wp")?;
    let fw = resolved.file.wp.clone().unwrap_or_default();
    let p = p.or(fw.p).unwrap_or(3.0);
    let tol = tol.or(fw.tol).unwrap_or(DEFAULT_RESIDUAL_TOL);
    let r_max_initial = r_max
        .or(fw.r_max)
        .unwrap_or((30.0f64 / (1.0 / dgpe_core::params::delta_p(p) - 1.0).sqrt()).max(15.0));
    let profile = solve_wp(p, r_max_initial, tol)?;
    let c_p = gn_constant(&profile, p);
    let residual = ode_residual_max(&profile, p);

    let claims = vec![
        claim_below("ode residual below tolerance", residual, tol),
        claim("profile strictly positive", profile.w.iter().all(|&w| w > 0.0), profile.w.iter().cloned().fold(f64::INFINITY, f64::min)),
        claim_below(
            "tail below truncation level",
            profile.w.last().copied().unwrap_or(0.0) / profile.peak(),
            1e-11,
        ),
        claim("gn constant finite", c_p.is_finite() && c_p > 0.0, c_p),
    ];

    let mut writer = ArtifactWriter::new(&resolved.out_dir)?;
    if resolved.formats.contains("csv") {
        let mut csv = String::from("r,w\n");
        for i in 0..profile.r.len() {
            csv.push_str(&format!("{},{}\n", fmt_f(profile.r[i]), fmt_f(profile.w[i])));
        }
        writer.write("wp_profile.csv", csv.as_bytes())?;
    }
    if resolved.formats.contains("json") {
        let summary = serde_json::json!({
            "p": p,
            "W0": profile.peak(),
            "mass_norm": profile.mass_norm(),
            "C_p": c_p,
            "r_max": profile.r_max,
            "residual": residual,
        });
        writer.write_json("wp_summary.json", &summary)?;
    }
    let config = echo_config(
        "wp",
        None,
        None,
        None,
        &resolved,
        None,
        None,
        None,
        Some(WpConfig {
            p: Some(p),
            r_max: Some(r_max_initial),
            tol: Some(tol),
        }),
    );
    let (manifest, _) = writer.finish("wp", config, claims)?;
    print!("{}", render_claims_table(&manifest));
    Ok(manifest.pass)
}

/// Shared minimization stage for groundstate/evolve/stability.
fn solve_ground_state(
    params: &ModelParams,
    grid: Grid3,
    solver: &SolverConfig,
    init: InitialGuess,
) -> Result<(GroundStateResult, WellGeometry), CmdError> {
    let geom = derive_geometry_cached(params)?;
    let result = minimize(params, grid, solver, init)?;
    Ok((result, geom))
}

fn ground_state_record(
    params: &ModelParams,
    grid: Grid3,
    result: &GroundStateResult,
    geom: &WellGeometry,
    claims: &[ClaimRow],
) -> serde_json::Value {
    serde_json::json!({
        "instance": InstanceConfig::from_params(params),
        "grid": { "n": grid.n()[0], "box_len": grid.box_len()[0] },
        "breakdown": result.breakdown,
        "mu": result.mu,
        "grad_l2": result.grad_l2,
        "residual_l2": result.residual_l2,
        "iterations": result.iterations,
        "converged": result.converged,
        "well_ok": result.well_ok,
        "init": result.init,
        "geometry": geom,
        "claims": claims,
    })
}

fn iteration_csv(result: &GroundStateResult) -> String {
    let mut csv = String::from("iteration,energy,p_value,mu,grad_norm\n");
    for row in &result.history {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            row.iteration,
            fmt_f(row.energy),
            fmt_f(row.p_value),
            fmt_f(row.mu),
            fmt_f(row.grad_norm)
        ));
    }
    csv
}

fn run_groundstate(
    common: &CommonArgs,
    instance: &InstanceArgs,
    grid_args: &GridArgs,
    solver_args: &SolverArgs,
) -> Result<bool, CmdError> {
    let resolved = resolve_common(common, "groundstate")?;
    let params = resolve_instance(instance, &resolved.file)?;
    let grid = resolve_grid(grid_args, &resolved.file, &params)?;
    let solver = resolve_solver(solver_args, &resolved.file);
    let init = resolve_init(solver_args, &resolved.file, resolved.seed)?;
    let (result, geom) = solve_ground_state(&params, grid, &solver, init)?;

    let report = verify_claims(&result, &geom, &params);
    let claims: Vec<ClaimRow> = report
        .claims
        .iter()
        .map(|c| ClaimRow {
            name: c.name.clone(),
            passed: c.passed,
            observed: c.observed,
            bound_lo: c.bound_lo.is_finite().then_some(c.bound_lo),
            bound_hi: c.bound_hi.is_finite().then_some(c.bound_hi),
        })
        .collect();

    let mut writer = ArtifactWriter::new(&resolved.out_dir)?;
    if resolved.formats.contains("bin") {
        let mut bytes = Vec::new();
        write_field(&mut bytes, &result.field)?;
        writer.write("field.bin", &bytes)?;
    }
    if resolved.formats.contains("csv") {
        writer.write("iterations.csv", iteration_csv(&result).as_bytes())?;
    }
    if resolved.formats.contains("json") {
        let record = ground_state_record(&params, grid, &result, &geom, &claims);
        writer.write_json("result.json", &record)?;
    }
    let config = echo_config(
        "groundstate",
        Some(&params),
        Some(grid),
        Some(&solver),
        &resolved,
        None,
        None,
        None,
        None,
    );
    let (manifest, _) = writer.finish("groundstate", config, claims)?;
    print!("{}", render_claims_table(&manifest));
    Ok(manifest.pass)
}

fn run_sweep(
    common: &CommonArgs,
    instance: &InstanceArgs,
    grid_args: &GridArgs,
    solver_args: &SolverArgs,
    masses: Option<Vec<f64>>,
    mass_count: Option<usize>,
) -> Result<bool, CmdError> {
    let resolved = resolve_common(common, "sweep")?;
    let template = {
        // the sweep template needs no mass of its own; default to the
        // threshold scale when none is given
        let mut args = instance.clone();
        if args.mass.is_none() && args.mass_frac.is_none() {
            args.mass_frac = Some(0.5);
        }
        resolve_instance(&args, &resolved.file)?
    };
    let fs = resolved.file.sweep.clone().unwrap_or_default();
    let c_list = match masses.or(fs.masses) {
        Some(list) if !list.is_empty() => list,
        _ => {
            let count = mass_count.or(fs.count).unwrap_or(4);
            let geom = derive_geometry_cached(&template)?;
            let top = if geom.c_star.is_finite() {
                0.5 * geom.c_star
            } else {
                template.c
            };
            (0..count).map(|k| top / 2f64.powi(k as i32)).collect()
        }
    };

    // the rescaled solves all live on the limit-profile scale
    let grid = {
        let fg = resolved.file.grid.clone().unwrap_or_default();
        let n = grid_args.n.or(fg.n).unwrap_or(64);
        let box_len = match grid_args.box_len.or(fg.box_len) {
            Some(b) => b,
            None => {
                let entry = dgpe_core::wp::oracle(template.p)?;
                3.9 * entry.profile.mass_radius(0.9999)
            }
        };
        Grid3::cubic(n, box_len)?
    };
    let solver = resolve_solver(solver_args, &resolved.file);
    let records = asymptotic_sweep(&template, &c_list, grid, &solver, resolved.jobs)?;
    let targets = sweep_targets(&template)?;
    let fits = fit_sweep(&records, &targets);

    let mut claims: Vec<ClaimRow> = records
        .iter()
        .map(|r| claim(format!("entry converged (c = {:.6e})", r.c), r.converged, if r.converged { 1.0 } else { 0.0 }))
        .collect();
    if records.iter().all(|r| r.converged) {
        let last = records.last().expect("nonempty sweep");
        claims.push(claim_below(
            "energy ratio at smallest mass within 5% of the limit",
            ((last.energy_ratio - targets.energy) / targets.energy).abs(),
            0.05,
        ));
        claims.push(claim_below(
            "profile distance at smallest mass below 5%",
            last.h1_dist_to_wp,
            0.05,
        ));
        claims.push(claim(
            "profile distance decreasing along the sweep",
            fits.h1_decreasing,
            if fits.h1_decreasing { 1.0 } else { 0.0 },
        ));
        if template.is_scalar() {
            claims.push(claim_below(
                "pairing ratio vanishes in the scalar case",
                records.iter().map(|r| r.b_ratio).fold(0.0, f64::max),
                1e-10,
            ));
        } else {
            claims.push(ClaimRow {
                name: "pairing-ratio slope within 20% of the predicted rate".into(),
                passed: (fits.b_slope - targets.b_slope).abs() <= 0.2 * targets.b_slope,
                observed: fits.b_slope,
                bound_lo: Some(0.8 * targets.b_slope),
                bound_hi: Some(1.2 * targets.b_slope),
            });
        }
    }

    let mut writer = ArtifactWriter::new(&resolved.out_dir)?;
    if resolved.formats.contains("csv") {
        let mut csv = String::from(
            "c,eps,converged,energy_ratio,mu_ratio,b_ratio,grad_ratio,lp_ratio,h1_dist_to_wp\n",
        );
        for r in &records {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                fmt_f(r.c),
                fmt_f(r.eps),
                r.converged,
                fmt_f(r.energy_ratio),
                fmt_f(r.mu_ratio),
                fmt_f(r.b_ratio),
                fmt_f(r.grad_ratio),
                fmt_f(r.lp_ratio),
                fmt_f(r.h1_dist_to_wp)
            ));
        }
        writer.write("sweep.csv", csv.as_bytes())?;
    }
    if resolved.formats.contains("json") {
        let summary = serde_json::json!({
            "template": InstanceConfig::from_params(&template),
            "records": records,
            "targets": targets,
            "fits": fits,
        });
        writer.write_json("sweep_summary.json", &summary)?;
    }
    let config = echo_config(
        "sweep",
        Some(&template),
        Some(grid),
        Some(&solver),
        &resolved,
        None,
        Some(SweepConfig {
            masses: Some(c_list),
            count: None,
        }),
        None,
        None,
    );
    let (manifest, _) = writer.finish("sweep", config, claims)?;
    print!("{}", render_claims_table(&manifest));
    Ok(manifest.pass)
}

#[allow(clippy::too_many_arguments)]
fn run_evolve(
    common: &CommonArgs,
    instance: &InstanceArgs,
    grid_args: &GridArgs,
    solver_args: &SolverArgs,
    t_final: Option<f64>,
    dt: Option<f64>,
    psi0: Option<PathBuf>,
    sample_every: Option<usize>,
) -> Result<bool, CmdError> {
    let resolved = resolve_common(common, "evolve")?;
    let params = resolve_instance(instance, &resolved.file)?;
    let fe = resolved.file.evolve.clone().unwrap_or_default();
    let t_final = t_final.or(fe.t_final).unwrap_or(10.0);
    let sample_every = sample_every.or(fe.sample_every).unwrap_or(50);
    let psi0_path = psi0.or(fe.psi0.as_ref().map(PathBuf::from));

    // initial state: a snapshot, or a freshly minimized ground state (which
    // then also serves as the distance reference)
    let solver = resolve_solver(solver_args, &resolved.file);
    let (initial, reference, grid, geom) = match &psi0_path {
        Some(path) => {
            let field = read_snapshot(path)?;
            let grid = field.grid();
            let geom = derive_geometry_cached(&params)?;
            (field, None, grid, geom)
        }
        None => {
            let grid = resolve_grid(grid_args, &resolved.file, &params)?;
            let init = resolve_init(solver_args, &resolved.file, resolved.seed)?;
            let (result, geom) = solve_ground_state(&params, grid, &solver, init)?;
            (result.field.clone(), Some(result), grid, geom)
        }
    };
    let mut fft = Fft3::new(grid);
    let dt = match dt.or(fe.dt) {
        Some(v) => v,
        None => {
            let mu = multiplier_estimate(&mut fft, &initial, &params)?;
            0.01 / (1.0 + mu.abs())
        }
    };
    let cap = if geom.t_cstar.is_finite() {
        10.0 * geom.t_cstar
    } else {
        f64::INFINITY
    };
    let opts = EvolveOptions {
        sample_every,
        reference: reference.as_ref().map(|r| &r.field),
        blowup_cap: cap,
    };
    let stats = splitstep_evolve(&mut fft, &initial, t_final, dt, &params, &opts)?;

    let mut claims = vec![claim_below(
        "mass conserved to roundoff",
        stats.mass_drift,
        1e-12,
    )];
    if reference.is_some() {
        let worst = stats.overlap.iter().cloned().fold(1.0f64, f64::min);
        claims.push(ClaimRow {
            name: "standing-wave overlap".into(),
            passed: worst > 1.0 - 1e-4,
            observed: worst,
            bound_lo: Some(1.0 - 1e-4),
            bound_hi: None,
        });
    }

    let mut writer = ArtifactWriter::new(&resolved.out_dir)?;
    if resolved.formats.contains("csv") {
        let mut csv = String::from("t,mass,energy,h1_dist,overlap\n");
        for i in 0..stats.times.len() {
            let dist = stats.h1_dist.get(i).copied().unwrap_or(f64::NAN);
            let ovl = stats.overlap.get(i).copied().unwrap_or(f64::NAN);
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt_f(stats.times[i]),
                fmt_f(stats.mass[i]),
                fmt_f(stats.energy[i]),
                fmt_f(dist),
                fmt_f(ovl)
            ));
        }
        writer.write("evolution.csv", csv.as_bytes())?;
    }
    if resolved.formats.contains("bin") {
        if let Some(r) = &reference {
            let mut bytes = Vec::new();
            write_field(&mut bytes, &r.field)?;
            writer.write("reference.bin", &bytes)?;
        }
    }
    if resolved.formats.contains("json") {
        let summary = serde_json::json!({
            "instance": InstanceConfig::from_params(&params),
            "t_final": t_final,
            "dt": dt,
            "mass_drift": stats.mass_drift,
            "energy_drift": stats.energy_drift,
            "samples": stats.times.len(),
        });
        writer.write_json("evolve_summary.json", &summary)?;
    }
    let config = echo_config(
        "evolve",
        Some(&params),
        Some(grid),
        Some(&solver),
        &resolved,
        Some(EvolveConfig {
            t_final: Some(t_final),
            dt: Some(dt),
            psi0: psi0_path.map(|p| p.display().to_string()),
            sample_every: Some(sample_every),
        }),
        None,
        None,
        None,
    );
    let (manifest, _) = writer.finish("evolve", config, claims)?;
    print!("{}", render_claims_table(&manifest));
    Ok(manifest.pass)
}

#[allow(clippy::too_many_arguments)]
fn run_stability(
    common: &CommonArgs,
    instance: &InstanceArgs,
    grid_args: &GridArgs,
    solver_args: &SolverArgs,
    eps: Option<Vec<f64>>,
    trials: Option<usize>,
    t_final: Option<f64>,
    dt: Option<f64>,
) -> Result<bool, CmdError> {
    let resolved = resolve_common(common, "stability")?;
    let params = resolve_instance(instance, &resolved.file)?;
    let grid = resolve_grid(grid_args, &resolved.file, &params)?;
    let solver = resolve_solver(solver_args, &resolved.file);
    let init = resolve_init(solver_args, &resolved.file, resolved.seed)?;
    let fs = resolved.file.stability.clone().unwrap_or_default();
    let eps_list = eps.or(fs.eps).unwrap_or_else(|| vec![0.04]);
    let trials = trials.or(fs.trials).unwrap_or(2);
    let t_final = t_final.or(fs.t_final).unwrap_or(20.0);

    let (result, _) = solve_ground_state(&params, grid, &solver, init)?;
    let dt = match dt.or(fs.dt) {
        Some(v) => v,
        None => 0.01 / (1.0 + result.mu.abs()),
    };
    let report = stability_probe(
        &result,
        &eps_list,
        t_final,
        dt,
        &params,
        trials,
        resolved.seed,
        resolved.jobs,
    )?;

    let claims: Vec<ClaimRow> = report
        .trials
        .iter()
        .map(|t| ClaimRow {
            name: format!("excursion within bound (eps = {}, trial {})", t.eps, t.trial),
            passed: t.passed,
            observed: t.max_excursion,
            bound_lo: None,
            bound_hi: Some(if t.eps > 0.0 { t.eps } else { 1e-3 }),
        })
        .collect();

    let mut writer = ArtifactWriter::new(&resolved.out_dir)?;
    if resolved.formats.contains("csv") {
        let mut csv = String::from("eps,delta,trial,max_excursion,passed\n");
        for t in &report.trials {
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt_f(t.eps),
                fmt_f(t.delta),
                t.trial,
                fmt_f(t.max_excursion),
                t.passed
            ));
        }
        writer.write("stability.csv", csv.as_bytes())?;
    }
    if resolved.formats.contains("json") {
        let summary = serde_json::json!({
            "instance": InstanceConfig::from_params(&params),
            "t_final": t_final,
            "dt": dt,
            "trials": report.trials,
            "all_pass": report.all_pass,
        });
        writer.write_json("stability_summary.json", &summary)?;
    }
    let config = echo_config(
        "stability",
        Some(&params),
        Some(grid),
        Some(&solver),
        &resolved,
        None,
        None,
        Some(StabilityConfig {
            eps: Some(eps_list),
            trials: Some(trials),
            t_final: Some(t_final),
            dt: Some(dt),
        }),
        None,
    );
    let (manifest, _) = writer.finish("stability", config, claims)?;
    print!("{}", render_claims_table(&manifest));
    Ok(manifest.pass)
}

fn run_report(path: &Path) -> Result<bool, CmdError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CmdError::io(format!("cannot read manifest {}: {e}", path.display())))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| CmdError::validation(format!("manifest parse error: {e}")))?;
    print!("{}", render_claims_table(&manifest));
    Ok(manifest.pass)
}
