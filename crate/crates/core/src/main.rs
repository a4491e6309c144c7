use clap::{Args, Parser, Subcommand};
use penalized_mhd::config::{limit_equation, load_config, parse_config, parse_override, Config};
use penalized_mhd::diagnostics::{self, weak_residual, Equation, SweepRow, TestFunctionFamily};
use penalized_mhd::manufactured::{convergence_study, Manufactured};
use penalized_mhd::output::{self, read_snapshot, snapshot_name, Snapshot};
use penalized_mhd::solver::{self, Dissipation, Setup, SolverStats, Trajectory};
use penalized_mhd::verify::{operator_suite, OperatorSuite};
use penalized_mhd::Error;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const DIV_TOL: f64 = 1e-12;
const ENERGY_TOL: f64 = 1e-3;
const MASS_TOL: f64 = 1e-12;
const IDENTITY_TOL: f64 = 1e-13;
const MIN_ORDER: f64 = 1.8;

#[derive(Parser)]
#[command(name = "penalized-mhd", version, about = "Penalized compressible MHD on a flat torus")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Single simulation: diagnostics.csv, snapshots, report.txt.
    Run(Common),
    /// ε-sweep: sweep.csv, sweep.json, report.txt.
    Sweep(Common),
    /// Randomized operator identities and Gaffney ratios.
    VerifyOperators(Common),
    /// Manufactured-solution convergence orders.
    VerifyConvergence(Common),
    /// Weak-form residuals of a stored or freshly computed trajectory.
    Certify(CertifyArgs),
}

#[derive(Args)]
struct Common {
    /// Configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// `key=value` overrides applied after the file.
    overrides: Vec<String>,
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    common: Common,
    /// Directory of `snapshot_*.bin` files; without it the config is run.
    #[arg(long)]
    snapshots: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

type Outcome = Result<(), Failure>;

fn overrides(list: &[String]) -> Result<Vec<(String, String)>, Failure> {
    Ok(list.iter().map(|s| parse_override(s)).collect::<Result<_, _>>()?)
}

/// `--config` is required unless `fallback` supplies a scenario.
fn config(c: &Common, fallback: Option<&str>) -> Result<Config, Failure> {
    let ov = overrides(&c.overrides)?;
    match (&c.config, fallback) {
        (Some(p), _) => Ok(load_config(p, &ov)?),
        (None, Some(text)) => Ok(parse_config(text, &ov)?),
        (None, None) => Err(Failure::Usage("--config is required for this verb".into())),
    }
}

fn out_dir(c: &Common) -> Result<&Path, Failure> {
    std::fs::create_dir_all(&c.out).map_err(|e| Failure::Usage(format!("{}: {e}", c.out.display())))?;
    Ok(&c.out)
}

fn finish(out: &Path, echo: &[String], lines: &[String], failures: Vec<String>) -> Outcome {
    let mut lines = lines.to_vec();
    for f in &failures {
        lines.push(format!("FAILED: {f}"));
    }
    for l in &lines {
        println!("{l}");
    }
    output::write_report(&out.join("report.txt"), echo, &lines)?;
    match failures.first() {
        Some(f) => Err(Failure::Numerical(f.clone())),
        None => Ok(()),
    }
}

fn run(c: &Common) -> Outcome {
    let cfg = config(c, None)?;
    let out = out_dir(c)?;
    let echo = cfg.echo();
    let traj = solver::run(&cfg.run)?;
    output::write_diagnostics_csv(&out.join("diagnostics.csv"), &echo, &traj.records)?;
    let (n, l) = (cfg.run.cells, cfg.run.half_len);
    let mut written = Vec::new();
    for s in std::iter::once(&traj.initial).chain(&traj.snapshots).chain(std::iter::once(&traj.final_state)) {
        let name = snapshot_name(s.t);
        if !written.contains(&name) {
            output::write_snapshot(&out.join(&name), &echo, n, l, s)?;
            written.push(name);
        }
    }
    let m0 = traj.records[0].mass;
    let div = traj.records.iter().map(|r| r.div_mu_h).fold(0.0, f64::max);
    let budget = diagnostics::energy_budget(&traj.records);
    let drift = traj.records.iter().map(|r| ((r.mass - m0) / m0).abs()).fold(0.0, f64::max);
    let lines = vec![
        format!("steps = {}", traj.steps),
        format!("t_final = {}", traj.final_state.t),
        format!("max_div_mu_h = {div:e}"),
        format!("energy_residual = {budget:e}"),
        format!("mass_drift = {drift:e}"),
        format!("viscous_iterations = {}", traj.stats.viscous_iterations),
        format!("resistive_iterations = {}", traj.stats.resistive_iterations),
        format!("snapshots = {}", written.join(", ")),
    ];
    let mut failures = Vec::new();
    if !(div <= DIV_TOL) {
        failures.push(format!("div(mu H) constraint: {div:e} > {DIV_TOL:e}"));
    }
    if !(budget <= ENERGY_TOL) {
        failures.push(format!("energy inequality: residual {budget:e} > {ENERGY_TOL:e}"));
    }
    if !(drift <= MASS_TOL) {
        failures.push(format!("mass conservation: drift {drift:e} > {MASS_TOL:e}"));
    }
    finish(out, &echo, &lines, failures)
}

fn rate(r: Option<f64>) -> String {
    r.map_or("n/a".into(), |v| format!("{v:.4}"))
}

fn sweep(c: &Common) -> Outcome {
    let cfg = config(c, None)?;
    let out = out_dir(c)?;
    let echo = cfg.echo();
    let table = diagnostics::sweep_table(&cfg.run, &cfg.epsilon_list, &cfg.weak)?;
    output::write_sweep_csv(&out.join("sweep.csv"), &echo, &table)?;
    output::write_sweep_json(&out.join("sweep.json"), &echo, &table)?;
    let r = &table.rates;
    let mut lines = vec![
        format!("slope_u_solid_time = {}", rate(r.u_solid_time)),
        format!("slope_h_ext = {}", rate(r.h_ext)),
        format!("slope_curl_h_ext = {}", rate(r.curl_h_ext)),
        format!("slope_h_dot_n = {}", rate(r.h_dot_n)),
        format!("h_ext_strictly_decreasing = {}", table.strictly_decreasing(|r| r.h_ext)),
        format!("h_dot_n_strictly_decreasing = {}", table.strictly_decreasing(|r| r.trace.h_dot_n)),
    ];
    for (k, eq) in cfg.weak.iter().enumerate() {
        let dec = table.strictly_decreasing(|r: &SweepRow| r.weak.get(k).map_or(f64::NAN, |w| w.1));
        lines.push(format!("weak_{}_strictly_decreasing = {dec}", eq.name()));
    }
    let failures = table
        .rows
        .iter()
        .filter_map(|r| r.error.as_ref().map(|e| format!("epsilon = {}: {e}", r.epsilon)))
        .collect();
    finish(out, &echo, &lines, failures)
}

fn verify_operators(c: &Common) -> Outcome {
    let cfg = config(c, Some("scenario = none"))?;
    let out = out_dir(c)?;
    let suite = OperatorSuite {
        seed: cfg.seed,
        ..OperatorSuite::default()
    };
    let r = operator_suite(&suite)?;
    let mut failures = Vec::new();
    if !(r.identity_max() <= IDENTITY_TOL) {
        failures.push(format!("operator identities: defect {:e} > {IDENTITY_TOL:e}", r.identity_max()));
    }
    if !r.gaffney_finite {
        failures.push("Gaffney ratio: non-finite value".into());
    }
    finish(out, &cfg.echo(), &r.lines(), failures)
}

fn verify_convergence(c: &Common) -> Outcome {
    let cfg = config(c, Some("scenario = none"))?;
    let out = out_dir(c)?;
    let rep = convergence_study(&Manufactured::default(), &cfg.mms_cells, cfg.mms_t)?;
    let mut lines = Vec::new();
    for l in &rep.levels {
        lines.push(format!(
            "n = {}: steps {} errors rho {:e} m {:e} B {:e} weak continuity {:e} renormalized {:e} momentum {:e} induction {:e}",
            l.cells, l.steps, l.errors[0], l.errors[1], l.errors[2], l.weak[0], l.weak[1], l.weak[2], l.weak[3]
        ));
    }
    let mut failures = Vec::new();
    for (k, (o, w)) in rep.orders.iter().zip(&rep.weak_orders).enumerate() {
        let (a, b) = (rep.levels[k].cells, rep.levels[k + 1].cells);
        lines.push(format!("order {a}->{b}: rho {:.3} m {:.3} B {:.3}", o[0], o[1], o[2]));
        lines.push(format!("weak order {a}->{b}: continuity {:.3} renormalized {:.3} momentum {:.3} induction {:.3}", w[0], w[1], w[2], w[3]));
    }
    if let (Some(o), Some(w)) = (rep.orders.last(), rep.weak_orders.last()) {
        if o.iter().chain(w).any(|v| !(*v >= MIN_ORDER)) {
            failures.push(format!("convergence order below {MIN_ORDER} on the finest pair"));
        }
    }
    finish(out, &cfg.echo(), &lines, failures)
}

fn family_name(f: TestFunctionFamily) -> &'static str {
    match f {
        TestFunctionFamily::TorusTrig => "TORUS_TRIG",
        TestFunctionFamily::FluidBump => "FLUID_BUMP",
        TestFunctionFamily::CurlFreeExt => "CURL_FREE_EXT",
        TestFunctionFamily::Closure => "CLOSURE",
    }
}

fn load_trajectory(dir: &Path, c: &Common) -> Result<(Config, Trajectory), Failure> {
    let entries = std::fs::read_dir(dir).map_err(|e| Failure::Usage(format!("{}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("snapshot_") && n.ends_with(".bin"))
        })
        .collect();
    paths.sort();
    let mut snaps: Vec<Snapshot> = paths.iter().map(|p| read_snapshot(p)).collect::<Result<_, _>>()?;
    if snaps.len() < 2 {
        return Err(Failure::Usage(format!("{}: need at least two snapshots", dir.display())));
    }
    snaps.sort_by(|a, b| a.state.t.total_cmp(&b.state.t));
    let cfg = parse_config(&snaps[0].echo.join("\n"), &overrides(&c.overrides)?)?;
    if snaps.iter().any(|s| s.cells != cfg.run.cells || s.echo != snaps[0].echo) {
        return Err(Failure::Usage("snapshots come from different runs".into()));
    }
    let setup = Setup::new(&cfg.run)?;
    let states: Vec<_> = snaps.into_iter().map(|s| s.state).collect();
    let traj = Trajectory {
        setup,
        config: cfg.run.clone(),
        records: Vec::new(),
        initial: states[0].clone(),
        final_state: states[states.len() - 1].clone(),
        snapshots: states,
        dissipation: Dissipation::default(),
        steps: 0,
        stats: SolverStats::default(),
    };
    Ok((cfg, traj))
}

fn certify(a: &CertifyArgs) -> Outcome {
    let c = &a.common;
    let (cfg, traj) = match &a.snapshots {
        Some(dir) => load_trajectory(dir, c)?,
        None => {
            let mut cfg = config(c, None)?;
            cfg.run.snapshot_every_step = true;
            let traj = solver::run(&cfg.run)?;
            (cfg, traj)
        }
    };
    let out = out_dir(c)?;
    let mut eqs = vec![Equation::Continuity, Equation::Renormalized, Equation::Momentum, Equation::Induction];
    eqs.extend(limit_equation(cfg.run.scenario.tag));
    let families = [
        TestFunctionFamily::TorusTrig,
        TestFunctionFamily::FluidBump,
        TestFunctionFamily::CurlFreeExt,
        TestFunctionFamily::Closure,
    ];
    let mut lines = vec![format!("snapshots = {}", traj.snapshots.len())];
    let mut failures = Vec::new();
    for eq in eqs {
        for fam in families.into_iter().filter(|f| eq.accepts(*f)) {
            let r = match weak_residual(&traj, fam, eq, None) {
                Err(Error::InvalidArgument(why)) => {
                    lines.push(format!("{} {} = n/a ({why})", eq.name(), family_name(fam)));
                    continue;
                }
                r => r?,
            };
            lines.push(format!("{} {} = {r:e}", eq.name(), family_name(fam)));
            if !r.is_finite() {
                failures.push(format!("weak residual {} is not finite", eq.name()));
            }
        }
    }
    finish(out, &cfg.echo(), &lines, failures)
}

/// Parses `args` (program name first) and runs the verb.
fn execute<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return Ok(());
        }
        Err(e) => return Err(Failure::Usage(e.render().to_string())),
    };
    match &cli.verb {
        Verb::Run(c) => run(c),
        Verb::Sweep(c) => sweep(c),
        Verb::VerifyOperators(c) => verify_operators(c),
        Verb::VerifyConvergence(c) => verify_convergence(c),
        Verb::Certify(a) => certify(a),
    }
}

fn main() -> ExitCode {
    match execute(std::env::args_os()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {}", m.trim_start_matches("error: ").trim_end());
            ExitCode::from(1)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("numerical failure: {m}");
            ExitCode::from(2)
        }
    }
}
