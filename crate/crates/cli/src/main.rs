use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chiral_feedback::analysis::{
    build_matrix_a, concurrence, effective_params, entanglement_metrics, equilibrium_ratio, DeathTime,
    DEFAULT_DEATH_EPS,
};
use chiral_feedback::config_file::{load_config, RunConfig};
use chiral_feedback::sweep::{
    run_preset, run_sweep, sample_times, solve, write_tables, Axis, Cell, Format, Horizon, Metric, NamedTable,
    PlotHint, PresetId, PresetOptions, SweepSpec, Table,
};
use chiral_feedback::{compare, integrate_kspace, AmplitudePair, ConfigError, Error, OracleSettings, TrajectoryF64};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "chiralfb", version, about = "Two chirally coupled emitters in front of a mirror")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration and write the sampled trajectory.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        output: OutputArgs,
        /// Sampling interval of the written trajectory.
        #[arg(long, default_value_t = 0.01)]
        sample_dt: f64,
    },
    /// Sweep one or two parameters around a base configuration.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        output: OutputArgs,
        /// `param:min:max:count[:log]` or `param=v1,v2,...`; at most twice.
        #[arg(long = "axis", required = true)]
        axes: Vec<String>,
        /// Comma-separated metrics: c_max, tau_peak, t_death, trajectory.
        #[arg(long, value_delimiter = ',', default_value = "c_max,tau_peak,t_death")]
        metrics: Vec<String>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Regenerate a figure panel (fig2a ... fig4d, or `all`).
    Preset {
        id: String,
        #[command(flatten)]
        output: OutputArgs,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long)]
        threads: Option<usize>,
        /// Mirror delay for fig2b (default: the mirrorless peak time).
        #[arg(long)]
        feedback_delay: Option<f64>,
    },
    /// Compare the delay equations with a direct field-mode integration.
    OracleCheck {
        #[command(flatten)]
        run: RunArgs,
        /// Write the comparison table to this directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "csv")]
        format: Vec<String>,
        /// Half-width of the mode band, in units of the total decay rate.
        #[arg(long)]
        bandwidth: Option<f64>,
        /// Number of field modes per channel (odd).
        #[arg(long)]
        modes: Option<usize>,
        /// Maximum amplitude deviation accepted.
        #[arg(long, default_value_t = 1e-2)]
        tolerance: f64,
    },
    /// Print the coefficient matrix, effective rates and trajectory metrics.
    Analyze {
        #[command(flatten)]
        run: RunArgs,
        /// Death threshold for the concurrence.
        #[arg(long, default_value_t = DEFAULT_DEATH_EPS)]
        eps: f64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Integration horizon; overrides the file.
    #[arg(long)]
    horizon: Option<f64>,
    /// Solver step; overrides the file.
    #[arg(long)]
    step: Option<f64>,
}

#[derive(Args)]
struct OutputArgs {
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Comma-separated output formats: csv, json, svg.
    #[arg(long, value_delimiter = ',', default_value = "csv")]
    format: Vec<String>,
}

const DEFAULT_HORIZON: f64 = 40.0;

struct Loaded {
    run: RunConfig,
    horizon: f64,
    step: Option<f64>,
}

fn load(args: &RunArgs, default_horizon: f64) -> Result<Loaded, Error> {
    let run = load_config(&args.config)?;
    let horizon = args.horizon.or(run.horizon).unwrap_or(default_horizon);
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(ConfigError::InvalidSettings(format!("horizon must be positive, got {horizon}")).into());
    }
    Ok(Loaded { run, horizon, step: args.step.or(run.step) })
}

fn formats(raw: &[String]) -> Result<Vec<Format>, Error> {
    Ok(raw.iter().map(|f| f.parse()).collect::<Result<Vec<Format>, _>>()?)
}

fn write(tables: &[NamedTable], dir: &Path, raw_formats: &[String]) -> Result<(), Error> {
    for path in write_tables(tables, dir, &formats(raw_formats)?)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn trajectory_table(traj: &TrajectoryF64, horizon: f64, dt: f64) -> Table {
    let mut table = Table::new(["t", "alpha_re", "alpha_im", "beta_re", "beta_im", "concurrence"])
        .with_plot(PlotHint::Lines { x: "t".into(), y: "concurrence".into(), series: vec![], log_x: false });
    for t in sample_times(horizon, dt) {
        let y = traj.at(t);
        table.push([t, y.alpha.re, y.alpha.im, y.beta.re, y.beta.im, concurrence(&y)].map(Cell::Num).to_vec());
    }
    table
}

fn death_text(d: DeathTime<f64>) -> String {
    match d {
        DeathTime::At(t) => format!("{t:.6}"),
        DeathTime::Undetermined => "undetermined (still entangled near the horizon)".into(),
    }
}

fn simulate(run: &RunArgs, output: &OutputArgs, sample_dt: f64) -> Result<(), Error> {
    if !(sample_dt > 0.0) {
        return Err(ConfigError::InvalidSettings(format!("sample interval must be positive, got {sample_dt}")).into());
    }
    let l = load(run, DEFAULT_HORIZON)?;
    let traj = solve(&l.run.system, l.horizon, l.step)?;
    let m = entanglement_metrics(&traj, &l.run.system, DEFAULT_DEATH_EPS);
    println!("c_max    {:.6}", m.c_max);
    println!("tau_peak {:.6}", m.tau_peak);
    println!("t_death  {}", death_text(m.t_death));
    let table = trajectory_table(&traj, l.horizon, sample_dt);
    write(&[NamedTable { name: "trajectory".into(), table }], &output.out, &output.format)
}

fn sweep(
    run: &RunArgs,
    output: &OutputArgs,
    axes: &[String],
    metrics: &[String],
    threads: Option<usize>,
) -> Result<(), Error> {
    let l = load(run, DEFAULT_HORIZON)?;
    let axes = axes.iter().map(|a| a.parse()).collect::<Result<Vec<Axis>, _>>()?;
    let metrics = metrics.iter().map(|m| m.parse()).collect::<Result<Vec<Metric>, _>>()?;
    let spec = SweepSpec::new(l.run.system, axes)
        .with_metrics(metrics)
        .with_horizon(Horizon::Fixed(l.horizon))
        .with_step(l.step)
        .with_threads(threads);
    let table = run_sweep(&spec)?;
    let failed = table.rows.iter().filter(|r| !matches!(r.last(), Some(Cell::Text(s)) if s == "ok")).count();
    if failed > 0 {
        eprintln!("{failed} sweep point(s) failed; see the status column");
    }
    write(&[NamedTable { name: "sweep".into(), table }], &output.out, &output.format)
}

fn preset(id: &str, output: &OutputArgs, opts: PresetOptions) -> Result<(), Error> {
    let ids: Vec<PresetId> = if id.eq_ignore_ascii_case("all") { PresetId::ALL.to_vec() } else { vec![id.parse()?] };
    let formats_checked = formats(&output.format)?;
    for id in ids {
        let tables = run_preset(id, &opts)?;
        for path in write_tables(&tables, &output.out, &formats_checked)? {
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn oracle_check(
    run: &RunArgs,
    out: Option<&Path>,
    format: &[String],
    resolution: (Option<f64>, Option<usize>),
    tolerance: f64,
) -> Result<bool, Error> {
    let l = load(run, 8.0)?;
    let cfg = l.run.system;
    let traj = solve(&cfg, l.horizon, l.step)?;
    let mut settings = OracleSettings::new(l.horizon);
    if resolution.0.is_some() || resolution.1.is_some() {
        settings = settings
            .with_resolution(resolution.0.unwrap_or(settings.bandwidth), resolution.1.unwrap_or(settings.n_modes));
    }
    let oracle = integrate_kspace(&cfg, &settings, AmplitudePair::first_excited())?;
    let report = compare(&traj, &oracle.trajectory)?;
    let drift = oracle.max_norm_drift();
    println!("modes      {} x {} channel(s), bandwidth {}", settings.n_modes, oracle.fields.len(), settings.bandwidth);
    println!("max |d alpha| {:.3e}", report.max_alpha);
    println!("max |d beta|  {:.3e}", report.max_beta);
    println!("worst at t = {:.4}", report.worst_time);
    println!("norm drift    {drift:.3e}");
    if let Some(dir) = out {
        let mut table = Table::new(["t", "alpha_dde", "beta_dde", "alpha_oracle", "beta_oracle"])
            .with_plot(PlotHint::Lines { x: "t".into(), y: "alpha_dde".into(), series: vec![], log_x: false });
        for t in sample_times(l.horizon, 0.01) {
            let (a, b) = (traj.at(t), oracle.trajectory.at(t));
            table.push([t, a.alpha.norm(), a.beta.norm(), b.alpha.norm(), b.beta.norm()].map(Cell::Num).to_vec());
        }
        write(&[NamedTable { name: "oracle_check".into(), table }], dir, format)?;
    }
    let ok = report.max() < tolerance && drift < 1e-4;
    println!("{}", if ok { "agreement within tolerance" } else { "DISAGREEMENT beyond tolerance" });
    Ok(ok)
}

fn analyze(run: &RunArgs, eps: f64) -> Result<(), Error> {
    if !(eps > 0.0) {
        return Err(ConfigError::InvalidSettings(format!("death threshold must be positive, got {eps}")).into());
    }
    let l = load(run, DEFAULT_HORIZON)?;
    let cfg = l.run.system;
    let a = build_matrix_a(&cfg);
    let g2 = cfg.gamma() * cfg.gamma();
    println!("variant        {}", cfg.variant);
    println!("chirality      {}", cfg.chirality());
    println!("A11            {:.6}", a.a11);
    println!("A12            {:.6}", a.a12);
    println!("A21            {:.6}", a.a21);
    println!("A22            {:.6}", a.a22);
    println!("|det A|/gamma^2 {:.6}", a.det().norm() / g2);
    let [slow, fast] = a.eigenvalues();
    println!("eigenvalues    {slow:.6}, {fast:.6}");
    match equilibrium_ratio(&a) {
        Ok(r) => println!("-A12/A11       {r:.6}"),
        Err(e) => println!("-A12/A11       undefined ({e})"),
    }
    let p = effective_params(&cfg);
    println!("g_eff          {:.6}", p.g_eff);
    println!("gamma_eff      {:.6}", p.gamma_eff);
    match p.ratio {
        Some(r) => println!("g_eff/gamma_eff {r:.6}"),
        None => println!("g_eff/gamma_eff undefined"),
    }
    let traj = solve(&cfg, l.horizon, l.step)?;
    let m = entanglement_metrics(&traj, &cfg, eps);
    println!("c_max          {:.6}", m.c_max);
    println!("tau_peak       {:.6}", m.tau_peak);
    println!("t_death        {}", death_text(m.t_death));
    println!("quasi_steady   {}", m.quasi_steady);
    let end = traj.at(l.horizon);
    if end.beta.norm() > 0.0 {
        println!("alpha/beta(T)  {:.6}", end.alpha / end.beta);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Simulate { run, output, sample_dt } => simulate(&run, &output, sample_dt).map(|_| true),
        Command::Sweep { run, output, axes, metrics, threads } => {
            sweep(&run, &output, &axes, &metrics, threads).map(|_| true)
        }
        Command::Preset { id, output, horizon, step, threads, feedback_delay } => {
            let opts = PresetOptions { horizon, step, threads, feedback_delay, ..PresetOptions::default() };
            preset(&id, &output, opts).map(|_| true)
        }
        Command::OracleCheck { run, out, format, bandwidth, modes, tolerance } => {
            oracle_check(&run, out.as_deref(), &format, (bandwidth, modes), tolerance)
        }
        Command::Analyze { run, eps } => analyze(&run, eps).map(|_| true),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
