//! `stockflow` command line: run models, calibrate the price law, compare
//! runs with reference data, summarize and plot CSV files.

pub mod compare;
pub mod svg;
pub mod table;

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use stockflow::calibrate::{
    calibrate_price_law, describe, per_day, summary_table, StatError, StatsRow,
};
use stockflow::modelfmt::{parse_model_named, parse_scenario_named};
use stockflow::oilmarket::price_warnings;
use stockflow::sdcore::{Category, DEFAULT_TIME_STEP};
use stockflow::{IntegratorKind, Model, ScenarioDoc, Simulation, TimeGrid, Trajectory};

use crate::table::{read_quarterly, read_table, write_csv, IndexKind};

#[derive(Debug, Parser)]
#[command(
    name = "stockflow",
    version,
    about = "Stock-and-flow simulation toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a model and write its trajectory as CSV.
    Run(RunArgs),
    /// Fit PCR = alpha1 * supply/demand + beta1 to quarterly data.
    Calibrate(CalibrateArgs),
    /// Compare a simulated column against reference data.
    Compare(CompareArgs),
    /// Descriptive statistics (Min, Max, Mean, Median, STD, Kurtosis, Skewness) of CSV columns.
    Stats(StatsArgs),
    /// Draw CSV columns as an SVG line chart.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Integrator {
    Euler,
    Rk4,
}

impl From<Integrator> for IntegratorKind {
    fn from(i: Integrator) -> Self {
        match i {
            Integrator::Euler => IntegratorKind::Euler,
            Integrator::Rk4 => IntegratorKind::Rk4,
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Model file (.sfm). Defaults to the scenario's `model` line.
    pub model: Option<PathBuf>,
    /// Scenario file (.sfs).
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "rk4")]
    pub integrator: Integrator,
    /// Internal step in days [default: scenario grid, else 0.0625].
    #[arg(long)]
    pub dt: Option<f64>,
    /// Length of the run in days [default: scenario grid, else 30].
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Data resolution in days; must be a multiple of the step [default: scenario grid, else 1].
    #[arg(long)]
    pub data_dt: Option<f64>,
    /// Variables to write besides the stocks (comma separated). Defaults to every flow, auxiliary and delay.
    #[arg(long, value_delimiter = ',')]
    pub record: Vec<String>,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// CSV with columns quarter,demand,supply,price.
    pub data: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// The reference is read as a step function: each value holds until the next
/// sample (nearest preceding), so weekend gaps in daily closes carry the last
/// close forward.
#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Trajectory CSV written by `run`.
    pub sim: PathBuf,
    /// Reference CSV: `date,price` or a numeric `t,<value>` table.
    pub reference: PathBuf,
    /// Simulated column [default: OilPrice if present, else the first data column].
    #[arg(long)]
    pub column: Option<String>,
    /// Reference column [default: the first data column].
    #[arg(long)]
    pub ref_column: Option<String>,
    /// Calendar date of simulation time 0, for dated references [default: first reference date].
    #[arg(long)]
    pub origin: Option<NaiveDate>,
    /// Report CSV (metric,value).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    pub input: PathBuf,
    /// Columns to summarize (comma separated) [default: all data columns].
    #[arg(long, value_delimiter = ',')]
    pub columns: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    pub input: PathBuf,
    /// Columns to draw (comma separated) [default: all data columns].
    #[arg(long, value_delimiter = ',')]
    pub columns: Vec<String>,
    #[arg(long)]
    pub title: Option<String>,
    /// Output SVG; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` and runs the command. Usage errors exit with 2, failures with 1.
pub fn main_from<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Run(a) => run(a),
        Command::Calibrate(a) => calibrate(a),
        Command::Compare(a) => compare_cmd(a),
        Command::Stats(a) => stats(a),
        Command::Plot(a) => plot(a),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn emit(out: Option<&Path>, text: &[u8]) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => io::stdout()
            .write_all(text)
            .context("cannot write to standard output"),
    }
}

fn load_model(path: &Path) -> Result<Model> {
    let text = read_text(path)?;
    parse_model_named(&text, &path.display().to_string()).map_err(|d| anyhow!("{d}"))
}

/// Model, scenario and grid for a `run`, with CLI flags taking precedence
/// over the scenario's grid line.
pub fn prepare_run(args: &RunArgs) -> Result<(Model, ScenarioDoc, TimeGrid)> {
    let doc = match &args.scenario {
        Some(path) => {
            let text = read_text(path)?;
            parse_scenario_named(&text, &path.display().to_string()).map_err(|d| anyhow!("{d}"))?
        }
        None => ScenarioDoc::new(),
    };
    let model_path = match (&args.model, &args.scenario, &doc.model) {
        (Some(p), _, _) => p.clone(),
        (None, Some(s), Some(m)) => s.parent().unwrap_or(Path::new(".")).join(m),
        _ => bail!("no model: pass a model file or a scenario with a `model` line"),
    };
    let model = load_model(&model_path)?;

    let g = &doc.grid;
    let grid = TimeGrid::new(
        g.t0.unwrap_or(0.0),
        args.horizon.or(g.horizon).unwrap_or(30.0),
        args.dt.or(g.dt_internal).unwrap_or(DEFAULT_TIME_STEP),
        args.data_dt.or(g.dt_data).unwrap_or(1.0),
    )?;
    Ok((model, doc, grid))
}

pub fn simulate_run(args: &RunArgs) -> Result<(Trajectory, Vec<String>)> {
    let (model, doc, grid) = prepare_run(args)?;
    let overlay = doc.compile(&model, &grid).map_err(|d| anyhow!("{d}"))?;
    let record: Vec<String> = if args.record.is_empty() {
        [Category::Flow, Category::Aux, Category::Delay]
            .into_iter()
            .flat_map(|c| model.names_of(c))
            .map(str::to_string)
            .collect()
    } else {
        args.record.clone()
    };
    let traj = Simulation::new(&model, grid)
        .integrator(args.integrator.into())
        .record(&record)
        .overlay(&overlay)
        .run()?;
    let mut columns: Vec<String> = model.stock_names().iter().map(|s| s.to_string()).collect();
    for name in record {
        if !columns.contains(&name) {
            columns.push(name);
        }
    }
    Ok((traj, columns))
}

fn run(args: &RunArgs) -> Result<()> {
    let (traj, names) = simulate_run(args)?;
    for w in price_warnings(&traj) {
        eprintln!("{w}");
    }
    let times: Vec<String> = traj.times().iter().map(f64::to_string).collect();
    let columns: Vec<(&str, &[f64])> = names
        .iter()
        .map(|n| (n.as_str(), traj.values(n).expect("recorded")))
        .collect();
    let mut buf = Vec::new();
    write_csv(&mut buf, "t", &times, &columns)?;
    emit(args.out.as_deref(), &buf)
}

fn cell(v: &std::result::Result<f64, StatError>) -> String {
    match v {
        Ok(v) => v.to_string(),
        Err(_) => "NA".to_string(),
    }
}

/// Table-I layout: one row per statistic, one column per series.
pub fn stats_block(rows: &[(&str, StatsRow)]) -> String {
    let mut s = String::from("statistic");
    for (name, _) in rows {
        s.push(',');
        s.push_str(name);
    }
    s.push('\n');
    type Cell = fn(&StatsRow) -> String;
    let lines: [(&str, Cell); 7] = [
        ("Min", |r| r.min.to_string()),
        ("Max", |r| r.max.to_string()),
        ("Mean", |r| r.mean.to_string()),
        ("Median", |r| r.median.to_string()),
        ("STD", |r| cell(&r.std)),
        ("Kurtosis", |r| cell(&r.kurtosis)),
        ("Skewness", |r| cell(&r.skewness)),
    ];
    for (label, f) in lines {
        s.push_str(label);
        for (_, row) in rows {
            s.push(',');
            s.push_str(&f(row));
        }
        s.push('\n');
    }
    s
}

fn calibrate(args: &CalibrateArgs) -> Result<()> {
    let data = read_quarterly(&args.data)?;
    let fit = calibrate_price_law(&data)?;
    let table = summary_table(&data)?;
    let (a_day, b_day) = per_day(&fit);
    let mut s = String::from("parameter,value\n");
    for (k, v) in [
        ("alpha1", fit.alpha1()),
        ("beta1", fit.beta1()),
        ("r_squared", fit.r_squared),
        ("residual_std", fit.residual_std),
        ("samples", fit.samples as f64),
        ("alpha1_per_day", a_day),
        ("beta1_per_day", b_day),
    ] {
        s.push_str(&format!("{k},{v}\n"));
    }
    s.push('\n');
    s.push_str(&stats_block(&table));
    emit(args.out.as_deref(), s.as_bytes())
}

fn stats(args: &StatsArgs) -> Result<()> {
    let table = read_table(&args.input)?;
    let cols = table.select(&args.columns, &args.input)?;
    let rows = cols
        .iter()
        .map(|c| Ok((c.name.as_str(), describe(&c.name, &c.values)?)))
        .collect::<Result<Vec<_>>>()?;
    emit(args.out.as_deref(), stats_block(&rows).as_bytes())
}

fn compare_cmd(args: &CompareArgs) -> Result<()> {
    let sim = read_table(&args.sim)?;
    let sim_col = match &args.column {
        Some(c) => c.clone(),
        None if sim.column("OilPrice").is_some() => "OilPrice".to_string(),
        None => sim.columns[0].name.clone(),
    };
    let sim_values = &sim.select(std::slice::from_ref(&sim_col), &args.sim)?[0].values;

    let reference = read_table(&args.reference)?;
    let ref_col = match &args.ref_column {
        Some(c) => reference.select(std::slice::from_ref(c), &args.reference)?[0],
        None => &reference.columns[0],
    };
    let ref_t: Vec<f64> = match (reference.first_date(), args.origin) {
        (Some(first), Some(origin)) => {
            let shift = (first - origin).num_days() as f64;
            reference.x.iter().map(|x| x + shift).collect()
        }
        _ => reference.x.clone(),
    };

    let report = compare::compare(&sim.x, sim_values, &ref_t, &ref_col.values)?;
    let mut csv = String::from("metric,value\n");
    for (k, v) in report.rows() {
        csv.push_str(&format!("{k},{v}\n"));
    }
    if let Some(out) = &args.out {
        fs::write(out, &csv).with_context(|| format!("cannot write {}", out.display()))?;
    }
    println!(
        "{sim_col} vs {}: rmse {:.4}, max |error| {:.4}, trend agreement {:.1}% over {} intervals ({} samples)",
        ref_col.name,
        report.rmse,
        report.max_abs_error,
        100.0 * report.trend_sign_agreement,
        report.intervals,
        report.samples
    );
    Ok(())
}

fn plot(args: &PlotArgs) -> Result<()> {
    let table = read_table(&args.input)?;
    let cols = table.select(&args.columns, &args.input)?;
    let series: Vec<(&str, &[f64])> = cols
        .iter()
        .map(|c| (c.name.as_str(), c.values.as_slice()))
        .collect();
    let title = args.title.clone().unwrap_or_else(|| {
        args.input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    let x_label = match table.kind {
        IndexKind::Date => format!("days since {}", table.labels[0]),
        IndexKind::Quarter => format!("quarters since {}", table.labels[0]),
        IndexKind::Number => table.index_name.clone(),
    };
    let svg = svg::line_chart(&title, &x_label, &table.x, &series);
    emit(args.out.as_deref(), svg.as_bytes())
}
