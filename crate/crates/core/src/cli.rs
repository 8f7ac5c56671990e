//! `bottleneck detect | evaluate | plot`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::evaluation::{chen_classify, confusion, load_truth_csv, ConfusionCounts};
use crate::grid::Matrix;
use crate::pipeline::{DayInput, Pipeline};
use crate::render::{binary_heatmap, region_heatmap, speed_heatmap, write_svg};
use crate::report::{
    read_threshold_history, seed_state, update_threshold_history, HistoryEntry, ReportDocument,
};
use crate::speed_grid::{aggregate_time, load_speed_csv, read_table, CorridorGeometry, SpeedGrid};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 1;
pub const EXIT_PARTIAL: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "bottleneck", version, about = "Freeway bottleneck identification from speed heatmaps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Detect bottlenecks and write one JSON report plus heatmaps per day.
    Detect(DetectArgs),
    /// Score congestion masks against ground truth.
    Evaluate(EvaluateArgs),
    /// Render a speed heatmap, optionally overlaid with a report.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Speed CSV, one per day; a directory stands for every `.csv` in it.
    #[arg(long, required = true, num_args = 1..)]
    pub speed: Vec<PathBuf>,
    #[arg(long)]
    pub geometry: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Per-lane flow CSVs (veh/hour), matched to `--speed` by position.
    #[arg(long, num_args = 1..)]
    pub volumes: Vec<PathBuf>,
    /// Also write a heatmap for every intermediate mask.
    #[arg(long)]
    pub snapshots: bool,
    /// `date,u_pre_mph` file seeding and recording the threshold fallback.
    #[arg(long)]
    pub threshold_history: Option<PathBuf>,
    /// Corridor id for the reports; defaults to the geometry file stem.
    #[arg(long)]
    pub corridor: Option<String>,
    /// Average the input up to this interval (minutes) before detection.
    #[arg(long)]
    pub aggregate_minutes: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Proposed,
    /// Detector-pair baseline.
    Chen,
    Both,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long, required = true, num_args = 1..)]
    pub speed: Vec<PathBuf>,
    /// Ground-truth CSVs (0/1 cells), matched to `--speed` by position.
    #[arg(long, required = true, num_args = 1..)]
    pub truth: Vec<PathBuf>,
    #[arg(long)]
    pub geometry: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Method::Both)]
    pub method: Method,
    /// Average the input up to this interval (minutes) before scoring; truth must already be at that interval.
    #[arg(long)]
    pub aggregate_minutes: Option<u32>,
    /// Directory for `metrics.csv` and `comparison.csv`; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub speed: PathBuf,
    #[arg(long)]
    pub geometry: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> ExitCode {
    let result = match cli.command {
        Command::Detect(a) => detect(&a),
        Command::Evaluate(a) => evaluate(&a).map(|()| EXIT_OK),
        Command::Plot(a) => plot(&a).map(|()| EXIT_OK),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    let config = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    config.detection()?;
    config.fundamental_diagram()?;
    Ok(config)
}

/// Expands directories to their `.csv` files, sorted by name.
fn expand_inputs(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut files: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| Error::io(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "csv"))
                .collect();
            files.sort();
            out.extend(files);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "day".into(), |s| s.to_string_lossy().into_owned())
}

struct LoadedDay {
    source: PathBuf,
    grid: SpeedGrid,
    volumes: Option<Matrix<f64>>,
}

fn load_grid(path: &Path, geometry: &CorridorGeometry, aggregate: Option<u32>) -> Result<SpeedGrid> {
    let grid = load_speed_csv(path, geometry)?;
    match aggregate {
        Some(m) => aggregate_time(&grid, m),
        None => Ok(grid),
    }
}

fn load_day(
    speed: &Path,
    volumes: Option<&Path>,
    geometry: &CorridorGeometry,
    aggregate: Option<u32>,
) -> Result<LoadedDay> {
    let grid = load_grid(speed, geometry, aggregate)?;
    let volumes = match volumes {
        Some(v) => {
            let table = read_table(v, geometry)?;
            let mut values = table.values;
            if let Some(m) = aggregate {
                let raw = SpeedGrid::new(values, table.section_ids, table.timestamps, table.interval_minutes)?;
                values = aggregate_time(&raw, m)?.values().clone();
            }
            if values.shape() != grid.shape() {
                return Err(Error::ShapeMismatch {
                    left: values.shape(),
                    right: grid.shape(),
                }
                .in_stage("volumes"));
            }
            Some(values)
        }
        None => None,
    };
    Ok(LoadedDay {
        source: speed.to_path_buf(),
        grid,
        volumes,
    })
}

pub fn detect(args: &DetectArgs) -> Result<u8> {
    let config = load_config(args.config.as_deref())?;
    let geometry = CorridorGeometry::load_csv(&args.geometry)?;
    let speeds = expand_inputs(&args.speed)?;
    let volumes = expand_inputs(&args.volumes)?;
    if !volumes.is_empty() && volumes.len() != speeds.len() {
        return Err(Error::InvalidConfig(format!(
            "{} volume files for {} speed files",
            volumes.len(),
            speeds.len()
        )));
    }
    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let history = match &args.threshold_history {
        Some(p) => read_threshold_history(p)?,
        None => Vec::new(),
    };
    let fd = config.fundamental_diagram()?;
    let pipeline = Pipeline::new(config.detection()?, fd, geometry.clone())?.with_snapshots(args.snapshots);
    let corridor = args.corridor.clone().unwrap_or_else(|| stem(&args.geometry));

    let mut failures = 0usize;
    let mut days = Vec::new();
    for (i, speed) in speeds.iter().enumerate() {
        match load_day(speed, volumes.get(i).map(PathBuf::as_path), &geometry, args.aggregate_minutes) {
            Ok(d) => days.push(d),
            Err(e) => {
                eprintln!("error: {}: {e}", speed.display());
                failures += 1;
            }
        }
    }
    days.sort_by_key(|d| d.grid.timestamps().first().copied());

    let inputs: Vec<DayInput<'_>> = days
        .iter()
        .map(|d| DayInput {
            grid: &d.grid,
            volumes: d.volumes.as_ref(),
        })
        .collect();
    let (results, _) = pipeline.run_batch(&inputs, seed_state(&history, config.u_pre_default));

    let mut used_names = std::collections::BTreeSet::new();
    let mut recorded = Vec::new();
    for (day, result) in days.iter().zip(results) {
        let result = match result {
            Ok(r) => r,
            Err(e) => {
                eprintln!("error: {}: {e}", day.source.display());
                failures += 1;
                continue;
            }
        };
        let mut name = result.date.map_or_else(|| stem(&day.source), |d| d.to_string());
        if !used_names.insert(name.clone()) {
            name = format!("{name}-{}", stem(&day.source));
            used_names.insert(name.clone());
        }
        let doc = ReportDocument::new(&corridor, &config, fd.max_shockwave_speed(), &result);
        doc.write(args.out.join(format!("{name}.report.json")))?;
        write_svg(
            args.out.join(format!("{name}.speed.svg")),
            &speed_heatmap(&day.grid, config.u_free, &result.reports, &format!("{corridor} {name} speed")),
        )?;
        write_svg(
            args.out.join(format!("{name}.binary.svg")),
            &binary_heatmap(&result.final_mask, &format!("{corridor} {name} congestion")),
        )?;
        write_svg(
            args.out.join(format!("{name}.regions.svg")),
            &region_heatmap(&result.regions, &result.reports, &format!("{corridor} {name} bottlenecks")),
        )?;
        if let Some(snaps) = &result.snapshots {
            for (stage, mask) in snaps.stages() {
                write_svg(
                    args.out.join(format!("{name}.{stage}.svg")),
                    &binary_heatmap(mask, &format!("{corridor} {name} {stage}")),
                )?;
            }
        }
        if let Some(date) = result.date {
            recorded.push(HistoryEntry {
                date,
                u_pre_mph: result.threshold.u_pre,
            });
        }
        println!("{name}: {} bottleneck(s)", result.reports.len());
    }
    if let Some(p) = &args.threshold_history {
        if !recorded.is_empty() {
            update_threshold_history(p, &recorded)?;
        }
    }

    Ok(match failures {
        0 => EXIT_OK,
        n if n == speeds.len() => EXIT_INPUT,
        _ => EXIT_PARTIAL,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub date: String,
    pub method: &'static str,
    pub counts: ConfusionCounts,
}

/// Scores each day in input order, threading the threshold guard through the
/// proposed method's days.
pub fn score_days(
    speeds: &[SpeedGrid],
    truths: &[crate::grid::BinaryGrid],
    names: &[String],
    geometry: &CorridorGeometry,
    config: &RunConfig,
    method: Method,
) -> Result<Vec<MetricRow>> {
    let detection = config.detection()?;
    let pipeline = Pipeline::new(detection.clone(), config.fundamental_diagram()?, geometry.clone())?;
    let mut state = pipeline.initial_state();
    let mut rows = Vec::new();
    for ((grid, truth), name) in speeds.iter().zip(truths).zip(names) {
        if grid.shape() != truth.shape() {
            return Err(Error::ShapeMismatch {
                left: grid.shape(),
                right: truth.shape(),
            });
        }
        if matches!(method, Method::Chen | Method::Both) {
            let mask = chen_classify(grid, detection.chen_u_max, detection.chen_delta_u_min)?;
            rows.push(MetricRow {
                date: name.clone(),
                method: "chen",
                counts: confusion(&mask, truth)?,
            });
        }
        if matches!(method, Method::Proposed | Method::Both) {
            let (mask, next) = pipeline.congestion_mask(grid, &state)?;
            state = next;
            rows.push(MetricRow {
                date: name.clone(),
                method: "proposed",
                counts: confusion(&mask, truth)?,
            });
        }
    }
    Ok(rows)
}

fn metrics_csv(rows: &[MetricRow]) -> String {
    let mut s = String::from(
        "date,method,success_rate,false_alarm_rate,true_positive,false_positive,true_negative,false_negative\n",
    );
    for r in rows {
        let c = &r.counts;
        s.push_str(&format!(
            "{},{},{:.6},{:.6},{},{},{},{}\n",
            r.date,
            r.method,
            c.success_rate(),
            c.false_alarm_rate(),
            c.true_positive,
            c.false_positive,
            c.true_negative,
            c.false_negative
        ));
    }
    s
}

/// Days side by side, ascending by the baseline's success rate.
fn comparison_csv(rows: &[MetricRow]) -> String {
    let mut pairs: Vec<(&MetricRow, &MetricRow)> = rows
        .iter()
        .filter(|r| r.method == "chen")
        .filter_map(|c| {
            rows.iter()
                .find(|p| p.method == "proposed" && p.date == c.date)
                .map(|p| (c, p))
        })
        .collect();
    pairs.sort_by(|a, b| {
        a.0.counts
            .success_rate()
            .total_cmp(&b.0.counts.success_rate())
            .then_with(|| a.0.date.cmp(&b.0.date))
    });
    let mut s = String::from(
        "date,chen_success_rate,proposed_success_rate,chen_false_alarm_rate,proposed_false_alarm_rate\n",
    );
    for (c, p) in pairs {
        s.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{:.6}\n",
            c.date,
            c.counts.success_rate(),
            p.counts.success_rate(),
            c.counts.false_alarm_rate(),
            p.counts.false_alarm_rate()
        ));
    }
    s
}

pub fn evaluate(args: &EvaluateArgs) -> Result<()> {
    let config = load_config(args.config.as_deref())?;
    let geometry = CorridorGeometry::load_csv(&args.geometry)?;
    let speed_paths = expand_inputs(&args.speed)?;
    let truth_paths = expand_inputs(&args.truth)?;
    if speed_paths.len() != truth_paths.len() {
        return Err(Error::InvalidConfig(format!(
            "{} truth files for {} speed files",
            truth_paths.len(),
            speed_paths.len()
        )));
    }
    let mut speeds = Vec::new();
    let mut truths = Vec::new();
    let mut names = Vec::new();
    for (s, t) in speed_paths.iter().zip(&truth_paths) {
        let grid = load_grid(s, &geometry, args.aggregate_minutes)?;
        let truth = load_truth_csv(t, &geometry)?;
        if grid.shape() != truth.cells.shape() {
            return Err(Error::ShapeMismatch {
                left: grid.shape(),
                right: truth.cells.shape(),
            }
            .in_stage("evaluate"));
        }
        names.push(grid.date().map_or_else(|| stem(s), |d| d.to_string()));
        speeds.push(grid);
        truths.push(truth.cells);
    }
    let rows = score_days(&speeds, &truths, &names, &geometry, &config, args.method)?;

    let metrics = metrics_csv(&rows);
    let comparison = (args.method == Method::Both).then(|| comparison_csv(&rows));
    match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            let path = dir.join("metrics.csv");
            fs::write(&path, &metrics).map_err(|e| Error::io(&path, e))?;
            if let Some(c) = comparison {
                let path = dir.join("comparison.csv");
                fs::write(&path, c).map_err(|e| Error::io(&path, e))?;
            }
        }
        None => {
            print!("{metrics}");
            if let Some(c) = comparison {
                print!("\n{c}");
            }
        }
    }
    Ok(())
}

pub fn plot(args: &PlotArgs) -> Result<()> {
    let config = load_config(args.config.as_deref())?;
    let geometry = CorridorGeometry::load_csv(&args.geometry)?;
    let grid = load_speed_csv(&args.speed, &geometry)?;
    let reports = match &args.report {
        Some(p) => ReportDocument::load(p)?.bottlenecks,
        None => Vec::new(),
    };
    write_svg(&args.out, &speed_heatmap(&grid, config.u_free, &reports, &stem(&args.speed)))
}
