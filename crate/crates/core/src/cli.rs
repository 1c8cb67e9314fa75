//! Command-line front end: configuration, data ingestion, CSV and SVG output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;

use crate::config::ConfigValues;
use crate::efa::{apply_rotation, correlation_from_values, uls_extract, EfaOptions, Rotation};
use crate::error::{Error, Result};
use crate::io::{fmt_num, read_data_csv, ResultTable};
use crate::metrics::{
    loading_grid, reproductions, threshold_scan, DeltaPair, MsqDenominator, Threshold, ThresholdResult,
};
use crate::model::{LoadingMode, ModelSet};
use crate::sim::{
    collapse, run_population_sweep, run_sample_sweep, thresholds_from_records, with_workers, Coordinate,
    PopulationGrid, SampleCell, SampleGrid, SampleTarget, SweepRecord,
};
use crate::svg::Heatmap;
use crate::verify::{run_all, TheoremReport};

pub const DEFAULT_SEED: u64 = 20141125;

pub const POPULATION_COLUMNS: &[&str] = &["set", "q", "per_factor", "l", "delta_r", "delta_b", "gap"];
pub const SAMPLE_COLUMNS: &[&str] = &[
    "cell",
    "q",
    "oblique",
    "per_factor",
    "l",
    "loading_mode",
    "n",
    "reps",
    "delta_r_mean",
    "delta_b_mean",
    "gap_mean",
    "gap_sd",
    "nonconverged",
    "heywood_events",
];
pub const THRESHOLD_COLUMNS: &[&str] = &["set", "per_factor", "threshold", "censored"];
pub const VERIFY_COLUMNS: &[&str] = &[
    "theorem",
    "conditions_checked",
    "max_violation",
    "tolerance",
    "passed",
    "note",
];

#[derive(Debug, Parser)]
#[command(
    name = "factor-repro",
    version,
    about = "Covariance reproduction by factor score predictors"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the reproduction theorems numerically.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Replaces every theorem tolerance (testing hook).
        #[arg(long, hide = true)]
        tolerance_override: Option<f64>,
    },
    /// Population gaps over the model-set grid.
    PopulationSweep {
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo study with sample correlations and exploratory factor analysis.
    SampleSweep {
        #[command(flatten)]
        common: Common,
    },
    /// Compare conventional and single-variable reproduction on a data file.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Comma-separated numeric data, one observation per row.
        data: Option<PathBuf>,
        /// Number of factors to extract.
        #[arg(long)]
        q: Option<usize>,
        /// varimax, promax or none.
        #[arg(long)]
        rotation: Option<String>,
    },
    /// Loading thresholds below which a single variable reproduces better.
    Threshold {
        #[command(flatten)]
        common: Common,
        /// Model sets, e.g. `1` or `1,3`.
        #[arg(long)]
        set: Option<String>,
        #[arg(long)]
        q: Option<usize>,
        /// Variables per factor, e.g. `3` or `2..10`.
        #[arg(long)]
        per_factor: Option<String>,
        /// Loading grid step.
        #[arg(long)]
        step: Option<f64>,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// Flat key = value configuration file.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Configuration override, repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    pub params: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write SVG heatmaps.
    #[arg(long)]
    pub svg: bool,
    #[arg(long)]
    pub reps: Option<usize>,
    /// offdiag or all.
    #[arg(long, value_name = "offdiag|all")]
    pub msq_denominator: Option<String>,
}

/// Merged settings: file, then `--param`, then dedicated flags.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub values: ConfigValues,
    pub master_seed: u64,
    pub worker_count: usize,
    pub out_dir: PathBuf,
    pub svg: bool,
    pub msq_denominator: MsqDenominator,
}

impl RunConfig {
    pub fn resolve(common: &Common, extra: &[(&str, Option<String>)]) -> Result<Self> {
        let mut values = match &common.config {
            Some(path) => ConfigValues::load(path)?,
            None => ConfigValues::default(),
        };
        for p in &common.params {
            values.set_param(p)?;
        }
        let flags = [
            ("seed", common.seed.map(|v| v.to_string())),
            ("workers", common.workers.map(|v| v.to_string())),
            ("out", common.out.as_ref().map(|v| v.display().to_string())),
            ("svg", common.svg.then(|| "true".to_string())),
            ("reps", common.reps.map(|v| v.to_string())),
            ("msq_denominator", common.msq_denominator.clone()),
        ];
        for (key, value) in flags.iter().chain(extra) {
            if let Some(v) = value {
                values.set_param(&format!("{key}={v}"))?;
            }
        }
        let worker_count = match values.get::<usize>("workers")? {
            Some(0) => return Err(config_error(&values, "workers", "must be at least 1")),
            Some(w) => w,
            None => std::thread::available_parallelism().map_or(1, |n| n.get()),
        };
        let msq_denominator = match values.get_str("msq_denominator") {
            None => MsqDenominator::OffDiagonal,
            Some(s) => MsqDenominator::parse(s)
                .ok_or_else(|| config_error(&values, "msq_denominator", "expected offdiag or all"))?,
        };
        Ok(RunConfig {
            master_seed: values.get("seed")?.unwrap_or(DEFAULT_SEED),
            worker_count,
            out_dir: values
                .get_str("out")
                .map_or_else(|| PathBuf::from("results"), PathBuf::from),
            svg: values.get_bool("svg")?.unwrap_or(false),
            msq_denominator,
            values,
        })
    }

    fn prepare_out(&self) -> Result<&Path> {
        std::fs::create_dir_all(&self.out_dir).map_err(|e| Error::Io(format!("{}: {e}", self.out_dir.display())))?;
        Ok(&self.out_dir)
    }

    pub fn efa_options(&self) -> Result<EfaOptions> {
        let mut opts = EfaOptions::default();
        if let Some(m) = self.values.get("max_iter")? {
            opts.max_iter = m;
        }
        if let Some(t) = self.values.get::<f64>("tol")? {
            if !t.is_finite() || t <= 0.0 {
                return Err(config_error(&self.values, "tol", "must be positive"));
            }
            opts.tol = t;
        }
        Ok(opts)
    }

    pub fn population_grid(&self) -> Result<PopulationGrid> {
        let mut grid = PopulationGrid {
            denominator: self.msq_denominator,
            ..PopulationGrid::default()
        };
        if let Some(sets) = self.sets("sets")? {
            grid.sets = sets;
        }
        if let Some(q) = self.values.get_usize_list("q")? {
            grid.q_values = q;
        }
        if let Some(m) = self.values.get_usize_list("per_factor")? {
            grid.per_factor_values = m;
        }
        if let Some(mut l) = self.values.get_f64_list("l")? {
            l.sort_by(f64::total_cmp);
            l.dedup();
            grid.l_grid = Some(l);
        }
        for (key, empty) in [
            ("q", grid.q_values.contains(&0)),
            ("per_factor", grid.per_factor_values.contains(&0)),
        ] {
            if empty {
                return Err(config_error(&self.values, key, "values must be positive"));
            }
        }
        Ok(grid)
    }

    pub fn sample_grid(&self) -> Result<SampleGrid> {
        let mut grid = SampleGrid {
            master_seed: self.master_seed,
            denominator: self.msq_denominator,
            efa: self.efa_options()?,
            ..SampleGrid::default()
        };
        if let Some(cells) = self.values.get_list("cells", SampleCell::parse)? {
            grid.cells = cells;
        }
        if let Some(m) = self.values.get_usize_list("per_factor")? {
            grid.per_factor_values = m;
        }
        if let Some(l) = self.values.get_f64_list("l")? {
            grid.l_levels = l;
        }
        if let Some(modes) = self.values.get_list("loading_modes", parse_mode)? {
            grid.loading_modes = modes;
        }
        if let Some(n) = self.values.get_usize_list("n")? {
            grid.n_levels = n;
        }
        if let Some(reps) = self.values.get("reps")? {
            grid.replications = reps;
        }
        if grid.replications < 2 {
            return Err(config_error(
                &self.values,
                "reps",
                "at least 2 replications are required",
            ));
        }
        grid.target = match self.values.get_str("target") {
            None | Some("sample") => SampleTarget::Sample,
            Some("population") => SampleTarget::Population,
            Some(_) => return Err(config_error(&self.values, "target", "expected sample or population")),
        };
        Ok(grid)
    }

    fn sets(&self, key: &str) -> Result<Option<Vec<ModelSet>>> {
        self.values
            .get_list(key, |s| s.parse().ok().and_then(ModelSet::from_number))
    }

    fn rotation(&self) -> Result<Option<Rotation>> {
        match self.values.get_str("rotation") {
            None => Ok(None),
            Some("varimax") => Ok(Some(Rotation::Varimax)),
            Some("promax") => Ok(Some(Rotation::promax())),
            Some("none") => Ok(Some(Rotation::None)),
            Some(_) => Err(config_error(
                &self.values,
                "rotation",
                "expected varimax, promax or none",
            )),
        }
    }
}

fn config_error(values: &ConfigValues, key: &str, message: &str) -> Error {
    // Reuse the line lookup by asking the parser for a typed failure.
    match values.get_list(key, |_| None::<()>) {
        Err(Error::Config { line, key, .. }) => Error::Config {
            line,
            key,
            message: message.into(),
        },
        _ => Error::Config {
            line: 0,
            key: key.into(),
            message: message.into(),
        },
    }
}

fn parse_mode(s: &str) -> Option<LoadingMode> {
    match s {
        "constant" => Some(LoadingMode::Constant),
        "variable" => Some(LoadingMode::Variable),
        _ => None,
    }
}

pub fn population_table(records: &[SweepRecord]) -> ResultTable {
    let mut t = ResultTable::new(POPULATION_COLUMNS);
    for r in records {
        t.push(vec![
            r.set().map_or_else(String::new, |s| s.to_string()),
            r.q.to_string(),
            r.per_factor.to_string(),
            fmt_num(r.l),
            fmt_num(r.delta_r_mean),
            fmt_num(r.delta_b_mean),
            fmt_num(r.gap_mean),
        ]);
    }
    t
}

pub fn sample_table(records: &[SweepRecord]) -> ResultTable {
    let mut t = ResultTable::new(SAMPLE_COLUMNS);
    for r in records {
        let cell = SampleCell {
            q: r.q,
            oblique: r.oblique(),
        };
        t.push(vec![
            cell.label(),
            r.q.to_string(),
            r.oblique().to_string(),
            r.per_factor.to_string(),
            fmt_num(r.l),
            r.loading_mode.to_string(),
            r.n.to_string(),
            r.replications.to_string(),
            fmt_num(r.delta_r_mean),
            fmt_num(r.delta_b_mean),
            fmt_num(r.gap_mean),
            fmt_num(r.gap_sd),
            r.nonconverged.to_string(),
            r.heywood_events.to_string(),
        ]);
    }
    t
}

/// `censored` is `upper` when the single variable wins on the whole grid,
/// `lower` when it never wins, and `no` otherwise.
pub fn threshold_table(rows: &[(ModelSet, ThresholdResult)]) -> ResultTable {
    let mut t = ResultTable::new(THRESHOLD_COLUMNS);
    for (set, r) in rows {
        let censored = match r.threshold {
            Threshold::At(_) => "no",
            Threshold::Censored(_) => "upper",
            Threshold::BelowGrid(_) => "lower",
        };
        t.push(vec![
            set.to_string(),
            r.per_factor.to_string(),
            fmt_num(r.threshold.value()),
            censored.into(),
        ]);
    }
    t
}

pub fn verify_table(reports: &[TheoremReport]) -> ResultTable {
    let mut t = ResultTable::new(VERIFY_COLUMNS);
    for r in reports {
        t.push(vec![
            r.theorem_id.as_str().into(),
            r.conditions_checked.to_string(),
            fmt_num(r.max_violation),
            fmt_num(r.tolerance),
            r.passed.to_string(),
            r.note.clone(),
        ]);
    }
    t
}

/// Gap heatmaps, one per model set, averaged over q.
pub fn gap_heatmaps(collapsed: &[SweepRecord]) -> Vec<(ModelSet, Heatmap)> {
    let mut out = Vec::new();
    for set in ModelSet::ALL {
        let rows: Vec<&SweepRecord> = collapsed.iter().filter(|r| r.set() == Some(set)).collect();
        if rows.is_empty() {
            continue;
        }
        let mut x: Vec<f64> = rows.iter().map(|r| r.l).collect();
        x.sort_by(f64::total_cmp);
        x.dedup();
        let mut y: Vec<usize> = rows.iter().map(|r| r.per_factor).collect();
        y.sort_unstable();
        y.dedup();
        let mut values = vec![vec![f64::NAN; x.len()]; y.len()];
        for r in rows {
            let i = y.binary_search(&r.per_factor).expect("present");
            let j = x.iter().position(|&l| l == r.l).expect("present");
            values[i][j] = r.gap_mean;
        }
        out.push((
            set,
            Heatmap {
                title: format!("Set {set}: delta_r - delta_b, mean over q"),
                x_label: "salient loading l".into(),
                y_label: "variables per factor p/q".into(),
                x_ticks: x,
                y_ticks: y.into_iter().map(|m| m as f64).collect(),
                values,
            },
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeReport {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub deltas: DeltaPair,
    /// Zero-based variable index per factor.
    pub chosen: Vec<usize>,
    pub mean_salient: f64,
    pub converged: bool,
    pub iterations: usize,
    pub heywood_clamped: usize,
}

impl AnalyzeReport {
    pub fn recommends_single_variable(&self) -> bool {
        self.deltas.gap > 0.0
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "observations: {}, variables: {}, factors: {}",
            self.n, self.p, self.q
        );
        let conv = if self.converged {
            format!("yes ({} iterations)", self.iterations)
        } else {
            format!(
                "no, iteration cap reached after {} iterations; results flagged",
                self.iterations
            )
        };
        let _ = writeln!(s, "extraction converged: {conv}");
        if self.heywood_clamped > 0 {
            let _ = writeln!(s, "communalities clamped: {}", self.heywood_clamped);
        }
        let _ = writeln!(s, "delta_r (conventional predictors): {}", fmt_num(self.deltas.delta_r));
        let _ = writeln!(s, "delta_b (single variables):        {}", fmt_num(self.deltas.delta_b));
        let _ = writeln!(s, "gap (delta_r - delta_b):           {}", fmt_num(self.deltas.gap));
        for (f, v) in self.chosen.iter().enumerate() {
            let _ = writeln!(s, "factor {}: variable {}", f + 1, v + 1);
        }
        let ratio = self.p as f64 / self.q as f64;
        let _ = writeln!(
            s,
            "mean salient loading: {:.3}, variables per factor: {:.2}",
            self.mean_salient, ratio
        );
        let rec = if self.recommends_single_variable() {
            "single-variable predictors reproduce the off-diagonal correlations better"
        } else {
            "conventional predictors reproduce the off-diagonal correlations at least as well"
        };
        let _ = writeln!(s, "recommendation: {rec}");
        let _ = writeln!(
            s,
            "rule of thumb: single variables tend to win for salient loadings up to .40 with at most 6 variables per factor; \
             conventional predictors tend to win for loadings above .60 with more than 6 variables per factor"
        );
        s
    }
}

pub fn analyze(
    data: &DMatrix<f64>,
    q: usize,
    rotation: Rotation,
    opts: &EfaOptions,
    denom: MsqDenominator,
) -> Result<AnalyzeReport> {
    let (n, p) = data.shape();
    if n <= p {
        return Err(Error::InvalidSpec(format!(
            "need more observations than variables, got n = {n}, p = {p}"
        )));
    }
    let r = correlation_from_values(data)?;
    let solution = apply_rotation(uls_extract(&r, q, opts)?, rotation);
    let reps = reproductions(&solution.unrotated, &solution.loadings, &r)?;
    let deltas = reps.deltas(&r, denom)?;
    let mean_salient = (0..p)
        .map(|i| solution.loadings.row(i).iter().fold(0.0f64, |m, v| m.max(v.abs())))
        .sum::<f64>()
        / p as f64;
    Ok(AnalyzeReport {
        n,
        p,
        q,
        deltas,
        chosen: reps.chosen,
        mean_salient,
        converged: solution.converged,
        iterations: solution.iterations,
        heywood_clamped: solution.heywood_clamped,
    })
}

fn write_table(dir: &Path, name: &str, table: &ResultTable) -> Result<()> {
    let path = dir.join(name);
    table.write(&path)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn cmd_verify(cfg: &RunConfig, tolerance_override: Option<f64>) -> Result<i32> {
    let reports = run_all(tolerance_override)?;
    for r in &reports {
        println!(
            "{} {}: {} conditions, max violation {} (tolerance {}){}",
            if r.passed { "PASS" } else { "FAIL" },
            r.theorem_id.as_str(),
            r.conditions_checked,
            fmt_num(r.max_violation),
            fmt_num(r.tolerance),
            if r.note.is_empty() {
                String::new()
            } else {
                format!("; {}", r.note)
            }
        );
    }
    write_table(cfg.prepare_out()?, "verify_report.csv", &verify_table(&reports))?;
    Ok(if reports.iter().all(|r| r.passed) { 0 } else { 1 })
}

fn cmd_population_sweep(cfg: &RunConfig) -> Result<i32> {
    let grid = cfg.population_grid()?;
    let records = with_workers(cfg.worker_count, || run_population_sweep(&grid))?;
    let out = cfg.prepare_out()?;
    write_table(out, "population_sweep.csv", &population_table(&records))?;
    let collapsed = collapse(&records, Coordinate::Q)?;
    write_table(
        out,
        "thresholds.csv",
        &threshold_table(&thresholds_from_records(&collapsed)?),
    )?;
    if cfg.svg {
        for (set, map) in gap_heatmaps(&collapsed) {
            let path = out.join(format!("gap_heatmap_set{set}.svg"));
            std::fs::write(&path, map.render()).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            eprintln!("wrote {}", path.display());
        }
    }
    Ok(0)
}

fn cmd_sample_sweep(cfg: &RunConfig) -> Result<i32> {
    let grid = cfg.sample_grid()?;
    let records = with_workers(cfg.worker_count, || {
        run_sample_sweep(&grid, |r, total| {
            eprintln!(
                "[{}/{}] {} per_factor={} l={} {} n={} gap_mean={} nonconverged={}",
                r.ordinal + 1,
                total,
                SampleCell {
                    q: r.q,
                    oblique: r.oblique()
                },
                r.per_factor,
                fmt_num(r.l),
                r.loading_mode,
                r.n,
                fmt_num(r.gap_mean),
                r.nonconverged
            );
        })
    })?;
    write_table(cfg.prepare_out()?, "sample_sweep.csv", &sample_table(&records))?;
    Ok(0)
}

fn cmd_analyze(cfg: &RunConfig) -> Result<i32> {
    let path = cfg
        .values
        .get_str("data")
        .map(PathBuf::from)
        .ok_or_else(|| Error::InvalidSpec("analyze needs a data file".into()))?;
    let q = cfg
        .values
        .get::<usize>("q")?
        .ok_or_else(|| Error::InvalidSpec("analyze needs --q".into()))?;
    let data = read_data_csv(&path)?;
    let report = analyze(
        &data,
        q,
        cfg.rotation()?.unwrap_or(Rotation::Varimax),
        &cfg.efa_options()?,
        cfg.msq_denominator,
    )?;
    let text = report.render();
    print!("{text}");
    let out = cfg.prepare_out()?.join("analyze_report.txt");
    std::fs::write(&out, text).map_err(|e| Error::Io(format!("{}: {e}", out.display())))?;
    Ok(0)
}

fn cmd_threshold(cfg: &RunConfig) -> Result<i32> {
    let sets = cfg.sets("set")?.unwrap_or_else(|| vec![ModelSet::Set1]);
    let q = cfg.values.get::<usize>("q")?.unwrap_or(1);
    let per_factor = cfg
        .values
        .get_usize_list("per_factor")?
        .unwrap_or_else(|| (2..=10).collect());
    let step = cfg.values.get::<f64>("step")?.unwrap_or(0.001);
    if !step.is_finite() || step <= 0.0 {
        return Err(config_error(&cfg.values, "step", "must be positive"));
    }
    let mut rows = Vec::new();
    for set in sets {
        let grid = match cfg.values.get_f64_list("l")? {
            Some(l) => l,
            None => loading_grid(0.25, set.max_grid_loading(), step),
        };
        let results: Result<Vec<ThresholdResult>> = with_workers(cfg.worker_count, || {
            use rayon::prelude::*;
            per_factor
                .par_iter()
                .map(|&m| threshold_scan(set, q, m, &grid))
                .collect()
        });
        for r in results? {
            println!("set {set} per_factor {}: {:?}", r.per_factor, r.threshold);
            rows.push((set, r));
        }
    }
    write_table(cfg.prepare_out()?, "thresholds.csv", &threshold_table(&rows))?;
    Ok(0)
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Verify {
            common,
            tolerance_override,
        } => cmd_verify(&RunConfig::resolve(&common, &[])?, tolerance_override),
        Command::PopulationSweep { common } => cmd_population_sweep(&RunConfig::resolve(&common, &[])?),
        Command::SampleSweep { common } => cmd_sample_sweep(&RunConfig::resolve(&common, &[])?),
        Command::Analyze {
            common,
            data,
            q,
            rotation,
        } => {
            let extra = [
                ("data", data.map(|d| d.display().to_string())),
                ("q", q.map(|v| v.to_string())),
                ("rotation", rotation),
            ];
            cmd_analyze(&RunConfig::resolve(&common, &extra)?)
        }
        Command::Threshold {
            common,
            set,
            q,
            per_factor,
            step,
        } => {
            let extra = [
                ("set", set),
                ("q", q.map(|v| v.to_string())),
                ("per_factor", per_factor),
                ("step", step.map(|v| v.to_string())),
            ];
            cmd_threshold(&RunConfig::resolve(&common, &extra)?)
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_args<I, T>(args: I) -> Result<i32>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::InvalidSpec(e.to_string()))?;
    run(cli)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn common_with(params: &[&str]) -> Common {
        Common {
            params: params.iter().map(|s| s.to_string()).collect(),
            ..Common::default()
        }
    }

    #[test]
    fn flags_win_over_params() {
        let mut common = common_with(&["seed=5", "workers=3"]);
        common.seed = Some(9);
        let cfg = RunConfig::resolve(&common, &[]).unwrap();
        assert_eq!(cfg.master_seed, 9);
        assert_eq!(cfg.worker_count, 3);
        assert_eq!(cfg.msq_denominator, MsqDenominator::OffDiagonal);
    }

    #[test]
    fn zero_workers_rejected() {
        let err = RunConfig::resolve(&common_with(&["workers=0"]), &[]).unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "workers"));
    }

    #[test]
    fn sample_grid_from_params() {
        let cfg = RunConfig::resolve(
            &common_with(&[
                "cells=q1_orth,q9_obl",
                "per_factor=3..4",
                "l=.4",
                "loading_modes=variable",
                "n=150",
                "reps=3",
            ]),
            &[],
        )
        .unwrap();
        let grid = cfg.sample_grid().unwrap();
        assert_eq!(grid.condition_count(), 4);
        assert_eq!(grid.loading_modes, vec![LoadingMode::Variable]);
        assert!(RunConfig::resolve(&common_with(&["cells=q2"]), &[])
            .unwrap()
            .sample_grid()
            .is_err());
        assert!(RunConfig::resolve(&common_with(&["reps=1"]), &[])
            .unwrap()
            .sample_grid()
            .is_err());
    }

    #[test]
    fn population_table_schema() {
        let grid = PopulationGrid {
            sets: vec![ModelSet::Set1],
            q_values: vec![1],
            per_factor_values: vec![2],
            l_grid: Some(vec![0.5]),
            ..PopulationGrid::default()
        };
        let csv = population_table(&run_population_sweep(&grid).unwrap()).to_csv_string();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("set,q,per_factor,l,delta_r,delta_b,gap"));
        assert!(lines.next().unwrap().starts_with("1,1,2,0.5,"));
    }

    #[test]
    fn threshold_censoring_labels() {
        let rows = [
            (
                ModelSet::Set1,
                ThresholdResult {
                    per_factor: 2,
                    threshold: Threshold::Censored(0.95),
                    grid_step: 0.05,
                },
            ),
            (
                ModelSet::Set1,
                ThresholdResult {
                    per_factor: 3,
                    threshold: Threshold::At(0.75),
                    grid_step: 0.05,
                },
            ),
        ];
        assert_eq!(
            threshold_table(&rows).to_csv_string(),
            "set,per_factor,threshold,censored\n1,2,0.95,upper\n1,3,0.75,no\n"
        );
    }
}
