//! Population sweep over the four model sets and the sample Monte Carlo.
//!
//! Replications are independent tasks keyed by `(master seed, condition
//! ordinal, replication ordinal)`. Results are gathered in replication order
//! before any reduction, so output does not depend on the worker count.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;

use crate::efa::{apply_rotation, correlation_matrix, sample_data, uls_extract, EfaOptions, Rotation, SeedTrace};
use crate::error::{Error, Result};
use crate::matops::SymMatrix;
use crate::metrics::{
    default_loading_grid, delta_pair_with, reproductions, threshold_from_gaps, DeltaPair, MsqDenominator,
    ThresholdResult,
};
use crate::model::{build_simple_structure, implied_sigma, LoadingMode, ModelSet, ModelSetSpec};

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool");
    pool.install(f)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationGrid {
    pub sets: Vec<ModelSet>,
    pub q_values: Vec<usize>,
    pub per_factor_values: Vec<usize>,
    /// Replaces every set's default loading grid when present.
    pub l_grid: Option<Vec<f64>>,
    pub denominator: MsqDenominator,
}

impl Default for PopulationGrid {
    fn default() -> Self {
        PopulationGrid {
            sets: ModelSet::ALL.to_vec(),
            q_values: (1..=10).collect(),
            per_factor_values: (2..=10).collect(),
            l_grid: None,
            denominator: MsqDenominator::OffDiagonal,
        }
    }
}

impl PopulationGrid {
    pub fn loadings_for(&self, set: ModelSet) -> Vec<f64> {
        match &self.l_grid {
            Some(g) => g.clone(),
            None => default_loading_grid(set),
        }
    }
}

/// A `(q, obliquity)` cell of the sample study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SampleCell {
    pub q: usize,
    pub oblique: bool,
}

impl SampleCell {
    /// One factor has no oblique variant, leaving five cells.
    pub const DEFAULT: [SampleCell; 5] = [
        SampleCell { q: 1, oblique: false },
        SampleCell { q: 3, oblique: false },
        SampleCell { q: 3, oblique: true },
        SampleCell { q: 9, oblique: false },
        SampleCell { q: 9, oblique: true },
    ];

    pub fn label(&self) -> String {
        format!("q{}_{}", self.q, if self.oblique { "obl" } else { "orth" })
    }

    pub fn parse(s: &str) -> Option<Self> {
        let rest = s.strip_prefix('q')?;
        let (q, kind) = rest.split_once('_')?;
        let q = q.parse().ok()?;
        let oblique = match kind {
            "orth" => false,
            "obl" => true,
            _ => return None,
        };
        Some(SampleCell { q, oblique })
    }
}

impl fmt::Display for SampleCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Which matrix the reproductions are compared against in sample mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SampleTarget {
    /// The sample correlation matrix the predictors were built from.
    #[default]
    Sample,
    /// The population correlation matrix.
    Population,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleGrid {
    pub cells: Vec<SampleCell>,
    pub per_factor_values: Vec<usize>,
    pub l_levels: Vec<f64>,
    pub loading_modes: Vec<LoadingMode>,
    pub n_levels: Vec<usize>,
    pub replications: usize,
    pub master_seed: u64,
    pub target: SampleTarget,
    pub denominator: MsqDenominator,
    pub efa: EfaOptions,
}

impl Default for SampleGrid {
    fn default() -> Self {
        SampleGrid {
            cells: SampleCell::DEFAULT.to_vec(),
            per_factor_values: (3..=10).collect(),
            l_levels: vec![0.40, 0.60, 0.80],
            loading_modes: vec![LoadingMode::Constant, LoadingMode::Variable],
            n_levels: vec![150, 300, 900],
            replications: 250,
            master_seed: 20141125,
            target: SampleTarget::Sample,
            denominator: MsqDenominator::OffDiagonal,
            efa: EfaOptions::default(),
        }
    }
}

impl SampleGrid {
    pub fn condition_count(&self) -> usize {
        self.cells.len()
            * self.per_factor_values.len()
            * self.l_levels.len()
            * self.loading_modes.len()
            * self.n_levels.len()
    }

    pub fn conditions(&self) -> Vec<SampleCondition> {
        let mut out = Vec::with_capacity(self.condition_count());
        for &cell in &self.cells {
            for &per_factor in &self.per_factor_values {
                for &l in &self.l_levels {
                    for &mode in &self.loading_modes {
                        for &n in &self.n_levels {
                            out.push(SampleCondition {
                                ordinal: out.len(),
                                cell,
                                per_factor,
                                l,
                                mode,
                                n,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleCondition {
    pub ordinal: usize,
    pub cell: SampleCell,
    pub per_factor: usize,
    pub l: f64,
    pub mode: LoadingMode,
    pub n: usize,
}

impl SampleCondition {
    pub fn spec(&self) -> ModelSetSpec {
        ModelSetSpec::new(
            ModelSet::from_parts(self.mode, self.cell.oblique),
            self.cell.q,
            self.per_factor,
            self.l,
        )
    }

    fn describe(&self) -> String {
        format!(
            "#{} {} per_factor={} l={} {} n={}",
            self.ordinal, self.cell, self.per_factor, self.l, self.mode, self.n
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RecordKind {
    Population(ModelSet),
    Sample(SampleCell),
}

/// One aggregated condition. A collapsed coordinate is reported as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub ordinal: usize,
    pub kind: RecordKind,
    pub q: usize,
    pub per_factor: usize,
    pub l: f64,
    pub loading_mode: LoadingMode,
    pub phi: f64,
    pub n: usize,
    pub replications: usize,
    pub delta_r_mean: f64,
    pub delta_b_mean: f64,
    pub gap_mean: f64,
    pub gap_sd: f64,
    /// Replications that hit the iteration cap or failed outright.
    pub nonconverged: usize,
    pub heywood_events: usize,
}

impl SweepRecord {
    pub fn set(&self) -> Option<ModelSet> {
        match self.kind {
            RecordKind::Population(s) => Some(s),
            RecordKind::Sample(_) => None,
        }
    }

    pub fn oblique(&self) -> bool {
        self.phi != 0.0
    }
}

pub fn population_record(ordinal: usize, spec: &ModelSetSpec, denom: MsqDenominator) -> Result<SweepRecord> {
    let describe = || {
        format!(
            "set {} q={} per_factor={} l={}",
            spec.set_id, spec.q, spec.per_factor, spec.mean_loading
        )
    };
    let model = build_simple_structure(spec).map_err(|e| e.at_condition(describe()))?;
    let sigma = implied_sigma(&model).map_err(|e| e.at_condition(describe()))?;
    let d = delta_pair_with(&model, &sigma, denom).map_err(|e| e.at_condition(describe()))?;
    Ok(SweepRecord {
        ordinal,
        kind: RecordKind::Population(spec.set_id),
        q: spec.q,
        per_factor: spec.per_factor,
        l: spec.mean_loading,
        loading_mode: spec.loading_mode(),
        phi: spec.phi_offdiag(),
        n: 0,
        replications: 1,
        delta_r_mean: d.delta_r,
        delta_b_mean: d.delta_b,
        gap_mean: d.gap,
        gap_sd: 0.0,
        nonconverged: 0,
        heywood_events: 0,
    })
}

/// One record per `(set, q, per_factor, l)`, in that nesting order.
pub fn run_population_sweep(grid: &PopulationGrid) -> Result<Vec<SweepRecord>> {
    let mut specs = Vec::new();
    for &set in &grid.sets {
        let loadings = grid.loadings_for(set);
        for &q in &grid.q_values {
            for &per_factor in &grid.per_factor_values {
                for &l in &loadings {
                    specs.push(ModelSetSpec::new(set, q, per_factor, l));
                }
            }
        }
    }
    specs
        .par_iter()
        .enumerate()
        .map(|(ordinal, spec)| population_record(ordinal, spec, grid.denominator))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReplicationOutcome {
    Completed {
        deltas: DeltaPair,
        converged: bool,
        heywood: usize,
    },
    Failed,
}

/// A single sample replication: data, correlations, extraction, rotation,
/// then both reproductions of the sample correlation matrix.
pub fn run_replication(
    condition: &SampleCondition,
    population_sigma: &SymMatrix,
    grid: &SampleGrid,
    replication: usize,
) -> ReplicationOutcome {
    let attempt = || -> Result<ReplicationOutcome> {
        let model = build_simple_structure(&condition.spec())?;
        let trace = SeedTrace::new(grid.master_seed, condition.ordinal as u64, replication as u64);
        let data = sample_data(&model, condition.n, trace)?;
        let r = correlation_matrix(&data)?;
        let solution = uls_extract(&r, condition.cell.q, &grid.efa)?;
        let rotation = if condition.cell.oblique {
            Rotation::promax()
        } else {
            Rotation::Varimax
        };
        let solution = apply_rotation(solution, rotation);
        let reps = reproductions(&solution.unrotated, &solution.loadings, &r)?;
        let target = match grid.target {
            SampleTarget::Sample => &r,
            SampleTarget::Population => population_sigma,
        };
        Ok(ReplicationOutcome::Completed {
            deltas: reps.deltas(target, grid.denominator)?,
            converged: solution.converged,
            heywood: solution.heywood_clamped,
        })
    };
    attempt().unwrap_or(ReplicationOutcome::Failed)
}

/// Reduces outcomes in the given (replication) order.
pub fn aggregate(condition: &SampleCondition, outcomes: &[ReplicationOutcome]) -> SweepRecord {
    let mut pairs = Vec::with_capacity(outcomes.len());
    let mut nonconverged = 0;
    let mut heywood_events = 0;
    for o in outcomes {
        match *o {
            ReplicationOutcome::Completed {
                deltas,
                converged,
                heywood,
            } => {
                pairs.push(deltas);
                nonconverged += usize::from(!converged);
                heywood_events += heywood;
            }
            ReplicationOutcome::Failed => nonconverged += 1,
        }
    }
    let k = pairs.len() as f64;
    let mean = |f: fn(&DeltaPair) -> f64| pairs.iter().map(f).sum::<f64>() / k;
    let gap_mean = mean(|d| d.gap);
    let gap_sd = if pairs.len() > 1 {
        (pairs.iter().map(|d| (d.gap - gap_mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
    } else {
        f64::NAN
    };
    let spec = condition.spec();
    SweepRecord {
        ordinal: condition.ordinal,
        kind: RecordKind::Sample(condition.cell),
        q: condition.cell.q,
        per_factor: condition.per_factor,
        l: condition.l,
        loading_mode: condition.mode,
        phi: spec.phi_offdiag(),
        n: condition.n,
        replications: outcomes.len(),
        delta_r_mean: mean(|d| d.delta_r),
        delta_b_mean: mean(|d| d.delta_b),
        gap_mean,
        gap_sd,
        nonconverged,
        heywood_events,
    }
}

pub fn run_sample_condition(condition: &SampleCondition, grid: &SampleGrid) -> Result<SweepRecord> {
    let model = build_simple_structure(&condition.spec()).map_err(|e| e.at_condition(condition.describe()))?;
    let sigma = implied_sigma(&model).map_err(|e| e.at_condition(condition.describe()))?;
    if condition.n <= model.p() {
        return Err(
            Error::InvalidSpec(format!("n = {} must exceed p = {}", condition.n, model.p()))
                .at_condition(condition.describe()),
        );
    }
    let outcomes: Vec<ReplicationOutcome> = (0..grid.replications)
        .into_par_iter()
        .map(|rep| run_replication(condition, &sigma, grid, rep))
        .collect();
    Ok(aggregate(condition, &outcomes))
}

/// Conditions run in ordinal order; `progress` sees each finished record.
pub fn run_sample_sweep(grid: &SampleGrid, mut progress: impl FnMut(&SweepRecord, usize)) -> Result<Vec<SweepRecord>> {
    if grid.replications < 2 {
        return Err(Error::InvalidSpec("sample sweeps need at least 2 replications".into()));
    }
    let conditions = grid.conditions();
    let total = conditions.len();
    let mut records = Vec::with_capacity(total);
    for condition in &conditions {
        let record = run_sample_condition(condition, grid)?;
        progress(&record, total);
        records.push(record);
    }
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coordinate {
    Q,
    PerFactor,
    Loading,
    N,
}

fn group_key(r: &SweepRecord, over: Coordinate) -> (RecordKind, usize, usize, u64, LoadingMode, u64, usize) {
    (
        r.kind,
        if over == Coordinate::Q { 0 } else { r.q },
        if over == Coordinate::PerFactor { 0 } else { r.per_factor },
        if over == Coordinate::Loading { 0 } else { r.l.to_bits() },
        r.loading_mode,
        r.phi.to_bits(),
        if over == Coordinate::N { 0 } else { r.n },
    )
}

fn coordinate_value(r: &SweepRecord, over: Coordinate) -> u64 {
    match over {
        Coordinate::Q => r.q as u64,
        Coordinate::PerFactor => r.per_factor as u64,
        Coordinate::Loading => r.l.to_bits(),
        Coordinate::N => r.n as u64,
    }
}

/// Averages the delta statistics across one coordinate; the collapsed
/// coordinate is set to zero and diagnostics are summed.
pub fn collapse(records: &[SweepRecord], over: Coordinate) -> Result<Vec<SweepRecord>> {
    let mut groups: BTreeMap<_, Vec<&SweepRecord>> = BTreeMap::new();
    let mut first_seen = Vec::new();
    for r in records {
        let key = group_key(r, over);
        if !groups.contains_key(&key) {
            first_seen.push(key);
        }
        groups.entry(key).or_default().push(r);
    }
    let mut reference: Option<Vec<u64>> = None;
    let mut out = Vec::with_capacity(groups.len());
    for (ordinal, key) in first_seen.iter().enumerate() {
        let members = &groups[key];
        let mut values: Vec<u64> = members.iter().map(|r| coordinate_value(r, over)).collect();
        values.sort_unstable();
        match &reference {
            None => reference = Some(values),
            Some(v) if *v != values => {
                return Err(Error::InconsistentCoordinates(format!(
                    "group starting at record {} covers {} values of the collapsed coordinate, expected {}",
                    members[0].ordinal,
                    values.len(),
                    v.len()
                )))
            }
            Some(_) => {}
        }
        let k = members.len() as f64;
        let mean = |f: fn(&SweepRecord) -> f64| members.iter().map(|r| f(r)).sum::<f64>() / k;
        let first = members[0];
        out.push(SweepRecord {
            ordinal,
            q: if over == Coordinate::Q { 0 } else { first.q },
            per_factor: if over == Coordinate::PerFactor {
                0
            } else {
                first.per_factor
            },
            l: if over == Coordinate::Loading { 0.0 } else { first.l },
            n: if over == Coordinate::N { 0 } else { first.n },
            delta_r_mean: mean(|r| r.delta_r_mean),
            delta_b_mean: mean(|r| r.delta_b_mean),
            gap_mean: mean(|r| r.gap_mean),
            gap_sd: mean(|r| r.gap_sd),
            nonconverged: members.iter().map(|r| r.nonconverged).sum(),
            heywood_events: members.iter().map(|r| r.heywood_events).sum(),
            ..first.clone()
        });
    }
    Ok(out)
}

/// Loading thresholds per `(set, per_factor)` from population records
/// collapsed across q.
pub fn thresholds_from_records(collapsed: &[SweepRecord]) -> Result<Vec<(ModelSet, ThresholdResult)>> {
    let mut by_cell: BTreeMap<(ModelSet, usize), Vec<(f64, f64)>> = BTreeMap::new();
    for r in collapsed {
        if let Some(set) = r.set() {
            by_cell.entry((set, r.per_factor)).or_default().push((r.l, r.gap_mean));
        }
    }
    by_cell
        .into_iter()
        .map(|((set, per_factor), mut points)| {
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            let grid: Vec<f64> = points.iter().map(|p| p.0).collect();
            let gaps: Vec<f64> = points.iter().map(|p| p.1).collect();
            Ok((set, threshold_from_gaps(per_factor, &grid, &gaps)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::Threshold;

    fn small_population() -> PopulationGrid {
        PopulationGrid {
            sets: vec![ModelSet::Set1, ModelSet::Set3],
            q_values: vec![1, 2, 3],
            per_factor_values: (2..=6).collect(),
            ..PopulationGrid::default()
        }
    }

    #[test]
    fn population_records_have_population_diagnostics() {
        let records = run_population_sweep(&small_population()).unwrap();
        assert_eq!(records.len(), 2 * 3 * 5 * 15);
        for (i, r) in records.iter().enumerate() {
            assert_eq!(r.ordinal, i);
            assert_eq!((r.n, r.replications, r.nonconverged, r.heywood_events), (0, 1, 0, 0));
            assert_eq!(r.gap_mean, r.delta_r_mean - r.delta_b_mean);
        }
    }

    #[test]
    fn rule_of_thumb_small_loadings() {
        let grid = PopulationGrid {
            sets: vec![ModelSet::Set1],
            l_grid: Some(vec![0.40]),
            ..PopulationGrid::default()
        };
        for r in run_population_sweep(&grid).unwrap() {
            if r.per_factor <= 6 {
                assert!(r.gap_mean > 0.0, "{r:?}");
            }
        }
    }

    #[test]
    fn rule_of_thumb_large_loadings() {
        let grid = PopulationGrid {
            sets: vec![ModelSet::Set1],
            per_factor_values: vec![8, 9, 10],
            l_grid: Some(vec![0.80]),
            ..PopulationGrid::default()
        };
        for r in run_population_sweep(&grid).unwrap() {
            assert!(r.gap_mean < 0.0, "{r:?}");
        }
    }

    #[test]
    fn set1_and_set3_agree_in_sign_away_from_threshold() {
        let grid = PopulationGrid {
            sets: vec![ModelSet::Set1, ModelSet::Set3],
            ..PopulationGrid::default()
        };
        let records = run_population_sweep(&grid).unwrap();
        let half = records.len() / 2;
        let mut disagree = 0;
        for (a, b) in records[..half].iter().zip(&records[half..]) {
            assert_eq!((a.q, a.per_factor, a.l), (b.q, b.per_factor, b.l));
            if (a.gap_mean > 0.0) != (b.gap_mean > 0.0) {
                // sign flips only happen next to the threshold
                assert!(a.gap_mean.abs() < 1e-3 && b.gap_mean.abs() < 1e-3, "{a:?} vs {b:?}");
                assert!(a.q > 1);
                disagree += 1;
            }
        }
        assert!(disagree * 20 < half, "{disagree} of {half}");
    }

    #[test]
    fn two_per_factor_orthogonal_is_exact() {
        let grid = PopulationGrid {
            sets: vec![ModelSet::Set1, ModelSet::Set2],
            per_factor_values: vec![2],
            ..PopulationGrid::default()
        };
        for r in run_population_sweep(&grid).unwrap() {
            assert!(r.delta_b_mean < 1e-28, "{r:?}");
        }
    }

    #[test]
    fn collapse_across_q() {
        let records = run_population_sweep(&small_population()).unwrap();
        let collapsed = collapse(&records, Coordinate::Q).unwrap();
        assert_eq!(collapsed.len(), 2 * 5 * 15);
        assert!(collapsed.iter().all(|r| r.q == 0));
        let one = collapse(&records[..1], Coordinate::Q).unwrap();
        assert_eq!(one[0].gap_mean, records[0].gap_mean);
        assert_eq!(one[0].delta_r_mean, records[0].delta_r_mean);
    }

    #[test]
    fn collapse_rejects_unbalanced_groups() {
        let records = run_population_sweep(&small_population()).unwrap();
        let unbalanced: Vec<SweepRecord> = records
            .into_iter()
            .filter(|r| !(r.q == 3 && r.per_factor == 2))
            .collect();
        assert!(matches!(
            collapse(&unbalanced, Coordinate::Q),
            Err(Error::InconsistentCoordinates(_))
        ));
    }

    #[test]
    fn thresholds_non_increasing_for_set1() {
        let grid = PopulationGrid {
            sets: vec![ModelSet::Set1],
            q_values: vec![1, 2],
            per_factor_values: (2..=10).collect(),
            ..PopulationGrid::default()
        };
        let collapsed = collapse(&run_population_sweep(&grid).unwrap(), Coordinate::Q).unwrap();
        let th = thresholds_from_records(&collapsed).unwrap();
        assert_eq!(th[0].1.threshold, Threshold::Censored(0.95));
        let values: Vec<f64> = th
            .iter()
            .filter(|(_, t)| t.per_factor >= 3)
            .map(|(_, t)| t.threshold.value())
            .collect();
        assert!(values.windows(2).all(|w| w[1] <= w[0]), "{values:?}");
    }

    #[test]
    fn sample_grid_counts() {
        assert_eq!(SampleGrid::default().condition_count(), 720);
        assert_eq!(SampleCell::parse("q9_obl"), Some(SampleCell { q: 9, oblique: true }));
        assert_eq!(SampleCell::parse("q3_x"), None);
        assert_eq!(SampleCell::DEFAULT[2].label(), "q3_obl");
    }

    fn tiny_sample_grid() -> SampleGrid {
        SampleGrid {
            cells: vec![SampleCell { q: 1, oblique: false }, SampleCell { q: 3, oblique: true }],
            per_factor_values: vec![3, 4],
            l_levels: vec![0.6],
            loading_modes: vec![LoadingMode::Constant],
            n_levels: vec![200],
            replications: 6,
            master_seed: 11,
            ..SampleGrid::default()
        }
    }

    #[test]
    fn sample_sweep_is_deterministic_across_workers() {
        let grid = tiny_sample_grid();
        let a = with_workers(1, || run_sample_sweep(&grid, |_, _| {}).unwrap());
        let b = with_workers(4, || run_sample_sweep(&grid, |_, _| {}).unwrap());
        assert_eq!(a.len(), 4);
        assert_eq!(a, b);
        let other = SampleGrid {
            master_seed: 12,
            ..grid
        };
        let c = run_sample_sweep(&other, |_, _| {}).unwrap();
        assert_ne!(a[0].gap_mean, c[0].gap_mean);
    }

    #[test]
    fn sample_sweep_requires_two_replications() {
        let grid = SampleGrid {
            replications: 1,
            ..tiny_sample_grid()
        };
        assert!(run_sample_sweep(&grid, |_, _| {}).is_err());
    }

    #[test]
    fn aggregate_counts_failures() {
        let cond = tiny_sample_grid().conditions()[0];
        let ok = ReplicationOutcome::Completed {
            deltas: DeltaPair::new(0.3, 0.1),
            converged: false,
            heywood: 2,
        };
        let ok2 = ReplicationOutcome::Completed {
            deltas: DeltaPair::new(0.2, 0.2),
            converged: true,
            heywood: 0,
        };
        let rec = aggregate(&cond, &[ok, ReplicationOutcome::Failed, ok2]);
        assert_eq!(rec.replications, 3);
        assert_eq!(rec.nonconverged, 2);
        assert_eq!(rec.heywood_events, 2);
        assert!((rec.gap_mean - 0.1).abs() < 1e-15);
        assert!((rec.gap_sd - (0.02f64).sqrt()).abs() < 1e-12);
    }
}
