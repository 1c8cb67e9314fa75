//! Off-diagonal reproduction error of conventional and single-variable
//! predictors, and the loading threshold below which the single variable wins.

use std::ops::Range;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matops::SymMatrix;
use crate::model::{
    build_simple_structure, implied_sigma, select_single_variables, ModelSet, ModelSetSpec, PopulationModel,
};
use crate::predictors::{conventional_from_loadings, reproduce_from_weights, single_variable_weights};

/// Denominator of the mean of squared off-diagonal residuals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MsqDenominator {
    /// `p(p-1)`, the number of off-diagonal cells.
    #[default]
    OffDiagonal,
    /// `p²`, every cell including the zeroed diagonal.
    All,
}

impl MsqDenominator {
    pub fn count(self, p: usize) -> f64 {
        match self {
            MsqDenominator::OffDiagonal => (p * (p - 1)) as f64,
            MsqDenominator::All => (p * p) as f64,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MsqDenominator::OffDiagonal => "offdiag",
            MsqDenominator::All => "all",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "offdiag" => Some(MsqDenominator::OffDiagonal),
            "all" => Some(MsqDenominator::All),
            _ => None,
        }
    }
}

fn same_dims(a: &SymMatrix, b: &SymMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: format!("{0}x{0}", a.dim()),
            found: format!("{0}x{0}", b.dim()),
        });
    }
    Ok(())
}

/// Sum of squared off-diagonal differences.
pub fn offdiag_ssq(target: &SymMatrix, reproduced: &SymMatrix) -> Result<f64> {
    same_dims(target, reproduced)?;
    let p = target.dim();
    let mut ssq = 0.0;
    for j in 0..p {
        for i in 0..p {
            if i != j {
                let d = target[(i, j)] - reproduced[(i, j)];
                ssq += d * d;
            }
        }
    }
    Ok(ssq)
}

pub fn offdiag_msq(target: &SymMatrix, reproduced: &SymMatrix) -> Result<f64> {
    offdiag_msq_with(target, reproduced, MsqDenominator::OffDiagonal)
}

pub fn offdiag_msq_with(target: &SymMatrix, reproduced: &SymMatrix, denom: MsqDenominator) -> Result<f64> {
    if target.dim() < 2 {
        return Err(Error::DimensionMismatch {
            expected: "p >= 2".into(),
            found: format!("p = {}", target.dim()),
        });
    }
    Ok(offdiag_ssq(target, reproduced)? / denom.count(target.dim()))
}

/// Off-diagonal SSQ restricted to each diagonal block.
pub fn block_ssq(target: &SymMatrix, reproduced: &SymMatrix, blocks: &[Range<usize>]) -> Result<Vec<f64>> {
    same_dims(target, reproduced)?;
    Ok(blocks
        .iter()
        .map(|b| {
            let mut ssq = 0.0;
            for i in b.clone() {
                for j in b.clone() {
                    if i != j {
                        let d = target[(i, j)] - reproduced[(i, j)];
                        ssq += d * d;
                    }
                }
            }
            ssq
        })
        .collect())
}

pub fn equal_blocks(q: usize, per_factor: usize) -> Vec<Range<usize>> {
    (0..q).map(|f| f * per_factor..(f + 1) * per_factor).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaPair {
    pub delta_r: f64,
    pub delta_b: f64,
    pub gap: f64,
}

impl DeltaPair {
    pub fn new(delta_r: f64, delta_b: f64) -> Self {
        DeltaPair {
            delta_r,
            delta_b,
            gap: delta_r - delta_b,
        }
    }
}

/// Both reproductions of one covariance matrix.
#[derive(Debug, Clone)]
pub struct Reproductions {
    pub conventional: SymMatrix,
    pub single_variable: SymMatrix,
    pub chosen: Vec<usize>,
}

/// Reproduces `basis` with the conventional closed form on `conventional_loadings`
/// and with single variables chosen from `selection_loadings`.
pub fn reproductions(
    conventional_loadings: &DMatrix<f64>,
    selection_loadings: &DMatrix<f64>,
    basis: &SymMatrix,
) -> Result<Reproductions> {
    let conventional = conventional_from_loadings(conventional_loadings, basis)?;
    let selection = select_single_variables(selection_loadings)?;
    let single_variable = reproduce_from_weights(&single_variable_weights(&selection), basis)?.sigma_rep;
    Ok(Reproductions {
        conventional,
        single_variable,
        chosen: selection.chosen,
    })
}

impl Reproductions {
    pub fn deltas(&self, target: &SymMatrix, denom: MsqDenominator) -> Result<DeltaPair> {
        Ok(DeltaPair::new(
            offdiag_msq_with(target, &self.conventional, denom)?,
            offdiag_msq_with(target, &self.single_variable, denom)?,
        ))
    }
}

pub fn delta_pair(model: &PopulationModel, sigma: &SymMatrix) -> Result<DeltaPair> {
    delta_pair_with(model, sigma, MsqDenominator::OffDiagonal)
}

pub fn delta_pair_with(model: &PopulationModel, sigma: &SymMatrix, denom: MsqDenominator) -> Result<DeltaPair> {
    reproductions(&model.loadings, &model.loadings, sigma)?.deltas(sigma, denom)
}

/// Largest grid loading at which the single variable still wins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    At(f64),
    /// The single variable wins everywhere; carries the grid maximum.
    Censored(f64),
    /// The single variable wins nowhere; carries the grid minimum.
    BelowGrid(f64),
}

impl Threshold {
    pub fn value(self) -> f64 {
        match self {
            Threshold::At(v) | Threshold::Censored(v) | Threshold::BelowGrid(v) => v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdResult {
    pub per_factor: usize,
    pub threshold: Threshold,
    pub grid_step: f64,
}

/// Evenly spaced loadings from `lo` to `hi` inclusive.
pub fn loading_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n)
        .map(|k| ((lo + k as f64 * step) * 1e10).round() / 1e10)
        .collect()
}

pub fn default_loading_grid(set: ModelSet) -> Vec<f64> {
    loading_grid(0.25, set.max_grid_loading(), 0.05)
}

/// Threshold from gaps evaluated on an ascending grid.
pub fn threshold_from_gaps(per_factor: usize, grid: &[f64], gaps: &[f64]) -> Result<ThresholdResult> {
    if grid.is_empty() || grid.len() != gaps.len() {
        return Err(Error::EmptyGrid);
    }
    let last_positive = gaps.iter().rposition(|&g| g > 0.0);
    let threshold = match last_positive {
        None => Threshold::BelowGrid(grid[0]),
        Some(_) if gaps.iter().all(|&g| g > 0.0) => Threshold::Censored(grid[grid.len() - 1]),
        Some(k) => Threshold::At(grid[k]),
    };
    let grid_step = if grid.len() > 1 { grid[1] - grid[0] } else { 0.0 };
    Ok(ThresholdResult {
        per_factor,
        threshold,
        grid_step,
    })
}

pub fn threshold_scan(set: ModelSet, q: usize, per_factor: usize, l_grid: &[f64]) -> Result<ThresholdResult> {
    if l_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let gaps = l_grid
        .iter()
        .map(|&l| {
            let model = build_simple_structure(&ModelSetSpec::new(set, q, per_factor, l))?;
            let sigma = implied_sigma(&model)?;
            Ok(delta_pair(&model, &sigma)?.gap)
        })
        .collect::<Result<Vec<_>>>()?;
    threshold_from_gaps(per_factor, l_grid, &gaps)
}
