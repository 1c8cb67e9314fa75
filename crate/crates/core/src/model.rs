//! Population common factor models with perfect simple structure.

use std::fmt;

use nalgebra::DMatrix;

use crate::assign::max_weight_assignment;
use crate::error::{Error, Result};
use crate::matops::{spd_check, SymMatrix};

/// Offset of high/low salient loadings around the mean in variable mode.
pub const LOADING_SPREAD: f64 = 0.10;
/// Inter-factor correlation of the oblique model sets.
pub const OBLIQUE_PHI: f64 = 0.40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelSet {
    Set1,
    Set2,
    Set3,
    Set4,
}

impl ModelSet {
    pub const ALL: [ModelSet; 4] = [ModelSet::Set1, ModelSet::Set2, ModelSet::Set3, ModelSet::Set4];

    pub fn from_parts(mode: LoadingMode, oblique: bool) -> Self {
        match (mode, oblique) {
            (LoadingMode::Constant, false) => ModelSet::Set1,
            (LoadingMode::Variable, false) => ModelSet::Set2,
            (LoadingMode::Constant, true) => ModelSet::Set3,
            (LoadingMode::Variable, true) => ModelSet::Set4,
        }
    }

    pub fn number(self) -> u8 {
        match self {
            ModelSet::Set1 => 1,
            ModelSet::Set2 => 2,
            ModelSet::Set3 => 3,
            ModelSet::Set4 => 4,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        Self::ALL.get(usize::from(n).checked_sub(1)?).copied()
    }

    pub fn loading_mode(self) -> LoadingMode {
        match self {
            ModelSet::Set1 | ModelSet::Set3 => LoadingMode::Constant,
            ModelSet::Set2 | ModelSet::Set4 => LoadingMode::Variable,
        }
    }

    pub fn is_oblique(self) -> bool {
        matches!(self, ModelSet::Set3 | ModelSet::Set4)
    }

    pub fn phi_offdiag(self) -> f64 {
        if self.is_oblique() {
            OBLIQUE_PHI
        } else {
            0.0
        }
    }

    /// Largest mean loading on the default population grid.
    pub fn max_grid_loading(self) -> f64 {
        match self.loading_mode() {
            LoadingMode::Constant => 0.95,
            LoadingMode::Variable => 0.85,
        }
    }
}

impl fmt::Display for ModelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LoadingMode {
    Constant,
    Variable,
}

impl LoadingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            LoadingMode::Constant => "constant",
            LoadingMode::Variable => "variable",
        }
    }
}

impl fmt::Display for LoadingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One population model from the factorial grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSetSpec {
    pub set_id: ModelSet,
    pub q: usize,
    pub per_factor: usize,
    pub mean_loading: f64,
}

impl ModelSetSpec {
    pub fn new(set_id: ModelSet, q: usize, per_factor: usize, mean_loading: f64) -> Self {
        ModelSetSpec {
            set_id,
            q,
            per_factor,
            mean_loading,
        }
    }

    pub fn p(&self) -> usize {
        self.q * self.per_factor
    }

    pub fn loading_mode(&self) -> LoadingMode {
        self.set_id.loading_mode()
    }

    pub fn phi_offdiag(&self) -> f64 {
        self.set_id.phi_offdiag()
    }

    pub fn validate(&self) -> Result<()> {
        if self.q == 0 {
            return Err(Error::InvalidSpec("q must be at least 1".into()));
        }
        if self.per_factor == 0 {
            return Err(Error::InvalidSpec("per_factor must be at least 1".into()));
        }
        if !(self.mean_loading.is_finite() && self.mean_loading > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "mean loading {} must be positive",
                self.mean_loading
            )));
        }
        if self.loading_mode() == LoadingMode::Variable && self.mean_loading + LOADING_SPREAD >= 1.0 {
            return Err(Error::InvalidSpec(format!(
                "variable loadings need mean + {LOADING_SPREAD} < 1, got mean {}",
                self.mean_loading
            )));
        }
        Ok(())
    }

    /// Salient loadings of one factor block.
    pub fn block_loadings(&self) -> Vec<f64> {
        let l = self.mean_loading;
        (0..self.per_factor)
            .map(|k| match self.loading_mode() {
                LoadingMode::Constant => l,
                LoadingMode::Variable if k % 2 == 0 => l + LOADING_SPREAD,
                LoadingMode::Variable => l - LOADING_SPREAD,
            })
            .collect()
    }
}

/// Loadings, factor correlations and uniquenesses in correlation metric.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationModel {
    pub loadings: DMatrix<f64>,
    pub phi: SymMatrix,
    pub psi2: Vec<f64>,
}

impl PopulationModel {
    /// Builds a model whose uniquenesses are `1 - communality`.
    pub fn from_loadings(loadings: DMatrix<f64>, phi: SymMatrix) -> Result<Self> {
        if phi.dim() != loadings.ncols() {
            return Err(Error::DimensionMismatch {
                expected: format!("phi of dim {}", loadings.ncols()),
                found: format!("dim {}", phi.dim()),
            });
        }
        let common = &loadings * phi.as_matrix() * loadings.transpose();
        let mut psi2 = Vec::with_capacity(loadings.nrows());
        for i in 0..loadings.nrows() {
            let h = common[(i, i)];
            if h >= 1.0 {
                return Err(Error::CommunalityAtLeastOne {
                    variable: i,
                    communality: h,
                });
            }
            psi2.push(1.0 - h);
        }
        if !spd_check(&phi).is_pd {
            return Err(Error::InvalidSpec(
                "factor correlation matrix is not positive definite".into(),
            ));
        }
        Ok(PopulationModel { loadings, phi, psi2 })
    }

    pub fn p(&self) -> usize {
        self.loadings.nrows()
    }

    pub fn q(&self) -> usize {
        self.loadings.ncols()
    }

    /// `Λ Φ Λ'`
    pub fn common_part(&self) -> SymMatrix {
        SymMatrix::new(&self.loadings * self.phi.as_matrix() * self.loadings.transpose())
            .expect("square by construction")
    }
}

pub fn equicorrelated_phi(q: usize, rho: f64) -> SymMatrix {
    SymMatrix::new(DMatrix::from_fn(q, q, |i, j| if i == j { 1.0 } else { rho })).expect("square")
}

/// Block-diagonal loading pattern with `per_factor` salients per factor.
pub fn build_simple_structure(spec: &ModelSetSpec) -> Result<PopulationModel> {
    spec.validate()?;
    let block = spec.block_loadings();
    let mut loadings = DMatrix::zeros(spec.p(), spec.q);
    for f in 0..spec.q {
        for (k, &l) in block.iter().enumerate() {
            loadings[(f * spec.per_factor + k, f)] = l;
        }
    }
    PopulationModel::from_loadings(loadings, equicorrelated_phi(spec.q, spec.phi_offdiag()))
}

/// `Σ = ΛΦΛ' + Ψ²` with the diagonal set exactly to one.
pub fn implied_sigma(model: &PopulationModel) -> Result<SymMatrix> {
    let mut sigma = model.common_part().into_inner();
    for (i, &u) in model.psi2.iter().enumerate() {
        sigma[(i, i)] += u;
    }
    let unit = sigma.diagonal().iter().all(|d| (d - 1.0).abs() < 1e-12);
    if unit {
        sigma.fill_diagonal(1.0);
    }
    let sigma = SymMatrix::new(sigma)?;
    let check = spd_check(&sigma);
    if !check.is_pd {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: check.min_eigenvalue,
            tolerance: check.tolerance,
        });
    }
    Ok(sigma)
}

/// One observed variable per factor, used as that factor's score.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleVariableSelection {
    /// Zero-based variable index per factor.
    pub chosen: Vec<usize>,
    /// p × q selector with exactly one 1 per column.
    pub selector: DMatrix<f64>,
}

/// Picks a distinct variable per factor maximizing the total absolute loading.
pub fn select_single_variables(loadings: &DMatrix<f64>) -> Result<SingleVariableSelection> {
    let (p, q) = loadings.shape();
    if p < q {
        return Err(Error::DimensionMismatch {
            expected: format!("at least {q} variables"),
            found: format!("{p}"),
        });
    }
    let weights = DMatrix::from_fn(q, p, |f, i| loadings[(i, f)].abs());
    let chosen = max_weight_assignment(&weights);
    let mut selector = DMatrix::zeros(p, q);
    for (f, &i) in chosen.iter().enumerate() {
        selector[(i, f)] = 1.0;
    }
    Ok(SingleVariableSelection { chosen, selector })
}
