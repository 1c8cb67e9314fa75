//! Factor score predictor weights and the covariances reproduced from them.
//!
//! A predictor `B'x` induces regression components with loading pattern
//! `A = ΣB(B'ΣB)^-1` and covariance `C = B'ΣB`; the observed covariances they
//! reproduce are `ACA' = ΣB(B'ΣB)^-1 B'Σ`. Regression, Bartlett and
//! Anderson-Rubin weights all reproduce the same matrix, `Λ(Λ'Σ^-1 Λ)^-1 Λ'`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matops::{inv_sqrt_spd, invert_spd, SymMatrix};
use crate::model::{PopulationModel, SingleVariableSelection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PredictorKind {
    Regression,
    Bartlett,
    AndersonRubin,
    SingleVariable,
}

/// A p × q weight matrix `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorWeights {
    pub kind: PredictorKind,
    pub b: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionComponents {
    /// Loading pattern `A`.
    pub a: DMatrix<f64>,
    /// Component covariance `C = B'ΣB`.
    pub c: SymMatrix,
}

/// Closed forms of the conventional reproduced covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConventionalForm {
    /// `Λ(Λ'Σ^-1 Λ)^-1 Λ'`
    Direct,
    /// `ΛΦΛ' + Λ(Λ'Ψ^-2 Λ)^-1 Λ'`
    Joreskog,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReproducedSource {
    FromWeights(PredictorKind),
    Conventional(ConventionalForm),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReproducedCov {
    pub sigma_rep: SymMatrix,
    pub source: ReproducedSource,
    /// Present when reproduced from weights.
    pub components: Option<RegressionComponents>,
}

fn check_sigma(model: &PopulationModel, sigma: &SymMatrix) -> Result<()> {
    if sigma.dim() != model.p() {
        return Err(Error::DimensionMismatch {
            expected: format!("{0}x{0} sigma", model.p()),
            found: format!("{0}x{0}", sigma.dim()),
        });
    }
    Ok(())
}

fn inv_psi2_times_loadings(model: &PopulationModel) -> DMatrix<f64> {
    let mut w = model.loadings.clone();
    for (i, mut row) in w.row_iter_mut().enumerate() {
        row /= model.psi2[i];
    }
    w
}

/// `B = Σ^-1 Λ Φ`
pub fn regression_weights(model: &PopulationModel, sigma: &SymMatrix) -> Result<PredictorWeights> {
    check_sigma(model, sigma)?;
    let inv = invert_spd(sigma)?;
    Ok(PredictorWeights {
        kind: PredictorKind::Regression,
        b: inv.as_matrix() * &model.loadings * model.phi.as_matrix(),
    })
}

/// `B = Ψ^-2 Λ (Λ'Ψ^-2 Λ)^-1`, the conditionally unbiased predictor.
pub fn bartlett_weights(model: &PopulationModel) -> Result<PredictorWeights> {
    let w = inv_psi2_times_loadings(model);
    let core = SymMatrix::new(model.loadings.transpose() * &w)?;
    let core_inv = invert_spd(&core).map_err(|_| Error::SingularLoadings)?;
    Ok(PredictorWeights {
        kind: PredictorKind::Bartlett,
        b: w * core_inv.as_matrix(),
    })
}

/// `B = Ψ^-2 Λ (Λ'Ψ^-2 Σ Ψ^-2 Λ)^(-1/2)`, giving uncorrelated unit-variance scores.
pub fn anderson_rubin_weights(model: &PopulationModel, sigma: &SymMatrix) -> Result<PredictorWeights> {
    check_sigma(model, sigma)?;
    let w = inv_psi2_times_loadings(model);
    let core = SymMatrix::new(w.transpose() * sigma.as_matrix() * &w)?;
    let root = inv_sqrt_spd(&core)?;
    Ok(PredictorWeights {
        kind: PredictorKind::AndersonRubin,
        b: w * root.as_matrix(),
    })
}

pub fn single_variable_weights(selection: &SingleVariableSelection) -> PredictorWeights {
    PredictorWeights {
        kind: PredictorKind::SingleVariable,
        b: selection.selector.clone(),
    }
}

pub fn regression_components(weights: &PredictorWeights, sigma: &SymMatrix) -> Result<RegressionComponents> {
    if weights.b.nrows() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} weight rows", sigma.dim()),
            found: format!("{}", weights.b.nrows()),
        });
    }
    let sb = sigma.as_matrix() * &weights.b;
    let c = SymMatrix::new(weights.b.transpose() * &sb)?;
    let c_inv = invert_spd(&c)?;
    Ok(RegressionComponents {
        a: sb * c_inv.as_matrix(),
        c,
    })
}

/// `Σ_r = ACA' = ΣB(B'ΣB)^-1 B'Σ`
pub fn reproduce_from_weights(weights: &PredictorWeights, sigma: &SymMatrix) -> Result<ReproducedCov> {
    let components = regression_components(weights, sigma)?;
    let sigma_rep = SymMatrix::new(&components.a * components.c.as_matrix() * components.a.transpose())?;
    Ok(ReproducedCov {
        sigma_rep,
        source: ReproducedSource::FromWeights(weights.kind),
        components: Some(components),
    })
}

/// `Λ(Λ'Σ^-1 Λ)^-1 Λ'` for arbitrary loadings, e.g. an estimated solution.
pub fn conventional_from_loadings(loadings: &DMatrix<f64>, sigma: &SymMatrix) -> Result<SymMatrix> {
    if loadings.nrows() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} loading rows", sigma.dim()),
            found: format!("{}", loadings.nrows()),
        });
    }
    let inv = invert_spd(sigma)?;
    let core = SymMatrix::new(loadings.transpose() * inv.as_matrix() * loadings)?;
    let core_inv = invert_spd(&core)?;
    SymMatrix::new(loadings * core_inv.as_matrix() * loadings.transpose())
}

pub fn conventional_reproduced(
    model: &PopulationModel,
    sigma: &SymMatrix,
    form: ConventionalForm,
) -> Result<ReproducedCov> {
    check_sigma(model, sigma)?;
    let sigma_rep = match form {
        ConventionalForm::Direct => conventional_from_loadings(&model.loadings, sigma)?,
        ConventionalForm::Joreskog => {
            let w = inv_psi2_times_loadings(model);
            let core = SymMatrix::new(model.loadings.transpose() * &w)?;
            let core_inv = invert_spd(&core).map_err(|_| Error::SingularLoadings)?;
            let middle = core_inv.as_matrix() + model.phi.as_matrix();
            SymMatrix::new(&model.loadings * middle * model.loadings.transpose())?
        }
    };
    Ok(ReproducedCov {
        sigma_rep,
        source: ReproducedSource::Conventional(form),
        components: None,
    })
}
