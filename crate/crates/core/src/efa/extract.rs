use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matops::{invert_spd, sym_eigen_desc, SymMatrix};

use super::rotate::{promax, varimax, PROMAX_POWER};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfaOptions {
    pub max_iter: usize,
    /// Stop when the largest communality change falls below this.
    pub tol: f64,
    /// Smallest admissible uniqueness.
    pub heywood_floor: f64,
}

impl Default for EfaOptions {
    fn default() -> Self {
        EfaOptions {
            max_iter: 1000,
            tol: 1e-6,
            heywood_floor: 0.001,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rotation {
    None,
    Varimax,
    Promax(u32),
}

impl Rotation {
    pub fn promax() -> Self {
        Rotation::Promax(PROMAX_POWER)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EfaSolution {
    /// Rotated pattern; equals `unrotated` until a rotation is applied.
    pub loadings: DMatrix<f64>,
    pub unrotated: DMatrix<f64>,
    pub psi2_hat: Vec<f64>,
    pub phi_hat: SymMatrix,
    /// `loadings = unrotated · rotation`
    pub rotation: DMatrix<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Variables whose communality hit the Heywood ceiling in the final iteration.
    pub heywood_clamped: usize,
}

fn starting_communalities(r: &SymMatrix) -> Vec<f64> {
    let p = r.dim();
    match invert_spd(r) {
        Ok(inv) => (0..p).map(|i| 1.0 - 1.0 / inv[(i, i)]).collect(),
        Err(_) => (0..p)
            .map(|i| (0..p).filter(|&j| j != i).map(|j| r[(i, j)].abs()).fold(0.0, f64::max))
            .collect(),
    }
}

fn top_loadings(reduced: &SymMatrix, q: usize) -> DMatrix<f64> {
    let (values, vectors) = sym_eigen_desc(reduced);
    let mut l = DMatrix::zeros(reduced.dim(), q);
    for (k, value) in values.iter().take(q).enumerate() {
        let scale = value.max(0.0).sqrt();
        let mut col = vectors.column(k).into_owned() * scale;
        if col.sum() < 0.0 {
            col.neg_mut();
        }
        l.set_column(k, &col);
    }
    l
}

fn reduced_matrix(r: &SymMatrix, communalities: &[f64]) -> SymMatrix {
    let mut m = r.as_matrix().clone();
    for (i, &h) in communalities.iter().enumerate() {
        m[(i, i)] = h;
    }
    SymMatrix::new(m).expect("square")
}

/// Loadings from the top `q` eigenpairs of `r` with the given communalities on its diagonal.
pub fn loadings_for_communalities(r: &SymMatrix, communalities: &[f64], q: usize) -> DMatrix<f64> {
    top_loadings(&reduced_matrix(r, communalities), q)
}

/// Off-diagonal SSQ of `R - ΛΦΛ'`.
pub fn offdiag_residual_ssq(r: &SymMatrix, loadings: &DMatrix<f64>, phi: &SymMatrix) -> f64 {
    let fitted = loadings * phi.as_matrix() * loadings.transpose();
    let p = r.dim();
    let mut ssq = 0.0;
    for j in 0..p {
        for i in 0..p {
            if i != j {
                let d = r[(i, j)] - fitted[(i, j)];
                ssq += d * d;
            }
        }
    }
    ssq
}

/// Unweighted least squares (Minres) extraction by iterated principal axes.
///
/// Communalities start at the squared multiple correlations and are updated
/// to the row sums of squared loadings of the reduced matrix. A solution that
/// hits `max_iter` is returned with `converged = false`.
pub fn uls_extract(r: &SymMatrix, q: usize, opts: &EfaOptions) -> Result<EfaSolution> {
    let p = r.dim();
    if q == 0 || q >= p {
        return Err(Error::InvalidSpec(format!("need 0 < q < p, got q = {q}, p = {p}")));
    }
    let ceiling = 1.0 - opts.heywood_floor;
    let mut h: Vec<f64> = starting_communalities(r)
        .into_iter()
        .map(|v| v.clamp(0.0, ceiling))
        .collect();
    let mut loadings = DMatrix::zeros(p, q);
    let mut converged = false;
    let mut iterations = 0;
    let mut clamped = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        loadings = loadings_for_communalities(r, &h, q);
        clamped = 0;
        let mut max_change: f64 = 0.0;
        for (i, hi) in h.iter_mut().enumerate() {
            let mut next = loadings.row(i).norm_squared();
            if next > ceiling {
                next = ceiling;
                clamped += 1;
            }
            max_change = max_change.max((next - *hi).abs());
            *hi = next;
        }
        if max_change < opts.tol {
            converged = true;
            break;
        }
    }

    Ok(EfaSolution {
        loadings: loadings.clone(),
        unrotated: loadings,
        psi2_hat: h.iter().map(|c| 1.0 - c).collect(),
        phi_hat: SymMatrix::identity(q),
        rotation: DMatrix::identity(q, q),
        converged,
        iterations,
        heywood_clamped: clamped,
    })
}

/// Rotates the unrotated pattern of `solution`. A single factor is never rotated.
pub fn apply_rotation(mut solution: EfaSolution, rotation: Rotation) -> EfaSolution {
    let q = solution.unrotated.ncols();
    let (loadings, phi, t) = match rotation {
        _ if q < 2 => (
            solution.unrotated.clone(),
            SymMatrix::identity(q),
            DMatrix::identity(q, q),
        ),
        Rotation::None => (
            solution.unrotated.clone(),
            SymMatrix::identity(q),
            DMatrix::identity(q, q),
        ),
        Rotation::Varimax => {
            let (l, t) = varimax(&solution.unrotated);
            (l, SymMatrix::identity(q), t)
        }
        Rotation::Promax(power) => {
            let (l, phi, t) = promax(&solution.unrotated, power);
            (l, phi, t)
        }
    };
    solution.loadings = loadings;
    solution.phi_hat = phi;
    solution.rotation = t;
    solution
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::efa::{correlation_matrix, sample_data, SeedTrace};
    use crate::model::{build_simple_structure, implied_sigma, ModelSet, ModelSetSpec};
    use crate::predictors::conventional_from_loadings;

    fn sigma(set: ModelSet, q: usize, m: usize, l: f64) -> SymMatrix {
        implied_sigma(&build_simple_structure(&ModelSetSpec::new(set, q, m, l)).unwrap()).unwrap()
    }

    #[test]
    fn recovers_noiseless_one_factor() {
        let sol = uls_extract(&sigma(ModelSet::Set1, 1, 6, 0.6), 1, &EfaOptions::default()).unwrap();
        assert!(sol.converged);
        for i in 0..6 {
            assert!((sol.unrotated[(i, 0)] - 0.6).abs() < 1e-4, "{}", sol.unrotated[(i, 0)]);
            assert!((sol.psi2_hat[i] - 0.64).abs() < 1e-4);
        }
        assert_eq!(sol.heywood_clamped, 0);
    }

    #[test]
    fn noiseless_two_factor_reproduction_matches_population() {
        let model = build_simple_structure(&ModelSetSpec::new(ModelSet::Set2, 2, 4, 0.6)).unwrap();
        let s = implied_sigma(&model).unwrap();
        let sol = uls_extract(&s, 2, &EfaOptions::default()).unwrap();
        let a = conventional_from_loadings(&sol.unrotated, &s).unwrap();
        let b = conventional_from_loadings(&model.loadings, &s).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-6, "{}", a.max_abs_diff(&b));
    }

    #[test]
    fn degenerate_identity_input() {
        let r = SymMatrix::identity(4);
        let sol = uls_extract(&r, 3, &EfaOptions::default()).unwrap();
        let zero = DMatrix::zeros(4, 3);
        let phi = SymMatrix::identity(3);
        assert!(offdiag_residual_ssq(&r, &sol.unrotated, &phi) <= offdiag_residual_ssq(&r, &zero, &phi) + 1e-15);
        assert!(!sol.converged || sol.unrotated.abs().max() < 1e-3);
    }

    #[test]
    fn rejects_bad_factor_counts() {
        let r = SymMatrix::identity(3);
        assert!(uls_extract(&r, 0, &EfaOptions::default()).is_err());
        assert!(uls_extract(&r, 3, &EfaOptions::default()).is_err());
    }

    #[test]
    fn iteration_cap_flags_nonconvergence() {
        let opts = EfaOptions {
            max_iter: 2,
            tol: 1e-15,
            ..EfaOptions::default()
        };
        let sol = uls_extract(&sigma(ModelSet::Set1, 2, 3, 0.5), 2, &opts).unwrap();
        assert!(!sol.converged);
        assert_eq!(sol.iterations, 2);
    }

    #[test]
    fn heywood_case_is_clamped() {
        // three variables with a near-perfect pair forces communality to the ceiling
        let r = SymMatrix::from_row_slice(3, &[1.0, 0.99, 0.5, 0.99, 1.0, 0.5, 0.5, 0.5, 1.0]).unwrap();
        let sol = uls_extract(&r, 2, &EfaOptions::default()).unwrap();
        assert!(sol.psi2_hat.iter().all(|&u| u >= 0.001 - 1e-15));
    }

    #[test]
    fn local_minimum_in_uniquenesses() {
        for rep in 0..20 {
            let model = build_simple_structure(&ModelSetSpec::new(ModelSet::Set1, 2, 4, 0.6)).unwrap();
            let data = sample_data(&model, 300, SeedTrace::new(77, 0, rep)).unwrap();
            let r = correlation_matrix(&data).unwrap();
            let sol = uls_extract(&r, 2, &EfaOptions::default()).unwrap();
            if !sol.converged || sol.heywood_clamped > 0 {
                continue;
            }
            let phi = SymMatrix::identity(2);
            let h: Vec<f64> = sol.psi2_hat.iter().map(|u| 1.0 - u).collect();
            let base = offdiag_residual_ssq(&r, &loadings_for_communalities(&r, &h, 2), &phi);
            for i in 0..h.len() {
                for delta in [-0.01, 0.01] {
                    let mut hp = h.clone();
                    hp[i] -= delta;
                    let l = loadings_for_communalities(&r, &hp, 2);
                    let ssq = offdiag_residual_ssq(&r, &l, &phi);
                    assert!(ssq > base - 1e-8, "rep {rep} var {i}: {ssq} < {base}");
                }
            }
        }
    }

    #[test]
    fn rotation_preserves_fit() {
        let model = build_simple_structure(&ModelSetSpec::new(ModelSet::Set1, 3, 4, 0.6)).unwrap();
        let data = sample_data(&model, 400, SeedTrace::new(3, 1, 4)).unwrap();
        let r = correlation_matrix(&data).unwrap();
        let sol = uls_extract(&r, 3, &EfaOptions::default()).unwrap();
        let before = offdiag_residual_ssq(&r, &sol.unrotated, &SymMatrix::identity(3));
        let rotated = apply_rotation(sol.clone(), Rotation::Varimax);
        let after = offdiag_residual_ssq(&r, &rotated.loadings, &rotated.phi_hat);
        assert!((before - after).abs() < 1e-10);
        let oblique = apply_rotation(sol, Rotation::promax());
        let after = offdiag_residual_ssq(&r, &oblique.loadings, &oblique.phi_hat);
        assert!((before - after).abs() < 1e-10);
    }
}
