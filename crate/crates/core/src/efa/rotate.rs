use nalgebra::DMatrix;

use crate::matops::{invert_spd, SymMatrix};

pub const PROMAX_POWER: u32 = 4;
const VARIMAX_TOL: f64 = 1e-8;
const VARIMAX_MAX_SWEEPS: usize = 100;

/// Raw varimax criterion: summed column variances of squared loadings.
pub fn varimax_criterion(loadings: &DMatrix<f64>) -> f64 {
    let p = loadings.nrows() as f64;
    loadings
        .column_iter()
        .map(|col| {
            let s2: f64 = col.iter().map(|x| x * x).sum();
            let s4: f64 = col.iter().map(|x| x.powi(4)).sum();
            s4 / p - (s2 / p).powi(2)
        })
        .sum()
}

fn row_norms(a: &DMatrix<f64>) -> Vec<f64> {
    a.row_iter()
        .map(|r| r.norm())
        .map(|h| if h > 0.0 { h } else { 1.0 })
        .collect()
}

fn rotate_pair(m: &mut DMatrix<f64>, j: usize, k: usize, cos: f64, sin: f64) {
    for i in 0..m.nrows() {
        let x = m[(i, j)];
        let y = m[(i, k)];
        m[(i, j)] = x * cos + y * sin;
        m[(i, k)] = -x * sin + y * cos;
    }
}

/// Varimax with Kaiser row normalization by pairwise planar rotations.
/// Returns the rotated pattern and the orthogonal `T` with `rotated = unrotated · T`.
pub fn varimax(unrotated: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let (p, q) = unrotated.shape();
    let mut t = DMatrix::identity(q, q);
    if q < 2 {
        return (unrotated.clone(), t);
    }
    let norms = row_norms(unrotated);
    let mut a = unrotated.clone();
    for (i, h) in norms.iter().enumerate() {
        a.row_mut(i).unscale_mut(*h);
    }

    let pf = p as f64;
    let mut criterion = varimax_criterion(&a);
    for _ in 0..VARIMAX_MAX_SWEEPS {
        for j in 0..q - 1 {
            for k in j + 1..q {
                let (mut sa, mut sb, mut sc, mut sd) = (0.0, 0.0, 0.0, 0.0);
                for i in 0..p {
                    let x = a[(i, j)];
                    let y = a[(i, k)];
                    let u = x * x - y * y;
                    let v = 2.0 * x * y;
                    sa += u;
                    sb += v;
                    sc += u * u - v * v;
                    sd += 2.0 * u * v;
                }
                let num = sd - 2.0 * sa * sb / pf;
                let den = sc - (sa * sa - sb * sb) / pf;
                let angle = 0.25 * num.atan2(den);
                if angle.abs() < 1e-15 {
                    continue;
                }
                let (sin, cos) = angle.sin_cos();
                rotate_pair(&mut a, j, k, cos, sin);
                rotate_pair(&mut t, j, k, cos, sin);
            }
        }
        let next = varimax_criterion(&a);
        let improvement = next - criterion;
        criterion = next;
        if improvement < VARIMAX_TOL {
            break;
        }
    }

    let mut rotated = unrotated * &t;
    for (k, mut col) in rotated.column_iter_mut().enumerate() {
        if col.sum() < 0.0 {
            col.neg_mut();
            t.column_mut(k).neg_mut();
        }
    }
    (rotated, t)
}

/// Promax: varimax, then an oblique least-squares fit to the sign-preserving
/// `power`-th power of the varimax pattern, with unit factor variances.
/// Returns the pattern, factor correlations, and the transform from the
/// unrotated pattern.
pub fn promax(unrotated: &DMatrix<f64>, power: u32) -> (DMatrix<f64>, SymMatrix, DMatrix<f64>) {
    let q = unrotated.ncols();
    let (vm, t_varimax) = varimax(unrotated);
    if q < 2 {
        return (vm, SymMatrix::identity(q), t_varimax);
    }
    let target = vm.map(|x| x * x.abs().powi(power as i32 - 1));
    let gram = SymMatrix::new(vm.transpose() * &vm).expect("square");
    let fallback = || (vm.clone(), SymMatrix::identity(q), t_varimax.clone());
    let Ok(gram_inv) = invert_spd(&gram) else {
        return fallback();
    };
    let u = gram_inv.as_matrix() * vm.transpose() * target;
    let Ok(utu_inv) = SymMatrix::new(u.transpose() * &u).and_then(|m| invert_spd(&m)) else {
        return fallback();
    };
    let scale = DMatrix::from_fn(q, q, |i, j| if i == j { utu_inv[(i, i)].sqrt() } else { 0.0 });
    let u = u * scale;
    let pattern = &vm * &u;
    let phi = match SymMatrix::new(u.transpose() * &u).and_then(|m| invert_spd(&m)) {
        Ok(m) => {
            let mut phi = m.into_inner();
            phi.fill_diagonal(1.0);
            SymMatrix::new(phi).expect("square")
        }
        Err(_) => return fallback(),
    };
    (pattern, phi, t_varimax * u)
}
