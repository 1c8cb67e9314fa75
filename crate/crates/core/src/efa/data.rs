use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matops::{cholesky_lower, SymMatrix};
use crate::model::PopulationModel;

/// Coordinates that fully determine a replication's random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedTrace {
    pub master_seed: u64,
    pub condition: u64,
    pub replication: u64,
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SeedTrace {
    pub fn new(master_seed: u64, condition: u64, replication: u64) -> Self {
        SeedTrace {
            master_seed,
            condition,
            replication,
        }
    }

    /// ChaCha keyed by a hash of the three coordinates.
    pub fn rng(&self) -> ChaCha8Rng {
        let k0 = splitmix64(self.master_seed);
        let k1 = splitmix64(k0 ^ self.condition);
        let k2 = splitmix64(k1 ^ self.replication);
        let k3 = splitmix64(k2);
        let mut key = [0u8; 32];
        for (chunk, word) in key.chunks_exact_mut(8).zip([k0, k1, k2, k3]) {
            chunk.copy_from_slice(&word.to_le_bytes());
        }
        ChaCha8Rng::from_seed(key)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub n: usize,
    pub p: usize,
    /// n × p observations.
    pub values: DMatrix<f64>,
    /// `None` for ingested data.
    pub seed_trace: Option<SeedTrace>,
}

impl Dataset {
    pub fn from_values(values: DMatrix<f64>) -> Self {
        Dataset {
            n: values.nrows(),
            p: values.ncols(),
            values,
            seed_trace: None,
        }
    }
}

/// Draws `n` rows of `x = Λf + e` with `f ~ N(0, Φ)` and `e ~ N(0, Ψ²)`.
pub fn sample_data(model: &PopulationModel, n: usize, trace: SeedTrace) -> Result<Dataset> {
    let (p, q) = (model.p(), model.q());
    if n < p + 1 {
        return Err(Error::InvalidSpec(format!("sample size {n} must exceed p = {p}")));
    }
    let phi_chol = cholesky_lower(&model.phi)?;
    let mixing = &model.loadings * &phi_chol;
    let unique_sd: Vec<f64> = model.psi2.iter().map(|u| u.sqrt()).collect();

    let mut rng = trace.rng();
    let mut values = DMatrix::zeros(n, p);
    let mut z = vec![0.0; q];
    for r in 0..n {
        for zk in z.iter_mut() {
            *zk = StandardNormal.sample(&mut rng);
        }
        for i in 0..p {
            let e: f64 = StandardNormal.sample(&mut rng);
            let common: f64 = (0..q).map(|k| mixing[(i, k)] * z[k]).sum();
            values[(r, i)] = common + unique_sd[i] * e;
        }
    }
    Ok(Dataset {
        n,
        p,
        values,
        seed_trace: Some(trace),
    })
}

pub fn correlation_matrix(data: &Dataset) -> Result<SymMatrix> {
    correlation_from_values(&data.values)
}

/// Pearson correlations of the columns of an n × p matrix.
pub fn correlation_from_values(values: &DMatrix<f64>) -> Result<SymMatrix> {
    let (n, p) = values.shape();
    if n < 2 {
        return Err(Error::InvalidSpec(format!("need at least 2 observations, got {n}")));
    }
    let mut centered = values.clone();
    for (j, mut col) in centered.column_iter_mut().enumerate() {
        let mean = col.sum() / n as f64;
        col.add_scalar_mut(-mean);
        let ss = col.norm_squared();
        if !(ss > 0.0 && ss.is_finite()) {
            return Err(Error::ZeroVarianceColumn { column: j });
        }
        col /= ss.sqrt();
    }
    let mut r = centered.transpose() * &centered;
    for i in 0..p {
        for j in 0..p {
            r[(i, j)] = r[(i, j)].clamp(-1.0, 1.0);
        }
        r[(i, i)] = 1.0;
    }
    SymMatrix::new(r)
}
