use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::Dataset;
use crate::error::{Error, Result};
use crate::numeric::{squared_euclidean, Matrix};

/// Gaussian blobs in a low-dimensional base space, lifted into a
/// higher-dimensional space by a seeded random affine map followed by tanh.
#[derive(Debug, Clone, PartialEq)]
pub struct BlobConfig {
    pub n_classes: usize,
    pub per_class: usize,
    pub base_dim: usize,
    pub lift_dim: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for BlobConfig {
    fn default() -> Self {
        Self {
            n_classes: 4,
            per_class: 200,
            base_dim: 2,
            lift_dim: 16,
            noise_sigma: 0.5,
            seed: 0,
        }
    }
}

impl BlobConfig {
    fn validate(&self) -> Result<()> {
        if self.n_classes == 0 || self.per_class == 0 || self.base_dim == 0 {
            return Err(Error::Config(
                "blob counts and dimensions must be positive".into(),
            ));
        }
        if self.lift_dim < self.base_dim {
            return Err(Error::Config(format!(
                "lift_dim {} is smaller than base_dim {}",
                self.lift_dim, self.base_dim
            )));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Config(format!(
                "invalid noise sigma {}",
                self.noise_sigma
            )));
        }
        Ok(())
    }

    /// Minimum pairwise distance between class centres.
    fn separation(&self) -> f64 {
        if self.noise_sigma > 0.0 {
            8.0 * self.noise_sigma
        } else {
            1.0
        }
    }
}

pub fn gen_blobs(config: &BlobConfig) -> Result<Dataset> {
    gen_blobs_with_base(config).map(|(ds, _)| ds)
}

/// Like [`gen_blobs`], also returning the pre-lift base coordinates.
pub fn gen_blobs_with_base(config: &BlobConfig) -> Result<(Dataset, Matrix)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let sep = config.separation();
    let centers = sample_centers(config, sep, &mut rng);

    // Largest centre coordinate; sets the lift scale.
    let radius = centers
        .iter()
        .flat_map(|c| c.iter().map(|v| v.abs()))
        .fold(sep, f64::max);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let lift_scale = 1.0 / (radius * (config.base_dim as f64).sqrt());
    let lift: Vec<f64> = (0..config.lift_dim * config.base_dim)
        .map(|_| std_normal.sample(&mut rng) * lift_scale * 1.5)
        .collect();
    let offset: Vec<f64> = (0..config.lift_dim)
        .map(|_| 0.25 * std_normal.sample(&mut rng))
        .collect();

    let noise =
        Normal::new(0.0, config.noise_sigma.max(0.0)).map_err(|e| Error::Config(e.to_string()))?;
    let n = config.n_classes * config.per_class;
    let mut base = Vec::with_capacity(n * config.base_dim);
    let mut features = Vec::with_capacity(n * config.lift_dim);
    let mut labels = Vec::with_capacity(n);
    for (class, center) in centers.iter().enumerate() {
        for _ in 0..config.per_class {
            let point: Vec<f64> = center
                .iter()
                .map(|&c| {
                    if config.noise_sigma > 0.0 {
                        c + noise.sample(&mut rng)
                    } else {
                        c
                    }
                })
                .collect();
            for r in 0..config.lift_dim {
                let row = &lift[r * config.base_dim..(r + 1) * config.base_dim];
                let z = row
                    .iter()
                    .zip(&point)
                    .fold(offset[r], |acc, (a, x)| acc + a * x);
                features.push(z.tanh());
            }
            base.extend_from_slice(&point);
            labels.push(class);
        }
    }
    let dataset = Dataset::new(
        format!(
            "blobs-{}x{}-seed{}",
            config.n_classes, config.per_class, config.seed
        ),
        Matrix::from_vec(n, config.lift_dim, features)?,
        Some(labels),
    )?;
    Ok((dataset, Matrix::from_vec(n, config.base_dim, base)?))
}

/// Rejection-samples centres in a box until all pairs are `sep` apart,
/// widening the box whenever a round of attempts fails.
fn sample_centers(config: &BlobConfig, sep: f64, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let per_axis = (config.n_classes as f64)
        .powf(1.0 / config.base_dim as f64)
        .ceil();
    let mut half_width = sep * per_axis.max(1.0);
    loop {
        let mut centers: Vec<Vec<f64>> = Vec::with_capacity(config.n_classes);
        let mut attempts = 0;
        while centers.len() < config.n_classes && attempts < 10_000 {
            attempts += 1;
            let c: Vec<f64> = (0..config.base_dim)
                .map(|_| rng.random_range(-half_width..=half_width))
                .collect();
            if centers
                .iter()
                .all(|o| squared_euclidean(o, &c) >= sep * sep)
            {
                centers.push(c);
            }
        }
        if centers.len() == config.n_classes {
            return centers;
        }
        half_width *= 1.5;
    }
}
