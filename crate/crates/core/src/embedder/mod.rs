//! The feed-forward embedder mapping input vectors to `k`-dimensional points.
//!
//! Hidden layers use ReLU; the final feature-space layer is linear.

mod model_file;

pub use model_file::{load_model, read_model, save_model, write_model, FORMAT_VERSION, MAGIC};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::numeric::{Activation, DenseCache, DenseGrads, DenseLayer, Matrix};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbedderConfig {
    pub hidden: Vec<usize>,
    pub embedding_dim: usize,
    pub seed: u64,
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        Self {
            hidden: vec![64, 32],
            embedding_dim: 2,
            seed: 0,
        }
    }
}

impl EmbedderConfig {
    pub fn validate(&self, input_dim: usize) -> Result<()> {
        if input_dim == 0 {
            return Err(Error::Config("input dimension must be at least 1".into()));
        }
        if self.embedding_dim == 0 {
            return Err(Error::Config(
                "embedding dimension must be at least 1".into(),
            ));
        }
        if let Some(i) = self.hidden.iter().position(|&h| h == 0) {
            return Err(Error::Config(format!("hidden layer {i} has zero width")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbedderNet {
    layers: Vec<DenseLayer>,
}

impl EmbedderNet {
    /// He-initialized weights (N(0, 2/fan_in)) and zero biases, drawn from a
    /// ChaCha8 stream seeded by `config.seed`.
    pub fn init(input_dim: usize, config: &EmbedderConfig) -> Result<Self> {
        config.validate(input_dim)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut dims = Vec::with_capacity(config.hidden.len() + 2);
        dims.push(input_dim);
        dims.extend_from_slice(&config.hidden);
        dims.push(config.embedding_dim);

        let last = dims.len() - 2;
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, pair)| {
                let (fan_in, fan_out) = (pair[0], pair[1]);
                let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt())
                    .map_err(|e| Error::Config(e.to_string()))?;
                let weights: Vec<f64> = (0..fan_in * fan_out)
                    .map(|_| normal.sample(&mut rng))
                    .collect();
                let activation = if i == last {
                    Activation::Linear
                } else {
                    Activation::Relu
                };
                DenseLayer::new(
                    Matrix::from_vec(fan_out, fan_in, weights)?,
                    vec![0.0; fan_out],
                    activation,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { layers })
    }

    /// Assembles a network from explicit layers, checking that dimensions chain
    /// and that the last layer is linear.
    pub fn from_layers(layers: Vec<DenseLayer>) -> Result<Self> {
        let Some(last) = layers.last() else {
            return Err(Error::Config("an embedder needs at least one layer".into()));
        };
        if last.activation() != Activation::Linear {
            return Err(Error::Config(
                "the feature-space layer must be linear".into(),
            ));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::shape(
                    "EmbedderNet::from_layers",
                    format!(
                        "layer {i} emits {} values but layer {} expects {}",
                        pair[0].out_dim(),
                        i + 1,
                        pair[1].in_dim()
                    ),
                ));
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn embedding_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    /// Flat sizes of every parameter tensor, in [`EmbedderNet::params_mut`] order.
    pub fn param_sizes(&self) -> Vec<usize> {
        self.layers
            .iter()
            .flat_map(|l| [l.in_dim() * l.out_dim(), l.out_dim()])
            .collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.params_mut())
            .collect()
    }

    /// Maps each row of `x` to its embedding.
    pub fn embed(&self, x: &Matrix) -> Result<Matrix> {
        self.check_input(x)?;
        let mut h = x.clone();
        for layer in &self.layers {
            h = layer.apply(&h)?;
        }
        Ok(h)
    }

    pub fn forward(&self, x: &Matrix) -> Result<(Matrix, Vec<DenseCache>)> {
        self.check_input(x)?;
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for layer in &self.layers {
            let (y, cache) = layer.forward(&h)?;
            caches.push(cache);
            h = y;
        }
        Ok((h, caches))
    }

    /// Backpropagates `upstream` (gradient w.r.t. the embeddings) and returns
    /// per-layer gradients in layer order.
    pub fn backward(&self, caches: &[DenseCache], upstream: &Matrix) -> Result<Vec<DenseGrads>> {
        if caches.len() != self.layers.len() {
            return Err(Error::shape(
                "EmbedderNet::backward",
                format!("{} caches for {} layers", caches.len(), self.layers.len()),
            ));
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut g = upstream.clone();
        for (layer, cache) in self.layers.iter().zip(caches).rev() {
            let lg = layer.backward(cache, &g)?;
            g = lg.input.clone();
            grads.push(lg);
        }
        grads.reverse();
        Ok(grads)
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.input_dim() {
            return Err(Error::shape(
                "embed",
                format!(
                    "input has {} columns, embedder expects {}",
                    x.cols(),
                    self.input_dim()
                ),
            ));
        }
        Ok(())
    }
}

/// Flattens layer gradients into the order used by [`EmbedderNet::params_mut`].
pub fn flatten_grads(grads: &[DenseGrads]) -> Vec<&[f64]> {
    grads
        .iter()
        .flat_map(|g| [g.weights.as_slice(), g.biases.as_slice()])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn config(hidden: Vec<usize>, k: usize, seed: u64) -> EmbedderConfig {
        EmbedderConfig {
            hidden,
            embedding_dim: k,
            seed,
        }
    }

    #[test]
    fn same_seed_same_network() {
        let c = config(vec![8, 4], 2, 3);
        assert_eq!(
            EmbedderNet::init(5, &c).unwrap(),
            EmbedderNet::init(5, &c).unwrap()
        );
        let other = config(vec![8, 4], 2, 4);
        assert_ne!(
            EmbedderNet::init(5, &c).unwrap(),
            EmbedderNet::init(5, &other).unwrap()
        );
    }

    #[test]
    fn dense_text_architecture_chains() {
        let net = EmbedderNet::init(300, &config(vec![512, 256, 128, 64], 16, 0)).unwrap();
        let dims: Vec<(usize, usize)> = net
            .layers()
            .iter()
            .map(|l| (l.in_dim(), l.out_dim()))
            .collect();
        assert_eq!(
            dims,
            vec![(300, 512), (512, 256), (256, 128), (128, 64), (64, 16)]
        );
        assert_eq!(net.embedding_dim(), 16);
        let acts: Vec<Activation> = net.layers().iter().map(|l| l.activation()).collect();
        assert_eq!(acts[..4], [Activation::Relu; 4]);
        assert_eq!(acts[4], Activation::Linear);
        assert!(net
            .layers()
            .iter()
            .all(|l| l.biases().iter().all(|&b| b == 0.0)));
    }

    #[test]
    fn he_variance() {
        let net = EmbedderNet::init(1000, &config(vec![], 1000, 21)).unwrap();
        let w = net.layers()[0].weights().as_slice();
        let n = w.len() as f64;
        let mean = w.iter().sum::<f64>() / n;
        let var = w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let target = 2.0 / 1000.0;
        assert!((var - target).abs() / target < 0.10, "variance {var}");
    }

    #[test]
    fn rejects_invalid_configs() {
        assert!(EmbedderNet::init(4, &config(vec![3], 0, 0)).is_err());
        assert!(EmbedderNet::init(0, &config(vec![3], 2, 0)).is_err());
        assert!(EmbedderNet::init(4, &config(vec![3, 0], 2, 0)).is_err());
    }

    #[test]
    fn single_row_shape() {
        let net = EmbedderNet::init(6, &config(vec![5], 3, 1)).unwrap();
        let y = net.embed(&Matrix::zeros(1, 6)).unwrap();
        assert_eq!(y.shape(), (1, 3));
        assert!(net.embed(&Matrix::zeros(1, 5)).is_err());
    }

    #[test]
    fn zero_network_embeds_to_origin() {
        let net = EmbedderNet::from_layers(vec![
            DenseLayer::zeros(3, 4, Activation::Relu),
            DenseLayer::zeros(4, 2, Activation::Linear),
        ])
        .unwrap();
        let x = Matrix::from_rows(&[[1.0, 2.0, 3.0], [-1.0, 0.0, 9.0]]).unwrap();
        assert!(net.embed(&x).unwrap().as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn from_layers_validates() {
        assert!(EmbedderNet::from_layers(vec![]).is_err());
        assert!(EmbedderNet::from_layers(vec![DenseLayer::zeros(3, 2, Activation::Relu)]).is_err());
        assert!(EmbedderNet::from_layers(vec![
            DenseLayer::zeros(3, 4, Activation::Relu),
            DenseLayer::zeros(5, 2, Activation::Linear),
        ])
        .is_err());
    }

    #[test]
    fn batches_are_independent_and_order_equivariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = EmbedderNet::init(4, &config(vec![6], 2, 9)).unwrap();
        let rows: Vec<Vec<f64>> = (0..7)
            .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let a = Matrix::from_rows(&rows[..3]).unwrap();
        let b = Matrix::from_rows(&rows[3..]).unwrap();
        let joint = net.embed(&a.vstack(&b).unwrap()).unwrap();
        let split = net
            .embed(&a)
            .unwrap()
            .vstack(&net.embed(&b).unwrap())
            .unwrap();
        assert_eq!(joint, split);

        let perm = [4, 0, 6, 2, 1, 5, 3];
        let all = Matrix::from_rows(&rows).unwrap();
        let permuted = net.embed(&all.select_rows(&perm)).unwrap();
        assert_eq!(permuted, joint.select_rows(&perm));
    }
}
