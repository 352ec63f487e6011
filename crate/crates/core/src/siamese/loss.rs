use crate::error::{Error, Result};

/// Pairwise regression loss applied to the clamped distance head.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// Mean squared error between target and predicted distance.
    Mse,
    /// Margin contrastive loss with margin α.
    Contrastive,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::Mse => "mse",
            LossKind::Contrastive => "contrastive",
        }
    }

    pub fn value(self, targets: &[f64], predictions: &[f64], alpha: f64) -> Result<f64> {
        match self {
            LossKind::Mse => mse_loss(targets, predictions),
            LossKind::Contrastive => contrastive_loss(targets, predictions, alpha),
        }
    }

    /// Loss value and its gradient with respect to each prediction.
    pub fn value_and_grad(
        self,
        targets: &[f64],
        predictions: &[f64],
        alpha: f64,
    ) -> Result<(f64, Vec<f64>)> {
        let value = self.value(targets, predictions, alpha)?;
        let scale = 2.0 / targets.len() as f64;
        let grad = targets
            .iter()
            .zip(predictions)
            .map(|(&t, &d)| match self {
                LossKind::Mse => scale * (d - t),
                LossKind::Contrastive => {
                    if t == 0.0 {
                        scale * d
                    } else if d < alpha {
                        -scale * (alpha - d)
                    } else {
                        0.0
                    }
                }
            })
            .collect();
        Ok((value, grad))
    }
}

fn check_lengths(op: &'static str, a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::shape(
            op,
            format!("{} targets vs {} predictions", a.len(), b.len()),
        ));
    }
    if a.is_empty() {
        return Err(Error::shape(op, "empty batch"));
    }
    Ok(())
}

/// `(1/B) Σ (yᵢ − ŷᵢ)²`.
pub fn mse_loss(targets: &[f64], predictions: &[f64]) -> Result<f64> {
    check_lengths("mse_loss", targets, predictions)?;
    let sum = targets
        .iter()
        .zip(predictions)
        .fold(0.0, |acc, (y, p)| acc + (y - p) * (y - p));
    Ok(sum / targets.len() as f64)
}

/// `(1/B) Σ (1−t)·d² + t·max(0, margin−d)²`, with `t = 1` for cannot-link
/// (non-zero target) and `t = 0` for must-link.
pub fn contrastive_loss(targets: &[f64], distances: &[f64], margin: f64) -> Result<f64> {
    check_lengths("contrastive_loss", targets, distances)?;
    let sum = targets.iter().zip(distances).fold(0.0, |acc, (&t, &d)| {
        if t == 0.0 {
            acc + d * d
        } else {
            let gap = (margin - d).max(0.0);
            acc + gap * gap
        }
    });
    Ok(sum / targets.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mse_examples() {
        assert_eq!(mse_loss(&[0.0, 100.0], &[0.0, 100.0]).unwrap(), 0.0);
        assert_eq!(mse_loss(&[0.0, 100.0], &[10.0, 90.0]).unwrap(), 100.0);
        assert!(mse_loss(&[0.0], &[0.0, 1.0]).is_err());
        assert!(mse_loss(&[], &[]).is_err());
    }

    #[test]
    fn mse_matches_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let y: Vec<f64> = (0..33).map(|_| rng.random_range(0.0..100.0)).collect();
        let p: Vec<f64> = (0..33).map(|_| rng.random_range(0.0..100.0)).collect();
        let mut s = 0.0;
        for i in 0..33 {
            s += (y[i] - p[i]).powi(2);
        }
        assert!((mse_loss(&y, &p).unwrap() - s / 33.0).abs() < 1e-9);
    }

    #[test]
    fn contrastive_examples() {
        assert_eq!(contrastive_loss(&[0.0], &[0.0], 100.0).unwrap(), 0.0);
        assert_eq!(contrastive_loss(&[100.0], &[100.0], 100.0).unwrap(), 0.0);
        assert_eq!(contrastive_loss(&[100.0], &[130.0], 100.0).unwrap(), 0.0);
        assert_eq!(contrastive_loss(&[100.0], &[40.0], 100.0).unwrap(), 3600.0);
        assert_eq!(
            contrastive_loss(&[0.0, 100.0], &[3.0, 40.0], 100.0).unwrap(),
            (9.0 + 3600.0) / 2.0
        );
    }

    #[test]
    fn gradients_match_finite_differences() {
        let h = 1e-6;
        let targets = [0.0, 100.0, 0.0, 100.0];
        let preds = [3.0, 40.0, 70.0, 99.0];
        for kind in [LossKind::Mse, LossKind::Contrastive] {
            let (_, grad) = kind.value_and_grad(&targets, &preds, 100.0).unwrap();
            for i in 0..4 {
                let mut up = preds;
                up[i] += h;
                let mut dn = preds;
                dn[i] -= h;
                let fd = (kind.value(&targets, &up, 100.0).unwrap()
                    - kind.value(&targets, &dn, 100.0).unwrap())
                    / (2.0 * h);
                assert!((fd - grad[i]).abs() <= 1e-5 * fd.abs().max(1.0));
            }
        }
    }
}
