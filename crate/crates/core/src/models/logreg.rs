//! L2-regularized logistic regression trained by full-batch gradient
//! descent on mean cross-entropy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRegParams {
    pub learning_rate: f64,
    pub l2_penalty: f64,
    pub epochs: usize,
}

impl Default for LogRegParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            l2_penalty: 0.0,
            epochs: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub params: LogRegParams,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
pub(crate) fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Cross-entropy of label `y` under margin `z`.
pub(crate) fn log_loss(z: f64, y: f64) -> f64 {
    softplus(z) - y * z
}

fn margin(weights: &[f64], bias: f64, row: &[f64]) -> f64 {
    weights.iter().zip(row).map(|(w, x)| w * x).sum::<f64>() + bias
}

/// Mean cross-entropy plus `l2/2 * |w|^2`. The bias is not penalized.
pub fn objective(weights: &[f64], bias: f64, x: &[Vec<f64>], y: &[u8], l2: f64) -> f64 {
    let data: f64 = x
        .iter()
        .zip(y)
        .map(|(row, &t)| log_loss(margin(weights, bias, row), f64::from(t)))
        .sum::<f64>()
        / x.len() as f64;
    data + 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>()
}

/// Analytic gradient of [`objective`] with respect to (weights, bias).
pub fn gradient(weights: &[f64], bias: f64, x: &[Vec<f64>], y: &[u8], l2: f64) -> (Vec<f64>, f64) {
    let n = x.len() as f64;
    let mut gw = vec![0.0; weights.len()];
    let mut gb = 0.0;
    for (row, &t) in x.iter().zip(y) {
        let err = sigmoid(margin(weights, bias, row)) - f64::from(t);
        for (g, xi) in gw.iter_mut().zip(row) {
            *g += err * xi;
        }
        gb += err;
    }
    for (g, w) in gw.iter_mut().zip(weights) {
        *g = *g / n + l2 * w;
    }
    (gw, gb / n)
}

pub(crate) fn check_inputs(x: &[Vec<f64>], y: &[u8]) -> Result<usize> {
    if x.is_empty() {
        return Err(Error::InvalidData("training set has no rows".into()));
    }
    if x.len() != y.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            got: y.len(),
        });
    }
    let d = x[0].len();
    for row in x {
        if row.len() != d {
            return Err(Error::Dimension {
                expected: d,
                got: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite value in training data".into()));
        }
    }
    if let Some(bad) = y.iter().find(|&&t| t > 1) {
        return Err(Error::InvalidData(format!("label {bad} is not 0/1")));
    }
    Ok(d)
}

pub fn train_logreg(x: &[Vec<f64>], y: &[u8], params: &LogRegParams) -> Result<LogRegModel> {
    train_logreg_traced(x, y, params).map(|(m, _)| m)
}

/// Like [`train_logreg`], also returning the objective before the first
/// epoch and after each epoch.
pub fn train_logreg_traced(
    x: &[Vec<f64>],
    y: &[u8],
    params: &LogRegParams,
) -> Result<(LogRegModel, Vec<f64>)> {
    let d = check_inputs(x, y)?;
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut trace = Vec::with_capacity(params.epochs + 1);
    trace.push(objective(&w, b, x, y, params.l2_penalty));
    for _ in 0..params.epochs {
        let (gw, gb) = gradient(&w, b, x, y, params.l2_penalty);
        for (wi, g) in w.iter_mut().zip(&gw) {
            *wi -= params.learning_rate * g;
        }
        b -= params.learning_rate * gb;
        trace.push(objective(&w, b, x, y, params.l2_penalty));
    }
    Ok((
        LogRegModel {
            weights: w,
            bias: b,
            params: *params,
        },
        trace,
    ))
}

impl LogRegModel {
    pub fn predict_proba(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.weights.len() {
            return Err(Error::Dimension {
                expected: self.weights.len(),
                got: row.len(),
            });
        }
        Ok(sigmoid(margin(&self.weights, self.bias, row)))
    }

    pub fn predict(&self, row: &[f64], threshold: f64) -> Result<u8> {
        Ok(u8::from(self.predict_proba(row)? >= threshold))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model(weights: Vec<f64>, bias: f64) -> LogRegModel {
        LogRegModel { weights, bias, params: LogRegParams::default() }
    }

    #[test]
    fn probability_examples() {
        assert_eq!(model(vec![0.0, 0.0], 0.0).predict_proba(&[3.0, -2.0]).unwrap(), 0.5);
        assert!(model(vec![0.0], 1e3).predict_proba(&[1.0]).unwrap() > 1.0 - 1e-12);
        assert_eq!(model(vec![1.0], 0.0).predict_proba(&[0.0]).unwrap(), 0.5);
        assert_eq!(model(vec![1.0], 0.0).predict(&[0.0], 0.5).unwrap(), 1);
        assert!(matches!(
            model(vec![1.0], 0.0).predict_proba(&[0.0, 1.0]),
            Err(Error::Dimension { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn separable_data_is_learned() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (mut x, mut y) = (Vec::new(), Vec::new());
        while x.len() < 200 {
            let (a, b): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let s = a + 0.5 * b;
            if s.abs() < 0.05 {
                continue;
            }
            x.push(vec![a, b]);
            y.push(u8::from(s > 0.0));
        }
        let params = LogRegParams { learning_rate: 1.0, l2_penalty: 0.0, epochs: 2000 };
        let m = train_logreg(&x, &y, &params).unwrap();
        let correct = x.iter().zip(&y).filter(|(r, &t)| m.predict(r, 0.5).unwrap() == t).count();
        assert!(correct as f64 / 200.0 >= 0.99, "{correct}");
    }

    #[test]
    fn all_zero_labels() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 / 10.0 - 1.0]).collect();
        let y = vec![0u8; 20];
        let m = train_logreg(&x, &y, &LogRegParams::default()).unwrap();
        assert!(x.iter().all(|r| m.predict_proba(r).unwrap() < 0.5));
    }

    #[test]
    fn objective_never_increases_with_small_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<Vec<f64>> = (0..100).map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let y: Vec<u8> = (0..100).map(|_| rng.gen_range(0..2)).collect();
        let params = LogRegParams { learning_rate: 0.1, l2_penalty: 0.01, epochs: 300 };
        let (_, trace) = train_logreg_traced(&x, &y, &params).unwrap();
        assert!(trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn rejects_bad_input() {
        let p = LogRegParams::default();
        assert!(train_logreg(&[], &[], &p).is_err());
        assert!(train_logreg(&[vec![f64::NAN]], &[1], &p).is_err());
        assert!(train_logreg(&[vec![1.0]], &[1, 0], &p).is_err());
    }

    #[test]
    fn training_is_deterministic() {
        let x = vec![vec![0.1, 0.2], vec![-0.3, 0.5], vec![0.9, -0.4]];
        let y = vec![1, 0, 1];
        let p = LogRegParams::default();
        assert_eq!(train_logreg(&x, &y, &p).unwrap(), train_logreg(&x, &y, &p).unwrap());
    }
}
