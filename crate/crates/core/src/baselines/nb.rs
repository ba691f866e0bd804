use serde::{Deserialize, Serialize};

use super::{check_dim, check_training, BaselineError, FeatureInput, Result};
use crate::linalg::DenseMatrix;
use crate::util::argmax;

/// Bernoulli naive Bayes with add-one smoothing:
/// `P(f=1|c) = (count(f=1, c) + 1) / (n_c + 2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbModel {
    pub log_prior: Vec<f64>,
    /// k x d, `ln P(f_j = 1 | c)`.
    pub log_present: DenseMatrix,
    /// k x d, `ln P(f_j = 0 | c)`.
    pub log_absent: DenseMatrix,
    /// Score of the all-zero input per class: prior plus every absent term.
    base: Vec<f64>,
}

pub fn train_nb<X: FeatureInput>(x: &[X], y: &[usize], k: usize) -> Result<NbModel> {
    let d = check_training(x, y, k)?;
    let mut class_n = vec![0usize; k];
    let mut counts = DenseMatrix::zeros(k, d);
    for (v, &c) in x.iter().zip(y) {
        class_n[c] += 1;
        let row = counts.row_mut(c);
        v.for_each_active(|j, value| {
            if value != 0.0 {
                row[j] += 1.0;
            }
        });
    }
    if let Some(empty) = class_n.iter().position(|&n| n == 0) {
        return Err(BaselineError::EmptyClass(empty));
    }
    let n = x.len() as f64;
    let log_prior: Vec<f64> = class_n.iter().map(|&c| (c as f64 / n).ln()).collect();
    let mut log_present = DenseMatrix::zeros(k, d);
    let mut log_absent = DenseMatrix::zeros(k, d);
    for c in 0..k {
        let denom = class_n[c] as f64 + 2.0;
        for j in 0..d {
            let p = (counts[(c, j)] + 1.0) / denom;
            log_present[(c, j)] = p.ln();
            log_absent[(c, j)] = (1.0 - p).ln();
        }
    }
    let base = (0..k).map(|c| log_prior[c] + log_absent.row(c).iter().sum::<f64>()).collect();
    Ok(NbModel { log_prior, log_present, log_absent, base })
}

/// Joint log score `ln P(c) + Σ_j ln P(f_j = x_j | c)` over all features.
pub fn nb_log_scores<X: FeatureInput>(model: &NbModel, x: &X) -> Result<Vec<f64>> {
    check_dim(model.log_present.cols(), x.dim())?;
    let mut scores = model.base.clone();
    for (c, s) in scores.iter_mut().enumerate() {
        let (present, absent) = (model.log_present.row(c), model.log_absent.row(c));
        x.for_each_active(|j, v| *s += v * (present[j] - absent[j]));
    }
    Ok(scores)
}

impl NbModel {
    pub fn num_classes(&self) -> usize {
        self.log_prior.len()
    }

    pub fn predict<X: FeatureInput>(&self, x: &X) -> Result<usize> {
        Ok(argmax(&nb_log_scores(self, x)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::SparseBinaryVector;

    fn sv(idx: &[usize], d: usize) -> SparseBinaryVector {
        SparseBinaryVector::new(idx.to_vec(), d).unwrap()
    }

    #[test]
    fn hand_computed_scores() {
        let x = vec![sv(&[0], 2), sv(&[0], 2), sv(&[1], 2)];
        let m = train_nb(&x, &[0, 0, 1], 2).unwrap();
        let s = nb_log_scores(&m, &sv(&[0], 2)).unwrap();
        let a: f64 = 2.0 / 3.0 * 0.75 * 0.75;
        let b = (1.0f64 / 3.0).powi(3);
        assert!((s[0] - a.ln()).abs() < 1e-12);
        assert!((s[1] - b.ln()).abs() < 1e-12);
        assert_eq!(m.predict(&sv(&[0], 2)).unwrap(), 0);
    }

    #[test]
    fn single_class_and_zero_input() {
        let x = vec![sv(&[0, 2], 3), sv(&[1], 3)];
        let m = train_nb(&x, &[0, 0], 1).unwrap();
        assert_eq!(m.predict(&sv(&[], 3)).unwrap(), 0);
        let m2 = train_nb(&x, &[0, 1], 2).unwrap();
        assert!(nb_log_scores(&m2, &sv(&[], 3)).unwrap().iter().all(|s| s.is_finite()));
        assert!(m2.predict(&sv(&[], 4)).is_err());
        assert_eq!(train_nb(&x, &[0, 0], 2).unwrap_err(), BaselineError::EmptyClass(1));
    }

    #[test]
    fn probabilities_in_open_interval() {
        let x = vec![sv(&[0], 2), sv(&[0, 1], 2), sv(&[], 2)];
        let m = train_nb(&x, &[0, 0, 1], 2).unwrap();
        assert!(m.log_present.as_slice().iter().all(|&l| l < 0.0 && l.is_finite()));
        let prior_sum: f64 = m.log_prior.iter().map(|l| l.exp()).sum();
        assert!((prior_sum - 1.0).abs() < 1e-12);
    }
}
