//! Multinomial logistic regression fitted by regularized maximum likelihood.
//!
//! With K classes present in training, classes `0..K-1` each carry an
//! intercept plus one coefficient per feature and the last class is pinned at
//! zero. The objective is the mean negative log-likelihood plus
//! `lambda/2 * sum(beta_jk^2)` over non-intercept coefficients, minimized by
//! full-batch gradient descent. Each iteration tries a Barzilai-Borwein step
//! and backtracks until the Armijo condition holds.

use serde::{Deserialize, Serialize};

use super::{present_classes, TieRule};
use crate::error::{Error, Result};
use crate::preprocess::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogitConfig {
    pub lambda: f64,
    /// Stop when the gradient's max-norm falls below this.
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for LogitConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-4,
            tol: 1e-5,
            max_iterations: 5000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogitTermination {
    Converged,
    IterationLimit,
    /// Backtracking could not find a decreasing step.
    LineSearchStalled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogitReport {
    pub iterations: usize,
    pub termination: LogitTermination,
    pub gradient_norm: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitModel {
    /// Number of output classes (binning classes, or 2 for a threshold model).
    pub n_classes: usize,
    /// Output class of each fitted class, ascending; the last is the pinned one.
    pub classes: Vec<usize>,
    /// `classes.len() - 1` rows of `[intercept, beta_1, ..., beta_p]`.
    pub coefficients: Vec<Vec<f64>>,
    pub lambda: f64,
    pub tie_rule: TieRule,
    /// IRI threshold for two-class models from [`train_binary_logit`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iri_threshold: Option<f64>,
}

/// The training objective over a fixed design, exposed for gradient checks.
#[derive(Debug, Clone)]
pub struct LogitObjective {
    /// Row-major `n x p`.
    features: Vec<f64>,
    labels: Vec<usize>,
    n: usize,
    p: usize,
    k: usize,
    lambda: f64,
}

impl LogitObjective {
    /// `labels` index into `0..n_classes`; class `n_classes - 1` is pinned.
    pub fn new(rows: &[&[f64]], labels: &[usize], n_classes: usize, lambda: f64) -> Result<Self> {
        if rows.len() != labels.len() || rows.is_empty() {
            return Err(Error::Domain(format!(
                "need equal, nonzero numbers of rows and labels ({} vs {})",
                rows.len(),
                labels.len()
            )));
        }
        if n_classes < 2 {
            return Err(Error::DegenerateTraining("logistic regression needs at least two classes".into()));
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::Domain(format!("label {l} out of range for {n_classes} classes")));
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::Domain(format!("lambda must be nonnegative, got {lambda}")));
        }
        let p = rows[0].len();
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::Domain("rows differ in dimension".into()));
        }
        Ok(Self {
            features: rows.iter().flat_map(|r| r.iter().copied()).collect(),
            labels: labels.to_vec(),
            n: rows.len(),
            p,
            k: n_classes,
            lambda,
        })
    }

    /// Parameters: `(n_classes - 1) * (p + 1)`, class-major.
    pub fn n_params(&self) -> usize {
        (self.k - 1) * (self.p + 1)
    }

    pub fn value(&self, theta: &[f64]) -> f64 {
        self.evaluate(theta, None)
    }

    pub fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.n_params()];
        self.evaluate(theta, Some(&mut g));
        g
    }

    /// Objective value; fills `grad` when given.
    pub fn evaluate(&self, theta: &[f64], mut grad: Option<&mut [f64]>) -> f64 {
        let (n, p, k) = (self.n, self.p, self.k);
        let stride = p + 1;
        if let Some(g) = grad.as_deref_mut() {
            g.fill(0.0);
        }
        let mut scores = vec![0.0; k];
        let mut nll = 0.0;
        for i in 0..n {
            let x = &self.features[i * p..(i + 1) * p];
            for c in 0..k - 1 {
                let beta = &theta[c * stride..(c + 1) * stride];
                scores[c] = beta[0] + beta[1..].iter().zip(x).map(|(b, xi)| b * xi).sum::<f64>();
            }
            scores[k - 1] = 0.0;
            let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for s in scores.iter_mut() {
                *s = (*s - max).exp();
                total += *s;
            }
            let y = self.labels[i];
            nll += total.ln() - (scores[y].ln());
            if let Some(g) = grad.as_deref_mut() {
                for c in 0..k - 1 {
                    let residual = scores[c] / total - if c == y { 1.0 } else { 0.0 };
                    let gc = &mut g[c * stride..(c + 1) * stride];
                    gc[0] += residual;
                    for (gj, xi) in gc[1..].iter_mut().zip(x) {
                        *gj += residual * xi;
                    }
                }
            }
        }
        let inv_n = 1.0 / n as f64;
        let mut penalty = 0.0;
        for c in 0..k - 1 {
            for j in 1..stride {
                let b = theta[c * stride + j];
                penalty += b * b;
            }
        }
        if let Some(g) = grad {
            for c in 0..k - 1 {
                g[c * stride] *= inv_n;
                for j in 1..stride {
                    g[c * stride + j] = g[c * stride + j] * inv_n + self.lambda * theta[c * stride + j];
                }
            }
        }
        nll * inv_n + 0.5 * self.lambda * penalty
    }

    /// Gradient descent with Barzilai-Borwein trial steps and Armijo
    /// backtracking, from all-zero parameters.
    pub fn minimize(&self, tol: f64, max_iterations: usize) -> (Vec<f64>, LogitReport) {
        const ARMIJO: f64 = 1e-4;
        let m = self.n_params();
        let mut theta = vec![0.0; m];
        let mut grad = vec![0.0; m];
        let mut f = self.evaluate(&theta, Some(&mut grad));
        let mut step = 1.0;
        let mut cand = vec![0.0; m];
        let mut cand_grad = vec![0.0; m];
        let mut iterations = 0;
        let norm_inf = |g: &[f64]| g.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let termination = loop {
            if norm_inf(&grad) < tol {
                break LogitTermination::Converged;
            }
            if iterations >= max_iterations {
                break LogitTermination::IterationLimit;
            }
            iterations += 1;
            let g2: f64 = grad.iter().map(|g| g * g).sum();
            let mut accepted = None;
            while step > 1e-20 {
                for ((c, t), g) in cand.iter_mut().zip(&theta).zip(&grad) {
                    *c = t - step * g;
                }
                let fc = self.evaluate(&cand, Some(&mut cand_grad));
                if fc <= f - ARMIJO * step * g2 {
                    accepted = Some(fc);
                    break;
                }
                step *= 0.5;
            }
            let Some(fc) = accepted else {
                break LogitTermination::LineSearchStalled;
            };
            let mut ss = 0.0;
            let mut sy = 0.0;
            for i in 0..m {
                let s = cand[i] - theta[i];
                ss += s * s;
                sy += s * (cand_grad[i] - grad[i]);
            }
            std::mem::swap(&mut theta, &mut cand);
            std::mem::swap(&mut grad, &mut cand_grad);
            f = fc;
            step = if sy > 0.0 { (ss / sy).clamp(1e-10, 1e10) } else { step * 2.0 };
        };
        let report = LogitReport {
            iterations,
            termination,
            gradient_norm: norm_inf(&grad),
            objective: f,
        };
        (theta, report)
    }
}

fn fit(
    rows: &[&[f64]],
    labels: &[usize],
    output_classes: usize,
    config: &LogitConfig,
) -> Result<(LogitModel, LogitReport)> {
    let classes = present_classes(labels);
    if classes.len() < 2 {
        return Err(Error::DegenerateTraining(format!(
            "logistic regression needs at least two classes, found {}",
            classes.len()
        )));
    }
    let index: Vec<usize> = labels
        .iter()
        .map(|l| classes.binary_search(l).expect("label is present"))
        .collect();
    let objective = LogitObjective::new(rows, &index, classes.len(), config.lambda)?;
    let (theta, report) = objective.minimize(config.tol, config.max_iterations);
    let stride = objective.p + 1;
    let coefficients = theta.chunks(stride).map(|c| c.to_vec()).collect();
    Ok((
        LogitModel {
            n_classes: output_classes,
            classes,
            coefficients,
            lambda: config.lambda,
            tie_rule: TieRule::LowestClass,
            iri_threshold: None,
        },
        report,
    ))
}

/// Multiclass model over the dataset's IRI classes. Classes absent from the
/// training data are never predicted.
pub fn train_logit(train: &Dataset, config: &LogitConfig) -> Result<(LogitModel, LogitReport)> {
    let labels = train.classes()?;
    let rows: Vec<&[f64]> = train.rows().collect();
    if rows.is_empty() {
        return Err(Error::DegenerateTraining("no training rows".into()));
    }
    fit(&rows, &labels, train.binning.n_classes(), config)
}

/// Two-class model: class 0 for IRI at or below `iri_threshold`, class 1 above.
pub fn train_binary_logit(train: &Dataset, iri_threshold: f64, config: &LogitConfig) -> Result<(LogitModel, LogitReport)> {
    let labels: Vec<usize> = train
        .vectors
        .iter()
        .map(|v| usize::from(v.label_iri > iri_threshold))
        .collect();
    let above = labels.iter().filter(|&&l| l == 1).count();
    let below = labels.len() - above;
    if above == 0 || below == 0 {
        return Err(Error::DegenerateTraining(format!(
            "threshold {iri_threshold} leaves one side empty ({below} at or below, {above} above)"
        )));
    }
    let rows: Vec<&[f64]> = train.rows().collect();
    let (mut model, report) = fit(&rows, &labels, 2, config)?;
    model.iri_threshold = Some(iri_threshold);
    Ok((model, report))
}

impl LogitModel {
    pub fn dimension(&self) -> usize {
        self.coefficients.first().map_or(0, |c| c.len() - 1)
    }

    /// Linear score of each fitted class (the pinned class scores zero).
    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dimension() {
            return Err(Error::Domain(format!(
                "model expects {} features, got {}",
                self.dimension(),
                x.len()
            )));
        }
        let mut s: Vec<f64> = self
            .coefficients
            .iter()
            .map(|b| b[0] + b[1..].iter().zip(x).map(|(bj, xj)| bj * xj).sum::<f64>())
            .collect();
        s.push(0.0);
        Ok(s)
    }

    /// Softmax over the scores, mapped onto all output classes.
    pub fn predict(&self, x: &[f64]) -> Result<(usize, Vec<f64>)> {
        let scores = self.scores(x)?;
        let probs = softmax(&scores);
        let mut out = vec![0.0; self.n_classes];
        for (&k, p) in self.classes.iter().zip(&probs) {
            out[k] = *p;
        }
        let mut ranked = vec![f64::NEG_INFINITY; self.n_classes];
        for (&k, s) in self.classes.iter().zip(&scores) {
            ranked[k] = *s;
        }
        Ok((self.tie_rule.argmax_f64(&ranked), out))
    }

    /// Per-feature log-odds coefficients of the rough (above-threshold) class
    /// against the smooth class, for two-class models.
    pub fn rough_coefficients(&self) -> Result<Vec<f64>> {
        if self.classes != [0, 1] || self.coefficients.len() != 1 {
            return Err(Error::Domain(format!(
                "importance needs a two-class model, got {} fitted classes",
                self.classes.len()
            )));
        }
        // class 1 is pinned, so row 0 holds the smooth-vs-rough log-odds
        Ok(self.coefficients[0][1..].iter().map(|b| -b).collect())
    }
}

/// Numerically stable softmax.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(coefficients: Vec<Vec<f64>>, classes: Vec<usize>, n_classes: usize) -> LogitModel {
        LogitModel {
            n_classes,
            classes,
            coefficients,
            lambda: 0.0,
            tie_rule: TieRule::LowestClass,
            iri_threshold: None,
        }
    }

    #[test]
    fn zero_coefficients_are_uniform() {
        let m = model(vec![vec![0.0; 3]; 3], vec![0, 1, 2, 3], 4);
        let (k, p) = m.predict(&[0.3, -1.0]).unwrap();
        assert_eq!(k, 0);
        assert!(p.iter().all(|&q| (q - 0.25).abs() < 1e-15));
    }

    #[test]
    fn softmax_shift_invariance() {
        let s = [0.3, -1.2, 2.5, 0.0];
        let shifted: Vec<f64> = s.iter().map(|v| v + 17.25).collect();
        for (a, b) in softmax(&s).iter().zip(softmax(&shifted)) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((softmax(&s).iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn absent_classes_get_zero_probability() {
        let m = model(vec![vec![1.0, 0.5]], vec![3, 7], 10);
        let (k, p) = m.predict(&[1.0]).unwrap();
        assert_eq!(k, 3);
        assert_eq!(p.iter().filter(|&&q| q > 0.0).count(), 2);
        assert!(m.predict(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn objective_rejects_bad_input() {
        let rows: Vec<&[f64]> = vec![&[1.0], &[2.0]];
        assert!(LogitObjective::new(&rows, &[0, 1], 1, 0.0).is_err());
        assert!(LogitObjective::new(&rows, &[0, 2], 2, 0.0).is_err());
        assert!(LogitObjective::new(&rows, &[0], 2, 0.0).is_err());
        assert!(LogitObjective::new(&rows, &[0, 1], 2, -1.0).is_err());
    }

    #[test]
    fn separable_data_stays_finite_with_ridge() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64 / 10.0 - 2.0]).collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let labels: Vec<usize> = rows.iter().map(|r| usize::from(r[0] > 0.0)).collect();
        let obj = LogitObjective::new(&refs, &labels, 2, 1e-2).unwrap();
        let (theta, report) = obj.minimize(1e-8, 100_000);
        assert_eq!(report.termination, LogitTermination::Converged);
        assert!(theta.iter().all(|t| t.is_finite() && t.abs() < 100.0));
    }

    #[test]
    fn rough_coefficients_need_two_classes() {
        let m = model(vec![vec![0.0, 1.0], vec![0.0, 2.0]], vec![0, 1, 2], 3);
        assert!(m.rough_coefficients().is_err());
        let b = model(vec![vec![0.5, 1.0, -2.0]], vec![0, 1], 2);
        assert_eq!(b.rough_coefficients().unwrap(), vec![-1.0, 2.0]);
    }
}
