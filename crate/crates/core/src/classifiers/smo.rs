//! Binary soft-margin SVM trained in the dual by sequential minimal
//! optimization.
//!
//! The dual problem, in minimization form, is
//!
//! ```text
//! min  f(a) = 1/2 a'Qa - sum(a)     Q_ij = y_i y_j K(x_i, x_j)
//! s.t. 0 <= a_i <= C,  sum(y_i a_i) = 0
//! ```
//!
//! Each iteration picks the maximal violating pair (the index pair with the
//! largest KKT violation) and solves the two-variable subproblem in closed
//! form. Training stops when the violation drops below `tol` or the iteration
//! limit is reached.

use serde::{Deserialize, Serialize};

use super::kernel::KernelSpec;
use crate::error::{Error, Result};

/// Multipliers at or below this are not kept as support vectors.
pub const SUPPORT_THRESHOLD: f64 = 1e-8;
/// Tolerance on `|sum(a_i y_i)|` in the post-training feasibility check.
pub const EQUALITY_TOLERANCE: f64 = 1e-6;
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoParams {
    /// Box constraint C.
    pub c: f64,
    /// Stop when the maximal KKT violation `m(a) - M(a)` drops below this.
    pub tol: f64,
    /// Iteration limit; `None` means `10 * n`.
    pub max_iterations: Option<usize>,
}

impl Default for SmoParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            tol: 1e-3,
            max_iterations: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    IterationLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoReport {
    pub iterations: usize,
    pub termination: Termination,
    /// `m(a) - M(a)` at exit.
    pub max_violation: f64,
    /// Dual objective in maximization form, `sum(a) - 1/2 a'Qa`.
    pub dual_objective: f64,
}

/// A fitted binary SVM. Positive decision values vote for `label_pair.0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmBinaryModel {
    pub support_vectors: Vec<Vec<f64>>,
    /// `a_i * y_i` per support vector.
    pub dual_coefficients: Vec<f64>,
    pub bias: f64,
    pub kernel: KernelSpec,
    /// (class for y = +1, class for y = -1)
    pub label_pair: (usize, usize),
    pub c: f64,
}

impl SvmBinaryModel {
    pub fn decision_value(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.dual_coefficients)
            .map(|(sv, coef)| coef * self.kernel.eval(sv, x))
            .sum::<f64>()
            + self.bias
    }

    /// Class voted for by the sign of the decision value (zero votes positive).
    pub fn vote(&self, x: &[f64]) -> usize {
        if self.decision_value(x) >= 0.0 {
            self.label_pair.0
        } else {
            self.label_pair.1
        }
    }

    /// Box constraints `0 <= a_i <= C` and `|sum(a_i y_i)| <= 1e-6`.
    pub fn check_feasibility(&self) -> Result<()> {
        for &coef in &self.dual_coefficients {
            let alpha = coef.abs();
            if !(alpha >= 0.0 && alpha <= self.c) {
                return Err(Error::Infeasible(format!("multiplier {alpha} outside [0, {}]", self.c)));
            }
        }
        let balance: f64 = self.dual_coefficients.iter().sum();
        if balance.abs() > EQUALITY_TOLERANCE {
            return Err(Error::Infeasible(format!("sum(a_i y_i) = {balance:e}")));
        }
        Ok(())
    }
}

/// Full-precision kernel matrix, row-major.
fn kernel_matrix(xs: &[&[f64]], kernel: &KernelSpec) -> Vec<f64> {
    let n = xs.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = kernel.eval(xs[i], xs[j]);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

/// Train a binary SVM on points labeled `+1.0` / `-1.0`.
///
/// The returned model has passed [`SvmBinaryModel::check_feasibility`].
pub fn train_svm_binary(
    xs: &[&[f64]],
    ys: &[f64],
    kernel: KernelSpec,
    params: &SmoParams,
    label_pair: (usize, usize),
) -> Result<(SvmBinaryModel, SmoReport)> {
    kernel.validate()?;
    let n = xs.len();
    if ys.len() != n {
        return Err(Error::Domain(format!("{n} points but {} labels", ys.len())));
    }
    if let Some(y) = ys.iter().find(|&&y| y != 1.0 && y != -1.0) {
        return Err(Error::Domain(format!("binary labels must be +1 or -1, got {y}")));
    }
    if let Some(p) = xs.first().map(|x| x.len()) {
        if xs.iter().any(|x| x.len() != p) {
            return Err(Error::Domain("training points differ in dimension".into()));
        }
    }
    if !ys.contains(&1.0) || !ys.contains(&-1.0) {
        return Err(Error::DegenerateTraining("SVM training needs both labels present".into()));
    }
    if !(params.c.is_finite() && params.c > 0.0) {
        return Err(Error::Domain(format!("C must be positive, got {}", params.c)));
    }
    let c = params.c;
    let max_iterations = params.max_iterations.unwrap_or(10 * n);
    let k = kernel_matrix(xs, &kernel);
    let kk = |i: usize, j: usize| k[i * n + j];

    let mut alpha = vec![0.0; n];
    // Gradient of f: G = Qa - e.
    let mut grad = vec![-1.0; n];

    let in_up = |a: f64, y: f64| (y > 0.0 && a < c) || (y < 0.0 && a > 0.0);
    let in_low = |a: f64, y: f64| (y > 0.0 && a > 0.0) || (y < 0.0 && a < c);

    let mut iterations = 0;
    let (termination, max_violation) = loop {
        let mut i = usize::MAX;
        let mut m_up = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut m_low = f64::INFINITY;
        for t in 0..n {
            let v = -ys[t] * grad[t];
            if in_up(alpha[t], ys[t]) && v > m_up {
                m_up = v;
                i = t;
            }
            if in_low(alpha[t], ys[t]) && v < m_low {
                m_low = v;
                j = t;
            }
        }
        let violation = m_up - m_low;
        if i == usize::MAX || j == usize::MAX || violation < params.tol {
            break (Termination::Converged, violation.max(0.0));
        }
        if iterations >= max_iterations {
            break (Termination::IterationLimit, violation);
        }
        iterations += 1;

        // Move along d = (y_i, -y_j) on (a_i, a_j): keeps sum(y a) fixed.
        let curvature = (kk(i, i) + kk(j, j) - 2.0 * kk(i, j)).max(TAU);
        let mut step = violation / curvature;
        let limit_i = if ys[i] > 0.0 { c - alpha[i] } else { alpha[i] };
        let limit_j = if ys[j] > 0.0 { alpha[j] } else { c - alpha[j] };
        let mut clip_i = false;
        let mut clip_j = false;
        if step >= limit_i {
            step = limit_i;
            clip_i = true;
        }
        if step >= limit_j {
            step = limit_j;
            clip_j = true;
            clip_i = limit_i == limit_j;
        }
        if step <= 0.0 {
            break (Termination::Converged, violation);
        }

        alpha[i] += ys[i] * step;
        alpha[j] -= ys[j] * step;
        if clip_i {
            alpha[i] = if ys[i] > 0.0 { c } else { 0.0 };
        }
        if clip_j {
            alpha[j] = if ys[j] > 0.0 { 0.0 } else { c };
        }
        for t in 0..n {
            grad[t] += ys[t] * step * (kk(t, i) - kk(t, j));
        }
    };

    let rho = compute_rho(&alpha, &grad, ys, c);
    // f(a) = 1/2 sum a_t (G_t - 1); report the maximization-form value -f.
    let dual_objective = -0.5 * alpha.iter().zip(&grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>();

    let mut support_vectors = Vec::new();
    let mut dual_coefficients = Vec::new();
    for t in 0..n {
        if alpha[t] > SUPPORT_THRESHOLD {
            support_vectors.push(xs[t].to_vec());
            dual_coefficients.push(alpha[t] * ys[t]);
        }
    }
    let model = SvmBinaryModel {
        support_vectors,
        dual_coefficients,
        bias: -rho,
        kernel,
        label_pair,
        c,
    };
    model.check_feasibility()?;
    Ok((
        model,
        SmoReport {
            iterations,
            termination,
            max_violation,
            dual_objective,
        },
    ))
}

/// Offset from the KKT conditions: average of `y_t G_t` over free multipliers,
/// or the midpoint of the feasible interval when none are free.
fn compute_rho(alpha: &[f64], grad: &[f64], ys: &[f64], c: f64) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free_sum = 0.0;
    let mut n_free = 0usize;
    for t in 0..alpha.len() {
        let yg = ys[t] * grad[t];
        if alpha[t] >= c {
            if ys[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if ys[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            free_sum += yg;
        }
    }
    if n_free > 0 {
        free_sum / n_free as f64
    } else {
        (ub + lb) / 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fit(xs: &[Vec<f64>], ys: &[f64], kernel: KernelSpec, c: f64) -> (SvmBinaryModel, SmoReport) {
        let refs: Vec<&[f64]> = xs.iter().map(|x| x.as_slice()).collect();
        let params = SmoParams {
            c,
            tol: 1e-9,
            max_iterations: Some(100_000),
        };
        train_svm_binary(&refs, ys, kernel, &params, (1, 0)).unwrap()
    }

    #[test]
    fn two_points_put_boundary_at_midpoint() {
        let xs = vec![vec![-1.0], vec![1.0]];
        let (m, r) = fit(&xs, &[-1.0, 1.0], KernelSpec::Polynomial { degree: 1 }, 1e3);
        assert_eq!(r.termination, Termination::Converged);
        assert_eq!(m.support_vectors.len(), 2);
        assert!(m.decision_value(&[0.0]).abs() < 1e-9);
        assert!(m.decision_value(&[0.5]) > 0.0);
        assert!(m.decision_value(&[-0.5]) < 0.0);
        // hard-margin: f(+-1) = +-1
        assert!((m.decision_value(&[1.0]) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn xor_is_separable_with_rbf() {
        let xs = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]];
        let ys = [-1.0, -1.0, 1.0, 1.0];
        let (m, _) = fit(&xs, &ys, KernelSpec::Rbf { gamma: 1.0 }, 10.0);
        for (x, y) in xs.iter().zip(ys) {
            assert_eq!(m.decision_value(x).signum(), y);
        }
    }

    #[test]
    fn single_class_is_degenerate() {
        let xs = [vec![0.0], vec![1.0]];
        let refs: Vec<&[f64]> = xs.iter().map(|x| x.as_slice()).collect();
        let err = train_svm_binary(&refs, &[1.0, 1.0], KernelSpec::Rbf { gamma: 1.0 }, &SmoParams::default(), (1, 0))
            .unwrap_err();
        assert!(matches!(err, Error::DegenerateTraining(_)));
    }

    #[test]
    fn rejects_bad_labels_and_c() {
        let xs = [vec![0.0], vec![1.0]];
        let refs: Vec<&[f64]> = xs.iter().map(|x| x.as_slice()).collect();
        let k = KernelSpec::Rbf { gamma: 1.0 };
        assert!(train_svm_binary(&refs, &[1.0, 0.0], k, &SmoParams::default(), (1, 0)).is_err());
        let bad_c = SmoParams { c: 0.0, ..SmoParams::default() };
        assert!(train_svm_binary(&refs, &[1.0, -1.0], k, &bad_c, (1, 0)).is_err());
    }

    #[test]
    fn iteration_limit_is_reported() {
        let xs: Vec<Vec<f64>> = (0..20).map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()]).collect();
        let ys: Vec<f64> = (0..20).map(|i| if i % 3 == 0 { 1.0 } else { -1.0 }).collect();
        let refs: Vec<&[f64]> = xs.iter().map(|x| x.as_slice()).collect();
        let params = SmoParams {
            c: 10.0,
            tol: 1e-12,
            max_iterations: Some(2),
        };
        let (m, r) = train_svm_binary(&refs, &ys, KernelSpec::Rbf { gamma: 2.0 }, &params, (1, 0)).unwrap();
        assert_eq!(r.termination, Termination::IterationLimit);
        assert_eq!(r.iterations, 2);
        m.check_feasibility().unwrap();
    }

    #[test]
    fn feasibility_holds_on_noisy_data() {
        let xs: Vec<Vec<f64>> = (0..60)
            .map(|i| vec![((i * 7919) % 97) as f64 / 97.0, ((i * 104729) % 89) as f64 / 89.0])
            .collect();
        let ys: Vec<f64> = (0..60).map(|i| if (i * 31) % 7 < 3 { 1.0 } else { -1.0 }).collect();
        for kernel in [KernelSpec::Rbf { gamma: 3.0 }, KernelSpec::Polynomial { degree: 3 }] {
            for c in [0.1, 1.0, 10.0] {
                let (m, r) = fit(&xs, &ys, kernel, c);
                m.check_feasibility().unwrap();
                assert!(m.dual_coefficients.iter().all(|a| a.abs() <= c));
                assert!(r.dual_objective > 0.0);
            }
        }
    }
}
