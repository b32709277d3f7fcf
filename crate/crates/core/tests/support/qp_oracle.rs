//! Brute-force solver for the binary SVM dual, independent of the SMO code.
//!
//! Accelerated projected gradient (FISTA with gradient-based restart) on
//! `min 1/2 a'Qa - sum(a)` over `{0 <= a <= C, y'a = 0}`. The projection is
//! found by bisection on the multiplier of the equality constraint.

#![allow(dead_code)]

pub enum OracleKernel {
    Rbf(f64),
    Poly(u32),
}

impl OracleKernel {
    pub fn eval(&self, x: &[f64], z: &[f64]) -> f64 {
        match *self {
            OracleKernel::Rbf(gamma) => {
                let d2: f64 = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
                (-gamma * d2).exp()
            }
            OracleKernel::Poly(d) => {
                let dot: f64 = x.iter().zip(z).map(|(a, b)| a * b).sum();
                (dot + 1.0).powi(d as i32)
            }
        }
    }
}

pub struct OracleSolution {
    pub alpha: Vec<f64>,
    pub dual_objective: f64,
    pub bias: f64,
}

impl OracleSolution {
    pub fn decision(&self, xs: &[Vec<f64>], ys: &[f64], kernel: &OracleKernel, x: &[f64]) -> f64 {
        xs.iter()
            .zip(ys)
            .zip(&self.alpha)
            .map(|((xi, yi), ai)| ai * yi * kernel.eval(xi, x))
            .sum::<f64>()
            + self.bias
    }
}

fn project(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let at = |mu: f64| -> Vec<f64> { v.iter().zip(y).map(|(vi, yi)| (vi - mu * yi).clamp(0.0, c)).collect() };
    let balance = |a: &[f64]| -> f64 { a.iter().zip(y).map(|(ai, yi)| ai * yi).sum() };
    // balance(mu) is nonincreasing in mu
    let span = v.iter().map(|x| x.abs()).fold(0.0, f64::max) + c + 1.0;
    let (mut lo, mut hi) = (-span, span);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if balance(&at(mid)) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

pub fn solve(xs: &[Vec<f64>], ys: &[f64], kernel: &OracleKernel, c: f64) -> OracleSolution {
    let n = xs.len();
    let q: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| ys[i] * ys[j] * kernel.eval(&xs[i], &xs[j])).collect())
        .collect();
    let grad = |a: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| q[i].iter().zip(a).map(|(qij, aj)| qij * aj).sum::<f64>() - 1.0)
            .collect()
    };
    let objective = |a: &[f64]| -> f64 {
        let qa: f64 = (0..n)
            .map(|i| a[i] * q[i].iter().zip(a).map(|(qij, aj)| qij * aj).sum::<f64>())
            .sum();
        0.5 * qa - a.iter().sum::<f64>()
    };
    // largest eigenvalue by power iteration, padded for safety
    let mut u = vec![1.0; n];
    let mut lambda = 0.0;
    for _ in 0..500 {
        let w: Vec<f64> = (0..n).map(|i| q[i].iter().zip(&u).map(|(a, b)| a * b).sum()).collect();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        lambda = norm;
        u = w.into_iter().map(|x| x / norm).collect();
    }
    let step = 1.0 / (1.01 * lambda).max(1e-12);
    // stationarity: distance between a and its projected unit gradient step
    let residual = |a: &[f64]| -> f64 {
        let g = grad(a);
        let v: Vec<f64> = a.iter().zip(&g).map(|(x, gi)| x - gi).collect();
        project(&v, ys, c).iter().zip(a).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    };

    let mut a = vec![0.0; n];
    let mut z = a.clone();
    let mut t = 1.0f64;
    for iter in 0..1_000_000usize {
        if iter % 50 == 0 && residual(&a) < 1e-10 {
            break;
        }
        let g = grad(&z);
        let v: Vec<f64> = z.iter().zip(&g).map(|(zi, gi)| zi - step * gi).collect();
        let next = project(&v, ys, c);
        // gradient-based restart: drop momentum when it points uphill
        let uphill: f64 = (0..n).map(|i| (z[i] - next[i]) * (next[i] - a[i])).sum();
        if uphill > 0.0 {
            t = 1.0;
            z = next.clone();
        } else {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            z = next
                .iter()
                .zip(&a)
                .map(|(x, y)| x + (t - 1.0) / t_next * (x - y))
                .collect();
            t = t_next;
        }
        a = next;
    }

    let g = grad(&a);
    let eps = 1e-6 * c;
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free_sum, mut free_n) = (0.0, 0usize);
    for i in 0..n {
        let yg = ys[i] * g[i];
        let at_upper = a[i] >= c - eps;
        let at_lower = a[i] <= eps;
        if (at_upper && ys[i] < 0.0) || (at_lower && ys[i] > 0.0) {
            ub = ub.min(yg);
        } else if at_upper || at_lower {
            lb = lb.max(yg);
        } else {
            free_sum += yg;
            free_n += 1;
        }
    }
    let rho = if free_n > 0 { free_sum / free_n as f64 } else { 0.5 * (ub + lb) };
    OracleSolution {
        dual_objective: -objective(&a),
        alpha: a,
        bias: -rho,
    }
}
