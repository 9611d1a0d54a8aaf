//! L2-regularized binary logistic regression.
//!
//! Inputs are standardized with statistics of the training rows. The fitted
//! objective over standardized features `u` is
//!
//! ```text
//! J(w, b) = 0.5 * ||w||^2 + C * sum_i [ log(1 + exp(s_i)) - y_i * s_i ],  s_i = w.u_i + b
//! ```
//!
//! with the intercept `b` unpenalized. It is minimized by Newton steps with
//! Armijo backtracking, so `J` decreases monotonically; the fit is certified
//! converged once `max |grad J| <= tol`.

use serde::{Deserialize, Serialize};

use crate::dataset::Label;
use crate::error::{AscfError, Result};

/// Per-dimension `(x - mean) / scale`; zero-variance dimensions map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    /// Population standard deviation; 0 marks a constant dimension.
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit<X: AsRef<[f64]>>(rows: &[X]) -> Self {
        let n = rows.len() as f64;
        let d = rows.first().map_or(0, |r| r.as_ref().len());
        let mean: Vec<f64> = (0..d)
            .map(|j| rows.iter().map(|r| r.as_ref()[j]).sum::<f64>() / n)
            .collect();
        let scale = (0..d)
            .map(|j| {
                let var = rows
                    .iter()
                    .map(|r| (r.as_ref()[j] - mean[j]).powi(2))
                    .sum::<f64>()
                    / n;
                let sd = var.sqrt();
                if sd > 1e-12 * (1.0 + mean[j].abs()) {
                    sd
                } else {
                    0.0
                }
            })
            .collect();
        Standardizer { mean, scale }
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| if *s == 0.0 { 0.0 } else { (v - m) / s })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticOptions {
    /// Inverse regularization strength.
    pub c: f64,
    /// Max-abs gradient tolerance.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LogisticOptions {
    fn default() -> Self {
        LogisticOptions {
            c: 1.0,
            tol: 1e-6,
            max_iter: 200,
        }
    }
}

/// Fitted probabilistic classifier `f: x -> P(y | x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbClassifier {
    /// Coefficients on standardized features.
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub c: f64,
    pub standardizer: Standardizer,
    pub converged: bool,
    pub iterations: usize,
    pub gradient_norm: f64,
}

impl ProbClassifier {
    pub fn decision(&self, x: &[f64]) -> f64 {
        let u = self.standardizer.transform(x);
        self.intercept + dot(&self.weights, &u)
    }

    /// `P(positive | x)`, kept strictly inside (0, 1).
    pub fn posterior_positive(&self, x: &[f64]) -> f64 {
        open_unit(sigmoid(self.decision(x)))
    }

    pub fn posterior(&self, x: &[f64], label: Label) -> f64 {
        let s = self.decision(x);
        match label {
            Label::Positive => open_unit(sigmoid(s)),
            Label::Negative => open_unit(sigmoid(-s)),
        }
    }

    /// Most likely class; ties go to the negative class.
    pub fn predict(&self, x: &[f64]) -> Label {
        if self.decision(x) > 0.0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn open_unit(p: f64) -> f64 {
    p.clamp(f64::EPSILON / 2.0, 1.0 - f64::EPSILON / 2.0)
}

pub fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(s))` without overflow.
fn softplus(s: f64) -> f64 {
    if s > 0.0 {
        s + (-s).exp().ln_1p()
    } else {
        s.exp().ln_1p()
    }
}

/// Penalized objective and its gradient at `params = [w..., b]`.
///
/// `rows` are already-standardized features; `targets` are 0/1.
pub fn penalized_objective(
    params: &[f64],
    rows: &[Vec<f64>],
    targets: &[f64],
    c: f64,
) -> (f64, Vec<f64>) {
    let d = params.len() - 1;
    let (w, b) = (&params[..d], params[d]);
    let mut value = 0.5 * dot(w, w);
    let mut grad: Vec<f64> = w.to_vec();
    grad.push(0.0);
    for (u, &y) in rows.iter().zip(targets) {
        let s = b + dot(w, u);
        value += c * (softplus(s) - y * s);
        let r = c * (sigmoid(s) - y);
        for (g, ui) in grad[..d].iter_mut().zip(u) {
            *g += r * ui;
        }
        grad[d] += r;
    }
    (value, grad)
}

fn hessian(params: &[f64], rows: &[Vec<f64>], c: f64) -> Vec<Vec<f64>> {
    let d = params.len() - 1;
    let mut h = vec![vec![0.0; d + 1]; d + 1];
    for (j, row) in h.iter_mut().enumerate().take(d) {
        row[j] = 1.0;
    }
    for u in rows {
        let p = sigmoid(params[d] + dot(&params[..d], u));
        let wgt = c * p * (1.0 - p);
        for a in 0..=d {
            let ua = if a < d { u[a] } else { 1.0 };
            for bb in 0..=a {
                let ub = if bb < d { u[bb] } else { 1.0 };
                h[a][bb] += wgt * ua * ub;
            }
        }
    }
    for a in 0..=d {
        for bb in 0..a {
            h[bb][a] = h[a][bb];
        }
    }
    h
}

/// Solves `h x = g` for symmetric positive definite `h` (Cholesky).
fn cholesky_solve(mut h: Vec<Vec<f64>>, g: &[f64]) -> Option<Vec<f64>> {
    let n = g.len();
    for j in 0..n {
        let mut diag = h[j][j];
        for k in 0..j {
            diag -= h[j][k] * h[j][k];
        }
        if diag <= 0.0 || !diag.is_finite() {
            return None;
        }
        let l = diag.sqrt();
        h[j][j] = l;
        for i in j + 1..n {
            let mut s = h[i][j];
            for k in 0..j {
                s -= h[i][k] * h[j][k];
            }
            h[i][j] = s / l;
        }
    }
    let mut y = g.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= h[i][k] * y[k];
        }
        y[i] /= h[i][i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= h[k][i] * y[k];
        }
        y[i] /= h[i][i];
    }
    Some(y)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn fit_logistic<X: AsRef<[f64]>>(
    rows: &[(X, Label)],
    opts: LogisticOptions,
) -> Result<ProbClassifier> {
    let first = rows
        .first()
        .ok_or_else(|| AscfError::Shape("fit_logistic needs at least one row".into()))?;
    let d = first.0.as_ref().len();
    if rows.iter().any(|(x, _)| x.as_ref().len() != d) {
        return Err(AscfError::Shape("inconsistent feature dimension".into()));
    }
    if rows
        .iter()
        .any(|(x, _)| x.as_ref().iter().any(|v| !v.is_finite()))
    {
        return Err(AscfError::Domain("non-finite feature value".into()));
    }
    if rows.iter().all(|(_, y)| *y == first.1) {
        return Err(AscfError::SingleClass(format!("{:?}", first.1)));
    }
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // also rejects NaN
    if !(opts.c > 0.0) {
        return Err(AscfError::Domain(format!(
            "C must be positive, got {}",
            opts.c
        )));
    }

    let xs: Vec<&[f64]> = rows.iter().map(|(x, _)| x.as_ref()).collect();
    let standardizer = Standardizer::fit(&xs);
    let u: Vec<Vec<f64>> = xs.iter().map(|x| standardizer.transform(x)).collect();
    let t: Vec<f64> = rows
        .iter()
        .map(|(_, y)| if y.is_positive() { 1.0 } else { 0.0 })
        .collect();

    let mut params = vec![0.0; d + 1];
    let (mut value, mut grad) = penalized_objective(&params, &u, &t, opts.c);
    let mut iterations = 0;
    while max_abs(&grad) > opts.tol && iterations < opts.max_iter {
        iterations += 1;
        let h = hessian(&params, &u, opts.c);
        let step = cholesky_solve(h, &grad).unwrap_or_else(|| grad.clone());
        let slope: f64 = -dot(&grad, &step);
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = params
                .iter()
                .zip(&step)
                .map(|(p, s)| p - alpha * s)
                .collect();
            let (tv, tg) = penalized_objective(&trial, &u, &t, opts.c);
            if tv <= value + 1e-4 * alpha * slope {
                if tv < value || max_abs(&tg) < max_abs(&grad) {
                    params = trial;
                    value = tv;
                    grad = tg;
                    accepted = true;
                }
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let gradient_norm = max_abs(&grad);
    Ok(ProbClassifier {
        intercept: params[d],
        weights: params[..d].to_vec(),
        c: opts.c,
        standardizer,
        converged: gradient_norm <= opts.tol,
        iterations,
        gradient_norm,
    })
}
