//! Multi-output least squares `h: z -> x` via Householder QR.
//!
//! The design is centered first so the intercept stays outside the norm being
//! minimized. Centered `Z` is factored with column-pivoted Householder QR,
//! `Z P = Q [R11 R12; 0 0]`, the numerical rank is read off the diagonal of
//! `R`, and the minimum-norm solution of the remaining underdetermined system
//! `[R11 R12] w = Q^T x` comes from a second QR of its transpose. No normal
//! equations are formed.

use serde::{Deserialize, Serialize};

use crate::error::{AscfError, Result};

/// Diagonal entries of `R` below `RCOND * max|R_jj|` count as zero.
pub const RCOND: f64 = 1e-10;

/// Affine map `z -> weights * z + intercepts`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    /// `D` rows of length `M`.
    pub weights: Vec<Vec<f64>>,
    pub intercepts: Vec<f64>,
    /// Numerical rank of the centered design.
    pub rank: usize,
}

impl LinearModel {
    pub fn input_dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn output_dim(&self) -> usize {
        self.intercepts.len()
    }

    pub fn predict(&self, z: &[f64]) -> Vec<f64> {
        debug_assert_eq!(z.len(), self.input_dim());
        self.weights
            .iter()
            .zip(&self.intercepts)
            .map(|(w, b)| b + w.iter().zip(z).map(|(wi, zi)| wi * zi).sum::<f64>())
            .collect()
    }
}

/// Dense column-major scratch matrix.
struct ColMajor {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl ColMajor {
    fn zeros(rows: usize, cols: usize) -> Self {
        ColMajor {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i + j * self.rows]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i + j * self.rows] = v;
    }

    fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i + a * self.rows, i + b * self.rows);
        }
    }
}

/// Householder reflector `I - tau v v^T` acting on rows `start..`.
struct Reflector {
    start: usize,
    v: Vec<f64>,
    tau: f64,
}

impl Reflector {
    /// Reflector mapping `x` onto `beta e_1`; returns it with `beta`.
    fn new(start: usize, x: &[f64]) -> (Self, f64) {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return (
                Reflector {
                    start,
                    v: vec![0.0; x.len()],
                    tau: 0.0,
                },
                0.0,
            );
        }
        let beta = if x[0] >= 0.0 { -norm } else { norm };
        let mut v = x.to_vec();
        v[0] -= beta;
        let vv = v.iter().map(|a| a * a).sum::<f64>();
        let tau = if vv == 0.0 { 0.0 } else { 2.0 / vv };
        (Reflector { start, v, tau }, beta)
    }

    fn apply(&self, col: &mut [f64]) {
        if self.tau == 0.0 {
            return;
        }
        let seg = &mut col[self.start..self.start + self.v.len()];
        let dot = self
            .v
            .iter()
            .zip(seg.iter())
            .map(|(a, b)| a * b)
            .sum::<f64>();
        let s = self.tau * dot;
        for (c, v) in seg.iter_mut().zip(&self.v) {
            *c -= s * v;
        }
    }
}

/// Minimum-norm least-squares solution of `a w = b` for every column of `b`.
/// Returns the `cols(a) x cols(b)` solution and the numerical rank.
fn min_norm_lstsq(mut a: ColMajor, mut b: ColMajor) -> (ColMajor, usize) {
    let (n, m) = (a.rows, a.cols);
    let steps = n.min(m);
    let mut perm: Vec<usize> = (0..m).collect();
    let mut diag = Vec::with_capacity(steps);

    for j in 0..steps {
        let pivot = (j..m)
            .map(|c| (c, a.col(c)[j..].iter().map(|v| v * v).sum::<f64>()))
            .fold(
                (j, -1.0),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            )
            .0;
        a.swap_cols(j, pivot);
        perm.swap(j, pivot);
        let (h, beta) = Reflector::new(j, &a.col(j)[j..]);
        a.set(j, j, beta);
        for i in j + 1..n {
            a.set(i, j, 0.0);
        }
        for c in j + 1..m {
            h.apply(a.col_mut(c));
        }
        for c in 0..b.cols {
            h.apply(b.col_mut(c));
        }
        diag.push(beta.abs());
    }

    let largest = diag.first().copied().unwrap_or(0.0);
    let tol = RCOND * largest;
    let rank = if largest == 0.0 {
        0
    } else {
        diag.iter().take_while(|&&d| d > tol).count()
    };

    let mut sol = ColMajor::zeros(m, b.cols);
    if rank == 0 {
        return (sol, 0);
    }

    // S^T = [R11 R12]^T is m x rank; factor it as Q2 R2.
    let mut st = ColMajor::zeros(m, rank);
    for i in 0..rank {
        for j in i..m {
            st.set(j, i, a.at(i, j));
        }
    }
    let mut reflectors = Vec::with_capacity(rank);
    for j in 0..rank {
        let (h, beta) = Reflector::new(j, &st.col(j)[j..]);
        st.set(j, j, beta);
        for i in j + 1..m {
            st.set(i, j, 0.0);
        }
        for c in j + 1..rank {
            h.apply(st.col_mut(c));
        }
        reflectors.push(h);
    }

    for c in 0..b.cols {
        // R2^T u = (Q^T b)[..rank], forward substitution on the lower factor.
        let rhs = &b.col(c)[..rank];
        let mut u = vec![0.0; m];
        for i in 0..rank {
            let mut s = rhs[i];
            for k in 0..i {
                s -= st.at(k, i) * u[k];
            }
            u[i] = s / st.at(i, i);
        }
        for h in reflectors.iter().rev() {
            h.apply(&mut u);
        }
        let out = sol.col_mut(c);
        for (j, &p) in perm.iter().enumerate() {
            out[p] = u[j];
        }
    }
    (sol, rank)
}

/// Fits one least-squares map per output dimension on `(z, x)` rows.
pub fn fit_linear<Z: AsRef<[f64]>, X: AsRef<[f64]>>(rows: &[(Z, X)]) -> Result<LinearModel> {
    let n = rows.len();
    if n == 0 {
        return Err(AscfError::Shape("fit_linear needs at least one row".into()));
    }
    let m = rows[0].0.as_ref().len();
    let d = rows[0].1.as_ref().len();
    if m == 0 || d == 0 {
        return Err(AscfError::Shape("empty input or output dimension".into()));
    }
    for (i, (z, x)) in rows.iter().enumerate() {
        if z.as_ref().len() != m || x.as_ref().len() != d {
            return Err(AscfError::Shape(format!(
                "row {i}: expected |z|={m}, |x|={d}, got {} and {}",
                z.as_ref().len(),
                x.as_ref().len()
            )));
        }
    }

    let mean = |k: usize, pick: &dyn Fn(usize) -> f64| (0..k).map(pick).sum::<f64>() / k as f64;
    let z_mean: Vec<f64> = (0..m)
        .map(|j| mean(n, &|i| rows[i].0.as_ref()[j]))
        .collect();
    let x_mean: Vec<f64> = (0..d)
        .map(|j| mean(n, &|i| rows[i].1.as_ref()[j]))
        .collect();

    let mut a = ColMajor::zeros(n, m);
    let mut b = ColMajor::zeros(n, d);
    for (i, (z, x)) in rows.iter().enumerate() {
        for j in 0..m {
            a.set(i, j, z.as_ref()[j] - z_mean[j]);
        }
        for j in 0..d {
            b.set(i, j, x.as_ref()[j] - x_mean[j]);
        }
    }
    let (sol, rank) = min_norm_lstsq(a, b);

    let weights: Vec<Vec<f64>> = (0..d).map(|c| sol.col(c).to_vec()).collect();
    let intercepts = weights
        .iter()
        .zip(&x_mean)
        .map(|(w, xm)| xm - w.iter().zip(&z_mean).map(|(a, b)| a * b).sum::<f64>())
        .collect();
    Ok(LinearModel {
        weights,
        intercepts,
        rank,
    })
}
