//! Principal components via cyclic Jacobi on the sample covariance.

use crate::error::{Error, Result};

pub const JACOBI_TOLERANCE: f64 = 1e-10;
const MAX_SWEEPS: usize = 100;

/// Row-major `n × d` data in f64.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                op: "matrix",
                expected: vec![rows, cols],
                got: vec![data.len()],
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("ragged rows"));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.cols];
        for i in 0..self.rows {
            mean.iter_mut().zip(self.row(i)).for_each(|(m, v)| *m += v);
        }
        mean.iter_mut().for_each(|m| *m /= self.rows.max(1) as f64);
        mean
    }
}

/// Eigen-decomposition of a symmetric `n × n` matrix by cyclic Jacobi
/// rotations. Returns eigenvalues and eigenvectors as columns of a row-major
/// matrix, in the diagonal order the sweep leaves them.
pub fn symmetric_eigen(a: &[f64], n: usize, tolerance: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if a.len() != n * n {
        return Err(Error::invalid(format!("expected {n}x{n} matrix")));
    }
    let mut a = a.to_vec();
    let mut v = vec![0.0; n * n];
    (0..n).for_each(|i| v[i * n + i] = 1.0);
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let off = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                s += 2.0 * a[p * n + q] * a[p * n + q];
            }
        }
        s.sqrt()
    };
    for _ in 0..MAX_SWEEPS {
        if off(&a) <= tolerance * scale.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let (app, aqq) = (a[p * n + p], a[q * n + q]);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k * n + p], a[k * n + q]);
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p * n + k], a[q * n + k]);
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k * n + p], v[k * n + q]);
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let values = (0..n).map(|i| a[i * n + i]).collect();
    Ok((values, v))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `k` unit-norm rows of length `d`.
    pub components: Vec<Vec<f64>>,
    /// Sample-covariance eigenvalues of the kept components.
    pub eigenvalues: Vec<f64>,
    /// Each eigenvalue over the total variance (0 when there is none).
    pub explained: Vec<f64>,
}

/// Top-`k` principal components of `x`.
///
/// Components are ordered by decreasing eigenvalue; eigenvalues within the
/// Jacobi tolerance of each other keep their original axis order. Each
/// component's largest-magnitude entry is positive (first such entry on ties).
pub fn pca_fit(x: &Matrix, k: usize) -> Result<PcaModel> {
    let d = x.cols;
    if k == 0 || k > d {
        return Err(Error::invalid(format!("cannot keep {k} components of {d} columns")));
    }
    if x.rows < k + 1 {
        return Err(Error::invalid(format!("PCA with k={k} needs at least {} rows, got {}", k + 1, x.rows)));
    }
    let mean = x.column_means();
    let mut cov = vec![0.0; d * d];
    let mut centered = vec![0.0; d];
    for i in 0..x.rows {
        centered.iter_mut().zip(x.row(i)).zip(&mean).for_each(|((c, v), m)| *c = v - m);
        for p in 0..d {
            let cp = centered[p];
            if cp == 0.0 {
                continue;
            }
            for q in p..d {
                cov[p * d + q] += cp * centered[q];
            }
        }
    }
    let denom = (x.rows - 1) as f64;
    for p in 0..d {
        for q in p..d {
            cov[p * d + q] /= denom;
            cov[q * d + p] = cov[p * d + q];
        }
    }
    let (values, vectors) = symmetric_eigen(&cov, d, JACOBI_TOLERANCE)?;
    let total: f64 = values.iter().map(|v| v.max(0.0)).sum();
    let tie = JACOBI_TOLERANCE * values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);

    let mut remaining: Vec<usize> = (0..d).collect();
    let mut model = PcaModel {
        mean,
        components: Vec::with_capacity(k),
        eigenvalues: Vec::with_capacity(k),
        explained: Vec::with_capacity(k),
    };
    for _ in 0..k {
        // scan in axis order; a later axis wins only by more than the tie band
        let mut best = 0;
        for (pos, &axis) in remaining.iter().enumerate() {
            if values[axis] > values[remaining[best]] + tie {
                best = pos;
            }
        }
        let axis = remaining.remove(best);
        let mut comp: Vec<f64> = (0..d).map(|r| vectors[r * d + axis]).collect();
        let norm = comp.iter().map(|c| c * c).sum::<f64>().sqrt();
        comp.iter_mut().for_each(|c| *c /= norm);
        let lead = comp
            .iter()
            .enumerate()
            .fold(0, |b, (i, c)| if c.abs() > comp[b].abs() { i } else { b });
        if comp[lead] < 0.0 {
            comp.iter_mut().for_each(|c| *c = -*c);
        }
        let lambda = values[axis].max(0.0);
        model.components.push(comp);
        model.eigenvalues.push(lambda);
        model.explained.push(if total > 0.0 { lambda / total } else { 0.0 });
    }
    Ok(model)
}

/// `Y = (X - mean) · componentsᵀ`, one row per input row.
pub fn pca_project(model: &PcaModel, x: &Matrix) -> Result<Vec<Vec<f64>>> {
    if x.cols != model.mean.len() {
        return Err(Error::ShapeMismatch {
            op: "pca_project",
            expected: vec![x.rows, model.mean.len()],
            got: vec![x.rows, x.cols],
        });
    }
    Ok((0..x.rows)
        .map(|i| {
            model
                .components
                .iter()
                .map(|c| x.row(i).iter().zip(&model.mean).zip(c).map(|((v, m), w)| (v - m) * w).sum())
                .collect()
        })
        .collect())
}
