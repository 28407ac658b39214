use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;

/// Per-column affine scaler fitted on the train partition only.
///
/// Uses the population standard deviation. Zero-variance columns map to 0
/// on transform and back to their mean on inverse.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Standardizer {
    pub x_mean: Vec<f64>,
    pub x_std: Vec<f64>,
    pub y_mean: f64,
    pub y_std: f64,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    (mean, var.sqrt())
}

pub fn fit_standardizer(x: &Matrix, y: &[f64], rows: &[usize]) -> Standardizer {
    assert!(!rows.is_empty(), "cannot fit a standardizer on zero rows");
    let n = rows.len();
    let mut x_mean = Vec::with_capacity(x.cols());
    let mut x_std = Vec::with_capacity(x.cols());
    for j in 0..x.cols() {
        let (m, s) = mean_std(rows.iter().map(|&i| x.get(i, j)), n);
        x_mean.push(m);
        x_std.push(s);
    }
    let (y_mean, y_std) = mean_std(rows.iter().map(|&i| y[i]), n);
    Standardizer {
        x_mean,
        x_std,
        y_mean,
        y_std,
    }
}

impl Standardizer {
    pub fn transform_x(&self, x: &Matrix) -> Matrix {
        let mut out = x.clone();
        for i in 0..out.rows() {
            let row = out.row_mut(i);
            for (j, v) in row.iter_mut().enumerate() {
                *v = if self.x_std[j] > 0.0 {
                    (*v - self.x_mean[j]) / self.x_std[j]
                } else {
                    0.0
                };
            }
        }
        out
    }

    pub fn inverse_transform_x(&self, x: &Matrix) -> Matrix {
        let mut out = x.clone();
        for i in 0..out.rows() {
            let row = out.row_mut(i);
            for (j, v) in row.iter_mut().enumerate() {
                *v = *v * self.x_std[j] + self.x_mean[j];
            }
        }
        out
    }

    pub fn transform_y_value(&self, v: f64) -> f64 {
        if self.y_std > 0.0 {
            (v - self.y_mean) / self.y_std
        } else {
            0.0
        }
    }

    pub fn inverse_y_value(&self, v: f64) -> f64 {
        v * self.y_std + self.y_mean
    }

    pub fn transform_y(&self, y: &[f64]) -> Vec<f64> {
        y.iter().map(|&v| self.transform_y_value(v)).collect()
    }

    pub fn inverse_y(&self, y: &[f64]) -> Vec<f64> {
        y.iter().map(|&v| self.inverse_y_value(v)).collect()
    }
}
