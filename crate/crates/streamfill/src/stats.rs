//! Small shared statistics helpers.

use serde::Serialize;

/// Per-column z-score parameters (population standard deviation).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

impl Standardizer {
    /// Fit on rows; columns with zero spread get scale 1 so they pass
    /// through as constant zeros.
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let n = rows.len() as f64;
        let p = rows.first().map(|r| r.len()).unwrap_or(0);
        let mut means = vec![0.0; p];
        for row in rows {
            for (m, &v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= n;
        }
        let mut scales = vec![0.0; p];
        for row in rows {
            for ((sc, &v), &m) in scales.iter_mut().zip(row).zip(&means) {
                *sc += (v - m) * (v - m);
            }
        }
        for sc in &mut scales {
            *sc = (*sc / n).sqrt();
            if *sc == 0.0 {
                *sc = 1.0;
            }
        }
        Self { means, scales }
    }

    pub fn apply_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(&self.means).zip(&self.scales).map(|((&v, &m), &s)| (v - m) / s).collect()
    }

    pub fn n_columns(&self) -> usize {
        self.means.len()
    }
}

/// Arithmetic mean.
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population variance (divisor n).
pub fn variance_pop(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardizer_centers_and_scales() {
        let rows = vec![vec![1.0, 10.0], vec![3.0, 10.0], vec![5.0, 10.0]];
        let std = Standardizer::fit(&rows);
        assert_eq!(std.means, vec![3.0, 10.0]);
        // second column is constant → guard scale of 1
        assert_eq!(std.scales[1], 1.0);
        let z = std.apply_row(&[3.0, 10.0]);
        assert_eq!(z, vec![0.0, 0.0]);
        let z1 = std.apply_row(&[5.0, 11.0]);
        assert!((z1[0] - 2.0 / std.scales[0]).abs() < 1e-15);
        assert_eq!(z1[1], 1.0);
    }

    #[test]
    fn variance_pop_uses_divisor_n() {
        assert_eq!(variance_pop(&[1.0, 3.0]), 1.0);
    }
}
