//! Small dense null-space computation by Gauss-Jordan elimination.

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged matrix");
        Matrix {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    fn at(&mut self, r: usize, c: usize) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for c in 0..self.cols {
                self.data.swap(a * self.cols + c, b * self.cols + c);
            }
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self.get(r, c) * x[c]).sum())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Basis of `{x : A x = 0}`, one vector per free column of the reduced row
/// echelon form.
///
/// Pivots are chosen by largest magnitude within each column; a column whose
/// best candidate is below `pivot_tol * max|A|` is treated as free.
pub fn null_space(a: &Matrix, pivot_tol: f64) -> Vec<Vec<f64>> {
    let mut m = a.clone();
    let threshold = pivot_tol * m.max_abs();
    let mut pivot_cols = Vec::new();
    let mut free_cols = Vec::new();
    let mut row = 0;

    for col in 0..m.cols {
        if row == m.rows {
            free_cols.push(col);
            continue;
        }
        let (best, best_abs) = (row..m.rows)
            .map(|r| (r, m.get(r, col).abs()))
            .fold((row, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best_abs <= threshold {
            free_cols.push(col);
            continue;
        }
        m.swap_rows(row, best);
        let p = m.get(row, col);
        for c in col..m.cols {
            *m.at(row, c) /= p;
        }
        for r in 0..m.rows {
            if r == row {
                continue;
            }
            let f = m.get(r, col);
            if f != 0.0 {
                for c in col..m.cols {
                    let delta = f * m.get(row, c);
                    *m.at(r, c) -= delta;
                }
            }
        }
        pivot_cols.push(col);
        row += 1;
    }

    free_cols
        .iter()
        .map(|&free| {
            let mut x = vec![0.0; m.cols];
            x[free] = 1.0;
            for (i, &pc) in pivot_cols.iter().enumerate() {
                x[pc] = -m.get(i, free);
            }
            x
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_by_two() {
        let a = Matrix::from_rows(&[vec![1.0, 1.0]]);
        let ns = null_space(&a, 1e-12);
        assert_eq!(ns, vec![vec![-1.0, 1.0]]);
    }

    #[test]
    fn full_rank_square_has_trivial_kernel() {
        let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]);
        assert!(null_space(&a, 1e-12).is_empty());
    }

    #[test]
    fn zero_column_is_free() {
        let a = Matrix::from_rows(&[vec![1.0, 0.0, 2.0], vec![3.0, 0.0, 1.0]]);
        let ns = null_space(&a, 1e-12);
        assert_eq!(ns.len(), 1);
        assert_eq!(ns[0], vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn kernel_vectors_annihilate() {
        let a = Matrix::from_rows(&[
            vec![1.0, 2.0, 3.0, 4.0],
            vec![2.0, 4.0, 6.0, 8.0],
            vec![0.5, -1.0, 0.0, 2.0],
        ]);
        let ns = null_space(&a, 1e-12);
        assert_eq!(ns.len(), 2);
        for x in ns {
            for r in a.mul_vec(&x) {
                assert!(r.abs() < 1e-12);
            }
        }
    }
}
