//! Dense LU with partial pivoting and a 1-norm condition estimate.

pub(crate) struct Lu {
    n: usize,
    a: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    /// Factor a row-major `n x n` matrix. `None` if a pivot is exactly zero
    /// or non-finite.
    pub(crate) fn factor(mut a: Vec<f64>, n: usize) -> Option<Self> {
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, max) = (k..n)
                .map(|i| (i, a[i * n + k].abs()))
                .fold((k, -1.0), |best, c| if c.1 > best.1 { c } else { best });
            if !(max > 0.0 && max.is_finite()) {
                return None;
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = a[k * n + k];
            for i in k + 1..n {
                let f = a[i * n + k] / pivot;
                a[i * n + k] = f;
                if f != 0.0 {
                    let (top, bottom) = a.split_at_mut(i * n);
                    let row_k = &top[k * n + k + 1..k * n + n];
                    for (x, &u) in bottom[k + 1..n].iter_mut().zip(row_k) {
                        *x -= f * u;
                    }
                }
            }
        }
        Some(Self { n, a, perm })
    }

    /// Solve `A x = b`.
    pub(crate) fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.a[i * n + j] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.a[i * n + j] * x[j]).sum();
            x[i] = (x[i] - s) / self.a[i * n + i];
        }
        x
    }

    /// Solve `A^T x = b`.
    pub(crate) fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        // P A = L U  =>  A^T = U^T L^T P
        let mut w = b.to_vec();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.a[j * n + i] * w[j]).sum();
            w[i] = (w[i] - s) / self.a[i * n + i];
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.a[j * n + i] * w[j]).sum();
            w[i] -= s;
        }
        let mut x = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = w[i];
        }
        x
    }

    /// Hager's estimate of `||A^-1||_1`.
    pub(crate) fn inverse_norm1_estimate(&self) -> f64 {
        let n = self.n;
        let mut x = vec![1.0 / n as f64; n];
        let mut est = 0.0;
        for _ in 0..5 {
            let y = self.solve(&x);
            est = y.iter().map(|v| v.abs()).sum();
            let sign: Vec<f64> = y.iter().map(|&v| if v >= 0.0 { 1.0 } else { -1.0 }).collect();
            let z = self.solve_transpose(&sign);
            let (j, zmax) = z
                .iter()
                .enumerate()
                .fold((0, -1.0), |b, (i, v)| if v.abs() > b.1 { (i, v.abs()) } else { b });
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
            if zmax <= ztx {
                break;
            }
            x = vec![0.0; n];
            x[j] = 1.0;
        }
        est
    }
}

pub(crate) fn norm1(a: &[f64], n: usize) -> f64 {
    (0..n)
        .map(|j| (0..n).map(|i| a[i * n + j].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_and_transposes() {
        let a = vec![2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 4.0];
        let lu = Lu::factor(a.clone(), 3).unwrap();
        let x = lu.solve(&[3.0, 5.0, 5.0]);
        for (v, e) in x.iter().zip([1.0, 1.0, 1.0]) {
            assert!((v - e).abs() < 1e-14);
        }
        let b = [1.0, 2.0, 3.0];
        let xt = lu.solve_transpose(&b);
        // A is symmetric here
        let xs = lu.solve(&b);
        for (p, q) in xt.iter().zip(&xs) {
            assert!((p - q).abs() < 1e-14);
        }
    }

    #[test]
    fn transpose_solve_nonsymmetric() {
        let a = vec![0.0, 2.0, 1.0, 1.0, 0.0, 3.0, 4.0, 1.0, 0.0];
        let lu = Lu::factor(a.clone(), 3).unwrap();
        let x = lu.solve_transpose(&[1.0, 2.0, 3.0]);
        for j in 0..3 {
            let r: f64 = (0..3).map(|i| a[i * 3 + j] * x[i]).sum();
            assert!((r - [1.0, 2.0, 3.0][j]).abs() < 1e-13);
        }
    }

    #[test]
    fn condition_estimate_flags_near_singular() {
        let well = vec![1.0, 0.0, 0.0, 1.0];
        let lu = Lu::factor(well.clone(), 2).unwrap();
        assert!((norm1(&well, 2) * lu.inverse_norm1_estimate() - 1.0).abs() < 1e-12);
        let bad = vec![1.0, 1.0, 1.0, 1.0 + 1e-14];
        let lu = Lu::factor(bad.clone(), 2).unwrap();
        assert!(norm1(&bad, 2) * lu.inverse_norm1_estimate() > 1e12);
        assert!(Lu::factor(vec![1.0, 2.0, 2.0, 4.0], 2).is_none());
    }
}
