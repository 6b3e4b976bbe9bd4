//! Small real dense kernels for the Newton system.

use alloc::vec;
use alloc::vec::Vec;

/// Symmetric positive-definite matrix stored row-major, factored in place.
#[derive(Debug, Clone)]
pub(crate) struct SpdMatrix {
    pub n: usize,
    pub a: Vec<f64>,
}

/// Lower Cholesky factor of an [`SpdMatrix`].
#[derive(Debug, Clone)]
pub(crate) struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl SpdMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, a: vec![0.0; n * n] }
    }

    #[inline]
    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        self.a[r * self.n + c] += v;
    }

    /// Copies the upper triangle onto the lower one.
    pub fn mirror_upper(&mut self) {
        let n = self.n;
        for r in 0..n {
            for c in 0..r {
                self.a[r * n + c] = self.a[c * n + r];
            }
        }
    }

    pub fn max_diag(&self) -> f64 {
        (0..self.n).map(|i| self.a[i * self.n + i].abs()).fold(0.0, f64::max)
    }

    /// Cholesky with diagonal regularisation retried on failure.
    pub fn factor(&self) -> Option<(Cholesky, f64)> {
        let scale = 1.0 + self.max_diag();
        let mut reg = 0.0;
        for attempt in 0..8 {
            if let Some(ch) = cholesky(self.n, &self.a, reg) {
                return Some((ch, reg));
            }
            reg = scale * 1e-14 * libm::pow(100.0, attempt as f64);
        }
        None
    }
}

fn cholesky(n: usize, a: &[f64], reg: f64) -> Option<Cholesky> {
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = a[j * n + j] + reg;
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if d <= 0.0 || !d.is_finite() {
            return None;
        }
        let ljj = libm::sqrt(d);
        l[j * n + j] = ljj;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            let (ri, rj) = (&l[i * n..i * n + j], &l[j * n..j * n + j]);
            for k in 0..j {
                s -= ri[k] * rj[k];
            }
            l[i * n + j] = s / ljj;
        }
    }
    Some(Cholesky { n, l })
}

impl Cholesky {
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        let l = &self.l;
        for i in 0..n {
            let mut s = b[i];
            let row = &l[i * n..i * n + i];
            for (k, lik) in row.iter().enumerate() {
                s -= lik * b[k];
            }
            b[i] = s / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= l[k * n + i] * b[k];
            }
            b[i] = s / l[i * n + i];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_spd_system() {
        let mut m = SpdMatrix::zeros(3);
        let vals = [[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 2.0]];
        for (r, row) in vals.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                m.add(r, c, *v);
            }
        }
        let (ch, reg) = m.factor().unwrap();
        assert_eq!(reg, 0.0);
        let x = ch.solve(&[1.0, 2.0, 3.0]);
        for r in 0..3 {
            let ax: f64 = (0..3).map(|c| vals[r][c] * x[c]).sum();
            assert!((ax - [1.0, 2.0, 3.0][r]).abs() < 1e-13);
        }
    }

    #[test]
    fn regularises_singular() {
        let mut m = SpdMatrix::zeros(2);
        for (r, c) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            m.add(r, c, 1.0);
        }
        let (_, reg) = m.factor().unwrap();
        assert!(reg > 0.0);
    }
}
