//! Banded Gaussian elimination without pivoting.
//!
//! Only used for matrices of the form `I - alpha P` with `P` row-stochastic
//! and `alpha < 1`, which are strictly row diagonally dominant, so no
//! pivoting is needed and the band does not grow.

#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    lower: usize,
    upper: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, lower: usize, upper: usize) -> Self {
        let width = lower + upper + 1;
        Self {
            n,
            lower,
            upper,
            data: vec![0.0; n * width],
        }
    }

    fn width(&self) -> usize {
        self.lower + self.upper + 1
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.lower >= i && j <= i + self.upper, "({i},{j}) outside band");
        i * self.width() + (j + self.lower - i)
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.slot(i, j);
        self.data[k] += v;
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.slot(i, j)]
    }

    /// Solves `A x = b` in place; `b` becomes `x`. Returns the row index of a
    /// zero pivot if elimination breaks down.
    pub fn solve(mut self, b: &mut [f64]) -> Result<(), usize> {
        let n = self.n;
        assert_eq!(b.len(), n);
        for k in 0..n {
            let pivot = self.get(k, k);
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(k);
            }
            let last_row = (k + self.lower).min(n - 1);
            let last_col = (k + self.upper).min(n - 1);
            for i in k + 1..=last_row {
                let factor = self.get(i, k) / pivot;
                if factor == 0.0 {
                    continue;
                }
                for j in k..=last_col {
                    let v = self.get(k, j);
                    let s = self.slot(i, j);
                    self.data[s] -= factor * v;
                }
                b[i] -= factor * b[k];
            }
        }
        for i in (0..n).rev() {
            let last_col = (i + self.upper).min(n - 1);
            let mut acc = b[i];
            for j in i + 1..=last_col {
                acc -= self.get(i, j) * b[j];
            }
            b[i] = acc / self.get(i, i);
        }
        Ok(())
    }
}
