//! Banded LU with partial pivoting, stored by rows.
//!
//! Row `i` keeps columns `i − kl ..= i + ku + kl`; the extra `kl` columns on
//! the right absorb fill-in from row interchanges. Multipliers stay where they
//! were produced and interchanges are replayed during the solve, as in the
//! LAPACK `gbtrf`/`gbtrs` pair.

#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BandedLu {
    band: BandedMatrix,
    pivots: Vec<usize>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let offset = j as isize - i as isize + self.kl as isize;
        (offset >= 0 && (offset as usize) < self.width && j < self.n)
            .then(|| i * self.width + offset as usize)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    /// Adds `value` at (i, j); panics outside the declared band.
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        assert!(
            j + self.kl >= i && j <= i + self.ku,
            "entry ({i}, {j}) outside band kl={}, ku={}",
            self.kl,
            self.ku
        );
        let s = self.slot(i, j).expect("inside band");
        self.data[s] += value;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// Factorises in place. On a zero pivot returns the offending column.
    pub fn factor(mut self) -> Result<BandedLu, usize> {
        let n = self.n;
        let reach = self.kl + self.ku;
        let mut pivots = vec![0; n];
        for j in 0..n {
            let last_row = (j + self.kl).min(n - 1);
            let mut p = j;
            let mut best = self.get(j, j).abs();
            for i in (j + 1)..=last_row {
                let v = self.get(i, j).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(j);
            }
            pivots[j] = p;
            let last_col = (j + reach).min(n - 1);
            if p != j {
                for c in j..=last_col {
                    let a = self.slot(j, c).expect("pivot row window");
                    let b = self.slot(p, c).expect("candidate row window");
                    self.data.swap(a, b);
                }
            }
            let pivot = self.get(j, j);
            for i in (j + 1)..=last_row {
                let si = self.slot(i, j).expect("sub-diagonal");
                let l = self.data[si] / pivot;
                if l == 0.0 {
                    continue;
                }
                self.data[si] = l;
                for c in (j + 1)..=last_col {
                    let u = self.get(j, c);
                    if u != 0.0 {
                        let s = self.slot(i, c).expect("fill inside window");
                        self.data[s] -= l * u;
                    }
                }
            }
        }
        Ok(BandedLu { band: self, pivots })
    }
}

impl BandedLu {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let a = &self.band;
        let n = a.n;
        let mut b = rhs.to_vec();
        for j in 0..n {
            b.swap(j, self.pivots[j]);
            let bj = b[j];
            if bj != 0.0 {
                for i in (j + 1)..=(j + a.kl).min(n - 1) {
                    b[i] -= a.get(i, j) * bj;
                }
            }
        }
        let reach = a.kl + a.ku;
        for i in (0..n).rev() {
            let mut s = b[i];
            for c in (i + 1)..=(i + reach).min(n - 1) {
                s -= a.get(i, c) * b[c];
            }
            b[i] = s / a.get(i, i);
        }
        b
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_band(
        n: usize,
        kl: usize,
        ku: usize,
        seed: u64,
        diag_boost: f64,
    ) -> (BandedMatrix, DMatrix<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut band = BandedMatrix::zeros(n, kl, ku);
        let mut dense = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                let mut v: f64 = rng.random_range(-1.0..1.0);
                if i == j {
                    v += diag_boost;
                }
                band.add(i, j, v);
                dense[(i, j)] = v;
            }
        }
        (band, dense)
    }

    #[test]
    fn matches_dense_solve() {
        for (seed, boost) in [(1, 0.0), (2, 0.0), (3, 5.0), (4, 1e-3)] {
            let n = 60;
            let (band, dense) = random_band(n, 4, 4, seed, boost);
            let rhs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
            let lu = band.clone().factor().unwrap();
            let x = lu.solve(&rhs);
            let want = dense.lu().solve(&DVector::from_vec(rhs.clone())).unwrap();
            let err = x
                .iter()
                .zip(want.iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let scale = want.amax();
            assert!(err < 1e-10 * scale, "seed {seed}: {err}");
            let back = band.mul_vec(&x);
            let res = back
                .iter()
                .zip(&rhs)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(res < 1e-10, "seed {seed}: residual {res}");
        }
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        let mut band = BandedMatrix::zeros(3, 1, 1);
        band.add(0, 1, 1.0);
        band.add(1, 0, 1.0);
        band.add(1, 2, 2.0);
        band.add(2, 1, 3.0);
        band.add(2, 2, 1.0);
        let x = band.clone().factor().unwrap().solve(&[1.0, 5.0, 5.0]);
        let back = band.mul_vec(&x);
        for (a, b) in back.iter().zip([1.0, 5.0, 5.0]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_matrix_reports_column() {
        let mut band = BandedMatrix::zeros(3, 1, 1);
        band.add(0, 0, 1.0);
        band.add(2, 2, 1.0);
        assert_eq!(band.factor().unwrap_err(), 1);
    }

    #[test]
    #[should_panic(expected = "outside band")]
    fn rejects_entries_outside_band() {
        BandedMatrix::zeros(5, 1, 1).add(0, 3, 1.0);
    }
}
