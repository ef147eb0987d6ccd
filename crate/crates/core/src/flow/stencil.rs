//! Fourth-order finite-difference operators on a uniform grid.
//!
//! Interior rows use the five-point central formulas. The first two and last
//! two rows use off-centred formulas of the same order.

const D1_CENTRAL: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];
const D1_EDGE: [f64; 5] = [-25.0, 48.0, -36.0, 16.0, -3.0];
const D1_NEAR_EDGE: [f64; 5] = [-3.0, -10.0, 18.0, -6.0, 1.0];

const D2_CENTRAL: [f64; 5] = [-1.0, 16.0, -30.0, 16.0, -1.0];
const D2_EDGE: [f64; 6] = [45.0, -154.0, 214.0, -156.0, 61.0, -10.0];
const D2_NEAR_EDGE: [f64; 6] = [10.0, -15.0, -4.0, 14.0, -6.0, 1.0];

#[derive(Debug, Clone)]
struct Row {
    start: usize,
    coef: Vec<f64>,
}

/// A sparse row operator with at most six entries per row.
#[derive(Debug, Clone)]
pub struct Stencil {
    rows: Vec<Row>,
}

impl Stencil {
    /// First derivative with spacing `h`.
    pub fn first(m: usize, h: f64) -> Self {
        Self::build(m, 12.0 * h, &D1_CENTRAL, &D1_EDGE, &D1_NEAR_EDGE, -1.0)
    }

    /// Second derivative with spacing `h`.
    pub fn second(m: usize, h: f64) -> Self {
        Self::build(m, 12.0 * h * h, &D2_CENTRAL, &D2_EDGE, &D2_NEAR_EDGE, 1.0)
    }

    fn build(
        m: usize,
        denom: f64,
        central: &[f64],
        edge: &[f64],
        near: &[f64],
        mirror_sign: f64,
    ) -> Self {
        assert!(m >= 8, "stencils need at least 8 nodes");
        let scaled = |c: &[f64], sign: f64, reverse: bool| -> Vec<f64> {
            let mut v: Vec<f64> = c.iter().map(|x| sign * x / denom).collect();
            if reverse {
                v.reverse();
            }
            v
        };
        let mut rows = Vec::with_capacity(m);
        rows.push(Row {
            start: 0,
            coef: scaled(edge, 1.0, false),
        });
        rows.push(Row {
            start: 0,
            coef: scaled(near, 1.0, false),
        });
        for i in 2..m - 2 {
            rows.push(Row {
                start: i - 2,
                coef: scaled(central, 1.0, false),
            });
        }
        rows.push(Row {
            start: m - near.len(),
            coef: scaled(near, mirror_sign, true),
        });
        rows.push(Row {
            start: m - edge.len(),
            coef: scaled(edge, mirror_sign, true),
        });
        Self { rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// (first column, coefficients) of row `i`.
    pub fn row(&self, i: usize) -> (usize, &[f64]) {
        let r = &self.rows[i];
        (r.start, &r.coef)
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.coef.iter().zip(&v[r.start..]).map(|(c, x)| c * x).sum())
            .collect()
    }

    /// Row-wise Σ|c|·|v|, a bound on how much rounding in `v` can leak through.
    pub fn apply_abs(&self, v: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| {
                r.coef
                    .iter()
                    .zip(&v[r.start..])
                    .map(|(c, x)| c.abs() * x.abs())
                    .sum()
            })
            .collect()
    }
}
