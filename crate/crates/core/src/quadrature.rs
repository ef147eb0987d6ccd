//! Gauss–Legendre rules and composite integration on fixed panels.

/// Nodes and weights of the `order`-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "quadrature order must be positive");
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let n = order as f64;
        for i in 0..order.div_ceil(2) {
            // Tricomi's initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(order, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(order, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[order - 1 - i] = x;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        if order % 2 == 1 {
            nodes[order / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integral of `f` over [lo, hi].
    pub fn integrate<F: FnMut(f64) -> f64>(&self, lo: f64, hi: f64, mut f: F) -> f64 {
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        if half == 0.0 {
            return 0.0;
        }
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }

    /// Composite rule on `panels` equal sub-intervals of [lo, hi].
    pub fn integrate_composite<F: FnMut(f64) -> f64>(
        &self,
        lo: f64,
        hi: f64,
        panels: usize,
        mut f: F,
    ) -> f64 {
        let width = (hi - lo) / panels as f64;
        (0..panels)
            .map(|j| {
                let a = lo + j as f64 * width;
                let b = if j + 1 == panels { hi } else { a + width };
                self.integrate(a, b, &mut f)
            })
            .sum()
    }
}

fn legendre_with_derivative(order: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=order {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if order == 0 { 1.0 } else { p1 };
    let n = order as f64;
    let dp = n * (x * p - p0) / (x * x - 1.0);
    (p, dp)
}
