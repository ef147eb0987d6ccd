//! Metric and Ricci matrices on ℂⁿ \ {0} for a radial profile.
//!
//! Entries are stored as `entries[(α, β)] = g_{αβ̄}`. The real 2n×2n form
//! used in some references is the block matrix diag(A, A) built from the real
//! and imaginary parts; it carries no extra information and is not produced.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::profile::{ProfileSample, RadialProfile};

/// Default step for the complex-coordinate finite differences.
pub const DEFAULT_FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct PointCoordinates {
    z: Vec<Complex64>,
    w: f64,
}

impl PointCoordinates {
    pub fn new(z: Vec<Complex64>) -> Result<Self> {
        if z.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::InvalidPoint("coordinates must be finite".into()));
        }
        let w: f64 = z.iter().map(|c| c.norm_sqr()).sum();
        if w <= 0.0 {
            return Err(Error::InvalidPoint("z = 0 is not in ℂⁿ \\ {0}".into()));
        }
        Ok(Self { z, w })
    }

    pub fn from_real(coords: &[f64]) -> Result<Self> {
        Self::new(coords.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// The point (ζ, 0, …, 0).
    pub fn on_axis(zeta: Complex64, n: usize) -> Result<Self> {
        let mut z = vec![Complex64::new(0.0, 0.0); n];
        z[0] = zeta;
        Self::new(z)
    }

    pub fn dim(&self) -> usize {
        self.z.len()
    }

    pub fn z(&self) -> &[Complex64] {
        &self.z
    }

    /// w = Σ|z^α|².
    pub fn w(&self) -> f64 {
        self.w
    }

    /// r = log w.
    pub fn r(&self) -> f64 {
        self.w.ln()
    }

    /// e^{iθ}·z.
    pub fn rotated(&self, theta: f64) -> Self {
        let phase = Complex64::from_polar(1.0, theta);
        Self {
            z: self.z.iter().map(|c| c * phase).collect(),
            w: self.w,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HermitianForm {
    pub entries: DMatrix<Complex64>,
}

impl HermitianForm {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, alpha: usize, beta: usize) -> Complex64 {
        self.entries[(alpha, beta)]
    }

    /// max |h_{αβ̄} − conj(h_{βᾱ})|.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.entries[(i, j)] - self.entries[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn determinant(&self) -> f64 {
        self.entries.clone().determinant().re
    }

    /// Ordinary eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = SymmetricEigen::new(self.entries.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        v.sort_by(|a, b| a.total_cmp(b));
        v
    }

    pub fn max_abs_diff(&self, other: &HermitianForm) -> f64 {
        (&self.entries - &other.entries)
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    fn radial(z: &PointCoordinates, value: f64, derivative: f64) -> Self {
        // e^{-r}·value·δ_{αβ} + e^{-2r}·(derivative − value)·z̄^α z^β
        let w = z.w();
        let zz = z.z();
        let n = zz.len();
        let entries = DMatrix::from_fn(n, n, |a, b| {
            let mut e = zz[a].conj() * zz[b] * ((derivative - value) / (w * w));
            if a == b {
                e += value / w;
            }
            e
        });
        Self { entries }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RicciEigenpair {
    pub value: f64,
    pub multiplicity: usize,
    /// A (1,0)-vector W with R_{αβ̄}W^α = λ g_{αβ̄}W^α, normalised in g.
    #[serde(skip)]
    pub eigenvector: Vec<Complex64>,
}

fn checked_sample(profile: &RadialProfile, z: &PointCoordinates) -> Result<ProfileSample> {
    if z.dim() != profile.params().n {
        return Err(Error::InvalidPoint(format!(
            "point has {} coordinates, profile has complex dimension {}",
            z.dim(),
            profile.params().n
        )));
    }
    Ok(profile.sample(z.r()))
}

pub fn metric_at(profile: &RadialProfile, z: &PointCoordinates) -> Result<HermitianForm> {
    let s = checked_sample(profile, z)?;
    Ok(HermitianForm::radial(z, s.phi, s.phi_r))
}

pub fn ricci_at(profile: &RadialProfile, z: &PointCoordinates) -> Result<HermitianForm> {
    let s = checked_sample(profile, z)?;
    Ok(HermitianForm::radial(z, s.psi, s.psi_r))
}

/// Solves R·x = λ·g·x by congruence with the Cholesky factor of g.
///
/// Returns ascending eigenvalues and the matching g-orthonormal columns.
pub fn generalized_eigen(
    g: &HermitianForm,
    ricci: &HermitianForm,
) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
    if g.entries
        .iter()
        .chain(ricci.entries.iter())
        .any(|c| !(c.re.is_finite() && c.im.is_finite()))
    {
        return Err(Error::NonFinite("metric or Ricci entries"));
    }
    let chol = g
        .entries
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite)?;
    let l = chol.l();
    let y = l
        .solve_lower_triangular(&ricci.entries)
        .ok_or(Error::NotPositiveDefinite)?;
    let a = l
        .solve_lower_triangular(&y.adjoint())
        .ok_or(Error::NotPositiveDefinite)?
        .adjoint();
    let a = (&a + a.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(a);
    let lh = l.adjoint();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let n = g.dim();
    let mut vectors = DMatrix::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (col, &i) in order.iter().enumerate() {
        let y: DVector<Complex64> = eig.eigenvectors.column(i).into_owned();
        let x = lh
            .solve_upper_triangular(&y)
            .ok_or(Error::NotPositiveDefinite)?;
        vectors.set_column(col, &x);
        values.push(eig.eigenvalues[i]);
    }
    Ok((values, vectors))
}

/// Ricci eigenvalues relative to g, grouped by multiplicity, ascending.
pub fn ricci_eigenpairs(
    profile: &RadialProfile,
    z: &PointCoordinates,
) -> Result<Vec<RicciEigenpair>> {
    let g = metric_at(profile, z)?;
    let ricci = ricci_at(profile, z)?;
    let (values, vectors) = generalized_eigen(&g, &ricci)?;
    let scale = values
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let mut pairs: Vec<RicciEigenpair> = Vec::new();
    for (i, &value) in values.iter().enumerate() {
        if let Some(last) = pairs.last_mut() {
            if (value - last.value).abs() <= 1e-9 * scale {
                last.multiplicity += 1;
                continue;
            }
        }
        // Matrix eigenvector x satisfies R x = λ g x; the (1,0)-vector is conj(x).
        let eigenvector = vectors.column(i).iter().map(|c| c.conj()).collect();
        pairs.push(RicciEigenpair {
            value,
            multiplicity: 1,
            eigenvector,
        });
    }
    Ok(pairs)
}

/// Residual of R_{αβ̄}W^α − λ g_{αβ̄}W^α measured in the norm induced by g.
pub fn eigen_residual(g: &HermitianForm, ricci: &HermitianForm, pair: &RicciEigenpair) -> f64 {
    let n = g.dim();
    let w = DVector::from_iterator(n, pair.eigenvector.iter().copied());
    // Lower-index form (R − λg)^T W; raise with g^{-1} and measure in g.
    let lowered = (&ricci.entries - &g.entries * Complex64::new(pair.value, 0.0)).transpose() * &w;
    let g_t = g.entries.transpose();
    let Some(chol) = g_t.clone().cholesky() else {
        return f64::INFINITY;
    };
    let raised = chol.solve(&lowered);
    let norm_sq = (raised.adjoint() * &g_t * &raised)[(0, 0)].re;
    let w_norm_sq = (w.adjoint() * &g_t * &w)[(0, 0)].re;
    (norm_sq.max(0.0) / w_norm_sq).sqrt()
}

/// ∂²h/∂z^α∂z̄^β of a real function by central differences in the real
/// coordinates, using ∂_z = (∂_x − i∂_y)/2.
pub fn complex_hessian_fd<F>(h: F, z: &PointCoordinates, step: f64) -> DMatrix<Complex64>
where
    F: Fn(&PointCoordinates) -> f64,
{
    let n = z.dim();
    let dim = 2 * n;
    let shifted = |moves: &[(usize, f64)]| -> f64 {
        let mut coords = z.z().to_vec();
        for &(p, amount) in moves {
            if p % 2 == 0 {
                coords[p / 2].re += amount;
            } else {
                coords[p / 2].im += amount;
            }
        }
        h(&PointCoordinates::new(coords).expect("finite-difference stencil left ℂⁿ \\ {0}"))
    };
    let center = h(z);
    let mut hess = DMatrix::<f64>::zeros(dim, dim);
    for p in 0..dim {
        hess[(p, p)] =
            (shifted(&[(p, step)]) - 2.0 * center + shifted(&[(p, -step)])) / (step * step);
        for q in (p + 1)..dim {
            let v = (shifted(&[(p, step), (q, step)])
                - shifted(&[(p, step), (q, -step)])
                - shifted(&[(p, -step), (q, step)])
                + shifted(&[(p, -step), (q, -step)]))
                / (4.0 * step * step);
            hess[(p, q)] = v;
            hess[(q, p)] = v;
        }
    }
    DMatrix::from_fn(n, n, |a, b| {
        let (xa, ya, xb, yb) = (2 * a, 2 * a + 1, 2 * b, 2 * b + 1);
        Complex64::new(
            0.25 * (hess[(xa, xb)] + hess[(ya, yb)]),
            0.25 * (hess[(xa, yb)] - hess[(ya, xb)]),
        )
    })
}

/// Max-norm gap between `ricci_at` and −∂∂̄ log det g, the latter computed by
/// finite differences of the numerically evaluated determinant.
pub fn check_ricci_identity(
    profile: &RadialProfile,
    z: &PointCoordinates,
    step: f64,
) -> Result<f64> {
    let ricci = ricci_at(profile, z)?;
    let neg_log_det = |p: &PointCoordinates| {
        let g = metric_at(profile, p).expect("dimension already checked");
        -g.determinant().ln()
    };
    let fd = complex_hessian_fd(neg_log_det, z, step);
    Ok(HermitianForm { entries: fd }.max_abs_diff(&ricci))
}

/// Max-norm gap between `metric_at` and ∂∂̄P by finite differences of the potential.
pub fn check_potential_hessian(
    profile: &RadialProfile,
    z: &PointCoordinates,
    step: f64,
) -> Result<f64> {
    let g = metric_at(profile, z)?;
    let fd = complex_hessian_fd(|p| profile.potential(p.r()), z, step);
    Ok(HermitianForm { entries: fd }.max_abs_diff(&g))
}
