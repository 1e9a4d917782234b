//! Spectral calculus for finite complex Hermitian matrices.
//!
//! Every matrix function in the crate goes through [`SpectralDecomposition`]:
//! decompose once, map the eigenvalues, rebuild `U diag(f(λ)) U†` and
//! re-symmetrize with `(M + M†)/2`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Relative tolerance of the Hermiticity check.
pub const HERMITICITY_TOL: f64 = 1e-12;

/// Default eigenvalue floor used by spectral functions.
pub const DEFAULT_EIGENVALUE_FLOOR: f64 = 1e-12;

/// Relative tolerance on `|Im Tr|` in strict trace mode.
pub const STRICT_IMAG_TOL: f64 = 1e-8;

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITER: usize = 10_000;

/// `(M + M†)/2`. Idempotent bit-for-bit on its own output.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    CMatrix::from_fn(n, n, |j, k| (m[(j, k)] + m[(k, j)].conj()) * 0.5)
}

/// Largest entry modulus of `M − M†`, and the allowed deviation for `M`.
fn hermiticity_deviation(m: &CMatrix) -> (f64, f64) {
    let n = m.nrows();
    let mut deviation = 0.0_f64;
    let mut scale = 0.0_f64;
    for j in 0..n {
        for k in 0..n {
            deviation = deviation.max((m[(j, k)] - m[(k, j)].conj()).norm());
            scale = scale.max(m[(j, k)].norm());
        }
    }
    (deviation, HERMITICITY_TOL * scale)
}

fn check_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() == 0 {
        return Err(Error::InvalidMatrix("dimension must be at least 1".into()));
    }
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidMatrix(format!(
            "not square: {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

/// A finite-dimensional complex Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    m: CMatrix,
}

impl HermitianMatrix {
    /// Validates squareness and Hermiticity (relative to the largest entry).
    pub fn new(m: CMatrix) -> Result<Self> {
        check_square(&m)?;
        let (deviation, allowed) = hermiticity_deviation(&m);
        if deviation > allowed {
            return Err(Error::NonHermitian { deviation, allowed });
        }
        Ok(Self { m })
    }

    /// Keeps the Hermitian part of any square matrix.
    pub fn from_hermitian_part(m: &CMatrix) -> Result<Self> {
        check_square(m)?;
        Ok(Self {
            m: hermitian_part(m),
        })
    }

    pub(crate) fn from_hermitian_part_unchecked(m: &CMatrix) -> Self {
        Self {
            m: hermitian_part(m),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            m: CMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            m: CMatrix::zeros(dim, dim),
        }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self {
            m: CMatrix::from_fn(n, n, |j, k| {
                if j == k {
                    C64::new(diag[j], 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            }),
        }
    }

    /// Builds from real row-major entries (must be symmetric).
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidMatrix("ragged or non-square rows".into()));
        }
        Self::new(CMatrix::from_fn(n, n, |j, k| C64::new(rows[j][k], 0.0)))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        same_dim(self.dim(), other.dim())?;
        Ok(Self {
            m: &self.m + &other.m,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        same_dim(self.dim(), other.dim())?;
        Ok(Self {
            m: &self.m - &other.m,
        })
    }

    pub fn neg(&self) -> Self {
        Self { m: -&self.m }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            m: &self.m * C64::new(factor, 0.0),
        }
    }

    /// Plain matrix product; Hermitian only when the factors commute.
    pub fn mul(&self, other: &Self) -> Result<SquareMatrix> {
        same_dim(self.dim(), other.dim())?;
        Ok(SquareMatrix {
            m: &self.m * &other.m,
        })
    }

    /// `X H X` for Hermitian `X`, re-symmetrized.
    pub fn sandwich(&self, outer: &Self) -> Result<Self> {
        same_dim(self.dim(), outer.dim())?;
        Ok(Self::from_hermitian_part_unchecked(
            &(&outer.m * &self.m * &outer.m),
        ))
    }

    /// `C† H C` for an arbitrary square `C`, re-symmetrized.
    pub fn congruence(&self, c: &SquareMatrix) -> Result<Self> {
        same_dim(self.dim(), c.dim())?;
        Ok(Self::from_hermitian_part_unchecked(
            &(c.m.adjoint() * &self.m * &c.m),
        ))
    }

    /// `U H U†`.
    pub fn conjugate_by(&self, u: &CMatrix) -> Self {
        Self::from_hermitian_part_unchecked(&(u * &self.m * u.adjoint()))
    }

    /// `H²`, re-symmetrized.
    pub fn square(&self) -> Self {
        Self::from_hermitian_part_unchecked(&(&self.m * &self.m))
    }

    pub fn trace_real(&self) -> RealTrace {
        trace_real(&self.m)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.norm()
    }

    pub fn to_interchange(&self) -> MatrixInterchange {
        MatrixInterchange::from_matrix(&self.m)
    }

    pub fn from_interchange(file: &MatrixInterchange) -> Result<Self> {
        Self::new(file.to_matrix()?)
    }
}

/// A general square complex matrix (no symmetry requirement).
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    m: CMatrix,
}

impl SquareMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        check_square(&m)?;
        Ok(Self { m })
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn adjoint(&self) -> Self {
        Self {
            m: self.m.adjoint(),
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        same_dim(self.dim(), other.dim())?;
        Ok(Self {
            m: &self.m * &other.m,
        })
    }

    pub fn trace_real(&self) -> RealTrace {
        trace_real(&self.m)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.norm()
    }

    pub fn to_interchange(&self) -> MatrixInterchange {
        MatrixInterchange::from_matrix(&self.m)
    }

    pub fn from_interchange(file: &MatrixInterchange) -> Result<Self> {
        Self::new(file.to_matrix()?)
    }
}

impl From<HermitianMatrix> for SquareMatrix {
    fn from(h: HermitianMatrix) -> Self {
        Self { m: h.m }
    }
}

fn same_dim(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimMismatch(a, b));
    }
    Ok(())
}

/// Real part of a trace together with the discarded imaginary part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealTrace {
    pub value: f64,
    pub imag_residual: f64,
}

impl RealTrace {
    /// Rejects traces whose imaginary part exceeds `1e-8 · (1 + |Re|)`.
    pub fn strict(self) -> Result<f64> {
        if self.imag_residual > STRICT_IMAG_TOL * (1.0 + self.value.abs()) {
            return Err(Error::ImagResidual {
                real: self.value,
                imag: self.imag_residual,
            });
        }
        Ok(self.value)
    }
}

pub fn trace_real(m: &CMatrix) -> RealTrace {
    let t = m.trace();
    RealTrace {
        value: t.re,
        imag_residual: t.im.abs(),
    }
}

/// `Tr[PQ]` without forming the product.
pub fn trace_of_product(p: &CMatrix, q: &CMatrix) -> RealTrace {
    let n = p.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..n {
        for k in 0..n {
            acc += p[(j, k)] * q[(k, j)];
        }
    }
    RealTrace {
        value: acc.re,
        imag_residual: acc.im.abs(),
    }
}

/// Eigenvalues (ascending) and unitary eigenvector columns of a Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }

    /// `U diag(f(λ)) U†`, re-symmetrized. No domain checks.
    pub fn map_eigenvalues<F: Fn(f64) -> f64>(&self, f: F) -> HermitianMatrix {
        let u = &self.eigenvectors;
        let n = self.dim();
        let mut scaled = u.clone();
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            let w = f(lambda);
            for j in 0..n {
                scaled[(j, k)] *= w;
            }
        }
        HermitianMatrix::from_hermitian_part_unchecked(&(scaled * u.adjoint()))
    }

    /// Applies `f` with its domain policy (flooring, clipping, errors).
    pub fn apply(&self, f: ScalarFunction, floor: f64) -> Result<HermitianMatrix> {
        for &lambda in &self.eigenvalues {
            f.check_domain(lambda, floor)?;
        }
        Ok(self.map_eigenvalues(|lambda| f.eval(lambda, floor)))
    }

    pub fn reconstruct(&self) -> HermitianMatrix {
        self.map_eigenvalues(|lambda| lambda)
    }

    /// `φ_n† H φ_n` for every eigenvector column.
    pub fn diagonal_in_basis(&self, h: &HermitianMatrix) -> Vec<f64> {
        let u = &self.eigenvectors;
        (0..self.dim())
            .map(|n| {
                let phi = u.column(n);
                (phi.adjoint() * h.as_matrix() * phi)[(0, 0)].re
            })
            .collect()
    }
}

pub fn spectral_decompose(h: &HermitianMatrix) -> Result<SpectralDecomposition> {
    let dim = h.dim();
    let eig = h
        .as_matrix()
        .clone()
        .try_symmetric_eigen(EIGEN_EPS, EIGEN_MAX_ITER)
        .ok_or(Error::EigenFailure { dim })?;
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenFailure { dim });
    }
    // The QR solver leaves residual mixing of order 1e-9 between close
    // eigenvalues; a few Jacobi sweeps bring it to roundoff.
    let mut u = eig.eigenvectors;
    let mut w = hermitian_part(&(u.adjoint() * h.as_matrix() * &u));
    jacobi_polish(&mut w, &mut u, h.frobenius_norm())?;
    let values: Vec<f64> = (0..dim).map(|k| w[(k, k)].re).collect();
    let mut order: Vec<usize> = (0..dim).collect();
    // stable: ties keep solver order
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let eigenvalues = order.iter().map(|&k| values[k]).collect();
    let eigenvectors = CMatrix::from_fn(dim, dim, |j, k| u[(j, order[k])]);
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

const JACOBI_MAX_SWEEPS: usize = 60;

/// Cyclic complex Jacobi on a nearly diagonal Hermitian `w`, accumulating
/// the rotations into the columns of `u`.
fn jacobi_polish(w: &mut CMatrix, u: &mut CMatrix, norm: f64) -> Result<()> {
    let n = w.nrows();
    let tiny = f64::EPSILON * f64::EPSILON * norm;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let apq = w[(p, q)];
                let mag = apq.norm();
                let (app, aqq) = (w[(p, p)].re, w[(q, q)].re);
                if mag <= tiny || mag <= f64::EPSILON * (app.abs() * aqq.abs()).sqrt() * 0.5 {
                    continue;
                }
                rotated = true;
                let phase = apq / mag;
                let tau = (aqq - app) / (2.0 * mag);
                let t = if tau == 0.0 {
                    1.0
                } else {
                    tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // G restricted to (p, q) is diag(1, e^{-iφ}) · [[c, s], [−s, c]]
                let g_pp = C64::new(c, 0.0);
                let g_pq = C64::new(s, 0.0);
                let g_qp = -phase.conj() * s;
                let g_qq = phase.conj() * c;
                for k in 0..n {
                    let (x, y) = (w[(k, p)], w[(k, q)]);
                    w[(k, p)] = x * g_pp + y * g_qp;
                    w[(k, q)] = x * g_pq + y * g_qq;
                    let (x, y) = (u[(k, p)], u[(k, q)]);
                    u[(k, p)] = x * g_pp + y * g_qp;
                    u[(k, q)] = x * g_pq + y * g_qq;
                }
                for k in 0..n {
                    let (x, y) = (w[(p, k)], w[(q, k)]);
                    w[(p, k)] = g_pp.conj() * x + g_qp.conj() * y;
                    w[(q, k)] = g_pq.conj() * x + g_qq.conj() * y;
                }
                w[(p, q)] = C64::new(0.0, 0.0);
                w[(q, p)] = C64::new(0.0, 0.0);
                w[(p, p)] = C64::new(w[(p, p)].re, 0.0);
                w[(q, q)] = C64::new(w[(q, q)].re, 0.0);
            }
        }
        if !rotated {
            return Ok(());
        }
    }
    Err(Error::EigenFailure { dim: n })
}

/// Scalar functions that can be lifted to Hermitian matrices spectrally.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarFunction {
    /// `log λ`, with eigenvalues clipped below at the floor.
    Log,
    /// `λ^p`. Non-positive exponents floor the spectrum like `Log`; `0^p = 0` otherwise.
    Pow(f64),
    /// `−λ log λ`, continuous at 0.
    NegXLogX,
    /// `λ (log λ)²`, continuous at 0.
    XLogSq,
    /// `λ²`, defined everywhere.
    Square,
}

impl ScalarFunction {
    fn needs_floor(self) -> bool {
        match self {
            ScalarFunction::Log => true,
            ScalarFunction::Pow(p) => p <= 0.0,
            _ => false,
        }
    }

    fn check_domain(self, lambda: f64, floor: f64) -> Result<()> {
        if let ScalarFunction::Pow(p) = self {
            if !p.is_finite() {
                return Err(Error::InvalidInput(format!("non-finite exponent {p}")));
            }
        }
        if self != ScalarFunction::Square && lambda < -floor {
            return Err(Error::NegativeSpectrum {
                eigenvalue: lambda,
                floor,
            });
        }
        Ok(())
    }

    /// Scalar value after the domain policy. Assumes `check_domain` passed.
    pub fn eval(self, lambda: f64, floor: f64) -> f64 {
        let x = if self.needs_floor() {
            lambda.max(floor)
        } else if self == ScalarFunction::Square {
            lambda
        } else {
            lambda.max(0.0)
        };
        match self {
            ScalarFunction::Log => x.ln(),
            ScalarFunction::Pow(p) => {
                if x == 0.0 {
                    0.0
                } else {
                    x.powf(p)
                }
            }
            ScalarFunction::NegXLogX => neg_x_log_x(x),
            ScalarFunction::XLogSq => x_log_sq(x),
            ScalarFunction::Square => x * x,
        }
    }
}

pub fn neg_x_log_x(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        -x * x.ln()
    }
}

pub fn x_log_sq(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        let l = x.ln();
        x * l * l
    }
}

pub fn apply_spectral(h: &HermitianMatrix, f: ScalarFunction) -> Result<HermitianMatrix> {
    apply_spectral_with_floor(h, f, DEFAULT_EIGENVALUE_FLOOR)
}

pub fn apply_spectral_with_floor(
    h: &HermitianMatrix,
    f: ScalarFunction,
    floor: f64,
) -> Result<HermitianMatrix> {
    spectral_decompose(h)?.apply(f, floor)
}

/// Minimum eigenvalue of `B − A`; `A ≤ B` in Loewner order iff it is `≥ −tol`.
pub fn loewner_margin(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<f64> {
    let diff = b.sub(a)?;
    Ok(spectral_decompose(&diff)?.min_eigenvalue())
}

pub fn min_eigenvalue(h: &HermitianMatrix) -> Result<f64> {
    Ok(spectral_decompose(h)?.min_eigenvalue())
}

/// Text interchange form of a square complex matrix: `{dim, re, im}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixInterchange {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixInterchange {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let n = m.nrows();
        Self {
            dim: n,
            re: (0..n).map(|j| (0..n).map(|k| m[(j, k)].re).collect()).collect(),
            im: (0..n).map(|j| (0..n).map(|k| m[(j, k)].im).collect()).collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        let n = self.dim;
        if n == 0 {
            return Err(Error::InvalidMatrix("dim must be at least 1".into()));
        }
        for (name, rows) in [("re", &self.re), ("im", &self.im)] {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(Error::InvalidMatrix(format!(
                    "'{name}' is not a {n}x{n} array"
                )));
            }
        }
        Ok(CMatrix::from_fn(n, n, |j, k| {
            C64::new(self.re[j][k], self.im[j][k])
        }))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let file: Self =
            serde_json::from_str(text).map_err(|e| Error::InvalidMatrix(e.to_string()))?;
        file.to_matrix()?;
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("matrix interchange serializes")
    }
}
