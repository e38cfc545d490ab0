//! Dense complex Hermitian matrices and their spectral calculus.
//!
//! Every [`HermitianMatrix`] is exactly Hermitian: the constructor replaces
//! `M` by `(M + M†) / 2`, so round-off in loaded or computed inputs never
//! leaks into the eigensolver.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::function::MonotoneFunction;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Relative residual allowed for an eigendecomposition.
pub const TOL_EIG: f64 = 1e-10;
/// Default relative tolerance of every PSD test.
pub const TOL_PSD: f64 = 1e-9;

const EIG_EPS: f64 = 1e-15;
const EIG_MAX_ITERATIONS: usize = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    m: CMatrix,
}

#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `i` is the unit eigenvector for `eigenvalues[i]`.
    pub eigenvectors: CMatrix,
}

impl HermitianMatrix {
    /// Symmetrizes `m` to `(m + m†) / 2`.
    pub fn new(m: CMatrix) -> Result<Self> {
        let (rows, cols) = m.shape();
        if rows != cols || rows == 0 {
            return Err(Error::Shape { rows, cols });
        }
        Ok(Self::symmetrized(m))
    }

    fn symmetrized(m: CMatrix) -> Self {
        let adj = m.adjoint();
        Self {
            m: (m + adj).scale(0.5),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "dim must be at least 1");
        Self {
            m: CMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        assert!(dim >= 1, "dim must be at least 1");
        Self {
            m: CMatrix::identity(dim, dim),
        }
    }

    pub fn scaled_identity(dim: usize, value: f64) -> Self {
        Self::identity(dim).scale(value)
    }

    pub fn from_real_diagonal(diagonal: &[f64]) -> Self {
        assert!(!diagonal.is_empty(), "dim must be at least 1");
        let d = DVector::from_iterator(diagonal.len(), diagonal.iter().map(|&x| C64::new(x, 0.0)));
        Self {
            m: CMatrix::from_diagonal(&d),
        }
    }

    /// Builds from row-major real and imaginary parts.
    pub fn from_parts(re: &[Vec<f64>], im: &[Vec<f64>]) -> Result<Self> {
        let n = re.len();
        if n == 0 || im.len() != n {
            return Err(Error::Shape {
                rows: n,
                cols: im.len(),
            });
        }
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            if re[i].len() != n || im[i].len() != n {
                return Err(Error::Shape {
                    rows: n,
                    cols: re[i].len().max(im[i].len()),
                });
            }
            for j in 0..n {
                m[(i, j)] = C64::new(re[i][j], im[i][j]);
            }
        }
        Self::new(m)
    }

    /// Rank-1 operator `v v†`.
    pub fn outer(v: &CVector) -> Self {
        Self::symmetrized(v * v.adjoint())
    }

    /// `U M U†` for an arbitrary square `U`.
    pub fn conjugate_by(&self, u: &CMatrix) -> Self {
        Self::symmetrized(u * &self.m * u.adjoint())
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

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.m[(i, j)]
    }

    /// Entrywise complex conjugate in the standard basis.
    pub fn conj(&self) -> Self {
        Self {
            m: self.m.map(|z| z.conj()),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            m: self.m.map(|z| z * s),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self {
            m: &self.m + &other.m,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self {
            m: &self.m - &other.m,
        })
    }

    /// The plain matrix product; Hermitian only when the factors commute.
    pub fn product(&self, other: &Self) -> Result<CMatrix> {
        self.check_dim(other)?;
        Ok(&self.m * &other.m)
    }

    /// `(AB + BA) / 2`.
    pub fn jordan_product(&self, other: &Self) -> Result<Self> {
        let ab = self.product(other)?;
        Ok(Self::symmetrized(ab))
    }

    /// `A B - B A`.
    pub fn commutator(&self, other: &Self) -> Result<CMatrix> {
        self.check_dim(other)?;
        Ok(&self.m * &other.m - &other.m * &self.m)
    }

    pub fn trace(&self) -> f64 {
        self.m.trace().re
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.norm()
    }

    /// `Re tr(A† B)`.
    pub fn frobenius_inner(&self, other: &Self) -> Result<f64> {
        self.check_dim(other)?;
        Ok(self
            .m
            .iter()
            .zip(other.m.iter())
            .map(|(a, b)| (a.conj() * b).re)
            .sum())
    }

    /// `⟨M v, v⟩`, real for Hermitian `M`.
    pub fn quadratic_form(&self, v: &CVector) -> Result<f64> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: v.len(),
            });
        }
        Ok(v.dotc(&(&self.m * v)).re)
    }

    pub fn apply_to(&self, v: &CVector) -> Result<CVector> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: v.len(),
            });
        }
        Ok(&self.m * v)
    }

    pub fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(())
    }

    pub fn eig(&self) -> Result<EigenDecomposition> {
        let dim = self.dim();
        let se = SymmetricEigen::try_new(self.m.clone(), EIG_EPS, EIG_MAX_ITERATIONS).ok_or(
            Error::SolverFailure {
                dim,
                max_iterations: EIG_MAX_ITERATIONS,
            },
        )?;
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
        let eigenvalues = order.iter().map(|&k| se.eigenvalues[k]).collect();
        let mut eigenvectors = CMatrix::zeros(dim, dim);
        for (col, &k) in order.iter().enumerate() {
            eigenvectors.set_column(col, &se.eigenvectors.column(k));
        }
        Ok(EigenDecomposition {
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(self.eig()?.eigenvalues)
    }

    pub fn lambda_min(&self) -> Result<f64> {
        Ok(self.eigenvalues()?[0])
    }

    pub fn lambda_max(&self) -> Result<f64> {
        Ok(*self.eigenvalues()?.last().expect("dim >= 1"))
    }

    /// Operator norm, `max |λ_i|`.
    pub fn op_norm(&self) -> Result<f64> {
        let ev = self.eigenvalues()?;
        Ok(ev.iter().fold(0.0_f64, |acc, &x| acc.max(x.abs())))
    }

    /// `λ_min ≥ -tol · max(1, ‖M‖)`.
    pub fn is_psd(&self, tol: f64) -> Result<bool> {
        let ev = self.eigenvalues()?;
        Ok(psd_from_spectrum(&ev, tol))
    }

    /// `V f(Λ) V†` for an arbitrary real function of the spectrum.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Ok(self.eig()?.reassemble(f))
    }

    /// Functional calculus for a catalog function on `[0, 1]`.
    ///
    /// Eigenvalues within tolerance of the domain are clamped into `[0, 1]`
    /// before `f` is applied.
    pub fn apply_function(&self, f: &MonotoneFunction) -> Result<Self> {
        let decomposition = self.eig()?;
        let ev = &decomposition.eigenvalues;
        let (min, max) = (ev[0], ev[ev.len() - 1]);
        let slack = TOL_PSD * 1.0_f64.max(min.abs().max(max.abs()));
        if min < -slack || max > 1.0 + slack {
            return Err(Error::Domain { min, max });
        }
        Ok(decomposition.reassemble(|x| f.eval(x.clamp(0.0, 1.0))))
    }

    /// Positive square root of a PSD matrix.
    pub fn sqrt_psd(&self) -> Result<Self> {
        let decomposition = self.eig()?;
        if !psd_from_spectrum(&decomposition.eigenvalues, TOL_PSD) {
            return Err(Error::NotPsd {
                min: decomposition.eigenvalues[0],
            });
        }
        Ok(decomposition.reassemble(|x| x.max(0.0).sqrt()))
    }

    /// Whether `φ ∈ rng M^{1/2}`. In finite dimensions this is `rng M`, so the
    /// test is that `φ` has at most `tol` weight on eigenvectors whose
    /// eigenvalue is at most `tol`.
    pub fn range_contains_sqrt(&self, phi: &CVector, tol: f64) -> Result<bool> {
        if phi.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: phi.len(),
            });
        }
        let decomposition = self.eig()?;
        let kernel_weight: f64 = decomposition
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, &mu)| mu <= tol)
            .map(|(i, _)| decomposition.eigenvectors.column(i).dotc(phi).norm_sqr())
            .sum();
        Ok(kernel_weight.sqrt() <= tol)
    }
}

/// `A ⪯ B` in the PSD order, tested as `is_psd(B - A, tol)`.
pub fn psd_leq(a: &HermitianMatrix, b: &HermitianMatrix, tol: f64) -> Result<bool> {
    b.sub(a)?.is_psd(tol)
}

pub(crate) fn psd_from_spectrum(ev: &[f64], tol: f64) -> bool {
    let norm = ev.iter().fold(0.0_f64, |acc, &x| acc.max(x.abs()));
    ev[0] >= -tol * norm.max(1.0)
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, i: usize) -> CVector {
        self.eigenvectors.column(i).into_owned()
    }

    /// `V f(Λ) V†`.
    pub fn reassemble(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let n = self.dim();
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (j, &lambda) in self.eigenvalues.iter().enumerate() {
            let fj = f(lambda);
            for i in 0..n {
                scaled[(i, j)] *= fj;
            }
        }
        HermitianMatrix::symmetrized(scaled * v.adjoint())
    }

    /// `max_i ‖M v_i − λ_i v_i‖`.
    pub fn residual(&self, m: &HermitianMatrix) -> f64 {
        (0..self.dim())
            .map(|i| {
                let v = self.eigenvector(i);
                (m.as_matrix() * &v - v.scale(self.eigenvalues[i])).norm()
            })
            .fold(0.0, f64::max)
    }

    /// `‖V†V − I‖` (Frobenius).
    pub fn orthonormality_defect(&self) -> f64 {
        let n = self.dim();
        (self.eigenvectors.adjoint() * &self.eigenvectors - CMatrix::identity(n, n)).norm()
    }
}

/// `‖U†U − I‖` in the Frobenius norm.
pub fn unitarity_residual(u: &CMatrix) -> f64 {
    let n = u.nrows();
    (u.adjoint() * u - CMatrix::identity(n, n)).norm()
}
