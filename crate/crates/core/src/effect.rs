//! The effect interval `[0, I]` and its relations.

use crate::error::{Error, Result};
use crate::hermitian::{psd_from_spectrum, psd_leq, CMatrix, CVector, HermitianMatrix, C64, TOL_PSD};
use crate::vector::UnitVector;

/// Absolute tolerance on the Frobenius residual of a mixture fit.
pub const TOL_MIX: f64 = 1e-8;
/// Relative tolerance on commutator norms.
pub const TOL_COMMUTE: f64 = 1e-9;

/// A Hermitian matrix with `0 ⪯ E ⪯ I`.
#[derive(Clone, Debug, PartialEq)]
pub struct Effect {
    m: HermitianMatrix,
}

impl Effect {
    /// Fails with both spectral extremes when the matrix leaves `[0, I]`.
    pub fn new(m: HermitianMatrix) -> Result<Self> {
        let ev = m.eigenvalues()?;
        let (min, max) = (ev[0], ev[ev.len() - 1]);
        let upper: Vec<f64> = ev.iter().rev().map(|&x| 1.0 - x).collect();
        if !psd_from_spectrum(&ev, TOL_PSD) || !psd_from_spectrum(&upper, TOL_PSD) {
            return Err(Error::NotAnEffect { min, max });
        }
        Ok(Self { m })
    }

    /// `λ I`.
    pub fn scalar(lambda: f64, dim: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::ScalarOutOfRange(lambda));
        }
        Ok(Self {
            m: HermitianMatrix::scaled_identity(dim, lambda),
        })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            m: HermitianMatrix::zeros(dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            m: HermitianMatrix::identity(dim),
        }
    }

    /// Clips the spectrum of `m` into `[0, 1]`.
    pub fn clamped(m: &HermitianMatrix) -> Result<Self> {
        Ok(Self {
            m: m.map_spectrum(|x| x.clamp(0.0, 1.0))?,
        })
    }

    pub fn dim(&self) -> usize {
        self.m.dim()
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> HermitianMatrix {
        self.m
    }

    /// `I − E`.
    pub fn complement(&self) -> Self {
        Self {
            m: HermitianMatrix::identity(self.dim())
                .sub(&self.m)
                .expect("same dimension"),
        }
    }

    pub fn scale(&self, s: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::ScalarOutOfRange(s));
        }
        Ok(Self { m: self.m.scale(s) })
    }

    /// `E + F`, which need not be an effect.
    pub fn sum(&self, other: &Self) -> Result<HermitianMatrix> {
        self.m.add(&other.m)
    }

    pub fn leq(&self, other: &Self) -> Result<bool> {
        psd_leq(&self.m, &other.m, TOL_PSD)
    }

    /// `E ⪯ I − F`, equivalently `E + F ⪯ I`.
    pub fn orthogonal(&self, other: &Self) -> Result<bool> {
        self.m.check_dim(&other.m)?;
        self.leq(&other.complement())
    }

    /// Largest `λ ∈ [0, 1]` with `λ P_φ ⪯ E`.
    ///
    /// Uses the closed form `‖E^{-1/2} φ‖^{-2}` on `rng E`, with `E^{-1/2}`
    /// the pseudo-inverse square root over eigenvalues above `TOL_PSD`;
    /// rays with weight on the kernel have strength zero. The function is
    /// discontinuous in `φ` at the kernel.
    pub fn strength_along(&self, phi: &UnitVector) -> Result<f64> {
        self.check_vector(phi)?;
        let decomposition = self.m.eig()?;
        let v = phi.as_vector();
        let mut kernel_weight = 0.0;
        let mut inverse_form = 0.0;
        for (i, &mu) in decomposition.eigenvalues.iter().enumerate() {
            let w = decomposition.eigenvectors.column(i).dotc(v).norm_sqr();
            if mu <= TOL_PSD {
                kernel_weight += w;
            } else {
                inverse_form += w / mu;
            }
        }
        if kernel_weight.sqrt() > TOL_PSD || inverse_form == 0.0 {
            return Ok(0.0);
        }
        Ok((1.0 / inverse_form).clamp(0.0, 1.0))
    }

    /// Strength along a rank-1 projection.
    pub fn strength(&self, p: &Projection) -> Result<f64> {
        self.strength_along(&p.generator()?)
    }

    /// `⟨E φ, φ⟩`.
    pub fn probability(&self, phi: &UnitVector) -> Result<f64> {
        self.check_vector(phi)?;
        self.m.quadratic_form(phi.as_vector())
    }

    /// The largest weak atom `λ(E, P_φ) P_φ` below `E` along `φ`.
    pub fn weak_atom(&self, phi: &UnitVector) -> Result<Self> {
        let s = self.strength_along(phi)?;
        Ok(Self {
            m: Projection::rank1(phi).matrix().scale(s),
        })
    }

    fn check_vector(&self, phi: &UnitVector) -> Result<()> {
        if phi.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: phi.dim(),
            });
        }
        Ok(())
    }
}

/// `A ⪯ B` decided through orthogonality: `A` is orthogonal to `I − B`.
pub fn order_witness(a: &Effect, b: &Effect) -> Result<bool> {
    a.m.check_dim(&b.m)?;
    a.orthogonal(&b.complement())
}

/// Operator norm of `EF − FE`.
pub fn commutator_norm(e: &HermitianMatrix, f: &HermitianMatrix) -> Result<f64> {
    // i[E, F] is Hermitian with the same norm.
    let c = e.commutator(f)?.map(|z| z * C64::new(0.0, 1.0));
    HermitianMatrix::new(c)?.op_norm()
}

/// `‖EF − FE‖ ≤ tol · max(1, ‖E‖ ‖F‖)`.
pub fn commutes(e: &Effect, f: &Effect, tol: f64) -> Result<bool> {
    let scale = (e.m.op_norm()? * f.m.op_norm()?).max(1.0);
    Ok(commutator_norm(&e.m, &f.m)? <= tol * scale)
}

/// Returns `t` with `A = t B + (1 − t) C` when such a convex coefficient
/// exists, fitted in the Frobenius norm.
pub fn is_mixture(a: &Effect, b: &Effect, c: &Effect) -> Result<Option<f64>> {
    is_mixture_with(a, b, c, TOL_MIX)
}

/// [`is_mixture`] with an explicit residual tolerance.
pub fn is_mixture_with(a: &Effect, b: &Effect, c: &Effect, tol: f64) -> Result<Option<f64>> {
    a.m.check_dim(&b.m)?;
    a.m.check_dim(&c.m)?;
    let direction = b.m.sub(&c.m)?;
    let spread = direction.frobenius_norm();
    if spread <= tol {
        let close = a.m.sub(&b.m)?.frobenius_norm() <= tol;
        return Ok(close.then_some(1.0));
    }
    let offset = a.m.sub(&c.m)?;
    let t = offset.frobenius_inner(&direction)? / (spread * spread);
    if !(-tol..=1.0 + tol).contains(&t) {
        return Ok(None);
    }
    let fit = direction.scale(t).add(&c.m)?;
    let residual = a.m.sub(&fit)?.frobenius_norm();
    Ok((residual <= tol * spread.max(1.0)).then_some(t.clamp(0.0, 1.0)))
}

/// An orthogonal projection, stored as an effect with spectrum `{0, 1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    effect: Effect,
    rank: usize,
}

impl Projection {
    pub fn new(m: HermitianMatrix) -> Result<Self> {
        let square = HermitianMatrix::new(m.product(&m)?)?;
        let residual = square.sub(&m)?.op_norm()?;
        if residual > TOL_PSD {
            return Err(Error::NotAProjection { residual });
        }
        let rank = m.eigenvalues()?.iter().filter(|&&x| x > 0.5).count();
        Ok(Self {
            effect: Effect::new(m)?,
            rank,
        })
    }

    /// `P_φ = φ φ†`.
    pub fn rank1(phi: &UnitVector) -> Self {
        Self {
            effect: Effect {
                m: HermitianMatrix::outer(phi.as_vector()),
            },
            rank: 1,
        }
    }

    /// Projection onto the span of the given orthonormal columns.
    pub fn onto_columns(basis: &CMatrix) -> Result<Self> {
        if basis.ncols() == 0 {
            return Ok(Self {
                effect: Effect::zero(basis.nrows()),
                rank: 0,
            });
        }
        Self::new(HermitianMatrix::new(basis * basis.adjoint())?)
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            effect: Effect::zero(dim),
            rank: 0,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            effect: Effect::identity(dim),
            rank: dim,
        }
    }

    pub fn effect(&self) -> &Effect {
        &self.effect
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.effect.m
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.effect.dim()
    }

    /// `I − P`.
    pub fn complement(&self) -> Self {
        Self {
            effect: self.effect.complement(),
            rank: self.dim() - self.rank,
        }
    }

    /// Orthonormal basis of the range, as columns.
    pub fn range_basis(&self) -> Result<CMatrix> {
        let d = self.matrix().eig()?;
        let cols: Vec<CVector> = (0..d.dim())
            .filter(|&i| d.eigenvalues[i] > 0.5)
            .map(|i| d.eigenvector(i))
            .collect();
        Ok(if cols.is_empty() {
            CMatrix::zeros(self.dim(), 0)
        } else {
            CMatrix::from_columns(&cols)
        })
    }

    /// The unit vector spanning a rank-1 projection.
    pub fn generator(&self) -> Result<UnitVector> {
        if self.rank != 1 {
            return Err(Error::NotRankOne { rank: self.rank });
        }
        let d = self.matrix().eig()?;
        UnitVector::normalize(d.eigenvector(d.dim() - 1))
    }
}

/// Given projections with `PQ ≠ 0`, returns `P₀ ⪯ P` and `Q₀ ⪯ Q` that do
/// not commute; `None` when `PQ = 0`.
///
/// Non-commuting inputs are their own witness. For commuting inputs a unit
/// `x ∈ rng PQ` is paired with a unit `y ⊥ x` from whichever range has room,
/// giving `P_x` and `P_{(x+y)/√2}` with commutator norm `1/2`.
pub fn noncommuting_subprojections(
    p: &Projection,
    q: &Projection,
) -> Result<Option<(Projection, Projection)>> {
    p.matrix().check_dim(q.matrix())?;
    if p.rank() == 0 || q.rank() == 0 {
        return Err(Error::DegenerateInput("projections must be nonzero".into()));
    }
    if p.matrix().sub(q.matrix())?.op_norm()? <= TOL_PSD {
        return Err(Error::DegenerateInput("projections must differ".into()));
    }
    let pq = p.matrix().product(q.matrix())?;
    if column_norms(&pq).into_iter().fold(0.0, f64::max) <= TOL_PSD {
        return Ok(None);
    }
    if commutator_norm(p.matrix(), q.matrix())? > TOL_PSD {
        return Ok(Some((p.clone(), q.clone())));
    }
    let x = largest_column(&pq, TOL_PSD).expect("PQ is nonzero");
    if let Some(y) = orthogonal_in_range(q, &x) {
        let tilted = UnitVector::normalize(x.as_vector() + y.as_vector())?;
        return Ok(Some((Projection::rank1(&x), Projection::rank1(&tilted))));
    }
    let y = orthogonal_in_range(p, &x).ok_or_else(|| {
        Error::DegenerateInput("commuting rank-1 projections with PQ != 0 coincide".into())
    })?;
    let tilted = UnitVector::normalize(x.as_vector() + y.as_vector())?;
    Ok(Some((Projection::rank1(&tilted), Projection::rank1(&x))))
}

fn column_norms(m: &CMatrix) -> Vec<f64> {
    m.column_iter().map(|c| c.norm()).collect()
}

fn largest_column(m: &CMatrix, threshold: f64) -> Option<UnitVector> {
    let norms = column_norms(m);
    let (j, &best) = norms
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    if best <= threshold {
        return None;
    }
    UnitVector::normalize(m.column(j).into_owned()).ok()
}

/// A unit vector of `rng P` orthogonal to `x`, from Gram–Schmidt on `P`'s columns.
fn orthogonal_in_range(p: &Projection, x: &UnitVector) -> Option<UnitVector> {
    let xv = x.as_vector();
    let mut residuals = p.matrix().as_matrix().clone();
    for mut col in residuals.column_iter_mut() {
        let overlap = xv.dotc(&col);
        col -= xv * overlap;
    }
    largest_column(&residuals, 1e-6)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const S: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn diag(d: &[f64]) -> Effect {
        Effect::new(HermitianMatrix::from_real_diagonal(d)).unwrap()
    }

    fn ray(v: &[f64]) -> Projection {
        Projection::rank1(&UnitVector::from_real(v).unwrap())
    }

    #[test]
    fn effect_construction() {
        assert!(Effect::new(HermitianMatrix::identity(2)).is_ok());
        assert!(Effect::new(HermitianMatrix::from_real_diagonal(&[0.3, 0.9])).is_ok());
        match Effect::new(HermitianMatrix::scaled_identity(2, 1.2)) {
            Err(Error::NotAnEffect { max, .. }) => assert_abs_diff_eq!(max, 1.2, epsilon = 1e-14),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            Effect::new(HermitianMatrix::from_real_diagonal(&[-0.1, 0.5])),
            Err(Error::NotAnEffect { .. })
        ));
    }

    #[test]
    fn scalar_effects() {
        assert_eq!(Effect::scalar(0.0, 2).unwrap(), Effect::zero(2));
        assert_eq!(Effect::scalar(1.0, 2).unwrap(), Effect::identity(2));
        assert_eq!(Effect::scalar(0.5, 3).unwrap().matrix().trace(), 1.5);
        assert!(matches!(Effect::scalar(1.5, 2), Err(Error::ScalarOutOfRange(_))));
        assert!(Effect::scalar(-0.1, 2).is_err());
    }

    #[test]
    fn rank1_projection_examples() {
        let p = Projection::rank1(&UnitVector::basis(2, 0));
        assert_eq!(p.matrix(), &HermitianMatrix::from_real_diagonal(&[1.0, 0.0]));
        let q = ray(&[1.0, 1.0]);
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(q.matrix().get(i, j).re, 0.5, epsilon = 1e-15);
            }
        }
        assert_abs_diff_eq!(q.matrix().trace(), 1.0, epsilon = 1e-15);
        assert!(Projection::new(q.matrix().clone()).is_ok());
        assert_eq!(Projection::new(q.matrix().clone()).unwrap().rank(), 1);
    }

    #[test]
    fn projection_rejects_non_idempotent() {
        assert!(matches!(
            Projection::new(HermitianMatrix::scaled_identity(2, 0.5)),
            Err(Error::NotAProjection { .. })
        ));
    }

    #[test]
    fn complement_examples() {
        assert_eq!(Effect::zero(2).complement(), Effect::identity(2));
        let half = Effect::scalar(0.5, 2).unwrap();
        assert_eq!(half.complement(), half);
    }

    #[test]
    fn order_examples() {
        let p = ray(&[1.0, 2.0]);
        let q = ray(&[2.0, -1.0]);
        assert!(p.effect().scale(0.3).unwrap().leq(p.effect()).unwrap());
        assert!(!p.effect().leq(q.effect()).unwrap());
        assert!(q.effect().leq(&Effect::identity(2)).unwrap());
        assert!(matches!(
            p.effect().leq(&Effect::identity(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn orthogonality_examples() {
        let half = Effect::scalar(0.5, 2).unwrap();
        assert!(half.orthogonal(&half).unwrap());
        let i = Effect::identity(2);
        assert!(!i.orthogonal(&i).unwrap());
        let p = ray(&[0.3, 0.7]);
        assert!(p.effect().orthogonal(p.complement().effect()).unwrap());
    }

    #[test]
    fn order_witness_examples() {
        let i = Effect::identity(2);
        let half = Effect::scalar(0.5, 2).unwrap();
        assert!(!order_witness(&i, &half).unwrap());
        assert!(order_witness(&half, &i).unwrap());
    }

    #[test]
    fn commutation_examples() {
        assert!(commutes(&diag(&[0.1, 0.8]), &diag(&[0.5, 0.2]), TOL_COMMUTE).unwrap());
        let p = ray(&[1.0, 0.0]);
        let q = ray(&[1.0, 1.0]);
        assert_abs_diff_eq!(
            commutator_norm(p.matrix(), q.matrix()).unwrap(),
            0.5,
            epsilon = 1e-14
        );
        assert!(!commutes(p.effect(), q.effect(), TOL_COMMUTE).unwrap());
    }

    #[test]
    fn strength_examples() {
        let phi = UnitVector::from_real(&[0.6, 0.8]).unwrap();
        let scalar = Effect::scalar(0.35, 2).unwrap();
        assert_abs_diff_eq!(scalar.strength_along(&phi).unwrap(), 0.35, epsilon = 1e-14);

        // λ(P, P_φ) = 0 although Pφ ≠ 0
        let p = ray(&[1.0, 0.0]);
        assert_eq!(p.effect().strength_along(&phi).unwrap(), 0.0);

        // grid-search oracle value
        let e = diag(&[0.5, 0.25]);
        assert_abs_diff_eq!(
            e.strength_along(&UnitVector::basis(2, 0)).unwrap(),
            0.5,
            epsilon = 1e-14
        );
        assert!(matches!(
            e.strength(&Projection::identity(2)),
            Err(Error::NotRankOne { rank: 2 })
        ));
    }

    #[test]
    fn probability_examples() {
        let phi = UnitVector::from_real(&[1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(Effect::identity(2).probability(&phi).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            Projection::rank1(&phi).effect().probability(&phi).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(diag(&[0.5, 0.25]).probability(&phi).unwrap(), 0.375, epsilon = 1e-15);
        assert!(diag(&[0.5, 0.25]).probability(&UnitVector::basis(3, 0)).is_err());
    }

    #[test]
    fn weak_atom_examples() {
        let phi = UnitVector::from_real(&[0.2, -0.9]).unwrap();
        let atom = Effect::identity(2).weak_atom(&phi).unwrap();
        let pphi = Projection::rank1(&phi);
        assert!(atom.matrix().sub(pphi.matrix()).unwrap().frobenius_norm() < 1e-14);

        let e = diag(&[0.7, 0.2]);
        let atom = e.weak_atom(&UnitVector::basis(2, 1)).unwrap();
        assert_abs_diff_eq!(atom.matrix().get(1, 1).re, 0.2, epsilon = 1e-14);

        let kernel = diag(&[0.7, 0.0]);
        let atom = kernel.weak_atom(&UnitVector::basis(2, 1)).unwrap();
        assert_eq!(atom.matrix().frobenius_norm(), 0.0);
    }

    #[test]
    fn mixture_examples() {
        let b = diag(&[0.9, 0.1]);
        let c = diag(&[0.2, 0.6]);
        assert_eq!(is_mixture(&b, &b, &c).unwrap(), Some(1.0));
        let mid = Effect::new(b.matrix().add(c.matrix()).unwrap().scale(0.5)).unwrap();
        assert_abs_diff_eq!(is_mixture(&mid, &b, &c).unwrap().unwrap(), 0.5, epsilon = 1e-12);
        let p = ray(&[1.0, 0.0]);
        assert_eq!(
            is_mixture(p.effect(), &Effect::zero(2), &Effect::identity(2)).unwrap(),
            None
        );
        // degenerate family B = C
        assert_eq!(is_mixture(&b, &c, &c).unwrap(), None);
        assert_eq!(is_mixture(&c, &c, &c).unwrap(), Some(1.0));
        // off the affine line through B and C
        let outside = Effect::new(HermitianMatrix::from_real_diagonal(&[1.0, 0.0])).unwrap();
        assert_eq!(is_mixture(&outside, &b, &c).unwrap(), None);
    }

    #[test]
    fn subprojection_witness_examples() {
        let e1 = ray(&[1.0, 0.0, 0.0]);
        let e2 = ray(&[0.0, 1.0, 0.0]);
        assert!(noncommuting_subprojections(&e1, &e2).unwrap().is_none());

        let p = ray(&[1.0, 0.0]);
        let q = ray(&[1.0, 1.0]);
        let (p0, q0) = noncommuting_subprojections(&p, &q).unwrap().unwrap();
        assert_eq!((&p0, &q0), (&p, &q));

        let plane = Projection::new(HermitianMatrix::from_real_diagonal(&[1.0, 1.0, 0.0])).unwrap();
        let (p0, q0) = noncommuting_subprojections(&e1, &plane).unwrap().unwrap();
        assert!(p0.matrix().sub(e1.matrix()).unwrap().frobenius_norm() < 1e-14);
        let want = ray(&[S, S, 0.0]);
        assert!(q0.matrix().sub(want.matrix()).unwrap().frobenius_norm() < 1e-14);
        assert_abs_diff_eq!(
            commutator_norm(p0.matrix(), q0.matrix()).unwrap(),
            0.5,
            epsilon = 1e-14
        );
        // reversed roles use the larger parent for the tilted ray
        let (p0, q0) = noncommuting_subprojections(&plane, &e1).unwrap().unwrap();
        assert!(p0.effect().leq(plane.effect()).unwrap());
        assert!(q0.effect().leq(e1.effect()).unwrap());
        assert_abs_diff_eq!(
            commutator_norm(p0.matrix(), q0.matrix()).unwrap(),
            0.5,
            epsilon = 1e-14
        );
    }

    #[test]
    fn subprojection_witness_rejects_degenerate() {
        let p = ray(&[1.0, 0.0]);
        assert!(matches!(
            noncommuting_subprojections(&p, &p),
            Err(Error::DegenerateInput(_))
        ));
        assert!(noncommuting_subprojections(&p, &Projection::zero(2)).is_err());
    }
}
