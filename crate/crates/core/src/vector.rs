use crate::error::{Error, Result};
use crate::hermitian::{CVector, C64};

/// Tolerance on `‖φ‖ = 1`.
pub const TOL_UNIT: f64 = 1e-12;

/// A pure state: a complex vector of norm one.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitVector {
    v: CVector,
}

impl UnitVector {
    /// Accepts `v` only if its norm is within [`TOL_UNIT`] of one.
    pub fn new(v: CVector) -> Result<Self> {
        let norm = v.norm();
        if v.is_empty() || (norm - 1.0).abs() > TOL_UNIT {
            return Err(Error::NotUnitVector { norm });
        }
        Ok(Self { v })
    }

    pub fn normalize(v: CVector) -> Result<Self> {
        let norm = v.norm();
        if v.is_empty() || norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroVector);
        }
        Ok(Self { v: v.unscale(norm) })
    }

    /// Standard basis vector `e_{index}` (zero-based).
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index out of range");
        let mut v = CVector::zeros(dim);
        v[index] = C64::new(1.0, 0.0);
        Self { v }
    }

    pub fn from_real(components: &[f64]) -> Result<Self> {
        Self::normalize(CVector::from_iterator(
            components.len(),
            components.iter().map(|&x| C64::new(x, 0.0)),
        ))
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    pub fn as_vector(&self) -> &CVector {
        &self.v
    }

    /// `⟨self, other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.v.dotc(&other.v)
    }

    pub fn conj(&self) -> Self {
        Self {
            v: self.v.map(|z| z.conj()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_and_reject_zero() {
        let u = UnitVector::from_real(&[3.0, 4.0]).unwrap();
        assert!((u.as_vector().norm() - 1.0).abs() < 1e-15);
        assert!(matches!(UnitVector::from_real(&[0.0, 0.0]), Err(Error::ZeroVector)));
    }

    #[test]
    fn strict_constructor_checks_norm() {
        let v = CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]);
        assert!(matches!(UnitVector::new(v), Err(Error::NotUnitVector { .. })));
        assert!(UnitVector::new(UnitVector::basis(3, 2).as_vector().clone()).is_ok());
    }
}
