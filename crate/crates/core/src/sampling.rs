//! Seeded samplers for matrices, states and effects.

use crate::effect::{Effect, Projection};
use crate::error::Result;
use crate::hermitian::{CMatrix, CVector, HermitianMatrix, C64};
use crate::rng::SeededRng;
use crate::vector::UnitVector;

/// Standard complex Gaussian: real and imaginary parts `N(0, 1/2)`.
pub fn complex_normal(rng: &mut SeededRng) -> C64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    C64::new(rng.normal() * s, rng.normal() * s)
}

pub fn complex_gaussian_matrix(rng: &mut SeededRng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the phases of
/// `diag(R)` moved into `Q`.
pub fn haar_unitary(rng: &mut SeededRng, dim: usize) -> CMatrix {
    assert!(dim >= 1, "dim must be at least 1");
    let g = complex_gaussian_matrix(rng, dim, dim);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Uniform on the unit sphere of `C^dim`.
pub fn random_unit_vector(rng: &mut SeededRng, dim: usize) -> UnitVector {
    assert!(dim >= 1, "dim must be at least 1");
    loop {
        let v = CVector::from_fn(dim, |_, _| complex_normal(rng));
        if let Ok(u) = UnitVector::normalize(v) {
            return u;
        }
    }
}

/// `scale · (G + G†) / 2` for Ginibre `G`.
pub fn random_hermitian(rng: &mut SeededRng, dim: usize, scale: f64) -> HermitianMatrix {
    HermitianMatrix::new(complex_gaussian_matrix(rng, dim, dim))
        .expect("square")
        .scale(scale)
}

/// `U diag(spectrum) U†` with Haar `U`.
pub fn hermitian_with_spectrum(rng: &mut SeededRng, spectrum: &[f64]) -> HermitianMatrix {
    let u = haar_unitary(rng, spectrum.len());
    HermitianMatrix::from_real_diagonal(spectrum).conjugate_by(&u)
}

/// `U diag(u₁ … u_dim) U†`, `u_i` uniform on `[0, 1]`, `U` Haar.
pub fn random_effect(rng: &mut SeededRng, dim: usize) -> Effect {
    let spectrum: Vec<f64> = (0..dim).map(|_| rng.uniform()).collect();
    effect_with_spectrum(rng, &spectrum)
}

pub fn effect_with_spectrum(rng: &mut SeededRng, spectrum: &[f64]) -> Effect {
    let m = hermitian_with_spectrum(rng, spectrum);
    Effect::new(m.clone())
        .or_else(|_| Effect::clamped(&m))
        .expect("spectrum within [0, 1]")
}

/// Projection onto a Haar-random `rank`-dimensional subspace.
pub fn random_projection(rng: &mut SeededRng, dim: usize, rank: usize) -> Projection {
    assert!(rank <= dim, "rank exceeds dimension");
    let u = haar_unitary(rng, dim);
    Projection::onto_columns(&u.columns(0, rank).into_owned()).expect("orthonormal columns")
}

/// `s P_φ` with `s` uniform on `[lo, hi]` and Haar `φ`.
pub fn random_rank1_effect(rng: &mut SeededRng, dim: usize, lo: f64, hi: f64) -> Effect {
    let phi = random_unit_vector(rng, dim);
    let s = rng.uniform_in(lo, hi);
    Projection::rank1(&phi).effect().scale(s).expect("s in [0, 1]")
}

/// An effect below `f`: `F^{1/2} G F^{1/2}` for random `G`.
pub fn random_effect_below(rng: &mut SeededRng, f: &Effect) -> Result<Effect> {
    let root = f.matrix().sqrt_psd()?;
    let g = random_effect(rng, f.dim());
    let m = g.matrix().conjugate_by(root.as_matrix());
    Effect::new(m.clone()).or_else(|_| Effect::clamped(&m))
}

/// An effect orthogonal to `f`, i.e. below `I − F`.
pub fn random_effect_orthogonal_to(rng: &mut SeededRng, f: &Effect) -> Result<Effect> {
    random_effect_below(rng, &f.complement())
}

/// Two effects diagonal in a common Haar basis.
pub fn random_commuting_pair(rng: &mut SeededRng, dim: usize) -> (Effect, Effect) {
    let u = haar_unitary(rng, dim);
    let draw = |rng: &mut SeededRng| {
        let d: Vec<f64> = (0..dim).map(|_| rng.uniform()).collect();
        let m = HermitianMatrix::from_real_diagonal(&d).conjugate_by(&u);
        Effect::new(m.clone()).or_else(|_| Effect::clamped(&m)).expect("effect")
    };
    let e = draw(rng);
    let f = draw(rng);
    (e, f)
}

/// A pair that is often not coexistent: spectra with one large and the
/// remaining small eigenvalues, in independent Haar bases.
pub fn random_sharp_pair(rng: &mut SeededRng, dim: usize) -> (Effect, Effect) {
    let draw = |rng: &mut SeededRng| {
        let spectrum: Vec<f64> = (0..dim)
            .map(|k| if k == 0 { rng.uniform_in(0.5, 1.0) } else { 0.1 * rng.uniform() })
            .collect();
        effect_with_spectrum(rng, &spectrum)
    };
    let e = draw(rng);
    let f = draw(rng);
    (e, f)
}

/// An effect from a mix of laws: uniform spectrum, projections of random
/// rank and weak atoms.
pub fn random_mixed_effect(rng: &mut SeededRng, dim: usize) -> Effect {
    match rng.index(0, 4) {
        0 | 1 => random_effect(rng, dim),
        2 => {
            let rank = rng.index(1, dim + 1);
            random_projection(rng, dim, rank).effect().clone()
        }
        _ => random_rank1_effect(rng, dim, 0.0, 1.0),
    }
}

/// An effect above `e`: `I − G` for `G` below `I − e`.
pub fn random_effect_above(rng: &mut SeededRng, e: &Effect) -> Result<Effect> {
    Ok(random_effect_below(rng, &e.complement())?.complement())
}

/// An effect diagonal in an eigenbasis of `e`.
pub fn random_commuting_partner(rng: &mut SeededRng, e: &Effect) -> Result<Effect> {
    let d = e.matrix().eig()?;
    let spectrum: Vec<f64> = (0..e.dim()).map(|_| rng.uniform()).collect();
    let m = HermitianMatrix::from_real_diagonal(&spectrum).conjugate_by(&d.eigenvectors);
    Effect::new(m.clone()).or_else(|_| Effect::clamped(&m))
}

/// `s P_p` and `s P_q` for Haar `p, q`, scaled so `λ_max` of the sum is
/// uniform on `[0.8, 1]`; coexistent, but often not after a nonlinear map.
pub fn random_boundary_rank1_pair(rng: &mut SeededRng, dim: usize) -> Result<(Effect, Effect)> {
    let p = random_unit_vector(rng, dim);
    let q = random_unit_vector(rng, dim);
    let overlap = p.inner(&q).norm();
    let s = (rng.uniform_in(0.8, 1.0) / (1.0 + overlap)).min(1.0);
    Ok((
        Projection::rank1(&p).effect().scale(s)?,
        Projection::rank1(&q).effect().scale(s)?,
    ))
}

/// `(A + C, B + C)` for random `A, B, C` rescaled so `A + B + C ⪯ I`.
pub fn random_coexistent_pair(rng: &mut SeededRng, dim: usize) -> (Effect, Effect) {
    let parts: Vec<HermitianMatrix> = (0..3)
        .map(|_| random_effect(rng, dim).into_matrix())
        .collect();
    let total = parts[0].add(&parts[1]).and_then(|s| s.add(&parts[2])).expect("same dim");
    let top = total.lambda_max().expect("eig");
    let s = rng.uniform() / top.max(1e-12);
    let scaled: Vec<HermitianMatrix> = parts.iter().map(|p| p.scale(s)).collect();
    let e = scaled[0].add(&scaled[2]).expect("same dim");
    let f = scaled[1].add(&scaled[2]).expect("same dim");
    let as_effect = |m: HermitianMatrix| Effect::new(m.clone()).or_else(|_| Effect::clamped(&m)).expect("effect");
    (as_effect(e), as_effect(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::{psd_leq, unitarity_residual, TOL_PSD};

    #[test]
    fn haar_unitary_is_unitary_and_reproducible() {
        for dim in 1..=6 {
            let mut rng = SeededRng::new(11);
            let u = haar_unitary(&mut rng, dim);
            assert!(unitarity_residual(&u) <= 1e-10, "dim {dim}");
            let mut again = SeededRng::new(11);
            assert_eq!(u, haar_unitary(&mut again, dim));
        }
        let mut rng = SeededRng::new(3);
        let u = haar_unitary(&mut rng, 1);
        assert!((u[(0, 0)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn random_effect_contract_and_determinism() {
        let mut a = SeededRng::new(5);
        let mut b = SeededRng::new(5);
        let e = random_effect(&mut a, 2);
        assert_eq!(e, random_effect(&mut b, 2));
        for _ in 0..50 {
            let e = random_effect(&mut a, 4);
            assert!(e.matrix().is_psd(TOL_PSD).unwrap());
            assert!(psd_leq(e.matrix(), &HermitianMatrix::identity(4), TOL_PSD).unwrap());
        }
    }

    #[test]
    fn unit_vectors_have_unit_norm() {
        let mut rng = SeededRng::new(9);
        for dim in 1..=5 {
            let v = random_unit_vector(&mut rng, dim);
            assert!((v.as_vector().norm() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn constructive_samplers_satisfy_their_relation() {
        let mut rng = SeededRng::new(21);
        for dim in 2..=4 {
            let f = random_effect(&mut rng, dim);
            let below = random_effect_below(&mut rng, &f).unwrap();
            assert!(below.leq(&f).unwrap());
            let orth = random_effect_orthogonal_to(&mut rng, &f).unwrap();
            assert!(orth.orthogonal(&f).unwrap());
            let (e, g) = random_commuting_pair(&mut rng, dim);
            assert!(crate::effect::commutes(&e, &g, 1e-9).unwrap());
            let p = random_projection(&mut rng, dim, 1);
            assert_eq!(p.rank(), 1);
        }
    }
}
