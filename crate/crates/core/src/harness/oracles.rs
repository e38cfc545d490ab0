//! Reference computations that share no code with the library routines
//! they check.

use crate::hermitian::{HermitianMatrix, C64};
use crate::vector::UnitVector;

const GRID_STEP: f64 = 1e-4;
const BISECTION_WIDTH: f64 = 1e-8;
const CHOLESKY_SHIFT: f64 = 1e-12;

/// `M + shift · I ≻ 0`, decided by attempting a Cholesky factorization.
pub fn cholesky_psd(m: &HermitianMatrix, shift: f64) -> bool {
    let n = m.dim();
    let a = m.as_matrix();
    let mut l = vec![vec![C64::new(0.0, 0.0); n]; n];
    for j in 0..n {
        let diag = a[(j, j)].re + shift - (0..j).map(|k| l[j][k].norm_sqr()).sum::<f64>();
        if !(diag > 0.0) {
            return false;
        }
        let pivot = diag.sqrt();
        l[j][j] = C64::new(pivot, 0.0);
        for i in j + 1..n {
            let s: C64 = (0..j).map(|k| l[i][k] * l[j][k].conj()).sum();
            l[i][j] = (a[(i, j)] - s) / pivot;
        }
    }
    true
}

/// `E − λ φφ†`, built entrywise.
fn deflate(e: &HermitianMatrix, phi: &UnitVector, lambda: f64) -> HermitianMatrix {
    let v = phi.as_vector();
    let mut m = e.as_matrix().clone();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            m[(i, j)] -= v[i] * v[j].conj() * lambda;
        }
    }
    HermitianMatrix::new(m).expect("square")
}

/// Largest `λ ∈ [0, 1]` with `λ P_φ ⪯ E`: a scan of the grid `k · 10⁻⁴`
/// followed by bisection of the last step down to `10⁻⁸`.
pub fn strength_grid(e: &HermitianMatrix, phi: &UnitVector) -> f64 {
    let feasible = |lambda: f64| cholesky_psd(&deflate(e, phi, lambda), CHOLESKY_SHIFT);
    let steps = (1.0 / GRID_STEP).round() as usize;
    let mut last = None;
    for k in 0..=steps {
        if feasible(k as f64 * GRID_STEP) {
            last = Some(k);
        } else {
            break;
        }
    }
    let Some(k) = last else { return 0.0 };
    if k == steps {
        return 1.0;
    }
    let (mut lo, mut hi) = (k as f64 * GRID_STEP, (k + 1) as f64 * GRID_STEP);
    while hi - lo > BISECTION_WIDTH {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Eigenvalues of a Hermitian matrix in descending order.
pub fn descending_eigenvalues(m: &HermitianMatrix) -> crate::Result<Vec<f64>> {
    let mut ev = m.eigenvalues()?;
    ev.reverse();
    Ok(ev)
}
