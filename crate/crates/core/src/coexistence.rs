//! Two-effect coexistence.
//!
//! `E` and `F` coexist when `E = A + C`, `F = B + C` with `A, B, C` effects
//! and `A + B + C ⪯ I`. Eliminating `A` and `B` leaves four linear matrix
//! inequalities in the middle term:
//!
//! ```text
//! C ⪰ 0,   E − C ⪰ 0,   F − C ⪰ 0,   C − (E + F − I) ⪰ 0
//! ```
//!
//! The decision maximizes the margin `t(C) = min_i λ_min(G_i(C))`, a concave
//! function; the pair coexists iff the optimum is nonnegative. Closed forms
//! for scalar, sum-bounded, commuting and rank-1 pairs are tried first.

use serde::{Deserialize, Serialize};

use crate::effect::{commutes, Effect, TOL_COMMUTE};
use crate::error::{Error, Result};
use crate::hermitian::{psd_leq, HermitianMatrix, C64, TOL_PSD};
use crate::rng::SeededRng;

/// Feasibility threshold on the margin.
pub const TOL_FEAS: f64 = 1e-7;
pub const SUPERGRADIENT_ITERATIONS: usize = 5000;
pub const DYKSTRA_ITERATIONS: usize = 2000;

/// Dykstra polishing is attempted when the ascent ends at or above this margin.
const DYKSTRA_GATE: f64 = -1e-2;
const STEP0: f64 = 0.1;
const STALL_WINDOW: usize = 1500;
const SCALAR_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decision {
    Coexistent,
    NotCoexistent,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Path {
    Scalar,
    #[serde(rename = "rank1")]
    Rank1,
    Commuting,
    SumBounded,
    Solver,
    Oracle,
}

#[derive(Clone, Debug)]
pub struct CoexistenceVerdict {
    pub decision: Decision,
    /// The middle term `C`; `A = E − C` and `B = F − C`.
    pub witness: Option<Effect>,
    /// Best attained `min_i λ_min(G_i(C))`, a lower bound on the optimum.
    pub margin: f64,
    pub iterations: usize,
    pub path: Path,
}

impl CoexistenceVerdict {
    pub fn is_coexistent(&self) -> bool {
        self.decision == Decision::Coexistent
    }
}

#[derive(Clone, Debug)]
pub struct CoexistenceConfig {
    pub tol_feas: f64,
    pub iterations: usize,
    pub dykstra_iterations: usize,
    /// Skip the closed forms and always run the solver.
    pub fast_paths: bool,
    /// Stop the ascent at the first iterate with nonnegative margin.
    pub stop_when_feasible: bool,
}

impl Default for CoexistenceConfig {
    fn default() -> Self {
        Self {
            tol_feas: TOL_FEAS,
            iterations: SUPERGRADIENT_ITERATIONS,
            dykstra_iterations: DYKSTRA_ITERATIONS,
            fast_paths: true,
            stop_when_feasible: true,
        }
    }
}

impl CoexistenceConfig {
    pub fn solver_only() -> Self {
        Self {
            fast_paths: false,
            ..Self::default()
        }
    }
}

/// The four affine constraint maps of the middle term.
#[derive(Clone, Debug)]
pub struct MarginProblem {
    e: HermitianMatrix,
    f: HermitianMatrix,
    /// `E + F − I`.
    floor: HermitianMatrix,
}

/// Sign of the linear part of each `G_i`.
const SIGNS: [f64; 4] = [1.0, -1.0, -1.0, 1.0];

impl MarginProblem {
    pub fn new(e: &Effect, f: &Effect) -> Result<Self> {
        let sum = e.sum(f)?;
        let floor = sum.sub(&HermitianMatrix::identity(e.dim()))?;
        Ok(Self {
            e: e.matrix().clone(),
            f: f.matrix().clone(),
            floor,
        })
    }

    pub fn dim(&self) -> usize {
        self.e.dim()
    }

    /// `G_i(C)` for `i = 0..4`.
    pub fn constraint(&self, i: usize, c: &HermitianMatrix) -> HermitianMatrix {
        match i {
            0 => c.clone(),
            1 => self.e.sub(c).expect("dim"),
            2 => self.f.sub(c).expect("dim"),
            3 => c.sub(&self.floor).expect("dim"),
            _ => panic!("constraint index {i} out of range"),
        }
    }

    /// `λ_min(G_i(C))` for each constraint.
    pub fn margins(&self, c: &HermitianMatrix) -> Result<[f64; 4]> {
        let mut out = [0.0; 4];
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = self.constraint(i, c).lambda_min()?;
        }
        Ok(out)
    }

    pub fn margin(&self, c: &HermitianMatrix) -> Result<f64> {
        Ok(self.margins(c)?.into_iter().fold(f64::INFINITY, f64::min))
    }

    /// Margin at `C` and a supergradient `± v v†` of it.
    fn supergradient(&self, c: &HermitianMatrix) -> Result<(f64, HermitianMatrix)> {
        let mut best: Option<(f64, usize, crate::hermitian::CVector)> = None;
        for i in 0..4 {
            let d = self.constraint(i, c).eig()?;
            let lambda = d.eigenvalues[0];
            if best.as_ref().is_none_or(|b| lambda < b.0) {
                best = Some((lambda, i, d.eigenvector(0)));
            }
        }
        let (lambda, i, v) = best.expect("four constraints");
        Ok((lambda, HermitianMatrix::outer(&v).scale(SIGNS[i])))
    }

    /// Euclidean projection onto `{C : G_i(C) ⪰ 0}`.
    fn project(&self, i: usize, c: &HermitianMatrix) -> Result<HermitianMatrix> {
        let clip = |m: HermitianMatrix| m.map_spectrum(|x| x.max(0.0));
        Ok(match i {
            0 => clip(c.clone())?,
            1 => self.e.sub(&clip(self.e.sub(c)?)?)?,
            2 => self.f.sub(&clip(self.f.sub(c)?)?)?,
            3 => self.floor.add(&clip(c.sub(&self.floor)?)?)?,
            _ => panic!("constraint index {i} out of range"),
        })
    }

    /// Starting points for the ascent, best first.
    fn initial_point(&self) -> Result<HermitianMatrix> {
        let positive_floor = self.floor.map_spectrum(|x| x.max(0.0))?;
        let candidates = [
            positive_floor.clone(),
            positive_floor.scale(0.5),
            self.e.add(&self.f)?.scale(0.25),
            self.e.jordan_product(&self.f)?,
        ];
        let mut best = (f64::NEG_INFINITY, candidates[0].clone());
        for c in candidates {
            let m = self.margin(&c)?;
            if m > best.0 {
                best = (m, c);
            }
        }
        Ok(best.1)
    }
}

#[derive(Clone, Debug)]
pub struct MarginSolution {
    pub c: HermitianMatrix,
    pub margin: f64,
    pub iterations: usize,
}

/// Projected supergradient ascent on `t(C)` with steps `a₀ / √k`.
///
/// Iterates stay in `{−I ⪯ C ⪯ 2I}`, which contains every maximizer. The
/// running average of the second half of the iterates is also evaluated.
/// Returns the best point seen; its margin is attained, hence a lower bound
/// on the optimum.
pub fn solve_margin(prob: &MarginProblem, iters: usize) -> Result<MarginSolution> {
    ascend(prob, prob.initial_point()?, iters, false)
}

fn ascend(
    prob: &MarginProblem,
    start: HermitianMatrix,
    iters: usize,
    stop_when_feasible: bool,
) -> Result<MarginSolution> {
    if iters == 0 {
        return Err(Error::InvalidParameter("iteration count must be >= 1".into()));
    }
    let dim = prob.dim();
    let mut c = start;
    let mut best = MarginSolution {
        margin: prob.margin(&c)?,
        c: c.clone(),
        iterations: 0,
    };
    let mut average = HermitianMatrix::zeros(dim);
    let mut averaged = 0usize;
    let mut last_gain = 0usize;
    let mut k = 0usize;
    while k < iters {
        if stop_when_feasible && best.margin >= 0.0 {
            break;
        }
        let (value, g) = prob.supergradient(&c)?;
        if value > best.margin {
            if value > best.margin + 1e-12 {
                last_gain = k;
            }
            best.margin = value;
            best.c = c.clone();
        }
        if k >= iters / 2 {
            averaged += 1;
            average = average.add(&c.sub(&average)?.scale(1.0 / averaged as f64))?;
        }
        if k - last_gain > STALL_WINDOW {
            k += 1;
            break;
        }
        let step = STEP0 / ((k + 1) as f64).sqrt();
        c = c.add(&g.scale(step))?.map_spectrum(|x| x.clamp(-1.0, 2.0))?;
        k += 1;
    }
    best.iterations = k;
    if averaged > 0 {
        let m = prob.margin(&average)?;
        if m > best.margin {
            best.margin = m;
            best.c = average;
        }
    }
    Ok(best)
}

/// Dykstra's alternating projections onto the four constraint sets.
///
/// Returns the first cycle's point whose four `λ_min` are all at least
/// `−TOL_FEAS`; if none is reached within `iters` cycles, `c0` comes back
/// unchanged.
pub fn dykstra_refine(prob: &MarginProblem, c0: &HermitianMatrix, iters: usize) -> Result<HermitianMatrix> {
    Ok(dykstra(prob, c0, iters, -TOL_FEAS)?
        .map(|(c, _)| c)
        .unwrap_or_else(|| c0.clone()))
}

fn dykstra(
    prob: &MarginProblem,
    c0: &HermitianMatrix,
    iters: usize,
    target: f64,
) -> Result<Option<(HermitianMatrix, usize)>> {
    if prob.margin(c0)? >= target {
        return Ok(Some((c0.clone(), 0)));
    }
    let dim = prob.dim();
    let mut x = c0.clone();
    let mut increments = vec![HermitianMatrix::zeros(dim); 4];
    for cycle in 1..=iters {
        for (i, p) in increments.iter_mut().enumerate() {
            let shifted = x.add(p)?;
            let y = prob.project(i, &shifted)?;
            *p = shifted.sub(&y)?;
            x = y;
        }
        if prob.margin(&x)? >= target {
            return Ok(Some((x, cycle)));
        }
    }
    Ok(None)
}

/// Checks `C ⪰ 0`, `C ⪯ E`, `C ⪯ F` and `C ⪰ E + F − I` within `TOL_PSD`,
/// i.e. that `A = E − C`, `B = F − C`, `C` and `A + B + C` are effects.
pub fn verify_witness(e: &Effect, f: &Effect, c: &HermitianMatrix) -> Result<bool> {
    e.matrix().check_dim(f.matrix())?;
    e.matrix().check_dim(c)?;
    let floor = e.sum(f)?.sub(&HermitianMatrix::identity(e.dim()))?;
    Ok(c.is_psd(TOL_PSD)?
        && psd_leq(c, e.matrix(), TOL_PSD)?
        && psd_leq(c, f.matrix(), TOL_PSD)?
        && psd_leq(&floor, c, TOL_PSD)?)
}

pub fn coexist(e: &Effect, f: &Effect) -> Result<CoexistenceVerdict> {
    coexist_with(e, f, &CoexistenceConfig::default())
}

/// Fast paths in the order scalar, sum-bounded, commuting, rank-1; then the
/// solver.
pub fn coexist_with(e: &Effect, f: &Effect, config: &CoexistenceConfig) -> Result<CoexistenceVerdict> {
    e.matrix().check_dim(f.matrix())?;
    let prob = MarginProblem::new(e, f)?;
    if config.fast_paths {
        if let Some(v) = fast_path_scalar(e, f)? {
            return Ok(v);
        }
        if let Some(v) = fast_path_sum(e, f)? {
            return Ok(v);
        }
        if let Some(v) = fast_path_commuting(e, f)? {
            return Ok(v);
        }
        if let Some(v) = fast_path_rank1(e, f, config.tol_feas)? {
            return Ok(v);
        }
    }
    solve(e, f, &prob, config)
}

fn solve(e: &Effect, f: &Effect, prob: &MarginProblem, config: &CoexistenceConfig) -> Result<CoexistenceVerdict> {
    let mut best = ascend(prob, prob.initial_point()?, config.iterations, config.stop_when_feasible)?;
    let mut iterations = best.iterations;
    if !verify_witness(e, f, &best.c)? && best.margin >= DYKSTRA_GATE {
        if let Some((c, cycles)) = dykstra(prob, &best.c, config.dykstra_iterations, -TOL_PSD)? {
            iterations += cycles;
            let m = prob.margin(&c)?;
            if m > best.margin || verify_witness(e, f, &c)? {
                best.margin = best.margin.max(m);
                best.c = c;
            }
        } else {
            iterations += config.dykstra_iterations;
        }
    }
    let verified = verify_witness(e, f, &best.c)?;
    let (decision, witness) = if verified {
        (Decision::Coexistent, Some(as_effect(&best.c)?))
    } else if best.margin < -config.tol_feas {
        (Decision::NotCoexistent, None)
    } else {
        (Decision::Inconclusive, None)
    };
    Ok(CoexistenceVerdict {
        decision,
        witness,
        margin: best.margin,
        iterations,
        path: Path::Solver,
    })
}

fn as_effect(c: &HermitianMatrix) -> Result<Effect> {
    Effect::new(c.clone()).or_else(|_| Effect::clamped(c))
}

fn certified(e: &Effect, f: &Effect, c: HermitianMatrix, path: Path) -> Result<Option<CoexistenceVerdict>> {
    if !verify_witness(e, f, &c)? {
        return Ok(None);
    }
    let margin = MarginProblem::new(e, f)?.margin(&c)?;
    Ok(Some(CoexistenceVerdict {
        decision: Decision::Coexistent,
        witness: Some(as_effect(&c)?),
        margin,
        iterations: 0,
        path,
    }))
}

/// `λ` when `E = λ I` up to `SCALAR_TOL`.
pub fn scalar_value(e: &Effect) -> Result<Option<f64>> {
    let lambda = e.matrix().trace() / e.dim() as f64;
    let deviation = e
        .matrix()
        .sub(&HermitianMatrix::scaled_identity(e.dim(), lambda))?
        .op_norm()?;
    Ok((deviation <= SCALAR_TOL).then_some(lambda.clamp(0.0, 1.0)))
}

/// `λ I` coexists with any `F` through `A = λ(I − F)`, `B = (1 − λ) F`,
/// `C = λ F`.
pub fn fast_path_scalar(e: &Effect, f: &Effect) -> Result<Option<CoexistenceVerdict>> {
    if let Some(lambda) = scalar_value(e)? {
        return certified(e, f, f.matrix().scale(lambda), Path::Scalar);
    }
    if let Some(mu) = scalar_value(f)? {
        return certified(e, f, e.matrix().scale(mu), Path::Scalar);
    }
    Ok(None)
}

/// `E + F ⪯ I` coexist with `C = 0`.
pub fn fast_path_sum(e: &Effect, f: &Effect) -> Result<Option<CoexistenceVerdict>> {
    if !psd_leq(&e.sum(f)?, &HermitianMatrix::identity(e.dim()), TOL_PSD)? {
        return Ok(None);
    }
    certified(e, f, HermitianMatrix::zeros(e.dim()), Path::SumBounded)
}

/// Commuting effects coexist with `C = EF`.
pub fn fast_path_commuting(e: &Effect, f: &Effect) -> Result<Option<CoexistenceVerdict>> {
    if !commutes(e, f, TOL_COMMUTE)? {
        return Ok(None);
    }
    certified(e, f, e.matrix().jordan_product(f.matrix())?, Path::Commuting)
}

/// Rank of an effect: eigenvalues above `TOL_PSD`.
pub fn effect_rank(e: &Effect) -> Result<usize> {
    Ok(e.matrix().eigenvalues()?.iter().filter(|&&x| x > TOL_PSD).count())
}

/// Rank-1 effects with different ranges coexist iff `E + F ⪯ I`.
///
/// Applies only after the sum-bounded path has failed, so a match is a
/// non-coexistent pair; within `tol_feas` of the boundary it is inconclusive.
pub fn fast_path_rank1(e: &Effect, f: &Effect, tol_feas: f64) -> Result<Option<CoexistenceVerdict>> {
    if effect_rank(e)? != 1 || effect_rank(f)? != 1 {
        return Ok(None);
    }
    let (de, df) = (e.matrix().eig()?, f.matrix().eig()?);
    let (u, v) = (de.eigenvector(de.dim() - 1), df.eigenvector(df.dim() - 1));
    if u.dotc(&v).norm() >= 1.0 - 1e-9 {
        return Ok(None);
    }
    let excess = e.sum(f)?.lambda_max()? - 1.0;
    if excess <= 0.0 {
        // E + F ⪯ I, but sum-bounded did not certify C = 0
        return Ok(None);
    }
    let decision = if excess > tol_feas {
        Decision::NotCoexistent
    } else {
        Decision::Inconclusive
    };
    Ok(Some(CoexistenceVerdict {
        decision,
        witness: None,
        margin: -excess,
        iterations: 0,
        path: Path::Rank1,
    }))
}

/// Independent brute-force decision for `dim ≤ 2`.
///
/// `C` is parametrized by `dim²` reals and the margin, evaluated with
/// closed-form 2×2 eigenvalues, is maximized by `10⁵` seeded random samples
/// in a box bounded by `‖E‖, ‖F‖`, followed by golden-section line searches
/// along the coordinate axes and fresh random directions, halving the search
/// radius after every round without progress.
pub fn oracle_bruteforce(e: &Effect, f: &Effect) -> Result<CoexistenceVerdict> {
    e.matrix().check_dim(f.matrix())?;
    let dim = e.dim();
    if dim > 2 {
        return Err(Error::Unsupported(format!(
            "brute-force coexistence oracle supports dim <= 2, got {dim}"
        )));
    }
    let oracle = Oracle::new(e, f);
    let params = dim * dim;
    let bound = e.matrix().op_norm()?.max(f.matrix().op_norm()?).max(0.5) + 0.25;
    let mut rng = SeededRng::new(0x0bad_5eed);
    let mut best_x = vec![0.0; params];
    let mut best = oracle.margin(&best_x);
    let mut evaluations = 1usize;
    for _ in 0..100_000 {
        let x: Vec<f64> = (0..params).map(|_| rng.uniform_in(-bound, bound)).collect();
        let m = oracle.margin(&x);
        evaluations += 1;
        if m > best {
            best = m;
            best_x = x;
        }
    }
    let axes: Vec<Vec<f64>> = (0..params)
        .map(|k| (0..params).map(|j| if j == k { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut h = bound / 4.0;
    let mut rounds = 0;
    while h > 1e-11 && rounds < 3000 {
        rounds += 1;
        let mut directions = axes.clone();
        for _ in 0..4 * params {
            let d: Vec<f64> = (0..params).map(|_| rng.normal()).collect();
            let n = d.iter().map(|x| x * x).sum::<f64>().sqrt();
            directions.push(d.into_iter().map(|x| x / n).collect());
        }
        let before = best;
        for d in &directions {
            let (x, m, n) = oracle.line_search(&best_x, d, h);
            evaluations += n;
            if m > best {
                best = m;
                best_x = x;
            }
        }
        if best <= before + 1e-15 {
            h *= 0.5;
        }
    }
    if params > 1 {
        let (x, m, n) = oracle.ellipsoid(&best_x, 2.0 * bound * (params as f64).sqrt(), 4000);
        evaluations += n;
        if m > best {
            best = m;
            best_x = x;
        }
    }
    let c = oracle.matrix(&best_x);
    let decision = if best >= -TOL_FEAS {
        Decision::Coexistent
    } else {
        Decision::NotCoexistent
    };
    let witness = match decision {
        Decision::Coexistent => Some(as_effect(&c)?),
        _ => None,
    };
    Ok(CoexistenceVerdict {
        decision,
        witness,
        margin: best,
        iterations: evaluations,
        path: Path::Oracle,
    })
}

/// Margin evaluation for `dim ≤ 2` with its own arithmetic.
struct Oracle {
    dim: usize,
    e: [[C64; 2]; 2],
    f: [[C64; 2]; 2],
}

impl Oracle {
    fn new(e: &Effect, f: &Effect) -> Self {
        let dim = e.dim();
        let grab = |m: &HermitianMatrix| {
            let mut out = [[C64::new(0.0, 0.0); 2]; 2];
            for (i, row) in out.iter_mut().enumerate().take(dim) {
                for (j, slot) in row.iter_mut().enumerate().take(dim) {
                    *slot = m.get(i, j);
                }
            }
            out
        };
        Self {
            dim,
            e: grab(e.matrix()),
            f: grab(f.matrix()),
        }
    }

    /// `(c00, c11, re c01, im c01)` or `(c00)`.
    fn entries(&self, x: &[f64]) -> [[C64; 2]; 2] {
        let mut c = [[C64::new(0.0, 0.0); 2]; 2];
        c[0][0] = C64::new(x[0], 0.0);
        if self.dim == 2 {
            c[1][1] = C64::new(x[1], 0.0);
            c[0][1] = C64::new(x[2], x[3]);
            c[1][0] = C64::new(x[2], -x[3]);
        }
        c
    }

    fn matrix(&self, x: &[f64]) -> HermitianMatrix {
        let c = self.entries(x);
        let re: Vec<Vec<f64>> = (0..self.dim).map(|i| (0..self.dim).map(|j| c[i][j].re).collect()).collect();
        let im: Vec<Vec<f64>> = (0..self.dim).map(|i| (0..self.dim).map(|j| c[i][j].im).collect()).collect();
        HermitianMatrix::from_parts(&re, &im).expect("square")
    }

    fn lambda_min(&self, m: [[C64; 2]; 2]) -> f64 {
        if self.dim == 1 {
            return m[0][0].re;
        }
        let (a, d) = (m[0][0].re, m[1][1].re);
        let half_gap = 0.5 * (a - d);
        0.5 * (a + d) - (half_gap * half_gap + m[0][1].norm_sqr()).sqrt()
    }

    /// The four constraint matrices with their orientation in `C`.
    fn constraints(&self, x: &[f64]) -> [([[C64; 2]; 2], f64); 4] {
        let c = self.entries(x);
        let mut out = [([[C64::new(0.0, 0.0); 2]; 2], 1.0); 4];
        for i in 0..2 {
            for j in 0..2 {
                let identity = if i == j && i < self.dim { 1.0 } else { 0.0 };
                out[0].0[i][j] = c[i][j];
                out[1].0[i][j] = self.e[i][j] - c[i][j];
                out[2].0[i][j] = self.f[i][j] - c[i][j];
                out[3].0[i][j] = c[i][j] - self.e[i][j] - self.f[i][j] + C64::new(identity, 0.0);
            }
        }
        out[1].1 = -1.0;
        out[2].1 = -1.0;
        out
    }

    /// Unit eigenvector for the smaller eigenvalue of a 2x2 Hermitian matrix.
    fn bottom_vector(m: [[C64; 2]; 2], lambda: f64) -> [C64; 2] {
        let b = m[0][1];
        let first = [b, C64::new(lambda - m[0][0].re, 0.0)];
        let second = [C64::new(lambda - m[1][1].re, 0.0), b.conj()];
        let norm = |v: &[C64; 2]| (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
        let v = if norm(&first) >= norm(&second) { first } else { second };
        let n = norm(&v);
        if n < 1e-300 {
            return if m[0][0].re <= m[1][1].re {
                [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]
            } else {
                [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]
            };
        }
        [v[0] / n, v[1] / n]
    }

    /// Margin and a supergradient in the `(c00, c11, re c01, im c01)` chart.
    fn supergradient(&self, x: &[f64]) -> (f64, [f64; 4]) {
        let mut best = f64::INFINITY;
        let mut grad = [0.0; 4];
        for (m, sign) in self.constraints(x) {
            let lambda = self.lambda_min(m);
            if lambda < best {
                best = lambda;
                let v = Self::bottom_vector(m, lambda);
                let cross = v[0].conj() * v[1];
                grad = [
                    sign * v[0].norm_sqr(),
                    sign * v[1].norm_sqr(),
                    sign * 2.0 * cross.re,
                    -sign * 2.0 * cross.im,
                ];
            }
        }
        (best, grad)
    }

    /// Central-cut ellipsoid ascent from the ball of radius `radius` around
    /// `x0`. Returns the best centre visited.
    fn ellipsoid(&self, x0: &[f64], radius: f64, iterations: usize) -> (Vec<f64>, f64, usize) {
        const N: usize = 4;
        let n = N as f64;
        let mut x = [x0[0], x0[1], x0[2], x0[3]];
        let mut p = [[0.0; N]; N];
        for (i, row) in p.iter_mut().enumerate() {
            row[i] = radius * radius;
        }
        let mut best_x = x.to_vec();
        let mut best = f64::NEG_INFINITY;
        let mut evaluations = 0;
        for _ in 0..iterations {
            let (m, g) = self.supergradient(&x);
            evaluations += 1;
            if m > best {
                best = m;
                best_x = x.to_vec();
            }
            let mut pg = [0.0; N];
            for i in 0..N {
                pg[i] = (0..N).map(|j| p[i][j] * g[j]).sum();
            }
            let gpg: f64 = (0..N).map(|i| g[i] * pg[i]).sum();
            if !(gpg > 1e-28) {
                break;
            }
            let scale = gpg.sqrt();
            for i in 0..N {
                x[i] += pg[i] / scale / (n + 1.0);
            }
            let factor = n * n / (n * n - 1.0);
            for i in 0..N {
                for j in 0..N {
                    p[i][j] = factor * (p[i][j] - 2.0 / (n + 1.0) * pg[i] * pg[j] / gpg);
                }
            }
        }
        (best_x, best, evaluations)
    }

    fn margin(&self, x: &[f64]) -> f64 {
        let c = self.entries(x);
        let combine = |p: f64, q: f64, r: f64| {
            let mut out = [[C64::new(0.0, 0.0); 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    out[i][j] = c[i][j] * p + self.e[i][j] * q + self.f[i][j] * r;
                }
            }
            out
        };
        let mut floor_gap = [[C64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let identity = if i == j && i < self.dim { 1.0 } else { 0.0 };
                floor_gap[i][j] = c[i][j] - self.e[i][j] - self.f[i][j] + C64::new(identity, 0.0);
            }
        }
        self.lambda_min(c)
            .min(self.lambda_min(combine(-1.0, 1.0, 0.0)))
            .min(self.lambda_min(combine(-1.0, 0.0, 1.0)))
            .min(self.lambda_min(floor_gap))
    }

    /// Golden-section maximization of the concave restriction on `[−h, h]`.
    fn line_search(&self, x: &[f64], d: &[f64], h: f64) -> (Vec<f64>, f64, usize) {
        let at = |s: f64| -> Vec<f64> { x.iter().zip(d).map(|(xi, di)| xi + s * di).collect() };
        let ratio = (5.0_f64.sqrt() - 1.0) / 2.0;
        let (mut lo, mut hi) = (-h, h);
        let mut a = hi - ratio * (hi - lo);
        let mut b = lo + ratio * (hi - lo);
        let (mut fa, mut fb) = (self.margin(&at(a)), self.margin(&at(b)));
        let mut n = 2;
        while hi - lo > 1e-12 * h.max(1e-300) && n < 120 {
            if fa < fb {
                lo = a;
                a = b;
                fa = fb;
                b = lo + ratio * (hi - lo);
                fb = self.margin(&at(b));
            } else {
                hi = b;
                b = a;
                fb = fa;
                a = hi - ratio * (hi - lo);
                fa = self.margin(&at(a));
            }
            n += 1;
        }
        let s = 0.5 * (lo + hi);
        let candidate = at(s);
        let m = self.margin(&candidate);
        (candidate, m, n + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::effect::Projection;
    use crate::vector::UnitVector;
    use approx::assert_abs_diff_eq;

    fn diag(d: &[f64]) -> Effect {
        Effect::new(HermitianMatrix::from_real_diagonal(d)).unwrap()
    }

    fn rank1(v: &[f64], s: f64) -> Effect {
        Projection::rank1(&UnitVector::from_real(v).unwrap())
            .effect()
            .scale(s)
            .unwrap()
    }

    #[test]
    fn scalar_path_uses_explicit_witness() {
        let e = Effect::scalar(0.3, 2).unwrap();
        let f = diag(&[0.9, 0.2]);
        let v = coexist(&e, &f).unwrap();
        assert_eq!(v.decision, Decision::Coexistent);
        assert_eq!(v.path, Path::Scalar);
        let c = v.witness.unwrap();
        assert!(c.matrix().sub(&f.matrix().scale(0.3)).unwrap().frobenius_norm() < 1e-15);
        // A = λ(I − F), B = (1 − λ)F
        let a = e.matrix().sub(c.matrix()).unwrap();
        assert!(a.sub(&f.complement().matrix().scale(0.3)).unwrap().frobenius_norm() < 1e-15);
    }

    #[test]
    fn rank1_closed_form() {
        let p = [1.0, 0.0];
        let q = [0.8, 0.6];
        let v = coexist(&rank1(&p, 2.0 / 3.0), &rank1(&q, 2.0 / 3.0)).unwrap();
        assert_eq!(v.decision, Decision::NotCoexistent);
        assert_eq!(v.path, Path::Rank1);
        // λ_max = (2/3)(1 + 0.8)
        assert_abs_diff_eq!(v.margin, -0.2, epsilon = 1e-12);

        let v = coexist(&rank1(&p, 0.5), &rank1(&q, 0.5)).unwrap();
        assert_eq!(v.decision, Decision::Coexistent);
        assert_eq!(v.path, Path::SumBounded);
    }

    #[test]
    fn identical_ranges_go_through_commuting_path() {
        let v = coexist(&rank1(&[0.6, 0.8], 0.9), &rank1(&[0.6, 0.8], 0.7)).unwrap();
        assert_eq!(v.decision, Decision::Coexistent);
        assert_eq!(v.path, Path::Commuting);
    }

    #[test]
    fn commuting_witness_is_product() {
        let e = diag(&[0.9, 0.4]);
        let f = diag(&[0.8, 0.7]);
        let v = fast_path_commuting(&e, &f).unwrap().unwrap();
        let c = v.witness.unwrap();
        assert!(c.matrix().sub(&diag(&[0.72, 0.28]).into_matrix()).unwrap().frobenius_norm() < 1e-15);
        assert!(fast_path_commuting(&rank1(&[1.0, 0.0], 0.9), &rank1(&[1.0, 1.0], 0.9))
            .unwrap()
            .is_none());
    }

    #[test]
    fn commuting_with_projection() {
        let p = Projection::new(HermitianMatrix::from_real_diagonal(&[1.0, 0.0, 1.0])).unwrap();
        let f = diag(&[0.3, 0.6, 0.95]);
        let v = coexist(p.effect(), &f).unwrap();
        assert_eq!(v.decision, Decision::Coexistent);
    }

    #[test]
    fn sum_path() {
        let v = fast_path_sum(&Effect::scalar(0.4, 2).unwrap(), &Effect::scalar(0.4, 2).unwrap())
            .unwrap()
            .unwrap();
        assert_eq!(v.witness.unwrap(), Effect::zero(2));
        let p = Projection::rank1(&UnitVector::from_real(&[1.0, 2.0]).unwrap());
        assert!(fast_path_sum(p.effect(), p.complement().effect()).unwrap().is_some());
        let six = Effect::scalar(0.6, 2).unwrap();
        assert!(fast_path_sum(&six, &six).unwrap().is_none());
        assert_eq!(coexist(&six, &six).unwrap().path, Path::Scalar);
    }

    #[test]
    fn solver_on_half_identity() {
        let half = Effect::scalar(0.5, 2).unwrap();
        let prob = MarginProblem::new(&half, &half).unwrap();
        let sol = solve_margin(&prob, 500).unwrap();
        assert!(sol.margin >= 0.0);
        // C = I/4 attains the optimum 1/4
        let quarter = HermitianMatrix::scaled_identity(2, 0.25);
        assert_abs_diff_eq!(prob.margin(&quarter).unwrap(), 0.25, epsilon = 1e-15);
        assert!(sol.margin <= 0.25 + 1e-12);
        assert!(verify_witness(&half, &half, &quarter).unwrap());
    }

    #[test]
    fn solver_on_infeasible_rank1_pair() {
        let e = rank1(&[1.0, 0.0], 2.0 / 3.0);
        let f = rank1(&[0.8, 0.6], 2.0 / 3.0);
        let v = coexist_with(&e, &f, &CoexistenceConfig::solver_only()).unwrap();
        assert_eq!(v.decision, Decision::NotCoexistent);
        assert!(v.margin <= -0.01);
        let oracle = oracle_bruteforce(&e, &f).unwrap();
        assert_eq!(oracle.decision, Decision::NotCoexistent);
        // both are attained values; the oracle's is at least as good as a
        // crude ascent, and neither is above the true optimum
        assert!(oracle.margin < -0.01);
    }

    #[test]
    fn solve_margin_rejects_zero_iterations() {
        let half = Effect::scalar(0.5, 2).unwrap();
        let prob = MarginProblem::new(&half, &half).unwrap();
        assert!(solve_margin(&prob, 0).is_err());
    }

    #[test]
    fn dykstra_fixed_point_and_repair() {
        let e = diag(&[0.9, 0.6]);
        let f = diag(&[0.7, 0.8]);
        let prob = MarginProblem::new(&e, &f).unwrap();
        let good = e.matrix().jordan_product(f.matrix()).unwrap();
        let out = dykstra_refine(&prob, &good, 100).unwrap();
        assert!(out.sub(&good).unwrap().frobenius_norm() <= 1e-12);

        let nudged = good.add(&HermitianMatrix::from_real_diagonal(&[0.3, -0.2])).unwrap();
        assert!(prob.margin(&nudged).unwrap() < -0.1);
        let out = dykstra_refine(&prob, &nudged, DYKSTRA_ITERATIONS).unwrap();
        assert!(prob.margin(&out).unwrap() >= -TOL_FEAS);

        let bad_e = rank1(&[1.0, 0.0], 0.9);
        let bad_f = rank1(&[1.0, 1.0], 0.9);
        let prob = MarginProblem::new(&bad_e, &bad_f).unwrap();
        let start = HermitianMatrix::zeros(2);
        let out = dykstra_refine(&prob, &start, 200).unwrap();
        assert_eq!(out, start);
    }

    #[test]
    fn witness_checker() {
        let e = diag(&[0.9, 0.3]);
        let f = diag(&[0.1, 0.5]);
        assert!(verify_witness(&e, &f, &HermitianMatrix::zeros(2)).unwrap());
        let g = diag(&[0.5, 0.1]);
        assert!(!verify_witness(&e, &g, e.matrix()).unwrap());
        assert!(verify_witness(&e, &f, &HermitianMatrix::zeros(3)).is_err());
    }

    #[test]
    fn oracle_rejects_large_dimension() {
        let e = Effect::identity(3);
        assert!(matches!(oracle_bruteforce(&e, &e), Err(Error::Unsupported(_))));
    }

    #[test]
    fn oracle_boundary_rank1_sum_equals_identity() {
        let p = Projection::rank1(&UnitVector::from_real(&[0.6, 0.8]).unwrap());
        let v = oracle_bruteforce(p.effect(), p.complement().effect()).unwrap();
        assert_eq!(v.decision, Decision::Coexistent);
    }

    #[test]
    fn json_names() {
        assert_eq!(serde_json::to_string(&Path::SumBounded).unwrap(), "\"sum-bounded\"");
        assert_eq!(serde_json::to_string(&Path::Rank1).unwrap(), "\"rank1\"");
        assert_eq!(serde_json::to_string(&Decision::NotCoexistent).unwrap(), "\"not-coexistent\"");
    }
}
