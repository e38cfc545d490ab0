//! Transformations of the effect interval and sampled preservation checks.
//!
//! A check evaluates a relation on a tuple of effects and on its image and
//! records the first trial where the two disagree. Half of the trials are
//! constructed to satisfy the relation (in the domain, or in the range and
//! pulled back through the inverse), half are generic, and the first few
//! pair up the map's distinguished points such as `0` and `I`. Every trial
//! draws from its own stream, so reports do not depend on thread scheduling.

use rayon::prelude::*;
use serde::Serialize;

use crate::coexistence::{coexist, Decision};
use crate::effect::{commutes, is_mixture, Effect, Projection, TOL_COMMUTE};
use crate::error::{Error, Result};
use crate::function::MonotoneFunction;
use crate::hermitian::{unitarity_residual, CMatrix, HermitianMatrix, TOL_EIG, TOL_PSD};
use crate::io::{MapJson, MatrixJson, VectorJson};
use crate::rng::SeededRng;
use crate::sampling::{
    random_boundary_rank1_pair, random_coexistent_pair, random_commuting_pair, random_commuting_partner,
    random_effect, random_effect_above, random_effect_below, random_effect_orthogonal_to, random_mixed_effect,
    random_rank1_effect, random_sharp_pair, random_unit_vector,
};
use crate::vector::UnitVector;

/// Tolerance on a probability identity.
pub const TOL_PROBABILITY: f64 = 1e-9;
/// Tolerance on spectra and on round trips through the inverse.
pub const TOL_SPECTRUM: f64 = 1e-10;
const SYMMETRY_STEP: f64 = 1e-3;

/// A transformation of the effects on `C^n`.
///
/// Build values through the checked constructors; antiunitaries are
/// `E ↦ U conj(E) U†` with `conj` taken entrywise in the standard basis.
#[derive(Clone, Debug, PartialEq)]
pub enum EffectMap {
    Unitary { u: CMatrix },
    Antiunitary { u: CMatrix },
    /// `E ↦ U (I − E) U†`.
    ComplementUnitary { u: CMatrix },
    /// `E ↦ U f(E) U†`.
    Calculus { u: CMatrix, f: MonotoneFunction },
    /// Exchanges `0` and `I`, fixes everything else.
    Swap01,
    /// Exchanges `E1` and `E2`, two effects with zero probability at `phi`.
    ProbabilityPatch { phi: UnitVector, e1: Effect, e2: Effect },
}

fn check_unitary(u: &CMatrix) -> Result<()> {
    if u.nrows() != u.ncols() || u.nrows() == 0 {
        return Err(Error::Shape {
            rows: u.nrows(),
            cols: u.ncols(),
        });
    }
    let residual = unitarity_residual(u);
    if residual > TOL_EIG {
        return Err(Error::NotUnitary { residual });
    }
    Ok(())
}

/// Accepts tiny round-off outside `[0, I]` by clipping.
fn settle(m: HermitianMatrix) -> Result<Effect> {
    Effect::new(m.clone()).or_else(|_| Effect::clamped(&m))
}

impl EffectMap {
    pub fn unitary(u: CMatrix) -> Result<Self> {
        check_unitary(&u)?;
        Ok(Self::Unitary { u })
    }

    pub fn antiunitary(u: CMatrix) -> Result<Self> {
        check_unitary(&u)?;
        Ok(Self::Antiunitary { u })
    }

    pub fn complement_unitary(u: CMatrix) -> Result<Self> {
        check_unitary(&u)?;
        Ok(Self::ComplementUnitary { u })
    }

    pub fn calculus(u: CMatrix, f: MonotoneFunction) -> Result<Self> {
        check_unitary(&u)?;
        f.validate()?;
        Ok(Self::Calculus { u, f })
    }

    pub fn probability_patch(phi: UnitVector, e1: Effect, e2: Effect) -> Result<Self> {
        e1.matrix().check_dim(e2.matrix())?;
        if phi.dim() != e1.dim() {
            return Err(Error::DimensionMismatch {
                left: e1.dim(),
                right: phi.dim(),
            });
        }
        for e in [&e1, &e2] {
            let p = e.probability(&phi)?;
            if p.abs() > TOL_PROBABILITY {
                return Err(Error::InvalidParameter(format!(
                    "patched effects must have probability 0 at phi, got {p:e}"
                )));
            }
        }
        if e1.matrix().sub(e2.matrix())?.op_norm()? <= TOL_PSD {
            return Err(Error::InvalidParameter("patched effects must differ".into()));
        }
        Ok(Self::ProbabilityPatch { phi, e1, e2 })
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Self::Unitary { .. } => "unitary",
            Self::Antiunitary { .. } => "antiunitary",
            Self::ComplementUnitary { .. } => "complement_unitary",
            Self::Calculus { .. } => "calculus",
            Self::Swap01 => "swap01",
            Self::ProbabilityPatch { .. } => "probability_patch",
        }
    }

    /// The dimension fixed by the parameters; `None` for `swap01`.
    pub fn dim(&self) -> Option<usize> {
        match self {
            Self::Unitary { u } | Self::Antiunitary { u } | Self::ComplementUnitary { u } | Self::Calculus { u, .. } => {
                Some(u.nrows())
            }
            Self::Swap01 => None,
            Self::ProbabilityPatch { phi, .. } => Some(phi.dim()),
        }
    }

    fn check_input(&self, e: &Effect) -> Result<()> {
        match self.dim() {
            Some(n) if n != e.dim() => Err(Error::DimensionMismatch {
                left: n,
                right: e.dim(),
            }),
            _ => Ok(()),
        }
    }

    pub fn apply(&self, e: &Effect) -> Result<Effect> {
        self.check_input(e)?;
        match self {
            Self::Unitary { u } => settle(e.matrix().conjugate_by(u)),
            Self::Antiunitary { u } => settle(e.matrix().conj().conjugate_by(u)),
            Self::ComplementUnitary { u } => settle(e.complement().matrix().conjugate_by(u)),
            Self::Calculus { u, f } => settle(e.matrix().apply_function(f)?.conjugate_by(u)),
            Self::Swap01 | Self::ProbabilityPatch { .. } => self.exchange(e),
        }
    }

    /// The inverse map applied to `e`; used to pull back samples built in
    /// the range.
    pub fn apply_inverse(&self, e: &Effect) -> Result<Effect> {
        self.check_input(e)?;
        match self {
            Self::Unitary { u } => settle(e.matrix().conjugate_by(&u.adjoint())),
            // conj(U† F U) = Uᵀ conj(F) conj(U)
            Self::Antiunitary { u } => settle(e.matrix().conj().conjugate_by(&u.transpose())),
            Self::ComplementUnitary { u } => settle(e.complement().matrix().conjugate_by(&u.adjoint())),
            Self::Calculus { u, f } => {
                let back = e.matrix().conjugate_by(&u.adjoint());
                settle(back.map_spectrum(|x| f.eval_inverse(x.clamp(0.0, 1.0)))?)
            }
            Self::Swap01 | Self::ProbabilityPatch { .. } => self.exchange(e),
        }
    }

    fn exchange(&self, e: &Effect) -> Result<Effect> {
        let n = e.dim();
        let near = |a: &Effect, b: &Effect| -> Result<bool> { Ok(a.matrix().sub(b.matrix())?.op_norm()? <= TOL_PSD) };
        let (x, y) = match self {
            Self::Swap01 => (Effect::zero(n), Effect::identity(n)),
            Self::ProbabilityPatch { e1, e2, .. } => (e1.clone(), e2.clone()),
            _ => unreachable!("exchange maps only"),
        };
        if near(e, &x)? {
            Ok(y)
        } else if near(e, &y)? {
            Ok(x)
        } else {
            Ok(e.clone())
        }
    }

    /// The state `ψ` for which `⟨φ(E) ψ, ψ⟩ = ⟨E φ, φ⟩` is expected.
    pub fn transport_state(&self, phi: &UnitVector) -> Result<UnitVector> {
        let pushed = match self {
            Self::Unitary { u } | Self::ComplementUnitary { u } | Self::Calculus { u, .. } => u * phi.as_vector(),
            Self::Antiunitary { u } => u * phi.conj().as_vector(),
            Self::Swap01 | Self::ProbabilityPatch { .. } => return Ok(phi.clone()),
        };
        UnitVector::normalize(pushed)
    }

    /// Points where the map departs from its generic behavior; always
    /// includes `0` and `I`.
    pub fn distinguished_points(&self, dim: usize) -> Vec<Effect> {
        let mut points = vec![Effect::zero(dim), Effect::identity(dim)];
        if let Self::ProbabilityPatch { e1, e2, .. } = self {
            points.push(e1.clone());
            points.push(e2.clone());
        }
        points
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Order,
    Orthogonality,
    Commutativity,
    Coexistence,
    Mixture,
}

impl Relation {
    pub const ALL: [Relation; 5] = [
        Relation::Order,
        Relation::Orthogonality,
        Relation::Commutativity,
        Relation::Coexistence,
        Relation::Mixture,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Order => "order",
            Self::Orthogonality => "orthogonality",
            Self::Commutativity => "commutativity",
            Self::Coexistence => "coexistence",
            Self::Mixture => "mixture",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Self::Mixture => 3,
            _ => 2,
        }
    }

    /// `None` when the coexistence decision is inconclusive.
    pub fn evaluate(self, xs: &[Effect]) -> Result<Option<bool>> {
        Ok(Some(match self {
            Self::Order => xs[0].leq(&xs[1])?,
            Self::Orthogonality => xs[0].orthogonal(&xs[1])?,
            Self::Commutativity => commutes(&xs[0], &xs[1], TOL_COMMUTE)?,
            Self::Coexistence => match coexist(&xs[0], &xs[1])?.decision {
                Decision::Coexistent => true,
                Decision::NotCoexistent => false,
                Decision::Inconclusive => return Ok(None),
            },
            Self::Mixture => is_mixture(&xs[0], &xs[1], &xs[2])?.is_some(),
        }))
    }
}

/// A trial where the relation differs between inputs and images.
#[derive(Clone, Debug, PartialEq)]
pub struct Counterexample {
    pub trial: usize,
    pub inputs: Vec<Effect>,
    pub images: Vec<Effect>,
    pub before: bool,
    pub after: bool,
}

impl Counterexample {
    /// Re-evaluates the relation on the stored tuple and its image.
    pub fn replay(&self, map: &EffectMap, relation: Relation) -> Result<bool> {
        let images: Vec<Effect> = self.inputs.iter().map(|e| map.apply(e)).collect::<Result<_>>()?;
        let before = relation.evaluate(&self.inputs)?;
        let after = relation.evaluate(&images)?;
        Ok(before == Some(self.before) && after == Some(self.after) && self.before != self.after)
    }
}

impl Serialize for Counterexample {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Wire {
            trial: usize,
            inputs: Vec<MatrixJson>,
            images: Vec<MatrixJson>,
            before: bool,
            after: bool,
        }
        Wire {
            trial: self.trial,
            inputs: self.inputs.iter().map(MatrixJson::from_effect).collect(),
            images: self.images.iter().map(MatrixJson::from_effect).collect(),
            before: self.before,
            after: self.after,
        }
        .serialize(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub holds: bool,
    /// Trials where the relation was not preserved.
    pub violations: usize,
    /// Trials with a definite answer on both sides.
    pub checked: usize,
    pub inconclusive: usize,
    pub counterexample: Option<Counterexample>,
}

impl Verdict {
    fn from_outcomes(outcomes: &[TrialOutcome], violates: impl Fn(bool, bool) -> bool) -> Self {
        let mut checked = 0;
        let mut inconclusive = 0;
        let mut violations = 0;
        let mut counterexample = None;
        for o in outcomes {
            match (o.before, o.after) {
                (Some(b), Some(a)) => {
                    checked += 1;
                    if violates(b, a) {
                        violations += 1;
                    }
                    if counterexample.is_none() && violates(b, a) {
                        counterexample = Some(Counterexample {
                            trial: o.trial,
                            inputs: o.inputs.clone(),
                            images: o.images.clone(),
                            before: b,
                            after: a,
                        });
                    }
                }
                _ => inconclusive += 1,
            }
        }
        Self {
            holds: counterexample.is_none(),
            violations,
            checked,
            inconclusive,
            counterexample,
        }
    }
}

/// Forward means `R(x) ⇒ R(φ(x))`, backward `R(φ(x)) ⇒ R(x)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PreservationCheck {
    pub relation: Relation,
    pub dim: usize,
    pub trials: usize,
    pub forward: Verdict,
    pub backward: Verdict,
}

impl PreservationCheck {
    pub fn holds(&self) -> bool {
        self.forward.holds && self.backward.holds
    }

    /// Both directions folded into one verdict.
    pub fn combined(&self) -> Verdict {
        let counterexample = self
            .forward
            .counterexample
            .iter()
            .chain(&self.backward.counterexample)
            .min_by_key(|c| c.trial)
            .cloned();
        Verdict {
            holds: self.holds(),
            violations: self.forward.violations + self.backward.violations,
            checked: self.forward.checked,
            inconclusive: self.forward.inconclusive,
            counterexample,
        }
    }
}

struct TrialOutcome {
    trial: usize,
    inputs: Vec<Effect>,
    images: Vec<Effect>,
    before: Option<bool>,
    after: Option<bool>,
}

fn combine(t: f64, b: &Effect, c: &Effect) -> Result<Effect> {
    settle(b.matrix().scale(t).add(&c.matrix().scale(1.0 - t))?)
}

/// A tuple satisfying `relation`, optionally anchored at `anchor`.
fn constructed(relation: Relation, rng: &mut SeededRng, dim: usize, anchor: Option<&Effect>) -> Result<Vec<Effect>> {
    let base = match anchor {
        Some(a) => a.clone(),
        None => random_mixed_effect(rng, dim),
    };
    let mut tuple = match relation {
        Relation::Order => {
            if rng.coin() {
                vec![random_effect_below(rng, &base)?, base]
            } else {
                vec![base.clone(), random_effect_above(rng, &base)?]
            }
        }
        Relation::Orthogonality => vec![random_effect_orthogonal_to(rng, &base)?, base],
        Relation::Commutativity => {
            if anchor.is_none() && rng.coin() {
                let (e, f) = random_commuting_pair(rng, dim);
                vec![e, f]
            } else {
                vec![random_commuting_partner(rng, &base)?, base]
            }
        }
        Relation::Coexistence => match (anchor, rng.index(0, 3)) {
            (Some(_), _) | (None, 0) => vec![random_effect_below(rng, &base)?, base],
            (None, 1) => {
                let (e, f) = random_coexistent_pair(rng, dim);
                vec![e, f]
            }
            _ => {
                let (e, f) = random_boundary_rank1_pair(rng, dim)?;
                vec![e, f]
            }
        },
        Relation::Mixture => {
            let other = random_mixed_effect(rng, dim);
            let t = rng.uniform();
            vec![combine(t, &base, &other)?, base, other]
        }
    };
    if relation.arity() == 2 && rng.coin() && relation != Relation::Order {
        tuple.swap(0, 1);
    }
    Ok(tuple)
}

/// A tuple with no bias towards the relation.
fn generic(relation: Relation, rng: &mut SeededRng, dim: usize) -> Result<Vec<Effect>> {
    if relation == Relation::Coexistence {
        return Ok(match rng.index(0, 3) {
            0 => vec![random_effect(rng, dim), random_effect(rng, dim)],
            1 => {
                let (e, f) = random_sharp_pair(rng, dim);
                vec![e, f]
            }
            _ => vec![
                random_rank1_effect(rng, dim, 0.3, 1.0),
                random_rank1_effect(rng, dim, 0.3, 1.0),
            ],
        });
    }
    Ok((0..relation.arity()).map(|_| random_mixed_effect(rng, dim)).collect())
}

fn special_tuple(relation: Relation, points: &[Effect], k: usize) -> Result<Vec<Effect>> {
    let n = points.len();
    let (a, b) = (&points[k / n], &points[k % n]);
    Ok(match relation.arity() {
        3 => vec![combine(0.5, a, b)?, a.clone(), b.clone()],
        _ => vec![a.clone(), b.clone()],
    })
}

fn run_trial(map: &EffectMap, relation: Relation, seed: u64, dim: usize, k: usize) -> Result<TrialOutcome> {
    let label = format!("preserve/{}/{dim}", relation.name());
    let mut rng = SeededRng::for_trial(seed, &label, k as u64);
    let points = map.distinguished_points(dim);
    let specials = points.len() * points.len();
    let inputs = if k < specials {
        special_tuple(relation, &points, k)?
    } else {
        let anchor = if (k / 4) % 2 == 1 {
            Some(&points[rng.index(0, points.len())])
        } else {
            None
        };
        match k % 4 {
            0 => constructed(relation, &mut rng, dim, anchor)?,
            2 => constructed(relation, &mut rng, dim, anchor)?
                .iter()
                .map(|y| map.apply_inverse(y))
                .collect::<Result<_>>()?,
            _ => generic(relation, &mut rng, dim)?,
        }
    };
    let images: Vec<Effect> = inputs.iter().map(|e| map.apply(e)).collect::<Result<_>>()?;
    let before = relation.evaluate(&inputs)?;
    let after = relation.evaluate(&images)?;
    Ok(TrialOutcome {
        trial: k,
        inputs,
        images,
        before,
        after,
    })
}

/// Samples `trials` tuples of effects on `C^dim` and compares `relation`
/// before and after `map`.
pub fn check_preserves(
    map: &EffectMap,
    relation: Relation,
    seed: u64,
    trials: usize,
    dim: usize,
) -> Result<PreservationCheck> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    if let Some(n) = map.dim() {
        if n != dim {
            return Err(Error::DimensionMismatch { left: n, right: dim });
        }
    }
    let outcomes: Vec<TrialOutcome> = (0..trials)
        .into_par_iter()
        .map(|k| run_trial(map, relation, seed, dim, k))
        .collect::<Result<_>>()?;
    Ok(PreservationCheck {
        relation,
        dim,
        trials,
        forward: Verdict::from_outcomes(&outcomes, |b, a| b && !a),
        backward: Verdict::from_outcomes(&outcomes, |b, a| !b && a),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityCounterexample {
    pub trial: usize,
    pub input: Effect,
    pub image: Effect,
    pub expected: f64,
    pub observed: f64,
}

impl Serialize for ProbabilityCounterexample {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Wire {
            trial: usize,
            input: MatrixJson,
            image: MatrixJson,
            expected: f64,
            observed: f64,
        }
        Wire {
            trial: self.trial,
            input: MatrixJson::from_effect(&self.input),
            image: MatrixJson::from_effect(&self.image),
            expected: self.expected,
            observed: self.observed,
        }
        .serialize(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityVerdict {
    pub holds: bool,
    pub violations: usize,
    pub phi: UnitVector,
    pub psi: UnitVector,
    pub trials: usize,
    pub max_deviation: f64,
    pub counterexample: Option<ProbabilityCounterexample>,
}

impl Serialize for ProbabilityVerdict {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Wire<'a> {
            holds: bool,
            violations: usize,
            phi: VectorJson,
            psi: VectorJson,
            trials: usize,
            max_deviation: f64,
            counterexample: &'a Option<ProbabilityCounterexample>,
        }
        Wire {
            holds: self.holds,
            violations: self.violations,
            phi: VectorJson::from_unit(&self.phi),
            psi: VectorJson::from_unit(&self.psi),
            trials: self.trials,
            max_deviation: self.max_deviation,
            counterexample: &self.counterexample,
        }
        .serialize(s)
    }
}

fn probability_sample(map: &EffectMap, phi: &UnitVector, rng: &mut SeededRng, k: usize) -> Result<Effect> {
    let dim = phi.dim();
    let points = map.distinguished_points(dim);
    if k < points.len() {
        return Ok(points[k].clone());
    }
    Ok(match k % 4 {
        0 => Projection::rank1(phi).effect().scale(rng.uniform())?,
        // weight only off φ
        1 => {
            let kernel = Projection::rank1(phi).complement();
            settle(random_effect(rng, dim).matrix().conjugate_by(kernel.matrix().as_matrix()))?
        }
        _ => random_mixed_effect(rng, dim),
    })
}

/// Checks `⟨φ(E) ψ, ψ⟩ = ⟨E φ, φ⟩` on sampled effects.
pub fn check_probability(
    map: &EffectMap,
    phi: &UnitVector,
    psi: &UnitVector,
    seed: u64,
    trials: usize,
) -> Result<ProbabilityVerdict> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let rows: Vec<(usize, Effect, Effect, f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = SeededRng::for_trial(seed, "probability", k as u64);
            let e = probability_sample(map, phi, &mut rng, k)?;
            let image = map.apply(&e)?;
            let expected = e.probability(phi)?;
            let observed = image.probability(psi)?;
            Ok((k, e, image, expected, observed))
        })
        .collect::<Result<_>>()?;
    let mut max_deviation: f64 = 0.0;
    let mut violations = 0;
    let mut counterexample = None;
    for (trial, input, image, expected, observed) in rows {
        let deviation = (observed - expected).abs();
        max_deviation = max_deviation.max(deviation);
        if deviation > TOL_PROBABILITY {
            violations += 1;
        }
        if deviation > TOL_PROBABILITY && counterexample.is_none() {
            counterexample = Some(ProbabilityCounterexample {
                trial,
                input,
                image,
                expected,
                observed,
            });
        }
    }
    Ok(ProbabilityVerdict {
        holds: counterexample.is_none(),
        violations,
        phi: phi.clone(),
        psi: psi.clone(),
        trials,
        max_deviation,
        counterexample,
    })
}

fn sampled_effects(map: &EffectMap, seed: u64, label: &str, trials: usize, dim: usize) -> Vec<Effect> {
    let mut out = map.distinguished_points(dim);
    out.extend((0..trials).map(|k| random_mixed_effect(&mut SeededRng::for_trial(seed, label, k as u64), dim)));
    out
}

/// Largest `max_i |λ_i(φ(E)) − λ_i(E)|` over sampled effects.
pub fn spectrum_defect(map: &EffectMap, seed: u64, trials: usize, dim: usize) -> Result<f64> {
    sampled_effects(map, seed, "spectrum", trials, dim)
        .par_iter()
        .map(|e| {
            let before = e.matrix().eigenvalues()?;
            let after = map.apply(e)?.matrix().eigenvalues()?;
            Ok(before.iter().zip(&after).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

/// Largest `‖φ⁻¹(φ(E)) − E‖` over sampled effects.
pub fn inverse_residual(map: &EffectMap, seed: u64, trials: usize, dim: usize) -> Result<f64> {
    sampled_effects(map, seed, "inverse", trials, dim)
        .par_iter()
        .map(|e| {
            let back = map.apply_inverse(&map.apply(e)?)?;
            back.matrix().sub(e.matrix())?.op_norm()
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymmetryProbe {
    pub max_defect: f64,
    pub at: f64,
    /// Whether `f(λ) + f(1 − λ) = 1` holds on the grid.
    pub holds: bool,
}

pub fn symmetry_probe(f: &MonotoneFunction) -> SymmetryProbe {
    let (max_defect, at) = f.symmetry_defect(SYMMETRY_STEP);
    SymmetryProbe {
        max_defect,
        at,
        holds: max_defect <= TOL_PROBABILITY,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PreservationReport {
    pub map: MapJson,
    pub seed: u64,
    pub trials: usize,
    pub dim: usize,
    pub order_fwd: Verdict,
    pub order_bwd: Verdict,
    pub orthogonality: Verdict,
    pub commutativity: Verdict,
    pub coexistence: Verdict,
    pub mixture: Verdict,
    pub probability: ProbabilityVerdict,
    pub symmetry: Option<SymmetryProbe>,
    pub spectrum_defect: f64,
    pub inverse_residual: f64,
}

/// Runs every relation check on `map`. `dim` is used only when the map
/// does not fix its own dimension.
pub fn classify(map: &EffectMap, seed: u64, trials: usize, dim: usize) -> Result<PreservationReport> {
    let dim = map.dim().unwrap_or(dim);
    let check = |r: Relation| check_preserves(map, r, seed, trials, dim);
    let order = check(Relation::Order)?;
    let phi = match map {
        EffectMap::ProbabilityPatch { phi, .. } => phi.clone(),
        _ => random_unit_vector(&mut SeededRng::for_trial(seed, "classify/phi", 0), dim),
    };
    let psi = map.transport_state(&phi)?;
    Ok(PreservationReport {
        map: MapJson::from_map(map),
        seed,
        trials,
        dim,
        order_fwd: order.forward.clone(),
        order_bwd: order.backward.clone(),
        orthogonality: check(Relation::Orthogonality)?.combined(),
        commutativity: check(Relation::Commutativity)?.combined(),
        coexistence: check(Relation::Coexistence)?.combined(),
        mixture: check(Relation::Mixture)?.combined(),
        probability: check_probability(map, &phi, &psi, seed, trials)?,
        symmetry: match map {
            EffectMap::Calculus { f, .. } => Some(symmetry_probe(f)),
            _ => None,
        },
        spectrum_defect: spectrum_defect(map, seed, trials, dim)?,
        inverse_residual: inverse_residual(map, seed, trials, dim)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonotoneCheck {
    pub holds: bool,
    pub trials: usize,
    pub violations: usize,
    /// Largest `max(0, −λ_min(g(B) − g(A)))` seen.
    pub max_violation: f64,
    pub counterexample: Option<(MatrixJson, MatrixJson)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonotoneVerdict {
    pub function: MonotoneFunction,
    pub forward: MonotoneCheck,
    /// Present when the inverse belongs to the catalog.
    pub inverse: Option<MonotoneCheck>,
}

impl MonotoneVerdict {
    pub fn holds(&self) -> bool {
        self.forward.holds && self.inverse.as_ref().is_none_or(|c| c.holds)
    }
}

fn monotone_pair(rng: &mut SeededRng, dim: usize) -> Result<(Effect, Effect)> {
    let b = random_mixed_effect(rng, dim);
    let a = match rng.index(0, 3) {
        0 => b.scale(rng.uniform())?,
        _ => random_effect_below(rng, &b)?,
    };
    Ok((a, b))
}

/// Relative size of eigenvalue round-off on effects.
const ROUNDING: f64 = 64.0 * f64::EPSILON;

/// `sup |f(x + δ) − f(x)|` over `[0, 1]` for `f` monotone and either convex
/// or concave there, which every catalog entry is.
fn modulus(f: &MonotoneFunction, delta: f64) -> f64 {
    let d = delta.min(1.0);
    (f.eval(d) - f.eval(0.0)).abs().max((f.eval(1.0) - f.eval(1.0 - d)).abs())
}

fn monotone_check(f: &MonotoneFunction, seed: u64, label: &str, trials: usize, dims: &[usize]) -> Result<MonotoneCheck> {
    let rows: Vec<(bool, f64, Effect, Effect)> = (0..trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = SeededRng::for_trial(seed, label, k as u64);
            let (a, b) = monotone_pair(&mut rng, dims[k % dims.len()])?;
            let fa = a.matrix().apply_function(f)?;
            let fb = b.matrix().apply_function(f)?;
            // Rounding in A ⪯ B is amplified by f wherever f is steep
            // (√x near 0), so allow the increment of f over that rounding.
            let gap = b.matrix().sub(a.matrix())?;
            let input_slack = (-gap.lambda_min()?).max(0.0) + ROUNDING * b.matrix().op_norm()?.max(1.0);
            let violation = (-fb.sub(&fa)?.lambda_min()?).max(0.0);
            let ok = violation <= TOL_PSD * fb.op_norm()?.max(1.0) + modulus(f, input_slack);
            Ok((ok, violation, a, b))
        })
        .collect::<Result<_>>()?;
    let max_violation = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let counterexample = rows
        .iter()
        .find(|r| !r.0)
        .map(|(_, _, a, b)| (MatrixJson::from_effect(a), MatrixJson::from_effect(b)));
    Ok(MonotoneCheck {
        holds: counterexample.is_none(),
        trials,
        violations: rows.iter().filter(|r| !r.0).count(),
        max_violation,
        counterexample,
    })
}

/// Tests `A ⪯ B ⇒ f(A) ⪯ f(B)` on sampled pairs, cycling through `dims`.
pub fn is_operator_monotone_sampled(
    f: &MonotoneFunction,
    seed: u64,
    trials: usize,
    dims: &[usize],
) -> Result<MonotoneVerdict> {
    f.validate()?;
    if !f.is_increasing() {
        return Err(Error::InvalidParameter("operator monotonicity needs an increasing function".into()));
    }
    if trials == 0 || dims.is_empty() {
        return Err(Error::InvalidParameter("need at least one trial and one dimension".into()));
    }
    let forward = monotone_check(f, seed, "monotone", trials, dims)?;
    let inverse = f
        .inverse()
        .map(|g| monotone_check(&g, seed, "monotone/inverse", trials, dims))
        .transpose()?;
    Ok(MonotoneVerdict {
        function: *f,
        forward,
        inverse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::haar_unitary;
    use approx::assert_abs_diff_eq;

    fn mobius() -> EffectMap {
        EffectMap::calculus(CMatrix::identity(2, 2), MonotoneFunction::Mobius { a: 1.0 }).unwrap()
    }

    #[test]
    fn apply_examples() {
        let id = EffectMap::unitary(CMatrix::identity(2, 2)).unwrap();
        let e = random_effect(&mut SeededRng::new(1), 2);
        assert_eq!(id.apply(&e).unwrap(), e);
        assert_eq!(EffectMap::Swap01.apply(&Effect::zero(3)).unwrap(), Effect::identity(3));
        assert_eq!(EffectMap::Swap01.apply(&Effect::identity(3)).unwrap(), Effect::zero(3));
        assert_eq!(EffectMap::Swap01.apply(&e).unwrap(), e);
        let half = Effect::scalar(0.5, 2).unwrap();
        let image = mobius().apply(&half).unwrap();
        let expected = HermitianMatrix::scaled_identity(2, 2.0 / 3.0);
        assert!(image.matrix().sub(&expected).unwrap().op_norm().unwrap() <= 1e-12);
    }

    #[test]
    fn constructors_validate() {
        let skew = CMatrix::from_fn(2, 2, |i, j| crate::hermitian::C64::new(if i <= j { 1.0 } else { 0.0 }, 0.0));
        assert!(matches!(EffectMap::unitary(skew), Err(Error::NotUnitary { .. })));
        assert!(EffectMap::calculus(CMatrix::identity(2, 2), MonotoneFunction::Power { p: 2.0 }).is_err());
        let e1 = Projection::rank1(&UnitVector::basis(2, 1)).effect().clone();
        assert!(EffectMap::probability_patch(UnitVector::basis(2, 1), e1.clone(), Effect::zero(2)).is_err());
        assert!(EffectMap::probability_patch(UnitVector::basis(2, 0), e1.clone(), e1).is_err());
    }

    #[test]
    fn inverses_round_trip() {
        let mut rng = SeededRng::new(4);
        let u = haar_unitary(&mut rng, 3);
        let maps = [
            EffectMap::unitary(u.clone()).unwrap(),
            EffectMap::antiunitary(u.clone()).unwrap(),
            EffectMap::complement_unitary(u.clone()).unwrap(),
            EffectMap::calculus(u.clone(), MonotoneFunction::Mobius { a: 2.0 }).unwrap(),
            EffectMap::calculus(u, MonotoneFunction::Power { p: 0.5 }).unwrap(),
            EffectMap::Swap01,
        ];
        for map in &maps {
            assert!(inverse_residual(map, 9, 30, 3).unwrap() <= TOL_SPECTRUM, "{}", map.tag());
        }
    }

    #[test]
    fn unitary_probability_transport() {
        let mut rng = SeededRng::new(8);
        let u = haar_unitary(&mut rng, 3);
        let phi = random_unit_vector(&mut rng, 3);
        for map in [EffectMap::unitary(u.clone()).unwrap(), EffectMap::antiunitary(u).unwrap()] {
            let psi = map.transport_state(&phi).unwrap();
            let v = check_probability(&map, &phi, &psi, 3, 100).unwrap();
            assert!(v.holds, "{} {}", map.tag(), v.max_deviation);
        }
    }

    #[test]
    fn counterexample_replays() {
        let check = check_preserves(&EffectMap::Swap01, Relation::Order, 5, 40, 2).unwrap();
        let c = check.forward.counterexample.expect("swap01 breaks order");
        assert!(c.replay(&EffectMap::Swap01, Relation::Order).unwrap());
        assert_eq!(check.forward.checked + check.forward.inconclusive, check.trials);
    }

    #[test]
    fn checks_are_deterministic() {
        let a = check_preserves(&mobius(), Relation::Commutativity, 17, 60, 2).unwrap();
        let b = check_preserves(&mobius(), Relation::Commutativity, 17, 60, 2).unwrap();
        assert_eq!(a, b);
        assert!(a.holds());
    }

    #[test]
    fn mobius_symmetry_probe() {
        let probe = symmetry_probe(&MonotoneFunction::Mobius { a: 1.0 });
        assert_abs_diff_eq!(probe.max_defect, 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(probe.at, 0.5, epsilon = 1e-12);
        assert!(!probe.holds);
        assert!(symmetry_probe(&MonotoneFunction::Identity).holds);
    }

    #[test]
    fn monotone_sampling_rejects_complement() {
        assert!(is_operator_monotone_sampled(&MonotoneFunction::Complement, 1, 10, &[2]).is_err());
        let v = is_operator_monotone_sampled(&MonotoneFunction::Identity, 1, 50, &[2, 3]).unwrap();
        assert!(v.holds());
    }
}
