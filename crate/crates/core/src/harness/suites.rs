use serde_json::{json, Value};

use super::oracles::{cholesky_psd, descending_eigenvalues, strength_grid};
use super::{Context, Count, Outcome, PropertyResult};
use crate::coexistence::{coexist_with, oracle_bruteforce, verify_witness, CoexistenceConfig, CoexistenceVerdict, Decision};
use crate::effect::{
    commutator_norm, commutes, is_mixture_with, noncommuting_subprojections, order_witness, Effect, Projection,
    TOL_COMMUTE,
};
use crate::error::Result;
use crate::function::MonotoneFunction;
use crate::hermitian::{psd_leq, CMatrix, CVector, HermitianMatrix};
use crate::io::{verdict_json, MatrixJson, VectorJson};
use crate::maps::{
    check_preserves, check_probability, is_operator_monotone_sampled, symmetry_probe, EffectMap, MonotoneCheck,
    PreservationCheck, Relation, Verdict, TOL_SPECTRUM,
};
use crate::rng::SeededRng;
use crate::sampling::{
    complex_normal, effect_with_spectrum, haar_unitary, random_coexistent_pair, random_commuting_partner,
    random_effect, random_effect_below, random_effect_orthogonal_to, random_hermitian, random_mixed_effect,
    random_projection, random_rank1_effect, random_sharp_pair, random_unit_vector,
};
use crate::vector::UnitVector;

/// Disagreements between solver and oracle are tolerated only this close
/// to the feasibility boundary.
const BOUNDARY_BAND: f64 = 1e-6;
const EIGEN_TOL: f64 = 1e-8;
const STRENGTH_TOL: f64 = 1e-6;
const SUP_STEP: f64 = 1e-4;
const WEYL_SLACK: f64 = 1e-9;
const SYMMETRY_TOL: f64 = 1e-9;
const RAYS: usize = 50;
const SUBPROJECTION_PAIRS: usize = 50;

pub(super) fn run(ctx: &mut Context) -> Result<()> {
    match ctx.suite {
        "lemma-scalar" => lemma_scalar(ctx),
        "lemma-rank1" => lemma_rank1(ctx),
        "lemma-eigenvalue" => lemma_eigenvalue(ctx),
        "lemma-proj" => lemma_proj(ctx),
        "lemma-scalar2" => lemma_scalar2(ctx),
        "remark-order" => remark_order(ctx),
        "thm1-forward" => thm1_forward(ctx),
        "thm2-forward" => thm2_forward(ctx),
        "thm3-forward" => thm3_forward(ctx),
        "gallery" => gallery(ctx),
        "monotone" => monotone(ctx),
        "weyl" => weyl(ctx),
        other => unreachable!("suite {other} is not registered"),
    }
    Ok(())
}

fn ej(e: &Effect) -> Value {
    serde_json::to_value(MatrixJson::from_effect(e)).expect("finite matrix")
}

fn hj(m: &HermitianMatrix) -> Value {
    serde_json::to_value(MatrixJson::from_hermitian(m)).expect("finite matrix")
}

fn vj(v: &UnitVector) -> Value {
    serde_json::to_value(VectorJson::from_unit(v)).expect("finite vector")
}

fn coexistence_config(ctx: &Context, fast_paths: bool) -> CoexistenceConfig {
    CoexistenceConfig {
        tol_feas: ctx.config.tol_feas,
        fast_paths,
        ..CoexistenceConfig::default()
    }
}

fn has_witness(e: &Effect, f: &Effect, v: &CoexistenceVerdict) -> Result<bool> {
    match &v.witness {
        Some(c) => verify_witness(e, f, c.matrix()),
        None => Ok(false),
    }
}

fn near(a: &HermitianMatrix, b: &HermitianMatrix, tol: f64) -> Result<bool> {
    Ok(a.sub(b)?.op_norm()? <= tol)
}

fn unitary_for(ctx: &Context, dim: usize) -> CMatrix {
    haar_unitary(&mut SeededRng::for_trial(ctx.seed(), &ctx.full_name("U"), dim as u64), dim)
}

fn lemma_scalar(ctx: &mut Context) {
    let dims = ctx.dims(&[2, 3, 4, 5]);
    let config = coexistence_config(ctx, true);
    let tol = ctx.config.tol_psd;

    ctx.sampled("scalar-coexists-with-every-effect", &dims, Count::PerDim(200), |rng, dim, _| {
        let lambda = rng.uniform();
        let scalar = Effect::scalar(lambda, dim)?;
        let other = random_mixed_effect(rng, dim);
        let (e, f) = if rng.coin() { (scalar, other) } else { (other, scalar) };
        let v = coexist_with(&e, &f, &config)?;
        let ok = v.is_coexistent() && has_witness(&e, &f, &v)?;
        Ok(Outcome::from_bool(ok, || {
            json!({"lambda": lambda, "E": ej(&e), "F": ej(&f), "verdict": verdict_json(&v)})
        }))
    });

    ctx.sampled("explicit-witness", &dims, Count::PerDim(200), |rng, dim, _| {
        let lambda = rng.uniform();
        let e = random_mixed_effect(rng, dim);
        let id = HermitianMatrix::identity(dim);
        let a = id.sub(e.matrix())?.scale(lambda);
        let b = e.matrix().scale(1.0 - lambda);
        let c = e.matrix().scale(lambda);
        let total = a.add(&b)?.add(&c)?;
        let parts_are_effects = [&a, &b, &c]
            .iter()
            .map(|m| Ok(m.is_psd(tol)? && psd_leq(m, &id, tol)?))
            .collect::<Result<Vec<bool>>>()?
            .into_iter()
            .all(|x| x);
        let ok = parts_are_effects
            && total.is_psd(tol)?
            && psd_leq(&total, &id, tol)?
            && near(&a.add(&c)?, &HermitianMatrix::scaled_identity(dim, lambda), tol)?
            && near(&b.add(&c)?, e.matrix(), tol)?
            && verify_witness(&Effect::scalar(lambda, dim)?, &e, &c)?;
        Ok(Outcome::from_bool(ok, || json!({"lambda": lambda, "E": ej(&e)})))
    });

    let dims = ctx.dims_at_least(&[2, 3, 4, 5], 2, "a proper projection needs dim>=2");
    ctx.sampled("projection-coexistence-iff-commute", &dims, Count::Total(500), |rng, dim, k| {
        let rank = rng.index(1, dim);
        let p = random_projection(rng, dim, rank);
        let a = if k % 2 == 0 {
            random_commuting_partner(rng, p.effect())?
        } else {
            random_effect(rng, dim)
        };
        let v = coexist_with(&a, p.effect(), &config)?;
        let commuting = commutes(&a, p.effect(), TOL_COMMUTE)?;
        Ok(match v.decision {
            Decision::Inconclusive => Outcome::Inconclusive,
            d => Outcome::from_bool((d == Decision::Coexistent) == commuting, || {
                json!({"A": ej(&a), "P": ej(p.effect()), "commutes": commuting, "verdict": verdict_json(&v)})
            }),
        })
    });
}

/// `s P_p`, `t P_q` with distinct ranges; odd trials sit near `E + F = I`.
fn rank1_pair(rng: &mut SeededRng, dim: usize, k: usize) -> Result<(Effect, Effect)> {
    let (p, q) = loop {
        let p = random_unit_vector(rng, dim);
        let q = random_unit_vector(rng, dim);
        if p.inner(&q).norm() < 1.0 - 1e-6 {
            break (p, q);
        }
    };
    let (s, t) = if k.is_multiple_of(2) {
        (rng.uniform(), rng.uniform())
    } else {
        let s = (rng.uniform_in(0.9, 1.1) / (1.0 + p.inner(&q).norm())).min(1.0);
        (s, s)
    };
    Ok((
        Projection::rank1(&p).effect().scale(s)?,
        Projection::rank1(&q).effect().scale(t)?,
    ))
}

fn closed_form_trial(e: &Effect, f: &Effect, v: &CoexistenceVerdict) -> Result<Outcome> {
    let excess = e.sum(f)?.lambda_max()? - 1.0;
    let payload = || json!({"E": ej(e), "F": ej(f), "excess": excess, "verdict": verdict_json(v)});
    Ok(match v.decision {
        Decision::Inconclusive if excess.abs() <= BOUNDARY_BAND => Outcome::Inconclusive,
        Decision::Inconclusive => Outcome::Fail(payload()),
        d => Outcome::from_bool((d == Decision::Coexistent) == (excess <= 0.0), payload),
    })
}

fn lemma_rank1(ctx: &mut Context) {
    let dims = ctx.dims_at_least(&[3], 2, "distinct rank-1 ranges need dim>=2");
    let solver = coexistence_config(ctx, false);
    let dispatch = coexistence_config(ctx, true);

    ctx.sampled("solver-vs-closed-form", &dims, Count::Total(500), |rng, dim, k| {
        let (e, f) = rank1_pair(rng, dim, k)?;
        closed_form_trial(&e, &f, &coexist_with(&e, &f, &solver)?)
    });
    ctx.sampled("dispatch-vs-closed-form", &dims, Count::Total(500), |rng, dim, k| {
        let (e, f) = rank1_pair(rng, dim, k)?;
        closed_form_trial(&e, &f, &coexist_with(&e, &f, &dispatch)?)
    });

    ctx.sampled("solver-vs-oracle", &[2], Count::Total(300), |rng, dim, k| {
        let (e, f) = match k % 4 {
            0 => (random_effect(rng, dim), random_effect(rng, dim)),
            1 => random_sharp_pair(rng, dim),
            2 => random_coexistent_pair(rng, dim),
            _ => (
                random_rank1_effect(rng, dim, 0.3, 1.0),
                random_rank1_effect(rng, dim, 0.3, 1.0),
            ),
        };
        let v = coexist_with(&e, &f, &dispatch)?;
        let o = oracle_bruteforce(&e, &f)?;
        let boundary = v.margin.abs() <= BOUNDARY_BAND && o.margin.abs() <= BOUNDARY_BAND;
        Ok(if v.decision == o.decision && v.decision != Decision::Inconclusive {
            Outcome::Pass
        } else if boundary {
            Outcome::Inconclusive
        } else {
            Outcome::Fail(json!({
                "E": ej(&e), "F": ej(&f), "solver": verdict_json(&v), "oracle": verdict_json(&o)
            }))
        })
    });
    ctx.note("solver-vs-oracle", "the brute-force oracle runs at dim 2 only".into());
}

/// A unit vector in the range of `p`.
fn vector_in(rng: &mut SeededRng, p: &Projection) -> Result<UnitVector> {
    let g = CVector::from_fn(p.dim(), |_, _| complex_normal(rng));
    UnitVector::normalize(p.matrix().apply_to(&g)?)
}

fn lemma_eigenvalue(ctx: &mut Context) {
    let dims = ctx.dims_at_least(&[2, 3, 4, 5], 2, "two eigenspaces need dim>=2");
    ctx.sampled("two-level-effect", &dims, Count::Total(100), |rng, dim, _| {
        let rank = rng.index(1, dim);
        let r = random_projection(rng, dim, rank);
        let lambda = rng.uniform_in(0.01, 0.95);
        let mu = lambda + (1.0 - lambda) * rng.uniform_in(0.05, 1.0);
        let e = Effect::new(r.matrix().scale(lambda).add(&r.complement().matrix().scale(mu))?)?;
        let phi = vector_in(rng, &r)?;
        let psi = vector_in(rng, &r.complement())?;
        let mut worst: f64 = 0.0;
        for (v, level) in [(&phi, lambda), (&psi, mu)] {
            let image = e.matrix().apply_to(v.as_vector())?;
            let residual = (image - v.as_vector() * crate::hermitian::C64::new(level, 0.0)).norm();
            worst = worst.max(residual).max((e.strength_along(v)? - level).abs());
        }
        Ok(Outcome::from_bool(worst <= EIGEN_TOL, || {
            json!({"E": ej(&e), "phi": vj(&phi), "psi": vj(&psi), "lambda": lambda, "mu": mu, "error": worst})
        }))
    });

    let p = Projection::rank1(&UnitVector::basis(2, 0));
    let phi = UnitVector::from_real(&[1.0, 1.0]).expect("nonzero");
    let check = (|| {
        let strength = p.effect().strength_along(&phi)?;
        let image = p.matrix().apply_to(phi.as_vector())?.norm();
        let witness = json!({"P": ej(p.effect()), "phi": vj(&phi), "strength": strength, "P_phi_norm": image});
        Ok((Outcome::from_bool(strength == 0.0 && image > 0.5, || witness.clone()), Some(witness)))
    })();
    ctx.single("zero-eigenvalue-counterexample", &[2], check);
}

/// `P`, `Q` spanned by column sets of one Haar unitary.
fn coordinate_projections(u: &CMatrix, first: std::ops::Range<usize>, second: std::ops::Range<usize>) -> Result<(Projection, Projection)> {
    let span = |r: std::ops::Range<usize>| Projection::onto_columns(&u.columns(r.start, r.len()).into_owned());
    Ok((span(first)?, span(second)?))
}

/// A rank-1 subprojection of `p`.
fn subprojection(rng: &mut SeededRng, p: &Projection) -> Result<Projection> {
    Ok(Projection::rank1(&vector_in(rng, p)?))
}

fn lemma_proj(ctx: &mut Context) {
    let dims = ctx.dims_at_least(&[3, 4, 5], 2, "two nonzero projections need dim>=2");
    let tol = ctx.config.tol_psd;
    ctx.sampled("orthogonal-iff-subprojections-commute", &dims, Count::Total(200), |rng, dim, k| {
        let u = haar_unitary(rng, dim);
        let (p, q) = match k % 3 {
            0 => {
                let a = rng.index(1, dim);
                let b = rng.index(1, dim - a + 1);
                coordinate_projections(&u, 0..a, a..a + b)?
            }
            1 => {
                let (a, b) = (rng.index(1, dim), rng.index(1, dim));
                (random_projection(rng, dim, a), random_projection(rng, dim, b))
            }
            _ => loop {
                // overlapping coordinate spans: commuting with PQ ≠ 0
                let a = rng.index(1, dim + 1);
                let c = rng.index(0, a);
                let b = rng.index(1, dim - c + 1);
                if !(c == 0 && b == a) {
                    break coordinate_projections(&u, 0..a, c..c + b)?;
                }
            },
        };
        let pq = p.matrix().product(q.matrix())?;
        let orthogonal = pq.iter().map(|z| z.norm()).fold(0.0, f64::max) <= 1e-12;
        let payload = || json!({"P": ej(p.effect()), "Q": ej(q.effect())});
        let witness = noncommuting_subprojections(&p, &q)?;
        if orthogonal {
            let mut ok = witness.is_none();
            for _ in 0..SUBPROJECTION_PAIRS {
                let (p0, q0) = (subprojection(rng, &p)?, subprojection(rng, &q)?);
                ok &= commutator_norm(p0.matrix(), q0.matrix())? <= 1e-9;
            }
            return Ok(Outcome::from_bool(ok, payload));
        }
        let Some((p0, q0)) = witness else {
            return Ok(Outcome::Fail(payload()));
        };
        let ok = psd_leq(p0.matrix(), p.matrix(), tol)?
            && psd_leq(q0.matrix(), q.matrix(), tol)?
            && commutator_norm(p0.matrix(), q0.matrix())? > 1e-6;
        Ok(Outcome::from_bool(ok, payload))
    });
}

/// An effect with a kernel of dimension at least one, or a generic one.
fn effect_and_ray(rng: &mut SeededRng, dim: usize, k: usize) -> Result<(Effect, UnitVector)> {
    let e = if k.is_multiple_of(2) {
        random_mixed_effect(rng, dim)
    } else {
        let zeros = rng.index(1, dim.max(2));
        let spectrum: Vec<f64> = (0..dim).map(|i| if i < zeros { 0.0 } else { rng.uniform() }).collect();
        effect_with_spectrum(rng, &spectrum)
    };
    let d = e.matrix().eig()?;
    let phi = match k % 3 {
        0 => random_unit_vector(rng, dim),
        1 => UnitVector::normalize(d.eigenvector(rng.index(0, dim)))?,
        _ => {
            // kernel-aligned when there is a kernel
            let kernel: Vec<usize> = (0..dim).filter(|&i| d.eigenvalues[i] <= 1e-12).collect();
            if kernel.is_empty() {
                random_unit_vector(rng, dim)
            } else {
                let mut v = CVector::zeros(dim);
                for &i in &kernel {
                    v += d.eigenvector(i) * complex_normal(rng);
                }
                if rng.coin() {
                    v += d.eigenvector(dim - 1) * crate::hermitian::C64::new(rng.uniform(), 0.0);
                }
                UnitVector::normalize(v)?
            }
        }
    };
    Ok((e, phi))
}

fn lemma_scalar2(ctx: &mut Context) {
    let dims = ctx.dims(&[2, 3, 4, 5]);
    let tol = ctx.config.tol_psd;

    ctx.sampled("strength-is-supremum", &dims, Count::Total(500), |rng, dim, k| {
        let (e, phi) = effect_and_ray(rng, dim, k)?;
        let s = e.strength_along(&phi)?;
        let p = Projection::rank1(&phi);
        let below = psd_leq(&p.matrix().scale(s), e.matrix(), tol)?;
        let tight = s >= 1.0 || !psd_leq(&p.matrix().scale(s + SUP_STEP), e.matrix(), tol)?;
        Ok(Outcome::from_bool(below && tight, || {
            json!({"E": ej(&e), "phi": vj(&phi), "strength": s, "below": below, "tight": tight})
        }))
    });

    ctx.sampled("strength-vs-grid-oracle", &dims, Count::Total(200), |rng, dim, k| {
        let (e, phi) = effect_and_ray(rng, dim, k)?;
        let s = e.strength_along(&phi)?;
        let reference = strength_grid(e.matrix(), &phi);
        Ok(Outcome::from_bool((s - reference).abs() <= STRENGTH_TOL, || {
            json!({"E": ej(&e), "phi": vj(&phi), "strength": s, "oracle": reference})
        }))
    });

    ctx.sampled("positive-strength-iff-range", &dims, Count::Total(500), |rng, dim, k| {
        let (e, phi) = effect_and_ray(rng, dim, k)?;
        let s = e.strength_along(&phi)?;
        let in_range = e.matrix().range_contains_sqrt(phi.as_vector(), tol)?;
        Ok(Outcome::from_bool((s > 0.0) == in_range, || {
            json!({"E": ej(&e), "phi": vj(&phi), "strength": s, "in_range": in_range})
        }))
    });

    ctx.sampled("constant-strength-means-scalar", &dims, Count::Total(100), |rng, dim, k| {
        let lambda = rng.uniform_in(0.05, 0.95);
        let scalar = k % 2 == 0;
        let e = if scalar {
            Effect::scalar(lambda, dim)?
        } else {
            let bump = random_hermitian(rng, dim, 0.02);
            Effect::clamped(&HermitianMatrix::scaled_identity(dim, lambda).add(&bump)?)?
        };
        let strengths: Vec<f64> = (0..RAYS)
            .map(|_| e.strength_along(&random_unit_vector(rng, dim)))
            .collect::<Result<_>>()?;
        let (lo, hi) = strengths.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| (lo.min(s), hi.max(s)));
        let premise = lo > 0.0 && hi - lo <= 1e-9;
        let conclusion = near(e.matrix(), &HermitianMatrix::scaled_identity(dim, lo), 1e-6)?;
        let ok = (!premise || conclusion) && premise == scalar;
        Ok(Outcome::from_bool(ok, || json!({"E": ej(&e), "min": lo, "max": hi, "scalar": scalar})))
    });

    ctx.sampled("weak-atoms-reconstruct-effect", &dims, Count::Total(200), |rng, dim, _| {
        let e = random_effect(rng, dim);
        let d = e.matrix().eig()?;
        let mut total = HermitianMatrix::zeros(dim);
        for i in 0..dim {
            total = total.add(e.weak_atom(&UnitVector::normalize(d.eigenvector(i))?)?.matrix())?;
        }
        let error = total.sub(e.matrix())?.op_norm()?;
        Ok(Outcome::from_bool(error <= EIGEN_TOL, || json!({"E": ej(&e), "error": error})))
    });
}

fn remark_order(ctx: &mut Context) {
    let dims = ctx.dims(&[3]);
    ctx.sampled("order-witness-equals-leq", &dims, Count::Total(500), |rng, dim, k| {
        let b = random_mixed_effect(rng, dim);
        let a = if k % 2 == 0 { random_effect_below(rng, &b)? } else { random_mixed_effect(rng, dim) };
        let (a, b) = if rng.coin() { (a, b) } else { (b, a) };
        let (w, l) = (order_witness(&a, &b)?, a.leq(&b)?);
        Ok(Outcome::from_bool(w == l, || json!({"A": ej(&a), "B": ej(&b), "witness": w, "leq": l})))
    });
    ctx.sampled("complement-is-supremum-of-orthogonals", &dims, Count::Total(500), |rng, dim, k| {
        let a = random_mixed_effect(rng, dim);
        let c = if k % 2 == 0 {
            random_effect_orthogonal_to(rng, &a)?
        } else {
            random_mixed_effect(rng, dim)
        };
        let orthogonal = a.orthogonal(&c)?;
        let ok = (!orthogonal || c.leq(&a.complement())?) && a.orthogonal(&a.complement())?;
        Ok(Outcome::from_bool(ok, || json!({"A": ej(&a), "C": ej(&c), "orthogonal": orthogonal})))
    });
}

/// Adds the trials of `check` to `acc`, with `verdict` selecting a direction.
fn accumulate(acc: &mut PropertyResult, check: &PreservationCheck, verdict: &Verdict) {
    acc.dims.push(check.dim);
    acc.trials += check.trials;
    acc.pass += verdict.checked - verdict.violations;
    acc.fail += verdict.violations;
    acc.inconclusive += verdict.inconclusive;
    if let Some(c) = &verdict.counterexample {
        if acc.counterexamples.len() < super::MAX_COUNTEREXAMPLES {
            acc.counterexamples.push(json!({"dim": check.dim, "counterexample": c}));
        }
    }
}

fn empty(name: String) -> PropertyResult {
    PropertyResult {
        name,
        dims: Vec::new(),
        trials: 0,
        pass: 0,
        fail: 0,
        inconclusive: 0,
        counterexamples: Vec::new(),
        witness: None,
        note: None,
        ok: false,
    }
}

/// One property per relation (order split by direction), summed over dims.
fn preservation_properties(
    ctx: &mut Context,
    label: &str,
    dims: &[usize],
    relations: &[Relation],
    make: impl Fn(usize) -> Result<EffectMap>,
) {
    if dims.is_empty() {
        return;
    }
    let per_dim = ctx.count(Count::PerDim(200), 1);
    for &relation in relations {
        let mut parts = if relation == Relation::Order {
            vec![empty(format!("{label}/order-fwd")), empty(format!("{label}/order-bwd"))]
        } else {
            vec![empty(format!("{label}/{}", relation.name()))]
        };
        for &dim in dims {
            match make(dim).and_then(|m| check_preserves(&m, relation, ctx.seed(), per_dim, dim)) {
                Ok(check) => {
                    if relation == Relation::Order {
                        accumulate(&mut parts[0], &check, &check.forward);
                        accumulate(&mut parts[1], &check, &check.backward);
                    } else {
                        accumulate(&mut parts[0], &check, &check.combined());
                    }
                }
                Err(e) => {
                    for p in &mut parts {
                        p.fail += 1;
                        p.counterexamples.push(json!({"dim": dim, "error": e.to_string()}));
                    }
                }
            }
        }
        for p in parts {
            ctx.counts(p);
        }
    }
}

/// Passes when a sampled check finds a counterexample that replays.
fn expected_violation(
    ctx: &mut Context,
    name: &str,
    dims: &[usize],
    relation: Relation,
    make: impl Fn(usize) -> Result<EffectMap>,
) {
    let per_dim = ctx.count(Count::PerDim(200), 1);
    let mut outcomes = Vec::new();
    let mut witness = None;
    for &dim in dims {
        let found = (|| {
            let map = make(dim)?;
            let check = check_preserves(&map, relation, ctx.seed(), per_dim, dim)?;
            let c = check.forward.counterexample.or(check.backward.counterexample);
            Ok::<_, crate::Error>(match c {
                Some(c) if c.replay(&map, relation)? => Some(json!({"dim": dim, "counterexample": c})),
                _ => None,
            })
        })();
        match found {
            Ok(Some(w)) => {
                witness.get_or_insert(w);
                outcomes.push(Outcome::Pass);
            }
            Ok(None) => outcomes.push(Outcome::Fail(json!({"dim": dim, "error": "no counterexample found"}))),
            Err(e) => outcomes.push(Outcome::Fail(json!({"dim": dim, "error": e.to_string()}))),
        }
    }
    if !dims.is_empty() {
        ctx.tally(name, dims, outcomes, witness, None);
    }
}

fn sampled_map_property(
    ctx: &mut Context,
    name: &str,
    dims: &[usize],
    make: impl Fn(usize) -> Result<EffectMap> + Sync,
    metric: impl Fn(&EffectMap, &Effect) -> Result<f64> + Sync,
    tol: f64,
) {
    ctx.sampled(name, dims, Count::PerDim(200), |rng, dim, _| {
        let map = make(dim)?;
        let e = random_mixed_effect(rng, dim);
        let value = metric(&map, &e)?;
        Ok(Outcome::from_bool(value <= tol, || json!({"E": ej(&e), "value": value})))
    });
}

fn spectrum_change(map: &EffectMap, e: &Effect) -> Result<f64> {
    let before = e.matrix().eigenvalues()?;
    let after = map.apply(e)?.matrix().eigenvalues()?;
    Ok(before.iter().zip(&after).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}

fn round_trip_error(map: &EffectMap, e: &Effect) -> Result<f64> {
    map.apply_inverse(&map.apply(e)?)?.matrix().sub(e.matrix())?.op_norm()
}

fn thm1_forward(ctx: &mut Context) {
    let dims = ctx.dims_at_least(&[2, 3, 4], 3, "hypothesis requires dim>=3");
    let units: Vec<(usize, CMatrix)> = dims.iter().map(|&d| (d, unitary_for(ctx, d))).collect();
    let u = |dim: usize| units.iter().find(|(d, _)| *d == dim).expect("unitary per dim").1.clone();
    preservation_properties(ctx, "unitary", &dims, &Relation::ALL, |d| EffectMap::unitary(u(d)));
    preservation_properties(ctx, "antiunitary", &dims, &Relation::ALL, |d| EffectMap::antiunitary(u(d)));
    for (label, anti) in [("unitary", false), ("antiunitary", true)] {
        let make = |d: usize| if anti { EffectMap::antiunitary(u(d)) } else { EffectMap::unitary(u(d)) };
        sampled_map_property(ctx, &format!("{label}/spectrum"), &dims, make, spectrum_change, TOL_SPECTRUM);
        sampled_map_property(ctx, &format!("{label}/inverse"), &dims, make, round_trip_error, TOL_SPECTRUM);
    }
}

fn probability_property(ctx: &mut Context, name: &str, dims: &[usize], make: impl Fn(usize) -> Result<(EffectMap, UnitVector)>) {
    let per_dim = ctx.count(Count::PerDim(200), 1);
    let mut acc = empty(name.to_string());
    let mut worst: f64 = 0.0;
    for &dim in dims {
        let verdict = make(dim).and_then(|(map, phi)| {
            let psi = map.transport_state(&phi)?;
            check_probability(&map, &phi, &psi, ctx.seed(), per_dim)
        });
        acc.dims.push(dim);
        acc.trials += per_dim;
        match verdict {
            Ok(v) => {
                worst = worst.max(v.max_deviation);
                acc.pass += v.trials - v.violations;
                acc.fail += v.violations;
                if let Some(c) = &v.counterexample {
                    acc.counterexamples.push(json!({"dim": dim, "counterexample": c}));
                }
            }
            Err(e) => {
                acc.fail += 1;
                acc.counterexamples.push(json!({"dim": dim, "error": e.to_string()}));
            }
        }
    }
    if !dims.is_empty() {
        acc.note = Some(format!("max deviation {worst:e}"));
        ctx.counts(acc);
    }
}

fn thm2_forward(ctx: &mut Context) {
    let dims = ctx.dims_at_least(&[2, 3, 4], 3, "hypothesis requires dim>=3");
    let seed = ctx.seed();
    let phi_for = |dim: usize| random_unit_vector(&mut SeededRng::for_trial(seed, "thm2-forward/phi", dim as u64), dim);
    let units: Vec<(usize, CMatrix)> = dims.iter().map(|&d| (d, unitary_for(ctx, d))).collect();
    let u = |dim: usize| units.iter().find(|(d, _)| *d == dim).expect("unitary per dim").1.clone();
    probability_property(ctx, "unitary/probability", &dims, |d| Ok((EffectMap::unitary(u(d))?, phi_for(d))));
    probability_property(ctx, "antiunitary/probability", &dims, |d| Ok((EffectMap::antiunitary(u(d))?, phi_for(d))));
}

fn thm3_forward(ctx: &mut Context) {
    let dims = ctx.dims_at_least(&[2, 3, 4], 2, "hypothesis requires dim>=2");
    let units: Vec<(usize, CMatrix)> = dims.iter().map(|&d| (d, unitary_for(ctx, d))).collect();
    let u = |dim: usize| units.iter().find(|(d, _)| *d == dim).expect("unitary per dim").1.clone();
    preservation_properties(ctx, "complement_unitary", &dims, &[Relation::Mixture], |d| {
        EffectMap::complement_unitary(u(d))
    });
    preservation_properties(ctx, "unitary", &dims, &[Relation::Mixture], |d| EffectMap::unitary(u(d)));
    expected_violation(ctx, "complement_unitary/order-reversed", &dims, Relation::Order, |d| {
        EffectMap::complement_unitary(u(d))
    });

    let solver = coexistence_config(ctx, false);
    let small: Vec<usize> = ctx.dims(&[2, 3]).into_iter().filter(|&d| d >= 2).collect();
    ctx.sampled("complement-invariance", &small, Count::Total(200), |rng, dim, k| {
        let (e, f) = match k % 3 {
            0 => (random_effect(rng, dim), random_effect(rng, dim)),
            1 => random_sharp_pair(rng, dim),
            _ => random_coexistent_pair(rng, dim),
        };
        let v = coexist_with(&e, &f, &solver)?;
        let w = coexist_with(&e.complement(), &f, &solver)?;
        Ok(match (v.decision, w.decision) {
            (Decision::Inconclusive, _) | (_, Decision::Inconclusive) => Outcome::Inconclusive,
            (a, b) => Outcome::from_bool(a == b, || {
                json!({"E": ej(&e), "F": ej(&f), "direct": verdict_json(&v), "complemented": verdict_json(&w)})
            }),
        })
    });

    let tol_mix = ctx.config.tol_mix;
    ctx.sampled("mixture-coefficient", &small, Count::Total(200), |rng, dim, k| {
        let b = random_mixed_effect(rng, dim);
        let c = random_mixed_effect(rng, dim);
        let t = rng.uniform();
        let a = Effect::clamped(&b.matrix().scale(t).add(&c.matrix().scale(1.0 - t))?)?;
        let ok = if k % 2 == 0 {
            let spread = b.matrix().sub(c.matrix())?.frobenius_norm();
            match is_mixture_with(&a, &b, &c, tol_mix)? {
                Some(fit) => spread <= tol_mix || (fit - t).abs() <= 1e-6,
                None => false,
            }
        } else {
            // move A off the segment through B and C
            let off = random_hermitian(rng, dim, 1.0);
            let d = b.matrix().sub(c.matrix())?;
            let along = off.frobenius_inner(&d)? / d.frobenius_norm().powi(2).max(1e-300);
            let normal = off.sub(&d.scale(along))?;
            let shifted = a.matrix().add(&normal.scale(1e-3 / normal.frobenius_norm().max(1e-300)))?;
            match Effect::new(shifted) {
                Ok(moved) => is_mixture_with(&moved, &b, &c, tol_mix)?.is_none(),
                Err(_) => true,
            }
        };
        Ok(Outcome::from_bool(ok, || json!({"A": ej(&a), "B": ej(&b), "C": ej(&c), "t": t})))
    });
}

fn mobius_one(dim: usize) -> Result<EffectMap> {
    EffectMap::calculus(CMatrix::identity(dim, dim), MonotoneFunction::Mobius { a: 1.0 })
}

fn patch(dim: usize) -> Result<EffectMap> {
    let e1 = Projection::rank1(&UnitVector::basis(dim, 1)).effect().clone();
    let e2 = e1.scale(0.5)?;
    EffectMap::probability_patch(UnitVector::basis(dim, 0), e1, e2)
}

/// A fixed pair whose image falsifies `relation`, per dimension.
fn fixed_witness(ctx: &mut Context, name: &str, dims: &[usize], check: impl Fn(usize) -> Result<(bool, Value)>) {
    let mut outcomes = Vec::new();
    let mut witness = None;
    for &dim in dims {
        match check(dim) {
            Ok((true, w)) => {
                witness.get_or_insert(w);
                outcomes.push(Outcome::Pass);
            }
            Ok((false, w)) => outcomes.push(Outcome::Fail(w)),
            Err(e) => outcomes.push(Outcome::Fail(json!({"dim": dim, "error": e.to_string()}))),
        }
    }
    if !dims.is_empty() {
        ctx.tally(name, dims, outcomes, witness, None);
    }
}

fn order_flip(map: &EffectMap, lower: &Effect, upper: &Effect) -> Result<(bool, Value)> {
    let (x, y) = (map.apply(lower)?, map.apply(upper)?);
    let flipped = lower.leq(upper)? && !x.leq(&y)?;
    Ok((flipped, json!({"inputs": [ej(lower), ej(upper)], "images": [ej(&x), ej(&y)]})))
}

fn gallery(ctx: &mut Context) {
    let dims = ctx.dims_at_least(&[2, 3], 2, "the patched effects need dim>=2");
    let seed = ctx.seed();

    preservation_properties(ctx, "swap01", &dims, &[Relation::Coexistence], |_| Ok(EffectMap::Swap01));
    fixed_witness(ctx, "swap01/order-witness", &dims, |dim| {
        let e = random_effect(&mut SeededRng::for_trial(seed, "gallery/swap01", dim as u64), dim);
        order_flip(&EffectMap::Swap01, &Effect::zero(dim), &e)
    });

    preservation_properties(ctx, "mobius", &dims, &[Relation::Order, Relation::Commutativity], mobius_one);
    let config = coexistence_config(ctx, true);
    fixed_witness(ctx, "mobius/coexistence-witness", &[2], |dim| {
        let ray = |v: &[f64]| -> Result<Effect> { Projection::rank1(&UnitVector::from_real(v)?).effect().scale(0.5) };
        let (e, f) = (ray(&[1.0, 0.0])?, ray(&[0.8, 0.6])?);
        let map = mobius_one(dim)?;
        let (x, y) = (map.apply(&e)?, map.apply(&f)?);
        let (before, after) = (coexist_with(&e, &f, &config)?, coexist_with(&x, &y, &config)?);
        let (sum_before, sum_after) = (e.sum(&f)?.lambda_max()?, x.sum(&y)?.lambda_max()?);
        let ok = before.is_coexistent()
            && after.decision == Decision::NotCoexistent
            && (sum_before - 0.9).abs() <= 1e-12
            && (sum_after - 1.2).abs() <= 1e-9;
        Ok((ok, json!({
            "inputs": [ej(&e), ej(&f)], "images": [ej(&x), ej(&y)],
            "lambda_max_before": sum_before, "lambda_max_after": sum_after,
            "before": verdict_json(&before), "after": verdict_json(&after),
        })))
    });

    probability_property(ctx, "patch/probability", &dims, |d| Ok((patch(d)?, UnitVector::basis(d, 0))));
    fixed_witness(ctx, "patch/order-witness", &dims, |dim| {
        let map = patch(dim)?;
        let EffectMap::ProbabilityPatch { e1, e2, .. } = &map else { unreachable!() };
        order_flip(&map, e2, e1)
    });
}

fn monotone_counts(name: &str, dims: &[usize], check: &MonotoneCheck) -> PropertyResult {
    let mut p = empty(name.to_string());
    p.dims = dims.to_vec();
    p.trials = check.trials;
    p.pass = check.trials - check.violations;
    p.fail = check.violations;
    if let Some(c) = &check.counterexample {
        p.counterexamples.push(json!({"A": c.0, "B": c.1}));
    }
    p.note = Some(format!("max violation {:e}", check.max_violation));
    p
}

fn monotone(ctx: &mut Context) {
    let dims = ctx.dims(&[2, 3, 4]);
    let trials = ctx.count(Count::Total(500), dims.len());
    let catalog = [
        MonotoneFunction::Mobius { a: 1.0 },
        MonotoneFunction::Mobius { a: 3.0 },
        MonotoneFunction::Identity,
        MonotoneFunction::Power { p: 1.0 },
        MonotoneFunction::Power { p: 0.5 },
    ];
    for f in catalog {
        match is_operator_monotone_sampled(&f, ctx.seed(), trials, &dims) {
            Ok(v) => {
                ctx.counts(monotone_counts(&f.to_string(), &dims, &v.forward));
                if let (Some(check), Some(g)) = (&v.inverse, f.inverse()) {
                    ctx.counts(monotone_counts(&format!("{f}/inverse={g}"), &dims, check));
                }
            }
            Err(e) => {
                let mut p = empty(f.to_string());
                p.fail = 1;
                p.counterexamples.push(json!({"error": e.to_string()}));
                ctx.counts(p);
            }
        }
    }
    let probe = symmetry_probe(&MonotoneFunction::Mobius { a: 1.0 });
    let witness = json!({"max_defect": probe.max_defect, "at": probe.at, "identity_holds": probe.holds});
    let ok = (probe.max_defect - 1.0 / 3.0).abs() <= SYMMETRY_TOL && (probe.at - 0.5).abs() <= 1e-12 && !probe.holds;
    ctx.single("mobius(a=1)/symmetry-probe", &[], Ok((Outcome::from_bool(ok, || witness.clone()), Some(witness))));
}

fn weyl(ctx: &mut Context) {
    let dims = ctx.dims(&[2, 3, 4, 5]);
    ctx.sampled("weyl-perturbation", &dims, Count::Total(1000), |rng, dim, k| {
        let scale = rng.uniform_in(0.1, 2.0);
        let a = random_hermitian(rng, dim, scale);
        let b = if k % 2 == 0 {
            let scale = rng.uniform_in(0.1, 2.0);
            random_hermitian(rng, dim, scale)
        } else {
            a.add(&random_hermitian(rng, dim, 1e-3))?
        };
        let (la, lb) = (descending_eigenvalues(&a)?, descending_eigenvalues(&b)?);
        let gap = la.iter().zip(&lb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let bound = a.sub(&b)?.op_norm()?;
        Ok(Outcome::from_bool(gap <= bound + WEYL_SLACK, || {
            json!({"A": hj(&a), "B": hj(&b), "gap": gap, "bound": bound})
        }))
    });

    let wide = ctx.dims(&[2, 3, 4, 5, 6]);
    ctx.sampled("eigen-reconstruction", &wide, Count::Total(200), |rng, dim, _| {
        let scale = rng.uniform_in(0.1, 3.0);
        let m = random_hermitian(rng, dim, scale);
        let d = m.eig()?;
        let scale = m.op_norm()?.max(1.0);
        let ok = d.residual(&m) <= 1e-10 * scale && d.orthonormality_defect() <= 1e-10;
        Ok(Outcome::from_bool(ok, || json!({"M": hj(&m)})))
    });

    let tol = ctx.config.tol_psd;
    ctx.sampled("psd-partial-order", &dims, Count::Total(200), |rng, dim, _| {
        let a = random_mixed_effect(rng, dim);
        let b = random_effect_below(rng, &a)?;
        let c = random_effect_below(rng, &b)?;
        let jitter = a.matrix().add(&random_hermitian(rng, dim, 1e-13))?;
        let reflexive = psd_leq(a.matrix(), a.matrix(), tol)?;
        let antisymmetric = !(psd_leq(a.matrix(), &jitter, tol)? && psd_leq(&jitter, a.matrix(), tol)?)
            || near(a.matrix(), &jitter, 10.0 * tol)?;
        let transitive = psd_leq(c.matrix(), a.matrix(), tol)?;
        // an independent check of the two premises
        let premises = cholesky_psd(&a.matrix().sub(b.matrix())?, 1e-12) && cholesky_psd(&b.matrix().sub(c.matrix())?, 1e-12);
        let ok = reflexive && antisymmetric && (!premises || transitive);
        Ok(Outcome::from_bool(ok, || json!({"A": ej(&a), "B": ej(&b), "C": ej(&c)})))
    });
}
