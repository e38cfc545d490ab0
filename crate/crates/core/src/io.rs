//! JSON file formats for matrices, vectors, effects, verdicts and maps.
//!
//! Matrices are `{"dim": n, "re": [[..]], "im": [[..]]}` with an optional
//! `"kind"` of `"effect"` or `"projection"`; vectors are
//! `{"dim": n, "re": [..], "im": [..]}`. Loaders symmetrize and validate.

use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::coexistence::CoexistenceVerdict;
use crate::effect::{Effect, Projection};
use crate::error::{Error, Result};
use crate::function::MonotoneFunction;
use crate::hermitian::{CMatrix, CVector, HermitianMatrix, C64};
use crate::maps::EffectMap;
use crate::vector::UnitVector;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
}

impl MatrixJson {
    pub fn from_complex(m: &CMatrix) -> Self {
        let n = m.nrows();
        Self {
            dim: n,
            re: (0..n).map(|i| (0..m.ncols()).map(|j| m[(i, j)].re).collect()).collect(),
            im: (0..n).map(|i| (0..m.ncols()).map(|j| m[(i, j)].im).collect()).collect(),
            kind: None,
        }
    }

    pub fn from_hermitian(m: &HermitianMatrix) -> Self {
        Self::from_complex(m.as_matrix())
    }

    pub fn from_effect(e: &Effect) -> Self {
        Self {
            kind: Some("effect".into()),
            ..Self::from_hermitian(e.matrix())
        }
    }

    pub fn from_projection(p: &Projection) -> Self {
        Self {
            kind: Some("projection".into()),
            ..Self::from_hermitian(p.matrix())
        }
    }

    /// The raw square complex matrix, after shape checks.
    pub fn to_complex(&self) -> Result<CMatrix> {
        let n = self.dim;
        if n == 0 {
            return Err(Error::Parse("matrix dim must be at least 1".into()));
        }
        let rows_ok = |rows: &Vec<Vec<f64>>| rows.len() == n && rows.iter().all(|r| r.len() == n);
        if !rows_ok(&self.re) || !rows_ok(&self.im) {
            return Err(Error::Parse(format!("matrix entries must be {n}x{n} in both re and im")));
        }
        let m = CMatrix::from_fn(n, n, |i, j| C64::new(self.re[i][j], self.im[i][j]));
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Parse("matrix entries must be finite".into()));
        }
        Ok(m)
    }

    pub fn to_hermitian(&self) -> Result<HermitianMatrix> {
        HermitianMatrix::new(self.to_complex()?)
    }

    pub fn to_effect(&self) -> Result<Effect> {
        Effect::new(self.to_hermitian()?)
    }

    pub fn to_projection(&self) -> Result<Projection> {
        Projection::new(self.to_hermitian()?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VectorJson {
    pub dim: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl VectorJson {
    pub fn from_vector(v: &CVector) -> Self {
        Self {
            dim: v.len(),
            re: v.iter().map(|z| z.re).collect(),
            im: v.iter().map(|z| z.im).collect(),
        }
    }

    pub fn from_unit(v: &UnitVector) -> Self {
        Self::from_vector(v.as_vector())
    }

    /// Normalizes the input; only the zero vector is rejected.
    pub fn to_unit(&self) -> Result<UnitVector> {
        if self.dim == 0 || self.re.len() != self.dim || self.im.len() != self.dim {
            return Err(Error::Parse(format!("vector must have {} re and im entries", self.dim)));
        }
        let v = CVector::from_fn(self.dim, |i, _| C64::new(self.re[i], self.im[i]));
        UnitVector::normalize(v)
    }
}

/// Either kind of JSON payload a `check` input file may hold.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum Payload {
    Matrix(MatrixJson),
    Vector(VectorJson),
}

impl Payload {
    /// Distinguishes the two shapes by whether `re` holds rows.
    pub fn parse(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)?;
        let nested = value
            .get("re")
            .and_then(Value::as_array)
            .and_then(|rows| rows.first())
            .is_some_and(Value::is_array);
        if nested {
            Ok(Self::Matrix(serde_json::from_value(value)?))
        } else {
            Ok(Self::Vector(serde_json::from_value(value)?))
        }
    }
}

pub fn read_payload(path: impl AsRef<FsPath>) -> Result<Payload> {
    Payload::parse(&std::fs::read_to_string(path)?)
}

pub fn read_matrix(path: impl AsRef<FsPath>) -> Result<MatrixJson> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

pub fn read_vector(path: impl AsRef<FsPath>) -> Result<VectorJson> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

pub fn verdict_json(v: &CoexistenceVerdict) -> Value {
    json!({
        "decision": v.decision,
        "margin": v.margin,
        "path": v.path,
        "witness": v.witness.as_ref().map(MatrixJson::from_effect),
        "iterations": v.iterations,
    })
}

/// Wire form of an [`EffectMap`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapJson {
    pub tag: String,
    #[serde(rename = "U", default, skip_serializing_if = "Option::is_none")]
    pub u: Option<MatrixJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<MonotoneFunction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<VectorJson>,
    #[serde(rename = "E1", default, skip_serializing_if = "Option::is_none")]
    pub e1: Option<MatrixJson>,
    #[serde(rename = "E2", default, skip_serializing_if = "Option::is_none")]
    pub e2: Option<MatrixJson>,
    /// Only meaningful for `swap01`, which has no intrinsic dimension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
}

impl MapJson {
    pub fn from_map(map: &EffectMap) -> Self {
        let mut out = Self {
            tag: map.tag().to_string(),
            u: None,
            f: None,
            phi: None,
            e1: None,
            e2: None,
            dim: None,
        };
        match map {
            EffectMap::Unitary { u } | EffectMap::Antiunitary { u } | EffectMap::ComplementUnitary { u } => {
                out.u = Some(MatrixJson::from_complex(u));
            }
            EffectMap::Calculus { u, f } => {
                out.u = Some(MatrixJson::from_complex(u));
                out.f = Some(*f);
            }
            EffectMap::Swap01 => {}
            EffectMap::ProbabilityPatch { phi, e1, e2 } => {
                out.phi = Some(VectorJson::from_unit(phi));
                out.e1 = Some(MatrixJson::from_effect(e1));
                out.e2 = Some(MatrixJson::from_effect(e2));
            }
        }
        out
    }

    pub fn to_map(&self) -> Result<EffectMap> {
        let missing = |field: &str| Error::Parse(format!("map tag {:?} requires field {field:?}", self.tag));
        let u = || -> Result<CMatrix> { self.u.as_ref().ok_or_else(|| missing("U"))?.to_complex() };
        match self.tag.as_str() {
            "unitary" => EffectMap::unitary(u()?),
            "antiunitary" => EffectMap::antiunitary(u()?),
            "complement_unitary" => EffectMap::complement_unitary(u()?),
            "calculus" => EffectMap::calculus(u()?, self.f.ok_or_else(|| missing("f"))?),
            "swap01" => Ok(EffectMap::Swap01),
            "probability_patch" => EffectMap::probability_patch(
                self.phi.as_ref().ok_or_else(|| missing("phi"))?.to_unit()?,
                self.e1.as_ref().ok_or_else(|| missing("E1"))?.to_effect()?,
                self.e2.as_ref().ok_or_else(|| missing("E2"))?.to_effect()?,
            ),
            other => Err(Error::Parse(format!("unknown map tag {other:?}"))),
        }
    }
}

pub fn read_map(path: impl AsRef<FsPath>) -> Result<(EffectMap, Option<usize>)> {
    let wire: MapJson = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    Ok((wire.to_map()?, wire.dim))
}
