//! JSON problem description and its conversion into library objects.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sturm_core::boundary::LinePair;
use sturm_core::expr::{Definitions, Expression, Var, Vars};
use sturm_core::field::{Field, Source};
use sturm_core::fucik::Rect;
use sturm_core::hamiltonian::{AngularProfile, AsymmetricParams, HomogeneousHamiltonian};
use sturm_core::landesman::{LLParams, ScalarLimits};
use sturm_core::shooting::SolveOptions;

use crate::CliError;

const ALL_VARS: [Var; 4] = [Var::T, Var::X, Var::Y, Var::Theta];

/// A number, or a constant expression such as `"pi/2"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Number {
    Value(f64),
    Expr(String),
}

impl Number {
    pub fn value(&self, defs: &Definitions) -> Result<f64, CliError> {
        match self {
            Number::Value(v) => Ok(*v),
            Number::Expr(s) => {
                let e = Expression::parse_with(s, &[], defs).map_err(|e| CliError::Config(format!("`{s}`: {e}")))?;
                e.eval_finite(&Vars::at(0.0, [0.0, 0.0]))
                    .map_err(|e| CliError::Config(e.to_string()))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoundarySpec {
    Preset(String),
    Lines(LineAngles),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineAngles {
    #[serde(rename = "zeta_S")]
    pub zeta_s: Number,
    #[serde(rename = "zeta_A")]
    pub zeta_a: Number,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HamiltonianSpec {
    Asymmetric(AsymmetricSpec),
    Harmonic(HarmonicSpec),
    Profile(ProfileSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymmetricSpec {
    pub mu: Number,
    pub nu: Number,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicSpec {
    pub harmonic: Number,
}

/// `v(θ)` as an expression in `theta`, optionally with `v'(θ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub profile: String,
    #[serde(default)]
    pub dprofile: Option<String>,
    #[serde(default)]
    pub kinks: Vec<Number>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum FieldSpec {
    Scalar {
        f: String,
    },
    Interpolated {
        gamma: String,
        #[serde(default)]
        p: Option<[String; 2]>,
    },
    Raw {
        g: [String; 2],
    },
}

/// Limits at `x → ±∞`; `plus`/`minus` when the limit exists, otherwise the
/// `_lo`/`_hi` pair.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsSpec {
    pub plus: Option<String>,
    pub minus: Option<String>,
    pub plus_lo: Option<String>,
    pub plus_hi: Option<String>,
    pub minus_lo: Option<String>,
    pub minus_hi: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LLSpec {
    /// Limits of `f − μ₁x⁺ + ν₁x⁻` at the lower corner.
    pub lower: Option<LimitsSpec>,
    /// Limits of `f − μ₂x⁺ + ν₂x⁻` at the upper corner.
    pub upper: Option<LimitsSpec>,
    pub planar: Option<LLParams>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectSpec {
    pub mu1: Number,
    pub nu1: Number,
    pub mu2: Number,
    pub nu2: Number,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(rename = "T")]
    pub t: Option<Number>,
    pub boundary: Option<BoundarySpec>,
    #[serde(rename = "V1")]
    pub v1: Option<HamiltonianSpec>,
    #[serde(rename = "V2")]
    pub v2: Option<HamiltonianSpec>,
    pub field: Option<FieldSpec>,
    /// Named sub-expressions usable in every other expression.
    #[serde(default)]
    pub defs: BTreeMap<String, String>,
    pub ll: Option<LLSpec>,
    pub solver: Option<SolveOptions>,
    pub rectangle: Option<RectSpec>,
    pub jmax: Option<usize>,
    /// Upper end of the `[0, window]²` spectrum plot.
    pub window: Option<Number>,
}

impl ProblemConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Parse `defs`, letting definitions refer to each other in any order.
    pub fn definitions(&self) -> Result<Definitions, CliError> {
        let mut defs = Definitions::new();
        let mut pending: Vec<(&String, &String)> = self.defs.iter().collect();
        while !pending.is_empty() {
            let before = pending.len();
            let mut last_err = None;
            pending.retain(|(name, src)| match Expression::parse_with(src, &ALL_VARS, &defs) {
                Ok(e) => {
                    defs.insert((*name).clone(), e);
                    false
                }
                Err(e) => {
                    last_err = Some(format!("definition `{name}`: {e}"));
                    true
                }
            });
            if pending.len() == before {
                return Err(CliError::Config(last_err.unwrap_or_default()));
            }
        }
        Ok(defs)
    }

    pub fn horizon(&self, defs: &Definitions) -> Result<f64, CliError> {
        let t = self
            .t
            .as_ref()
            .ok_or_else(|| CliError::Config("missing `T`".into()))?
            .value(defs)?;
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Config(format!("`T` must be positive (got {t})")));
        }
        Ok(t)
    }

    pub fn line_pair(&self, defs: &Definitions) -> Result<LinePair<f64>, CliError> {
        match &self.boundary {
            None => Err(CliError::Config("missing `boundary`".into())),
            Some(BoundarySpec::Preset(name)) => {
                LinePair::preset(name).ok_or_else(|| CliError::Config(format!("unknown boundary preset `{name}`")))
            }
            Some(BoundarySpec::Lines(l)) => Ok(LinePair::new(l.zeta_s.value(defs)?, l.zeta_a.value(defs)?)?),
        }
    }

    pub fn hamiltonians(
        &self,
        defs: &Definitions,
    ) -> Result<(HomogeneousHamiltonian<f64>, HomogeneousHamiltonian<f64>), CliError> {
        let get = |spec: &Option<HamiltonianSpec>, name: &str| {
            spec.as_ref()
                .ok_or_else(|| CliError::Config(format!("missing `{name}`")))
                .and_then(|s| hamiltonian(s, defs))
        };
        Ok((get(&self.v1, "V1")?, get(&self.v2, "V2")?))
    }

    /// The field; interpolated fields need `V1` and `V2`.
    pub fn field(&self, defs: &Definitions) -> Result<Field<f64>, CliError> {
        let spec = self
            .field
            .as_ref()
            .ok_or_else(|| CliError::Config("missing `field`".into()))?;
        let src = |s: &str| -> Result<Source<f64>, CliError> {
            let e = Expression::parse_with(s, &ALL_VARS, defs).map_err(|e| CliError::Config(format!("`{s}`: {e}")))?;
            Ok(e.into())
        };
        Ok(match spec {
            FieldSpec::Scalar { f } => Field::scalar(src(f)?),
            FieldSpec::Raw { g } => Field::raw([src(&g[0])?, src(&g[1])?]),
            FieldSpec::Interpolated { gamma, p } => {
                let (h1, h2) = self.hamiltonians(defs)?;
                let p = match p {
                    Some([a, b]) => Some([src(a)?, src(b)?]),
                    None => None,
                };
                Field::interpolated(h1, h2, src(gamma)?, p)
            }
        })
    }

    /// The scalar nonlinearity `f(t, x)` of a scalar field.
    pub fn scalar_source(&self, defs: &Definitions) -> Option<Result<Source<f64>, CliError>> {
        match &self.field {
            Some(FieldSpec::Scalar { f }) => Some(
                Expression::parse_with(f, &[Var::T, Var::X, Var::Y], defs)
                    .map(Source::from)
                    .map_err(|e| CliError::Config(format!("`{f}`: {e}"))),
            ),
            _ => None,
        }
    }

    pub fn rect(&self, defs: &Definitions) -> Result<Option<Rect<f64>>, CliError> {
        match &self.rectangle {
            None => Ok(None),
            Some(r) => Ok(Some(Rect::new(
                r.mu1.value(defs)?,
                r.nu1.value(defs)?,
                r.mu2.value(defs)?,
                r.nu2.value(defs)?,
            )?)),
        }
    }

    pub fn solve_options(&self, tol: Option<f64>) -> SolveOptions {
        let mut o = self.solver.unwrap_or_default();
        if let Some(t) = tol {
            o.tol = t;
        }
        o
    }
}

fn hamiltonian(spec: &HamiltonianSpec, defs: &Definitions) -> Result<HomogeneousHamiltonian<f64>, CliError> {
    Ok(match spec {
        HamiltonianSpec::Asymmetric(a) => {
            HomogeneousHamiltonian::asymmetric(AsymmetricParams::new(a.mu.value(defs)?, a.nu.value(defs)?)?)
        }
        HamiltonianSpec::Harmonic(h) => HomogeneousHamiltonian::harmonic(h.harmonic.value(defs)?)?,
        HamiltonianSpec::Profile(p) => {
            let parse = |s: &str| {
                Expression::parse_with(s, &[Var::Theta], defs).map_err(|e| CliError::Config(format!("`{s}`: {e}")))
            };
            let dv = p.dprofile.as_deref().map(parse).transpose()?;
            let kinks = p.kinks.iter().map(|k| k.value(defs)).collect::<Result<Vec<_>, _>>()?;
            HomogeneousHamiltonian::new(
                AngularProfile::from_expression(parse(&p.profile)?, dv, kinks)?,
                p.profile.clone(),
            )
        }
    })
}

impl LimitsSpec {
    /// Build limits; `None` when nothing was supplied.
    pub fn build(&self, defs: &Definitions) -> Result<Option<ScalarLimits<f64>>, CliError> {
        let src = |s: &Option<String>| -> Result<Option<Source<f64>>, CliError> {
            s.as_deref()
                .map(|s| {
                    Expression::parse_with(s, &[Var::T], defs)
                        .map(Source::from)
                        .map_err(|e| CliError::Config(format!("`{s}`: {e}")))
                })
                .transpose()
        };
        let pick = |exact: &Option<String>, lo: &Option<String>, hi: &Option<String>, side: &str| match (
            src(exact)?,
            src(lo)?,
            src(hi)?,
        ) {
            (Some(e), None, None) => Ok(Some((e.clone(), e))),
            (None, Some(l), Some(h)) => Ok(Some((l, h))),
            (None, None, None) => Ok(None),
            _ => Err(CliError::Config(format!(
                "limits: give either `{side}` or both `{side}_lo` and `{side}_hi`"
            ))),
        };
        let plus = pick(&self.plus, &self.plus_lo, &self.plus_hi, "plus")?;
        let minus = pick(&self.minus, &self.minus_lo, &self.minus_hi, "minus")?;
        match (plus, minus) {
            (None, None) => Ok(None),
            (Some((plus_lo, plus_hi)), Some((minus_lo, minus_hi))) => Ok(Some(ScalarLimits {
                plus_lo,
                plus_hi,
                minus_lo,
                minus_hi,
                margin: 0.0,
            })),
            _ => Err(CliError::Config(
                "limits need both the `plus` and the `minus` side".into(),
            )),
        }
    }
}
