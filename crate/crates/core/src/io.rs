//! JSON input documents shared by the library tests and the command-line
//! tool: product-space descriptions, functions given as explicit tables or
//! multilinear polynomials, U-statistic parameters, and declared
//! smooth-norm records.
//!
//! Every parse or shape error surfaces as [`Error::InvalidInput`] so the
//! front-end can map it to a usage failure uniformly.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::smooth::{LsiVariant, NormValue, SmoothNorms};
use crate::space::{
    build_space, eval_polynomial, rademacher_space, FiniteDistribution, FunctionTable,
    MultilinearPolynomial, SpaceRef,
};

fn invalid(reason: impl Into<String>) -> Error {
    Error::InvalidInput {
        reason: reason.into(),
    }
}

/// One coordinate distribution: outcome values plus optional probabilities
/// (uniform over the support when omitted).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoordSpec {
    pub support: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<Vec<f64>>,
}

impl CoordSpec {
    fn build(&self) -> Result<FiniteDistribution> {
        let probs = match &self.probs {
            Some(p) => p.clone(),
            None => {
                if self.support.is_empty() {
                    return Err(invalid("coordinate support must not be empty"));
                }
                vec![1.0 / self.support.len() as f64; self.support.len()]
            }
        };
        FiniteDistribution::new(self.support.clone(), probs)
    }
}

/// A product space: either explicit `coords`, or the `rademacher`
/// shorthand for that many independent fair signs.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<CoordSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rademacher: Option<usize>,
}

impl SpaceSpec {
    pub fn build(&self) -> Result<SpaceRef> {
        match (&self.coords, self.rademacher) {
            (Some(coords), None) => {
                let dists = coords
                    .iter()
                    .map(CoordSpec::build)
                    .collect::<Result<Vec<_>>>()?;
                build_space(dists)
            }
            (None, Some(n)) => rademacher_space(n),
            _ => Err(invalid(
                "space needs exactly one of `coords` or `rademacher`",
            )),
        }
    }
}

/// One monomial `a * prod_{i in I} x_i` with 1-based coordinate indices.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    #[serde(rename = "I")]
    pub indices: Vec<usize>,
    pub a: f64,
}

/// A multilinear polynomial in `n` variables.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolySpec {
    pub n: usize,
    pub terms: Vec<TermSpec>,
}

impl PolySpec {
    /// Repeated index sets overwrite earlier coefficients.
    pub fn build(&self) -> Result<MultilinearPolynomial> {
        let mut p = MultilinearPolynomial::new(self.n);
        for term in &self.terms {
            p.set_coeff(&term.indices, term.a)?;
        }
        Ok(p)
    }
}

/// A function on the document's space: either an explicit value `table`
/// in enumeration order (coordinate 1 varies fastest) or a `poly`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poly: Option<PolySpec>,
}

impl FunctionSpec {
    pub fn build(&self, space: &SpaceRef) -> Result<FunctionTable> {
        match (&self.table, &self.poly) {
            (Some(values), None) => FunctionTable::from_values(Arc::clone(space), values.clone()),
            (None, Some(poly)) => eval_polynomial(space, &poly.build()?),
            _ => Err(invalid("function needs exactly one of `table` or `poly`")),
        }
    }
}

/// U-statistic parameters: sample size `n` and the declared sup bound of
/// the kernel.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UStatSpec {
    pub n: usize,
    pub bound: f64,
}

/// Top-level input document for the discrete commands.
///
/// `function` names the primary function; `functions` supplies a family
/// (for sup-class certificates); `ustat` marks the function as a kernel
/// and gives the sample-size parameters.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<SpaceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<FunctionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub functions: Option<Vec<FunctionSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ustat: Option<UStatSpec>,
}

impl InputDoc {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| invalid(format!("input document: {e}")))
    }

    pub fn space(&self) -> Result<SpaceRef> {
        self.space
            .as_ref()
            .ok_or_else(|| invalid("input document has no `space`"))?
            .build()
    }

    /// The primary function, evaluated on the document's space.
    pub fn function(&self) -> Result<FunctionTable> {
        let spec = self
            .function
            .as_ref()
            .ok_or_else(|| invalid("input document has no `function`"))?;
        spec.build(&self.space()?)
    }

    /// The family for sup-class statements: `functions` if present,
    /// otherwise the single `function`.
    pub fn function_list(&self) -> Result<Vec<FunctionTable>> {
        let space = self.space()?;
        if let Some(specs) = &self.functions {
            if specs.is_empty() {
                return Err(invalid("`functions` must not be empty"));
            }
            return specs.iter().map(|s| s.build(&space)).collect();
        }
        Ok(vec![self.function()?])
    }

    /// The polynomial form of the primary function, when it was given as
    /// one (needed for Gaussian sampling and derivative tensors).
    pub fn polynomial(&self) -> Result<MultilinearPolynomial> {
        self.function
            .as_ref()
            .and_then(|f| f.poly.as_ref())
            .ok_or_else(|| invalid("this command needs the function as a `poly`"))?
            .build()
    }
}

fn default_sigma2() -> f64 {
    1.0
}

fn default_variant() -> LsiVariant {
    LsiVariant::OpConditions
}

/// Input for `smooth-certify`: either a polynomial (norms computed under
/// the standard Gaussian) or declared norm values
/// `{"op2": [...], "op_inf": ..., "hs2": ...}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poly: Option<PolySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub op2: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub op_inf: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hs2: Option<f64>,
    /// Log-Sobolev constant of the measure; 1 for the standard Gaussian.
    #[serde(default = "default_sigma2")]
    pub sigma2: f64,
    #[serde(default = "default_variant")]
    pub variant: LsiVariant,
    /// When set, certify for the uniform measure on the sphere in R^n
    /// instead of a log-Sobolev measure.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sphere: Option<usize>,
}

impl SmoothDoc {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| invalid(format!("smooth document: {e}")))
    }

    pub fn has_poly(&self) -> bool {
        self.poly.is_some()
    }

    /// Norm record of order `d`, either declared or estimated under the
    /// standard Gaussian from the polynomial.
    pub fn norms(&self, d: usize, n_samples: u64, seed: u64) -> Result<SmoothNorms> {
        match (&self.poly, &self.op2) {
            (Some(poly), None) => {
                let p = poly.build()?;
                crate::smooth::gaussian_smooth_norms(&p, d, n_samples, seed)
            }
            (None, Some(op2)) => {
                if op2.len() + 1 != d {
                    return Err(invalid(format!(
                        "`op2` lists {} values, so the order must be {}, not {d}",
                        op2.len(),
                        op2.len() + 1
                    )));
                }
                let op2 = op2
                    .iter()
                    .map(|&v| NormValue::declared(v))
                    .collect::<Result<Vec<_>>>()?;
                let op_inf = self.op_inf.map(NormValue::declared).transpose()?;
                let hs2 = self.hs2.map(NormValue::declared).transpose()?;
                SmoothNorms::new(d, op2, op_inf, hs2)
            }
            _ => Err(invalid(
                "smooth document needs exactly one of `poly` or `op2`",
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smooth::Provenance;

    #[test]
    fn rademacher_shorthand_builds_the_sign_space() {
        let doc = InputDoc::parse(
            r#"{"space": {"rademacher": 2},
                "function": {"poly": {"n": 2, "terms": [{"I": [1, 2], "a": 1.0}]}}}"#,
        )
        .unwrap();
        let f = doc.function().unwrap();
        assert_eq!(f.space().n_outcomes(), 4);
        assert_eq!(f.values(), &[1.0, -1.0, -1.0, 1.0]);
    }

    #[test]
    fn explicit_coordinates_and_table() {
        let doc = InputDoc::parse(
            r#"{"space": {"coords": [
                  {"support": [0.0, 1.0], "probs": [0.75, 0.25]},
                  {"support": [-1.0, 0.0, 1.0]}
                ]},
                "function": {"table": [0, 1, 2, 3, 4, 5]}}"#,
        )
        .unwrap();
        let f = doc.function().unwrap();
        assert_eq!(f.space().n_coords(), 2);
        assert_eq!(f.values()[5], 5.0);
        // Second coordinate defaulted to uniform thirds.
        assert!((f.space().coord(2).probs()[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn malformed_documents_are_usage_errors() {
        for text in [
            "{",
            r#"{"space": {}}"#,
            r#"{"space": {"rademacher": 2, "coords": []}}"#,
            r#"{"space": {"rademacher": 2}, "function": {}}"#,
            r#"{"space": {"rademacher": 2}, "function": {"table": [0,0,0,0], "poly": {"n": 2, "terms": []}}}"#,
            r#"{"unknown_key": 1}"#,
        ] {
            let outcome = InputDoc::parse(text).and_then(|doc| doc.function().map(|_| ()));
            assert!(
                matches!(outcome, Err(Error::InvalidInput { .. })),
                "expected InvalidInput for {text}"
            );
        }
    }

    #[test]
    fn function_list_falls_back_to_the_single_function() {
        let doc = InputDoc::parse(
            r#"{"space": {"rademacher": 1}, "function": {"table": [0.0, 1.0]}}"#,
        )
        .unwrap();
        assert_eq!(doc.function_list().unwrap().len(), 1);
        let family = InputDoc::parse(
            r#"{"space": {"rademacher": 1},
                "functions": [{"table": [0.0, 1.0]}, {"table": [1.0, 0.0]}]}"#,
        )
        .unwrap();
        assert_eq!(family.function_list().unwrap().len(), 2);
    }

    #[test]
    fn smooth_document_with_declared_norms() {
        let doc = SmoothDoc::parse(r#"{"op2": [0.5], "op_inf": 1.0, "hs2": 0.9}"#).unwrap();
        let norms = doc.norms(2, 1_000, 0).unwrap();
        assert_eq!(norms.order, 2);
        assert_eq!(norms.op2[0].value, 0.5);
        assert_eq!(norms.op2[0].provenance, Provenance::Declared);
        assert_eq!(doc.sigma2, 1.0);
        assert!(doc.norms(3, 1_000, 0).is_err());
    }

    #[test]
    fn smooth_document_with_a_polynomial() {
        let doc = SmoothDoc::parse(
            r#"{"poly": {"n": 2, "terms": [{"I": [1, 2], "a": 1.0}]}, "sigma2": 2.0}"#,
        )
        .unwrap();
        let norms = doc.norms(2, 1_000, 5).unwrap();
        assert_eq!(norms.op2.len(), 1);
        assert_eq!(norms.op_inf.unwrap().value, 1.0);
        assert_eq!(doc.sigma2, 2.0);
        let neither = SmoothDoc::parse(r#"{"sigma2": 1.0}"#).unwrap();
        assert!(neither.norms(2, 1_000, 0).is_err());
    }

    #[test]
    fn ustat_parameters_parse() {
        let doc = InputDoc::parse(
            r#"{"space": {"rademacher": 2},
                "function": {"poly": {"n": 2, "terms": [{"I": [1, 2], "a": 1.0}]}},
                "ustat": {"n": 6, "bound": 1.0}}"#,
        )
        .unwrap();
        let u = doc.ustat.unwrap();
        assert_eq!(u.n, 6);
        assert_eq!(u.bound, 1.0);
    }
}
