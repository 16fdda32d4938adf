//! Structured results of the theorem checks.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::extgrid::{ext_f64, ExtReal, Grid1D, GridFn};
use crate::gamma::GammaParams;

/// A failed hypothesis. Distinct from a refuted conclusion: the check could
/// not be applied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnosis {
    DomLimsupEmpty,
    Diverging,
    NotEquicoercive,
    NoBoundedDualSequence,
    ImproperMember(usize),
    NotConvex,
    OutsideDualDomain,
    NotOnGraph,
}

impl fmt::Display for Diagnosis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnosis::DomLimsupEmpty => f.write_str("dom Γ-limsup empty"),
            Diagnosis::Diverging => f.write_str("diverging"),
            Diagnosis::NotEquicoercive => f.write_str("conjugates not equicoercive"),
            Diagnosis::NoBoundedDualSequence => {
                f.write_str("no bounded dual sequence with values bounded above")
            }
            Diagnosis::ImproperMember(n) => write!(f, "member {n} is improper"),
            Diagnosis::NotConvex => f.write_str("input not convex"),
            Diagnosis::OutsideDualDomain => f.write_str("slope outside the conjugate's domain"),
            Diagnosis::NotOnGraph => f.write_str("pair not on the subdifferential graph"),
        }
    }
}

impl Serialize for Diagnosis {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Truncation settings a verdict was computed under.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncationParams {
    pub horizon: usize,
    pub tail_start: usize,
    pub eps_schedule: Vec<f64>,
    pub grid: Grid1D,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope_grid: Option<Grid1D>,
    /// Discretization allowance added to the caller's tolerance.
    pub allowance: f64,
    pub tol: f64,
}

impl TruncationParams {
    pub fn new(p: &GammaParams, grid: Grid1D, slope_grid: Option<Grid1D>, tol: f64) -> Self {
        TruncationParams {
            horizon: p.horizon(),
            tail_start: p.tail_start(),
            eps_schedule: p.eps_schedule().to_vec(),
            grid,
            slope_grid,
            allowance: 0.0,
            tol,
        }
    }
}

/// One measured residual against its threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residual {
    pub name: String,
    #[serde(serialize_with = "ext_f64::serialize")]
    pub value: f64,
    pub argmax: Option<f64>,
    #[serde(serialize_with = "ext_f64::serialize")]
    pub threshold: f64,
    pub pass: bool,
}

impl Residual {
    pub fn new(name: impl Into<String>, (value, argmax): (f64, Option<f64>), threshold: f64) -> Self {
        Residual {
            name: name.into(),
            value,
            argmax,
            threshold,
            pass: value <= threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub check: String,
    pub outcome: bool,
    #[serde(serialize_with = "ext_f64::serialize")]
    pub residual_max: f64,
    pub residual_argmax: Option<f64>,
    pub diagnostics: Vec<String>,
    pub hypotheses: Vec<Diagnosis>,
    pub truncation_params: TruncationParams,
    pub residuals: Vec<Residual>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub parts: Vec<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<serde_json::Value>,
}

impl Verdict {
    /// Outcome is the conjunction of the residual passes; `residual_max` is
    /// the largest residual relative to its threshold.
    pub fn from_residuals(
        check: impl Into<String>,
        residuals: Vec<Residual>,
        truncation_params: TruncationParams,
    ) -> Self {
        let outcome = residuals.iter().all(|r| r.pass);
        let worst = residuals
            .iter()
            .max_by(|a, b| (a.value - a.threshold).total_cmp(&(b.value - b.threshold)));
        Verdict {
            check: check.into(),
            outcome,
            residual_max: worst.map_or(0.0, |r| r.value),
            residual_argmax: worst.and_then(|r| r.argmax),
            diagnostics: Vec::new(),
            hypotheses: Vec::new(),
            truncation_params,
            residuals,
            parts: Vec::new(),
            witness: None,
        }
    }

    /// A check that could not run because a hypothesis failed.
    pub fn hypothesis_failure(
        check: impl Into<String>,
        diagnoses: Vec<Diagnosis>,
        truncation_params: TruncationParams,
    ) -> Self {
        Verdict {
            check: check.into(),
            outcome: false,
            residual_max: f64::INFINITY,
            residual_argmax: None,
            diagnostics: diagnoses.iter().map(|d| d.to_string()).collect(),
            hypotheses: diagnoses,
            truncation_params,
            residuals: Vec::new(),
            parts: Vec::new(),
            witness: None,
        }
    }

    pub fn is_hypothesis_failure(&self) -> bool {
        !self.hypotheses.is_empty()
    }

    pub fn has_diagnosis(&self, d: &Diagnosis) -> bool {
        self.hypotheses.contains(d) || self.parts.iter().any(|p| p.has_diagnosis(d))
    }

    pub fn residual(&self, name: &str) -> Option<&Residual> {
        self.residuals.iter().find(|r| r.name == name)
    }

    pub fn part(&self, check: &str) -> Option<&Verdict> {
        self.parts.iter().find(|p| p.check == check)
    }

    pub fn note(&mut self, msg: impl Into<String>) {
        self.diagnostics.push(msg.into());
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("verdicts always serialize")
    }
}

/// Largest `|a - b|` over masked grid points, with the point where it occurs.
/// Equal infinities count as zero distance.
pub fn masked_distance(a: &GridFn, b: &GridFn, mask: &[bool]) -> (f64, Option<f64>) {
    debug_assert_eq!(a.grid(), b.grid());
    let mut worst = (0.0, None);
    for (i, (x, (va, vb))) in a
        .grid()
        .points()
        .zip(a.values().iter().zip(b.values()))
        .enumerate()
    {
        if !mask[i] {
            continue;
        }
        let d = va.distance(*vb);
        if d > worst.0 || worst.1.is_none() {
            worst = (d, Some(x));
        }
    }
    worst
}

/// Largest excess `a - b` (positive part) over masked points.
pub fn masked_excess(a: &GridFn, b: &GridFn, mask: &[bool]) -> (f64, Option<f64>) {
    let mut worst = (0.0, None);
    for (i, (x, (va, vb))) in a
        .grid()
        .points()
        .zip(a.values().iter().zip(b.values()))
        .enumerate()
    {
        if !mask[i] {
            continue;
        }
        let d = match (va, vb) {
            (ExtReal::Finite(p), ExtReal::Finite(q)) => (p - q).max(0.0),
            _ if va <= vb => 0.0,
            _ => f64::INFINITY,
        };
        if d > worst.0 || worst.1.is_none() {
            worst = (d, Some(x));
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_treats_equal_infinities_as_agreeing() {
        let g = Grid1D::symmetric(1.0, 3).unwrap();
        let a = GridFn::new(g, vec![ExtReal::PosInf, 1.0.into(), 2.0.into()]).unwrap();
        let b = GridFn::new(g, vec![ExtReal::PosInf, 1.5.into(), 2.0.into()]).unwrap();
        assert_eq!(masked_distance(&a, &b, &[true; 3]), (0.5, Some(0.0)));
        assert_eq!(masked_distance(&a, &b, &[true, false, true]).0, 0.0);
        assert_eq!(masked_excess(&b, &a, &[true; 3]).0, 0.5);
        assert_eq!(masked_excess(&a, &b, &[true; 3]).0, 0.0);
    }

    #[test]
    fn diagnosis_text() {
        assert_eq!(Diagnosis::DomLimsupEmpty.to_string(), "dom Γ-limsup empty");
        assert_eq!(
            serde_json::to_string(&Diagnosis::Diverging).unwrap(),
            "\"diverging\""
        );
    }
}
