//! JSON instance/result documents and CSV exports.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::certify::{Certificate, CertificateKind, Verdict};
use crate::error::{Error, Result};
use crate::problem::{AnchorSet, ProblemInstance, Tolerances, Vector};
use crate::sets::ConstraintSet;
use crate::stability::StabilityReport;
use crate::weiszfeld::{SolveResult, TraceRecord};

/// On-disk description of a problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDocument {
    pub dim: usize,
    pub anchors: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub constraint: ConstraintDocument,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
    /// Run the solver even when the anchors are collinear.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub allow_collinear: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ConstraintDocument {
    Free,
    Ball { center: Vec<f64>, radius: f64 },
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Halfspace { normal: Vec<f64>, offset: f64 },
    Hyperplane { normal: Vec<f64>, offset: f64 },
    Orthant,
    Simplex { scale: f64 },
}

/// A parsed instance together with the tolerances its document asked for.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedInstance {
    pub instance: ProblemInstance,
    pub tolerances: Tolerances,
}

fn coords(path: &str, v: &[f64], dim: usize) -> Result<Vector> {
    if v.len() != dim {
        return Err(Error::invalid(
            path,
            format!("expected {dim} coordinates, found {}", v.len()),
        ));
    }
    Ok(Vector::from_column_slice(v))
}

impl ConstraintDocument {
    fn to_set(&self, dim: usize) -> Result<ConstraintSet> {
        Ok(match self {
            ConstraintDocument::Free => ConstraintSet::free(dim),
            ConstraintDocument::Ball { center, radius } => {
                ConstraintSet::ball(coords("constraint.center", center, dim)?, *radius)
            }
            ConstraintDocument::Box { lower, upper } => ConstraintSet::bounds(
                coords("constraint.lower", lower, dim)?,
                coords("constraint.upper", upper, dim)?,
            ),
            ConstraintDocument::Halfspace { normal, offset } => {
                ConstraintSet::halfspace(coords("constraint.normal", normal, dim)?, *offset)
            }
            ConstraintDocument::Hyperplane { normal, offset } => {
                ConstraintSet::hyperplane(coords("constraint.normal", normal, dim)?, *offset)
            }
            ConstraintDocument::Orthant => ConstraintSet::orthant(dim),
            ConstraintDocument::Simplex { scale } => ConstraintSet::simplex(dim, *scale),
        })
    }

    fn from_set(set: &ConstraintSet) -> Self {
        let v = |x: &Vector| x.iter().copied().collect::<Vec<_>>();
        match set {
            ConstraintSet::Free { .. } => ConstraintDocument::Free,
            ConstraintSet::Ball { center, radius } => ConstraintDocument::Ball {
                center: v(center),
                radius: *radius,
            },
            ConstraintSet::Box { lower, upper } => ConstraintDocument::Box {
                lower: v(lower),
                upper: v(upper),
            },
            ConstraintSet::Halfspace { normal, offset } => ConstraintDocument::Halfspace {
                normal: v(normal),
                offset: *offset,
            },
            ConstraintSet::Hyperplane { normal, offset } => ConstraintDocument::Hyperplane {
                normal: v(normal),
                offset: *offset,
            },
            ConstraintSet::Orthant { .. } => ConstraintDocument::Orthant,
            ConstraintSet::Simplex { scale, .. } => ConstraintDocument::Simplex { scale: *scale },
        }
    }
}

impl InstanceDocument {
    pub fn into_instance(self) -> Result<LoadedInstance> {
        if self.dim == 0 {
            return Err(Error::invalid("dim", "must be at least 1"));
        }
        if self.anchors.len() < 2 {
            return Err(Error::invalid("anchors", "at least two anchors are required"));
        }
        let anchors = self
            .anchors
            .iter()
            .enumerate()
            .map(|(i, a)| coords(&format!("anchors[{i}]"), a, self.dim))
            .collect::<Result<Vec<_>>>()?;
        let set = self.constraint.to_set(self.dim)?;
        let instance = ProblemInstance::new(AnchorSet::new(anchors, self.weights)?, set)?
            .with_collinear_override(self.allow_collinear);
        let tolerances = self.tolerances.unwrap_or_default();
        tolerances.validate()?;
        Ok(LoadedInstance { instance, tolerances })
    }

    pub fn from_instance(instance: &ProblemInstance, tolerances: Option<Tolerances>) -> Self {
        InstanceDocument {
            dim: instance.dim(),
            anchors: instance
                .anchors()
                .iter()
                .map(|a| a.iter().copied().collect())
                .collect(),
            weights: instance.weights().to_vec(),
            constraint: ConstraintDocument::from_set(instance.constraint()),
            tolerances,
            allow_collinear: instance.collinear_override(),
        }
    }
}

/// Parses and validates an instance document.
///
/// Schema errors carry the JSON path of the offending field.
pub fn parse_instance(text: &[u8]) -> Result<LoadedInstance> {
    let mut de = serde_json::Deserializer::from_slice(text);
    let doc: InstanceDocument = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let message = e.into_inner().to_string();
        Error::invalid(path, message)
    })?;
    de.end().map_err(|e| Error::invalid(".", e.to_string()))?;
    doc.into_instance()
}

pub fn serialize_instance(instance: &ProblemInstance, tolerances: Option<Tolerances>) -> Vec<u8> {
    to_json(&InstanceDocument::from_instance(instance, tolerances))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateDocument {
    pub kind: String,
    /// One-based anchor number for the anchor case.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<usize>,
    pub residual: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    pub tolerance: f64,
    pub verdict: String,
}

impl From<&Certificate> for CertificateDocument {
    fn from(c: &Certificate) -> Self {
        let (kind, anchor) = match c.kind {
            CertificateKind::FixedPoint => ("FixedPoint", None),
            CertificateKind::VariationalInequality => ("VariationalInequality", None),
            CertificateKind::AnchorCase(j) => ("AnchorCase", Some(j + 1)),
        };
        let verdict = match c.verdict {
            Verdict::Optimal => "Optimal",
            Verdict::NotOptimal => "NotOptimal",
            Verdict::Inconclusive => "Inconclusive",
        };
        CertificateDocument {
            kind: kind.to_string(),
            anchor,
            residual: c.residual,
            margin: c.margin,
            tolerance: c.tolerance,
            verdict: verdict.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub x: Vec<f64>,
    pub f: f64,
    pub status: String,
    pub iterations: usize,
    pub certificate: Option<CertificateDocument>,
    pub feasible: bool,
}

impl ResultDocument {
    pub fn new(result: &SolveResult, certificate: Option<&Certificate>, feasible: bool) -> Self {
        ResultDocument {
            x: result.x_final.iter().copied().collect(),
            f: result.objective,
            status: result.status.to_string(),
            iterations: result.iterations,
            certificate: certificate.map(CertificateDocument::from),
            feasible,
        }
    }
}

/// Pretty JSON printer that writes every float with 17 significant digits.
struct SignificantDigits(PrettyFormatter<'static>);

impl Formatter for SignificantDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }
    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        write!(writer, "{:.16e}", value as f64)
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes to pretty JSON with 17-significant-digit floats and a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SignificantDigits(PrettyFormatter::new()));
    value
        .serialize(&mut ser)
        .expect("documents contain only finite numbers and string keys");
    out.push(b'\n');
    out
}

pub fn write_trace_csv<W: Write>(mut w: W, trace: &[TraceRecord]) -> io::Result<()> {
    writeln!(w, "iter,f,step_norm,residual")?;
    for r in trace {
        writeln!(
            w,
            "{},{:.16e},{:.16e},{:.16e}",
            r.iter, r.objective, r.step_norm, r.fixed_point_residual
        )?;
    }
    Ok(())
}

pub fn write_stability_csv<W: Write>(mut w: W, report: &StabilityReport) -> io::Result<()> {
    writeln!(w, "delta,dir,dM,dm,flag")?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
    for row in &report.rows {
        writeln!(
            w,
            "{:.16e},{},{},{},{}",
            row.delta,
            row.direction,
            opt(row.solution_shift),
            opt(row.value_shift),
            u8::from(row.flagged)
        )?;
    }
    Ok(())
}

/// Parses a comma-separated list of decimals such as `0.5,-1,2e-3`.
pub fn parse_vector(text: &str) -> Result<Vector> {
    let values = text
        .split(',')
        .map(|s| {
            let s = s.trim();
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::InvalidArgument(format!("`{s}` is not a finite number")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Vector::from_vec(values))
}
