//! The versioned JSON document written by every CLI command, and the
//! optional per-vertex CSV dump.
//!
//! All floats are written as `{:.16e}`, i.e. 17 significant digits, which
//! round-trips every `f64`. Non-finite values become `null`.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::Serialize;

use crate::mesh::SurfaceMesh;
use crate::monotone::{IterationTrace, Smallness, Thresholds};
use crate::prescribe::{
    ExamplePair, FeasibilityReport, ModelForm, ModelSummary, Parameters, PrescriptionResult,
    SignCheck, UniformizeInfo,
};
use crate::verify::{MaximumPrincipleReport, RescaleErrors, VerificationReport};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeshSummary {
    pub vertices: usize,
    pub triangles: usize,
    pub boundary_vertices: usize,
    pub boundary_loops: usize,
    pub euler_characteristic: i64,
}

impl MeshSummary {
    pub fn of(mesh: &SurfaceMesh) -> Self {
        Self {
            vertices: mesh.vertex_count(),
            triangles: mesh.triangle_count(),
            boundary_vertices: mesh.boundary_vertices().len(),
            boundary_loops: mesh.boundary_loops().len(),
            euler_characteristic: mesh.euler_characteristic(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceSummary {
    pub iterations: usize,
    pub lambda: f64,
    pub mu: f64,
    pub monotone: bool,
    pub max_increase: f64,
    pub final_delta: Option<f64>,
    pub final_interior_residual: Option<f64>,
    pub final_boundary_residual: Option<f64>,
    pub smallness: Option<Smallness>,
}

impl From<&IterationTrace> for TraceSummary {
    fn from(t: &IterationTrace) -> Self {
        Self {
            iterations: t.iterations,
            lambda: t.lambda,
            mu: t.mu,
            monotone: t.monotone.iter().all(|&m| m),
            max_increase: t.max_increase,
            final_delta: t.deltas.last().copied(),
            final_interior_residual: t.interior_residuals.last().copied(),
            final_boundary_residual: t.boundary_residuals.last().copied(),
            smallness: t.smallness,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Residuals {
    pub interior_sup: f64,
    pub boundary_sup: f64,
    pub gauss_bonnet: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrescriptionSection {
    pub pipeline: &'static str,
    pub scale: f64,
    pub u: Vec<f64>,
    pub realized_k: Vec<f64>,
    /// One value per boundary vertex, in boundary order.
    pub realized_sigma: Vec<f64>,
    pub thresholds: Thresholds,
    pub parameters: Parameters,
    pub model: ModelSummary,
    pub residuals: Residuals,
    pub curvature_errors: Option<RescaleErrors>,
    pub trace: Option<TraceSummary>,
}

impl From<&PrescriptionResult> for PrescriptionSection {
    fn from(r: &PrescriptionResult) -> Self {
        Self {
            pipeline: r.pipeline,
            scale: r.metric_scale,
            u: r.u.values().to_vec(),
            realized_k: r.realized_k.values().to_vec(),
            realized_sigma: r.realized_sigma.values().to_vec(),
            thresholds: r.thresholds,
            parameters: r.parameters,
            model: r.model.clone(),
            residuals: Residuals {
                interior_sup: r.report.pde_residual_sup,
                boundary_sup: r.report.boundary_residual_sup,
                gauss_bonnet: r.report.gauss_bonnet_residual,
            },
            curvature_errors: r.report.curvature,
            trace: r.trace.as_ref().map(TraceSummary::from),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Constant {
    pub name: String,
    pub value: f64,
    pub satisfied: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExampleSection {
    pub case: String,
    pub constants: Vec<Constant>,
    pub sign_checks: Vec<SignCheck>,
    pub interior_data: Vec<f64>,
    pub boundary_data: Vec<f64>,
}

impl From<&ExamplePair> for ExampleSection {
    fn from(p: &ExamplePair) -> Self {
        Self {
            case: p.case.to_string(),
            constants: p
                .constants
                .iter()
                .map(|(name, value, satisfied)| Constant {
                    name: name.clone(),
                    value: *value,
                    satisfied: *satisfied,
                })
                .collect(),
            sign_checks: p.sign_checks.clone(),
            interior_data: p.interior_data.clone(),
            boundary_data: p.boundary_data.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniformizeSection {
    pub model: ModelSummary,
    pub info: Option<UniformizeInfo>,
    /// Conformal factor taking the input metric to the model metric.
    pub u: Vec<f64>,
}

impl From<&ModelForm> for UniformizeSection {
    fn from(m: &ModelForm) -> Self {
        Self {
            model: m.summary(),
            info: m.uniformize_info,
            u: m.base_u().to_vec(),
        }
    }
}

/// Top-level report. Sections a command does not produce are omitted.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub timestamp: String,
    pub status: Status,
    pub mesh: MeshSummary,
    pub inputs: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prescription: Option<PrescriptionSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feasibility: Option<FeasibilityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub example: Option<ExampleSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uniformize: Option<UniformizeSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub maximum_principle: Option<MaximumPrincipleReport>,
    pub verification: VerificationReport,
}

impl Report {
    pub fn new(command: &str, mesh: &SurfaceMesh, verification: VerificationReport) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            timestamp: String::new(),
            status: Status::Pass,
            mesh: MeshSummary::of(mesh),
            inputs: BTreeMap::new(),
            prescription: None,
            feasibility: None,
            example: None,
            uniformize: None,
            maximum_principle: None,
            verification,
        }
    }

    pub fn input(mut self, key: &str, value: impl ToString) -> Self {
        self.inputs.insert(key.to_string(), value.to_string());
        self
    }

    /// Sets `status` from the verification checks and any section verdicts.
    pub fn settle(mut self) -> Self {
        let mut ok = self.verification.passed();
        if let Some(f) = &self.feasibility {
            ok &= f.verdict == crate::prescribe::Verdict::Pass;
        }
        if let Some(m) = &self.maximum_principle {
            ok &= m.passed();
        }
        self.status = if ok { Status::Pass } else { Status::Fail };
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn to_json(&self) -> String {
        let mut out = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut out, FullPrecision::default());
        self.serialize(&mut ser)
            .expect("report serialization cannot fail");
        out.push(b'\n');
        String::from_utf8(out).expect("serde_json writes UTF-8")
    }
}

/// Pretty formatter that writes floats with 17 significant digits.
#[derive(Default)]
pub struct FullPrecision {
    pretty: serde_json::ser::PrettyFormatter<'static>,
}

impl serde_json::ser::Formatter for FullPrecision {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_object_value(w)
    }
}

/// A per-vertex column for [`write_fields_csv`]. Boundary columns leave
/// interior rows empty.
pub enum Column<'a> {
    Vertices(&'a str, &'a [f64]),
    Boundary(&'a str, &'a [f64]),
}

pub fn write_fields_csv<W: Write>(
    out: W,
    mesh: &SurfaceMesh,
    columns: &[Column<'_>],
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["vertex".to_string()];
    for c in columns {
        header.push(match c {
            Column::Vertices(n, _) | Column::Boundary(n, _) => n.to_string(),
        });
    }
    w.write_record(&header)?;
    for v in 0..mesh.vertex_count() {
        let mut row = vec![v.to_string()];
        for c in columns {
            row.push(match c {
                Column::Vertices(_, vals) => format!("{:.16e}", vals[v]),
                Column::Boundary(_, vals) => match mesh.boundary_slot(v) {
                    Some(s) => format!("{:.16e}", vals[s]),
                    None => String::new(),
                },
            });
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
