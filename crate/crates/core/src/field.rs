//! Per-vertex scalar fields and the ways users supply them.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::mesh::SurfaceMesh;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("field value at index {index} is not finite")]
    NonFinite { index: usize },
    #[error("{domain:?} field has {found} values, mesh needs {expected}")]
    LengthMismatch {
        domain: FieldDomain,
        expected: usize,
        found: usize,
    },
    #[error("expected a {expected:?} field, got a {found:?} field")]
    WrongDomain {
        expected: FieldDomain,
        found: FieldDomain,
    },
    #[error("expression `{expr}`: {message}")]
    Expression { expr: String, message: String },
    #[error("{path}: line {line}: {message}")]
    Csv {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: no value for vertex {vertex}")]
    MissingVertex { path: PathBuf, vertex: usize },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// Where a field lives: on every vertex, or only on boundary vertices in
/// the order of [`SurfaceMesh::boundary_vertices`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldDomain {
    Vertices,
    Boundary,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalarField {
    domain: FieldDomain,
    values: Vec<f64>,
}

impl ScalarField {
    fn new(domain: FieldDomain, values: Vec<f64>) -> Result<Self, FieldError> {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(FieldError::NonFinite { index });
        }
        Ok(Self { domain, values })
    }

    pub fn on_vertices(values: Vec<f64>) -> Result<Self, FieldError> {
        Self::new(FieldDomain::Vertices, values)
    }

    pub fn on_boundary(values: Vec<f64>) -> Result<Self, FieldError> {
        Self::new(FieldDomain::Boundary, values)
    }

    pub fn constant(mesh: &SurfaceMesh, domain: FieldDomain, value: f64) -> Self {
        let n = match domain {
            FieldDomain::Vertices => mesh.vertex_count(),
            FieldDomain::Boundary => mesh.boundary_vertices().len(),
        };
        Self {
            domain,
            values: vec![value; n],
        }
    }

    pub fn domain(&self) -> FieldDomain {
        self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Checks domain and length against `mesh`.
    pub fn conform(&self, mesh: &SurfaceMesh, domain: FieldDomain) -> Result<(), FieldError> {
        if self.domain != domain {
            return Err(FieldError::WrongDomain {
                expected: domain,
                found: self.domain,
            });
        }
        let expected = match domain {
            FieldDomain::Vertices => mesh.vertex_count(),
            FieldDomain::Boundary => mesh.boundary_vertices().len(),
        };
        if self.values.len() != expected {
            return Err(FieldError::LengthMismatch {
                domain,
                expected,
                found: self.values.len(),
            });
        }
        Ok(())
    }

    /// Restriction of a vertex field to the boundary.
    pub fn restrict_to_boundary(&self, mesh: &SurfaceMesh) -> Self {
        debug_assert_eq!(self.domain, FieldDomain::Vertices);
        Self {
            domain: FieldDomain::Boundary,
            values: mesh.restrict_to_boundary(&self.values),
        }
    }
}

/// A user-supplied field: an arithmetic expression in `x, y, z`, or a CSV
/// file of `vertex_index,value` rows.
#[derive(Clone, Debug, PartialEq)]
pub enum FieldSource {
    Expression(String),
    Csv(PathBuf),
}

impl FieldSource {
    /// An argument naming an existing `.csv` file is read as CSV; anything
    /// else is parsed as an expression.
    pub fn from_arg(arg: &str) -> Self {
        let path = Path::new(arg);
        let is_csv = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
        if is_csv && path.is_file() {
            FieldSource::Csv(path.to_path_buf())
        } else {
            FieldSource::Expression(arg.to_string())
        }
    }

    pub fn describe(&self) -> String {
        match self {
            FieldSource::Expression(e) => format!("expr:{e}"),
            FieldSource::Csv(p) => format!("csv:{}", p.display()),
        }
    }

    /// Values at every vertex.
    pub fn vertex_field(&self, positions: &[[f64; 3]]) -> Result<ScalarField, FieldError> {
        match self {
            FieldSource::Expression(expr) => {
                ScalarField::on_vertices(evaluate_expression(expr, positions)?)
            }
            FieldSource::Csv(path) => {
                let table = read_csv(path)?;
                let values = (0..positions.len())
                    .map(|v| {
                        table
                            .get(&v)
                            .copied()
                            .ok_or_else(|| FieldError::MissingVertex {
                                path: path.clone(),
                                vertex: v,
                            })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                ScalarField::on_vertices(values)
            }
        }
    }

    /// Values at boundary vertices. Expressions are evaluated at all
    /// vertices and restricted, so the same expression also provides the
    /// interior extension recorded in reports.
    pub fn boundary_field(
        &self,
        mesh: &SurfaceMesh,
        positions: &[[f64; 3]],
    ) -> Result<ScalarField, FieldError> {
        match self {
            FieldSource::Expression(_) => {
                Ok(self.vertex_field(positions)?.restrict_to_boundary(mesh))
            }
            FieldSource::Csv(path) => {
                let table = read_csv(path)?;
                let values = mesh
                    .boundary_vertices()
                    .iter()
                    .map(|&v| {
                        table
                            .get(&v)
                            .copied()
                            .ok_or_else(|| FieldError::MissingVertex {
                                path: path.clone(),
                                vertex: v,
                            })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                ScalarField::on_boundary(values)
            }
        }
    }
}

/// Evaluates `expr` at each point with variables `x, y, z`.
///
/// Supports `+ - * / ^`, parentheses, numeric literals and the functions
/// `sin cos exp log abs min max` (plus the rest of meval's builtins).
pub fn evaluate_expression(expr: &str, points: &[[f64; 3]]) -> Result<Vec<f64>, FieldError> {
    let err = |message: String| FieldError::Expression {
        expr: expr.to_string(),
        message,
    };
    let parsed: meval::Expr = expr.parse().map_err(|e: meval::Error| err(e.to_string()))?;
    let mut ctx = meval::Context::new();
    ctx.func("log", f64::ln);
    let f = parsed
        .bind3_with_context(ctx, "x", "y", "z")
        .map_err(|e| err(e.to_string()))?;
    let values: Vec<f64> = points.iter().map(|p| f(p[0], p[1], p[2])).collect();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(err(format!("non-finite value at vertex {i}")));
    }
    Ok(values)
}

/// Reads `vertex_index,value` rows; a non-numeric first row is taken as a
/// header and skipped.
pub fn read_csv(path: &Path) -> Result<BTreeMap<usize, f64>, FieldError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| FieldError::Csv {
            path: path.to_path_buf(),
            line: 0,
            message: e.to_string(),
        })?;
    let mut table = BTreeMap::new();
    for (row, record) in reader.records().enumerate() {
        let line = row + 1;
        let bad = |message: String| FieldError::Csv {
            path: path.to_path_buf(),
            line,
            message,
        };
        let record = record.map_err(|e| bad(e.to_string()))?;
        if record.len() < 2 {
            return Err(bad("expected `vertex_index,value`".into()));
        }
        let index = match record[0].parse::<usize>() {
            Ok(i) => i,
            Err(_) if row == 0 => continue,
            Err(e) => return Err(bad(format!("vertex index: {e}"))),
        };
        let value: f64 = record[1].parse().map_err(|e| bad(format!("value: {e}")))?;
        if !value.is_finite() {
            return Err(bad("value is not finite".into()));
        }
        if table.insert(index, value).is_some() {
            return Err(bad(format!("duplicate vertex {index}")));
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn expression_grammar() {
        let pts = [[1.0, 2.0, -0.5]];
        let cases = [
            ("x + y * z", 0.0),
            ("(x + y)^2", 9.0),
            ("-x^2", -1.0),
            ("min(x, y) - max(x, z)", 0.0),
            ("abs(z) + log(exp(2))", 2.5),
            ("sin(0) + cos(0) / 4", 0.25),
            ("3e-1 * 10", 3.0),
        ];
        for (expr, want) in cases {
            let got = evaluate_expression(expr, &pts).unwrap()[0];
            assert!((got - want).abs() < 1e-14, "{expr}: {got} vs {want}");
        }
    }

    #[test]
    fn expression_errors() {
        assert!(evaluate_expression("1 +* 2", &[[0.0; 3]]).is_err());
        assert!(evaluate_expression("w + 1", &[[0.0; 3]]).is_err());
        assert!(evaluate_expression("log(x)", &[[-1.0, 0.0, 0.0]]).is_err());
    }

    #[test]
    fn csv_with_header_and_comments() {
        let mut f = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
        writeln!(f, "vertex_index,value\n# note\n1, 2.5\n0,-1").unwrap();
        let table = read_csv(f.path()).unwrap();
        assert_eq!(table.len(), 2);
        assert_eq!(table[&0], -1.0);
        assert_eq!(table[&1], 2.5);
        assert_eq!(
            FieldSource::from_arg(f.path().to_str().unwrap()),
            FieldSource::Csv(f.path().to_path_buf())
        );
        assert!(matches!(
            FieldSource::from_arg("x^2"),
            FieldSource::Expression(_)
        ));
    }

    #[test]
    fn csv_duplicate_rejected() {
        let mut f = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
        writeln!(f, "0,1\n0,2").unwrap();
        assert!(matches!(
            read_csv(f.path()),
            Err(FieldError::Csv { line: 2, .. })
        ));
    }

    #[test]
    fn non_finite_rejected() {
        assert!(matches!(
            ScalarField::on_vertices(vec![0.0, f64::NAN]),
            Err(FieldError::NonFinite { index: 1 })
        ));
    }
}
