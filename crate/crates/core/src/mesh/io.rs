//! ASCII OFF and OBJ readers.

use std::path::Path;

use super::MeshError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshFormat {
    Off,
    Obj,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "off" => Some(MeshFormat::Off),
            "obj" => Some(MeshFormat::Obj),
            _ => None,
        }
    }
}

type Parsed = (Vec<[f64; 3]>, Vec<[usize; 3]>);

fn parse_err(line: usize, message: impl Into<String>) -> MeshError {
    MeshError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_f64(tok: &str, line: usize) -> Result<f64, MeshError> {
    let x: f64 = tok
        .parse()
        .map_err(|_| parse_err(line, format!("invalid number `{tok}`")))?;
    if !x.is_finite() {
        return Err(parse_err(line, format!("non-finite coordinate `{tok}`")));
    }
    Ok(x)
}

fn triangle(face: usize, ids: Vec<usize>) -> Result<[usize; 3], MeshError> {
    match ids[..] {
        [a, b, c] => Ok([a, b, c]),
        _ => Err(MeshError::NonTriangle {
            face,
            arity: ids.len(),
        }),
    }
}

/// Parses OFF. Comments start with `#`; counts may share the header line.
pub fn parse_off(text: &str) -> Result<Parsed, MeshError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let rest = header
        .strip_prefix("OFF")
        .ok_or_else(|| parse_err(hline, "missing OFF header"))?
        .trim();
    let (cline, counts) = if rest.is_empty() {
        lines
            .next()
            .ok_or_else(|| parse_err(hline, "missing element counts"))?
    } else {
        (hline, rest)
    };
    let counts: Vec<usize> = counts
        .split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| parse_err(cline, format!("invalid count `{t}`")))
        })
        .collect::<Result<_, _>>()?;
    if counts.len() < 2 {
        return Err(parse_err(cline, "expected `vertices faces [edges]`"));
    }
    let (nv, nf) = (counts[0], counts[1]);

    let mut positions = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| parse_err(cline, "unexpected end of file in vertex list"))?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() < 3 {
            return Err(parse_err(ln, "vertex needs three coordinates"));
        }
        positions.push([
            parse_f64(toks[0], ln)?,
            parse_f64(toks[1], ln)?,
            parse_f64(toks[2], ln)?,
        ]);
    }

    let mut faces = Vec::with_capacity(nf);
    for f in 0..nf {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| parse_err(cline, "unexpected end of file in face list"))?;
        let mut toks = l.split_whitespace();
        let arity: usize = toks
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| parse_err(ln, "face must start with its vertex count"))?;
        let ids: Vec<usize> = toks
            .take(arity)
            .map(|t| {
                t.parse()
                    .map_err(|_| parse_err(ln, format!("invalid index `{t}`")))
            })
            .collect::<Result<_, _>>()?;
        if ids.len() != arity {
            return Err(parse_err(ln, "face lists fewer indices than declared"));
        }
        faces.push(triangle(f, ids)?);
    }
    Ok((positions, faces))
}

/// Parses the `v` and `f` records of an OBJ file; other records are ignored.
/// Face indices may use `i/t/n` syntax and negative (relative) indices.
pub fn parse_obj(text: &str) -> Result<Parsed, MeshError> {
    let mut positions = Vec::new();
    let mut faces = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let l = raw.split('#').next().unwrap_or("").trim();
        let mut toks = l.split_whitespace();
        match toks.next() {
            Some("v") => {
                let c: Vec<&str> = toks.collect();
                if c.len() < 3 {
                    return Err(parse_err(ln, "vertex needs three coordinates"));
                }
                positions.push([
                    parse_f64(c[0], ln)?,
                    parse_f64(c[1], ln)?,
                    parse_f64(c[2], ln)?,
                ]);
            }
            Some("f") => {
                let ids = toks
                    .map(|t| {
                        let head = t.split('/').next().unwrap_or("");
                        let k: i64 = head
                            .parse()
                            .map_err(|_| parse_err(ln, format!("invalid index `{t}`")))?;
                        let idx = match k {
                            k if k > 0 => k - 1,
                            k if k < 0 => positions.len() as i64 + k,
                            _ => return Err(parse_err(ln, "OBJ indices start at 1")),
                        };
                        usize::try_from(idx)
                            .map_err(|_| parse_err(ln, format!("index `{t}` out of range")))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                faces.push(triangle(faces.len(), ids)?);
            }
            _ => {}
        }
    }
    Ok((positions, faces))
}
