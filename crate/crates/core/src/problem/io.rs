use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DivGramForm, SaddleProblem};
use crate::error::{Error, Result};
use crate::format::to_json;
use crate::linalg::DenseMatrix;

/// Contents of a problem file.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemFile {
    Explicit(SaddleProblem),
    /// Distributed without a Q basis.
    DivGram(DivGramForm),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Repr {
    n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    m: Option<usize>,
    #[serde(rename = "A")]
    a: Option<Vec<Vec<f64>>>,
    #[serde(rename = "Dc", default, skip_serializing_if = "Option::is_none")]
    dc: Option<Vec<Vec<f64>>>,
    #[serde(rename = "M_V")]
    m_v: Option<Vec<Vec<f64>>>,
    #[serde(rename = "M_Q", default, skip_serializing_if = "Option::is_none")]
    m_q: Option<Vec<Vec<f64>>>,
    #[serde(rename = "F")]
    f: Option<Vec<f64>>,
    #[serde(rename = "Gq", default, skip_serializing_if = "Option::is_none")]
    gq: Option<Vec<f64>>,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    k: Option<Vec<Vec<f64>>>,
    #[serde(rename = "gD", default, skip_serializing_if = "Option::is_none")]
    gd: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    qbasis_absent: bool,
}

fn parse_err(context: &str, message: impl Into<String>) -> Error {
    Error::Parse { context: context.to_string(), message: message.into() }
}

fn require<T>(v: Option<T>, field: &str) -> Result<T> {
    v.ok_or_else(|| parse_err(field, format!("missing field `{field}`")))
}

fn matrix(rows: Vec<Vec<f64>>, r: usize, c: usize, field: &str) -> Result<DenseMatrix> {
    if r == 0 {
        if rows.is_empty() || rows.iter().all(Vec::is_empty) {
            return Ok(DenseMatrix::zeros(0, c));
        }
        return Err(parse_err(field, format!("expected 0 rows, found {}", rows.len())));
    }
    if rows.len() != r {
        return Err(parse_err(field, format!("expected {r} rows, found {}", rows.len())));
    }
    if let Some(i) = rows.iter().position(|row| row.len() != c) {
        return Err(parse_err(field, format!("row {i} has {} entries, expected {c}", rows[i].len())));
    }
    DenseMatrix::from_rows(&rows).map_err(|e| parse_err(field, e.to_string()))
}

fn vector(v: Vec<f64>, len: usize, field: &str) -> Result<Vec<f64>> {
    if v.len() != len {
        return Err(parse_err(field, format!("expected {len} entries, found {}", v.len())));
    }
    Ok(v)
}

/// Parses a problem document.
pub fn parse_problem(text: &str) -> Result<ProblemFile> {
    let repr: Repr = serde_json::from_str(text).map_err(|e| parse_err("problem file", e.to_string()))?;
    let n = repr.n;
    let a = matrix(require(repr.a, "A")?, n, n, "A")?;
    let m_v = matrix(require(repr.m_v, "M_V")?, n, n, "M_V")?;
    let f = vector(require(repr.f, "F")?, n, "F")?;
    if repr.qbasis_absent {
        let k = matrix(require(repr.k, "K")?, n, n, "K")?;
        let gd = vector(require(repr.gd, "gD")?, n, "gD")?;
        let mut form = DivGramForm::new(a, m_v, k, f, gd).map_err(|e| parse_err("K", e.to_string()))?;
        form.m = repr.m;
        return Ok(ProblemFile::DivGram(form));
    }
    let m = require(repr.m, "m")?;
    let dc = matrix(require(repr.dc, "Dc")?, m, n, "Dc")?;
    let m_q = matrix(require(repr.m_q, "M_Q")?, m, m, "M_Q")?;
    let gq = vector(require(repr.gq, "Gq")?, m, "Gq")?;
    let p = SaddleProblem::new(a, dc, m_v, m_q, f, gq).map_err(|e| parse_err("problem file", e.to_string()))?;
    Ok(ProblemFile::Explicit(p))
}

/// Reads a problem file in either form.
pub fn read_problem_file(path: impl AsRef<Path>) -> Result<ProblemFile> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_problem(&text).map_err(|e| match e {
        Error::Parse { context, message } => Error::Parse { context: format!("{} ({context})", path.display()), message },
        other => other,
    })
}

/// Reads an explicit problem; fails on files marked `qbasis_absent`.
pub fn read_problem(path: impl AsRef<Path>) -> Result<SaddleProblem> {
    match read_problem_file(path)? {
        ProblemFile::Explicit(p) => Ok(p),
        ProblemFile::DivGram(_) => Err(Error::MissingQBasis),
    }
}

/// Serializes an explicit problem.
pub fn problem_to_string(p: &SaddleProblem) -> Result<String> {
    let repr = Repr {
        n: p.n,
        m: Some(p.m),
        a: Some(p.a.to_rows()),
        dc: Some(p.dc.to_rows()),
        m_v: Some(p.m_v.to_rows()),
        m_q: Some(p.m_q.to_rows()),
        f: Some(p.f.clone()),
        gq: Some(p.gq.clone()),
        k: None,
        gd: None,
        qbasis_absent: false,
    };
    to_json(&repr).map(|s| s + "\n").map_err(|e| parse_err("serialize", e.to_string()))
}

pub fn write_problem(p: &SaddleProblem, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, problem_to_string(p)?)?;
    Ok(())
}

/// Writes a form without its Q basis (`"qbasis_absent": true`).
pub fn write_div_gram(form: &DivGramForm, path: impl AsRef<Path>) -> Result<()> {
    let repr = Repr {
        n: form.n,
        m: form.m,
        a: Some(form.a.to_rows()),
        dc: None,
        m_v: Some(form.m_v.to_rows()),
        m_q: None,
        f: Some(form.f.clone()),
        gq: None,
        k: Some(form.k.to_rows()),
        gd: Some(form.gd.clone()),
        qbasis_absent: true,
    };
    let text = to_json(&repr).map_err(|e| parse_err("serialize", e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{to_div_gram, toy_problem};

    #[test]
    fn round_trip_is_bit_exact() {
        let t = toy_problem().with_loads(vec![0.1, 1.0 / 3.0], vec![-2.0e-300]).unwrap();
        let text = problem_to_string(&t).unwrap();
        match parse_problem(&text).unwrap() {
            ProblemFile::Explicit(back) => assert_eq!(back, t),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_field_is_named() {
        let text = r#"{"n":1,"m":1,"A":[[1]],"Dc":[[1]],"M_V":[[1]],"F":[0],"Gq":[0]}"#;
        match parse_problem(text) {
            Err(Error::Parse { context, message }) => {
                assert_eq!(context, "M_Q");
                assert!(message.contains("M_Q"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_float_is_rejected() {
        let text = r#"{"n":1,"m":1,"A":[[1.0.0]],"Dc":[[1]],"M_V":[[1]],"M_Q":[[1]],"F":[0],"Gq":[0]}"#;
        let e = parse_problem(text).unwrap_err();
        assert!(matches!(e, Error::Parse { .. }));
        assert!(e.to_string().contains("line 1"));
    }

    #[test]
    fn div_gram_file() {
        let form = to_div_gram(&toy_problem()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("form.json");
        write_div_gram(&form, &path).unwrap();
        match read_problem_file(&path).unwrap() {
            ProblemFile::DivGram(back) => {
                assert_eq!(back.k, form.k);
                assert_eq!(back.gd, form.gd);
                assert_eq!(back.m, Some(1));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(read_problem(&path), Err(Error::MissingQBasis)));
    }
}
