use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{build_complex_weighted, HodgeSplit, Orthogonality, SimplicialComplex};
use crate::error::{Error, Result};
use crate::format::{fmt_f64, to_json};
use crate::linalg::DenseMatrix;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Repr {
    dims: usize,
    simplices: Vec<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<Vec<Vec<f64>>>>,
}

fn parse_err(message: impl Into<String>) -> Error {
    Error::Parse { context: "complex file".into(), message: message.into() }
}

/// Parses `{"dims": d, "simplices": [...per dimension...], "weights": [...]}`.
pub fn parse_complex(text: &str) -> Result<SimplicialComplex> {
    let repr: Repr = serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))?;
    if repr.simplices.len() != repr.dims + 1 {
        return Err(parse_err(format!("dims = {} but {} simplex levels", repr.dims, repr.simplices.len())));
    }
    let weights = match repr.weights {
        None => None,
        Some(ws) => Some(
            ws.into_iter()
                .enumerate()
                .map(|(k, rows)| {
                    if rows.is_empty() {
                        Ok(DenseMatrix::zeros(0, 0))
                    } else {
                        DenseMatrix::from_rows(&rows).map_err(|e| parse_err(format!("weight {k}: {e}")))
                    }
                })
                .collect::<Result<Vec<_>>>()?,
        ),
    };
    build_complex_weighted(repr.simplices, weights)
}

pub fn read_complex(path: impl AsRef<Path>) -> Result<SimplicialComplex> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_complex(&text)
}

pub fn complex_to_string(c: &SimplicialComplex) -> Result<String> {
    let identity = (0..=c.top()).all(|k| *c.weight(k) == DenseMatrix::identity(c.count(k)));
    let repr = Repr {
        dims: c.top(),
        simplices: (0..=c.top()).map(|k| c.simplices(k).to_vec()).collect(),
        weights: (!identity).then(|| (0..=c.top()).map(|k| c.weight(k).to_rows()).collect()),
    };
    to_json(&repr).map_err(|e| Error::Io(e.to_string()))
}

pub fn write_complex(c: &SimplicialComplex, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, complex_to_string(c)?)?;
    Ok(())
}

/// Long-format CSV `quantity,index,value`: the input and its three parts
/// entry by entry, then the three inner products with an empty index.
pub fn write_split_csv<W: Write>(out: W, split: &HodgeSplit, orth: &Orthogonality) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let map = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["quantity", "index", "value"]).map_err(map)?;
    for (name, v) in
        [("u", &split.u), ("d_sigma", &split.exact), ("harmonic", &split.harmonic), ("coexact", &split.coexact)]
    {
        for (i, x) in v.iter().enumerate() {
            w.write_record([name.to_string(), i.to_string(), fmt_f64(*x)]).map_err(map)?;
        }
    }
    for (name, v) in [
        ("inner_harmonic_d_sigma", orth.harmonic_exact),
        ("inner_harmonic_coexact", orth.harmonic_coexact),
        ("inner_d_sigma_coexact", orth.exact_coexact),
    ] {
        w.write_record([name.to_string(), String::new(), fmt_f64(v)]).map_err(map)?;
    }
    w.flush()?;
    Ok(())
}
