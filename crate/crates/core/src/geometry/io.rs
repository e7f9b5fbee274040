//! Text serialization of domains and star boundaries.
//!
//! A domain document is a JSON object:
//!
//! ```json
//! {
//!   "format": "shapelab-domain",
//!   "version": 1,
//!   "dimension": 2,
//!   "cells_per_axis": 64,
//!   "spacing": 0.046875,
//!   "origin": [-1.5, -1.5],
//!   "rows": [[64], [20, 24, 20], []],
//!   "fields": { "w": [0.01, 0.02] }
//! }
//! ```
//!
//! `rows` holds one entry per line of cells along the first axis, ordered with
//! the remaining axes in increasing significance. Each entry lists run lengths
//! that alternate unoccupied/occupied, starting with unoccupied, and sums to
//! `cells_per_axis`; an empty list is an all-empty line. `fields` is optional
//! and stores named values on the occupied cells in index order.
//!
//! A star document is `{"format": "shapelab-star", "version": 1, "R": ..,
//! "center": [x, y], "a": [a_0, ..], "b": [b_0, ..]}`.

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::{json, Map, Value};

use super::grid::{GridDomain, GridSpec};
use super::star::StarBoundary;
use crate::error::{Result, ShapeError};

pub const DOMAIN_FORMAT: &str = "shapelab-domain";
pub const STAR_FORMAT: &str = "shapelab-star";
pub const FORMAT_VERSION: u64 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct DomainFile {
    pub domain: GridDomain,
    pub fields: BTreeMap<String, Vec<f64>>,
}

/// Either document kind.
#[derive(Clone, Debug, PartialEq)]
pub enum Document {
    Domain(DomainFile),
    Star(StarBoundary),
}

fn encode_rows(dom: &GridDomain) -> Vec<Vec<usize>> {
    let n = dom.spec().cells_per_axis();
    let lines = dom.spec().len() / n;
    let mask = dom.mask();
    (0..lines)
        .map(|l| {
            let row = &mask[l * n..(l + 1) * n];
            if !row.iter().any(|&b| b) {
                return Vec::new();
            }
            let mut runs = Vec::new();
            let mut state = false;
            let mut len = 0;
            for &b in row {
                if b == state {
                    len += 1;
                } else {
                    runs.push(len);
                    state = b;
                    len = 1;
                }
            }
            runs.push(len);
            runs
        })
        .collect()
}

pub fn domain_to_value(dom: &GridDomain, fields: &BTreeMap<String, Vec<f64>>) -> Value {
    let spec = dom.spec();
    let origin: Vec<f64> = spec.origin()[..spec.dim()].to_vec();
    let mut obj = json!({
        "format": DOMAIN_FORMAT,
        "version": FORMAT_VERSION,
        "dimension": spec.dim(),
        "cells_per_axis": spec.cells_per_axis(),
        "spacing": spec.spacing(),
        "origin": origin,
        "rows": encode_rows(dom),
    });
    if !fields.is_empty() {
        obj["fields"] = json!(fields);
    }
    obj
}

pub fn domain_to_string(dom: &GridDomain) -> String {
    serde_json::to_string(&domain_to_value(dom, &BTreeMap::new())).expect("domain serializes")
}

fn field<'a>(obj: &'a Map<String, Value>, name: &str) -> Result<&'a Value> {
    obj.get(name)
        .ok_or_else(|| ShapeError::parse(name, "missing"))
}

fn as_u64(obj: &Map<String, Value>, name: &str) -> Result<u64> {
    field(obj, name)?
        .as_u64()
        .ok_or_else(|| ShapeError::parse(name, "expected a non-negative integer"))
}

fn as_f64(obj: &Map<String, Value>, name: &str) -> Result<f64> {
    let v = field(obj, name)?
        .as_f64()
        .ok_or_else(|| ShapeError::parse(name, "expected a number"))?;
    if !v.is_finite() {
        return Err(ShapeError::parse(name, "expected a finite number"));
    }
    Ok(v)
}

fn as_f64_list(value: &Value, name: &str) -> Result<Vec<f64>> {
    value
        .as_array()
        .ok_or_else(|| ShapeError::parse(name, "expected an array of numbers"))?
        .iter()
        .map(|x| {
            x.as_f64()
                .filter(|v| v.is_finite())
                .ok_or_else(|| ShapeError::parse(name, "expected an array of finite numbers"))
        })
        .collect()
}

fn check_header(obj: &Map<String, Value>, expected: &str) -> Result<()> {
    let fmt = field(obj, "format")?
        .as_str()
        .ok_or_else(|| ShapeError::parse("format", "expected a string"))?;
    if fmt != expected {
        return Err(ShapeError::parse("format", format!("expected \"{expected}\", got \"{fmt}\"")));
    }
    let version = as_u64(obj, "version")?;
    if version != FORMAT_VERSION {
        return Err(ShapeError::parse("version", format!("unsupported version {version}")));
    }
    Ok(())
}

fn parse_object(text: &str) -> Result<Map<String, Value>> {
    let v: Value = serde_json::from_str(text)
        .map_err(|e| ShapeError::parse("document", format!("invalid JSON: {e}")))?;
    match v {
        Value::Object(m) => Ok(m),
        _ => Err(ShapeError::parse("document", "expected a JSON object")),
    }
}

fn domain_from_object(obj: &Map<String, Value>) -> Result<DomainFile> {
    check_header(obj, DOMAIN_FORMAT)?;
    let dim = as_u64(obj, "dimension")? as usize;
    let cells = as_u64(obj, "cells_per_axis")? as usize;
    let h = as_f64(obj, "spacing")?;
    let origin = as_f64_list(field(obj, "origin")?, "origin")?;
    let spec = GridSpec::new(dim, cells, h, &origin).map_err(|e| match e {
        ShapeError::Domain(m) => ShapeError::parse("dimension/cells_per_axis/spacing/origin", m),
        other => other,
    })?;
    let rows = field(obj, "rows")?
        .as_array()
        .ok_or_else(|| ShapeError::parse("rows", "expected an array of run-length arrays"))?;
    let lines = spec.len() / cells;
    if rows.len() != lines {
        return Err(ShapeError::parse(
            "rows",
            format!("expected {lines} rows, found {}", rows.len()),
        ));
    }
    let mut mask = Vec::with_capacity(spec.len());
    for (r, row) in rows.iter().enumerate() {
        let runs = row
            .as_array()
            .ok_or_else(|| ShapeError::parse("rows", format!("row {r} is not an array")))?;
        if runs.is_empty() {
            mask.extend(std::iter::repeat(false).take(cells));
            continue;
        }
        let mut state = false;
        let mut total = 0usize;
        for run in runs {
            let len = run
                .as_u64()
                .ok_or_else(|| ShapeError::parse("rows", format!("row {r} has a non-integer run")))?
                as usize;
            total += len;
            if total > cells {
                break;
            }
            mask.extend(std::iter::repeat(state).take(len));
            state = !state;
        }
        if total != cells {
            return Err(ShapeError::parse(
                "rows",
                format!("row {r} covers {total} cells, expected {cells}"),
            ));
        }
    }
    let domain = GridDomain::new(spec, mask)?;
    let mut fields = BTreeMap::new();
    if let Some(f) = obj.get("fields") {
        let fo = f
            .as_object()
            .ok_or_else(|| ShapeError::parse("fields", "expected an object"))?;
        let count = domain.count();
        for (name, vals) in fo {
            let key = format!("fields.{name}");
            let v = as_f64_list(vals, &key)?;
            if v.len() != count {
                return Err(ShapeError::parse(
                    key,
                    format!("has {} values for {count} occupied cells", v.len()),
                ));
            }
            fields.insert(name.clone(), v);
        }
    }
    Ok(DomainFile { domain, fields })
}

pub fn domain_from_str(text: &str) -> Result<DomainFile> {
    domain_from_object(&parse_object(text)?)
}

pub fn star_to_value(s: &StarBoundary) -> Value {
    json!({
        "format": STAR_FORMAT,
        "version": FORMAT_VERSION,
        "R": s.base_radius,
        "center": s.center,
        "a": s.fourier_cos,
        "b": s.fourier_sin,
    })
}

fn star_from_object(obj: &Map<String, Value>) -> Result<StarBoundary> {
    check_header(obj, STAR_FORMAT)?;
    let r = as_f64(obj, "R")?;
    let center = as_f64_list(field(obj, "center")?, "center")?;
    if center.len() != 2 {
        return Err(ShapeError::parse("center", "expected two coordinates"));
    }
    let a = as_f64_list(field(obj, "a")?, "a")?;
    let b = as_f64_list(field(obj, "b")?, "b")?;
    if a.is_empty() {
        return Err(ShapeError::parse("a", "needs at least a_0"));
    }
    if b.len() != a.len() {
        return Err(ShapeError::parse("b", "must have the same length as a"));
    }
    Ok(StarBoundary {
        base_radius: r,
        center: [center[0], center[1]],
        fourier_cos: a,
        fourier_sin: b,
    })
}

pub fn star_from_str(text: &str) -> Result<StarBoundary> {
    star_from_object(&parse_object(text)?)
}

pub fn document_from_str(text: &str) -> Result<Document> {
    let obj = parse_object(text)?;
    match obj.get("format").and_then(Value::as_str) {
        Some(DOMAIN_FORMAT) => Ok(Document::Domain(domain_from_object(&obj)?)),
        Some(STAR_FORMAT) => Ok(Document::Star(star_from_object(&obj)?)),
        Some(other) => Err(ShapeError::parse("format", format!("unknown format \"{other}\""))),
        None => Err(ShapeError::parse("format", "missing")),
    }
}

pub fn read_document(path: &Path) -> Result<Document> {
    document_from_str(&std::fs::read_to_string(path)?)
}

pub fn read_domain(path: &Path) -> Result<DomainFile> {
    domain_from_str(&std::fs::read_to_string(path)?)
}

pub fn write_domain(path: &Path, dom: &GridDomain, fields: &BTreeMap<String, Vec<f64>>) -> Result<()> {
    let text = serde_json::to_string(&domain_to_value(dom, fields)).expect("domain serializes");
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub fn write_star(path: &Path, s: &StarBoundary) -> Result<()> {
    let text = serde_json::to_string_pretty(&star_to_value(s)).expect("star serializes");
    std::fs::write(path, text + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::shapes::{make_ball, BallSpec};

    #[test]
    fn domain_roundtrip() {
        let spec = GridSpec::centered(2, 32, 2.0).unwrap();
        let dom = make_ball(&spec, &BallSpec::new([0.1, 0.0, 0.0], 0.6)).unwrap();
        let back = domain_from_str(&domain_to_string(&dom)).unwrap();
        assert_eq!(back.domain, dom);
        let spec3 = GridSpec::centered(3, 10, 2.0).unwrap();
        let d3 = make_ball(&spec3, &BallSpec::new([0.0; 3], 0.6)).unwrap();
        assert_eq!(domain_from_str(&domain_to_string(&d3)).unwrap().domain, d3);
    }

    #[test]
    fn fields_roundtrip() {
        let spec = GridSpec::centered(2, 16, 2.0).unwrap();
        let dom = make_ball(&spec, &BallSpec::new([0.0; 3], 0.5)).unwrap();
        let mut f = BTreeMap::new();
        f.insert("w".to_string(), (0..dom.count()).map(|i| i as f64 * 0.5).collect());
        let text = domain_to_value(&dom, &f).to_string();
        assert_eq!(domain_from_str(&text).unwrap().fields, f);
    }

    #[test]
    fn errors_name_the_field() {
        let spec = GridSpec::centered(2, 16, 2.0).unwrap();
        let dom = make_ball(&spec, &BallSpec::new([0.0; 3], 0.5)).unwrap();
        let mut v = domain_to_value(&dom, &BTreeMap::new());
        v["spacing"] = json!("wide");
        match domain_from_str(&v.to_string()) {
            Err(ShapeError::Parse { field, .. }) => assert_eq!(field, "spacing"),
            other => panic!("{other:?}"),
        }
        let mut v = domain_to_value(&dom, &BTreeMap::new());
        v["rows"][3] = json!([3, 4]);
        match domain_from_str(&v.to_string()) {
            Err(ShapeError::Parse { field, .. }) => assert_eq!(field, "rows"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn star_roundtrip() {
        let mut s = StarBoundary::circle(0.5, [0.1, -0.2], 3);
        s.fourier_cos[2] = 0.1;
        let text = star_to_value(&s).to_string();
        assert_eq!(document_from_str(&text).unwrap(), Document::Star(s));
    }
}
