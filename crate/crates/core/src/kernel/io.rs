//! CSV serialisation of kernel fields.
//!
//! ```text
//! # torwalk kernel field
//! # L=64
//! # d=1
//! # W=4
//! # profile={"kind":"hypercube","r":1.0}
//! # n=8
//! # tag={"tag":"exact","n":8}
//! x1,value
//! -31,0.0
//! ...
//! ```
//!
//! Rows follow the torus enumeration order. Empirical fields carry an extra
//! `se` column.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{FieldTag, KernelField, WalkSpec};
use crate::error::{Error, Result};
use crate::torus::TorusGeometry;

const MAGIC: &str = "# torwalk kernel field";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub side: usize,
    pub dim: usize,
    pub bandwidth: f64,
    /// JSON profile spec, or the label for custom profiles.
    pub profile: String,
    pub n: u64,
    pub tag: FieldTag,
}

impl FieldHeader {
    pub fn for_field(spec: &WalkSpec, field: &KernelField) -> Self {
        let profile = match spec.profile().spec() {
            Some(s) => serde_json::to_string(&s).expect("profile spec serialises"),
            None => spec.profile().label(),
        };
        Self {
            side: field.geom.side(),
            dim: field.geom.dim(),
            bandwidth: spec.bandwidth(),
            profile,
            n: field.tag.steps(),
            tag: field.tag.clone(),
        }
    }
}

pub fn write_field<W: Write>(out: W, header: &FieldHeader, field: &KernelField, se: Option<&[f64]>) -> Result<()> {
    let mut out = out;
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "# L={}", header.side)?;
    writeln!(out, "# d={}", header.dim)?;
    writeln!(out, "# W={}", header.bandwidth)?;
    writeln!(out, "# profile={}", header.profile)?;
    writeln!(out, "# n={}", header.n)?;
    writeln!(out, "# tag={}", serde_json::to_string(&header.tag)?)?;
    let mut w = csv::Writer::from_writer(out);
    let d = field.geom.dim();
    let mut cols: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    cols.push("value".into());
    if se.is_some() {
        cols.push("se".into());
    }
    w.write_record(&cols)?;
    let mut coords = vec![0i64; d];
    let mut row: Vec<String> = Vec::with_capacity(d + 2);
    for (i, v) in field.values.iter().enumerate() {
        field.geom.coords_into(i, &mut coords);
        row.clear();
        row.extend(coords.iter().map(|c| c.to_string()));
        row.push(format!("{v:e}"));
        if let Some(se) = se {
            row.push(format!("{:e}", se[i]));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn parse_header_value<'a>(line: &'a str, key: &str) -> Result<&'a str> {
    line.strip_prefix("# ")
        .and_then(|s| s.strip_prefix(key))
        .and_then(|s| s.strip_prefix('='))
        .ok_or_else(|| Error::Config(format!("expected header line `# {key}=...`, found {line:?}")))
}

fn parse_num<T: std::str::FromStr>(s: &str, key: &str) -> Result<T> {
    s.trim().parse().map_err(|_| Error::Config(format!("bad value for {key}: {s:?}")))
}

/// Read a field written by [`write_field`]; returns the standard errors
/// when an `se` column is present.
pub fn read_field<R: BufRead>(mut input: R) -> Result<(FieldHeader, KernelField, Option<Vec<f64>>)> {
    let mut lines = Vec::new();
    for _ in 0..7 {
        let mut s = String::new();
        input.read_line(&mut s)?;
        lines.push(s.trim_end().to_string());
    }
    if lines[0] != MAGIC {
        return Err(Error::Config("not a torwalk kernel field file".into()));
    }
    let side: usize = parse_num(parse_header_value(&lines[1], "L")?, "L")?;
    let dim: usize = parse_num(parse_header_value(&lines[2], "d")?, "d")?;
    let bandwidth: f64 = parse_num(parse_header_value(&lines[3], "W")?, "W")?;
    let profile = parse_header_value(&lines[4], "profile")?.to_string();
    let n: u64 = parse_num(parse_header_value(&lines[5], "n")?, "n")?;
    let tag: FieldTag = serde_json::from_str(parse_header_value(&lines[6], "tag")?)?;
    let geom = TorusGeometry::new(side, dim)?;

    let mut rdr = csv::Reader::from_reader(input);
    let has_se = rdr.headers()?.len() == dim + 2;
    let mut values = vec![f64::NAN; geom.sites()];
    let mut se = has_se.then(|| vec![f64::NAN; geom.sites()]);
    let mut coords = vec![0i64; dim];
    let mut rows = 0usize;
    for rec in rdr.records() {
        let rec = rec?;
        for (a, c) in coords.iter_mut().enumerate() {
            *c = parse_num(&rec[a], "coordinate")?;
        }
        let idx = geom.index_of(&coords)?;
        values[idx] = parse_num(&rec[dim], "value")?;
        if let Some(se) = se.as_mut() {
            se[idx] = parse_num(&rec[dim + 1], "se")?;
        }
        rows += 1;
    }
    if rows != geom.sites() || values.iter().any(|v| v.is_nan()) {
        return Err(Error::Config(format!("field file has {rows} rows, expected {}", geom.sites())));
    }
    let header = FieldHeader { side, dim, bandwidth, profile, n, tag: tag.clone() };
    Ok((header, KernelField { geom, values, tag, clamped_mass: 0.0 }, se))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Walk;
    use crate::profile::Profile;

    #[test]
    fn roundtrip() {
        let spec = WalkSpec::new(TorusGeometry::new(6, 2).unwrap(), Profile::hypercube(1.0, 2).unwrap(), 1.5).unwrap();
        let field = Walk::new(spec.clone()).unwrap().n_step(3);
        let header = FieldHeader::for_field(&spec, &field);
        let se: Vec<f64> = (0..36).map(|i| i as f64 * 1e-3).collect();
        let mut buf = Vec::new();
        write_field(&mut buf, &header, &field, Some(&se)).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(MAGIC));
        assert_eq!(text.lines().count(), 7 + 1 + 36);
        let (h, f, s) = read_field(&buf[..]).unwrap();
        assert_eq!(h, header);
        assert_eq!(f.values, field.values);
        assert_eq!(s.unwrap(), se);
    }
}
