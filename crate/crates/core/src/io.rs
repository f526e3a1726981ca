//! File formats: headerless numeric CSV point clouds, OBJ vertices, diagram
//! JSON, and CSV tables for plotting.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::seq::index::sample;
use rand::Rng;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::persistence::PersistenceDiagram;

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Reads one point per line, comma or whitespace separated. Blank lines and
/// lines starting with `#` are skipped.
pub fn read_points_csv<R: Read>(reader: R) -> Result<PointCloud> {
    let mut cloud: Option<PointCloud> = None;
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>().map_err(|e| parse_error(i + 1, format!("{s:?}: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        if row.iter().any(|x| !x.is_finite()) {
            return Err(parse_error(i + 1, "non-finite coordinate"));
        }
        let cloud = match &mut cloud {
            Some(c) => c,
            None => cloud.insert(PointCloud::empty(row.len())?),
        };
        cloud.push(&row).map_err(|e| parse_error(i + 1, e.to_string()))?;
    }
    cloud.ok_or(Error::EmptyInput)
}

pub fn read_points_file(path: &Path) -> Result<PointCloud> {
    read_points_csv(fs::File::open(path)?)
}

pub fn write_points_csv<W: Write>(mut w: W, cloud: &PointCloud) -> Result<()> {
    for p in cloud.iter() {
        let row: Vec<String> = p.iter().map(|x| x.to_string()).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn write_points_file(path: &Path, cloud: &PointCloud) -> Result<()> {
    let mut w = std::io::BufWriter::new(fs::File::create(path)?);
    write_points_csv(&mut w, cloud)?;
    w.flush()?;
    Ok(())
}

/// Parses `v x y z` lines of an OBJ file; every other record is ignored.
pub fn read_obj_vertices<R: Read>(reader: R) -> Result<PointCloud> {
    let mut cloud = PointCloud::empty(3)?;
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let mut fields = line.split_whitespace();
        if fields.next() != Some("v") {
            continue;
        }
        let xyz = fields
            .take(3)
            .map(|s| s.parse::<f64>().map_err(|e| parse_error(i + 1, format!("{s:?}: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        if xyz.len() != 3 {
            return Err(parse_error(i + 1, "vertex needs three coordinates"));
        }
        if xyz.iter().any(|x| !x.is_finite()) {
            return Err(parse_error(i + 1, "non-finite coordinate"));
        }
        cloud.push(&xyz)?;
    }
    Ok(cloud)
}

/// `n` points drawn uniformly without replacement.
pub fn subsample<R: Rng + ?Sized>(cloud: &PointCloud, n: usize, rng: &mut R) -> Result<PointCloud> {
    if n > cloud.len() {
        return Err(Error::NotEnoughPoints {
            needed: n,
            have: cloud.len(),
        });
    }
    let mut idx = sample(rng, cloud.len(), n).into_vec();
    idx.sort_unstable();
    Ok(cloud.select(&idx))
}

/// Translates the cloud so its bounding box is centered at (½, …, ½). Fails
/// if the box is wider than 1 along some axis.
pub fn center_in_unit_cube(cloud: &PointCloud) -> Result<PointCloud> {
    let (lo, hi) = cloud.bounds().ok_or(Error::EmptyInput)?;
    if lo.iter().zip(&hi).any(|(l, h)| h - l > 1.0) {
        return Err(Error::InvalidParameter(
            "cloud does not fit in the unit cube; rescale it first".into(),
        ));
    }
    let shift: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| 0.5 - 0.5 * (l + h)).collect();
    let coords = cloud
        .as_flat()
        .chunks_exact(cloud.dim())
        .flat_map(|p| p.iter().zip(&shift).map(|(x, s)| x + s))
        .collect();
    PointCloud::from_flat(cloud.dim(), coords)
}

/// Accepts a single diagram object or an array of them.
pub fn read_diagrams_json<R: Read>(reader: R) -> Result<Vec<PersistenceDiagram>> {
    let value: serde_json::Value = serde_json::from_reader(reader)?;
    if value.is_array() {
        Ok(serde_json::from_value(value)?)
    } else {
        Ok(vec![serde_json::from_value(value)?])
    }
}

pub fn read_diagrams_file(path: &Path) -> Result<Vec<PersistenceDiagram>> {
    read_diagrams_json(fs::File::open(path)?)
}

pub fn write_json_file<T: serde::Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = std::io::BufWriter::new(fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn fmt_death(d: f64) -> String {
    if d.is_infinite() {
        "inf".into()
    } else {
        d.to_string()
    }
}

/// `degree,birth,death` rows with a header.
pub fn write_diagram_csv<W: Write>(mut w: W, diagrams: &[PersistenceDiagram]) -> Result<()> {
    writeln!(w, "degree,birth,death")?;
    for d in diagrams {
        for &(b, e) in &d.pairs {
            writeln!(w, "{},{},{}", d.degree, b, fmt_death(e))?;
        }
    }
    Ok(())
}

/// Inverse of [`write_diagram_csv`]; degrees come back in ascending order.
pub fn read_diagram_csv<R: Read>(reader: R) -> Result<Vec<PersistenceDiagram>> {
    let mut out: Vec<PersistenceDiagram> = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != 3 {
            return Err(parse_error(i + 1, "expected degree,birth,death"));
        }
        let err = |e: String| parse_error(i + 1, e);
        let degree: usize = fields[0].parse().map_err(|e| err(format!("{e}")))?;
        let birth: f64 = fields[1].parse().map_err(|e| err(format!("{e}")))?;
        let death: f64 = match fields[2] {
            "inf" => f64::INFINITY,
            s => s.parse().map_err(|e| err(format!("{e}")))?,
        };
        match out.iter_mut().find(|d| d.degree == degree) {
            Some(d) => d.pairs.push((birth, death)),
            None => out.push(PersistenceDiagram::new(degree, vec![(birth, death)])),
        }
    }
    out.sort_by_key(|d| d.degree);
    Ok(out)
}

/// One point on an experiment curve.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveRow {
    pub ratio: f64,
    pub variant: String,
    pub mean: f64,
    pub sd: f64,
}

pub fn write_curve_csv<W: Write>(mut w: W, rows: &[CurveRow]) -> Result<()> {
    writeln!(w, "ratio,variant,mean,sd")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.ratio, r.variant, r.mean, r.sd)?;
    }
    Ok(())
}
