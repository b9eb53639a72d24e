//! Plain-text storage for grid functions and weight tuples.
//!
//! A grid function named `f` is stored as `f.csv` with one row per `x₁` cell
//! and one column per `x₂` cell, next to a header `f.json` holding the depths
//! and the name. Values are printed in shortest round-trip form, so a
//! store/load cycle reproduces every bit.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::ExponentTuple;
use crate::function::GridFunction;
use crate::grid::ProductGrid;
use crate::weights::Weight;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridHeader {
    pub depths: [u32; 2],
    pub name: String,
}

pub fn write_csv(f: &GridFunction, out: impl std::io::Write) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    let cols = f.grid().cols();
    for row in f.values().chunks(cols) {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(grid: ProductGrid, input: impl std::io::Read) -> Result<GridFunction> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
    let mut values = Vec::with_capacity(grid.cell_count());
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != grid.cols() {
            return Err(Error::InvalidInput(format!("row {i} has {} columns, expected {}", rec.len(), grid.cols())));
        }
        for field in rec.iter() {
            values.push(
                field
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidInput(format!("row {i}: cannot parse {field:?}: {e}")))?,
            );
        }
    }
    GridFunction::from_values(grid, values)
}

fn stem(dir: &Path, name: &str) -> (PathBuf, PathBuf) {
    (dir.join(format!("{name}.csv")), dir.join(format!("{name}.json")))
}

/// Writes `<dir>/<name>.csv` and `<dir>/<name>.json`.
pub fn store_function(f: &GridFunction, dir: &Path, name: &str) -> Result<()> {
    let (csv_path, json_path) = stem(dir, name);
    let g = f.grid();
    let header = GridHeader { depths: [g.n1, g.n2], name: name.to_string() };
    fs::write(json_path, serde_json::to_string_pretty(&header)? + "\n")?;
    write_csv(f, fs::File::create(csv_path)?)
}

/// Reads the pair written by [`store_function`]; `path` may name either file or the common stem.
pub fn load_function(path: &Path) -> Result<(GridHeader, GridFunction)> {
    let base = path.with_extension("");
    let header: GridHeader = serde_json::from_str(&fs::read_to_string(base.with_extension("json"))?)?;
    let grid = ProductGrid::new(header.depths[0], header.depths[1])?;
    let f = read_csv(grid, fs::File::open(base.with_extension("csv"))?)?;
    Ok((header, f))
}

/// `{n, p_vec, slot_j, files}` with file stems relative to the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TupleManifest {
    pub n: usize,
    pub p_vec: ExponentTuple,
    /// One-based Bloom slot.
    pub slot_j: usize,
    pub files: Vec<String>,
    /// `λ_j`, when the tuple carries one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<String>,
}

#[derive(Debug, Clone)]
pub struct WeightTupleFile {
    pub p: ExponentTuple,
    pub slot: usize,
    pub ws: Vec<Weight>,
    pub lambda: Option<Weight>,
}

/// Writes `w1 … wn` (and `lambda`) plus `manifest.json` into `dir`.
pub fn store_tuple(t: &WeightTupleFile, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for (i, w) in t.ws.iter().enumerate() {
        let name = format!("w{}", i + 1);
        store_function(w.function(), dir, &name)?;
        files.push(name);
    }
    let lambda = match &t.lambda {
        Some(l) => {
            store_function(l.function(), dir, "lambda")?;
            Some("lambda".to_string())
        }
        None => None,
    };
    let m = TupleManifest { n: t.ws.len(), p_vec: t.p.clone(), slot_j: t.slot, files, lambda };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&m)? + "\n")?;
    Ok(())
}

pub fn load_tuple(manifest: &Path) -> Result<WeightTupleFile> {
    let m: TupleManifest = serde_json::from_str(&fs::read_to_string(manifest)?)?;
    if m.files.len() != m.n || m.p_vec.len() != m.n {
        return Err(Error::Arity { expected: m.n, found: m.files.len().min(m.p_vec.len()) });
    }
    if m.slot_j == 0 || m.slot_j > m.n {
        return Err(Error::InvalidSlots(format!("slot_j = {} is outside 1..={}", m.slot_j, m.n)));
    }
    let dir = manifest.parent().unwrap_or(Path::new("."));
    let load = |name: &str| -> Result<Weight> { Weight::new(load_function(&dir.join(name))?.1) };
    let ws = m.files.iter().map(|f| load(f)).collect::<Result<Vec<_>>>()?;
    let grid = ws[0].grid();
    for w in &ws {
        grid.check_same(w.grid())?;
    }
    let lambda = m.lambda.as_deref().map(load).transpose()?;
    Ok(WeightTupleFile { p: m.p_vec, slot: m.slot_j, ws, lambda })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{uniform_function, uniform_positive};

    #[test]
    fn csv_layout_and_bit_exact_roundtrip() {
        let g = ProductGrid::new(2, 3).unwrap();
        let f = uniform_function(g, 11).map(|v| v * 1e-7 + 1.0 / 3.0);
        let mut buf = Vec::new();
        write_csv(&f, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.lines().all(|l| l.split(',').count() == 8));
        let back = read_csv(g, buf.as_slice()).unwrap();
        assert!(f.values().iter().zip(back.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn rejects_malformed_csv() {
        let g = ProductGrid::new(1, 1).unwrap();
        assert!(read_csv(g, "1,2\n3\n".as_bytes()).is_err());
        assert!(read_csv(g, "1,x\n3,4\n".as_bytes()).is_err());
        assert!(read_csv(g, "1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn tuple_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let g = ProductGrid::new(2, 2).unwrap();
        let w = |s| Weight::new(uniform_positive(g, 0.5, 2.0, s)).unwrap();
        let t = WeightTupleFile {
            p: ExponentTuple::from_values(&[2.0, 3.0]).unwrap(),
            slot: 1,
            ws: vec![w(1), w(2)],
            lambda: Some(w(3)),
        };
        store_tuple(&t, dir.path()).unwrap();
        let back = load_tuple(&dir.path().join("manifest.json")).unwrap();
        assert_eq!(back.p, t.p);
        assert_eq!(back.ws, t.ws);
        assert_eq!(back.lambda, t.lambda);
        let (h, f) = load_function(&dir.path().join("w2.csv")).unwrap();
        assert_eq!(h, GridHeader { depths: [2, 2], name: "w2".into() });
        assert_eq!(&f, t.ws[1].function());
    }
}
