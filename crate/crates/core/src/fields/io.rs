//! GRID2D v1 text format and the 3-field metric bundle.
//!
//! Layout: a header line `GRID2D nx ny x0 y0 h`, followed by `nx*ny`
//! whitespace-separated decimal floats, row-major with the y-index outermost.
//! Writers emit 17 significant digits; readers accept scientific notation.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::fields::grid::Grid2D;
use crate::fields::scalar::{ScalarField2D, SymMatrixField2D};

/// 17 significant digits, the format every writer in the toolkit uses.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_grid2d_string(field: &ScalarField2D) -> String {
    let g = field.grid();
    let mut out = String::with_capacity(field.values().len() * 24 + 64);
    let _ = writeln!(
        out,
        "GRID2D {} {} {} {} {}",
        g.nx,
        g.ny,
        fmt_f64(g.x0),
        fmt_f64(g.y0),
        fmt_f64(g.h)
    );
    for j in 0..g.ny {
        for i in 0..g.nx {
            out.push_str(&fmt_f64(field.at(i, j)));
            out.push(if i + 1 == g.nx { '\n' } else { ' ' });
        }
    }
    out
}

pub fn write_grid2d(path: &Path, field: &ScalarField2D) -> Result<()> {
    fs::write(path, write_grid2d_string(field))?;
    Ok(())
}

pub fn parse_grid2d(text: &str) -> Result<ScalarField2D> {
    let mut tokens = text.split_whitespace();
    let magic = tokens
        .next()
        .ok_or_else(|| Error::MalformedGrid("empty input".into()))?;
    if magic != "GRID2D" {
        return Err(Error::MalformedGrid(format!(
            "expected GRID2D header, found {magic:?}"
        )));
    }
    let mut header = |name: &str| -> Result<f64> {
        tokens
            .next()
            .ok_or_else(|| Error::MalformedGrid(format!("missing header field {name}")))?
            .parse::<f64>()
            .map_err(|e| Error::MalformedGrid(format!("bad header field {name}: {e}")))
    };
    let nx = header("nx")? as usize;
    let ny = header("ny")? as usize;
    let x0 = header("x0")?;
    let y0 = header("y0")?;
    let h = header("h")?;
    let grid = Grid2D::new(nx, ny, x0, y0, h)?;
    let mut values = Vec::with_capacity(grid.len());
    for tok in tokens {
        let v: f64 = tok
            .parse()
            .map_err(|e| Error::MalformedGrid(format!("bad value {tok:?}: {e}")))?;
        values.push(v);
    }
    if values.len() != grid.len() {
        return Err(Error::MalformedGrid(format!(
            "expected {} values, found {}",
            grid.len(),
            values.len()
        )));
    }
    ScalarField2D::new(grid, values)
}

pub fn read_grid2d(path: &Path) -> Result<ScalarField2D> {
    parse_grid2d(&fs::read_to_string(path)?)
}

#[derive(Deserialize)]
struct BundleManifest {
    g11: String,
    g12: String,
    g22: String,
    lambda: f64,
}

/// Write a metric as three GRID2D files plus a JSON manifest carrying lambda.
///
/// Returns the manifest path. File names derive from `stem`.
pub fn write_metric_bundle(dir: &Path, stem: &str, g: &SymMatrixField2D) -> Result<PathBuf> {
    let lambda = g.lambda().ok_or_else(|| {
        Error::PreconditionFailed("metric bundle requires a metric-flagged field".into())
    })?;
    fs::create_dir_all(dir)?;
    let names = [
        format!("{stem}_g11.grid"),
        format!("{stem}_g12.grid"),
        format!("{stem}_g22.grid"),
    ];
    write_grid2d(&dir.join(&names[0]), &g.g11)?;
    write_grid2d(&dir.join(&names[1]), &g.g12)?;
    write_grid2d(&dir.join(&names[2]), &g.g22)?;
    let manifest = format!(
        "{{\n  \"g11\": \"{}\",\n  \"g12\": \"{}\",\n  \"g22\": \"{}\",\n  \"lambda\": {}\n}}\n",
        names[0],
        names[1],
        names[2],
        fmt_f64(lambda)
    );
    let mpath = dir.join(format!("{stem}_metric.json"));
    fs::write(&mpath, manifest)?;
    Ok(mpath)
}

pub fn read_metric_bundle(manifest_path: &Path) -> Result<SymMatrixField2D> {
    let text = fs::read_to_string(manifest_path)?;
    let m: BundleManifest = serde_json::from_str(&text)
        .map_err(|e| Error::MalformedGrid(format!("bad metric manifest: {e}")))?;
    let dir = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let g11 = read_grid2d(&dir.join(&m.g11))?;
    let g12 = read_grid2d(&dir.join(&m.g12))?;
    let g22 = read_grid2d(&dir.join(&m.g22))?;
    SymMatrixField2D::metric(g11, g12, g22, m.lambda)
}
