use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sme_core::model_space::{circular_ar_graph, four_cycle_graph, lattice_graph, mathmarks_graph};
use sme_core::{ColouredGraph, ModelSpace};

pub const MODEL_SCHEMA: &str = "sme-model/1";

/// Comma-separated numeric data, rows are observations. A first row that
/// does not parse as numbers is taken as a header.
pub fn read_dataset(path: &Path) -> Result<DMatrix<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot open dataset {}", path.display()))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("{}: malformed CSV", path.display()))?;
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(values) => {
                if let Some(j) = values.iter().position(|v| !v.is_finite()) {
                    bail!("{}: row {}, column {}: value is not finite", path.display(), i + 1, j + 1);
                }
                rows.push(values);
            }
            Err(_) if i == 0 => continue,
            Err(e) => bail!("{}: row {}: {e}", path.display(), i + 1),
        }
    }
    if rows.is_empty() {
        bail!("{}: no data rows", path.display());
    }
    let p = rows[0].len();
    if let Some(i) = rows.iter().position(|r| r.len() != p) {
        bail!("{}: data row {} has {} columns, expected {p}", path.display(), i + 1, rows[i].len());
    }
    Ok(DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]))
}

pub fn write_dataset(data: &DMatrix<f64>, out: &mut dyn Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record((0..data.ncols()).map(|j| format!("x{j}")))?;
    for row in data.row_iter() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ModelFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    pub p: usize,
    pub vertex_classes: Vec<Vec<usize>>,
    pub edge_classes: Vec<Vec<(usize, usize)>>,
}

impl ModelFile {
    pub fn from_graph(g: &ColouredGraph) -> Self {
        ModelFile {
            schema: Some(MODEL_SCHEMA.into()),
            p: g.num_vertices(),
            vertex_classes: g.vertex_classes().to_vec(),
            edge_classes: g.edge_classes().to_vec(),
        }
    }

    pub fn graph(&self) -> Result<ColouredGraph> {
        Ok(ColouredGraph::new(self.p, self.vertex_classes.clone(), self.edge_classes.clone())?)
    }
}

/// Model given as a JSON model file path or a `builtin:` name.
pub enum ModelSource {
    Graph(ColouredGraph),
    Space(ModelSpace),
}

impl ModelSource {
    pub fn space(&self) -> ModelSpace {
        match self {
            ModelSource::Graph(g) => ModelSpace::from_graph(g),
            ModelSource::Space(l) => l.clone(),
        }
    }
}

fn builtin(name: &str) -> Result<ModelSource> {
    let parse = |s: &str| s.parse::<usize>().with_context(|| format!("bad number in builtin model {name:?}"));
    let g = match name {
        "four-cycle" => four_cycle_graph(),
        "mathmarks" => mathmarks_graph(),
        "jordan4" => return Ok(ModelSource::Space(ModelSpace::jordan_counterexample())),
        _ if name.starts_with("lattice-") => lattice_graph(parse(&name["lattice-".len()..])?)?,
        _ if name.starts_with("circular-") => {
            let rest = &name["circular-".len()..];
            let (p, q) = rest.split_once('-').with_context(|| format!("expected circular-P-Q, got {name:?}"))?;
            circular_ar_graph(parse(p)?, parse(q)?)?
        }
        "diagonal" | "full" => bail!("builtin {name:?} needs a size, e.g. {name}-4"),
        _ if name.starts_with("diagonal-") => {
            return Ok(ModelSource::Space(ModelSpace::diagonal(parse(&name["diagonal-".len()..])?)))
        }
        _ if name.starts_with("full-") => return Ok(ModelSource::Space(ModelSpace::full(parse(&name["full-".len()..])?))),
        _ => bail!(
            "unknown builtin model {name:?}; known: four-cycle, mathmarks, jordan4, lattice-S, circular-P-Q, diagonal-P, full-P"
        ),
    };
    Ok(ModelSource::Graph(g))
}

pub fn read_model(source: &str) -> Result<ModelSource> {
    if let Some(name) = source.strip_prefix("builtin:") {
        return builtin(name);
    }
    let text = fs::read_to_string(source).with_context(|| format!("cannot read model file {source}"))?;
    let file: ModelFile = serde_json::from_str(&text).with_context(|| format!("{source}: invalid model file"))?;
    if let Some(s) = &file.schema {
        if s != MODEL_SCHEMA {
            bail!("{source}: unsupported model schema {s:?}, expected {MODEL_SCHEMA:?}");
        }
    }
    Ok(ModelSource::Graph(file.graph()?))
}

/// `1,2,5` or inclusive ranges `1..10`, mixed freely.
pub fn parse_usize_list(s: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let (a, b): (usize, usize) = (a.trim().parse()?, b.trim().parse()?);
            if a > b {
                bail!("empty range {part:?}");
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().with_context(|| format!("not a non-negative integer: {part:?}"))?);
        }
    }
    if out.is_empty() {
        bail!("empty list");
    }
    Ok(out)
}

pub fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(
            fs::File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}
