//! File formats: edge lists, long-format panels, latent estimates, JSON
//! documents. Every writer goes through a temporary file in the target
//! directory and a rename, so readers never observe a partial file.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::lsm::LsmState;
use crate::network::Graph;
use crate::process::Panel;
use crate::{Error, Result};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Writes `bytes` to `path` atomically, creating missing parent directories.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(io_err(path))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(path))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e.error,
    })?;
    Ok(())
}

fn csv_bytes(header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::InvalidArgument(format!("csv encoding failed: {e}"));
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    w.into_inner()
        .map_err(|e| Error::InvalidArgument(format!("csv encoding failed: {e}")))
}

struct CsvRows {
    header: Vec<String>,
    rows: Vec<(usize, Vec<String>)>,
}

fn read_csv(path: &Path) -> Result<CsvRows> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut text = String::new();
    BufReader::new(file).read_to_string(&mut text).map_err(io_err(path))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| parse_err(path, 1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        rows.push((line, rec.iter().map(str::to_string).collect()));
    }
    Ok(CsvRows { header, rows })
}

fn expect_header(path: &Path, got: &[String], want: &[String]) -> Result<()> {
    if got != want {
        return Err(parse_err(
            path,
            1,
            format!("expected header `{}`, found `{}`", want.join(","), got.join(",")),
        ));
    }
    Ok(())
}

fn field<T: std::str::FromStr>(path: &Path, line: usize, name: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| parse_err(path, line, format!("cannot parse {name} value `{raw}`")))
}

fn fmt(v: f64) -> String {
    format!("{v:?}")
}

/// Reads an undirected edge list with header `src,dst` and 0-based ids.
/// The node count is `n` if given, otherwise one more than the largest id.
pub fn read_edges(path: &Path, n: Option<usize>) -> Result<Graph> {
    let csv = read_csv(path)?;
    expect_header(path, &csv.header, &["src".into(), "dst".into()])?;
    let mut edges = Vec::with_capacity(csv.rows.len());
    let mut seen = std::collections::HashSet::new();
    for (line, row) in &csv.rows {
        let a: usize = field(path, *line, "src", &row[0])?;
        let b: usize = field(path, *line, "dst", &row[1])?;
        if a == b {
            return Err(parse_err(path, *line, format!("self-loop on node {a}")));
        }
        if !seen.insert((a.min(b), a.max(b))) {
            return Err(parse_err(path, *line, format!("duplicate edge ({a}, {b})")));
        }
        if let Some(n) = n {
            if a >= n || b >= n {
                return Err(parse_err(path, *line, format!("node id outside 0..{n}")));
            }
        }
        edges.push((a, b));
    }
    let n = n.unwrap_or_else(|| edges.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(0));
    Graph::from_edges(n, &edges)
}

pub fn write_edges(path: &Path, g: &Graph) -> Result<()> {
    let rows = g.edges().into_iter().map(|(a, b)| vec![a.to_string(), b.to_string()]);
    write_atomic(path, &csv_bytes(&["src".into(), "dst".into()], rows)?)
}

fn panel_header(p: usize) -> Vec<String> {
    let mut h: Vec<String> = ["node", "t", "y"].iter().map(|s| s.to_string()).collect();
    h.extend((1..=p).map(|j| format!("z{j}")));
    h
}

/// Long format `node,t,y,z1..zp`, one row per node and `t = 0..=T`, ordered
/// by `t` then node. Covariates are blank at `t = T`.
pub fn write_panel(path: &Path, panel: &Panel) -> Result<()> {
    let (n, t_len, p) = (panel.n(), panel.t_len(), panel.p());
    let rows = (0..=t_len).flat_map(move |t| {
        (0..n).map(move |i| {
            let mut row = vec![i.to_string(), t.to_string(), fmt(panel.y()[(i, t)])];
            for j in 0..p {
                row.push(if t < t_len { fmt(panel.z()[t][(i, j)]) } else { String::new() });
            }
            row
        })
    });
    write_atomic(path, &csv_bytes(&panel_header(p), rows)?)
}

/// Reads the [`write_panel`] format. Rows may come in any order but every
/// `(node, t)` pair must appear exactly once.
pub fn read_panel(path: &Path) -> Result<Panel> {
    let csv = read_csv(path)?;
    let p = csv.header.len().saturating_sub(3);
    expect_header(path, &csv.header, &panel_header(p))?;
    let mut cells = Vec::with_capacity(csv.rows.len());
    let (mut n, mut t_max) = (0, 0);
    for (line, row) in &csv.rows {
        let i: usize = field(path, *line, "node", &row[0])?;
        let t: usize = field(path, *line, "t", &row[1])?;
        let y: f64 = field(path, *line, "y", &row[2])?;
        n = n.max(i + 1);
        t_max = t_max.max(t);
        cells.push((*line, i, t, y, &row[3..]));
    }
    if cells.is_empty() {
        return Err(parse_err(path, 1, "panel has no rows"));
    }
    let t_len = t_max;
    let mut y = DMatrix::from_element(n, t_len + 1, f64::NAN);
    let mut z = vec![DMatrix::from_element(n, p, f64::NAN); t_len];
    let mut filled = vec![false; n * (t_len + 1)];
    for (line, i, t, val, zs) in cells {
        if std::mem::replace(&mut filled[t * n + i], true) {
            return Err(parse_err(path, line, format!("duplicate row for node {i} at t = {t}")));
        }
        y[(i, t)] = val;
        for (j, raw) in zs.iter().enumerate() {
            if t < t_len {
                z[t][(i, j)] = field(path, line, &format!("z{}", j + 1), raw)?;
            } else if !raw.is_empty() {
                return Err(parse_err(path, line, "covariates must be blank at the final t"));
            }
        }
    }
    if let Some(pos) = filled.iter().position(|&f| !f) {
        return Err(parse_err(
            path,
            0,
            format!("missing row for node {} at t = {}", pos % n, pos / n),
        ));
    }
    Panel::new(y, z)
}

fn latent_header(k: usize) -> Vec<String> {
    let mut h = vec!["node".to_string(), "v".to_string()];
    h.extend((1..=k).map(|j| format!("q{j}")));
    h
}

/// Latent estimate as `node,v,q1..qK`.
pub fn write_latent(path: &Path, state: &LsmState) -> Result<()> {
    let rows = (0..state.n()).map(|i| {
        let mut row = vec![i.to_string(), fmt(state.v[i])];
        row.extend(state.q.row(i).iter().map(|&x| fmt(x)));
        row
    });
    write_atomic(path, &csv_bytes(&latent_header(state.k()), rows)?)
}

pub fn read_latent(path: &Path) -> Result<LsmState> {
    let csv = read_csv(path)?;
    let k = csv.header.len().saturating_sub(2);
    expect_header(path, &csv.header, &latent_header(k))?;
    let n = csv.rows.len();
    let mut q = DMatrix::zeros(n, k);
    let mut v = DVector::zeros(n);
    for (line, row) in &csv.rows {
        let i: usize = field(path, *line, "node", &row[0])?;
        if i >= n {
            return Err(parse_err(path, *line, format!("node id {i} outside 0..{n}")));
        }
        v[i] = field(path, *line, "v", &row[1])?;
        for j in 0..k {
            q[(i, j)] = field(path, *line, &format!("q{}", j + 1), &row[2 + j])?;
        }
    }
    LsmState::new(q, v)
}

/// Forecast as `node,y_hat`.
pub fn write_forecast(path: &Path, y_hat: &DVector<f64>) -> Result<()> {
    let rows = y_hat.iter().enumerate().map(|(i, &v)| vec![i.to_string(), fmt(v)]);
    write_atomic(path, &csv_bytes(&["node".into(), "y_hat".into()], rows)?)
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(io_err(path))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| parse_err(path, e.line(), e.to_string()))
}
