//! Results and snapshot CSV files.

use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::samplers::SamplerKind;
use crate::simbench::{GraphType, RunRecord, RunStatus};

pub const RESULTS_HEADER: &str = "# ggmsl-results v1";
pub const SNAPSHOTS_HEADER: &str = "# ggmsl-snapshots v1";

pub const RESULT_COLUMNS: [&str; 14] = [
    "run_id",
    "algorithm",
    "graph_type",
    "p",
    "n",
    "replication",
    "master_seed",
    "iterations",
    "auc",
    "mamse",
    "mse",
    "cost_seconds",
    "wall_seconds",
    "status",
];

pub const SNAPSHOT_COLUMNS: [&str; 8] = ["run_id", "algorithm", "graph_type", "p", "n", "replication", "seconds", "auc"];

/// Six significant digits without trailing zeros; `NaN` stays `NaN`.
pub fn fmt_sig(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".into();
    }
    let mag = x.abs().log10().floor() as i32;
    let s = if (-4..6).contains(&mag) {
        format!("{:.*}", (5 - mag).max(0) as usize, x)
    } else {
        format!("{x:.5e}")
    };
    trim_zeros(&s)
}

/// Seconds at millisecond resolution.
pub fn fmt_ms(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.3}")
    } else {
        format!("{x}")
    }
}

fn trim_zeros(s: &str) -> String {
    let (mant, exp) = match s.find('e') {
        Some(k) => (&s[..k], &s[k..]),
        None => (s, ""),
    };
    let mant = if mant.contains('.') { mant.trim_end_matches('0').trim_end_matches('.') } else { mant };
    format!("{mant}{exp}")
}

/// Results row in file form.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub run_id: String,
    pub algorithm: SamplerKind,
    pub graph_type: GraphType,
    pub p: usize,
    pub n: usize,
    pub replication: usize,
    pub master_seed: u64,
    pub iterations: usize,
    pub auc: f64,
    pub mamse: f64,
    pub mse: f64,
    pub cost_seconds: f64,
    pub wall_seconds: f64,
    pub status: RunStatus,
}

impl From<&RunRecord> for ResultRow {
    fn from(r: &RunRecord) -> Self {
        Self {
            run_id: r.run_id.clone(),
            algorithm: r.algorithm,
            graph_type: r.graph_type,
            p: r.p,
            n: r.n,
            replication: r.replication,
            master_seed: r.master_seed,
            iterations: r.iterations,
            auc: r.auc,
            mamse: r.mamse,
            mse: r.mse,
            cost_seconds: r.cost_seconds,
            wall_seconds: r.wall_seconds,
            status: r.status,
        }
    }
}

impl ResultRow {
    fn fields(&self) -> [String; 14] {
        [
            self.run_id.clone(),
            self.algorithm.name().into(),
            self.graph_type.name().into(),
            self.p.to_string(),
            self.n.to_string(),
            self.replication.to_string(),
            self.master_seed.to_string(),
            self.iterations.to_string(),
            fmt_sig(self.auc),
            fmt_sig(self.mamse),
            fmt_sig(self.mse),
            fmt_ms(self.cost_seconds),
            fmt_ms(self.wall_seconds),
            self.status.name().into(),
        ]
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.position() {
        Some(pos) => Error::Parse { line: pos.line() as usize, message: e.to_string() },
        None => Error::Io(e.to_string()),
    }
}

/// Appends rows to a results file, writing the header when the file is new
/// or empty. A partial trailing line left by an interrupted run is dropped.
pub struct ResultsWriter {
    inner: csv::Writer<File>,
}

impl ResultsWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let mut f = File::create(path)?;
        writeln!(f, "{RESULTS_HEADER}")?;
        Self::start(f, true)
    }

    pub fn append(path: &Path) -> Result<Self> {
        if !path.exists() || std::fs::metadata(path)?.len() == 0 {
            return Self::create(path);
        }
        repair_tail(path)?;
        check_version(&std::fs::read_to_string(path)?, RESULTS_HEADER)?;
        Self::start(OpenOptions::new().append(true).open(path)?, false)
    }

    fn start(f: File, header: bool) -> Result<Self> {
        let mut inner = csv::WriterBuilder::new().has_headers(false).from_writer(f);
        if header {
            inner.write_record(RESULT_COLUMNS).map_err(csv_err)?;
        }
        inner.flush()?;
        Ok(Self { inner })
    }

    pub fn write(&mut self, row: &ResultRow) -> Result<()> {
        self.inner.write_record(row.fields()).map_err(csv_err)?;
        self.inner.flush()?;
        Ok(())
    }
}

pub fn repair_tail(path: &Path) -> Result<()> {
    let mut text = String::new();
    File::open(path)?.read_to_string(&mut text)?;
    if !text.is_empty() && !text.ends_with('\n') {
        let keep = text.rfind('\n').map_or(0, |k| k + 1);
        log::warn!("{}: dropping an incomplete last line", path.display());
        std::fs::write(path, &text[..keep])?;
    }
    Ok(())
}

fn check_version(text: &str, header: &str) -> Result<()> {
    let first = text.lines().next().unwrap_or("").trim();
    if first != header {
        return Err(Error::Parse { line: 1, message: format!("expected `{header}`, found `{first}`") });
    }
    Ok(())
}

struct Table {
    columns: Vec<String>,
    rows: Vec<(usize, csv::StringRecord)>,
}

impl Table {
    fn read(text: &str, header: &str, required: &[&str]) -> Result<Self> {
        check_version(text, header)?;
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let columns: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(|s| s.trim().to_string()).collect();
        for c in required {
            if !columns.iter().any(|x| x == c) {
                return Err(Error::Parse { line: 2, message: format!("missing column `{c}`") });
            }
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            rows.push((line, rec));
        }
        Ok(Self { columns, rows })
    }

    fn col(&self, name: &str) -> usize {
        self.columns.iter().position(|c| c == name).expect("checked")
    }

    fn get<T: std::str::FromStr>(&self, line: usize, rec: &csv::StringRecord, name: &str) -> Result<T> {
        let raw = rec.get(self.col(name)).unwrap_or("").trim();
        raw.parse().map_err(|_| Error::Parse { line, message: format!("column `{name}`: bad value `{raw}`") })
    }
}

fn parse_kind(line: usize, s: &str) -> Result<SamplerKind> {
    SamplerKind::from_name(s).ok_or_else(|| Error::Parse { line, message: format!("unknown algorithm `{s}`") })
}

fn parse_graph(line: usize, s: &str) -> Result<GraphType> {
    GraphType::from_name(s).ok_or_else(|| Error::Parse { line, message: format!("unknown graph type `{s}`") })
}

pub fn parse_results(text: &str) -> Result<Vec<ResultRow>> {
    let t = Table::read(text, RESULTS_HEADER, &RESULT_COLUMNS)?;
    let mut out = Vec::with_capacity(t.rows.len());
    for (line, rec) in &t.rows {
        let line = *line;
        let s = |name: &str| rec.get(t.col(name)).unwrap_or("").trim().to_string();
        let status = match s("status").as_str() {
            "ok" => RunStatus::Ok,
            "failed" => RunStatus::Failed,
            other => return Err(Error::Parse { line, message: format!("column `status`: bad value `{other}`") }),
        };
        out.push(ResultRow {
            run_id: s("run_id"),
            algorithm: parse_kind(line, &s("algorithm"))?,
            graph_type: parse_graph(line, &s("graph_type"))?,
            p: t.get(line, rec, "p")?,
            n: t.get(line, rec, "n")?,
            replication: t.get(line, rec, "replication")?,
            master_seed: t.get(line, rec, "master_seed")?,
            iterations: t.get(line, rec, "iterations")?,
            auc: t.get(line, rec, "auc")?,
            mamse: t.get(line, rec, "mamse")?,
            mse: t.get(line, rec, "mse")?,
            cost_seconds: t.get(line, rec, "cost_seconds")?,
            wall_seconds: t.get(line, rec, "wall_seconds")?,
            status,
        });
    }
    Ok(out)
}

/// One `(seconds, AUC)` point of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotRow {
    pub run_id: String,
    pub algorithm: SamplerKind,
    pub graph_type: GraphType,
    pub p: usize,
    pub n: usize,
    pub replication: usize,
    pub seconds: f64,
    pub auc: f64,
}

pub fn snapshot_rows(r: &RunRecord) -> Vec<SnapshotRow> {
    r.auc_series
        .iter()
        .map(|&(seconds, auc)| SnapshotRow {
            run_id: r.run_id.clone(),
            algorithm: r.algorithm,
            graph_type: r.graph_type,
            p: r.p,
            n: r.n,
            replication: r.replication,
            seconds,
            auc,
        })
        .collect()
}

pub struct SnapshotWriter {
    inner: csv::Writer<File>,
}

impl SnapshotWriter {
    pub fn open(path: &Path, append: bool) -> Result<Self> {
        let fresh = !append || !path.exists() || std::fs::metadata(path)?.len() == 0;
        let f = if fresh {
            let mut f = File::create(path)?;
            writeln!(f, "{SNAPSHOTS_HEADER}")?;
            f
        } else {
            repair_tail(path)?;
            check_version(&std::fs::read_to_string(path)?, SNAPSHOTS_HEADER)?;
            OpenOptions::new().append(true).open(path)?
        };
        let mut inner = csv::WriterBuilder::new().has_headers(false).from_writer(f);
        if fresh {
            inner.write_record(SNAPSHOT_COLUMNS).map_err(csv_err)?;
        }
        Ok(Self { inner })
    }

    pub fn write(&mut self, rows: &[SnapshotRow]) -> Result<()> {
        for r in rows {
            self.inner
                .write_record([
                    r.run_id.clone(),
                    r.algorithm.name().into(),
                    r.graph_type.name().into(),
                    r.p.to_string(),
                    r.n.to_string(),
                    r.replication.to_string(),
                    fmt_ms(r.seconds),
                    fmt_sig(r.auc),
                ])
                .map_err(csv_err)?;
        }
        self.inner.flush()?;
        Ok(())
    }
}

pub fn parse_snapshots(text: &str) -> Result<Vec<SnapshotRow>> {
    let t = Table::read(text, SNAPSHOTS_HEADER, &SNAPSHOT_COLUMNS)?;
    let mut out = Vec::with_capacity(t.rows.len());
    for (line, rec) in &t.rows {
        let line = *line;
        let s = |name: &str| rec.get(t.col(name)).unwrap_or("").trim().to_string();
        out.push(SnapshotRow {
            run_id: s("run_id"),
            algorithm: parse_kind(line, &s("algorithm"))?,
            graph_type: parse_graph(line, &s("graph_type"))?,
            p: t.get(line, rec, "p")?,
            n: t.get(line, rec, "n")?,
            replication: t.get(line, rec, "replication")?,
            seconds: t.get(line, rec, "seconds")?,
            auc: t.get(line, rec, "auc")?,
        });
    }
    Ok(out)
}
