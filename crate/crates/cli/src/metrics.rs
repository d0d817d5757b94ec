//! Metric records as JSON lines (written during training) and as a merged
//! CSV export.
//!
//! A JSON line is an object with keys `run_id`, `iteration` and then every
//! column of [`METRIC_COLUMNS`], in that order; absent values are `null`.
//! The CSV has the header `run_id,iteration,<METRIC_COLUMNS>`, empty fields
//! for nulls and rows sorted by `(iteration, run_id)`.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc::{sync_channel, SyncSender};
use std::thread::JoinHandle;

use ctgan_core::diagnostics::{MetricRecord, METRIC_COLUMNS};
use serde_json::Value;

use crate::error::{CliError, CliResult};

const QUEUE_DEPTH: usize = 64;

fn number(v: f64) -> String {
    serde_json::to_string(&v).expect("f64 serializes")
}

pub fn json_line(run_id: &str, rec: &MetricRecord) -> String {
    let mut s = String::from("{\"run_id\":");
    s.push_str(&serde_json::to_string(run_id).expect("str serializes"));
    let _ = write!(s, ",\"iteration\":{}", rec.iteration);
    for (name, v) in METRIC_COLUMNS.iter().zip(rec.values()) {
        let _ = write!(s, ",\"{name}\":{}", v.map_or_else(|| "null".to_string(), number));
    }
    s.push('}');
    s
}

enum Msg {
    Line(String),
    Flush,
}

/// JSON-lines writer running on its own thread behind a bounded queue.
pub struct MetricWriter {
    tx: Option<SyncSender<Msg>>,
    handle: Option<JoinHandle<std::io::Result<()>>>,
    path: PathBuf,
    run_id: String,
}

impl MetricWriter {
    pub fn create(path: &Path, run_id: &str) -> CliResult<Self> {
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        let (tx, rx) = sync_channel::<Msg>(QUEUE_DEPTH);
        let handle = std::thread::spawn(move || {
            let mut out = BufWriter::new(file);
            for msg in rx {
                match msg {
                    Msg::Line(l) => {
                        out.write_all(l.as_bytes())?;
                        out.write_all(b"\n")?;
                    }
                    Msg::Flush => out.flush()?,
                }
            }
            out.flush()?;
            out.into_inner().map_err(|e| e.into_error())?.sync_all()
        });
        Ok(Self {
            tx: Some(tx),
            handle: Some(handle),
            path: path.to_path_buf(),
            run_id: run_id.to_string(),
        })
    }

    fn send(&self, msg: Msg) -> CliResult<()> {
        let tx = self.tx.as_ref().expect("writer open");
        tx.send(msg)
            .map_err(|_| CliError::Runtime(format!("{}: metric writer stopped", self.path.display())))
    }

    pub fn write(&self, rec: &MetricRecord) -> CliResult<()> {
        self.send(Msg::Line(json_line(&self.run_id, rec)))
    }

    pub fn flush(&self) -> CliResult<()> {
        self.send(Msg::Flush)
    }

    /// Drains the queue, flushes and joins the writer thread.
    pub fn finish(mut self) -> CliResult<()> {
        self.close()
    }

    fn close(&mut self) -> CliResult<()> {
        drop(self.tx.take());
        match self.handle.take() {
            Some(h) => h
                .join()
                .map_err(|_| CliError::Runtime("metric writer panicked".into()))?
                .map_err(|e| CliError::io(&self.path, e)),
            None => Ok(()),
        }
    }
}

impl Drop for MetricWriter {
    fn drop(&mut self) {
        let _ = self.close();
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub run_id: String,
    pub iteration: u64,
    pub values: [Option<f64>; 11],
}

impl Row {
    pub fn from_record(run_id: &str, rec: &MetricRecord) -> Self {
        Self {
            run_id: run_id.to_string(),
            iteration: rec.iteration,
            values: rec.values(),
        }
    }
}

fn parse_json_row(line: &str) -> Option<Row> {
    let obj = match serde_json::from_str::<Value>(line).ok()? {
        Value::Object(o) => o,
        _ => return None,
    };
    let run_id = obj.get("run_id")?.as_str()?.to_string();
    let iteration = obj.get("iteration")?.as_u64()?;
    let mut values = [None; 11];
    for (slot, name) in values.iter_mut().zip(METRIC_COLUMNS) {
        *slot = match obj.get(name) {
            None | Some(Value::Null) => None,
            Some(v) => Some(v.as_f64()?),
        };
    }
    if obj.keys().any(|k| k != "run_id" && k != "iteration" && !METRIC_COLUMNS.contains(&k.as_str())) {
        return None;
    }
    Some(Row {
        run_id,
        iteration,
        values,
    })
}

pub fn header() -> Vec<String> {
    ["run_id", "iteration"]
        .iter()
        .chain(METRIC_COLUMNS.iter())
        .map(|s| s.to_string())
        .collect()
}

fn parse_csv_row(rec: &csv::StringRecord) -> Option<Row> {
    if rec.len() != 2 + METRIC_COLUMNS.len() {
        return None;
    }
    let mut values = [None; 11];
    for (slot, field) in values.iter_mut().zip(rec.iter().skip(2)) {
        *slot = if field.is_empty() { None } else { Some(field.parse().ok()?) };
    }
    Some(Row {
        run_id: rec[0].to_string(),
        iteration: rec[1].parse().ok()?,
        values,
    })
}

/// Rows read from an export source plus the number of malformed records
/// that were skipped.
#[derive(Debug, Default)]
pub struct Collected {
    pub rows: Vec<Row>,
    pub skipped: usize,
}

fn read_jsonl(path: &Path, out: &mut Collected) -> CliResult<()> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        match parse_json_row(line) {
            Some(r) => out.rows.push(r),
            None => out.skipped += 1,
        }
    }
    Ok(())
}

fn read_csv(path: &Path, out: &mut Collected) -> CliResult<()> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    let head = rdr
        .headers()
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?
        .clone();
    if head.iter().collect::<Vec<_>>() != header() {
        return Err(CliError::Runtime(format!("{}: not a metrics export", path.display())));
    }
    for rec in rdr.records() {
        match rec.ok().as_ref().and_then(parse_csv_row) {
            Some(r) => out.rows.push(r),
            None => out.skipped += 1,
        }
    }
    Ok(())
}

fn jsonl_files(dir: &Path, depth: usize, out: &mut Vec<PathBuf>) -> CliResult<()> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    for entry in entries {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        if path.is_dir() {
            if depth > 0 {
                jsonl_files(&path, depth - 1, out)?;
            }
        } else if path.extension().is_some_and(|e| e == "jsonl") {
            out.push(path);
        }
    }
    Ok(())
}

/// Reads every `*.jsonl` file in `source` and its immediate subdirectories,
/// or a previously exported CSV file.
pub fn collect(source: &Path) -> CliResult<Collected> {
    let mut out = Collected::default();
    if source.is_dir() {
        let mut files = Vec::new();
        jsonl_files(source, 1, &mut files)?;
        files.sort();
        for f in files {
            read_jsonl(&f, &mut out)?;
        }
    } else if source.is_file() {
        read_csv(source, &mut out)?;
    } else {
        return Err(CliError::Runtime(format!("{}: no such file or directory", source.display())));
    }
    Ok(out)
}

pub fn csv_bytes(rows: &[Row]) -> CliResult<Vec<u8>> {
    let mut sorted: Vec<&Row> = rows.iter().collect();
    sorted.sort_by(|a, b| (a.iteration, &a.run_id).cmp(&(b.iteration, &b.run_id)));
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Runtime(e.to_string());
    w.write_record(header()).map_err(err)?;
    for r in sorted {
        let mut fields = vec![r.run_id.clone(), r.iteration.to_string()];
        fields.extend(r.values.iter().map(|v| v.map(number).unwrap_or_default()));
        w.write_record(&fields).map_err(err)?;
    }
    w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))
}

pub fn write_csv(path: &Path, rows: &[Row]) -> CliResult<()> {
    std::fs::write(path, csv_bytes(rows)?).map_err(|e| CliError::io(path, e))
}
