use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Map, Value};
use tensorreg::dtf;
use tensorreg::ingest::{ingest_csv_path, FillPolicy, IngestOptions, LabelOrder, Panel};
use tensorreg::{DenseTensor, Error};

use crate::Global;

#[derive(Debug)]
pub enum CliError {
    Clap(clap::Error),
    Usage(String),
    Core(Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Clap(_) | CliError::Usage(_) => 2,
            CliError::Core(e) => match e {
                Error::InvalidArgument(_) | Error::InvalidRank(_) | Error::InvalidPartition(_) => 2,
                Error::Numerical(_) => 4,
                _ => 3,
            },
        }
    }

    /// One-line JSON error record for stderr.
    pub fn record(&self) -> String {
        let (kind, message) = match self {
            CliError::Clap(e) => ("usage", e.render().to_string().trim().to_string()),
            CliError::Usage(m) => ("usage", m.clone()),
            CliError::Core(e) => (e.kind(), e.to_string()),
        };
        json!({ "error": kind, "message": message, "exit_code": self.exit_code() }).to_string()
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub struct Context {
    pub command: &'static str,
    pub seed: u64,
    pub jobs: usize,
    out: Option<PathBuf>,
    timestamp: bool,
    echo: Value,
}

impl Context {
    pub fn new(command: &'static str, global: &Global, echo: Value) -> CliResult<Self> {
        if let Some(dir) = &global.out {
            std::fs::create_dir_all(dir).map_err(Error::from)?;
        }
        Ok(Context {
            command,
            seed: global.seed.unwrap_or(0),
            jobs: global.jobs,
            out: global.out.clone(),
            timestamp: !global.no_timestamp,
            echo,
        })
    }

    pub fn writes_files(&self) -> bool {
        self.out.is_some()
    }

    /// Writes `name` under the output directory, if there is one.
    pub fn write_file(&self, name: &str, bytes: &[u8]) -> CliResult<()> {
        if let Some(dir) = &self.out {
            std::fs::write(dir.join(name), bytes).map_err(Error::from)?;
        }
        Ok(())
    }

    pub fn write_csv(&self, name: &str, f: impl FnOnce(&mut Vec<u8>) -> tensorreg::Result<()>) -> CliResult<()> {
        if !self.writes_files() {
            return Ok(());
        }
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write_file(name, &buf)
    }

    pub fn write_tensor(&self, name: &str, t: &DenseTensor) -> CliResult<()> {
        if self.writes_files() {
            self.write_file(name, &dtf::to_bytes(t))?;
        }
        Ok(())
    }

    /// Adds the command name, resolved configuration and timestamp, prints the
    /// summary and stores it as `summary.json`.
    pub fn finish(&self, body: Value) -> CliResult<()> {
        let mut map = match body {
            Value::Object(m) => m,
            other => {
                let mut m = Map::new();
                m.insert("result".into(), other);
                m
            }
        };
        map.insert("command".into(), json!(self.command));
        map.insert("config".into(), self.echo.clone());
        map.insert("tensorreg_version".into(), json!(env!("CARGO_PKG_VERSION")));
        if self.timestamp {
            let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            map.insert("timestamp_unix".into(), json!(secs));
        }
        let text = serde_json::to_string_pretty(&Value::Object(map)).expect("summary serialises") + "\n";
        self.write_file("summary.json", text.as_bytes())?;
        print!("{}", text);
        Ok(())
    }
}

/// Loads a tensor from DTF1 (`.dtf`) or a long-format CSV whose last column
/// holds the values and every other column is a mode, sample mode first.
pub fn load_panel(path: &Path, fill: FillPolicy, lexicographic: bool) -> CliResult<Panel> {
    if path.extension().is_some_and(|e| e == "dtf") {
        let tensor = dtf::load(path)?;
        let labels = tensor.shape().iter().map(|&n| (0..n).map(|i| i.to_string()).collect()).collect();
        let mode_names = (0..tensor.order()).map(|m| format!("mode{}", m)).collect();
        return Ok(Panel { tensor, labels, mode_names, value_name: "value".into() });
    }
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Ingest(format!("cannot read {}: {}", path.display(), e)))?;
    let header: Vec<String> = text.lines().next().unwrap_or("").split(',').map(|s| s.trim().to_string()).collect();
    if header.len() < 2 {
        return Err(Error::Ingest(format!("{}: need at least one mode column and a value column", path.display())).into());
    }
    let (value, modes) = header.split_last().expect("header has columns");
    let opts = IngestOptions {
        mode_columns: modes.to_vec(),
        value_column: value.clone(),
        fill,
        order: if lexicographic { LabelOrder::Lexicographic } else { LabelOrder::FirstSeen },
    };
    Ok(ingest_csv_path(path, &opts)?)
}

/// One number per line; a non-numeric first line is taken as a header.
pub fn read_errors(path: &Path) -> CliResult<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Ingest(format!("cannot read {}: {}", path.display(), e)))?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let cell = line.split(',').next_back().unwrap_or("").trim();
        if cell.is_empty() {
            continue;
        }
        match tensorreg::format::parse_f64(cell) {
            Some(v) => out.push(v),
            None if n == 0 => {}
            None => {
                return Err(Error::Ingest(format!("{} line {}: '{}' is not a number", path.display(), n + 1, cell)).into())
            }
        }
    }
    Ok(out)
}
