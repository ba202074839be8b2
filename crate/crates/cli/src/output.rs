use std::io::{self, Write};

use serde::Serialize;
use serde_json::{json, Value};

use xorgap::pipeline::PipelineReport;

use crate::CliError;

/// Serialized line writer over stdout.
pub struct Out {
    sink: io::BufWriter<io::Stdout>,
}

impl Out {
    pub fn new() -> Self {
        Self {
            sink: io::BufWriter::new(io::stdout()),
        }
    }

    pub fn json<T: Serialize>(&mut self, value: &T) -> Result<(), CliError> {
        let line = serde_json::to_string(value).map_err(|e| CliError::Validation(e.to_string()))?;
        self.line(&line)
    }

    pub fn line(&mut self, text: &str) -> Result<(), CliError> {
        writeln!(self.sink, "{text}").map_err(io_error)
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.sink.flush().map_err(io_error)
    }
}

pub fn io_error(e: io::Error) -> CliError {
    CliError::Validation(format!("I/O error: {e}"))
}

/// First line of every report: command, seed and the full configuration.
pub fn header<T: Serialize>(command: &str, seed: Option<u64>, config: &T) -> Value {
    json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
        "config": config,
    })
}

pub const CSV_COLUMNS: &str = "id,n_vars,n_cons,baseline,sdp1,sdp2,final,opt,margin,consistency,seed,ms";

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn csv_row(r: &PipelineReport) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{}",
        r.id,
        r.n_vars,
        r.n_cons,
        r.baseline,
        r.sdp1,
        r.sdp2,
        r.final_value,
        opt(r.opt),
        r.margin,
        opt(r.consistency),
        r.seed,
        r.ms
    )
}
