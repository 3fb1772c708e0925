//! Output files: every one carries the resolved configuration and version.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use crate::CliError;

/// Resolved parameters of a run. Output paths and the thread count are left
/// out so that identical computations give identical bytes.
#[derive(Debug, Clone, Serialize)]
pub struct Echo {
    pub program: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: Value,
}

impl Echo {
    pub fn new<T: Serialize>(command: &'static str, args: &T) -> Self {
        Self {
            program: "qhall",
            version: qhall::VERSION,
            command,
            config: serde_json::to_value(args).expect("arguments serialize"),
        }
    }

    pub fn line(&self) -> String {
        serde_json::to_string(self).expect("echo serializes")
    }

    /// A JSON document holding the echo and `result`.
    pub fn document<T: Serialize>(&self, result: &T) -> Result<Vec<u8>, CliError> {
        let doc = json!({
            "program": self.program,
            "version": self.version,
            "command": self.command,
            "config": self.config,
            "result": result,
        });
        let mut bytes = serde_json::to_vec_pretty(&doc)
            .map_err(|e| CliError::Failed(format!("serialising result: {e}")))?;
        bytes.push(b'\n');
        Ok(bytes)
    }

    /// A CSV table preceded by a `#` comment line with the echo.
    pub fn csv<I, R>(&self, header: &[&str], rows: I) -> Result<Vec<u8>, CliError>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator,
        R::Item: AsRef<[u8]>,
    {
        let mut buf = format!("# {}\n", self.line()).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            let fail = |e: csv::Error| CliError::Failed(format!("writing csv: {e}"));
            w.write_record(header).map_err(fail)?;
            for row in rows {
                w.write_record(row).map_err(fail)?;
            }
            w.flush()
                .map_err(|e| CliError::Failed(format!("writing csv: {e}")))?;
        }
        Ok(buf)
    }
}

/// Write to `path`, or to standard output when there is none.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => File::create(p)
            .and_then(|mut f| f.write_all(bytes))
            .map_err(|e| CliError::io(p, e)),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes)
                .and_then(|_| out.flush())
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}
