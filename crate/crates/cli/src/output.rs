use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use wavefrac::io::{emit_json, emit_table, Table, TableFormat};
use wavefrac::{Error, Result};

use crate::args::Format;

/// Writes artifacts into one directory, stamping each with the run config.
#[derive(Debug, Clone)]
pub struct Sink {
    pub dir: PathBuf,
    format: Format,
    config: Value,
}

impl Sink {
    pub fn new(dir: impl Into<PathBuf>, format: Format, config: Value) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::Io {
            path: dir.clone(),
            source: e,
        })?;
        Ok(Self {
            dir,
            format,
            config,
        })
    }

    pub fn child(&self, name: &str) -> Result<Self> {
        Sink::new(self.dir.join(name), self.format, self.config.clone())
    }

    fn ext(&self) -> &'static str {
        match self.format {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }

    pub fn table(&self, stem: &str, table: Table, written: &mut Vec<PathBuf>) -> Result<()> {
        let path = self.dir.join(format!("{stem}.{}", self.ext()));
        let table = table.with_meta("config", &self.config);
        let format = match self.format {
            Format::Csv => TableFormat::Csv,
            Format::Json => TableFormat::Json,
        };
        emit_table(&table, &path, format)?;
        log::debug!("wrote {}", path.display());
        written.push(path);
        Ok(())
    }

    /// A JSON document `{ "meta": { "config": ... }, ...body }`.
    pub fn document(
        &self,
        stem: &str,
        body: &impl Serialize,
        written: &mut Vec<PathBuf>,
    ) -> Result<()> {
        let path = self.dir.join(format!("{stem}.json"));
        let mut doc = serde_json::to_value(body)?;
        let meta = json!({ "config": self.config });
        match &mut doc {
            Value::Object(map) => {
                map.insert("meta".into(), meta);
            }
            other => {
                doc = json!({ "meta": meta, "value": other.take() });
            }
        }
        emit_json(&doc, &path)?;
        written.push(path);
        Ok(())
    }

    pub fn config(&self) -> &Value {
        &self.config
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }
}
