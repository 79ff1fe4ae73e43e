//! Output files. Every JSON document carries a `meta` block and every CSV
//! starts with a `#`-prefixed line holding the same block, so each artifact
//! records the configuration, seed, version and cutoff profile it came from.

use serde_json::{json, Map, Value};
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use toruslab::io::fmt_f64;
use toruslab::torus::PROFILE_ID;
use toruslab::VERSION;

use crate::Failure;

pub struct Output {
    dir: PathBuf,
    meta: Value,
}

impl Output {
    pub fn new(dir: PathBuf, command: &str, config: Value, seed: u64) -> Result<Self, Failure> {
        fs::create_dir_all(&dir).map_err(|e| Failure::Guard(format!("cannot create {}: {e}", dir.display())))?;
        let meta = json!({
            "command": command,
            "config": config,
            "seed": seed,
            "version": VERSION,
            "profile": PROFILE_ID,
        });
        Ok(Self { dir, meta })
    }

    pub fn dir(&self) -> &PathBuf {
        &self.dir
    }

    /// Writes `name` with the meta block and `truncated` flag merged into
    /// `body`, and echoes it to stdout.
    pub fn json(&self, name: &str, body: Value, truncated: Option<&str>) -> Result<(), Failure> {
        let mut doc = Map::new();
        doc.insert("meta".into(), self.meta.clone());
        doc.insert("truncated".into(), Value::Bool(truncated.is_some()));
        if let Some(reason) = truncated {
            doc.insert("error".into(), Value::String(reason.into()));
        }
        if let Value::Object(fields) = body {
            doc.extend(fields);
        } else {
            doc.insert("result".into(), body);
        }
        let text = serde_json::to_string_pretty(&Value::Object(doc)).expect("JSON values serialize");
        self.write(name, format!("{text}\n").as_bytes())?;
        // The file is the artifact; a closed stdout (e.g. `| head`) is not an error.
        let _ = writeln!(std::io::stdout(), "{text}");
        Ok(())
    }

    pub fn csv(&self, name: &str, header: &[&str], rows: &[Vec<String>], truncated: bool) -> Result<(), Failure> {
        let mut buf = Vec::new();
        let mut meta = self.meta.clone();
        meta["truncated"] = Value::Bool(truncated);
        writeln!(buf, "# {meta}").expect("writing to a Vec");
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            let io = |e: csv::Error| Failure::Guard(format!("csv: {e}"));
            w.write_record(header).map_err(io)?;
            for row in rows {
                w.write_record(row).map_err(io)?;
            }
            w.flush().map_err(|e| Failure::Guard(format!("csv: {e}")))?;
        }
        self.write(name, &buf)
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<(), Failure> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| Failure::Guard(format!("cannot write {}: {e}", path.display())))
    }
}

pub fn num(x: f64) -> String {
    fmt_f64(x)
}
