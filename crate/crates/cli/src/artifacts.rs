use crate::exit::Outcome;
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};

/// Metadata written next to every CSV.
#[derive(Serialize)]
pub struct Metadata<'a, C: Serialize, B: Serialize> {
    pub library: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config: &'a C,
    pub bounds: B,
}

impl<'a, C: Serialize, B: Serialize> Metadata<'a, C, B> {
    pub fn new(command: &'a str, config: &'a C, bounds: B) -> Self {
        Self {
            library: "netflow-core",
            version: netflow_core::VERSION,
            command,
            config,
            bounds,
        }
    }
}

/// Output files `<dir>/<stem>.{csv,json,log.jsonl}`.
pub struct Artifacts {
    dir: PathBuf,
    stem: String,
    written: Vec<PathBuf>,
}

impl Artifacts {
    pub fn new(dir: &Path, stem: &str) -> Outcome<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            stem: stem.to_string(),
            written: Vec::new(),
        })
    }

    fn write(&mut self, suffix: &str, body: &str) -> Outcome {
        let path = self.dir.join(format!("{}.{suffix}", self.stem));
        fs::write(&path, body)?;
        self.written.push(path);
        Ok(())
    }

    pub fn csv(&mut self, body: &str) -> Outcome {
        self.write("csv", body)
    }

    pub fn metadata(&mut self, meta: &impl Serialize) -> Outcome {
        let mut body = serde_json::to_string_pretty(meta)?;
        body.push('\n');
        self.write("json", &body)
    }

    pub fn log<T: Serialize>(&mut self, entries: &[T]) -> Outcome {
        let mut body = String::new();
        for e in entries {
            body.push_str(&serde_json::to_string(e)?);
            body.push('\n');
        }
        self.write("log.jsonl", &body)
    }

    pub fn report(&self) {
        for p in &self.written {
            println!("wrote {}", p.display());
        }
    }
}

/// One line of the run log.
#[derive(Serialize)]
pub struct LogEntry {
    pub t: f64,
    pub t_exact: String,
    pub sup_norm: f64,
    pub total_mass: f64,
    pub boundary_residual: f64,
}
