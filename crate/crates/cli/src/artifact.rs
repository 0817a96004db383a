use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;

/// Writes the numeric artifacts of one command into the output directory and
/// a `<command>.meta.json` sidecar with the resolved config. Only the sidecar
/// carries a timestamp, so reruns reproduce the artifacts byte for byte.
pub struct ArtifactWriter<'a> {
    dir: PathBuf,
    command: &'static str,
    config: &'a RunConfig,
    written: Vec<String>,
}

#[derive(Serialize)]
struct Meta<'a> {
    command: &'a str,
    version: &'a str,
    created_unix: u64,
    artifacts: &'a [String],
    config: &'a RunConfig,
}

/// A JSON artifact with the config embedded next to the result. The output
/// directory and worker count are left out since neither affects the numbers.
#[derive(Serialize)]
struct WithConfig<'a, T: Serialize> {
    config: serde_json::Value,
    result: &'a T,
}

fn numeric_config(cfg: &RunConfig) -> Result<serde_json::Value, CliError> {
    let mut v = serde_json::to_value(cfg).map_err(|e| CliError::Numerical(e.to_string()))?;
    if let Some(run) = v.get_mut("run").and_then(|r| r.as_object_mut()) {
        run.remove("out");
        run.remove("workers");
    }
    Ok(v)
}

impl<'a> ArtifactWriter<'a> {
    pub fn new(dir: &Path, command: &'static str, config: &'a RunConfig) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), command, config, written: Vec::new() })
    }

    pub fn text(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        std::fs::write(self.dir.join(name), contents)?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let doc = WithConfig { config: numeric_config(self.config)?, result: value };
        let text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Numerical(e.to_string()))?;
        self.text(name, &(text + "\n"))
    }

    pub fn finish(self) -> Result<Vec<PathBuf>, CliError> {
        let created_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let meta = Meta {
            command: self.command,
            version: env!("CARGO_PKG_VERSION"),
            created_unix,
            artifacts: &self.written,
            config: self.config,
        };
        let text = serde_json::to_string_pretty(&meta).map_err(|e| CliError::Numerical(e.to_string()))?;
        std::fs::write(self.dir.join(format!("{}.meta.json", self.command)), text + "\n")?;
        Ok(self.written.iter().map(|n| self.dir.join(n)).collect())
    }
}
