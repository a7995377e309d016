use std::fmt;
use std::str::FromStr;

use super::config::{parse_pairs, RunConfig};
use super::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Running,
    Done,
    Failed,
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunStatus::Running => "running",
            RunStatus::Done => "done",
            RunStatus::Failed => "failed",
        })
    }
}

impl FromStr for RunStatus {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "running" => Ok(RunStatus::Running),
            "done" => Ok(RunStatus::Done),
            "failed" => Ok(RunStatus::Failed),
            other => Err(CliError::Manifest(format!("unknown status `{other}`"))),
        }
    }
}

/// Record of one training run. The `config.*` lines are a complete snapshot:
/// `train --manifest` re-runs from them alone.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub run_id: String,
    pub seed: u64,
    pub config: RunConfig,
    pub checkpoint: String,
    pub checkpoint_sha256: String,
    pub metrics: String,
    pub status: RunStatus,
    pub started_unix: u64,
    pub finished_unix: Option<u64>,
    pub error: Option<String>,
}

impl RunManifest {
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "run_id={}\nseed={}\nstatus={}\nstarted_unix={}\nfinished_unix={}\ncheckpoint={}\ncheckpoint_sha256={}\nmetrics={}\n",
            self.run_id,
            self.seed,
            self.status,
            self.started_unix,
            self.finished_unix.map_or(String::new(), |t| t.to_string()),
            self.checkpoint,
            self.checkpoint_sha256,
            self.metrics,
        );
        if let Some(e) = &self.error {
            s.push_str(&format!("error={}\n", e.replace('\n', " ")));
        }
        for (k, v) in self.config.pairs() {
            s.push_str(&format!("config.{k}={v}\n"));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, CliError> {
        let mut fields = Vec::new();
        let mut config = String::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Manifest(format!("malformed line `{line}`")))?;
            match k.strip_prefix("config.") {
                Some(key) => config.push_str(&format!("{key}={v}\n")),
                None => fields.push((k.to_string(), v.to_string())),
            }
        }
        let get = |key: &str| {
            fields
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.clone())
                .ok_or_else(|| CliError::Manifest(format!("missing `{key}`")))
        };
        let num = |key: &str| -> Result<u64, CliError> {
            get(key)?
                .parse()
                .map_err(|_| CliError::Manifest(format!("`{key}` is not an integer")))
        };
        let finished = get("finished_unix")?;
        Ok(Self {
            run_id: get("run_id")?,
            seed: num("seed")?,
            config: RunConfig::resolve(&parse_pairs(&config)?)?,
            checkpoint: get("checkpoint")?,
            checkpoint_sha256: get("checkpoint_sha256")?,
            metrics: get("metrics")?,
            status: get("status")?.parse()?,
            started_unix: num("started_unix")?,
            finished_unix: if finished.is_empty() {
                None
            } else {
                Some(num("finished_unix")?)
            },
            error: get("error").ok(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let config = RunConfig::resolve(&parse_pairs("seed=4\ncell=bmru\niters=7").unwrap()).unwrap();
        let m = RunManifest {
            run_id: config.run_id(),
            seed: 4,
            config,
            checkpoint: "checkpoint.bin".into(),
            checkpoint_sha256: "ab".into(),
            metrics: "metrics.csv".into(),
            status: RunStatus::Failed,
            started_unix: 10,
            finished_unix: Some(12),
            error: Some("boom".into()),
        };
        assert_eq!(RunManifest::from_text(&m.to_text()).unwrap(), m);
        let running = RunManifest {
            status: RunStatus::Running,
            finished_unix: None,
            error: None,
            ..m
        };
        assert_eq!(RunManifest::from_text(&running.to_text()).unwrap(), running);
    }
}
