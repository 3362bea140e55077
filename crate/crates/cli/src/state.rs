//! Persistent calibration constants, one per `(n, strategy)`.
//!
//! Each entry stores the hash of the configuration that produced it,
//! stamped with the tool version. An entry whose hash no longer matches
//! (different tool version, edited file) is stale and is not used.

use std::path::Path;

use nullcert::quad::{Calibration, CalibrationStore, Strategy};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::CliError;

pub const STATE_FORMAT: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateEntry {
    pub config_sha256: String,
    pub calibration: Calibration,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub tool_version: String,
    pub format_version: u32,
    pub entries: Vec<StateEntry>,
}

impl Default for StateFile {
    fn default() -> Self {
        StateFile {
            tool_version: env!("CARGO_PKG_VERSION").into(),
            format_version: STATE_FORMAT,
            entries: Vec::new(),
        }
    }
}

/// Hash of everything that determines a calibration run.
pub fn calibration_hash(n: usize, strategy: Strategy, samples: usize, seed: u64) -> String {
    let config = json!({
        "tool_version": env!("CARGO_PKG_VERSION"),
        "n": n,
        "strategy": strategy,
        "samples": samples,
        "seed": seed,
    });
    crate::sha256_hex(config.to_string().as_bytes())
}

fn hash_of(cal: &Calibration) -> String {
    calibration_hash(cal.n, cal.strategy, cal.samples, cal.seed)
}

impl StateFile {
    /// Missing file means an empty state.
    pub fn load(path: &Path) -> Result<StateFile, CliError> {
        if !path.exists() {
            return Ok(StateFile::default());
        }
        let text = crate::read_text(path)?;
        serde_json::from_str(&text).map_err(|e| CliError::Schema(e.to_string()).in_file(path))
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).expect("state serializes");
        std::fs::write(path, text + "\n").map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    fn current_version(&self) -> bool {
        self.tool_version == env!("CARGO_PKG_VERSION") && self.format_version == STATE_FORMAT
    }

    pub fn find(&self, n: usize, strategy: Strategy) -> Option<&StateEntry> {
        self.entries
            .iter()
            .find(|e| e.calibration.n == n && e.calibration.strategy == strategy)
    }

    /// An entry produced by exactly this configuration, if still valid.
    pub fn cached(&self, hash: &str) -> Option<&Calibration> {
        if !self.current_version() {
            return None;
        }
        self.entries
            .iter()
            .find(|e| e.config_sha256 == hash)
            .map(|e| &e.calibration)
    }

    pub fn insert(&mut self, cal: Calibration) {
        if !self.current_version() {
            *self = StateFile::default();
        }
        let hash = hash_of(&cal);
        self.entries
            .retain(|e| !(e.calibration.n == cal.n && e.calibration.strategy == cal.strategy));
        self.entries.push(StateEntry {
            config_sha256: hash,
            calibration: cal,
        });
        self.entries
            .sort_by_key(|e| (e.calibration.n, e.calibration.strategy));
    }

    /// The validated calibration for `(n, strategy)` as a one-entry store,
    /// with its config hash.
    pub fn require(
        &self,
        n: usize,
        strategy: Strategy,
    ) -> Result<(CalibrationStore, String), CliError> {
        let hint = format!("run `nullcert calibrate --n {n} --strategy {strategy}` first");
        let entry = self.find(n, strategy).ok_or_else(|| {
            CliError::Calibration(format!(
                "no calibration for n = {n}, strategy {strategy}; {hint}"
            ))
        })?;
        if !self.current_version() || entry.config_sha256 != hash_of(&entry.calibration) {
            return Err(CliError::Calibration(format!(
                "stored calibration for n = {n}, strategy {strategy} is stale; rerun `nullcert calibrate --n {n} --strategy {strategy} --recalibrate`"
            )));
        }
        let mut store = CalibrationStore::new();
        store.insert(entry.calibration.clone());
        Ok((store, entry.config_sha256.clone()))
    }
}
