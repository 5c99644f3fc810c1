//! `key = value` experiment configuration with per-command defaults and flag overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{LabError, LabResult};
use crate::specs;

/// `(key, default, meaning)`.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("model", "gaussian:1", "gaussian:<n> or cylinder:<k>x<n>"),
    ("topology", "periodic:2pi:256", "line:L:h, periodic:P:nodes or cylinder:PxA:L:h"),
    ("stencil", "auto", "auto, central or spectral"),
    ("filter", "1e-10", "relative spectral floor, 0 disables"),
    ("scheme", "cn", "explicit, cn or closed-form"),
    ("dt", "0.001", "time step"),
    ("order", "20", "time-Taylor order J"),
    ("terms", "40", "Tychonov terms K"),
    ("data", "sin", "sin, x2, one, const:c, poly:c0,c1,.., kernel:s, expq:tau, tychonov:t[:K]"),
    ("square", "false", "use u^2 of the data's flow as the subsolution"),
    ("t", "0.5", "target time"),
    ("t0", "-2", "trajectory start time"),
    ("p", "0", "base point or cylinder vertex, comma-separated chart coordinates"),
    ("s", "0", "vertex time"),
    ("r", "1", "cylinder radius"),
    ("delta", "0.5", "cutoff in (0,1)"),
    ("m", "1", "mean-value exponent"),
    ("k", "4", "cube parameter"),
    ("ks", "1,4,16", "cube parameters swept by the localized estimate"),
    ("levels", "5", "Moser steps"),
    ("samples", "1000", "random samples"),
    ("quadrature", "0", "entropy quadrature nodes per axis, 0 for the model default"),
    ("seed", "20240601", "RNG seed"),
    ("out", "lab-out", "output directory"),
];

fn command_defaults(command: &str) -> &'static [(&'static str, &'static str)] {
    match command {
        "radius" => &[("topology", "line:3.8:0.05"), ("data", "expq:1"), ("order", "16")],
        "forward" => &[("topology", "line:24:0.05"), ("data", "kernel:3"), ("t", "2"), ("t0", "-2")],
        "taylor" => &[("topology", "line:24:0.05"), ("data", "kernel:3"), ("t0", "-2"), ("t", "-0.5")],
        "bounds-fit" => &[("order", "12"), ("scheme", "closed-form"), ("dt", "0.01")],
        "criterion" => &[("order", "12")],
        "ineq-sobolev" => &[
            ("model", "cylinder:2x3"),
            ("topology", "cylinder:32x64:3:0.125"),
            ("samples", "20"),
        ],
        "ineq-caccioppoli" => &[
            ("topology", "line:3:0.015625"),
            ("scheme", "closed-form"),
            ("dt", "0.0009765625"),
            ("t0", "-1"),
        ],
        "ineq-meanvalue" | "ineq-moser" => &[
            ("topology", "line:4:0.0625"),
            ("scheme", "closed-form"),
            ("dt", "0.0078125"),
            ("t0", "-2.5"),
            ("square", "true"),
        ],
        "ineq-localized" => &[
            ("topology", "line:3:0.015625"),
            ("scheme", "closed-form"),
            ("dt", "0.0009765625"),
            ("t0", "-1"),
            ("data", "kernel:3"),
        ],
        _ => &[],
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    values: BTreeMap<String, String>,
}

impl ExperimentConfig {
    pub fn for_command(command: &str) -> Self {
        let mut values: BTreeMap<String, String> =
            KEYS.iter().map(|(k, v, _)| ((*k).to_string(), (*v).to_string())).collect();
        for (k, v) in command_defaults(command) {
            values.insert((*k).to_string(), (*v).to_string());
        }
        Self { values }
    }

    pub fn set(&mut self, key: &str, value: &str) -> LabResult<()> {
        let key = key.trim();
        if !self.values.contains_key(key) {
            return Err(LabError::usage(format!("unknown config key {key:?}")));
        }
        self.values.insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    /// Apply a `key = value` file; `#` starts a comment.
    pub fn apply_file(&mut self, path: &Path) -> LabResult<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::usage(format!("cannot read config {}: {e}", path.display())))?;
        self.apply_text(&text)
    }

    pub fn apply_text(&mut self, text: &str) -> LabResult<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| LabError::usage(format!("config line {}: expected key = value", n + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| panic!("config key {key} is not declared"))
    }

    pub fn real(&self, key: &str) -> LabResult<f64> {
        specs::parse_real(self.get(key)).map_err(|e| LabError::usage(format!("{key}: {e}")))
    }

    pub fn count(&self, key: &str) -> LabResult<usize> {
        specs::parse_usize(self.get(key)).map_err(|e| LabError::usage(format!("{key}: {e}")))
    }

    pub fn flag(&self, key: &str) -> LabResult<bool> {
        match self.get(key) {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            v => Err(LabError::usage(format!("{key}: expected true or false, got {v:?}"))),
        }
    }

    pub fn seed(&self) -> LabResult<u64> {
        self.get("seed").parse().map_err(|_| LabError::usage("seed must be an unsigned integer"))
    }

    pub fn out_dir(&self) -> PathBuf {
        PathBuf::from(self.get("out"))
    }

    /// Every key except `out`, which names where results go rather than what they are.
    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().filter(|(k, _)| k.as_str() != "out").map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in self.entries() {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update(b"\n");
        }
        hex(&h.finalize())
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_overrides() {
        let mut c = ExperimentConfig::for_command("radius");
        assert_eq!(c.get("order"), "16");
        c.apply_text("# comment\nt = 0.25  # trailing\n\ndata=kernel:1\n").unwrap();
        assert_eq!(c.real("t").unwrap(), 0.25);
        assert_eq!(c.get("data"), "kernel:1");
        assert!(c.apply_text("nope = 1").is_err());
        assert!(c.apply_text("t 1").is_err());
    }

    #[test]
    fn hash_ignores_output_directory() {
        let mut a = ExperimentConfig::for_command("backward");
        let b = a.clone();
        a.set("out", "/elsewhere").unwrap();
        assert_eq!(a.hash(), b.hash());
        a.set("seed", "7").unwrap();
        assert_ne!(a.hash(), b.hash());
    }
}
