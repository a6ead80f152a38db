//! Declarative experiment configuration: a flat key = value text file.
//!
//! Recognized keys, all optional, with their defaults:
//!
//! ```text
//! epsilon    = 0.5      # per-link erasure probability
//! n          = 10000    # source block length (paper_scale raises it)
//! trials     = 50       # Monte Carlo blocks per protocol
//! d_s        = 16       # source-code check degree
//! d_b        = 6        # quantizer b-node degree
//! gap_qs     = 0.005    # source-code curve gap
//! gap_pb     = 0.01     # compression staircase gap
//! grid_size  = 1001     # design grid points on [0,1]
//! seed       = 1        # master seed for graphs, channels and dithers
//! jobs       = 1        # Monte Carlo worker threads
//! mode       = both     # cf | df | both
//! design_df  = true     # also design the decode-and-forward baseline
//! paper_scale = false   # full-size experiment (n = 100000)
//! out_dir    = out      # where artifacts land
//! ```
//!
//! Lines starting with `#` and blank lines are ignored; unknown keys are
//! rejected so typos fail loudly.

use crate::error::{Error, Result};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Cf,
    Df,
    Both,
}

impl RunMode {
    pub fn wants_cf(self) -> bool {
        matches!(self, RunMode::Cf | RunMode::Both)
    }
    pub fn wants_df(self) -> bool {
        matches!(self, RunMode::Df | RunMode::Both)
    }
}

/// One experiment, fully described.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub epsilon: f64,
    pub n: usize,
    pub trials: usize,
    pub d_s: usize,
    pub d_b: usize,
    pub gap_qs: f64,
    pub gap_pb: f64,
    pub grid_size: usize,
    pub seed: u64,
    pub jobs: usize,
    pub mode: RunMode,
    pub design_df: bool,
    pub paper_scale: bool,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            epsilon: 0.5,
            n: 10_000,
            trials: 50,
            d_s: 16,
            d_b: 6,
            gap_qs: 0.005,
            gap_pb: 0.01,
            grid_size: 1001,
            seed: 1,
            jobs: 1,
            mode: RunMode::Both,
            design_df: true,
            paper_scale: false,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {line_no}: expected key = value, got {line:?}"
                )));
            };
            let key = key.trim();
            let value = value.trim();
            let bad = |what: &str| {
                Error::Config(format!("line {line_no}: bad {what} value {value:?}"))
            };
            match key {
                "epsilon" => cfg.epsilon = value.parse().map_err(|_| bad("epsilon"))?,
                "n" => cfg.n = value.parse().map_err(|_| bad("n"))?,
                "trials" => cfg.trials = value.parse().map_err(|_| bad("trials"))?,
                "d_s" => cfg.d_s = value.parse().map_err(|_| bad("d_s"))?,
                "d_b" => cfg.d_b = value.parse().map_err(|_| bad("d_b"))?,
                "gap_qs" => cfg.gap_qs = value.parse().map_err(|_| bad("gap_qs"))?,
                "gap_pb" => cfg.gap_pb = value.parse().map_err(|_| bad("gap_pb"))?,
                "grid_size" => cfg.grid_size = value.parse().map_err(|_| bad("grid_size"))?,
                "seed" => cfg.seed = value.parse().map_err(|_| bad("seed"))?,
                "jobs" => cfg.jobs = value.parse().map_err(|_| bad("jobs"))?,
                "mode" => {
                    cfg.mode = match value {
                        "cf" | "CF" => RunMode::Cf,
                        "df" | "DF" => RunMode::Df,
                        "both" => RunMode::Both,
                        _ => return Err(bad("mode")),
                    }
                }
                "design_df" => cfg.design_df = parse_bool(value).ok_or_else(|| bad("design_df"))?,
                "paper_scale" => {
                    cfg.paper_scale = parse_bool(value).ok_or_else(|| bad("paper_scale"))?
                }
                "out_dir" => cfg.out_dir = PathBuf::from(value),
                other => {
                    return Err(Error::Config(format!(
                        "line {line_no}: unknown key {other:?}"
                    )))
                }
            }
        }
        if cfg.paper_scale {
            cfg.n = cfg.n.max(100_000);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::Config(format!(
                "epsilon {} outside [0,1]",
                self.epsilon
            )));
        }
        if self.n < 100 {
            return Err(Error::Config(format!("n {} below the minimum 100", self.n)));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be positive".into()));
        }
        if self.jobs == 0 {
            return Err(Error::Config("jobs must be positive".into()));
        }
        self.optimizer_config().validate().map_err(|e| match e {
            Error::Domain(msg) => Error::Config(msg),
            other => other,
        })
    }

    /// The design knobs this experiment implies.
    pub fn optimizer_config(&self) -> crate::design::OptimizerConfig {
        crate::design::OptimizerConfig {
            grid_size: self.grid_size,
            gap_qs: self.gap_qs,
            gap_pb: self.gap_pb,
            d_s: self.d_s,
            d_b: self.d_b,
            ..crate::design::OptimizerConfig::default()
        }
    }

    /// Canonical rendering: every effective key in a fixed order. Output
    /// files embed a hash of this so they self-describe their provenance.
    pub fn canonical(&self) -> String {
        let mode = match self.mode {
            RunMode::Cf => "cf",
            RunMode::Df => "df",
            RunMode::Both => "both",
        };
        format!(
            "epsilon = {}\nn = {}\ntrials = {}\nd_s = {}\nd_b = {}\ngap_qs = {}\ngap_pb = {}\n\
             grid_size = {}\nseed = {}\njobs = {}\nmode = {}\ndesign_df = {}\npaper_scale = {}\n",
            self.epsilon,
            self.n,
            self.trials,
            self.d_s,
            self.d_b,
            self.gap_qs,
            self.gap_pb,
            self.grid_size,
            self.seed,
            self.jobs,
            mode,
            self.design_df,
            self.paper_scale,
        )
    }

    /// Fingerprint embedded in every artifact this config produces.
    pub fn fingerprint(&self) -> String {
        format!("{:016x}", crate::rng::fnv1a(self.canonical().as_bytes()))
    }
}

fn parse_bool(v: &str) -> Option<bool> {
    match v {
        "true" | "1" | "yes" => Some(true),
        "false" | "0" | "no" => Some(false),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let cfg = ExperimentConfig::parse("").unwrap();
        assert_eq!(cfg.n, 10_000);
        assert_eq!(cfg.mode, RunMode::Both);

        let cfg = ExperimentConfig::parse(
            "# comment\nepsilon = 0.4\nn=2000\nmode = cf\njobs = 3\nout_dir = results\n",
        )
        .unwrap();
        assert_eq!(cfg.epsilon, 0.4);
        assert_eq!(cfg.n, 2000);
        assert_eq!(cfg.mode, RunMode::Cf);
        assert_eq!(cfg.jobs, 3);
        assert_eq!(cfg.out_dir, PathBuf::from("results"));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(ExperimentConfig::parse("epsilonn = 0.5\n").is_err());
        assert!(ExperimentConfig::parse("epsilon = banana\n").is_err());
        assert!(ExperimentConfig::parse("epsilon 0.5\n").is_err());
        assert!(ExperimentConfig::parse("epsilon = 1.5\n").is_err());
        assert!(ExperimentConfig::parse("n = 10\n").is_err());
    }

    #[test]
    fn paper_scale_raises_n() {
        let cfg = ExperimentConfig::parse("paper_scale = true\n").unwrap();
        assert_eq!(cfg.n, 100_000);
    }

    #[test]
    fn fingerprint_tracks_content() {
        let a = ExperimentConfig::parse("epsilon = 0.5\n").unwrap();
        let b = ExperimentConfig::parse("epsilon = 0.4\n").unwrap();
        assert_ne!(a.fingerprint(), b.fingerprint());
        let c = ExperimentConfig::parse("epsilon = 0.5\n# cosmetic\n").unwrap();
        assert_eq!(a.fingerprint(), c.fingerprint());
        // the out_dir is not part of the scientific identity
        let d = ExperimentConfig::parse("epsilon = 0.5\nout_dir = elsewhere\n").unwrap();
        assert_eq!(a.fingerprint(), d.fingerprint());
    }
}
