//! The run configuration: one flat TOML file. Relative paths resolve against
//! the directory holding the file. Command-line flags override it.

use std::fs;
use std::path::{Path, PathBuf};

use bias_audit_core::compositor::DEFAULT_MASK_THRESHOLD;
use bias_audit_core::model::DEFAULT_THRESHOLD;
use serde::{Deserialize, Serialize};

use crate::embedding::sha256_hex;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub manifest: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
    /// Second annotator, for agreement.
    pub annotations_b: Option<PathBuf>,
    pub images_dir: Option<PathBuf>,
    pub masks_dir: Option<PathBuf>,
    pub predictions_dir: Option<PathBuf>,
    pub real_embeddings: Option<PathBuf>,
    pub fake_embeddings: Option<PathBuf>,
    pub out_dir: PathBuf,
    /// Label for the training regime, written into the CBI table.
    pub regime: String,
    pub threshold: f64,
    pub mask_threshold: u8,
    pub feather_radius: u32,
    pub seed: u64,
    pub pps_folds: usize,
    /// `None` uses min(1000, n_real, n_fake).
    pub kid_subset_size: Option<usize>,
    pub kid_subsets: usize,
    pub pr_k: usize,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            manifest: None,
            annotations: None,
            annotations_b: None,
            images_dir: None,
            masks_dir: None,
            predictions_dir: None,
            real_embeddings: None,
            fake_embeddings: None,
            out_dir: PathBuf::from("out"),
            regime: "real".into(),
            threshold: DEFAULT_THRESHOLD,
            mask_threshold: DEFAULT_MASK_THRESHOLD,
            feather_radius: 0,
            seed: 0,
            pps_folds: 4,
            kid_subset_size: None,
            kid_subsets: 100,
            pr_k: 3,
            base_dir: PathBuf::from("."),
        }
    }
}

/// Values given on the command line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threshold: Option<f64>,
}

impl RunConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
        Self::from_toml(&text, if base.as_os_str().is_empty() { Path::new(".") } else { &base })
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        // an --out flag is relative to the working directory, not the config
        if let Some(out) = &o.out_dir {
            self.out_dir = std::env::current_dir().map(|d| d.join(out)).unwrap_or_else(|_| out.clone());
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(t) = o.threshold {
            self.threshold = t;
        }
        self.check()
    }

    fn check(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(Error::Config(format!("threshold must lie in (0, 1], got {}", self.threshold)));
        }
        if self.pps_folds < 2 {
            return Err(Error::Config("pps_folds must be at least 2".into()));
        }
        if self.kid_subsets == 0 {
            return Err(Error::Config("kid_subsets must be positive".into()));
        }
        if self.pr_k == 0 {
            return Err(Error::Config("pr_k must be positive".into()));
        }
        if self.regime.is_empty() || self.regime.contains([',', '\n', '|']) {
            return Err(Error::Config(format!("regime `{}` is not a plain label", self.regime)));
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Resolved path of an optional setting, or a config error naming it.
    pub fn require(&self, value: &Option<PathBuf>, key: &str) -> Result<PathBuf> {
        value.as_deref().map(|p| self.resolve(p)).ok_or_else(|| Error::Config(format!("`{key}` is not set")))
    }

    pub fn out_path(&self) -> PathBuf {
        self.resolve(&self.out_dir)
    }

    /// Digest of the effective settings as written, independent of where the
    /// config file lives.
    pub fn digest(&self) -> String {
        let mut canon = self.clone();
        if canon.out_dir.is_absolute() {
            // absolute --out paths differ between otherwise identical runs
            canon.out_dir = PathBuf::from("<out>");
        }
        sha256_hex(toml::to_string(&canon).expect("config serializes").as_bytes())
    }
}
