//! `key = value` run configuration with defaults < file < flags layering.

use std::path::PathBuf;

use crate::network::Mode;
use crate::trainer::TrainConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub image1: Option<PathBuf>,
    pub image2: Option<PathBuf>,
    pub ground_truth: Option<PathBuf>,
    pub out: PathBuf,
    pub train: TrainConfig,
    pub verbosity: u8,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            image1: None,
            image2: None,
            ground_truth: None,
            out: PathBuf::from("."),
            train: TrainConfig::default(),
            verbosity: 0,
        }
    }
}

impl RunConfig {
    /// Applies every `key = value` line of a config file. Blank lines and
    /// lines starting with `#` are skipped; unknown keys are errors.
    pub fn apply_text(&mut self, text: &str) -> Result<(), String> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| format!("line {}: expected `key = value`", n + 1))?;
            self.set(key.trim(), value.trim()).map_err(|e| format!("line {}: {e}", n + 1))?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String> {
            v.parse().map_err(|_| format!("invalid value `{v}` for `{key}`"))
        }
        let t = &mut self.train;
        match key {
            "image1" => self.image1 = Some(value.into()),
            "image2" => self.image2 = Some(value.into()),
            "ground_truth" => self.ground_truth = (!value.is_empty()).then(|| value.into()),
            "out" => self.out = value.into(),
            "seed" => t.seed = num(key, value)?,
            "r" => t.r = num(key, value)?,
            "mode" => t.mode = value.parse::<Mode>().map_err(|e| e.to_string())?,
            "mask_width" => t.mask_width = num(key, value)?,
            "epochs" => t.epochs = num(key, value)?,
            "batch_size" | "batch" => t.batch_size = num(key, value)?,
            "lr" => t.lr = num(key, value)?,
            "sample_fraction" => t.sample_fraction = num(key, value)?,
            "verbosity" => self.verbosity = num(key, value)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// The effective configuration in the same format [`apply_text`]
    /// reads, so it can be saved and replayed.
    ///
    /// [`apply_text`]: RunConfig::apply_text
    pub fn to_text(&self) -> String {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let t = &self.train;
        let mut lines = Vec::new();
        if self.image1.is_some() {
            lines.push(format!("image1 = {}", path(&self.image1)));
        }
        if self.image2.is_some() {
            lines.push(format!("image2 = {}", path(&self.image2)));
        }
        lines.push(format!("ground_truth = {}", path(&self.ground_truth)));
        lines.push(format!("out = {}", self.out.display()));
        lines.push(format!("seed = {}", t.seed));
        lines.push(format!("r = {}", t.r));
        lines.push(format!("mode = {}", t.mode));
        lines.push(format!("mask_width = {}", t.mask_width));
        lines.push(format!("epochs = {}", t.epochs));
        lines.push(format!("batch_size = {}", t.batch_size));
        lines.push(format!("lr = {:?}", t.lr));
        lines.push(format!("sample_fraction = {:?}", t.sample_fraction));
        lines.push(format!("verbosity = {}", self.verbosity));
        lines.join("\n") + "\n"
    }
}
