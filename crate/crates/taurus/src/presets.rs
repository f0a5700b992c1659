//! Parameter sets and machine configurations from files.
//!
//! `--params` takes a TOML file or a preset name. Names are looked up in
//! `$TAURUS_CONFIG_DIR/presets/<name>.toml` first, then among the sets
//! shipped in `presets/`, so alternates need no rebuild.

use std::path::{Path, PathBuf};

use taurus_core::perf::MachineConfig;
use taurus_core::tfhe::TfheParams;

use crate::error::{Error, Result};
use crate::files::read_text;

/// Directory holding `presets/` and a default `machine.conf`.
pub const CONFIG_DIR_ENV: &str = "TAURUS_CONFIG_DIR";

macro_rules! shipped {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../presets/", $name, ".toml")))),*]
    };
}

const SHIPPED: &[(&str, &str)] = shipped!(
    "desk",
    "toy",
    "cnn-20",
    "cnn-50",
    "decision-tree",
    "gpt2",
    "gpt2-12head",
    "knn",
    "xgboost",
    "cnn-20-desk",
    "cnn-50-desk",
    "decision-tree-desk",
    "gpt2-desk",
    "gpt2-12head-desk",
    "knn-desk",
    "xgboost-desk",
);

pub fn shipped_names() -> impl Iterator<Item = &'static str> {
    SHIPPED.iter().map(|(n, _)| *n)
}

fn config_dir() -> Option<PathBuf> {
    std::env::var_os(CONFIG_DIR_ENV).map(PathBuf::from)
}

fn parse_toml(text: &str, path: &Path) -> Result<TfheParams> {
    let p: TfheParams = toml::from_str(text).map_err(|e| {
        let (line, column) = e
            .span()
            .map(|s| {
                let before = &text[..s.start];
                let line = before.matches('\n').count() + 1;
                (line, s.start - before.rfind('\n').map_or(0, |i| i + 1) + 1)
            })
            .unwrap_or((0, 0));
        Error::Parse {
            path: path.to_path_buf(),
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    p.validate()?;
    Ok(p)
}

/// Resolves a parameter file path or preset name.
pub fn resolve_params(spec: &str) -> Result<TfheParams> {
    let path = Path::new(spec);
    if spec.ends_with(".toml") || path.is_file() {
        return parse_toml(&read_text(path)?, path);
    }
    if let Some(dir) = config_dir() {
        let path = dir.join("presets").join(format!("{spec}.toml"));
        if path.is_file() {
            return parse_toml(&read_text(&path)?, &path);
        }
    }
    let (_, text) = SHIPPED
        .iter()
        .find(|(n, _)| *n == spec)
        .ok_or_else(|| Error::UnknownPreset(spec.to_string()))?;
    parse_toml(text, Path::new(&format!("presets/{spec}.toml")))
}

/// Applies `key = value` lines (`#` starts a comment) to a machine.
pub fn apply_machine_text(m: &mut MachineConfig, text: &str, path: &Path) -> Result<()> {
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            column: 1,
            message,
        };
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| parse_err(format!("expected `key = value`, got `{line}`")))?;
        m.set(k.trim(), v.trim()).map_err(|e| parse_err(e.to_string()))?;
    }
    Ok(())
}

/// Default machine, then the config-directory `machine.conf` (if any and
/// no file is given), then `file`, then `overrides` in order.
pub fn load_machine(file: Option<&Path>, overrides: &[String]) -> Result<MachineConfig> {
    let mut m = MachineConfig::default();
    let fallback = config_dir().map(|d| d.join("machine.conf")).filter(|p| p.is_file());
    if let Some(path) = file.map(Path::to_path_buf).or(fallback) {
        apply_machine_text(&mut m, &read_text(&path)?, &path)?;
    }
    for o in overrides {
        apply_machine_text(&mut m, o, Path::new("--set"))?;
    }
    m.validate()?;
    Ok(m)
}
