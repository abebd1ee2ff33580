//! Run configuration: a `key: value` file whose entries fill in flags that
//! were not given on the command line.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use pef_core::kv::KeyValues;

use crate::CliError;

/// Every key any subcommand reads. Keys match the long flag names.
const KNOWN_KEYS: &[&str] = &[
    "in", "k", "seed", "mpp", "out", "merge", "names", "grid", "tx", "rx", "d0", "params",
    "stride", "pgm", "shadowed", "meas", "L", "no-trunc", "init", "step", "fixed-step",
    "plain", "max-iter", "tol", "report", "ls-only", "pef", "logdist", "cdf", "cdf-logdist",
];

/// Close-in distance when neither flag, params file, nor config sets it, m.
pub const DEFAULT_D0: f64 = 1.0;
/// Truncation level used by the fitting commands unless disabled, dB.
pub const DEFAULT_L: f64 = 140.0;

#[derive(Debug, Default)]
pub struct Config {
    doc: KeyValues,
    /// Directory of the config file; relative paths in it resolve from here.
    base: PathBuf,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let doc = KeyValues::load(path)?;
        if let Some(bad) = doc.keys().find(|k| !KNOWN_KEYS.contains(k)) {
            return Err(CliError::Usage(format!(
                "unknown key `{bad}` in config {}",
                path.display()
            )));
        }
        Ok(Self {
            doc,
            base: path.parent().map(Path::to_path_buf).unwrap_or_default(),
        })
    }

    /// `flag` if given, else the config value for `key`.
    pub fn value<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError> {
        if flag.is_some() {
            return Ok(flag);
        }
        self.doc
            .get(key)
            .map(|v| {
                v.parse().map_err(|_| {
                    CliError::Usage(format!("config value `{v}` is not valid for `{key}`"))
                })
            })
            .transpose()
    }

    pub fn required<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<T, CliError> {
        self.value(flag, key)?
            .ok_or_else(|| CliError::Usage(format!("missing required option --{key}")))
    }

    /// Boolean switch: set by the flag, or by `key: true` in the config.
    pub fn switch(&self, flag: bool, key: &str) -> Result<bool, CliError> {
        Ok(flag || self.value::<bool>(None, key)?.unwrap_or(false))
    }

    pub fn path(&self, flag: Option<PathBuf>, key: &str) -> Result<Option<PathBuf>, CliError> {
        if flag.is_some() {
            return Ok(flag);
        }
        Ok(self.value::<PathBuf>(None, key)?.map(|p| self.base.join(p)))
    }

    pub fn required_path(&self, flag: Option<PathBuf>, key: &str) -> Result<PathBuf, CliError> {
        self.path(flag, key)?
            .ok_or_else(|| CliError::Usage(format!("missing required option --{key}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(text: &str) -> Config {
        Config {
            doc: KeyValues::parse(text).unwrap(),
            base: PathBuf::from("/runs"),
        }
    }

    #[test]
    fn flags_win_over_config() {
        let c = config("d0: 2.5\nseed: 9\n");
        assert_eq!(c.value(Some(1.0), "d0").unwrap(), Some(1.0));
        assert_eq!(c.value::<f64>(None, "d0").unwrap(), Some(2.5));
        assert_eq!(c.required::<u64>(None, "seed").unwrap(), 9);
        assert!(c.required::<u64>(None, "k").is_err());
    }

    #[test]
    fn config_paths_are_relative_to_the_file() {
        let c = config("grid: regions.pgm\n");
        assert_eq!(
            c.path(None, "grid").unwrap(),
            Some(PathBuf::from("/runs/regions.pgm"))
        );
        assert_eq!(
            c.path(Some("x.pgm".into()), "grid").unwrap(),
            Some(PathBuf::from("x.pgm"))
        );
    }

    #[test]
    fn bad_values_are_usage_errors() {
        let c = config("d0: far\nplain: yes\n");
        assert!(matches!(c.value::<f64>(None, "d0"), Err(CliError::Usage(_))));
        assert!(matches!(c.switch(false, "plain"), Err(CliError::Usage(_))));
    }
}
