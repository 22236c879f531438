//! Optional TOML config file. Keys mirror the long flag names; flags win
//! over the file, and the file wins over built-in defaults.

use std::path::Path;

use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct FileConfig {
    pub dim: Option<usize>,
    pub featurizer: Option<String>,
    pub featurizer_seed: Option<u64>,
    pub dh: Option<usize>,
    pub seed: Option<u64>,
    pub lambda: Option<f64>,
    pub lr: Option<f64>,
    pub max_epochs: Option<usize>,
    pub patience: Option<usize>,
    pub alternation: Option<String>,
    pub first_phase: Option<String>,
    pub init_scale: Option<f64>,
    pub bin_width: Option<String>,
    pub horizon_bins: Option<usize>,
    pub tune_fraction: Option<f64>,
    pub ratio: Option<String>,
    pub split_seed: Option<u64>,
    pub threshold: Option<f64>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        match path {
            None => Ok(FileConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                toml::from_str(&text).map_err(|e| {
                    crate::CliError::validation(format!("config {}: {e}", p.display())).into()
                })
            }
        }
    }
}

/// Parses `a:b` into a pair of positive integers.
pub fn parse_ratio(s: &str) -> Result<(u32, u32), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("ratio must look like 3:1, got {s:?}"))?;
    let parse = |x: &str| {
        x.trim()
            .parse::<u32>()
            .ok()
            .filter(|&v| v > 0)
            .ok_or_else(|| format!("ratio terms must be positive integers, got {s:?}"))
    };
    Ok((parse(a)?, parse(b)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio() {
        assert_eq!(parse_ratio("3:1"), Ok((3, 1)));
        assert!(parse_ratio("3:0").is_err());
        assert!(parse_ratio("3").is_err());
    }

    #[test]
    fn file_keys_are_kebab_case() {
        let c: FileConfig = toml::from_str("dh = 12\nmax-epochs = 3\nlr = 0.5\n").unwrap();
        assert_eq!((c.dh, c.max_epochs, c.lr), (Some(12), Some(3), Some(0.5)));
        assert!(toml::from_str::<FileConfig>("bogus = 1").is_err());
    }
}
