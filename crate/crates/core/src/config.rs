//! TOML configuration files for the search space and the search itself.

use std::path::Path;

use serde::de::DeserializeOwned;

use crate::engine::SearchConfig;
use crate::error::{Error, Result};
use crate::space::SpaceSpec;

fn parse<T: DeserializeOwned>(text: &str, path: &Path) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::ConfigFile {
        path: path.to_path_buf(),
        message: e.to_string().trim_end().to_string(),
    })
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn wrap(path: &Path, err: Error) -> Error {
    Error::ConfigFile {
        path: path.to_path_buf(),
        message: err.to_string(),
    }
}

/// Parses and validates a space description.
pub fn space_from_str(text: &str, path: &Path) -> Result<SpaceSpec> {
    let spec: SpaceSpec = parse(text, path)?;
    spec.validate().map_err(|e| wrap(path, e))?;
    Ok(spec)
}

/// Parses and validates a search configuration.
pub fn search_from_str(text: &str, path: &Path) -> Result<SearchConfig> {
    let config: SearchConfig = parse(text, path)?;
    config.validate().map_err(|e| wrap(path, e))?;
    Ok(config)
}

pub fn load_space(path: impl AsRef<Path>) -> Result<SpaceSpec> {
    let path = path.as_ref();
    space_from_str(&read(path)?, path)
}

pub fn load_search(path: impl AsRef<Path>) -> Result<SearchConfig> {
    let path = path.as_ref();
    search_from_str(&read(path)?, path)
}

pub fn space_to_toml(spec: &SpaceSpec) -> String {
    toml::to_string(spec).expect("space spec serializes")
}

pub fn search_to_toml(config: &SearchConfig) -> String {
    toml::to_string(config).expect("search config serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let p = Path::new("x.toml");
        let space = SpaceSpec::default();
        assert_eq!(space_from_str(&space_to_toml(&space), p).unwrap(), space);
        let search = SearchConfig::default();
        assert_eq!(
            search_from_str(&search_to_toml(&search), p).unwrap(),
            search
        );
    }

    #[test]
    fn errors_name_the_field() {
        let p = Path::new("search.toml");
        let text =
            search_to_toml(&SearchConfig::default()).replace("population_size", "populaton_size");
        let msg = search_from_str(&text, p).unwrap_err().to_string();
        assert!(msg.contains("populaton_size"), "{msg}");
        assert!(msg.starts_with("search.toml"), "{msg}");

        let text = search_to_toml(&SearchConfig::default())
            .replace("sample_size = 5", "sample_size = \"five\"");
        let msg = search_from_str(&text, p).unwrap_err().to_string();
        assert!(msg.contains("sample_size"), "{msg}");

        let text = search_to_toml(&SearchConfig::default())
            .replace("sample_size = 5", "sample_size = 500");
        let msg = search_from_str(&text, p).unwrap_err().to_string();
        assert!(msg.contains("sample_size"), "{msg}");
    }
}
