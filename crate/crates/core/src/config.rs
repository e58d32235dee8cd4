//! TOML configuration files. Missing keys take their defaults; unknown
//! keys are errors.

use std::path::Path;

use crate::error::{Error, Result};
use crate::sweep::SweepSpec;

pub fn parse_config(text: &str) -> Result<SweepSpec> {
    toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

pub fn load_config(path: &Path) -> Result<SweepSpec> {
    parse_config(&std::fs::read_to_string(path)?)
}

pub fn to_toml(spec: &SweepSpec) -> Result<String> {
    toml::to_string_pretty(spec).map_err(|e| Error::Config(e.to_string()))
}
