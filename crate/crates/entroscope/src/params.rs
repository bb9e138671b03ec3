//! Parameter registry and resolution: defaults, then the config file, then
//! command-line flags.

use std::collections::BTreeMap;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kind {
    Float,
    Int,
    Flag,
    Choice(&'static [&'static str]),
    Text,
}

#[derive(Debug, Clone, Copy)]
pub struct ParamSpec {
    pub key: &'static str,
    pub kind: Kind,
    /// `None` marks a parameter with no default; reading it unset is an error.
    pub default: Option<&'static str>,
    pub help: &'static str,
}

impl ParamSpec {
    pub const fn new(key: &'static str, kind: Kind, default: Option<&'static str>, help: &'static str) -> Self {
        ParamSpec { key, kind, default, help }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self.kind, Kind::Float | Kind::Int)
    }
}

/// Keys understood by every command. They are resolved like any other
/// parameter, so the config file may set them too.
pub const FORMATS: &[&str] = &["csv", "json"];

pub fn global_specs() -> Vec<ParamSpec> {
    vec![
        ParamSpec::new("format", Kind::Choice(FORMATS), Some("csv"), "output format"),
        ParamSpec::new("output", Kind::Text, Some("-"), "output path, - for standard output"),
    ]
}

/// Fully resolved parameters of one run, with type checks on access.
#[derive(Debug, Clone)]
pub struct Params {
    specs: Vec<ParamSpec>,
    values: BTreeMap<String, String>,
}

impl Params {
    /// Layers `file` over the defaults and `flags` over both. Keys outside
    /// `specs` are rejected and every supplied value is type-checked.
    pub fn resolve(
        specs: Vec<ParamSpec>,
        file: &BTreeMap<String, String>,
        flags: &BTreeMap<String, String>,
    ) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for s in &specs {
            if let Some(d) = s.default {
                values.insert(s.key.to_string(), d.to_string());
            }
        }
        for (source, layer) in [("config file", file), ("command line", flags)] {
            for (k, v) in layer {
                let Some(spec) = specs.iter().find(|s| s.key == k) else {
                    return Err(CliError::Usage(format!("unknown parameter '{k}' in {source}")));
                };
                check_value(spec, v)?;
                values.insert(k.clone(), v.clone());
            }
        }
        Ok(Params { specs, values })
    }

    fn spec(&self, key: &str) -> &ParamSpec {
        self.specs
            .iter()
            .find(|s| s.key == key)
            .unwrap_or_else(|| panic!("parameter '{key}' is not registered for this command"))
    }

    pub fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn raw(&self, key: &str) -> Result<&str, CliError> {
        self.spec(key);
        self.values.get(key).map(String::as_str).ok_or_else(|| CliError::invalid(key, "is required"))
    }

    pub fn float(&self, key: &str) -> Result<f64, CliError> {
        let raw = self.raw(key)?;
        parse_float(key, raw)
    }

    pub fn int(&self, key: &str) -> Result<i64, CliError> {
        parse_int(key, self.raw(key)?)
    }

    pub fn flag(&self, key: &str) -> Result<bool, CliError> {
        match self.values.get(key) {
            None => Ok(false),
            Some(v) => parse_bool(key, v),
        }
    }

    pub fn text(&self, key: &str) -> Result<&str, CliError> {
        self.raw(key)
    }

    pub fn set(&mut self, key: &str, value: String) {
        self.spec(key);
        self.values.insert(key.to_string(), value);
    }

    pub fn specs(&self) -> &[ParamSpec] {
        &self.specs
    }

    /// Resolved values for the output metadata. The output path is where the
    /// data goes, not what it is, so it is left out.
    pub fn echo(&self) -> impl Iterator<Item = (String, String)> + '_ {
        self.values.iter().filter(|(k, _)| k.as_str() != "output").map(|(k, v)| (format!("param.{k}"), v.clone()))
    }
}

fn parse_float(key: &str, raw: &str) -> Result<f64, CliError> {
    raw.trim().parse::<f64>().map_err(|_| CliError::invalid(key, format!("'{raw}' is not a number")))
}

fn parse_int(key: &str, raw: &str) -> Result<i64, CliError> {
    raw.trim().parse::<i64>().map_err(|_| CliError::invalid(key, format!("'{raw}' is not an integer")))
}

fn parse_bool(key: &str, raw: &str) -> Result<bool, CliError> {
    match raw.trim() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(CliError::invalid(key, format!("'{raw}' is not true or false"))),
    }
}

fn check_value(spec: &ParamSpec, raw: &str) -> Result<(), CliError> {
    match spec.kind {
        Kind::Float => parse_float(spec.key, raw).map(drop),
        Kind::Int => parse_int(spec.key, raw).map(drop),
        Kind::Flag => parse_bool(spec.key, raw).map(drop),
        Kind::Choice(options) if !options.contains(&raw) => {
            Err(CliError::invalid(spec.key, format!("'{raw}' is not one of {}", options.join(", "))))
        }
        Kind::Choice(_) | Kind::Text => Ok(()),
    }
}

/// Parses flat `key = value` text. `#` starts a comment line; blank lines are
/// skipped; a key may appear once.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Usage(format!("config line {}: expected key = value", n + 1)));
        };
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(CliError::Usage(format!("config line {}: empty key", n + 1)));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(CliError::Usage(format!("config line {}: duplicate key '{k}'", n + 1)));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn specs() -> Vec<ParamSpec> {
        vec![
            ParamSpec::new("x", Kind::Float, Some("1"), ""),
            ParamSpec::new("n", Kind::Int, None, ""),
            ParamSpec::new("mi", Kind::Flag, None, ""),
            ParamSpec::new("shape", Kind::Choice(&["a", "b"]), Some("a"), ""),
        ]
    }

    fn map(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn flags_override_file_over_defaults() {
        let p = Params::resolve(specs(), &map(&[("x", "2"), ("n", "3")]), &map(&[("x", "5")])).unwrap();
        assert_eq!(p.float("x").unwrap(), 5.0);
        assert_eq!(p.int("n").unwrap(), 3);
        assert!(!p.flag("mi").unwrap());
    }

    #[test]
    fn unknown_and_malformed_keys_are_rejected() {
        let e = Params::resolve(specs(), &map(&[("y", "1")]), &map(&[])).unwrap_err();
        assert!(e.to_string().contains("'y'"));
        let e = Params::resolve(specs(), &map(&[]), &map(&[("n", "1.5")])).unwrap_err();
        assert!(e.to_string().contains("invalid n"));
        let e = Params::resolve(specs(), &map(&[("shape", "c")]), &map(&[])).unwrap_err();
        assert!(e.to_string().contains("invalid shape"));
    }

    #[test]
    fn missing_required_names_the_key() {
        let p = Params::resolve(specs(), &map(&[]), &map(&[])).unwrap();
        assert_eq!(p.int("n").unwrap_err().to_string(), "invalid n: is required");
    }

    #[test]
    fn config_text_parsing() {
        let m = parse_config("# sweep\nx = 2.5\n\n  mi=true \n").unwrap();
        assert_eq!(m, map(&[("x", "2.5"), ("mi", "true")]));
        assert!(parse_config("x 2").is_err());
        assert!(parse_config("x=1\nx=2").is_err());
    }
}
