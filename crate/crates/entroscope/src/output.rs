//! CSV and JSON encodings of an [`EntropySeries`] with its optional fit.
//!
//! Floats are written with 17 significant digits in scientific notation, so
//! every value round-trips exactly and identical runs give identical bytes.

use std::fs;
use std::io::Write;

use entroscope_core::scaling::{DivergenceFit, EntropySeries};
use serde_json::{Map, Number, Value};

use crate::error::CliError;

pub const META_PREFIX: &str = "# meta: ";

pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn json_float(v: f64) -> Value {
    if v.is_finite() {
        // arbitrary_precision keeps all 17 digits (serde_json adds an explicit
        // exponent sign).
        Value::Number(format_float(v).parse::<Number>().expect("formatted float is valid JSON"))
    } else {
        Value::Null
    }
}

/// Flat `fit.*` entries, used for CSV metadata.
pub fn fit_fields(fit: &DivergenceFit) -> Vec<(String, String)> {
    let opt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), format_float);
    let mut out = vec![
        ("fit.kind".to_string(), fit.kind.as_str().to_string()),
        ("fit.exponent".to_string(), format_float(fit.exponent)),
        ("fit.coefficient".to_string(), format_float(fit.coefficient)),
        ("fit.offset".to_string(), format_float(fit.offset)),
        ("fit.residual_rms".to_string(), format_float(fit.residual_rms)),
        ("fit.window_lo".to_string(), format_float(fit.window.0)),
        ("fit.window_hi".to_string(), format_float(fit.window.1)),
        ("fit.power_rms".to_string(), opt(fit.power_rms)),
        ("fit.log_rms".to_string(), format_float(fit.log_rms)),
    ];
    if let Some(note) = &fit.note {
        out.push(("fit.note".to_string(), one_line(note)));
    }
    out
}

fn one_line(s: &str) -> String {
    s.replace(['\n', '\r'], " ")
}

pub fn to_csv(series: &EntropySeries, fit: Option<&DivergenceFit>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["param", "value"]).expect("in-memory write");
    for &(p, v) in series.points() {
        w.write_record([format_float(p), format_float(v)]).expect("in-memory write");
    }
    let mut text = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output");
    text.push_str(&format!("{META_PREFIX}param_name={}\n", one_line(series.param_name())));
    for (k, v) in series.meta() {
        text.push_str(&format!("{META_PREFIX}{k}={}\n", one_line(v)));
    }
    for (k, v) in fit.map(fit_fields).unwrap_or_default() {
        text.push_str(&format!("{META_PREFIX}{k}={v}\n"));
    }
    text
}

fn fit_json(fit: &DivergenceFit) -> Value {
    let mut m = Map::new();
    m.insert("kind".into(), Value::String(fit.kind.as_str().into()));
    m.insert("exponent".into(), json_float(fit.exponent));
    m.insert("coefficient".into(), json_float(fit.coefficient));
    m.insert("offset".into(), json_float(fit.offset));
    m.insert("residual_rms".into(), json_float(fit.residual_rms));
    m.insert("window".into(), Value::Array(vec![json_float(fit.window.0), json_float(fit.window.1)]));
    m.insert("power_rms".into(), fit.power_rms.map_or(Value::Null, json_float));
    m.insert("log_rms".into(), json_float(fit.log_rms));
    m.insert("note".into(), fit.note.clone().map_or(Value::Null, Value::String));
    Value::Object(m)
}

pub fn to_json(series: &EntropySeries, fit: Option<&DivergenceFit>) -> String {
    let points = series.points().iter().map(|&(p, v)| Value::Array(vec![json_float(p), json_float(v)])).collect();
    let meta = series.meta().iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
    let mut root = Map::new();
    root.insert("param_name".into(), Value::String(series.param_name().into()));
    root.insert("points".into(), Value::Array(points));
    root.insert("meta".into(), Value::Object(meta));
    root.insert("fit".into(), fit.map_or(Value::Null, fit_json));
    let mut text = serde_json::to_string_pretty(&Value::Object(root)).expect("json values serialize");
    text.push('\n');
    text
}

fn bad_input(reason: impl std::fmt::Display) -> CliError {
    CliError::invalid("input", reason)
}

/// Inverse of [`to_csv`]. `fit.*` metadata lines are kept as metadata.
pub fn parse_csv(text: &str) -> Result<EntropySeries, CliError> {
    let mut table = String::new();
    let mut meta = Vec::new();
    let mut param_name = None;
    for line in text.lines() {
        if let Some(entry) = line.strip_prefix(META_PREFIX) {
            let (k, v) = entry.split_once('=').ok_or_else(|| bad_input(format!("malformed meta line '{line}'")))?;
            if k == "param_name" {
                param_name = Some(v.to_string());
            } else {
                meta.push((k.to_string(), v.to_string()));
            }
        } else if !line.starts_with('#') {
            table.push_str(line);
            table.push('\n');
        }
    }
    let mut reader = csv::Reader::from_reader(table.as_bytes());
    let header = reader.headers().map_err(bad_input)?;
    if header.iter().collect::<Vec<_>>() != ["param", "value"] {
        return Err(bad_input("csv header must be 'param,value'"));
    }
    let mut points = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let rec = rec.map_err(bad_input)?;
        let num = |i: usize| {
            rec.get(i)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| bad_input(format!("row {k} is not a pair of numbers")))
        };
        points.push((num(0)?, num(1)?));
    }
    let mut series = EntropySeries::new(param_name.unwrap_or_else(|| "param".into()), points)?;
    for (k, v) in meta {
        series.insert_meta(k, v);
    }
    Ok(series)
}

/// Inverse of [`to_json`] for the series part; the fit is ignored.
pub fn parse_json(text: &str) -> Result<EntropySeries, CliError> {
    let root: Value = serde_json::from_str(text).map_err(bad_input)?;
    let name = root.get("param_name").and_then(Value::as_str).ok_or_else(|| bad_input("missing param_name"))?;
    let rows = root.get("points").and_then(Value::as_array).ok_or_else(|| bad_input("missing points"))?;
    let mut points = Vec::with_capacity(rows.len());
    for (k, row) in rows.iter().enumerate() {
        let pair =
            row.as_array().filter(|r| r.len() == 2).ok_or_else(|| bad_input(format!("point {k} is not a pair")))?;
        let num = |v: &Value| v.as_f64().ok_or_else(|| bad_input(format!("point {k} is not numeric")));
        points.push((num(&pair[0])?, num(&pair[1])?));
    }
    let mut series = EntropySeries::new(name, points)?;
    if let Some(meta) = root.get("meta").and_then(Value::as_object) {
        for (k, v) in meta {
            let v = v.as_str().ok_or_else(|| bad_input(format!("meta '{k}' is not a string")))?;
            series.insert_meta(k.clone(), v);
        }
    }
    Ok(series)
}

/// Picks the parser from the content: JSON starts with `{`.
pub fn parse_any(text: &str) -> Result<EntropySeries, CliError> {
    if text.trim_start().starts_with('{') {
        parse_json(text)
    } else {
        parse_csv(text)
    }
}

/// Writes to `path`, or to `stdout` for `-`.
pub fn write_to(path: &str, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    let err = |e: std::io::Error| CliError::Output { path: path.to_string(), reason: e.to_string() };
    if path == "-" {
        stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()).map_err(err)
    } else {
        fs::write(path, text).map_err(err)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> EntropySeries {
        EntropySeries::new("x", vec![(1e-3, 1.0 / 3.0), (0.1, 2.0f64.sqrt()), (1.0, 1e-300)])
            .unwrap()
            .with_meta("units", "nats")
            .with_meta("engine", "cft1d")
    }

    #[test]
    fn float_format_has_seventeen_digits() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(-2.5e-300), "-2.5000000000000000e-300");
        assert_eq!(format_float(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let s = sample();
        let text = to_csv(&s, None);
        assert!(text.starts_with("param,value\n"));
        assert!(text.contains("# meta: units=nats\n"));
        assert_eq!(parse_csv(&text).unwrap(), s);
    }

    #[test]
    fn json_round_trip_and_null_fit() {
        let s = sample();
        let text = to_json(&s, None);
        let v: Value = serde_json::from_str(&text).unwrap();
        assert!(v["fit"].is_null());
        let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        assert_eq!(keys, ["param_name", "points", "meta", "fit"]);
        assert_eq!(parse_json(&text).unwrap(), s);
        assert_eq!(parse_any(&text).unwrap(), s);
    }

    #[test]
    fn malformed_input_names_the_parameter() {
        assert!(parse_csv("a,b\n1,2\n").unwrap_err().to_string().starts_with("invalid input"));
        assert!(parse_json("{\"points\": []}").unwrap_err().to_string().starts_with("invalid input"));
    }
}
