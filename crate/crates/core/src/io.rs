//! File formats: transition-log CSV, model-file CSV and scenario configs.
//!
//! Transition logs have the fixed header
//! `node_id,from_state,to_state,duration_seconds,timestamp` followed by any
//! number of feature columns, which are kept positionally.
//!
//! Model files carry one row per `(cluster_id, transition)`, sorted by that
//! key, with floats printed to 12 significant digits and LF line endings, so
//! that successive runs diff cleanly.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use crate::distributions::{DistributionParams, Family};
use crate::error::{Error, Result};
use crate::estimation::CensoredSampleSet;
use crate::joint::CoupledScenario;
use crate::regression::{FeatureVector, RegressionDataset};
use crate::simulation::TransitionRecord;

pub const LOG_COLUMNS: [&str; 5] = ["node_id", "from_state", "to_state", "duration_seconds", "timestamp"];

#[derive(Debug, Clone, PartialEq)]
pub struct RowError {
    /// 1-based line number in the file (the header is line 1).
    pub line: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TransitionLog {
    pub feature_names: Vec<String>,
    pub records: Vec<TransitionRecord>,
    pub errors: Vec<RowError>,
}

/// Parses a transition log. Malformed rows are reported in
/// [`TransitionLog::errors`] and skipped; a bad header is a schema error.
pub fn parse_transition_log<R: Read>(reader: R) -> Result<TransitionLog> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let header = rdr.headers()?.clone();
    for (i, name) in LOG_COLUMNS.iter().enumerate() {
        if header.get(i) != Some(*name) {
            return Err(Error::Schema(format!(
                "column {} must be `{name}`, found `{}`",
                i + 1,
                header.get(i).unwrap_or("")
            )));
        }
    }
    let feature_names: Vec<String> = header.iter().skip(LOG_COLUMNS.len()).map(str::to_string).collect();

    let mut log = TransitionLog {
        feature_names,
        ..Default::default()
    };
    for row in rdr.records() {
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                log.errors.push(RowError { line, message: e.to_string() });
                continue;
            }
        };
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        match parse_row(&row, log.feature_names.len()) {
            Ok(r) => log.records.push(r),
            Err(message) => log.errors.push(RowError { line, message }),
        }
    }
    Ok(log)
}

fn parse_row(row: &csv::StringRecord, n_features: usize) -> std::result::Result<TransitionRecord, String> {
    if row.len() != LOG_COLUMNS.len() + n_features {
        return Err(format!(
            "expected {} fields, found {}",
            LOG_COLUMNS.len() + n_features,
            row.len()
        ));
    }
    let duration: f64 = row[3]
        .trim()
        .parse()
        .map_err(|_| format!("duration_seconds `{}` is not a number", &row[3]))?;
    if !(duration.is_finite() && duration >= 0.0) {
        return Err(format!("duration_seconds `{}` must be finite and nonnegative", &row[3]));
    }
    let timestamp: i64 = row[4]
        .trim()
        .parse()
        .map_err(|_| format!("timestamp `{}` is not an integer", &row[4]))?;
    let mut record = TransitionRecord::new(&row[0], &row[1], &row[2], duration, timestamp);
    if n_features > 0 {
        let cells: Vec<&str> = row.iter().skip(LOG_COLUMNS.len()).collect();
        if cells.iter().any(|c| !c.is_empty()) {
            let values = cells
                .iter()
                .map(|c| c.trim().parse::<f64>().map_err(|_| format!("feature `{c}` is not a number")))
                .collect::<std::result::Result<Vec<f64>, String>>()?;
            record.features = Some(FeatureVector::with_bias(&values).map_err(|e| e.to_string())?);
        }
    }
    Ok(record)
}

pub fn read_transition_log(path: &Path) -> Result<TransitionLog> {
    parse_transition_log(std::fs::File::open(path)?)
}

/// Writes records using the shortest round-tripping float representation.
pub fn write_transition_log<W: Write>(writer: W, feature_names: &[String], records: &[TransitionRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    let mut header: Vec<&str> = LOG_COLUMNS.to_vec();
    header.extend(feature_names.iter().map(String::as_str));
    w.write_record(&header)?;
    for r in records {
        let mut fields = vec![
            r.node_id.clone(),
            r.from_state.clone(),
            r.to_state.clone(),
            r.duration.to_string(),
            r.timestamp.to_string(),
        ];
        match &r.features {
            Some(f) => fields.extend(f.features().iter().map(|v| v.to_string())),
            None => fields.extend(std::iter::repeat_n(String::new(), feature_names.len())),
        }
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}

/// Splits the records leaving `from` into observed recoveries (ending in
/// `to`) and right-censored waits (ending anywhere else). Zero-length waits
/// carry no information and are dropped.
pub fn censored_samples(records: &[TransitionRecord], from: &str, to: &str) -> Result<CensoredSampleSet> {
    let mut observed = Vec::new();
    let mut censored = Vec::new();
    for r in records.iter().filter(|r| r.from_state == from && r.duration > 0.0) {
        if r.to_state == to {
            observed.push(r.duration);
        } else {
            censored.push(r.duration);
        }
    }
    CensoredSampleSet::from_durations(observed, &censored)
}

/// Like [`censored_samples`] but keeps each record's feature vector
/// (bias-only when a record has none).
pub fn regression_samples(records: &[TransitionRecord], from: &str, to: &str) -> Result<RegressionDataset> {
    let mut observed = Vec::new();
    let mut censored = Vec::new();
    for r in records.iter().filter(|r| r.from_state == from && r.duration > 0.0) {
        let f = r.features.clone().unwrap_or_else(FeatureVector::bias_only);
        if r.to_state == to {
            observed.push((r.duration, f));
        } else {
            censored.push((r.duration, f));
        }
    }
    RegressionDataset::new(observed, censored)
}

/// Formats like C's `%.{digits}g`.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if exp < -4 || exp >= digits as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim(mantissa), sign, exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim(&format!("{:.*}", decimals, x))
    }
}

pub const MODEL_FILE_HEADER: &str =
    "cluster_id,transition,family,param1,param2,tau_hat,c_int,baseline_tau,relative_savings,fitted_at";

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFileRow {
    pub cluster_id: String,
    /// e.g. `Unhealthy->PoweringOn`
    pub transition: String,
    pub family: Family,
    pub param1: f64,
    pub param2: f64,
    pub tau_hat: f64,
    pub c_int: f64,
    pub baseline_tau: f64,
    pub relative_savings: f64,
    pub fitted_at: i64,
}

impl ModelFileRow {
    fn validate(&self) -> Result<()> {
        if self.tau_hat.is_nan() || self.tau_hat < 0.0 {
            return Err(Error::Schema(format!("tau_hat {} is negative", self.tau_hat)));
        }
        let second = if self.family.n_params() == 2 { self.param2 } else { 1.0 };
        if !(self.param1 > 0.0 && second > 0.0) {
            return Err(Error::Schema(format!(
                "parameters of ({}, {}) must be positive",
                self.cluster_id, self.transition
            )));
        }
        Ok(())
    }
}

/// Serializes model-file rows, sorted by `(cluster_id, transition)`.
pub fn render_model_file(rows: &[ModelFileRow]) -> Result<String> {
    let mut seen = BTreeSet::new();
    for r in rows {
        r.validate()?;
        if !seen.insert((r.cluster_id.as_str(), r.transition.as_str())) {
            return Err(Error::DuplicateKey {
                cluster: r.cluster_id.clone(),
                transition: r.transition.clone(),
            });
        }
    }
    let mut sorted: Vec<&ModelFileRow> = rows.iter().collect();
    sorted.sort_by(|a, b| (&a.cluster_id, &a.transition).cmp(&(&b.cluster_id, &b.transition)));

    let mut out = String::new();
    out.push_str(MODEL_FILE_HEADER);
    out.push('\n');
    let g = |x: f64| format_significant(x, 12);
    for r in sorted {
        let param2 = if r.family.n_params() == 2 { g(r.param2) } else { String::new() };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            csv_field(&r.cluster_id),
            csv_field(&r.transition),
            r.family,
            g(r.param1),
            param2,
            g(r.tau_hat),
            g(r.c_int),
            g(r.baseline_tau),
            g(r.relative_savings),
            r.fitted_at
        )
        .expect("writing to a String");
    }
    Ok(out)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn emit_model_file(rows: &[ModelFileRow], path: &Path) -> Result<()> {
    std::fs::write(path, render_model_file(rows)?)?;
    Ok(())
}

/// Scenario config: the coupled scenario plus the baseline threshold.
///
/// `family2`/`shape2`/`scale2` may be omitted; such a config can still drive
/// single-threshold commands but not the coupled model.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub dist1: DistributionParams,
    pub dist2: Option<DistributionParams>,
    pub p: f64,
    pub bounce_time: f64,
    pub c_hi: f64,
    pub baseline_tau: f64,
}

pub const CONFIG_KEYS: [&str; 10] = [
    "family1", "shape1", "scale1", "family2", "shape2", "scale2", "p", "B", "C_HI", "baseline_tau",
];

pub const DEFAULT_BASELINE_TAU: f64 = 600.0;

impl ScenarioConfig {
    pub fn scenario(&self) -> Result<CoupledScenario> {
        let dist2 = self
            .dist2
            .ok_or_else(|| Error::Config("family2, shape2 and scale2 are required for the coupled model".into()))?;
        CoupledScenario::new(self.dist1, dist2, self.p, self.bounce_time, self.c_hi)
    }

    /// Canonical `key = value` rendering; parsing it yields the same config.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let mut dist = |i: u8, d: &DistributionParams| {
            let (a, b) = d.pair();
            let _ = writeln!(out, "family{i} = {}", d.family());
            let _ = writeln!(out, "shape{i} = {a}");
            if d.family().n_params() == 2 {
                let _ = writeln!(out, "scale{i} = {b}");
            }
        };
        dist(1, &self.dist1);
        if let Some(d2) = &self.dist2 {
            dist(2, d2);
        }
        let _ = writeln!(out, "p = {}", self.p);
        let _ = writeln!(out, "B = {}", self.bounce_time);
        let _ = writeln!(out, "C_HI = {}", self.c_hi);
        let _ = writeln!(out, "baseline_tau = {}", self.baseline_tau);
        out
    }
}

fn config_number(key: &str, value: &str) -> Result<f64> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("`{key}` must be a number, got `{value}`")))
}

/// Parses `key = value` lines (`#` starts a comment). Defaults: `p = 0`,
/// `B = 0`, `C_HI = 0`, `baseline_tau = 600`. For the exponential family
/// `shape` is the rate and `scale` is not used.
pub fn parse_scenario_config(text: &str) -> Result<ScenarioConfig> {
    let mut values: std::collections::HashMap<&str, String> = std::collections::HashMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
        let key = key.trim();
        let key = CONFIG_KEYS
            .iter()
            .find(|k| **k == key)
            .ok_or_else(|| Error::Config(format!("unknown key `{key}`")))?;
        if values.insert(key, value.trim().to_string()).is_some() {
            return Err(Error::Config(format!("duplicate key `{key}`")));
        }
    }

    let dist = |i: u8| -> Result<Option<DistributionParams>> {
        let fam_key = if i == 1 { "family1" } else { "family2" };
        let shape_key = if i == 1 { "shape1" } else { "shape2" };
        let scale_key = if i == 1 { "scale1" } else { "scale2" };
        let Some(fam) = values.get(fam_key) else {
            if values.contains_key(shape_key) || values.contains_key(scale_key) {
                return Err(Error::Config(format!("`{shape_key}`/`{scale_key}` given without `{fam_key}`")));
            }
            return Ok(None);
        };
        let family: Family = fam.parse()?;
        let shape = config_number(
            shape_key,
            values.get(shape_key).ok_or_else(|| Error::Config(format!("missing `{shape_key}`")))?,
        )?;
        let scale = if family.n_params() == 2 {
            config_number(
                scale_key,
                values.get(scale_key).ok_or_else(|| Error::Config(format!("missing `{scale_key}`")))?,
            )?
        } else {
            f64::NAN
        };
        DistributionParams::from_pair(family, shape, scale)
            .map(Some)
            .map_err(|e| Error::Config(format!("distribution {i}: {e}")))
    };

    let dist1 = dist(1)?.ok_or_else(|| Error::Config("missing `family1`".into()))?;
    let dist2 = dist(2)?;
    let number_or = |key: &str, default: f64| -> Result<f64> {
        values.get(key).map(|v| config_number(key, v)).unwrap_or(Ok(default))
    };
    let p = number_or("p", 0.0)?;
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Config(format!("`p` must lie in [0, 1), got {p}")));
    }
    let bounce_time = number_or("B", 0.0)?;
    let c_hi = number_or("C_HI", 0.0)?;
    let baseline_tau = number_or("baseline_tau", DEFAULT_BASELINE_TAU)?;
    for (k, v) in [("B", bounce_time), ("C_HI", c_hi), ("baseline_tau", baseline_tau)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::Config(format!("`{k}` must be finite and nonnegative, got {v}")));
        }
    }
    Ok(ScenarioConfig {
        dist1,
        dist2,
        p,
        bounce_time,
        c_hi,
        baseline_tau,
    })
}

pub fn load_scenario_config(path: &Path) -> Result<ScenarioConfig> {
    parse_scenario_config(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "node_id,from_state,to_state,duration_seconds,timestamp";

    #[test]
    fn header_only_log_is_empty() {
        let log = parse_transition_log(format!("{HEADER}\n").as_bytes()).unwrap();
        assert!(log.records.is_empty());
        assert!(log.errors.is_empty());
    }

    #[test]
    fn missing_column_is_schema_error() {
        let err = parse_transition_log("node_id,from_state,to_state,timestamp\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
    }

    #[test]
    fn single_row_round_trips() {
        let text = format!("{HEADER},feature_1,cluster\nn1,Unhealthy,Ready,12.5,1700000000,0.25,3\n");
        let log = parse_transition_log(text.as_bytes()).unwrap();
        assert_eq!(log.records.len(), 1);
        assert_eq!(log.feature_names, vec!["feature_1", "cluster"]);
        assert_eq!(log.records[0].features.as_ref().unwrap().values(), &[1.0, 0.25, 3.0]);
        let mut out = Vec::new();
        write_transition_log(&mut out, &log.feature_names, &log.records).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), text);
    }

    #[test]
    fn bad_rows_are_reported_with_line_numbers() {
        let text = format!(
            "{HEADER}\nn1,Unhealthy,Ready,4,1\nn2,Unhealthy,Ready,abc,2\nn3,Unhealthy,PoweringOn,600,3\n"
        );
        let log = parse_transition_log(text.as_bytes()).unwrap();
        assert_eq!(log.records.len(), 2);
        assert_eq!(log.errors.len(), 1);
        assert_eq!(log.errors[0].line, 3);
        assert!(log.errors[0].message.contains("abc"));
    }

    #[test]
    fn samples_from_records() {
        let recs = vec![
            TransitionRecord::new("a", "Unhealthy", "Ready", 4.0, 0),
            TransitionRecord::new("b", "Unhealthy", "PoweringOn", 600.0, 1),
            TransitionRecord::new("c", "Unhealthy", "PoweringOn", 600.0, 2),
            TransitionRecord::new("c", "PoweringOn", "Ready", 60.0, 3),
        ];
        let s = censored_samples(&recs, "Unhealthy", "Ready").unwrap();
        assert_eq!(s.observed(), &[4.0]);
        assert_eq!(s.censored(), &[(600.0, 2)]);
    }

    #[test]
    fn significant_digits() {
        assert_eq!(format_significant(18.0, 12), "18");
        assert_eq!(format_significant(1.0 / 3.0, 12), "0.333333333333");
        assert_eq!(format_significant(123456789012345.0, 12), "1.23456789012e+14");
        assert_eq!(format_significant(2.5e-7, 12), "2.5e-07");
        assert_eq!(format_significant(-0.125, 12), "-0.125");
        assert_eq!(format_significant(f64::INFINITY, 12), "inf");
    }

    fn row(cluster: &str, transition: &str) -> ModelFileRow {
        ModelFileRow {
            cluster_id: cluster.into(),
            transition: transition.into(),
            family: Family::Lomax,
            param1: 2.0,
            param2: 0.5,
            tau_hat: 18.0,
            c_int: 10.0,
            baseline_tau: 10.0,
            relative_savings: 0.022857142857142857,
            fitted_at: 1700000000,
        }
    }

    #[test]
    fn model_file_rendering() {
        assert_eq!(render_model_file(&[]).unwrap(), format!("{MODEL_FILE_HEADER}\n"));
        let rows = vec![row("b", "Unhealthy->PoweringOn"), row("a", "Unhealthy->PoweringOn")];
        let text = render_model_file(&rows).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[1], "a,Unhealthy->PoweringOn,lomax,2,0.5,18,10,10,0.0228571428571,1700000000");
        assert!(lines[2].starts_with("b,"));
        assert_eq!(render_model_file(&rows).unwrap(), text);
        let dup = vec![row("a", "x"), row("a", "x")];
        assert!(matches!(render_model_file(&dup), Err(Error::DuplicateKey { .. })));
    }

    #[test]
    fn config_defaults_and_errors() {
        let c = parse_scenario_config("family1 = lomax\nshape1 = 2\nscale1 = 0.5\n").unwrap();
        assert_eq!(c.p, 0.0);
        assert_eq!(c.bounce_time, 0.0);
        assert_eq!(c.baseline_tau, DEFAULT_BASELINE_TAU);
        assert!(c.dist2.is_none());
        assert!(c.scenario().is_err());

        let err = parse_scenario_config("family1 = lomax\nshape1 = 2\nscale1 = 0.5\np = 1.2\n").unwrap_err();
        assert!(matches!(err, Error::Config(m) if m.contains("`p`")));
        let err = parse_scenario_config("family1 = lomax\nshape1 = 2\nscale1 = 0.5\ncolour = red\n").unwrap_err();
        assert!(matches!(err, Error::Config(m) if m.contains("colour")));
    }

    #[test]
    fn full_config_round_trips() {
        let text = "family1 = lomax\nshape1 = 1.1\nscale1 = 0.2\nfamily2 = loglogistic\nshape2 = 2.5\nscale2 = 45\np = 0.1\nB = 30\nC_HI = 3600\nbaseline_tau = 600\n";
        let c = parse_scenario_config(text).unwrap();
        assert_eq!(c.dump(), text);
        assert!(c.scenario().is_ok());
        let commented = format!("# scenario\n{}", text.replace("p = 0.1", "p = 0.1   # bounce"));
        assert_eq!(parse_scenario_config(&commented).unwrap(), c);
    }
}
