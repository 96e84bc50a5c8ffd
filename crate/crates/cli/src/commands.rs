use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use downtime_core::estimation::{fit, FitMethod};
use downtime_core::io::{
    censored_samples, emit_model_file, load_scenario_config, read_transition_log, regression_samples,
    write_transition_log, ModelFileRow, ScenarioConfig, TransitionLog,
};
use downtime_core::joint::{
    intervention_cost_vs_tau, joint_optimize, joint_optimize_multistart, sequential_thresholds, unhealthy_downtime,
};
use downtime_core::markov::{estimate_transition_model, expected_time_to_absorption};
use downtime_core::regression::{fit_regression, FeatureVector};
use downtime_core::simulation::{ab_experiment, generate_logs, TransitionRecord};
use downtime_core::threshold::{downtime_curve, optimal_threshold_with_baseline, ThresholdReport};
use downtime_core::{DistributionParams, Error, Family};

use crate::table::{num, print_tables, Format, Table};
use crate::{
    AbtestArgs, Cli, Command, ConfigArgs, CostArgs, CurveArgs, FitArgs, JointArgs, LogArgs, OptimizeArgs,
    ParamArgs, RegressArgs, SimulateArgs,
};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Data(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

pub fn run(cli: Cli) -> CliResult<()> {
    let format = cli.format;
    match cli.command {
        Command::Fit(a) => cmd_fit(a, format),
        Command::Optimize(a) => cmd_optimize(a, format),
        Command::Cost(a) => cmd_cost(a, format),
        Command::Regress(a) => cmd_regress(a, format),
        Command::Joint(a) => cmd_joint(a, format),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Abtest(a) => cmd_abtest(a, format),
        Command::Curve(a) => cmd_curve(a, format),
    }
}

fn load_log(path: &Path) -> CliResult<TransitionLog> {
    let log = read_transition_log(path)?;
    for e in &log.errors {
        eprintln!("warning: {}:{}: {}", path.display(), e.line, e.message);
    }
    Ok(log)
}

fn latest_timestamp(log: &TransitionLog) -> i64 {
    log.records.iter().map(|r| r.timestamp).max().unwrap_or(0)
}

/// Splits records by the value of a feature column; one `all` group without one.
fn clusters(log: &TransitionLog, column: Option<&str>) -> CliResult<Vec<(String, Vec<TransitionRecord>)>> {
    let Some(column) = column else {
        return Ok(vec![("all".to_string(), log.records.clone())]);
    };
    let idx = log
        .feature_names
        .iter()
        .position(|n| n == column)
        .ok_or_else(|| CliError::Usage(format!("log has no column `{column}`")))?;
    let mut groups: BTreeMap<String, Vec<TransitionRecord>> = BTreeMap::new();
    for r in &log.records {
        if let Some(f) = &r.features {
            groups.entry(f.features()[idx].to_string()).or_default().push(r.clone());
        }
    }
    Ok(groups.into_iter().collect())
}

fn method_name(m: FitMethod) -> &'static str {
    match m {
        FitMethod::LomaxBisection => "lomax-bisection",
        FitMethod::Numerical => "numerical",
        FitMethod::LomaxFallback => "lomax-fallback",
    }
}

fn params_cells(d: &DistributionParams) -> [String; 2] {
    let (a, b) = d.pair();
    [num(a), if d.family().n_params() == 2 { num(b) } else { String::new() }]
}

fn cmd_fit(a: FitArgs, format: Format) -> CliResult<()> {
    let LogArgs {
        log,
        from,
        to,
        cluster_column,
    } = a.log;
    let log = load_log(&log)?;
    let mut table = Table::new(&[
        "cluster_id",
        "family",
        "param1",
        "param2",
        "log_likelihood",
        "method",
        "converged",
        "boundary",
        "n_observed",
        "n_censored",
    ]);
    for (cluster, records) in clusters(&log, cluster_column.as_deref())? {
        let samples = censored_samples(&records, &from, &to)?;
        let report = fit(a.family, &samples)?;
        let [p1, p2] = params_cells(&report.params);
        table.push(vec![
            cluster,
            a.family.to_string(),
            p1,
            p2,
            num(report.log_likelihood),
            method_name(report.method).into(),
            report.converged.to_string(),
            report.boundary.to_string(),
            samples.n_observed().to_string(),
            samples.n_censored().to_string(),
        ]);
    }
    print_tables(&[table], format);
    Ok(())
}

fn params_from_args(family: Family, p: &ParamArgs) -> CliResult<DistributionParams> {
    let shape = p
        .shape
        .ok_or_else(|| CliError::Usage("--shape is required unless --log is given".into()))?;
    let scale = match (family.n_params(), p.scale) {
        (2, None) => return Err(CliError::Usage(format!("--scale is required for {family}"))),
        (_, s) => s.unwrap_or(f64::NAN),
    };
    Ok(DistributionParams::from_pair(family, shape, scale)?)
}

const REPORT_COLUMNS: [&str; 13] = [
    "cluster_id",
    "family",
    "param1",
    "param2",
    "tau_hat",
    "boundary",
    "edt_at_tau_hat",
    "edt_at_zero",
    "edt_limit",
    "baseline_tau",
    "edt_at_baseline",
    "relative_savings",
    "c_int",
];

fn report_row(cluster: &str, d: &DistributionParams, r: &ThresholdReport) -> Vec<String> {
    let [p1, p2] = params_cells(d);
    vec![
        cluster.to_string(),
        d.family().to_string(),
        p1,
        p2,
        num(r.tau_hat),
        r.boundary_case.name().to_string(),
        num(r.edt_at_tau_hat),
        num(r.edt_at_zero),
        num(r.edt_limit.unwrap_or(f64::INFINITY)),
        num(r.baseline_tau),
        num(r.edt_at_baseline),
        num(r.relative_savings),
        num(r.c_int),
    ]
}

fn model_row(cluster: &str, transition: &str, d: &DistributionParams, r: &ThresholdReport, fitted_at: i64) -> ModelFileRow {
    let (param1, param2) = d.pair();
    ModelFileRow {
        cluster_id: cluster.to_string(),
        transition: transition.to_string(),
        family: d.family(),
        param1,
        param2,
        tau_hat: r.tau_hat,
        c_int: r.c_int,
        baseline_tau: r.baseline_tau,
        relative_savings: r.relative_savings,
        fitted_at,
    }
}

fn cmd_optimize(a: OptimizeArgs, format: Format) -> CliResult<()> {
    let transition = format!("{}->{}", a.from, a.intervention);
    let mut fitted: Vec<(String, DistributionParams)> = Vec::new();
    let mut fitted_at = a.fitted_at.unwrap_or(0);
    match &a.log {
        Some(path) => {
            let log = load_log(path)?;
            fitted_at = a.fitted_at.unwrap_or_else(|| latest_timestamp(&log));
            for (cluster, records) in clusters(&log, a.cluster_column.as_deref())? {
                let samples = censored_samples(&records, &a.from, &a.to)?;
                fitted.push((cluster, fit(a.family, &samples)?.params));
            }
        }
        None => fitted.push(("all".into(), params_from_args(a.family, &a.params)?)),
    }

    let mut table = Table::new(&REPORT_COLUMNS);
    let mut rows = Vec::new();
    for (cluster, d) in &fitted {
        let r = optimal_threshold_with_baseline(d, a.c_int, a.baseline_tau)?;
        table.push(report_row(cluster, d, &r));
        rows.push(model_row(cluster, &transition, d, &r, fitted_at));
    }
    if let Some(path) = &a.model_file {
        emit_model_file(&rows, path)?;
    }
    print_tables(&[table], format);
    Ok(())
}

fn cmd_cost(a: CostArgs, format: Format) -> CliResult<()> {
    let log = load_log(&a.log)?;
    let mut states: Vec<String> = Vec::new();
    for r in &log.records {
        for s in [&r.from_state, &r.to_state] {
            if !states.contains(s) {
                states.push(s.clone());
            }
        }
    }
    let model = estimate_transition_model(&log.records, &states, &a.absorbing)?;
    let times = expected_time_to_absorption(&model)?;
    let target = model.index_of(&a.target)?;

    let summary = Table::record(vec![("target", a.target.clone()), ("c_int", num(times[target]))]);
    let mut hitting = Table::new(&["state", "expected_time_to_absorption"]);
    for (s, t) in states.iter().zip(&times) {
        hitting.push(vec![s.clone(), num(*t)]);
    }
    let mut edges = Table::new(&["from_state", "to_state", "probability", "mean_time"]);
    let (p, t) = (model.probabilities(), model.mean_times());
    for i in 0..states.len() {
        for j in 0..states.len() {
            if p[(i, j)] > 0.0 {
                edges.push(vec![states[i].clone(), states[j].clone(), num(p[(i, j)]), num(t[(i, j)])]);
            }
        }
    }
    print_tables(&[summary, hitting, edges], format);
    Ok(())
}

fn mean_features(records: &[&TransitionRecord], dim: usize) -> CliResult<FeatureVector> {
    let mut sum = vec![0.0; dim - 1];
    let mut n = 0usize;
    for r in records {
        if let Some(f) = &r.features {
            for (s, v) in sum.iter_mut().zip(f.features()) {
                *s += v;
            }
            n += 1;
        }
    }
    let n = n.max(1) as f64;
    Ok(FeatureVector::with_bias(&sum.iter().map(|s| s / n).collect::<Vec<_>>())?)
}

fn cmd_regress(a: RegressArgs, format: Format) -> CliResult<()> {
    let LogArgs {
        log: path,
        from,
        to,
        cluster_column,
    } = &a.log;
    let log = load_log(path)?;
    let data = regression_samples(&log.records, from, to)?;
    let upper = a.upper_shape.zip(a.upper_scale).map(|(u1, u2)| [u1, u2]);
    let result = fit_regression(a.family, &data, upper)?;
    let model = &result.model;

    let summary = Table::record(vec![
        ("family", a.family.to_string()),
        ("initial_log_likelihood", num(result.initial_log_likelihood)),
        ("log_likelihood", num(result.log_likelihood)),
        ("iterations", result.iterations.to_string()),
        ("converged", result.converged.to_string()),
        ("upper_bound1", num(model.upper_bounds()[0])),
        ("upper_bound2", num(model.upper_bounds()[1])),
    ]);

    let names: Vec<String> = std::iter::once("bias".to_string())
        .chain(log.feature_names.iter().cloned())
        .collect();
    let mut weights = Table::new(&["parameter", "feature", "weight"]);
    for (k, w) in model.weights().iter().enumerate() {
        for (name, v) in names.iter().zip(w) {
            weights.push(vec![format!("param{}", k + 1), name.clone(), num(*v)]);
        }
    }

    let transition = format!("{from}->{}", a.intervention);
    let fitted_at = a.fitted_at.unwrap_or_else(|| latest_timestamp(&log));
    let mut thresholds = Table::new(&REPORT_COLUMNS);
    let mut rows = Vec::new();
    for (cluster, records) in clusters(&log, cluster_column.as_deref())? {
        let leaving: Vec<&TransitionRecord> = records.iter().filter(|r| &r.from_state == from).collect();
        if leaving.is_empty() {
            continue;
        }
        let d = model.predict_params(&mean_features(&leaving, model.dim())?)?;
        let r = optimal_threshold_with_baseline(&d, a.c_int, a.baseline_tau)?;
        thresholds.push(report_row(&cluster, &d, &r));
        rows.push(model_row(&cluster, &transition, &d, &r, fitted_at));
    }
    if let Some(path) = &a.model_file {
        emit_model_file(&rows, path)?;
    }
    print_tables(&[summary, weights, thresholds], format);
    Ok(())
}

/// Loads the config; `Ok(None)` means `--dump-config` was handled.
fn load_config(c: &ConfigArgs) -> CliResult<Option<ScenarioConfig>> {
    let cfg = load_scenario_config(&c.config)?;
    if c.dump_config {
        print!("{}", cfg.dump());
        return Ok(None);
    }
    Ok(Some(cfg))
}

fn cmd_joint(a: JointArgs, format: Format) -> CliResult<()> {
    let Some(cfg) = load_config(&a.config)? else {
        return Ok(());
    };
    let s = cfg.scenario()?;
    let opt = match a.init_tau1.zip(a.init_tau2) {
        Some(init) => joint_optimize(&s, init)?,
        None => joint_optimize_multistart(&s)?,
    };
    let (seq1, seq2) = sequential_thresholds(&s)?;
    let base = cfg.baseline_tau;
    let table = Table::record(vec![
        ("tau1", num(opt.tau1)),
        ("tau2", num(opt.tau2)),
        ("downtime", num(opt.downtime)),
        ("iterations", opt.iterations.to_string()),
        ("converged", opt.converged.to_string()),
        ("sequential_tau1", num(seq1)),
        ("sequential_tau2", num(seq2)),
        ("sequential_downtime", num(unhealthy_downtime(&s, seq1, seq2)?)),
        ("baseline_tau", num(base)),
        ("baseline_downtime", num(unhealthy_downtime(&s, base, base)?)),
    ]);
    print_tables(&[table], format);
    Ok(())
}

fn cmd_simulate(a: SimulateArgs) -> CliResult<()> {
    let Some(cfg) = load_config(&a.config)? else {
        return Ok(());
    };
    let s = cfg.scenario()?;
    let (n, seed) = (a.n.expect("required by clap"), a.seed.expect("required by clap"));
    let policy = (a.tau1.unwrap_or(cfg.baseline_tau), a.tau2.unwrap_or(cfg.baseline_tau));
    let records = generate_logs(&s, policy, n, seed)?;
    match &a.output {
        Some(path) => write_transition_log(std::fs::File::create(path).map_err(Error::from)?, &[], &records)?,
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_transition_log(&mut lock, &[], &records)?;
            lock.flush().map_err(Error::from)?;
        }
    }
    Ok(())
}

fn cmd_abtest(a: AbtestArgs, format: Format) -> CliResult<()> {
    let Some(cfg) = load_config(&a.config)? else {
        return Ok(());
    };
    let s = cfg.scenario()?;
    let (n, seed) = (a.n.expect("required by clap"), a.seed.expect("required by clap"));
    let treatment = match a.treatment_tau1.zip(a.treatment_tau2) {
        Some(t) => t,
        None => {
            let opt = joint_optimize_multistart(&s)?;
            (opt.tau1, opt.tau2)
        }
    };
    let control = (
        a.control_tau1.unwrap_or(cfg.baseline_tau),
        a.control_tau2.unwrap_or(cfg.baseline_tau),
    );
    let r = ab_experiment(&s, treatment, control, a.prob, n, seed)?;
    let table = Table::record(vec![
        ("treatment_tau1", num(treatment.0)),
        ("treatment_tau2", num(treatment.1)),
        ("control_tau1", num(control.0)),
        ("control_tau2", num(control.1)),
        ("treatment_n", r.treatment_n.to_string()),
        ("control_n", r.control_n.to_string()),
        ("treatment_mean", num(r.treatment_mean)),
        ("control_mean", num(r.control_mean)),
        ("difference", num(r.control_mean - r.treatment_mean)),
        ("t_stat", num(r.t_stat)),
        ("p_value", num(r.p_value)),
        ("assignment_prob", num(r.assignment_prob)),
    ]);
    print_tables(&[table], format);
    Ok(())
}

fn cmd_curve(a: CurveArgs, format: Format) -> CliResult<()> {
    let (d, scenario) = match &a.config {
        Some(path) => {
            let cfg = load_scenario_config(path)?;
            let s = if cfg.dist2.is_some() { Some(cfg.scenario()?) } else { None };
            (cfg.dist1, s)
        }
        None => (params_from_args(a.family.expect("required by clap"), &a.params)?, None),
    };
    if a.points < 2 {
        return Err(CliError::Usage("--points must be at least 2".into()));
    }
    let tau_max = a.tau_max.unwrap_or(10.0 * d.time_scale());
    if !(tau_max.is_finite() && tau_max > 0.0) {
        return Err(CliError::Usage("--tau-max must be finite and positive".into()));
    }
    let grid: Vec<f64> = (0..a.points)
        .map(|i| tau_max * i as f64 / (a.points - 1) as f64)
        .collect();
    let curve = downtime_curve(&d, a.c_int, &grid)?;
    let table = match &scenario {
        Some(s) => {
            let costs = intervention_cost_vs_tau(s, a.c_int, &grid)?;
            let mut t = Table::new(&["tau", "expected_downtime", "intervention_cost"]);
            for ((tau, e), (_, c)) in curve.iter().zip(&costs) {
                t.push(vec![num(*tau), num(*e), num(*c)]);
            }
            t
        }
        None => {
            let mut t = Table::new(&["tau", "expected_downtime"]);
            for (tau, e) in &curve {
                t.push(vec![num(*tau), num(*e)]);
            }
            t
        }
    };
    print_tables(&[table], format);
    Ok(())
}
