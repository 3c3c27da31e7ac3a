use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use enarkit::bench::{
    results_csv, run_grid, simulate_truth, summarize, summary_csv, Cell, ExperimentConfig, GroupKey, ModelKind,
};
use enarkit::estimate::{fit_model, predict_one_step, rolling_one_step, DesignSpec, FitOptions, FitReport, ModelFit};
use enarkit::io;
use enarkit::lsm::LsmState;
use enarkit::network::{normalized_laplacian, select_k as cv_select_k, CvConfig, Graph};
use enarkit::process::{latent_multiplier, stationary_mean, Panel};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::{FitArgs, McArgs, PredictArgs, SelectKArgs, SimulateArgs};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(enarkit::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Core(e) => e.fmt(f),
        }
    }
}

impl From<enarkit::Error> for CliError {
    fn from(e: enarkit::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Core(e) => e.kind(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) if e.is_numerical() => 4,
            CliError::Core(_) => 3,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

/// Parses a lowercase enum name through its serde representation.
pub fn parse_enum<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn required(flag: Option<&PathBuf>, config: Option<&PathBuf>, name: &str) -> CliResult<PathBuf> {
    match flag.or(config) {
        Some(p) => Ok(p.clone()),
        None => usage(format!("missing --{name} (or paths.{name} in the config)")),
    }
}

fn print_json(value: &Value) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(enarkit::Error::from)?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Core(enarkit::Error::Io {
            path: PathBuf::from("<stdout>"),
            source: e,
        })),
        _ => Ok(()),
    }
}

fn read_inputs(edges: &Path, panel: &Path) -> CliResult<(Graph, Panel)> {
    let panel = io::read_panel(panel)?;
    let graph = io::read_edges(edges, Some(panel.n()))?;
    Ok((graph, panel))
}

pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    let config = RunConfig::load(args.common.config.as_deref())?;
    let mut section = config.simulate.clone();
    section.gen = args.gen.unwrap_or(section.gen);
    section.model = args.model.unwrap_or(section.model);
    section.n = args.n.unwrap_or(section.n);
    section.t = args.t.unwrap_or(section.t);
    section.k = args.k.unwrap_or(section.k);
    let seed = args.seed.unwrap_or(config.experiment.base_seed);

    let experiment = ExperimentConfig {
        n: vec![section.n],
        t: vec![section.t],
        k: vec![section.k],
        generators: vec![section.gen],
        truth_models: vec![section.model],
        base_seed: seed,
        ..config.experiment.clone()
    };
    experiment.validate()?;
    let cell = Cell {
        gen: section.gen,
        truth: section.model,
        n: section.n,
        t: section.t,
        k: section.k,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth = simulate_truth(&cell, &experiment, &mut rng)?;
    let panel = truth.panel.window(0, section.t)?;
    let phi = stationary_mean(&truth.dynamics, &truth.lap)?;

    let (latent_kind, s, latent_scale) = match section.model {
        ModelKind::Nar => ("none", Value::Null, 1.0),
        ModelKind::Enar => ("U", Value::Null, 1.0),
        ModelKind::Amnar => (
            "X",
            json!(experiment.s),
            latent_multiplier(section.n, section.t, experiment.s),
        ),
    };
    let latent: Vec<Vec<f64>> = truth.latent.row_iter().map(|r| r.iter().copied().collect()).collect();
    let doc = json!({
        "gen": section.gen,
        "model": section.model,
        "n": section.n,
        "t": section.t,
        "k": section.k,
        "seed": seed,
        "alpha": truth.dynamics.alpha,
        "theta": truth.dynamics.theta,
        "beta": truth.beta,
        "gamma": truth.dynamics.gamma,
        "sigma": truth.dynamics.sigma,
        "noise_variance": truth.dynamics.sigma * truth.dynamics.sigma,
        "covariate_variances": experiment.covariate_variances,
        "s": s,
        "latent_scale": latent_scale,
        "latent_kind": latent_kind,
        "latent": latent,
        "edges": truth.graph.edge_count(),
        "isolated_nodes": truth.graph.isolated_nodes().len(),
        "phi": {
            "mean": phi.mean(),
            "min": phi.min(),
            "max": phi.max(),
            "norm": phi.norm(),
        },
    });

    let edges_path = config.paths.edges.clone().unwrap_or_else(|| args.out_dir.join("edges.csv"));
    let panel_path = config.paths.panel.clone().unwrap_or_else(|| args.out_dir.join("panel.csv"));
    let truth_path = config.paths.truth.clone().unwrap_or_else(|| args.out_dir.join("truth.json"));
    io::write_edges(&edges_path, &truth.graph)?;
    io::write_panel(&panel_path, &panel)?;
    io::write_json(&truth_path, &doc)?;
    print_json(&json!({
        "edges": edges_path,
        "panel": panel_path,
        "truth": truth_path,
    }))
}

/// Design from flags, falling back to the config's `design` section.
fn design_from(args: &FitArgs, config: &RunConfig) -> CliResult<DesignSpec> {
    let Some(model) = args.model.as_deref() else {
        if args.k.is_some() || args.s.is_some() || args.intercept {
            return usage("--k, --s and --intercept need --model");
        }
        return match config.design {
            Some(spec) => Ok(spec),
            None => usage("missing --model (or design in the config)"),
        };
    };
    if args.s.is_some() && model != "amnar" {
        return usage("--s applies to amnar only");
    }
    if args.intercept && model != "enr" {
        return usage("--intercept applies to enr only");
    }
    let need_k = || match args.k {
        Some(k) => Ok(k),
        None => usage(format!("--model {model} needs --k")),
    };
    let spec = match model {
        "nar" => {
            if args.k.is_some() {
                return usage("--k is not accepted with --model nar");
            }
            DesignSpec::Nar
        }
        "enar" => DesignSpec::Enar { k: need_k()? },
        "amnar" => DesignSpec::Amnar {
            k: need_k()?,
            s: args.s.unwrap_or(0.25),
        },
        "enr" => DesignSpec::Enr {
            k: need_k()?,
            intercept: args.intercept,
        },
        other => return usage(format!("unknown model `{other}`; expected nar, enar, amnar or enr")),
    };
    spec.validate()?;
    Ok(spec)
}

pub fn fit(args: &FitArgs) -> CliResult<()> {
    let config = RunConfig::load(args.common.config.as_deref())?;
    let spec = design_from(args, &config)?;
    if args.latent_out.is_some() && !matches!(spec, DesignSpec::Amnar { .. }) {
        return usage("--latent-out applies to amnar only");
    }
    let edges = required(args.edges.as_ref(), config.paths.edges.as_ref(), "edges")?;
    let panel = required(args.panel.as_ref(), config.paths.panel.as_ref(), "panel")?;
    let (graph, panel) = read_inputs(&edges, &panel)?;
    let opts = FitOptions {
        allow_isolated: args.allow_isolated,
        lsm: config.lsm.clone(),
        ..FitOptions::default()
    };
    let model = fit_model(&panel, &graph, &spec, &opts)?;
    if let Some(path) = &args.latent_out {
        io::write_latent(path, &LsmState::from_matrix(&model.latent)?)?;
    }
    let report = model.to_report();
    match args.out.as_ref().or(config.paths.fit.as_ref()) {
        Some(path) => {
            io::write_json(path, &report)?;
            print_json(&json!({
                "fit": path,
                "model": spec.name(),
                "alpha": model.coef("alpha"),
                "theta": model.coef("theta"),
                "aic": report.aic,
                "bic": report.bic,
            }))
        }
        None => print_json(&serde_json::to_value(&report).map_err(enarkit::Error::from)?),
    }
}

pub fn predict(args: &PredictArgs) -> CliResult<()> {
    let config = RunConfig::load(args.common.config.as_deref())?;
    let edges = required(args.edges.as_ref(), config.paths.edges.as_ref(), "edges")?;
    let panel = required(args.panel.as_ref(), config.paths.panel.as_ref(), "panel")?;
    let out = required(args.out.as_ref(), config.paths.forecast.as_ref(), "out")?;
    let fit_path = args.fit.as_ref().or(config.paths.fit.as_ref());
    let report: Option<FitReport> = fit_path.map(|p| io::read_json(p)).transpose()?;
    let (graph, panel) = read_inputs(&edges, &panel)?;
    let t_len = panel.t_len();

    if args.window_len.is_some() || args.windows.is_some() || args.window_start.is_some() {
        let Some(window_len) = args.window_len else {
            return usage("rolling mode needs --window-len");
        };
        let windows = match (args.windows, args.window_start) {
            (Some(w), _) => w,
            (None, Some(start)) if start + window_len < t_len => t_len - window_len - start,
            (None, Some(start)) => return usage(format!("--window-start {start} leaves no window before T = {t_len}")),
            (None, None) => return usage("rolling mode needs --windows or --window-start"),
        };
        let spec = match (&report, config.design) {
            (Some(r), _) => r.spec,
            (None, Some(spec)) => spec,
            (None, None) => return usage("rolling mode needs --fit or design in the config"),
        };
        let opts = FitOptions {
            allow_isolated: args.allow_isolated,
            lsm: config.lsm.clone(),
            ..FitOptions::default()
        };
        let forecasts = rolling_one_step(&panel, &graph, &spec, window_len, windows, &opts)?;
        let mut csv = String::from("start,node,y_hat,y\n");
        for w in &forecasts {
            for (i, (f, a)) in w.forecast.iter().zip(w.actual.iter()).enumerate() {
                let _ = writeln!(csv, "{},{i},{f:?},{a:?}", w.start);
            }
        }
        io::write_atomic(&out, csv.as_bytes())?;
        let mspe: Vec<f64> = forecasts.iter().map(|w| w.mspe).collect();
        let mean = mspe.iter().sum::<f64>() / mspe.len() as f64;
        return print_json(&json!({ "model": spec.name(), "windows": mspe.len(), "mean_mspe": mean, "mspe": mspe }));
    }

    let Some(report) = report else {
        return usage("missing --fit (or paths.fit in the config)");
    };
    let model = ModelFit::from_report(&report)?;
    let origin = args.origin.unwrap_or(t_len.saturating_sub(1));
    if origin >= t_len {
        return usage(format!("--origin must be below T = {t_len}; covariates for t = T are not observed"));
    }
    let lap = normalized_laplacian(&graph, args.allow_isolated)?;
    let y_hat: DVector<f64> = predict_one_step(&model, &lap, &panel.y_at(origin), &panel.z()[origin])?;
    io::write_forecast(&out, &y_hat)?;
    let actual = panel.y_at(origin + 1);
    let mspe = (&y_hat - &actual).norm_squared() / actual.len() as f64;
    print_json(&json!({ "model": model.spec.name(), "origin": origin, "mspe": mspe }))
}

pub fn select_k(args: &SelectKArgs) -> CliResult<()> {
    let config = RunConfig::load(args.common.config.as_deref())?;
    let edges = required(args.edges.as_ref(), config.paths.edges.as_ref(), "edges")?;
    let graph = io::read_edges(&edges, args.nodes)?;
    let cv = CvConfig {
        folds: args.folds,
        holdout_fraction: args.holdout,
        ..CvConfig::new(args.k_max)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let sel = cv_select_k(&graph, &cv, &mut rng)?;
    print_json(&json!({ "k": sel.k, "cv_errors": sel.cv_errors, "seed": args.seed }))
}

pub fn mc(args: &McArgs) -> CliResult<()> {
    let config = RunConfig::load(args.common.config.as_deref())?;
    let mut experiment = if args.smoke {
        ExperimentConfig::smoke()
    } else {
        config.experiment.clone()
    };
    if let Some(reps) = args.reps {
        experiment.reps = reps;
    }
    if let Some(seed) = args.seed {
        experiment.base_seed = seed;
    }
    if args.no_timing {
        experiment.timing = false;
    }
    if args.jobs == 0 {
        return usage("--jobs must be at least 1");
    }
    let group_by = args
        .group_by
        .iter()
        .map(|s| GroupKey::parse(s.trim()).map_err(|e| CliError::Usage(e.to_string())))
        .collect::<CliResult<Vec<_>>>()?;
    let rows = run_grid(&experiment, args.jobs)?;
    let results_path = config.paths.results.clone().unwrap_or_else(|| args.out_dir.join("results.csv"));
    let summary_path = config.paths.summary.clone().unwrap_or_else(|| args.out_dir.join("summary.csv"));
    io::write_atomic(&results_path, results_csv(&rows)?.as_bytes())?;
    io::write_atomic(&summary_path, summary_csv(&summarize(&rows, &group_by)?)?.as_bytes())?;
    let failures = rows.iter().filter(|r| !r.is_ok()).count();
    print_json(&json!({
        "rows": rows.len(),
        "failures": failures,
        "results": results_path,
        "summary": summary_path,
    }))
}
