//! `totalrisk` — total-risk computation and verification on filtered trees.
//!
//! Exit codes: 0 = every check holds, 1 = a verified inequality is violated
//! (a witness is emitted), 2 = input or configuration error.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use totalrisk::compensator::{
    check_projection_martingale, check_supermartingale, project, stopped_bound,
    supermartingale_process, total_risk,
};
use totalrisk::convex::{convex_order_leq, convex_order_vs_exponential, ShortfallReport};
use totalrisk::io::{
    adapted_to_json, detect_exact, distribution_to_json, parse_distribution, parse_model,
    parse_node_specs, validation_to_json, ModelDoc,
};
use totalrisk::montecarlo::{
    density_from_spec, discrete_risk_law, empirical_shortfall, horizon_for_tail, ks_band_99,
    ks_statistic, sample_natural_risk, shortfall_gap,
};
use totalrisk::process::{RawIncreasingProcess, TerminalRule};
use totalrisk::scenarios::insurance::{
    build_insurance_model, HealthChainSpec, MortalityTable, SignalSpec,
};
use totalrisk::scenarios::kesten::{kesten_check, KestenInstance};
use totalrisk::scenarios::pivotal::{rule_from_spec, verify_scenario2_chain, PivotalModel};
use totalrisk::{ExpValue, ProbTree, Rat, Scalar};

#[derive(Parser)]
#[command(
    name = "totalrisk",
    version,
    about = "Hazard sums on filtered probability trees, with certified convex-order checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Input file(s); `order` takes two (dominated law first).
    #[arg(long = "input", required = true)]
    input: Vec<PathBuf>,
    /// Also write the payload to this path (mc-natural adds `<out>.ecdf.csv`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Force exact rational arithmetic (auto-detected from "a/b" inputs).
    #[arg(long)]
    exact: bool,
    /// Comparison tolerance; defaults to 0 in exact mode, 1e-10 in float mode.
    #[arg(long)]
    tol: Option<f64>,
    /// RNG seed for Monte Carlo commands.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Sample count for Monte Carlo commands.
    #[arg(long, default_value_t = 1_000_000)]
    samples: usize,
    /// λ checkpoint (repeatable); accepts "a/b" in exact mode.
    #[arg(long = "lambda")]
    lambda: Vec<String>,
    /// Mesh width (repeatable) for mc-converge.
    #[arg(long = "mesh")]
    mesh: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Check tree invariants; exit 1 on the first violation.
    Validate(CommonArgs),
    /// Total risk of the document's Z: law dump plus mean.
    Risk(CommonArgs),
    /// Optional projection and compensator of the document's A.
    Project(CommonArgs),
    /// Supermartingale and projection-martingale checks for A (or 1_{Z≤n}).
    Supermartingale(CommonArgs),
    /// Convex-order check of a distribution against the mean-one exponential.
    OrderExp(CommonArgs),
    /// Pairwise convex-order check (first input ⪯ second input).
    Order(CommonArgs),
    /// Stopped tail bound at each --lambda for the document's A.
    StoppedBound(CommonArgs),
    /// Premium-total law and order check for a mortality/signal model.
    ScenarioInsurance(CommonArgs),
    /// Revelation-chain verification for a pivotal-bond model.
    ScenarioPivotal(CommonArgs),
    /// Joint conditional-sum/realized-sum tail bound.
    ScenarioKesten(CommonArgs),
    /// Sample the natural-filtration total risk and test its Exp(1) law.
    McNatural(CommonArgs),
    /// Mesh-convergence of the discretized total risk toward Exp(1).
    McConverge(CommonArgs),
}

fn main() -> ExitCode {
    init_threads();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// TOTALRISK_THREADS caps the worker count; results do not depend on it.
fn init_threads() {
    if let Ok(s) = std::env::var("TOTALRISK_THREADS") {
        if let Ok(n) = s.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
        }
    }
}

fn run(command: Command) -> Result<bool> {
    match command {
        Command::Validate(a) => cmd_validate(&a),
        Command::Risk(a) => dispatch(&a, cmd_risk::<Rat>, cmd_risk::<f64>),
        Command::Project(a) => dispatch(&a, cmd_project::<Rat>, cmd_project::<f64>),
        Command::Supermartingale(a) => {
            dispatch(&a, cmd_supermartingale::<Rat>, cmd_supermartingale::<f64>)
        }
        Command::OrderExp(a) => dispatch(&a, cmd_order_exp::<Rat>, cmd_order_exp::<f64>),
        Command::Order(a) => cmd_order(&a),
        Command::StoppedBound(a) => {
            dispatch(&a, cmd_stopped_bound::<Rat>, cmd_stopped_bound::<f64>)
        }
        Command::ScenarioInsurance(a) => {
            dispatch(&a, cmd_insurance::<Rat>, cmd_insurance::<f64>)
        }
        Command::ScenarioPivotal(a) => dispatch(&a, cmd_pivotal::<Rat>, cmd_pivotal::<f64>),
        Command::ScenarioKesten(a) => dispatch(&a, cmd_kesten::<Rat>, cmd_kesten::<f64>),
        Command::McNatural(a) => cmd_mc_natural(&a),
        Command::McConverge(a) => cmd_mc_converge(&a),
    }
}

// ---------------------------------------------------------------------------
// Plumbing
// ---------------------------------------------------------------------------

fn read_doc(path: &PathBuf) -> Result<Value> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))
}

fn single_doc(args: &CommonArgs) -> Result<Value> {
    if args.input.len() != 1 {
        bail!("this subcommand takes exactly one --input");
    }
    read_doc(&args.input[0])
}

fn dispatch(
    args: &CommonArgs,
    exact: impl FnOnce(&CommonArgs, &Value) -> Result<bool>,
    float: impl FnOnce(&CommonArgs, &Value) -> Result<bool>,
) -> Result<bool> {
    let doc = single_doc(args)?;
    if args.exact || detect_exact(&doc) {
        exact(args, &doc)
    } else {
        float(args, &doc)
    }
}

fn tol_of<K: Scalar>(args: &CommonArgs) -> Result<K> {
    match args.tol {
        None => Ok(K::default_tol()),
        Some(x) if x >= 0.0 => {
            K::from_f64(x).ok_or_else(|| anyhow!("tolerance {x} is not finite"))
        }
        Some(x) => bail!("tolerance must be nonnegative, got {x}"),
    }
}

fn lambdas_of<K: Scalar>(args: &CommonArgs) -> Result<Vec<K>> {
    args.lambda
        .iter()
        .map(|s| {
            K::parse_json(&Value::String(s.clone()))
                .map_err(|e| anyhow!("bad --lambda {s:?}: {e}"))
        })
        .collect()
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Print the payload (and write artifacts), returning the holds verdict.
fn emit(args: &CommonArgs, payload: &Value, csv: Option<String>, holds: bool) -> Result<bool> {
    let text = match args.format {
        Format::Json => format!("{}\n", serde_json::to_string_pretty(payload)?),
        Format::Csv => csv.ok_or_else(|| anyhow!("this subcommand has no CSV payload"))?,
    };
    print!("{text}");
    if let Some(out) = &args.out {
        std::fs::write(out, &text).with_context(|| format!("cannot write {}", out.display()))?;
    }
    Ok(holds)
}

fn require_a<K: Scalar>(model: &ModelDoc<K>) -> Result<RawIncreasingProcess<K>> {
    let paths = model
        .a_paths
        .clone()
        .ok_or_else(|| anyhow!("document has no \"A\" process"))?;
    RawIncreasingProcess::new(&model.tree, paths, TerminalRule::ExactlyOne)
        .map_err(|e| anyhow!("invalid A: {e}"))
}

/// The document's A, or the indicator process of its Z.
fn a_or_indicator<K: Scalar>(model: &ModelDoc<K>) -> Result<RawIncreasingProcess<K>> {
    if model.a_paths.is_some() {
        return require_a(model);
    }
    let z = model
        .z
        .as_ref()
        .ok_or_else(|| anyhow!("document needs either \"A\" or \"Z\""))?;
    if z.any_infinite() {
        bail!("indicator process of an infinite Z has terminal value 0; provide \"A\" explicitly");
    }
    Ok(RawIncreasingProcess::indicator_of_time(
        &model.tree,
        z,
        model.filtration.horizon(),
    ))
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn cmd_validate(args: &CommonArgs) -> Result<bool> {
    let doc = single_doc(args)?;
    let report = if args.exact || detect_exact(&doc) {
        ProbTree::<Rat>::validate(parse_node_specs(&doc)?)
    } else {
        ProbTree::<f64>::validate(parse_node_specs(&doc)?)
    };
    let payload = json!({ "check": "tree_validation", "report": validation_to_json(&report) });
    emit(args, &payload, None, report.ok)
}

fn cmd_risk<K: Scalar>(args: &CommonArgs, doc: &Value) -> Result<bool> {
    let model: ModelDoc<K> = parse_model(doc)?;
    let z = model.z.as_ref().ok_or_else(|| anyhow!("document has no \"Z\""))?;
    let (_, law) = total_risk(&model.tree, &model.filtration, z, true)?;
    let payload = json!({
        "check": "total_risk",
        "mode": if K::EXACT { "exact" } else { "float" },
        "mean": law.mean().to_json(),
        "distribution": distribution_to_json(&law),
    });
    let csv = Some(distribution_csv(&law));
    emit(args, &payload, csv, true)
}

fn distribution_csv<K: Scalar>(law: &totalrisk::Distribution<K>) -> String {
    let mut s = String::from("value,probability\n");
    for (v, p) in law.support() {
        s.push_str(&format!("{},{}\n", fmt17(v.to_f64()), fmt17(p.to_f64())));
    }
    s
}

fn cmd_project<K: Scalar>(args: &CommonArgs, doc: &Value) -> Result<bool> {
    let model: ModelDoc<K> = parse_model(doc)?;
    let a = require_a(&model)?;
    let pair = project(&model.tree, &model.filtration, &a)?;
    let payload = json!({
        "optional": adapted_to_json(&model.tree, &pair.optional),
        "compensator": adapted_to_json(&model.tree, &pair.compensator),
    });
    emit(args, &payload, None, true)
}

fn cmd_supermartingale<K: Scalar>(args: &CommonArgs, doc: &Value) -> Result<bool> {
    let model: ModelDoc<K> = parse_model(doc)?;
    let tol: K = tol_of(args)?;
    let a = a_or_indicator(&model)?;
    let pair = project(&model.tree, &model.filtration, &a)?;
    let m = supermartingale_process(&model.tree, &model.filtration, &a)?;
    let super_report = check_supermartingale(&model.tree, &model.filtration, &m, &tol);
    let mart_report = check_projection_martingale(&model.tree, &model.filtration, &pair, &tol);
    let holds = super_report.holds && mart_report.holds;
    let m_values: Vec<Value> = (0..=m.horizon())
        .map(|n| {
            let atoms: std::collections::BTreeMap<String, f64> = model
                .tree
                .level_nodes(m.level_at(n))
                .iter()
                .enumerate()
                .map(|(i, &node)| (model.tree.label(node).to_string(), m.step(n)[i].to_f64()))
                .collect();
            json!({ "step": n, "atoms": atoms })
        })
        .collect();
    let payload = json!({
        "checks": [super_report, mart_report],
        "m": m_values,
        "holds": holds,
    });
    emit(args, &payload, None, holds)
}

fn cmd_order_exp<K: Scalar>(args: &CommonArgs, doc: &Value) -> Result<bool> {
    let dist = parse_distribution::<K>(doc)?;
    let tol: K = tol_of(args)?;
    let extra = lambdas_of::<K>(args)?;
    let report = convex_order_vs_exponential(&dist, &tol, &extra)?;
    let holds = report.holds;
    emit(
        args,
        &serde_json::to_value(&report)?,
        Some(shortfall_csv(&report)),
        holds,
    )
}

fn shortfall_csv(report: &ShortfallReport) -> String {
    let mut s = String::from("lambda,shortfall,reference,margin,ok\n");
    for c in &report.checkpoints {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt17(c.lambda),
            fmt17(c.shortfall),
            fmt17(c.reference),
            fmt17(c.margin),
            c.ok
        ));
    }
    s
}

fn cmd_order(args: &CommonArgs) -> Result<bool> {
    if args.input.len() != 2 {
        bail!("order takes exactly two --input files: dominated law, then dominating law");
    }
    let y_doc = read_doc(&args.input[0])?;
    let x_doc = read_doc(&args.input[1])?;
    let exact = args.exact || detect_exact(&y_doc) || detect_exact(&x_doc);
    let (report, holds) = if exact {
        let y = parse_distribution::<Rat>(&y_doc)?;
        let x = parse_distribution::<Rat>(&x_doc)?;
        let r = convex_order_leq(&y, &x, &tol_of::<Rat>(args)?);
        let h = r.holds;
        (serde_json::to_value(&r)?, h)
    } else {
        let y = parse_distribution::<f64>(&y_doc)?;
        let x = parse_distribution::<f64>(&x_doc)?;
        let r = convex_order_leq(&y, &x, &tol_of::<f64>(args)?);
        let h = r.holds;
        (serde_json::to_value(&r)?, h)
    };
    emit(args, &report, None, holds)
}

fn cmd_stopped_bound<K: Scalar>(args: &CommonArgs, doc: &Value) -> Result<bool> {
    let model: ModelDoc<K> = parse_model(doc)?;
    let tol: K = tol_of(args)?;
    let lambdas: Vec<K> = lambdas_of(args)?;
    if lambdas.is_empty() {
        bail!("stopped-bound needs at least one --lambda");
    }
    let a = a_or_indicator(&model)?;
    let mut rows = Vec::new();
    let mut holds = true;
    for lambda in &lambdas {
        let r = stopped_bound(&model.tree, &model.filtration, &a, lambda, &tol)?;
        holds &= r.holds && r.rhs_matches_terminal;
        rows.push(json!({
            "lambda": r.lambda.to_json(),
            "rhs": r.rhs.to_json(),
            "reference": r.reference,
            "terminal_shortfall": r.terminal_shortfall.to_json(),
            "holds": r.holds,
            "rhs_matches_terminal": r.rhs_matches_terminal,
            "hit_probability": r.hit_probability.to_json(),
        }));
    }
    let payload = json!({ "check": "stopped_bound", "bounds": rows, "holds": holds });
    emit(args, &payload, None, holds)
}

fn parse_signal<K: Scalar>(doc: &Value) -> Result<SignalSpec<K>> {
    let Some(v) = doc.get("signal") else {
        return Ok(SignalSpec::None);
    };
    match v {
        Value::String(s) if s == "none" => Ok(SignalSpec::None),
        Value::String(s) if s == "oracle" => Ok(SignalSpec::Oracle),
        Value::Object(m) => {
            let kind = m.get("type").and_then(|t| t.as_str()).unwrap_or("");
            if kind != "health-chain" {
                bail!("signal object must have \"type\": \"health-chain\"");
            }
            let vec_of = |key: &str| -> Result<Vec<K>> {
                m.get(key)
                    .and_then(|x| x.as_array())
                    .ok_or_else(|| anyhow!("health-chain needs array {key:?}"))?
                    .iter()
                    .map(|x| K::parse_json(x).map_err(|e| anyhow!("{key}: {e}")))
                    .collect()
            };
            let transition = m
                .get("transition")
                .and_then(|x| x.as_array())
                .ok_or_else(|| anyhow!("health-chain needs array \"transition\""))?
                .iter()
                .map(|row| {
                    row.as_array()
                        .ok_or_else(|| anyhow!("transition rows must be arrays"))?
                        .iter()
                        .map(|x| K::parse_json(x).map_err(|e| anyhow!("transition: {e}")))
                        .collect::<Result<Vec<K>>>()
                })
                .collect::<Result<Vec<Vec<K>>>>()?;
            Ok(SignalSpec::HealthChain(HealthChainSpec {
                initial: vec_of("initial")?,
                transition,
                weights: vec_of("weights")?,
            }))
        }
        other => bail!("unsupported signal {other}"),
    }
}

fn cmd_insurance<K: Scalar>(args: &CommonArgs, doc: &Value) -> Result<bool> {
    let q: Vec<K> = doc
        .get("q")
        .and_then(|v| v.as_array())
        .ok_or_else(|| anyhow!("insurance document needs array \"q\""))?
        .iter()
        .map(|x| K::parse_json(x).map_err(|e| anyhow!("q: {e}")))
        .collect::<Result<Vec<K>>>()?;
    let table = MortalityTable::new(q)?;
    let signal = parse_signal::<K>(doc)?;
    let model = build_insurance_model(&table, &signal)?;
    let (_, law) = total_risk(&model.tree, &model.filtration, &model.death_year, true)?;
    let tol: K = tol_of(args)?;
    let order = convex_order_vs_exponential(&law, &tol, &lambdas_of::<K>(args)?)?;
    let holds = order.holds;
    let payload = json!({
        "signal": signal.name(),
        "years": table.years(),
        "hazards": table.hazards().iter().map(|h| h.to_json()).collect::<Vec<_>>(),
        "premium_law": distribution_to_json(&law),
        "order_check": order,
        "holds": holds,
    });
    emit(args, &payload, Some(distribution_csv(&law)), holds)
}

fn cmd_pivotal<K: Scalar>(args: &CommonArgs, doc: &Value) -> Result<bool> {
    let alphabets: Vec<Vec<(K, K)>> = if let Some(per_edge) = doc.get("alphabets") {
        per_edge
            .as_array()
            .ok_or_else(|| anyhow!("\"alphabets\" must be an array of alphabets"))?
            .iter()
            .map(|a| parse_alphabet::<K>(a))
            .collect::<Result<_>>()?
    } else {
        let m = doc
            .get("m")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| anyhow!("pivotal document needs \"m\" or \"alphabets\""))?
            as usize;
        let shared = parse_alphabet::<K>(
            doc.get("alphabet")
                .ok_or_else(|| anyhow!("pivotal document needs \"alphabet\""))?,
        )?;
        vec![shared; m]
    };
    let cap = doc
        .get("K")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| anyhow!("pivotal document needs integer \"K\""))? as usize;
    let rule = rule_from_spec::<K>(
        doc.get("rule")
            .ok_or_else(|| anyhow!("pivotal document needs \"rule\""))?,
    )?;
    let order = match doc.get("order") {
        None => None,
        Some(v) => Some(
            v.as_array()
                .ok_or_else(|| anyhow!("\"order\" must be an array of edge indices"))?
                .iter()
                .map(|x| {
                    x.as_u64()
                        .map(|u| u as usize)
                        .ok_or_else(|| anyhow!("\"order\" entries must be integers"))
                })
                .collect::<Result<Vec<_>>>()?,
        ),
    };
    let model = PivotalModel::new(alphabets, cap, rule, order)?;
    let mut grid: Vec<K> = lambdas_of(args)?;
    if grid.is_empty() {
        grid = vec![
            K::from_int(1),
            K::from_ratio(3, 2),
            K::from_int(2),
            K::from_int(3),
        ];
    }
    let tol: K = tol_of(args)?;
    let report = verify_scenario2_chain(&model, &grid, &tol)?;
    let holds = report.holds;
    let payload = json!({
        "rule": model.rule_name(),
        "edges": model.edges(),
        "cap": report.cap,
        "samples": report.samples,
        "max_pivotal_count": report.max_pivotal_count,
        "cap_exceeded_probability": report.cap_exceeded_probability,
        "chain": report.chain,
        "order_checks": report.order_checks,
        "tail_checks": report.tail_checks,
        "w_prime_law": distribution_to_json(&report.w_prime_law),
        "holds": holds,
    });
    emit(args, &payload, None, holds)
}

fn parse_alphabet<K: Scalar>(v: &Value) -> Result<Vec<(K, K)>> {
    v.as_array()
        .ok_or_else(|| anyhow!("alphabet must be an array of [value, prob] pairs"))?
        .iter()
        .map(|pair| {
            let a = pair
                .as_array()
                .filter(|a| a.len() == 2)
                .ok_or_else(|| anyhow!("alphabet entries must be [value, prob] pairs"))?;
            Ok((
                K::parse_json(&a[0]).map_err(|e| anyhow!("alphabet value: {e}"))?,
                K::parse_json(&a[1]).map_err(|e| anyhow!("alphabet probability: {e}"))?,
            ))
        })
        .collect()
}

fn cmd_kesten<K: Scalar>(args: &CommonArgs, doc: &Value) -> Result<bool> {
    // accept {"tree": {...}, "U": ..., "R", "T"} or a flat model doc with U
    let mut model_doc = match doc.get("tree") {
        Some(t) => t.clone(),
        None => doc.clone(),
    };
    if let (Some(u), Some(obj)) = (doc.get("U"), model_doc.as_object_mut()) {
        obj.insert("U".to_string(), u.clone());
    }
    let model: ModelDoc<K> = parse_model(&model_doc)?;
    let u_rows = model
        .u_rows
        .clone()
        .ok_or_else(|| anyhow!("kesten document needs \"U\""))?;
    let r_threshold = K::parse_json(
        doc.get("R").ok_or_else(|| anyhow!("kesten document needs \"R\""))?,
    )
    .map_err(|e| anyhow!("R: {e}"))?;
    let t_threshold = K::parse_json(
        doc.get("T").ok_or_else(|| anyhow!("kesten document needs \"T\""))?,
    )
    .map_err(|e| anyhow!("T: {e}"))?;
    let instance = KestenInstance::from_leaf_rows(
        model.tree,
        model.filtration,
        &u_rows,
        r_threshold,
        t_threshold,
    )?;
    let tol: K = tol_of(args)?;
    let report = kesten_check(&instance, &tol)?;
    let holds = report.holds && report.routes_agree;
    let payload = json!({
        "check": "kesten_joint_tail",
        "joint_probability": report.joint_probability.to_json(),
        "bound": report.bound,
        "holds": report.holds,
        "rescaled_tail": report.rescaled_tail,
        "routes_agree": report.routes_agree,
    });
    emit(args, &payload, None, holds)
}

fn cmd_mc_natural(args: &CommonArgs) -> Result<bool> {
    let doc = single_doc(args)?;
    let density = density_from_spec(&doc)?;
    if args.samples == 0 {
        bail!("--samples must be at least 1");
    }
    let batch = sample_natural_risk(density.as_ref(), args.samples, args.seed)?;
    let n = batch.len();
    let mean = batch.mean();
    let variance = batch.variance();
    let ks = ks_statistic(&batch)?;
    let band = ks_band_99(n);
    let lambdas: Vec<f64> = if args.lambda.is_empty() {
        vec![0.25, 0.5, 1.0, 2.0, 4.0]
    } else {
        lambdas_of::<f64>(args)?
    };
    let curve = empirical_shortfall(&batch, &lambdas);
    let mean_band = 3.0 / (n as f64).sqrt();
    let mean_ok = (mean - 1.0).abs() <= mean_band;
    let ks_ok = ks <= band;
    let curve_ok = curve.iter().all(|p| p.within_band());
    let holds = mean_ok && ks_ok && curve_ok;

    let mut csv = String::from("lambda,empirical,halfwidth,reference\n");
    for p in &curve {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            fmt17(p.lambda),
            fmt17(p.empirical),
            fmt17(p.half_width),
            fmt17(p.reference)
        ));
    }
    if let Some(out) = &args.out {
        let ecdf_path = out.with_extension("ecdf.csv");
        std::fs::write(&ecdf_path, ecdf_csv(&batch))
            .with_context(|| format!("cannot write {}", ecdf_path.display()))?;
    }
    let payload = json!({
        "check": "natural_risk_exponential_law",
        "density": batch.density,
        "seed": batch.seed,
        "n": n,
        "mean": mean,
        "mean_band": mean_band,
        "mean_ok": mean_ok,
        "variance": variance,
        "ks": ks,
        "ks_band": band,
        "ks_ok": ks_ok,
        "shortfall": curve,
        "shortfall_ok": curve_ok,
        "holds": holds,
    });
    emit(args, &payload, Some(csv), holds)
}

/// Down-sampled empirical CDF against the Exp(1) CDF.
fn ecdf_csv(batch: &totalrisk::montecarlo::SampleBatch) -> String {
    let mut sorted = batch.values.clone();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let points = 1000.min(n);
    let mut s = String::from("x,ecdf,exp_cdf\n");
    for i in 0..points {
        let idx = ((i as f64 + 0.5) / points as f64 * n as f64) as usize;
        let idx = idx.min(n - 1);
        let x = sorted[idx];
        let ecdf = (idx + 1) as f64 / n as f64;
        s.push_str(&format!(
            "{},{},{}\n",
            fmt17(x),
            fmt17(ecdf),
            fmt17(-(-x).exp_m1())
        ));
    }
    s
}

fn cmd_mc_converge(args: &CommonArgs) -> Result<bool> {
    let doc = single_doc(args)?;
    let density = density_from_spec(&doc)?;
    let meshes: Vec<f64> = if args.mesh.is_empty() {
        vec![0.25, 0.0625, 0.015625, 0.00390625]
    } else {
        args.mesh
            .iter()
            .map(|s| {
                f64::parse_json(&Value::String(s.clone()))
                    .map_err(|e| anyhow!("bad --mesh {s:?}: {e}"))
            })
            .collect::<Result<Vec<_>>>()?
    };
    let lambdas: Vec<f64> = if args.lambda.is_empty() {
        vec![0.5, 1.0, 2.0]
    } else {
        lambdas_of::<f64>(args)?
    };
    let horizon = horizon_for_tail(density.as_ref());
    let mut rows = Vec::new();
    let mut csv = String::from("mesh,lambda,shortfall,reference,gap\n");
    let mut gaps: Vec<Vec<f64>> = vec![Vec::new(); lambdas.len()];
    for &mesh in &meshes {
        let law = discrete_risk_law(density.as_ref(), mesh, horizon)?;
        for (li, &lambda) in lambdas.iter().enumerate() {
            let gap = shortfall_gap(&law, lambda);
            let sf = law.shortfall(&lambda);
            gaps[li].push(gap);
            rows.push(json!({
                "mesh": mesh, "lambda": lambda,
                "shortfall": sf, "reference": (-lambda).exp(), "gap": gap,
            }));
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt17(mesh),
                fmt17(lambda),
                fmt17(sf),
                fmt17((-lambda).exp()),
                fmt17(gap)
            ));
        }
    }
    let monotone_ok = gaps
        .iter()
        .all(|g| g.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    let final_gap_ok = gaps.iter().all(|g| *g.last().unwrap() < 0.01);
    let holds = monotone_ok && final_gap_ok;
    let payload = json!({
        "check": "discretization_convergence",
        "density": density.name(),
        "meshes": meshes,
        "lambdas": lambdas,
        "rows": rows,
        "monotone_ok": monotone_ok,
        "final_gap_ok": final_gap_ok,
        "holds": holds,
    });
    emit(args, &payload, Some(csv), holds)
}
