use std::fs::{self, File};
use std::io::{self, BufReader, Read};
use std::path::Path;
use std::time::Duration;

use serde::Serialize;

use ltcost::analysis::{check_answerability, render_service_form};
use ltcost::estimator::{estimate, estimate_all, CostEstimate, EstimatorConfig};
use ltcost::eval::{
    default_grid, evaluate, load_ground_truth, replay_all, split, train_factors, GroundTruth, SkippedEntry, SplitInfo,
};
use ltcost::query::{parse_query, QueryPattern};
use ltcost::route::{ask_probe, decide_strategy, Rationale, PROBE_TIMEOUT};
use ltcost::stats::{
    collector_query, compute_from_ntriples, fetch_from_endpoint, load_catalog, save_catalog, EndpointOptions, Parameter,
    StatsCatalog, StatsError,
};
use ltcost::traversal::{execute, load_store, real_cost};

use crate::failure::Failure;
use crate::{Cli, Command, DatasetArgs, EstimatorArgs, MethodArg, StatsCommand};

type Outcome = Result<u8, Failure>;

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("output serializes"));
}

fn read_query(path: &Path) -> Result<QueryPattern, Failure> {
    let text = if path.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| Failure::Input(format!("reading standard input: {e}")))?;
        s
    } else {
        fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?
    };
    parse_query(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn read_catalog(path: Option<&Path>) -> Result<StatsCatalog, Failure> {
    match path {
        None => Ok(StatsCatalog::default()),
        Some(p) => load_catalog(p).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
    }
}

fn check_factors(f1: f64, f2: f64) -> Result<(), Failure> {
    for (name, v) in [("f1", f1), ("f2", f2)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Failure::Usage(format!("--{name} must lie in [0, 1], got {v}")));
        }
    }
    Ok(())
}

pub fn run(cli: Cli) -> Outcome {
    let json = cli.json;
    match cli.command {
        Command::Answerable { query } => answerable(&query, json),
        Command::Estimate { query, est, breakdown } => estimate_cmd(&query, &est, breakdown, json),
        Command::Stats(StatsCommand::Collect {
            endpoint,
            dump,
            out,
            predicates,
            timeout,
        }) => collect(endpoint.as_deref(), dump.as_deref(), &out, predicates.as_deref(), timeout, json),
        Command::Stats(StatsCommand::EmitQueries { predicate }) => emit_queries(&predicate, json),
        Command::Simulate {
            query,
            store,
            trace,
            miss_policy,
        } => simulate(&query, &store, trace.as_deref(), miss_policy.into(), json),
        Command::Eval {
            data,
            seed,
            ratio,
            grid,
            f1,
            f2,
        } => eval(&data, seed, ratio, grid, f1.zip(f2), json),
        Command::Train { data, grid } => train(&data, grid, json),
        Command::Replay { dataset } => replay(&dataset, json),
        Command::Route {
            query,
            est,
            threshold,
            probe_endpoint,
            strict,
        } => route(&query, &est, threshold, probe_endpoint.as_deref(), strict, json),
    }
}

fn answerable(path: &Path, json: bool) -> Outcome {
    let q = read_query(path)?;
    let report = check_answerability(&q);
    if json {
        print_json(&report);
    }
    match (&report.order, &report.failure_witness) {
        (Some(order), _) => {
            if !json {
                println!("answerable: yes");
                let order: Vec<String> = order.iter().map(usize::to_string).collect();
                println!("traversal order: {}", order.join(" "));
                if report.reordered_from_original {
                    println!("(triples were reordered)");
                }
                println!();
                print!("{}", render_service_form(&q, report.order.as_deref().unwrap_or_default()).expect("answerable"));
            }
            Ok(0)
        }
        (None, witness) => {
            if !json {
                println!("answerable: no");
            }
            eprintln!("no anchor can ever be found for:");
            for &i in witness.iter().flatten() {
                eprintln!("  triple {i}: {}", q.triples[i]);
            }
            Ok(3)
        }
    }
}

fn print_estimate(e: &CostEstimate, breakdown: bool) {
    println!("{}: estimated cost {} ({:.3})", e.method, e.ceiled_total, e.total);
    println!("  {:<6}{:<20}{:<12}{:>14}", "group", "anchor", "triples", "accesses");
    for g in &e.group_costs {
        let triples: Vec<String> = g.triples.iter().map(usize::to_string).collect();
        println!("  {:<6}{:<20}{:<12}{:>14.3}", g.id, g.variable.to_string(), triples.join(","), g.accesses);
    }
    if breakdown {
        println!("  bindings:");
        for (v, n) in &e.binding_counts {
            println!("    {v:<18}{n:.3}");
        }
    }
}

fn estimate_cmd(path: &Path, est: &EstimatorArgs, breakdown: bool, json: bool) -> Outcome {
    check_factors(est.f1, est.f2)?;
    let q = read_query(path)?;
    let catalog = read_catalog(est.catalog.as_deref())?;
    match est.method {
        MethodArg::One(method) => {
            let e = estimate(&q, &catalog, &EstimatorConfig::new(method, est.f1, est.f2))?;
            if json {
                print_json(&e);
            } else {
                print_estimate(&e, breakdown);
            }
        }
        MethodArg::All => {
            let all = estimate_all(&q, &catalog, est.f1, est.f2)?;
            if json {
                print_json(&all);
            } else {
                for e in all.values() {
                    print_estimate(e, breakdown);
                }
            }
        }
    }
    Ok(0)
}

fn read_predicates(path: &Path) -> Result<Vec<String>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
    Ok(text
        .lines()
        .map(|l| l.trim().trim_start_matches('<').trim_end_matches('>'))
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_owned)
        .collect())
}

fn collect(
    endpoint: Option<&str>,
    dump: Option<&Path>,
    out: &Path,
    predicates: Option<&Path>,
    timeout: u64,
    json: bool,
) -> Outcome {
    let wanted = predicates.map(read_predicates).transpose()?;
    let (mut catalog, gaps) = match (endpoint, dump) {
        (Some(url), _) => {
            let options = EndpointOptions {
                timeout: Duration::from_secs(timeout),
            };
            match fetch_from_endpoint(url, wanted.as_deref(), &options) {
                Ok(c) => (c, Vec::new()),
                Err(StatsError::PartialCatalog { catalog, gaps }) => (*catalog, gaps),
                Err(e) => return Err(e.into()),
            }
        }
        (None, Some(path)) => {
            let file = File::open(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
            (compute_from_ntriples(BufReader::new(file))?, Vec::new())
        }
        (None, None) => unreachable!("clap requires a source"),
    };
    if let Some(w) = &wanted {
        catalog.per_predicate.retain(|p, _| w.contains(p));
    }
    save_catalog(&catalog, out).map_err(|e| Failure::Input(format!("cannot write {}: {e}", out.display())))?;
    if json {
        print_json(&catalog);
    } else {
        println!(
            "wrote {} ({} predicates; {})",
            out.display(),
            catalog.per_predicate.len(),
            catalog.provenance
        );
    }
    if gaps.is_empty() {
        Ok(0)
    } else {
        Err(Failure::Remote(format!(
            "catalog saved with default values for statistics the endpoint did not return: {}",
            gaps.join(", ")
        )))
    }
}

#[derive(Serialize)]
struct EmittedQuery {
    parameter: Parameter,
    predicate: Option<String>,
    query: String,
}

fn emit_queries(predicates: &[String], json: bool) -> Outcome {
    let mut out = Vec::new();
    for p in Parameter::GLOBALS {
        out.push(EmittedQuery {
            parameter: p,
            predicate: None,
            query: collector_query(p, None)?,
        });
    }
    for pred in predicates {
        for p in [Parameter::PerPredSubj, Parameter::PerPredObj] {
            out.push(EmittedQuery {
                parameter: p,
                predicate: Some(pred.clone()),
                query: collector_query(p, Some(pred))?,
            });
        }
    }
    if json {
        print_json(&out);
    } else {
        for q in &out {
            match &q.predicate {
                Some(p) => println!("# {} <{p}>", q.parameter),
                None => println!("# {}", q.parameter),
            }
            println!("{}\n", q.query);
        }
    }
    Ok(0)
}

#[derive(Serialize)]
struct Simulation<'a> {
    table: &'a ltcost::traversal::BindingTable,
    trace: &'a ltcost::traversal::TraversalTrace,
}

fn simulate(
    path: &Path,
    store: &Path,
    trace_out: Option<&Path>,
    miss_policy: ltcost::traversal::MissPolicy,
    json: bool,
) -> Outcome {
    let q = read_query(path)?;
    let store = load_store(store)?.with_miss_policy(miss_policy);
    let (table, trace) = execute(&q, &store)?;
    if let Some(p) = trace_out {
        fs::write(p, trace.to_json()).map_err(|e| Failure::Input(format!("cannot write {}: {e}", p.display())))?;
    }
    if json {
        print_json(&Simulation {
            table: &table,
            trace: &trace,
        });
        return Ok(0);
    }
    println!("{}", table.columns.iter().map(|c| format!("?{c}")).collect::<Vec<_>>().join("\t"));
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(|t| t.as_ref().map(|t| t.to_string()).unwrap_or_default()).collect();
        println!("{}", cells.join("\t"));
    }
    println!();
    println!(
        "{} rows; real cost {} ({} accesses, {} misses)",
        table.len(),
        real_cost(&trace),
        trace.group_access_count,
        trace.misses.len()
    );
    Ok(0)
}

fn load_dataset(data: &DatasetArgs) -> Result<(GroundTruth, StatsCatalog, Vec<SkippedEntry>), Failure> {
    let gt = load_ground_truth(&data.dataset)?;
    let catalog = read_catalog(data.catalog.as_deref())?;
    let failures: Vec<SkippedEntry> = gt
        .failures
        .iter()
        .map(|f| SkippedEntry {
            id: f.entry.clone(),
            reason: format!("{:?} error: {}", f.kind, f.message).to_lowercase(),
        })
        .collect();
    for f in &failures {
        eprintln!("skipping {}: {}", f.id, f.reason);
    }
    Ok((gt, catalog, failures))
}

fn eval(data: &DatasetArgs, seed: u64, ratio: f64, grid: Option<Vec<f64>>, fixed: Option<(f64, f64)>, json: bool) -> Outcome {
    let (gt, catalog, failures) = load_dataset(data)?;
    let (train_set, test_set) = split(&gt.entries, seed, ratio)?;
    let (f1, f2, trained) = match fixed {
        Some((f1, f2)) => {
            check_factors(f1, f2)?;
            (f1, f2, None)
        }
        None => {
            let t = train_factors(&train_set, &catalog, &grid.unwrap_or_else(default_grid))?;
            (t.f1, t.f2, Some(t))
        }
    };
    let mut report = evaluate(&test_set, &catalog, f1, f2)?;
    report.split = Some(SplitInfo::new(seed, ratio, &train_set, &test_set));
    report.skipped.extend(failures);
    if json {
        print_json(&report);
    } else {
        if let Some(t) = trained {
            println!(
                "trained on {} queries (seed {seed}, ratio {ratio}); train AvgAbsDiff {:.1}",
                t.n, t.avg_abs_diff
            );
        }
        print!("{}", report.to_table());
    }
    Ok(0)
}

fn train(data: &DatasetArgs, grid: Option<Vec<f64>>, json: bool) -> Outcome {
    let (gt, catalog, _) = load_dataset(data)?;
    let t = train_factors(&gt.entries, &catalog, &grid.unwrap_or_else(default_grid))?;
    if json {
        print_json(&t);
    } else {
        println!("f1 = {}, f2 = {}", t.f1, t.f2);
        println!("Mpjf AvgAbsDiff {:.1} over {} queries", t.avg_abs_diff, t.n);
        if !t.skipped.is_empty() {
            println!("{} queries skipped", t.skipped.len());
        }
    }
    Ok(0)
}

fn replay(dataset: &Path, json: bool) -> Outcome {
    let gt = load_ground_truth(dataset)?;
    for f in &gt.failures {
        eprintln!("skipping {}: {}", f.entry, f.message);
    }
    let summary = replay_all(&gt.entries);
    if json {
        print_json(&summary);
        return Ok(0);
    }
    for o in summary.outcomes.iter().filter(|o| !o.matches()) {
        println!("{}: recorded {}, replayed {}", o.id, o.recorded, o.replayed);
    }
    for f in &summary.failures {
        println!("{}: failed: {}", f.id, f.reason);
    }
    let total = summary.outcomes.len() + summary.failures.len();
    println!(
        "{} of {} replays reproduce the recorded cost ({:.1}%)",
        summary.matched(),
        total,
        100.0 * summary.match_rate()
    );
    Ok(0)
}

fn route(path: &Path, est: &EstimatorArgs, threshold: u64, endpoint: Option<&str>, strict: bool, json: bool) -> Outcome {
    let MethodArg::One(method) = est.method else {
        return Err(Failure::Usage("route needs a single --method".into()));
    };
    check_factors(est.f1, est.f2)?;
    let q = read_query(path)?;
    let catalog = read_catalog(est.catalog.as_deref())?;
    let config = EstimatorConfig::new(method, est.f1, est.f2);
    let decision = decide_strategy(&q, &catalog, &config, threshold, || match endpoint {
        Some(url) => ask_probe(url, PROBE_TIMEOUT),
        None => Err("no --probe-endpoint given".into()),
    })?;
    if json {
        print_json(&decision);
    } else {
        println!("strategy: {}", wire_name(&decision.strategy));
        println!("rationale: {}", wire_name(&decision.rationale));
        if let Some(c) = decision.estimated_cost {
            println!("estimated cost: {c} (threshold {threshold})");
        }
        if let Some(e) = &decision.probe_error {
            println!("probe failed: {e}");
        }
    }
    if strict && decision.rationale == Rationale::NotAnswerable {
        return Ok(3);
    }
    Ok(0)
}

/// The JSON spelling of a unit enum value.
fn wire_name<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        other => format!("{other:?}"),
    }
}
