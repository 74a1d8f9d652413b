//! `ltcost`: estimate, simulate and evaluate the cost of answering SPARQL
//! queries by zero-knowledge link traversal.

mod commands;
mod failure;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ltcost::estimator::Method;
use ltcost::traversal::MissPolicy;

#[derive(Parser)]
#[command(name = "ltcost", version, about = "Cost estimation for link-traversal SPARQL queries")]
struct Cli {
    /// Print machine-readable JSON on standard output.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check whether a query can be answered by link traversal.
    Answerable {
        /// SPARQL query file, or - for standard input.
        query: PathBuf,
    },
    /// Estimate the number of documents a traversal will dereference.
    Estimate {
        query: PathBuf,
        #[command(flatten)]
        est: EstimatorArgs,
        /// Also print the per-variable binding counts.
        #[arg(long)]
        breakdown: bool,
    },
    /// Build or inspect statistics catalogs.
    #[command(subcommand)]
    Stats(StatsCommand),
    /// Run a query by link traversal over a document store.
    Simulate {
        query: PathBuf,
        /// Store manifest (IRI<TAB>path or IRI<TAB>URL rows).
        #[arg(long)]
        store: PathBuf,
        /// Write the access trace as JSON to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "empty-graph")]
        miss_policy: MissPolicyArg,
    },
    /// Score the four estimators against a ground-truth dataset.
    Eval {
        #[command(flatten)]
        data: DatasetArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fraction of the dataset used for training.
        #[arg(long, default_value_t = 0.5)]
        ratio: f64,
        /// Comma-separated factor grid for training.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
        /// Use this f1 instead of training one.
        #[arg(long, requires = "f2")]
        f1: Option<f64>,
        /// Use this f2 instead of training one.
        #[arg(long, requires = "f1")]
        f2: Option<f64>,
    },
    /// Train the join and filter factors on a whole dataset.
    Train {
        #[command(flatten)]
        data: DatasetArgs,
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
    },
    /// Re-execute dataset queries against their bundled documents.
    Replay {
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Decide between link traversal and the SPARQL endpoint.
    Route {
        query: PathBuf,
        #[command(flatten)]
        est: EstimatorArgs,
        /// Estimated cost above which the endpoint is preferred.
        #[arg(long)]
        threshold: u64,
        /// SPARQL endpoint probed with ASK {} when the estimate is high.
        #[arg(long)]
        probe_endpoint: Option<String>,
        /// Exit with status 3 when the query is not answerable.
        #[arg(long)]
        strict: bool,
    },
}

#[derive(Subcommand)]
enum StatsCommand {
    /// Compute a catalog from an endpoint or an N-Triples dump.
    #[command(group(clap::ArgGroup::new("source").required(true).args(["endpoint", "dump"])))]
    Collect {
        #[arg(long)]
        endpoint: Option<String>,
        #[arg(long)]
        dump: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Restrict per-predicate statistics to the IRIs in this file.
        #[arg(long)]
        predicates: Option<PathBuf>,
        /// Per-query timeout in seconds for endpoint collection.
        #[arg(long, default_value_t = 120)]
        timeout: u64,
    },
    /// Print the aggregate queries that compute each statistic.
    EmitQueries {
        /// Also print the per-predicate queries for this IRI (repeatable).
        #[arg(long)]
        predicate: Vec<String>,
    },
}

#[derive(Args)]
struct EstimatorArgs {
    /// Statistics catalog; built-in global averages when omitted.
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// mnp, mp, mpj, mpjf or all.
    #[arg(long, default_value = "mpjf")]
    method: MethodArg,
    #[arg(long, default_value_t = ltcost::eval::DEFAULT_F1)]
    f1: f64,
    #[arg(long, default_value_t = ltcost::eval::DEFAULT_F2)]
    f2: f64,
}

#[derive(Args)]
struct DatasetArgs {
    /// Ground-truth directory with one sub-directory per query.
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    catalog: Option<PathBuf>,
}

#[derive(Clone, Copy)]
enum MethodArg {
    One(Method),
    All,
}

impl std::str::FromStr for MethodArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("all") {
            Ok(MethodArg::All)
        } else {
            s.parse().map(MethodArg::One)
        }
    }
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum MissPolicyArg {
    EmptyGraph,
    Error,
}

impl From<MissPolicyArg> for MissPolicy {
    fn from(m: MissPolicyArg) -> Self {
        match m {
            MissPolicyArg::EmptyGraph => MissPolicy::EmptyGraph,
            MissPolicyArg::Error => MissPolicy::Error,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("ltcost: {f}");
            ExitCode::from(f.code())
        }
    }
}
