//! Operator entry point: fit models centrally or federated, run synthetic
//! experiment grids, and compare two fit reports coefficient by coefficient.
//!
//! Exit codes: 0 success, 1 a `compare` run with failing coefficients,
//! 2 usage/configuration, 3 data, 4 numerical, 5 network.

use std::collections::HashMap;
use std::net::{SocketAddr, TcpListener};
use std::path::PathBuf;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::experiment::{run_grid, pairwise_within, GridSpec, ModelKind, COMPARE_ATOL, COMPARE_RTOL};
use crate::fednet::protocol::{run_glm_protocol, run_lm_protocol, NodeCtx};
use crate::fednet::sim::{run_federated_glm_with_timeout, run_federated_lm};
use crate::fednet::transport::SocketTransport;
use crate::glm::{fit_glm, Family, FamilyKind, LinkKind, DEFAULT_MAXIT, DEFAULT_TOL};
use crate::ingest::{build_design, infer_schema, parse_csv, DatasetSchema, Design};
use crate::lm::{fit_lm, FitResult};

#[derive(Debug, Parser)]
#[command(name = "fedglm", version, about = "Federated linear and generalized linear models over aggregated QR factors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model, centrally or across a federation of nodes.
    Fit(FitArgs),
    /// Run a distributed-vs-centralized agreement grid on synthetic data.
    Experiment(ExperimentArgs),
    /// Compare two machine-format fit reports coefficient by coefficient.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Lm,
    Glm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransportArg {
    Inproc,
    Socket,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Text,
    Machine,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV data file (in socket mode: this node's local partition).
    #[arg(long)]
    pub data: PathBuf,
    /// JSON schema file; inferred from the data when omitted.
    #[arg(long)]
    pub schema: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub model: ModelArg,
    /// GLM family (gaussian, binomial, poisson, gamma).
    #[arg(long)]
    pub family: Option<String>,
    /// Link function; defaults to the family's canonical link.
    #[arg(long)]
    pub link: Option<String>,
    #[arg(long)]
    pub response: String,
    /// Comma-separated predictor column names.
    #[arg(long, value_delimiter = ',')]
    pub predictors: Vec<String>,
    /// Drop the leading all-ones intercept column.
    #[arg(long)]
    pub no_intercept: bool,
    /// Number of federation nodes (inproc mode).
    #[arg(long, default_value_t = 1)]
    pub nodes: usize,
    #[arg(long, value_enum, default_value_t = TransportArg::Inproc)]
    pub transport: TransportArg,
    /// This node's id (socket mode).
    #[arg(long)]
    pub node_id: Option<u32>,
    /// Peer list "id=host:port,..." including this node (socket mode);
    /// FEDGLM_PEERS overrides.
    #[arg(long)]
    pub peers: Option<String>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAXIT)]
    pub maxit: usize,
    /// Per-round exchange deadline in seconds; FEDGLM_TIMEOUT_SECS overrides.
    #[arg(long, default_value_t = 30)]
    pub timeout_secs: u64,
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Grid spec "n=100,1000;p=1,3,5;nodes=5".
    #[arg(long)]
    pub grid: String,
    #[arg(long, value_enum)]
    pub model: ModelArg,
    #[arg(long, default_value_t = 10)]
    pub replicas: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAXIT)]
    pub maxit: usize,
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Machine-format report of the candidate fit.
    pub fit_a: PathBuf,
    /// Machine-format report of the reference fit.
    pub fit_b: PathBuf,
    #[arg(long, default_value_t = COMPARE_RTOL)]
    pub rtol: f64,
    #[arg(long, default_value_t = COMPARE_ATOL)]
    pub atol: f64,
}

/// Runs a parsed command; returns the process exit code.
pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Fit(args) => cmd_fit(args).map(|_| 0),
        Command::Experiment(args) => cmd_experiment(args).map(|_| 0),
        Command::Compare(args) => cmd_compare(args),
    }
}

fn load_design(args: &FitArgs) -> Result<(Design, DatasetSchema)> {
    let schema = match &args.schema {
        Some(path) => DatasetSchema::from_json_file(path)?,
        None => infer_schema(&args.data, &args.response, &args.predictors)?,
    };
    if schema.response != args.response {
        return Err(Error::Config(format!(
            "schema response '{}' does not match --response {}",
            schema.response, args.response
        )));
    }
    let table = parse_csv(&args.data, &schema)?;
    let design = build_design(&table, &schema, !args.no_intercept)?;
    Ok((design, schema))
}

fn family_from_args(args: &FitArgs) -> Result<Family> {
    let kind = match (&args.model, &args.family) {
        (ModelArg::Lm, None) => FamilyKind::Gaussian,
        (ModelArg::Lm, Some(f)) if f == "gaussian" => FamilyKind::Gaussian,
        (ModelArg::Lm, Some(f)) => {
            return Err(Error::Config(format!("--model lm cannot use family '{}'", f)))
        }
        (ModelArg::Glm, Some(f)) => FamilyKind::parse(f)?,
        (ModelArg::Glm, None) => {
            return Err(Error::Config("--model glm requires --family".into()))
        }
    };
    match &args.link {
        Some(l) => Family::new(kind, LinkKind::parse(l)?),
        None => Ok(Family::canonical(kind)),
    }
}

fn parse_peer_list(s: &str) -> Result<Vec<(u32, SocketAddr)>> {
    let mut peers = Vec::new();
    for item in s.split(',') {
        let (id, addr) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("bad peer entry '{}'", item)))?;
        let id: u32 = id
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad peer id in '{}'", item)))?;
        let addr: SocketAddr = addr
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad peer address in '{}'", item)))?;
        peers.push((id, addr));
    }
    if peers.is_empty() {
        return Err(Error::Config("empty peer list".into()));
    }
    Ok(peers)
}

fn cmd_fit(args: FitArgs) -> Result<()> {
    let (design, _schema) = load_design(&args)?;
    let fam = family_from_args(&args)?;
    let timeout = std::env::var("FEDGLM_TIMEOUT_SECS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(args.timeout_secs);
    let timeout = Duration::from_secs(timeout);

    let fit: FitResult = match args.transport {
        TransportArg::Inproc => {
            if args.nodes <= 1 {
                match args.model {
                    ModelArg::Lm => fit_lm(&design.x, &design.y)?,
                    ModelArg::Glm => fit_glm(&design.x, &design.y, fam, args.maxit, args.tol)?,
                }
            } else {
                let fits = match args.model {
                    ModelArg::Lm => run_federated_lm(&design.x, &design.y, args.nodes)?,
                    ModelArg::Glm => run_federated_glm_with_timeout(
                        &design.x, &design.y, fam, args.maxit, args.tol, args.nodes, timeout,
                    )?,
                };
                fits.into_iter().next().unwrap()
            }
        }
        TransportArg::Socket => {
            let node_id = args
                .node_id
                .ok_or_else(|| Error::Config("socket mode requires --node-id".into()))?;
            let peer_spec = std::env::var("FEDGLM_PEERS")
                .ok()
                .or_else(|| args.peers.clone())
                .ok_or_else(|| Error::Config("socket mode requires --peers".into()))?;
            let all = parse_peer_list(&peer_spec)?;
            let my_addr = all
                .iter()
                .find(|&&(id, _)| id == node_id)
                .map(|&(_, a)| a)
                .ok_or_else(|| {
                    Error::Config(format!("node id {} not in the peer list", node_id))
                })?;
            let others: Vec<(u32, SocketAddr)> =
                all.into_iter().filter(|&(id, _)| id != node_id).collect();
            let listener = TcpListener::bind(my_addr)?;
            let transport = SocketTransport::connect(node_id, listener, &others, timeout, None)?;
            let mut ctx = NodeCtx::with_timeout(transport, timeout);
            match args.model {
                ModelArg::Lm => run_lm_protocol(&mut ctx, &design.x, &design.y)?,
                ModelArg::Glm => {
                    run_glm_protocol(&mut ctx, &design.x, &design.y, fam, args.maxit, args.tol)?
                }
            }
        }
    };

    print!("{}", render_fit_report(&fit, &design.names, args.format));
    Ok(())
}

/// Formats a fit report. Machine mode prints 17 significant digits so two
/// runs can be compared byte for byte.
pub fn render_fit_report(fit: &FitResult, names: &[String], format: FormatArg) -> String {
    let mut out = String::new();
    match format {
        FormatArg::Machine => {
            out.push_str(&format!("n {}\n", fit.n));
            out.push_str(&format!("p {}\n", fit.p));
            out.push_str(&format!("iterations {}\n", fit.iterations));
            out.push_str(&format!("converged {}\n", fit.converged));
            out.push_str(&format!("rss {:.16e}\n", fit.rss));
            for (j, name) in names.iter().enumerate() {
                let se = fit
                    .std_errors
                    .as_ref()
                    .map(|s| format!("{:.16e}", s[j]))
                    .unwrap_or_else(|| "NA".into());
                out.push_str(&format!("coef {} {:.16e} {}\n", name, fit.beta[j], se));
            }
        }
        FormatArg::Text => {
            out.push_str(&format!(
                "n = {}, p = {}, iterations = {}, converged = {}\n",
                fit.n, fit.p, fit.iterations, fit.converged
            ));
            out.push_str(&format!("rss = {:.6}\n", fit.rss));
            out.push_str(&format!("{:<20} {:>14} {:>14}\n", "coefficient", "estimate", "std.error"));
            for (j, name) in names.iter().enumerate() {
                let se = fit
                    .std_errors
                    .as_ref()
                    .map(|s| format!("{:>14.4}", s[j]))
                    .unwrap_or_else(|| format!("{:>14}", "NA"));
                out.push_str(&format!("{:<20} {:>14.4} {}\n", name, fit.beta[j], se));
            }
        }
    }
    out
}

fn parse_grid(s: &str) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    let mut map: HashMap<&str, Vec<usize>> = HashMap::new();
    for part in s.split(';') {
        let (key, values) = part
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("bad grid component '{}'", part)))?;
        let values: std::result::Result<Vec<usize>, _> =
            values.split(',').map(|v| v.trim().parse()).collect();
        map.insert(
            key.trim(),
            values.map_err(|_| Error::Config(format!("bad grid values in '{}'", part)))?,
        );
    }
    let take = |key: &str| -> Result<Vec<usize>> {
        map.get(key)
            .cloned()
            .ok_or_else(|| Error::Config(format!("grid spec is missing '{}='", key)))
    };
    Ok((take("n")?, take("p")?, take("nodes")?))
}

fn cmd_experiment(args: ExperimentArgs) -> Result<()> {
    let (obs, preds, nodes) = parse_grid(&args.grid)?;
    let spec = GridSpec {
        obs,
        preds,
        nodes,
        replicas: args.replicas,
        model: match args.model {
            ModelArg::Lm => ModelKind::Lm,
            ModelArg::Glm => ModelKind::Glm,
        },
        seed: args.seed,
        maxit: args.maxit,
        tol: args.tol,
    };
    let cells = run_grid(&spec)?;
    match args.format {
        FormatArg::Machine => {
            for c in &cells {
                println!("cell n={} p={} nodes={} mae {:.16e}", c.n, c.p, c.nodes, c.mae);
            }
        }
        FormatArg::Text => {
            println!(
                "{:>8} {:>6} {:>6} {:>14}",
                "n", "p", "nodes", "mae"
            );
            for c in &cells {
                println!("{:>8} {:>6} {:>6} {:>14.3e}", c.n, c.p, c.nodes, c.mae);
            }
        }
    }
    Ok(())
}

/// Coefficient table pulled back out of a machine-format report.
pub fn parse_machine_report(text: &str) -> Result<Vec<(String, f64)>> {
    let mut coefs = Vec::new();
    for line in text.lines() {
        let mut it = line.split_whitespace();
        if it.next() == Some("coef") {
            let name = it
                .next()
                .ok_or_else(|| Error::Config("coef line without a name".into()))?;
            let est: f64 = it
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::Config(format!("bad estimate for '{}'", name)))?;
            coefs.push((name.to_string(), est));
        }
    }
    if coefs.is_empty() {
        return Err(Error::Config("no coefficient lines found".into()));
    }
    Ok(coefs)
}

fn cmd_compare(args: CompareArgs) -> Result<i32> {
    let a = parse_machine_report(&std::fs::read_to_string(&args.fit_a)?)?;
    let b = parse_machine_report(&std::fs::read_to_string(&args.fit_b)?)?;
    if a.len() != b.len() {
        return Err(Error::NameMismatch(format!(
            "{} coefficients against {}",
            a.len(),
            b.len()
        )));
    }
    for ((na, _), (nb, _)) in a.iter().zip(&b) {
        if na != nb {
            return Err(Error::NameMismatch(format!("'{}' against '{}'", na, nb)));
        }
    }
    let beta_a: Vec<f64> = a.iter().map(|(_, v)| *v).collect();
    let beta_b: Vec<f64> = b.iter().map(|(_, v)| *v).collect();
    let verdicts = pairwise_within(&beta_a, &beta_b, args.atol, args.rtol)?;
    let mut all_pass = true;
    for ((name, _), ok) in a.iter().zip(&verdicts) {
        println!("{:<20} {}", name, if *ok { "PASS" } else { "FAIL" });
        all_pass &= *ok;
    }
    println!("overall {}", if all_pass { "PASS" } else { "FAIL" });
    Ok(if all_pass { 0 } else { 1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let (n, p, nodes) = parse_grid("n=100,1000;p=1,3,5;nodes=5").unwrap();
        assert_eq!(n, vec![100, 1000]);
        assert_eq!(p, vec![1, 3, 5]);
        assert_eq!(nodes, vec![5]);
        assert!(parse_grid("n=100").is_err());
        assert!(parse_grid("n=x;p=1;nodes=2").is_err());
    }

    #[test]
    fn peer_list_parsing() {
        let peers = parse_peer_list("0=127.0.0.1:7000,1=127.0.0.1:7001").unwrap();
        assert_eq!(peers.len(), 2);
        assert_eq!(peers[0].0, 0);
        assert!(parse_peer_list("nonsense").is_err());
    }

    #[test]
    fn machine_report_round_trip() {
        let fit = FitResult {
            beta: vec![1.5, -0.25],
            rss: 2.0,
            std_errors: Some(vec![0.1, 0.2]),
            n: 10,
            p: 2,
            iterations: 1,
            converged: true,
        };
        let names = vec!["(Intercept)".to_string(), "x".to_string()];
        let text = render_fit_report(&fit, &names, FormatArg::Machine);
        let coefs = parse_machine_report(&text).unwrap();
        assert_eq!(coefs[0].0, "(Intercept)");
        assert_eq!(coefs[0].1, 1.5);
        assert_eq!(coefs[1].1, -0.25);
    }
}
