//! Single binary exposing the library: exact oracles, approximate counting,
//! certified marginals, threshold calculus, walk counting, and branching
//! matrices. All state flows through flags; seeded commands are reproducible
//! byte-for-byte.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use hardcore::boundary::BoundaryCondition;
use hardcore::branching::{
    branching_matrix, branching_report, perron_root, DirectionOrdering, PruningMode,
};
use hardcore::decay::{decay_profile, decay_profile_csv, marginal_interval, symmetric_tree_report, DecayTarget};
use hardcore::fptas::{approx_log_partition, FptasOptions};
use hardcore::graph::{generate_gnp, generate_lattice_patch, LatticeKind, SplitMix64};
use hardcore::oracle::{exact_log_partition, exact_occupation, OracleOptions};
use hardcore::saw::{count_saws, estimate_connective};
use hardcore::threshold::{
    check_concavity, degree_free_certificate, lattice_table, lattice_table_csv, ssm_certificate, threshold_report,
};
use hardcore::{Activity, Graph, DEFAULT_NODE_BUDGET};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Parser)]
#[command(
    name = "hardcore",
    version,
    about = "Hard-core model computations: exact counting, certified marginals, decay thresholds"
)]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Cap on internal parallelism (defaults to the available cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact log partition function (and optionally a vertex marginal).
    Oracle {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long)]
        boundary: Option<PathBuf>,
        /// Also report the exact occupation probability and ratio here.
        #[arg(long)]
        vertex: Option<u32>,
        #[arg(long, default_value_t = 40)]
        size_guard: u32,
    },
    /// Deterministic approximation of log Z to a relative error target.
    Count {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        lambda: f64,
        /// Relative error target in (0, 1).
        #[arg(long)]
        mu: f64,
        #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
        node_budget: u64,
        #[arg(long, default_value_t = 4096)]
        depth_cap: u32,
        /// Eliminate vertices in descending degree order (speed knob).
        #[arg(long)]
        max_degree_first: bool,
    },
    /// Certified interval for one occupation ratio at a fixed depth.
    Marginal {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        vertex: u32,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        depth: u32,
        #[arg(long)]
        boundary: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
        node_budget: u64,
    },
    /// Decay threshold and fixed-point report for one (arity, delta) pair.
    Threshold {
        /// Arity d (graphs of maximum degree d + 1).
        #[arg(long)]
        arity: u32,
        /// Connective-constant upper bound.
        #[arg(long)]
        delta: f64,
        /// Evaluate the point quantities at this activity instead of the threshold.
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// The lattice threshold table.
    Table1,
    /// Decay certificates at a given activity.
    Certify {
        #[arg(long)]
        arity: u32,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        lambda: f64,
        /// Also audit the concavity underlying the symmetric-tree bound.
        #[arg(long)]
        concavity: bool,
    },
    /// Exact self-avoiding-walk counts from a vertex.
    Saw {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        vertex: u32,
        #[arg(long)]
        max_length: u32,
        #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
        node_budget: u64,
    },
    /// Connective-constant estimate over a vertex sample.
    Connective {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        length: u32,
        /// Number of vertices to sample (seeded, without replacement).
        #[arg(long, default_value_t = 10)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Explicit comma-separated vertex list; overrides --samples.
        #[arg(long)]
        vertices: Option<String>,
        #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
        node_budget: u64,
    },
    /// Finite-memory walk branching matrix on the square lattice.
    Branching {
        #[arg(long, default_value = "z2")]
        lattice: String,
        #[arg(long)]
        memory: u32,
        /// `plain` or `weitz-pruned`.
        #[arg(long, default_value = "plain")]
        mode: String,
        /// Edge ordering applied at every vertex, e.g. WSEN.
        #[arg(long, default_value = "WSEN")]
        ordering: String,
        /// Compute all 24 orderings and report each (and the minimum).
        #[arg(long)]
        sweep_orderings: bool,
        /// Pin the first step of the walk (quarters the state space).
        #[arg(long)]
        normalize_first_step: bool,
        #[arg(long, default_value_t = 1e-11)]
        tol: f64,
        #[arg(long, default_value_t = 5_000_000)]
        state_cap: usize,
        /// Write the matrix as coordinate-list text to this path.
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Seeded sparse random graph G(n, d/n).
    Gnp {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        degree: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Open-boundary lattice patch.
    Lattice {
        /// cartesian, triangular, or honeycomb.
        #[arg(long)]
        kind: String,
        /// Comma-separated extents, e.g. 5,5.
        #[arg(long)]
        extents: String,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Interval widths over a depth range, with a fitted decay rate.
    Decay {
        #[arg(long)]
        graph: Option<PathBuf>,
        /// Profile the complete tree of this arity instead of a graph.
        #[arg(long)]
        complete_tree: Option<u32>,
        #[arg(long)]
        vertex: Option<u32>,
        #[arg(long)]
        boundary: Option<PathBuf>,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        depth_min: u32,
        #[arg(long)]
        depth_max: u32,
        #[arg(long, default_value_t = 1)]
        depth_step: u32,
        #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
        node_budget: u64,
    },
    /// Spherically-symmetric-tree report for an arity sequence.
    Symmetric {
        /// Comma-separated arities by depth, e.g. 2,8,2,8.
        #[arg(long)]
        arities: String,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        depth: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: could not configure thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli.command, cli.format) {
        Ok(output) => {
            print!("{output}");
            if !output.ends_with('\n') {
                println!();
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn read_to_string(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_graph(path: &Path) -> Result<Graph, String> {
    let text = read_to_string(path)?;
    let parsed = if text.trim_start().starts_with('{') {
        Graph::parse_json(&text)
    } else {
        Graph::parse_text(&text)
    };
    parsed.map_err(|e| e.to_string())
}

fn load_boundary(path: Option<&PathBuf>) -> Result<BoundaryCondition, String> {
    match path {
        None => Ok(BoundaryCondition::new()),
        Some(p) => BoundaryCondition::parse_json(&read_to_string(p)?).map_err(|e| e.to_string()),
    }
}

fn activity(lambda: f64) -> Result<Activity, String> {
    Activity::new(lambda).map_err(|e| e.to_string())
}

fn parse_u32_list(s: &str) -> Result<Vec<u32>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<u32>().map_err(|e| format!("bad list entry {t:?}: {e}")))
        .collect()
}

fn run(command: Command, format: Format) -> Result<String, String> {
    match command {
        Command::Oracle {
            graph,
            lambda,
            boundary,
            vertex,
            size_guard,
        } => {
            let g = load_graph(&graph)?;
            let sigma = load_boundary(boundary.as_ref())?;
            let act = activity(lambda)?;
            let opts = OracleOptions { size_guard };
            let mut payload = match vertex {
                None => {
                    if sigma.is_empty() {
                        let log_z =
                            exact_log_partition(&g, act, &opts).map_err(|e| e.to_string())?;
                        json!({ "log_Z": log_z })
                    } else {
                        let reduced = hardcore::reduce_by_boundary(&g, &sigma, act)
                            .map_err(|e| e.to_string())?;
                        let log_z = reduced.log_prefactor
                            + exact_log_partition(&reduced.graph, act, &opts)
                                .map_err(|e| e.to_string())?;
                        json!({ "log_Z": log_z })
                    }
                }
                Some(v) => {
                    let r = exact_occupation(&g, &sigma, v, act, &opts).map_err(|e| e.to_string())?;
                    json!({
                        "log_Z": r.log_z,
                        "vertex": v,
                        "p": r.p,
                        "ratio": r.ratio,
                    })
                }
            };
            payload["lambda"] = json!(lambda);
            render_json(payload, format)
        }
        Command::Count {
            graph,
            lambda,
            mu,
            node_budget,
            depth_cap,
            max_degree_first,
        } => {
            let g = load_graph(&graph)?;
            let act = activity(lambda)?;
            let opts = FptasOptions {
                node_budget,
                depth_cap,
                max_degree_first,
                ..FptasOptions::default()
            };
            let r = approx_log_partition(&g, act, mu, &opts).map_err(|e| e.to_string())?;
            let payload = serde_json::to_value(&r).map_err(|e| e.to_string())?;
            render_json(payload, format)
        }
        Command::Marginal {
            graph,
            vertex,
            lambda,
            depth,
            boundary,
            node_budget,
        } => {
            let g = load_graph(&graph)?;
            let sigma = load_boundary(boundary.as_ref())?;
            let act = activity(lambda)?;
            let interval = marginal_interval(&g, vertex, &sigma, depth, act, node_budget)
                .map_err(|e| e.to_string())?;
            let mut payload = serde_json::to_value(interval).map_err(|e| e.to_string())?;
            payload["vertex"] = json!(vertex);
            payload["midpoint"] = json!(interval.midpoint());
            render_json(payload, format)
        }
        Command::Threshold { arity, delta, lambda } => {
            let report = threshold_report(arity, delta, lambda).map_err(|e| e.to_string())?;
            render_json(serde_json::to_value(&report).map_err(|e| e.to_string())?, format)
        }
        Command::Table1 => {
            let rows = lattice_table().map_err(|e| e.to_string())?;
            match format {
                Format::Csv => Ok(lattice_table_csv(&rows)),
                Format::Json => serde_json::to_string_pretty(&rows).map_err(|e| e.to_string()),
                Format::Text => {
                    let mut out = String::new();
                    out.push_str("lattice      conn.const  maxdeg   alpha     lambda*\n");
                    for r in rows {
                        out.push_str(&format!(
                            "{:<12} {:<11} {:<8} {:<9.3} {:.3}\n",
                            r.lattice, r.connective_constant, r.max_degree, r.alpha, r.lambda_star
                        ));
                    }
                    Ok(out)
                }
            }
        }
        Command::Certify {
            arity,
            delta,
            lambda,
            concavity,
        } => {
            let act = activity(lambda)?;
            let per_degree = ssm_certificate(arity, delta, act).map_err(|e| e.to_string())?;
            let degree_free = degree_free_certificate(delta, act).map_err(|e| e.to_string())?;
            let mut payload = json!({
                "arity": arity,
                "delta": delta,
                "lambda": lambda,
                "certificate": per_degree,
                "degree_free": degree_free,
            });
            if concavity {
                let audit = check_concavity(act, 5.0, 0.01).map_err(|e| e.to_string())?;
                payload["concavity"] = serde_json::to_value(&audit).map_err(|e| e.to_string())?;
            }
            render_json(payload, format)
        }
        Command::Saw {
            graph,
            vertex,
            max_length,
            node_budget,
        } => {
            let g = load_graph(&graph)?;
            let counts = count_saws(&g, vertex, max_length, node_budget).map_err(|e| e.to_string())?;
            match format {
                Format::Csv | Format::Text => Ok(counts.to_csv()),
                Format::Json => serde_json::to_string_pretty(&counts).map_err(|e| e.to_string()),
            }
        }
        Command::Connective {
            graph,
            length,
            samples,
            seed,
            vertices,
            node_budget,
        } => {
            let g = load_graph(&graph)?;
            let sample: Vec<u32> = match vertices {
                Some(list) => parse_u32_list(&list)?,
                None => {
                    let mut rng = SplitMix64::new(seed);
                    let mut all: Vec<u32> = (0..g.n()).collect();
                    let take = samples.min(all.len());
                    // partial Fisher-Yates, seeded
                    for i in 0..take {
                        let j = i + rng.next_below((all.len() - i) as u64) as usize;
                        all.swap(i, j);
                    }
                    all.truncate(take);
                    all
                }
            };
            let est =
                estimate_connective(&g, &sample, length, node_budget).map_err(|e| e.to_string())?;
            match format {
                Format::Csv => {
                    let mut out = String::from("vertex,cumulative_root\n");
                    for (v, r) in &est.per_vertex {
                        out.push_str(&format!("{v},{r:.12}\n"));
                    }
                    out.push_str(&format!("max,{:.12}\n", est.max_root));
                    Ok(out)
                }
                _ => render_json(
                    serde_json::to_value(&est).map_err(|e| e.to_string())?,
                    format,
                ),
            }
        }
        Command::Branching {
            lattice,
            memory,
            mode,
            ordering,
            sweep_orderings,
            normalize_first_step,
            tol,
            state_cap,
            export,
        } => {
            if !lattice.eq_ignore_ascii_case("z2") {
                return Err(format!("unsupported lattice {lattice:?}: only z2 is available"));
            }
            let mode: PruningMode = mode.parse().map_err(|e: hardcore::Error| e.to_string())?;
            if sweep_orderings {
                let mut reports = Vec::new();
                for o in DirectionOrdering::all() {
                    let r = branching_report(memory, o, mode, normalize_first_step, state_cap, tol)
                        .map_err(|e| e.to_string())?;
                    reports.push(r);
                }
                let min = reports
                    .iter()
                    .map(|r| r.gamma)
                    .fold(f64::INFINITY, f64::min);
                let payload = json!({ "min_gamma": min, "orderings": reports });
                return render_json(payload, format);
            }
            let ordering: DirectionOrdering =
                ordering.parse().map_err(|e: hardcore::Error| e.to_string())?;
            let m = branching_matrix(memory, ordering, mode, normalize_first_step, state_cap)
                .map_err(|e| e.to_string())?;
            if let Some(path) = &export {
                std::fs::write(path, m.export_coordinate_text())
                    .map_err(|e| format!("{}: {e}", path.display()))?;
            }
            let gamma = perron_root(&m, tol).map_err(|e| e.to_string())?;
            let payload = json!({
                "lattice": "z2",
                "memory": memory,
                "mode": match mode { PruningMode::Plain => "plain", PruningMode::WeitzPruned => "weitz-pruned" },
                "ordering": ordering.word(),
                "states": m.num_states(),
                "transitions": m.num_transitions(),
                "gamma": gamma,
            });
            render_json(payload, format)
        }
        Command::Gnp {
            n,
            degree,
            seed,
            output,
        } => {
            let g = generate_gnp(n, degree, seed).map_err(|e| e.to_string())?;
            let body = match format {
                Format::Json => g.to_json(),
                _ => g.to_text(),
            };
            write_or_return(body, output)
        }
        Command::Lattice {
            kind,
            extents,
            output,
        } => {
            let kind: LatticeKind = kind.parse().map_err(|e: hardcore::Error| e.to_string())?;
            let extents = parse_u32_list(&extents)?;
            let g = generate_lattice_patch(kind, &extents).map_err(|e| e.to_string())?;
            let body = match format {
                Format::Json => g.to_json(),
                _ => g.to_text(),
            };
            write_or_return(body, output)
        }
        Command::Decay {
            graph,
            complete_tree,
            vertex,
            boundary,
            lambda,
            depth_min,
            depth_max,
            depth_step,
            node_budget,
        } => {
            let act = activity(lambda)?;
            if depth_step == 0 || depth_min > depth_max {
                return Err("need depth_min <= depth_max and depth_step >= 1".into());
            }
            let depths: Vec<u32> = (depth_min..=depth_max).step_by(depth_step as usize).collect();
            let loaded;
            let sigma;
            let target = match (&graph, complete_tree) {
                (Some(path), None) => {
                    loaded = load_graph(path)?;
                    sigma = load_boundary(boundary.as_ref())?;
                    DecayTarget::Graph {
                        graph: &loaded,
                        vertex: vertex.ok_or("--vertex is required with --graph")?,
                        boundary: &sigma,
                    }
                }
                (None, Some(arity)) => DecayTarget::CompleteTree { arity },
                _ => return Err("pass exactly one of --graph or --complete-tree".into()),
            };
            let profile =
                decay_profile(&target, act, &depths, node_budget).map_err(|e| e.to_string())?;
            match format {
                Format::Csv => Ok(decay_profile_csv(&profile)),
                _ => render_json(
                    serde_json::to_value(&profile).map_err(|e| e.to_string())?,
                    format,
                ),
            }
        }
        Command::Symmetric {
            arities,
            lambda,
            depth,
        } => {
            let arities = parse_u32_list(&arities)?;
            let act = activity(lambda)?;
            let depth = depth.unwrap_or(arities.len());
            let r = symmetric_tree_report(&arities, act, depth).map_err(|e| e.to_string())?;
            render_json(serde_json::to_value(&r).map_err(|e| e.to_string())?, format)
        }
    }
}

fn render_json(payload: serde_json::Value, format: Format) -> Result<String, String> {
    match format {
        Format::Json => serde_json::to_string_pretty(&payload).map_err(|e| e.to_string()),
        Format::Csv => Err("this subcommand has no CSV form; use --format json or text".into()),
        Format::Text => {
            let mut out = String::new();
            render_text(&payload, "", &mut out);
            Ok(out)
        }
    }
}

fn render_text(value: &serde_json::Value, prefix: &str, out: &mut String) {
    match value {
        serde_json::Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                render_text(v, &key, out);
            }
        }
        serde_json::Value::Array(items) => {
            if items.len() > 12 {
                out.push_str(&format!("{prefix}: [{} entries]\n", items.len()));
            } else {
                for (i, v) in items.iter().enumerate() {
                    render_text(v, &format!("{prefix}[{i}]"), out);
                }
            }
        }
        serde_json::Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                if n.is_f64() {
                    out.push_str(&format!("{prefix} = {f:.6}\n"));
                } else {
                    out.push_str(&format!("{prefix} = {n}\n"));
                }
            }
        }
        other => out.push_str(&format!("{prefix} = {other}\n")),
    }
}

fn write_or_return(body: String, output: Option<PathBuf>) -> Result<String, String> {
    match output {
        None => Ok(body),
        Some(path) => {
            std::fs::write(&path, &body).map_err(|e| format!("{}: {e}", path.display()))?;
            Ok(format!("wrote {}\n", path.display()))
        }
    }
}
