//! `randcluster`: exact random-cluster and Potts sampling from the command
//! line. Every output starts with the resolved configuration, so a run can
//! be repeated from its own output file.
//!
//! Exit codes: 0 success, 1 a check failed, 2 invalid input, 3 I/O error.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use randcluster::cftp::{grand_coupling_unchecked, sample_many, Start};
use randcluster::config::{Format, Mode, Resolved, RunConfig};
use randcluster::dynamics::{forward, stationary_law, RuleSpec, UpdateRule};
use randcluster::potts::{assign_spins_wired, factor_map, p_to_beta};
use randcluster::randomness::{audit_draws, replica_seed, SeededStreams, VertexField};
use randcluster::stats::{sweep_summary, SweepOptions};
use randcluster::verify::{run_checks, Fault, Scale, VerifyOptions};
use randcluster::{Error, VERSION};

#[derive(Parser)]
#[command(name = "randcluster", version, about = "Exact sampling for random-cluster and Potts models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sampler-versus-oracle checks.
    Verify(VerifyArgs),
    /// Enumerate the exact law of each rule (small volumes only).
    Exact(Common),
    /// Exact samples by coupling from the past.
    #[command(alias = "cftp")]
    Sample(SampleArgs),
    /// Run the dynamics forward in time and record snapshots.
    Forward(ForwardArgs),
    /// One grand coupling over the grid, both boundary rules and all volumes.
    Grand(GrandArgs),
    /// The factor map from an i.i.d. vertex field to Potts spins.
    Factor(FactorArgs),
    /// Observables over a parameter grid with shared randomness.
    Sweep(SweepArgs),
    /// Summary statistics of the random streams.
    AuditRng(Common),
}

#[derive(Args, Clone, Default)]
struct Common {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// box:d,side,m | torus:d,side | tree:deg,depth,m | path:n | cycle:n | complete:n | file.json
    #[arg(long)]
    graph: Option<String>,
    /// Comma-separated values of p.
    #[arg(long, value_delimiter = ',')]
    p: Vec<f64>,
    /// Comma-separated values of q.
    #[arg(long, value_delimiter = ',')]
    q: Vec<f64>,
    /// Boundary rules such as free:2 or wired:3.
    #[arg(long = "rule", value_delimiter = ',')]
    rules: Vec<RuleSpec>,
    /// Volumes for the grand coupling.
    #[arg(long = "volume", value_delimiter = ',')]
    volumes: Vec<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    /// Largest coupling-from-the-past window, or the fixed window / horizon.
    #[arg(long)]
    tmax: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<Format>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Ten times fewer samples, tolerances widened to match.
    #[arg(long)]
    quick: bool,
    /// Run only these checks (1-10).
    #[arg(long = "check", value_delimiter = ',')]
    checks: Vec<u8>,
    #[arg(long, hide = true)]
    inject_fault: Option<String>,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    common: Common,
    /// Also colour each sample with Potts spins.
    #[arg(long)]
    spins: bool,
    /// Spin of clusters touching the wired boundary.
    #[arg(long)]
    spin: Option<u32>,
}

#[derive(Args)]
struct ForwardArgs {
    #[command(flatten)]
    common: Common,
    /// Snapshot interval.
    #[arg(long)]
    every: Option<f64>,
}

#[derive(Args)]
struct GrandArgs {
    #[command(flatten)]
    common: Common,
    /// Include every member's configuration.
    #[arg(long)]
    with_configs: bool,
}

#[derive(Args)]
struct FactorArgs {
    #[command(flatten)]
    common: Common,
    /// Inverse temperature; defaults to the one of each p.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    spin: Option<u32>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Vertices for the two-point connectivity matrix.
    #[arg(long, value_delimiter = ',')]
    watch: Vec<usize>,
}

/// A failure and the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let code = match e {
            Error::Io(_) => 3,
            Error::NoCoalescence(_) | Error::OrderViolation(_) | Error::Monotonicity(_) => 1,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type Outcome = Result<(), Failure>;

fn build_config(common: &Common, mode: Mode) -> Result<RunConfig, Error> {
    let mut c = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    c.mode = mode;
    if let Some(g) = &common.graph {
        c.graph = g.clone();
    }
    if !common.p.is_empty() {
        c.p = common.p.clone();
    }
    if !common.q.is_empty() {
        c.q = common.q.clone();
    }
    if !common.rules.is_empty() {
        c.rules = common.rules.clone();
    }
    if !common.volumes.is_empty() {
        c.volumes = common.volumes.clone();
    }
    c.seed = common.seed.unwrap_or(c.seed);
    c.samples = common.samples.unwrap_or(c.samples);
    c.tmax = common.tmax.unwrap_or(c.tmax);
    if common.out.is_some() {
        c.out = common.out.clone();
    }
    c.format = common.format.unwrap_or(c.format);
    Ok(c)
}

/// Writes the result to `--out` or stdout, prefixed with the configuration.
fn emit(config: &RunConfig, csv: impl FnOnce() -> String, json_body: impl FnOnce() -> Value) -> Outcome {
    let text = match config.format {
        Format::Csv => format!("# randcluster {VERSION}\n# config: {}\n{}", config.to_json(), csv()),
        Format::Json => {
            let mut doc = json!({ "version": VERSION, "config": config });
            if let (Value::Object(d), Value::Object(b)) = (&mut doc, json_body()) {
                d.extend(b);
            }
            serde_json::to_string_pretty(&doc).map_err(Error::from)? + "\n"
        }
    };
    match &config.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?,
        None => std::io::stdout().write_all(text.as_bytes()).map_err(Error::from)?,
    }
    Ok(())
}

fn run_verify(args: &VerifyArgs) -> Outcome {
    let config = build_config(&args.common, Mode::Verify)?;
    let fault = match args.inject_fault.as_deref() {
        None => None,
        Some("flip-order") => Some(Fault::FlipOrder),
        Some(other) => {
            return Err(Error::InvalidParameter(format!("unknown fault {other:?}")).into());
        }
    };
    let opts = VerifyOptions {
        scale: if args.quick { Scale::Quick } else { Scale::Full },
        seed: args.common.seed.unwrap_or(VerifyOptions::default().seed),
        fault,
    };
    let ids: Vec<u8> = if args.checks.is_empty() { (1..=10).collect() } else { args.checks.clone() };
    if let Some(bad) = ids.iter().find(|&&i| !(1..=10).contains(&i)) {
        return Err(Error::InvalidParameter(format!("no check numbered {bad}")).into());
    }
    let report = run_checks(&ids, &opts);
    for c in &report.checks {
        eprintln!("check {:>2} {:<26} {}", c.id, c.name, if c.passed { "pass" } else { "FAIL" });
    }
    emit(&config, || report.to_csv(), || json!({ "report": report }))?;
    if report.passed() {
        Ok(())
    } else {
        Err(Failure {
            code: 1,
            message: "verification failed".into(),
        })
    }
}

fn run_exact(r: &Resolved) -> Outcome {
    let mut csv = String::from("p,q,rule,config,prob\n");
    let mut laws = Vec::new();
    for &param in &r.grid {
        for &spec in &r.rules {
            let rule = UpdateRule::new(&r.host, spec, param)?;
            let law = stationary_law(&rule)?;
            for i in 0..law.len() {
                csv.push_str(&format!("{},{},{spec},{},{}\n", param.p, param.q, law.config_string(i), law.prob(i)));
            }
            laws.push(json!({
                "p": param.p,
                "q": param.q,
                "rule": spec.to_string(),
                "edges": law.sites(),
                "atoms": law.to_atoms(),
            }));
        }
    }
    emit(&r.config, || csv, || json!({ "laws": laws }))
}

fn run_sample(r: &Resolved) -> Outcome {
    let c = &r.config;
    let g = &r.host.graph;
    let mut csv = String::from(if c.spins {
        "p,q,rule,replica,coalesced_at,config,spins\n"
    } else {
        "p,q,rule,replica,coalesced_at,config\n"
    });
    let mut rows = Vec::new();
    for &param in &r.grid {
        for &spec in &r.rules {
            let rule = UpdateRule::new(&r.host, spec, param)?;
            let samples = sample_many(&rule, c.seed, c.samples, c.tmax)?;
            for (k, s) in samples.iter().enumerate() {
                let spins = if c.spins {
                    let field = VertexField::new(replica_seed(c.seed, k as u64), g.max_degree().max(1), param.q as u32)?;
                    Some(assign_spins_wired(g, &s.config, c.spin, rule.boundary(), &field)?)
                } else {
                    None
                };
                csv.push_str(&format!("{},{},{spec},{k},{},{}", param.p, param.q, s.coalesced_at, s.config));
                if let Some(sp) = &spins {
                    csv.push_str(&format!(",{}", sp.to_qary_string()));
                }
                csv.push('\n');
                let mut row = json!({
                    "p": param.p,
                    "q": param.q,
                    "rule": spec.to_string(),
                    "replica": k,
                    "coalesced_at": s.coalesced_at,
                    "config": s.config.to_bits(),
                });
                if let Some(sp) = spins {
                    row["spins"] = json!(sp.to_qary_string());
                }
                rows.push(row);
            }
        }
    }
    emit(c, || csv, || json!({ "samples": rows }))
}

fn run_forward(r: &Resolved) -> Outcome {
    let c = &r.config;
    let mut csv = String::from("p,q,rule,time,config\n");
    let mut runs = Vec::new();
    for &param in &r.grid {
        for &spec in &r.rules {
            let rule = UpdateRule::new(&r.host, spec, param)?;
            let start = match Start::proper_for(spec.kind) {
                Start::AllClosed => rule.closed_start(),
                Start::AllOpen => rule.open_start(),
            };
            let run = forward(&rule, &SeededStreams::new(c.seed), start, c.tmax, c.every)?;
            for s in &run.snapshots {
                csv.push_str(&format!("{},{},{spec},{},{}\n", param.p, param.q, s.time, s.config));
            }
            csv.push_str(&format!("{},{},{spec},{},{}\n", param.p, param.q, c.tmax, run.final_state));
            runs.push(json!({
                "p": param.p,
                "q": param.q,
                "rule": spec.to_string(),
                "updates": run.updates,
                "snapshots": run.snapshots,
                "final": run.final_state.to_bits(),
                "occupation": run.occupation,
            }));
        }
    }
    emit(c, || csv, || json!({ "runs": runs }))
}

fn run_grand(r: &Resolved) -> Outcome {
    let c = &r.config;
    let family = grand_coupling_unchecked(&r.host, &r.grid, &r.volumes, c.tmax, c.seed)?;
    let orders = family.check_orders();
    let csv = || {
        let mut s = match &orders {
            Ok(rep) => format!("# order checks passed: {} pairs\n", rep.pairs_checked),
            Err(e) => format!("# order checks FAILED: {e}\n"),
        };
        s.push_str(if c.with_configs { "p,q,rule,coalesced_at,config\n" } else { "p,q,rule,coalesced_at\n" });
        for m in &family.members {
            let at = m.coalesced_at.map(|t| t.to_string()).unwrap_or_default();
            s.push_str(&format!("{},{},{},{at}", m.index.param.p, m.index.param.q, m.index.rule()));
            if c.with_configs {
                s.push_str(&format!(",{}", m.config));
            }
            s.push('\n');
        }
        s
    };
    emit(c, csv, || family.report(&orders, c.with_configs))?;
    orders.map(|_| ()).map_err(Failure::from)
}

fn run_factor(r: &Resolved) -> Outcome {
    let c = &r.config;
    let g = &r.host.graph;
    let volume = r.rules[0].volume;
    let mut csv = String::from("p,q,beta,volume,coalesced,spins,config\n");
    let mut outs = Vec::new();
    for &param in &r.grid {
        let beta = match c.beta {
            Some(b) => b,
            None => p_to_beta(param.p)?,
        };
        let field = VertexField::new(c.seed, g.max_degree().max(1), param.q as u32)?;
        let out = factor_map(&r.host, &field, beta, c.spin, c.tmax, volume)?;
        csv.push_str(&format!(
            "{},{},{beta},{volume},{},{},{}\n",
            out.p,
            param.q,
            out.coalesced,
            out.spins.to_qary_string(),
            out.config
        ));
        outs.push(json!({ "q": param.q, "beta": beta, "volume": volume, "output": out }));
    }
    emit(c, || csv, || json!({ "outputs": outs }))
}

fn run_sweep(r: &Resolved) -> Outcome {
    let c = &r.config;
    let mut csv = String::from(
        "p,q,rule,samples,edge_density,edge_density_stderr,largest_cluster_fraction,largest_cluster_stderr,\
         spanning_probability,spanning_stderr,coalesced_fraction\n",
    );
    let mut summaries = Vec::new();
    for &spec in &r.rules {
        let opts = SweepOptions {
            rule: spec,
            samples: c.samples,
            seed: c.seed,
            t_max: c.tmax,
            watch: c.watch.clone(),
        };
        for s in sweep_summary(&r.host, &r.grid, &opts)? {
            let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                s.param.p,
                s.param.q,
                s.rule,
                s.samples,
                s.edge_density,
                s.edge_density_stderr,
                s.largest_cluster_fraction,
                s.largest_cluster_stderr,
                opt(s.spanning_probability),
                opt(s.spanning_stderr),
                s.coalesced as f64 / s.samples as f64
            ));
            summaries.push(s);
        }
    }
    let rows: Vec<_> = summaries.iter().flat_map(|s| s.rows()).collect();
    emit(c, || csv, || json!({ "summaries": summaries, "rows": rows }))
}

fn run_audit(c: &RunConfig) -> Outcome {
    let audit = audit_draws(c.seed, c.samples);
    let csv = format!(
        "statistic,value\ndraws,{}\nphi_mean,{}\nphi_mean_z,{}\nu_ks,{}\nphi_ks,{}\nu_lag_correlation,{}\nphi_u_correlation,{}\n",
        audit.draws,
        audit.phi_mean,
        audit.phi_mean_z,
        audit.u_ks,
        audit.phi_ks,
        audit.u_lag_correlation,
        audit.phi_u_correlation
    );
    emit(c, || csv, || json!({ "audit": audit }))
}

fn run(cli: Cli) -> Outcome {
    let resolved = |common: &Common, mode: Mode, tweak: &dyn Fn(&mut RunConfig)| -> Result<Resolved, Error> {
        let mut c = build_config(common, mode)?;
        tweak(&mut c);
        c.resolve()
    };
    match &cli.command {
        Command::Verify(a) => run_verify(a),
        Command::Exact(a) => run_exact(&resolved(a, Mode::Exact, &|_| {})?),
        Command::Sample(a) => run_sample(&resolved(&a.common, Mode::Sample, &|c| {
            c.spins |= a.spins;
            c.spin = a.spin.unwrap_or(c.spin);
        })?),
        Command::Forward(a) => run_forward(&resolved(&a.common, Mode::Forward, &|c| {
            c.every = a.every.or(c.every);
        })?),
        Command::Grand(a) => run_grand(&resolved(&a.common, Mode::Grand, &|c| {
            c.with_configs |= a.with_configs;
        })?),
        Command::Factor(a) => run_factor(&resolved(&a.common, Mode::Factor, &|c| {
            c.beta = a.beta.or(c.beta);
            c.spin = a.spin.unwrap_or(c.spin);
        })?),
        Command::Sweep(a) => run_sweep(&resolved(&a.common, Mode::Sweep, &|c| {
            if !a.watch.is_empty() {
                c.watch = a.watch.clone();
            }
        })?),
        Command::AuditRng(a) => {
            let c = build_config(a, Mode::AuditRng)?;
            c.validate()?;
            run_audit(&c)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
