//! Run configuration: one JSON document (or command-line flags) that pins
//! down a run completely. Outputs embed the resolved configuration so that a
//! run can be repeated from its own output.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cftp::ParamPoint;
use crate::dynamics::RuleSpec;
use crate::exact::RC_EDGE_CAP;
use crate::graph::{build_box, build_torus, build_tree, complete, cycle, path, Host};
use crate::{Error, Result};

/// What a run does.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Verify,
    Exact,
    Sample,
    Forward,
    Grand,
    Factor,
    Sweep,
    AuditRng,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Format> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::InvalidParameter(format!("unknown format {s:?} (csv or json)"))),
        }
    }
}

/// A builtin family with its parameters, or a JSON graph file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GraphSpec {
    Box { dimension: usize, side: usize, volumes: usize },
    Torus { dimension: usize, side: usize },
    Tree { degree: usize, depth: usize, volumes: usize },
    Path(usize),
    Cycle(usize),
    Complete(usize),
    File(PathBuf),
}

impl FromStr for GraphSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<GraphSpec> {
        let Some((family, args)) = s.split_once(':') else {
            return Ok(GraphSpec::File(PathBuf::from(s)));
        };
        let nums: Vec<usize> = args
            .split(',')
            .map(|a| a.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::InvalidGraph(format!("{s:?}: parameters must be non-negative integers")))?;
        let want = |n: usize, form: &str| {
            if nums.len() == n {
                Ok(())
            } else {
                Err(Error::InvalidGraph(format!("{s:?}: expected {family}:{form}")))
            }
        };
        Ok(match family {
            "box" => {
                want(3, "dimension,side,volumes")?;
                GraphSpec::Box { dimension: nums[0], side: nums[1], volumes: nums[2] }
            }
            "torus" => {
                want(2, "dimension,side")?;
                GraphSpec::Torus { dimension: nums[0], side: nums[1] }
            }
            "tree" => {
                want(3, "degree,depth,volumes")?;
                GraphSpec::Tree { degree: nums[0], depth: nums[1], volumes: nums[2] }
            }
            "path" => {
                want(1, "n")?;
                GraphSpec::Path(nums[0])
            }
            "cycle" => {
                want(1, "n")?;
                GraphSpec::Cycle(nums[0])
            }
            "complete" => {
                want(1, "n")?;
                GraphSpec::Complete(nums[0])
            }
            // Windows drive letters and other paths with a colon
            _ => GraphSpec::File(PathBuf::from(s)),
        })
    }
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSpec::Box { dimension, side, volumes } => write!(f, "box:{dimension},{side},{volumes}"),
            GraphSpec::Torus { dimension, side } => write!(f, "torus:{dimension},{side}"),
            GraphSpec::Tree { degree, depth, volumes } => write!(f, "tree:{degree},{depth},{volumes}"),
            GraphSpec::Path(n) => write!(f, "path:{n}"),
            GraphSpec::Cycle(n) => write!(f, "cycle:{n}"),
            GraphSpec::Complete(n) => write!(f, "complete:{n}"),
            GraphSpec::File(p) => write!(f, "{}", p.display()),
        }
    }
}

impl GraphSpec {
    /// Builds or reads the host. A missing file is a validation error.
    pub fn load(&self) -> Result<Host> {
        match self {
            GraphSpec::Box { dimension, side, volumes } => build_box(*dimension, *side, *volumes),
            GraphSpec::Torus { dimension, side } => build_torus(*dimension, *side),
            GraphSpec::Tree { degree, depth, volumes } => build_tree(*degree, *depth, *volumes),
            GraphSpec::Path(n) => path(*n),
            GraphSpec::Cycle(n) => cycle(*n),
            GraphSpec::Complete(n) => complete(*n),
            GraphSpec::File(p) => {
                if !p.exists() {
                    return Err(Error::InvalidGraph(format!("graph file {} does not exist", p.display())));
                }
                Host::load(p)
            }
        }
    }
}

/// Everything a run needs. Unset fields take the defaults below.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    /// `box:d,side,m`, `torus:d,side`, `tree:deg,depth,m`, `path:n`,
    /// `cycle:n`, `complete:n` or a path to a JSON graph file.
    pub graph: String,
    /// Grid values of `p`; the grid is `p × q`.
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    /// Rules such as `free:2`; empty means `free:<last volume>`.
    pub rules: Vec<RuleSpec>,
    /// Volumes for the grand coupling; empty means all.
    pub volumes: Vec<usize>,
    pub seed: u64,
    pub samples: usize,
    /// Largest window for exact sampling, and the window of fixed-window
    /// runs (grand coupling, factor map, forward horizon).
    pub tmax: f64,
    /// Spin given to clusters on the wired boundary.
    pub spin: u32,
    /// Inverse temperature for the factor map; defaults to the one of `p`.
    pub beta: Option<f64>,
    /// Snapshot interval of forward runs.
    pub every: Option<f64>,
    /// Include configurations in grand-coupling reports.
    pub with_configs: bool,
    /// Also report Potts spins for each exact sample.
    pub spins: bool,
    /// Vertices whose pairwise connectivity a sweep reports.
    pub watch: Vec<usize>,
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            mode: Mode::Sample,
            graph: "complete:3".into(),
            p: vec![0.5],
            q: vec![2.0],
            rules: Vec::new(),
            volumes: Vec::new(),
            seed: 1,
            samples: 1000,
            tmax: 4096.0,
            spin: 1,
            beta: None,
            every: None,
            with_configs: false,
            spins: false,
            watch: Vec::new(),
            out: None,
            format: Format::Csv,
        }
    }
}

/// A validated configuration with its host loaded.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub config: RunConfig,
    pub host: Host,
    pub grid: Vec<ParamPoint>,
    pub rules: Vec<RuleSpec>,
    pub volumes: Vec<usize>,
}

impl RunConfig {
    pub fn from_json_str(text: &str) -> Result<RunConfig> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<RunConfig> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::InvalidParameter(format!("config file {} does not exist", path.display())));
        }
        RunConfig::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("configs serialize")
    }

    /// `p × q`, p varying slowest.
    pub fn grid(&self) -> Result<Vec<ParamPoint>> {
        let mut out = Vec::with_capacity(self.p.len() * self.q.len());
        for &p in &self.p {
            for &q in &self.q {
                out.push(ParamPoint::new(p, q)?);
            }
        }
        Ok(out)
    }

    /// Field checks that need no graph.
    pub fn validate(&self) -> Result<()> {
        if self.p.is_empty() || self.q.is_empty() {
            return Err(Error::InvalidParameter("need at least one value of p and of q".into()));
        }
        self.grid()?;
        if self.samples == 0 {
            return Err(Error::InvalidParameter("samples must be at least 1".into()));
        }
        if !(self.tmax > 0.0 && self.tmax.is_finite()) {
            return Err(Error::InvalidParameter(format!("tmax = {} must be positive and finite", self.tmax)));
        }
        if let Some(b) = self.beta {
            if !(b >= 0.0 && b.is_finite()) {
                return Err(Error::InvalidParameter(format!("beta = {b} must be non-negative and finite")));
            }
        }
        if let Some(e) = self.every {
            if !(e > 0.0) {
                return Err(Error::InvalidParameter("snapshot interval must be positive".into()));
            }
        }
        let integer_q = self.q.iter().all(|&q| q.fract() == 0.0 && q >= 2.0);
        if self.mode == Mode::Factor || (self.mode == Mode::Sample && self.spins) {
            if !integer_q {
                return Err(Error::InvalidParameter("spins need integer q >= 2".into()));
            }
            if self.spin == 0 || self.q.iter().any(|&q| self.spin as f64 > q) {
                return Err(Error::InvalidParameter(format!("spin {} outside 1..=q", self.spin)));
            }
        }
        Ok(())
    }

    /// Validates everything, loads the host and fills in defaults.
    pub fn resolve(&self) -> Result<Resolved> {
        self.validate()?;
        let spec: GraphSpec = self.graph.parse()?;
        let host = spec.load()?;
        let depth = host.exhaustion.depth();
        let rules = if self.rules.is_empty() {
            vec![RuleSpec { kind: crate::dynamics::BoundaryKind::Free, volume: depth }]
        } else {
            self.rules.clone()
        };
        for r in &rules {
            if r.volume > depth {
                return Err(Error::InvalidParameter(format!(
                    "rule {r} refers to volume {} but the exhaustion has {depth}",
                    r.volume
                )));
            }
        }
        let volumes = if self.volumes.is_empty() { (1..=depth).collect() } else { self.volumes.clone() };
        if let Some(v) = volumes.iter().find(|&&v| v == 0 || v > depth) {
            return Err(Error::InvalidParameter(format!("volume {v} outside 1..={depth}")));
        }
        if let Some(v) = self.watch.iter().find(|&&v| v >= host.graph.vertex_count()) {
            return Err(Error::InvalidParameter(format!("watched vertex {v} is not in the graph")));
        }
        if matches!(self.mode, Mode::Sample | Mode::Exact | Mode::Forward | Mode::Sweep) {
            host.graph.require_connected()?;
        }
        if self.mode == Mode::Exact {
            for r in &rules {
                let n = host.exhaustion.edges(r.volume)?.len();
                if n > RC_EDGE_CAP {
                    return Err(Error::InvalidParameter(format!(
                        "exact enumeration of {r} needs 2^{n} configurations; the cap is 2^{RC_EDGE_CAP}. \
                         Use a smaller volume or the sample mode"
                    )));
                }
            }
        }
        Ok(Resolved {
            config: self.clone(),
            grid: self.grid()?,
            host,
            rules,
            volumes,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graph_spec_parsing() {
        assert_eq!(
            "box:2,8,3".parse::<GraphSpec>().unwrap(),
            GraphSpec::Box { dimension: 2, side: 8, volumes: 3 }
        );
        assert_eq!("cycle:4".parse::<GraphSpec>().unwrap(), GraphSpec::Cycle(4));
        assert_eq!("g.json".parse::<GraphSpec>().unwrap(), GraphSpec::File("g.json".into()));
        assert!("box:2,8".parse::<GraphSpec>().is_err());
        assert!("path:x".parse::<GraphSpec>().is_err());
        for s in ["box:2,8,3", "torus:2,4", "tree:3,4,2", "complete:5"] {
            assert_eq!(s.parse::<GraphSpec>().unwrap().to_string(), s);
        }
    }

    #[test]
    fn missing_file_is_a_validation_error() {
        let err = GraphSpec::File("/nonexistent/graph.json".into()).load().unwrap_err();
        assert!(matches!(err, Error::InvalidGraph(_)));
    }

    #[test]
    fn config_round_trip() {
        let c = RunConfig {
            mode: Mode::Grand,
            graph: "box:2,8,3".into(),
            p: vec![0.2, 0.4],
            q: vec![1.0, 2.0],
            rules: vec!["wired:2".parse().unwrap()],
            beta: Some(0.3),
            ..RunConfig::default()
        };
        let back = RunConfig::from_json_str(&c.to_json()).unwrap();
        assert_eq!(back, c);
        assert!(c.to_json().contains("\"mode\":\"grand\""));
    }

    #[test]
    fn validation_rejects_bad_fields() {
        let bad = [
            RunConfig { p: vec![1.5], ..RunConfig::default() },
            RunConfig { q: vec![0.5], ..RunConfig::default() },
            RunConfig { samples: 0, ..RunConfig::default() },
            RunConfig { tmax: 0.0, ..RunConfig::default() },
            RunConfig { mode: Mode::Factor, q: vec![2.5], ..RunConfig::default() },
            RunConfig { mode: Mode::Factor, spin: 3, ..RunConfig::default() },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
        assert!(RunConfig::from_json_str(r#"{"mode":"sample","bogus":1}"#).is_err());
    }

    #[test]
    fn resolve_checks_against_the_graph() {
        let big = RunConfig { mode: Mode::Exact, graph: "box:2,8,1".into(), ..RunConfig::default() };
        assert!(big.resolve().is_err());
        let far = RunConfig { graph: "box:2,8,2".into(), rules: vec!["free:3".parse().unwrap()], ..RunConfig::default() };
        assert!(far.resolve().is_err());
        let ok = RunConfig { graph: "box:2,8,3".into(), ..RunConfig::default() }.resolve().unwrap();
        assert_eq!(ok.rules[0].to_string(), "free:3");
        assert_eq!(ok.volumes, vec![1, 2, 3]);
    }
}
