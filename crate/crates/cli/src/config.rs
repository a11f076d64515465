//! The TOML run configuration and its resolution into library types.
//!
//! Every optional field is filled in by [`RunConfig::resolve`], and the resolved config is
//! echoed next to the outputs so a rerun from the echo reproduces them.

use std::path::{Path, PathBuf};

use netwhittle::eval::{BandwidthPolicy, LambdaPolicy, Rescale};
use netwhittle::graphs::{self, Benchmark, GraphKind, LaplacianSpec, Provenance};
use netwhittle::procgen::{NoiseFamily, ProcessModel, DEFAULT_BURN_IN};
use netwhittle::theory::DEFAULT_TAU;
use netwhittle::whittle::SolverOptions;
use netwhittle::{Execution, SymmetricMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Output subdirectory name under `<out>/<command>/`.
    pub name: String,
    /// Default for every seed left unset below.
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    pub process: ProcessSection,
    pub data: DataSection,
    pub estimation: EstimationSection,
    pub sweep: SweepSection,
    pub path: PathSection,
    pub fit: FitSection,
    pub diagnose: DiagnoseSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphSection>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            name: "default".into(),
            seed: 0,
            threads: None,
            process: ProcessSection::default(),
            data: DataSection::default(),
            estimation: EstimationSection::default(),
            sweep: SweepSection::default(),
            path: PathSection::default(),
            fit: FitSection::default(),
            diagnose: DiagnoseSection::default(),
            graph: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphFamily {
    ErdosRenyi,
    SmallWorld,
    ScaleFree,
    GridChain,
    Chain,
    Benchmark,
    File,
}

impl GraphFamily {
    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "erdos_renyi" | "er" => GraphFamily::ErdosRenyi,
            "small_world" => GraphFamily::SmallWorld,
            "scale_free" => GraphFamily::ScaleFree,
            "grid_chain" | "grid" => GraphFamily::GridChain,
            "chain" => GraphFamily::Chain,
            "benchmark" => GraphFamily::Benchmark,
            "file" => GraphFamily::File,
            _ => return None,
        })
    }
}

/// How a graph file is turned into a positive definite matrix.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileForm {
    /// `D − A + ε·I`.
    #[default]
    Laplacian,
    /// `A + ε·I`.
    Adjacency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSection {
    pub kind: GraphFamily,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_degree: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_attach: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub benchmark: Option<Benchmark>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub form: Option<FileForm>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Draw a fresh graph per sweep trial.
    #[serde(default)]
    pub resample: bool,
}

impl GraphSection {
    pub fn new(kind: GraphFamily) -> Self {
        Self {
            kind,
            p: None,
            target_degree: None,
            k: None,
            beta: None,
            m_attach: None,
            seed: None,
            benchmark: None,
            data_dir: None,
            file: None,
            form: None,
            epsilon: None,
            resample: false,
        }
    }

    /// Parses `kind[:key=value,...][:seed]`, e.g. `erdos_renyi:p=30,target_degree=4:7`.
    pub fn parse_flag(text: &str) -> CliResult<Self> {
        let bad = |msg: String| CliError::Config(format!("--graph `{text}`: {msg}"));
        let mut parts = text.split(':');
        let kind_name = parts.next().unwrap_or_default();
        let kind = GraphFamily::parse(kind_name).ok_or_else(|| bad(format!("unknown graph kind `{kind_name}`")))?;
        let mut g = Self::new(kind);
        if let Some(params) = parts.next() {
            for kv in params.split(',').filter(|s| !s.is_empty()) {
                let (key, value) = kv.split_once('=').ok_or_else(|| bad(format!("expected key=value, got `{kv}`")))?;
                let num = |v: &str| v.parse::<usize>().map_err(|_| bad(format!("`{key}` needs an integer, got `{v}`")));
                match key {
                    "p" => g.p = Some(num(value)?),
                    "target_degree" | "d" => g.target_degree = Some(num(value)?),
                    "k" => g.k = Some(num(value)?),
                    "m_attach" => g.m_attach = Some(num(value)?),
                    "beta" => {
                        g.beta = Some(value.parse().map_err(|_| bad(format!("`beta` needs a number, got `{value}`")))?)
                    }
                    "epsilon" => {
                        g.epsilon =
                            Some(value.parse().map_err(|_| bad(format!("`epsilon` needs a number, got `{value}`")))?)
                    }
                    "name" => {
                        g.benchmark =
                            Some(Benchmark::parse(value).ok_or_else(|| bad(format!("unknown benchmark `{value}`")))?)
                    }
                    _ => return Err(bad(format!("unknown parameter `{key}`"))),
                }
            }
        }
        if let Some(seed) = parts.next() {
            g.seed = Some(seed.parse().map_err(|_| bad(format!("seed must be an integer, got `{seed}`")))?);
        }
        if parts.next().is_some() {
            return Err(bad("too many `:` separated parts".into()));
        }
        Ok(g)
    }

    /// Fills in defaults for the chosen family; `seed` is the run seed.
    fn resolve(&mut self, seed: u64) -> CliResult<()> {
        let need_p =
            |p: Option<usize>| p.ok_or_else(|| CliError::Config("graph.p is required for synthetic graphs".into()));
        match self.kind {
            GraphFamily::ErdosRenyi => {
                need_p(self.p)?;
                self.target_degree.get_or_insert(4);
            }
            GraphFamily::SmallWorld => {
                need_p(self.p)?;
                self.k.get_or_insert(1);
                self.beta.get_or_insert(0.2);
                self.target_degree.get_or_insert(3);
            }
            GraphFamily::ScaleFree => {
                need_p(self.p)?;
                self.m_attach.get_or_insert(2);
                self.target_degree.get_or_insert(9);
            }
            GraphFamily::GridChain | GraphFamily::Chain => {
                need_p(self.p)?;
            }
            GraphFamily::Benchmark => {
                if self.benchmark.is_none() {
                    return Err(CliError::Config("graph.benchmark is required when graph.kind = \"benchmark\"".into()));
                }
            }
            GraphFamily::File => {
                if self.file.is_none() {
                    return Err(CliError::Config("graph.file is required when graph.kind = \"file\"".into()));
                }
                self.form.get_or_insert_default();
                self.epsilon.get_or_insert(graphs::SYNTHETIC_PERTURBATION);
            }
        }
        if self.resample && self.generator().is_none() {
            return Err(CliError::Config("graph.resample needs a synthetic graph kind".into()));
        }
        self.seed.get_or_insert(seed);
        Ok(())
    }

    /// The synthetic generator, for the families that have one. Call after `resolve`.
    pub fn generator(&self) -> Option<GraphKind> {
        let p = self.p?;
        Some(match self.kind {
            GraphFamily::ErdosRenyi => GraphKind::ErdosRenyi { p, target_degree: self.target_degree? },
            GraphFamily::SmallWorld => {
                GraphKind::SmallWorld { p, k: self.k?, beta: self.beta?, target_degree: self.target_degree }
            }
            GraphFamily::ScaleFree => {
                GraphKind::ScaleFree { p, m_attach: self.m_attach?, target_degree: self.target_degree }
            }
            GraphFamily::GridChain => GraphKind::GridChain { p },
            GraphFamily::Chain => GraphKind::Chain { p },
            GraphFamily::Benchmark | GraphFamily::File => return None,
        })
    }

    /// Builds the ground-truth matrix. Call after `resolve`.
    pub fn build(&self) -> CliResult<LaplacianSpec> {
        let seed = self.seed.unwrap_or_default();
        if let Some(kind) = self.generator() {
            return Ok(graphs::gen_graph(&kind, seed)?);
        }
        match self.kind {
            GraphFamily::Benchmark => {
                let b = self.benchmark.expect("resolved");
                let mut spec = b.load(self.data_dir.as_deref())?;
                if let Some(eps) = self.epsilon {
                    let (adj, hash) = b.load_adjacency(self.data_dir.as_deref())?;
                    spec = graphs::benchmark_laplacian(&adj, eps, b.name(), &hash)?;
                }
                Ok(spec)
            }
            GraphFamily::File => {
                let path = self.file.as_deref().expect("resolved");
                file_graph(path, self.form.unwrap_or_default(), self.epsilon.expect("resolved"))
            }
            _ => unreachable!("synthetic kinds have generators"),
        }
    }
}

fn file_graph(path: &Path, form: FileForm, epsilon: f64) -> CliResult<LaplacianSpec> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let hash = hex::encode(<sha2::Sha256 as sha2::Digest>::digest(&bytes));
    let adj = graphs::read_adjacency(bytes.as_slice())?.adjacency;
    let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    match form {
        FileForm::Adjacency => Ok(graphs::benchmark_laplacian(&adj, epsilon, &name, &hash)?),
        FileForm::Laplacian => {
            let p = adj.dim();
            let a = adj.as_matrix();
            let lap =
                SymmetricMatrix::from_fn(
                    p,
                    |i, j| {
                        if i == j {
                            a.row(i).sum() - a[(i, i)] + epsilon
                        } else {
                            -a[(i, j)]
                        }
                    },
                );
            Ok(LaplacianSpec::from_matrix(lap, epsilon, Provenance::Benchmark { name, sha256: hash })?)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessName {
    Iid,
    Var1,
    Varma22,
}

impl ProcessName {
    pub fn as_str(self) -> &'static str {
        match self {
            ProcessName::Iid => "iid",
            ProcessName::Var1 => "var1",
            ProcessName::Varma22 => "varma22",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        [ProcessName::Iid, ProcessName::Var1, ProcessName::Varma22].into_iter().find(|k| k.as_str() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProcessSection {
    pub kind: ProcessName,
    /// VAR(1) coefficient, `A = rho·I`.
    pub rho: f64,
    /// Scale VAR(1) innovations to give `X_t` unit variance.
    pub unit_variance: bool,
    pub burn_in: usize,
    pub noise: NoiseFamily,
}

impl Default for ProcessSection {
    fn default() -> Self {
        Self {
            kind: ProcessName::Var1,
            rho: 0.5,
            unit_variance: false,
            burn_in: DEFAULT_BURN_IN,
            noise: NoiseFamily::Gaussian,
        }
    }
}

impl ProcessSection {
    pub fn model(&self, kind: ProcessName, p: usize) -> CliResult<ProcessModel> {
        let model = match kind {
            ProcessName::Iid => ProcessModel::iid(self.noise),
            ProcessName::Var1 if self.unit_variance => ProcessModel::unit_variance_var1(p, self.rho, self.noise),
            ProcessName::Var1 => ProcessModel::var1_scaled_identity(p, self.rho, self.noise),
            ProcessName::Varma22 => ProcessModel::standard_varma22(p, self.noise),
        }
        .with_burn_in(self.burn_in);
        model.validate(p).map_err(|e| CliError::Config(format!("process: {e}")))?;
        Ok(model)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct EstimationSection {
    pub omega_index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub support_tol: Option<f64>,
    /// Ridge for the two-step baseline; defaults to `1e-3·tr(P)/p` per fit.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ridge: Option<f64>,
    pub bandwidth: BandwidthPolicy,
    pub lambda: LambdaPolicy,
    pub solver: SolverOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub grid: Vec<f64>,
    pub rescale: Rescale,
    pub trials: usize,
    pub compare_baseline: bool,
    /// Run the sweep once per process; empty means `process.kind` only.
    pub processes: Vec<ProcessName>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed_base: Option<u64>,
    pub execution: Execution,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            grid: vec![250.0, 500.0, 1000.0, 2000.0],
            rescale: Rescale::None,
            trials: 10,
            compare_baseline: false,
            processes: Vec::new(),
            seed_base: None,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathSection {
    pub k: usize,
    pub ratio: f64,
    /// Top of the grid; defaults to the smallest `λ` giving an empty support.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_max: Option<f64>,
}

impl Default for PathSection {
    fn default() -> Self {
        Self { k: 20, ratio: 0.01, lambda_max: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSection {
    /// Observed panel CSV; when absent the panel is simulated from `graph` and `process`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub panel: Option<PathBuf>,
    /// Dense `p×p` CSV of the true matrix, for recovery metrics.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnoseSection {
    pub tau: f64,
    /// Bandwidth for the report; defaults to the estimation bandwidth policy at `data.n`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
}

impl Default for DiagnoseSection {
    fn default() -> Self {
        Self { tau: DEFAULT_TAU, m: None }
    }
}

pub const DEFAULT_N: usize = 1000;

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string().trim_end().to_string()))
    }

    /// Materializes every default so the echo is self-contained.
    pub fn resolve(&mut self) -> CliResult<()> {
        let seed = self.seed;
        if let Some(g) = self.graph.as_mut() {
            g.resolve(seed)?;
        }
        self.data.n.get_or_insert(DEFAULT_N);
        let data_seed = *self.data.seed.get_or_insert(seed.wrapping_add(1));
        self.sweep.seed_base.get_or_insert(data_seed);
        if self.threads == Some(0) {
            return Err(CliError::Config("threads must be >= 1".into()));
        }
        if self.data.n < Some(2) {
            return Err(CliError::Config("data.n must be >= 2".into()));
        }
        if !(self.diagnose.tau > 0.0) {
            return Err(CliError::Config(format!("diagnose.tau must be > 0, got {}", self.diagnose.tau)));
        }
        if self.path.k == 0 || !(self.path.ratio > 0.0 && self.path.ratio <= 1.0) {
            return Err(CliError::Config("path needs k >= 1 and ratio in (0, 1]".into()));
        }
        self.estimation.solver.validate().map_err(|e| CliError::Config(format!("estimation.solver: {e}")))?;
        if let LambdaPolicy::Ebic { gamma, grid_len, ratio } = self.estimation.lambda {
            if !(0.0..=1.0).contains(&gamma) || grid_len == 0 || !(ratio > 0.0 && ratio <= 1.0) {
                return Err(CliError::Config(
                    "estimation.lambda: ebic needs gamma in [0,1], grid_len >= 1 and ratio in (0,1]".into(),
                ));
            }
        }
        if let LambdaPolicy::Fixed { lambda } = self.estimation.lambda {
            if !(lambda >= 0.0 && lambda.is_finite()) {
                return Err(CliError::Config(format!("estimation.lambda: fixed lambda must be >= 0, got {lambda}")));
            }
        }
        Ok(())
    }

    pub fn graph(&self) -> CliResult<&GraphSection> {
        self.graph.as_ref().ok_or_else(|| CliError::Config("missing section `graph`".into()))
    }

    pub fn n(&self) -> usize {
        self.data.n.unwrap_or(DEFAULT_N)
    }

    pub fn data_seed(&self) -> u64 {
        self.data.seed.unwrap_or(self.seed.wrapping_add(1))
    }

    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string(self).map_err(|e| CliError::Config(format!("cannot serialize config: {e}")))
    }
}
