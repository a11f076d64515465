//! Recovery metrics and the trial-averaged sample-size sweep.

use std::collections::{HashMap, HashSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphs::{gen_graph, support_of, Edge, GraphKind, LaplacianSpec};
use crate::matcore::{norms, SymmetricMatrix};
use crate::parallel::{self, Execution};
use crate::procgen::{observe_potentials, simulate_injections, ProcessModel};
use crate::spectra::{averaged_periodogram, default_bandwidth};
use crate::theory;
use crate::whittle::{self, EbicRow, SolveReport, SolverOptions, WhittleProblem};

/// `2tp/(2tp+fp+fn)`, or 1 when all three counts are zero.
pub fn f_score_counts(tp: usize, fp: usize, fn_: usize) -> f64 {
    if tp + fp + fn_ == 0 {
        return 1.0;
    }
    2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
}

/// Edge confusion counts `(tp, fp, fn)`; edges are unordered pairs.
pub fn confusion(estimated: &[Edge], truth: &[Edge]) -> (usize, usize, usize) {
    let norm = |&(i, j): &Edge| (i.min(j), i.max(j));
    let est: HashSet<Edge> = estimated.iter().map(norm).collect();
    let tru: HashSet<Edge> = truth.iter().map(norm).collect();
    let tp = est.intersection(&tru).count();
    (tp, est.len() - tp, tru.len() - tp)
}

pub fn f_score(estimated: &[Edge], truth: &[Edge]) -> f64 {
    let (tp, fp, fn_) = confusion(estimated, truth);
    f_score_counts(tp, fp, fn_)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryMetrics {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub f_score: f64,
    /// Every true edge is estimated with the correct sign.
    pub sign_consistent: bool,
    pub err_max_abs: f64,
    pub err_frobenius: f64,
    pub err_operator2: f64,
}

/// Scores `l_hat` against `l_star`. Supports use [`support_of`] with `support_tol`; norms
/// cover the whole difference.
pub fn recovery_metrics(
    l_hat: &SymmetricMatrix,
    l_star: &SymmetricMatrix,
    support_tol: Option<f64>,
) -> Result<RecoveryMetrics> {
    if l_hat.dim() != l_star.dim() {
        return Err(Error::DimensionMismatch { expected: l_star.dim(), found: l_hat.dim() });
    }
    let truth = support_of(l_star, Some(0.0));
    let est = support_of(l_hat, support_tol);
    let (tp, fp, fn_) = confusion(&est, &truth);
    let sign_consistent =
        truth.iter().all(|&(i, j)| l_hat.get(i, j).signum() == l_star.get(i, j).signum() && l_hat.get(i, j) != 0.0);
    let n = norms(&(l_hat.as_matrix() - l_star.as_matrix()));
    Ok(RecoveryMetrics {
        tp,
        fp,
        fn_,
        f_score: f_score_counts(tp, fp, fn_),
        sign_consistent,
        err_max_abs: n.max_abs,
        err_frobenius: n.frobenius,
        err_operator2: n.operator2,
    })
}

/// Edges present in strictly more than `threshold_frac` of the estimates.
pub fn common_network(estimates: &[Vec<Edge>], threshold_frac: f64) -> Result<Vec<Edge>> {
    if estimates.is_empty() {
        return Err(Error::EmptyInput("no estimates given".into()));
    }
    if !(threshold_frac > 0.0 && threshold_frac <= 1.0) {
        return Err(Error::ParameterOutOfRange(format!("threshold_frac must be in (0,1], got {threshold_frac}")));
    }
    let mut counts: HashMap<Edge, usize> = HashMap::new();
    for est in estimates {
        let unique: HashSet<Edge> = est.iter().map(|&(i, j)| (i.min(j), i.max(j))).collect();
        for e in unique {
            *counts.entry(e).or_default() += 1;
        }
    }
    let total = estimates.len() as f64;
    let mut out: Vec<Edge> =
        counts.into_iter().filter(|&(_, c)| c as f64 / total > threshold_frac).map(|(e, _)| e).collect();
    out.sort_unstable();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LambdaPolicy {
    /// EBIC over `grid_len` log-spaced values from `λ_max` down to `ratio·λ_max`.
    Ebic {
        #[serde(default = "default_gamma")]
        gamma: f64,
        #[serde(default = "default_grid_len")]
        grid_len: usize,
        #[serde(default = "default_ratio")]
        ratio: f64,
    },
    /// `96 ν_{D²} ν_{L*} δ / α` from population quantities; needs `α > 0`.
    Theorem1 {
        #[serde(default = "default_tau")]
        tau: f64,
    },
    Fixed {
        lambda: f64,
    },
}

fn default_gamma() -> f64 {
    0.4
}

fn default_grid_len() -> usize {
    20
}

fn default_ratio() -> f64 {
    0.01
}

fn default_tau() -> f64 {
    crate::theory::DEFAULT_TAU
}

impl Default for LambdaPolicy {
    fn default() -> Self {
        LambdaPolicy::Ebic { gamma: default_gamma(), grid_len: default_grid_len(), ratio: default_ratio() }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BandwidthPolicy {
    /// `⌊√n⌋`, capped so the window fits.
    #[default]
    Sqrt,
    Fixed {
        m: usize,
    },
}

impl BandwidthPolicy {
    pub fn resolve(self, n: usize) -> usize {
        match self {
            BandwidthPolicy::Sqrt => default_bandwidth(n),
            BandwidthPolicy::Fixed { m } => m,
        }
    }
}

/// How grid values map to sample sizes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rescale {
    /// Grid values are sample sizes.
    #[default]
    None,
    /// Grid values are `n/(d³ log p)`.
    D3logp,
    /// Grid values are `n/log p`.
    Logp,
}

impl Rescale {
    pub fn factor(self, d: usize, p: usize) -> f64 {
        let logp = (p as f64).ln();
        match self {
            Rescale::None => 1.0,
            Rescale::D3logp => (d as f64).powi(3) * logp,
            Rescale::Logp => logp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub graph: LaplacianSpec,
    /// When set, trial `t` uses a fresh graph from this generator with seed `graph_seed + t`.
    pub resample_graph: Option<(GraphKind, u64)>,
    pub process: ProcessModel,
    /// Increasing grid in the units given by `rescale`.
    pub grid: Vec<f64>,
    pub rescale: Rescale,
    pub trials: usize,
    pub lambda_policy: LambdaPolicy,
    pub bandwidth: BandwidthPolicy,
    /// Trial `t` draws its data with seed `seed_base + t` at every grid point.
    pub seed_base: u64,
    pub omega_index: usize,
    pub solver: SolverOptions,
    pub support_tol: Option<f64>,
    /// Adds the two-step baseline columns.
    pub compare_baseline: bool,
    pub execution: Execution,
}

impl SweepConfig {
    pub fn new(graph: LaplacianSpec, process: ProcessModel, grid: Vec<f64>, trials: usize) -> Self {
        Self {
            graph,
            resample_graph: None,
            process,
            grid,
            rescale: Rescale::None,
            trials,
            lambda_policy: LambdaPolicy::default(),
            bandwidth: BandwidthPolicy::default(),
            seed_base: 0,
            omega_index: 0,
            solver: SolverOptions::default(),
            support_tol: None,
            compare_baseline: false,
            execution: Execution::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::ParameterOutOfRange("trials must be >= 1".into()));
        }
        if self.grid.is_empty() {
            return Err(Error::EmptyInput("sample-size grid is empty".into()));
        }
        if self.grid.iter().any(|&g| !(g > 0.0)) || self.grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::ParameterOutOfRange("grid must be positive and strictly increasing".into()));
        }
        self.process.validate(self.graph.p())?;
        self.solver.validate()
    }

    /// The sample size used at grid value `g`.
    pub fn sample_size(&self, g: f64) -> usize {
        let f = self.rescale.factor(self.graph.max_degree.max(1), self.graph.p());
        ((g * f).round() as usize).max(2)
    }
}

/// One `(n, trial)` cell. Metric fields are empty when the cell failed outright.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub rescaled_d3logp: f64,
    pub rescaled_logp: f64,
    pub trial: usize,
    pub seed: u64,
    pub f_score: Option<f64>,
    pub frob: Option<f64>,
    pub maxabs: Option<f64>,
    pub op2: Option<f64>,
    pub lambda_used: Option<f64>,
    pub m_used: usize,
    pub converged: bool,
    pub sign_consistent: Option<bool>,
    pub baseline_f_score: Option<f64>,
    pub baseline_frob: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Population mean and standard deviation; NaN when empty.
    pub fn of(xs: &[f64]) -> Self {
        if xs.is_empty() {
            return Self { mean: f64::NAN, std: f64::NAN };
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAggregate {
    pub n: usize,
    pub rescaled_d3logp: f64,
    pub rescaled_logp: f64,
    pub trials: usize,
    pub successes: usize,
    pub f_mean: f64,
    pub f_std: f64,
    pub frob_mean: f64,
    pub frob_std: f64,
    pub maxabs_mean: f64,
    pub op2_mean: f64,
    pub baseline_f_mean: Option<f64>,
    pub baseline_f_std: Option<f64>,
    pub baseline_frob_mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub aggregates: Vec<SweepAggregate>,
}

impl SweepResult {
    pub fn write_rows_csv<W: Write>(&self, w: W) -> Result<()> {
        write_csv(w, &self.rows)
    }

    pub fn write_aggregate_csv<W: Write>(&self, w: W) -> Result<()> {
        write_csv(w, &self.aggregates)
    }
}

fn write_csv<W: Write, T: Serialize>(w: W, rows: &[T]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::BadProblem(format!("csv: {other:?}")),
    }
}

/// Runs every `(n, trial)` cell, independently and in parallel when enabled.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let mut cells = Vec::with_capacity(cfg.grid.len() * cfg.trials);
    for &g in &cfg.grid {
        for trial in 0..cfg.trials {
            cells.push((cfg.sample_size(g), trial));
        }
    }
    let mut rows = parallel::map(cfg.execution, cells, |(n, trial)| run_cell(cfg, n, trial));
    rows.sort_by_key(|r| (r.n, r.trial));
    let aggregates = aggregate(&rows, cfg.compare_baseline);
    Ok(SweepResult { rows, aggregates })
}

fn run_cell(cfg: &SweepConfig, n: usize, trial: usize) -> SweepRow {
    let seed = cfg.seed_base.wrapping_add(trial as u64);
    let m = cfg.bandwidth.resolve(n);
    let graph = match &cfg.resample_graph {
        Some((kind, gseed)) => gen_graph(kind, gseed.wrapping_add(trial as u64)),
        None => Ok(cfg.graph.clone()),
    };
    let (p, d) = match &graph {
        Ok(g) => (g.p(), g.max_degree.max(1)),
        Err(_) => (cfg.graph.p(), cfg.graph.max_degree.max(1)),
    };
    let logp = (p as f64).ln();
    let mut row = SweepRow {
        n,
        rescaled_d3logp: n as f64 / ((d as f64).powi(3) * logp),
        rescaled_logp: n as f64 / logp,
        trial,
        seed,
        f_score: None,
        frob: None,
        maxabs: None,
        op2: None,
        lambda_used: None,
        m_used: m,
        converged: false,
        sign_consistent: None,
        baseline_f_score: None,
        baseline_frob: None,
        error: None,
    };
    if let Err(e) = graph.and_then(|g| fill_cell(cfg, &g, n, m, seed, &mut row)) {
        row.error = Some(e.to_string());
    }
    row
}

fn fill_cell(
    cfg: &SweepConfig,
    truth: &LaplacianSpec,
    n: usize,
    m: usize,
    seed: u64,
    row: &mut SweepRow,
) -> Result<()> {
    let p = truth.p();
    let x = simulate_injections(&cfg.process, n, p, seed)?;
    let y = observe_potentials(&truth.matrix, &x)?;
    let omega = 2.0 * std::f64::consts::PI * cfg.omega_index as f64 / n as f64;
    let theta_x = cfg.process.psd(p, omega)?.inverse()?;
    let est = averaged_periodogram(&y, cfg.omega_index, m)?;
    let base = WhittleProblem::new(est.matrix.clone(), &theta_x, 0.0, cfg.omega_index)?;

    let report =
        fit_with_policy(&base, n, m, omega, &cfg.lambda_policy, &cfg.solver, Some((truth, &cfg.process)))?.report;
    let metrics = recovery_metrics(&report.l_hat, &truth.matrix, cfg.support_tol)?;
    row.f_score = Some(metrics.f_score);
    row.frob = Some(metrics.err_frobenius);
    row.maxabs = Some(metrics.err_max_abs);
    row.op2 = Some(metrics.err_operator2);
    row.sign_consistent = Some(metrics.sign_consistent);
    row.lambda_used = Some(report.lambda);
    row.converged = report.converged;

    if cfg.compare_baseline {
        let b = whittle::two_step_baseline(&est.matrix, &theta_x, whittle::default_ridge(&est.matrix))?;
        let bm = recovery_metrics(&b.l_hat, &truth.matrix, cfg.support_tol)?;
        row.baseline_f_score = Some(bm.f_score);
        row.baseline_frob = Some(bm.err_frobenius);
    }
    Ok(())
}

/// A fit under a [`LambdaPolicy`], with the EBIC table when the policy produced one.
#[derive(Debug, Clone, Serialize)]
pub struct PolicyFit {
    pub report: SolveReport,
    pub ebic_table: Option<Vec<EbicRow>>,
}

/// Solves `base` at the `λ` chosen by `policy`. The theorem-1 policy needs the ground truth
/// and process model, and fails when `α ≤ 0`. Runs that stop early are kept with
/// `converged = false`.
pub fn fit_with_policy(
    base: &WhittleProblem,
    n: usize,
    m: usize,
    omega: f64,
    policy: &LambdaPolicy,
    solver: &SolverOptions,
    truth: Option<(&LaplacianSpec, &ProcessModel)>,
) -> Result<PolicyFit> {
    match policy {
        LambdaPolicy::Ebic { gamma, grid_len, ratio } => {
            let lmax = base.lambda_max(solver)?;
            let grid = whittle::lambda_grid(lmax, *ratio, *grid_len);
            let sel = whittle::ebic_select(base, n, m, &grid, *gamma, solver)?;
            Ok(PolicyFit { report: sel.report, ebic_table: Some(sel.table) })
        }
        LambdaPolicy::Theorem1 { tau } => {
            let (graph, process) =
                truth.ok_or_else(|| Error::BadProblem("theorem1 lambda needs the true graph and process".into()))?;
            let rep = theory::theory_report(graph, process, n, m, *tau, omega)?;
            if !(rep.alpha > 0.0) {
                return Err(Error::ParameterOutOfRange(format!("theorem1 lambda needs alpha > 0, got {}", rep.alpha)));
            }
            let report = whittle::recover_report(whittle::solve(&base.with_lambda(rep.theorem1_lambda), solver))?;
            Ok(PolicyFit { report, ebic_table: None })
        }
        LambdaPolicy::Fixed { lambda } => {
            let report = whittle::recover_report(whittle::solve(&base.with_lambda(*lambda), solver))?;
            Ok(PolicyFit { report, ebic_table: None })
        }
    }
}

fn aggregate(rows: &[SweepRow], baseline: bool) -> Vec<SweepAggregate> {
    let mut out: Vec<SweepAggregate> = Vec::new();
    let mut start = 0;
    while start < rows.len() {
        let n = rows[start].n;
        let end = start + rows[start..].iter().take_while(|r| r.n == n).count();
        let group = &rows[start..end];
        let ok: Vec<&SweepRow> = group.iter().filter(|r| r.converged && r.error.is_none()).collect();
        let col = |f: fn(&SweepRow) -> Option<f64>| ok.iter().filter_map(|r| f(r)).collect::<Vec<f64>>();
        let f = MeanStd::of(&col(|r| r.f_score));
        let frob = MeanStd::of(&col(|r| r.frob));
        let (bf, bfrob) = if baseline {
            (Some(MeanStd::of(&col(|r| r.baseline_f_score))), Some(MeanStd::of(&col(|r| r.baseline_frob))))
        } else {
            (None, None)
        };
        out.push(SweepAggregate {
            n,
            rescaled_d3logp: group[0].rescaled_d3logp,
            rescaled_logp: group[0].rescaled_logp,
            trials: group.len(),
            successes: ok.len(),
            f_mean: f.mean,
            f_std: f.std,
            frob_mean: frob.mean,
            frob_std: frob.std,
            maxabs_mean: MeanStd::of(&col(|r| r.maxabs)).mean,
            op2_mean: MeanStd::of(&col(|r| r.op2)).mean,
            baseline_f_mean: bf.map(|s| s.mean),
            baseline_f_std: bf.map(|s| s.std),
            baseline_frob_mean: bfrob.map(|s| s.mean),
        });
        start = end;
    }
    out
}
