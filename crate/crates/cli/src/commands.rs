//! Subcommand implementations. Each takes a resolved config and a run directory.

use std::f64::consts::PI;
use std::io::BufReader;

use netwhittle::eval::{self, recovery_metrics, SweepConfig};
use netwhittle::graphs::{LaplacianSpec, Provenance};
use netwhittle::procgen::{observe_potentials, simulate_injections, ProcessModel};
use netwhittle::spectra::averaged_periodogram;
use netwhittle::theory::theory_report;
use netwhittle::whittle::{self, WhittleProblem};
use netwhittle::{HermitianMatrix, TimeSeriesPanel};
use serde::Serialize;

use crate::config::{ProcessName, RunConfig};
use crate::error::{CliError, CliResult, Context};
use crate::output::{read_matrix_csv, RunDir};

/// The observed panel with whatever ground truth is available.
struct Observed {
    y: TimeSeriesPanel,
    truth: Option<LaplacianSpec>,
    model: ProcessModel,
}

fn simulate(
    cfg: &RunConfig,
    graph: &LaplacianSpec,
    model: &ProcessModel,
) -> CliResult<(TimeSeriesPanel, TimeSeriesPanel)> {
    let x = simulate_injections(model, cfg.n(), graph.p(), cfg.data_seed()).context("simulating injections")?;
    let y = observe_potentials(&graph.matrix, &x).context("computing potentials")?;
    Ok((x, y))
}

fn observe(cfg: &RunConfig) -> CliResult<Observed> {
    let graph = cfg.graph.as_ref().map(|g| g.build()).transpose()?;
    let Some(path) = &cfg.fit.panel else {
        let graph = graph.ok_or_else(|| CliError::Config("missing section `graph` (or fit.panel)".into()))?;
        let model = cfg.process.model(cfg.process.kind, graph.p())?;
        let (_, y) = simulate(cfg, &graph, &model)?;
        return Ok(Observed { y, truth: Some(graph), model });
    };
    let file = std::fs::File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let y = TimeSeriesPanel::read_csv(BufReader::new(file), cfg.process.kind.as_str())
        .context(format!("reading panel {}", path.display()))?;
    let truth = match &cfg.fit.truth {
        Some(t) => {
            let m = read_matrix_csv(t)?;
            Some(LaplacianSpec::from_matrix(m, 0.0, Provenance::Supplied).context(format!("truth {}", t.display()))?)
        }
        None => graph,
    };
    if let Some(t) = &truth {
        if t.p() != y.p() {
            return Err(netwhittle::Error::DimensionMismatch { expected: t.p(), found: y.p() })
                .context("truth vs panel");
        }
    }
    let model = cfg.process.model(cfg.process.kind, y.p())?;
    Ok(Observed { y, truth, model })
}

/// `Θ_X(ω_j)` and the frequency, for a panel of length `n`.
fn injection_precision(cfg: &RunConfig, model: &ProcessModel, n: usize, p: usize) -> CliResult<(HermitianMatrix, f64)> {
    let omega = 2.0 * PI * cfg.estimation.omega_index as f64 / n as f64;
    let theta_x = model.psd(p, omega).and_then(|s| s.inverse()).context("injection spectrum")?;
    Ok((theta_x, omega))
}

fn base_problem(cfg: &RunConfig, obs: &Observed) -> CliResult<(WhittleProblem, usize, f64)> {
    let (n, p) = (obs.y.n(), obs.y.p());
    let m = cfg.estimation.bandwidth.resolve(n);
    let (theta_x, omega) = injection_precision(cfg, &obs.model, n, p)?;
    let base =
        WhittleProblem::from_panel(&obs.y, &theta_x, cfg.estimation.omega_index, m, 0.0).context("building problem")?;
    Ok((base, m, omega))
}

pub fn gen(cfg: &RunConfig, run: &mut RunDir) -> CliResult<()> {
    let graph = cfg.graph()?.build()?;
    let model = cfg.process.model(cfg.process.kind, graph.p())?;
    let (x, y) = simulate(cfg, &graph, &model)?;
    run.write_matrix("L_star.csv", &graph.matrix)?;
    run.write_edges("edges.csv", &graph.edges)?;
    run.write_json("graph.json", &graph)?;
    run.write_with("X.csv", |b| x.write_csv(b, "x").map_err(|e| CliError::Io(format!("X.csv: {e}"))))?;
    run.write_with("Y.csv", |b| y.write_csv(b, "y").map_err(|e| CliError::Io(format!("Y.csv: {e}"))))?;
    Ok(())
}

pub fn fit(cfg: &RunConfig, run: &mut RunDir) -> CliResult<()> {
    let obs = observe(cfg)?;
    let (base, m, omega) = base_problem(cfg, &obs)?;
    let truth = obs.truth.as_ref().map(|t| (t, &obs.model));
    let fitted =
        eval::fit_with_policy(&base, obs.y.n(), m, omega, &cfg.estimation.lambda, &cfg.estimation.solver, truth)
            .context("fitting")?;
    if !fitted.report.converged {
        log::warn!(
            "solver stopped after {} iterations with KKT residual {:e}",
            fitted.report.iterations,
            fitted.report.kkt_residual
        );
    }
    run.write_json("report.json", &fitted.report)?;
    run.write_matrix("l_hat.csv", &fitted.report.l_hat)?;
    if let Some(table) = &fitted.ebic_table {
        run.write_with("ebic.csv", |b| write_csv_rows(b, table))?;
    }
    if let Some(t) = &obs.truth {
        let metrics =
            recovery_metrics(&fitted.report.l_hat, &t.matrix, cfg.estimation.support_tol).context("scoring")?;
        log::info!("F-score {:.4}, Frobenius error {:.4e}", metrics.f_score, metrics.err_frobenius);
        run.write_json("metrics.json", &metrics)?;
    }
    Ok(())
}

pub fn baseline(cfg: &RunConfig, run: &mut RunDir) -> CliResult<()> {
    let obs = observe(cfg)?;
    let (n, p) = (obs.y.n(), obs.y.p());
    let m = cfg.estimation.bandwidth.resolve(n);
    let (theta_x, _) = injection_precision(cfg, &obs.model, n, p)?;
    let est = averaged_periodogram(&obs.y, cfg.estimation.omega_index, m).context("periodogram")?;
    let ridge = cfg.estimation.ridge.unwrap_or_else(|| whittle::default_ridge(&est.matrix));
    let report = whittle::two_step_baseline(&est.matrix, &theta_x, ridge).context("two-step baseline")?;
    run.write_json("report.json", &report)?;
    run.write_matrix("l_hat.csv", &report.l_hat)?;
    if let Some(t) = &obs.truth {
        let metrics = recovery_metrics(&report.l_hat, &t.matrix, cfg.estimation.support_tol).context("scoring")?;
        run.write_json("metrics.json", &metrics)?;
    }
    Ok(())
}

pub fn sweep(cfg: &RunConfig, run: &mut RunDir) -> CliResult<()> {
    let section = cfg.graph()?;
    let graph = section.build()?;
    let processes = if cfg.sweep.processes.is_empty() { vec![cfg.process.kind] } else { cfg.sweep.processes.clone() };
    let tagged = processes.len() > 1;
    for kind in processes {
        let model = cfg.process.model(kind, graph.p())?;
        let mut sc = SweepConfig::new(graph.clone(), model, cfg.sweep.grid.clone(), cfg.sweep.trials);
        if section.resample {
            sc.resample_graph = section.generator().map(|g| (g, section.seed.unwrap_or_default()));
        }
        sc.rescale = cfg.sweep.rescale;
        sc.lambda_policy = cfg.estimation.lambda.clone();
        sc.bandwidth = cfg.estimation.bandwidth;
        sc.seed_base = cfg.sweep.seed_base.unwrap_or_else(|| cfg.data_seed());
        sc.omega_index = cfg.estimation.omega_index;
        sc.solver = cfg.estimation.solver.clone();
        sc.support_tol = cfg.estimation.support_tol;
        sc.compare_baseline = cfg.sweep.compare_baseline;
        sc.execution = cfg.sweep.execution;
        sc.validate().map_err(|e| CliError::Config(format!("sweep: {e}")))?;
        let res = eval::run_sweep(&sc).context(format!("sweep over {}", kind.as_str()))?;
        let failed = res.rows.iter().filter(|r| r.error.is_some()).count();
        if failed > 0 {
            log::warn!("{}: {failed} of {} cells failed", kind.as_str(), res.rows.len());
        }
        let suffix = if tagged { format!("_{}", kind.as_str()) } else { String::new() };
        run.write_with(&format!("rows{suffix}.csv"), |b| res.write_rows_csv(b).context("writing rows"))?;
        run.write_with(&format!("aggregate{suffix}.csv"), |b| res.write_aggregate_csv(b).context("writing aggregate"))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct PathRow {
    lambda: f64,
    edges: Option<usize>,
    iterations: Option<usize>,
    converged: Option<bool>,
    objective: Option<f64>,
    kkt_residual: Option<f64>,
    f_score: Option<f64>,
    frobenius_error: Option<f64>,
    error: Option<String>,
}

#[derive(Serialize)]
struct PathSummary {
    lambda_max: f64,
    points: usize,
    /// Share of consecutive warm-started fits whose iteration count did not increase.
    warm_start_nonincreasing_frac: f64,
}

pub fn path(cfg: &RunConfig, run: &mut RunDir) -> CliResult<()> {
    let obs = observe(cfg)?;
    let (base, _, _) = base_problem(cfg, &obs)?;
    let lambda_max = match cfg.path.lambda_max {
        Some(l) => l,
        None => base.lambda_max(&cfg.estimation.solver).context("lambda_max")?,
    };
    let grid = whittle::lambda_grid(lambda_max, cfg.path.ratio, cfg.path.k);
    let points =
        whittle::regularization_path(&base, &grid, &cfg.estimation.solver, obs.truth.as_ref()).context("path")?;
    let rows: Vec<PathRow> = points
        .iter()
        .map(|pt| PathRow {
            lambda: pt.lambda,
            edges: pt.report.as_ref().map(|r| r.support.len()),
            iterations: pt.report.as_ref().map(|r| r.iterations),
            converged: pt.report.as_ref().map(|r| r.converged),
            objective: pt.report.as_ref().map(|r| r.objective),
            kkt_residual: pt.report.as_ref().map(|r| r.kkt_residual),
            f_score: pt.f_score,
            frobenius_error: pt.frobenius_error,
            error: pt.error.clone(),
        })
        .collect();
    let iters: Vec<usize> = rows.iter().filter_map(|r| r.iterations).collect();
    let steps = iters.len().saturating_sub(1);
    let nonincreasing = iters.windows(2).filter(|w| w[1] <= w[0]).count();
    let summary = PathSummary {
        lambda_max,
        points: rows.len(),
        warm_start_nonincreasing_frac: if steps == 0 { 1.0 } else { nonincreasing as f64 / steps as f64 },
    };
    run.write_with("path.csv", |b| write_csv_rows(b, &rows))?;
    run.write_json("path_summary.json", &summary)?;
    Ok(())
}

pub fn diagnose(cfg: &RunConfig, run: &mut RunDir) -> CliResult<()> {
    let graph = cfg.graph()?.build()?;
    let p = graph.p();
    let model = cfg.process.model(cfg.process.kind, p)?;
    let n = cfg.n();
    let m = cfg.diagnose.m.unwrap_or_else(|| cfg.estimation.bandwidth.resolve(n));
    let omega = 2.0 * PI * cfg.estimation.omega_index as f64 / n as f64;
    let report = theory_report(&graph, &model, n, m, cfg.diagnose.tau, omega).context("theory report")?;
    if !(report.alpha > 0.0) {
        log::warn!("incoherence fails: alpha = {:.6}; the theorem-1 lambda is undefined", report.alpha);
    }
    run.write_json("theory.json", &report)?;
    Ok(())
}

fn write_csv_rows<T: Serialize>(buf: &mut Vec<u8>, rows: &[T]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(buf);
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(())
}

pub fn process_list(text: &str) -> CliResult<Vec<ProcessName>> {
    text.split(',')
        .filter(|s| !s.is_empty())
        .map(|s| ProcessName::parse(s.trim()).ok_or_else(|| CliError::Config(format!("unknown process `{s}`"))))
        .collect()
}
