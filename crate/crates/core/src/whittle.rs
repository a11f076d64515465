//! The ℓ1-regularized Whittle estimator at one frequency.
//!
//! Minimizes `F(L) = Tr(D L P L D) − log det(L²) + λ Σ_{i≠j} |L_ij|` over symmetric positive
//! definite `L` with a proximal gradient method. The trace term is evaluated through the real
//! split `Tr(Ψ₁LP₁L) − Tr(Ψ₂LP₂L)` where `D² = Ψ₁ + iΨ₂` and `P = P₁ + iP₂`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphs::{self, Edge, LaplacianSpec};
use crate::matcore::{
    cholesky, cholesky_inverse, hermitian_inv_sqrt, hermitian_sqrt, l1_offdiag, logdet_spd, max_abs, HermitianMatrix,
    SymmetricMatrix, DEFAULT_PD_TOL,
};
use crate::panel::TimeSeriesPanel;
use crate::spectra;

/// The data of one frequency-`ω_j` problem.
#[derive(Debug, Clone)]
pub struct WhittleProblem {
    periodogram: HermitianMatrix,
    d: HermitianMatrix,
    p1: DMatrix<f64>,
    p2: DMatrix<f64>,
    psi1: DMatrix<f64>,
    psi2: DMatrix<f64>,
    complex: bool,
    pub lambda: f64,
    pub omega_index: usize,
}

impl WhittleProblem {
    /// Builds the problem from the periodogram and `Θ_X(ω_j)`; `D` is its PD square root.
    pub fn new(
        periodogram: HermitianMatrix,
        theta_x: &HermitianMatrix,
        lambda: f64,
        omega_index: usize,
    ) -> Result<Self> {
        let d = hermitian_sqrt(theta_x, DEFAULT_PD_TOL)?;
        Self::from_sqrt(periodogram, d, lambda, omega_index)
    }

    pub fn from_sqrt(
        periodogram: HermitianMatrix,
        d: HermitianMatrix,
        lambda: f64,
        omega_index: usize,
    ) -> Result<Self> {
        let p = periodogram.dim();
        if d.dim() != p {
            return Err(Error::DimensionMismatch { expected: p, found: d.dim() });
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::ParameterOutOfRange(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        let pm = periodogram.as_matrix();
        if let Some(i) = (0..p).find(|&i| !(pm[(i, i)].re > 0.0)) {
            return Err(Error::BadProblem(format!("periodogram diagonal entry {i} is {}", pm[(i, i)].re)));
        }
        let floor = -1e-10 * periodogram.trace();
        if periodogram.eigenvalues().first().is_some_and(|&l| l < floor) {
            return Err(Error::BadProblem("periodogram is not positive semidefinite".into()));
        }
        if !d.is_positive_definite() {
            return Err(Error::NotPositiveDefinite("D".into()));
        }
        let dm = d.as_matrix();
        let psi = HermitianMatrix::project(&(dm * dm));
        let (p1, p2) = (periodogram.real_part(), periodogram.imag_part());
        let (psi1, psi2) = (psi.real_part(), psi.imag_part());
        let complex = p2.iter().any(|&x| x != 0.0) && psi2.iter().any(|&x| x != 0.0);
        Ok(Self { periodogram, d, p1, p2, psi1, psi2, complex, lambda, omega_index })
    }

    /// Averaged periodogram of `panel` at `ω_j` with bandwidth `m`, against `Θ_X(ω_j)`.
    pub fn from_panel(
        panel: &TimeSeriesPanel,
        theta_x: &HermitianMatrix,
        j: usize,
        m: usize,
        lambda: f64,
    ) -> Result<Self> {
        let est = spectra::averaged_periodogram(panel, j, m)?;
        Self::new(est.matrix, theta_x, lambda, j)
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        let mut out = self.clone();
        out.lambda = lambda;
        out
    }

    pub fn p(&self) -> usize {
        self.p1.nrows()
    }

    pub fn periodogram(&self) -> &HermitianMatrix {
        &self.periodogram
    }

    pub fn d(&self) -> &HermitianMatrix {
        &self.d
    }

    /// `Re Tr(D L P L D)` through the real split.
    pub fn trace_term(&self, l: &SymmetricMatrix) -> f64 {
        let l = l.as_matrix();
        let mut t = trace_of_product(&(&self.psi1 * l), &(&self.p1 * l));
        if self.complex {
            t -= trace_of_product(&(&self.psi2 * l), &(&self.p2 * l));
        }
        t
    }

    /// Imaginary part of `Tr(Ψ L P L)`; zero up to rounding for symmetric `L`.
    pub fn trace_imaginary_residue(&self, l: &SymmetricMatrix) -> f64 {
        let l = l.as_matrix();
        trace_of_product(&(&self.psi1 * l), &(&self.p2 * l)) + trace_of_product(&(&self.psi2 * l), &(&self.p1 * l))
    }

    /// `Tr(D L P L D) − log det(L²)`.
    pub fn smooth_objective(&self, l: &SymmetricMatrix) -> Result<f64> {
        self.check_dim(l)?;
        let logdet = logdet_spd(l)?;
        let t = self.trace_term(l);
        debug_assert!(self.trace_imaginary_residue(l).abs() <= 1e-9 * t.abs().max(1.0));
        Ok(t - 2.0 * logdet)
    }

    pub fn objective(&self, l: &SymmetricMatrix) -> Result<f64> {
        Ok(self.smooth_objective(l)? + self.lambda * l1_offdiag(l.as_matrix()))
    }

    /// `sym(2Ψ₁LP₁ − 2Ψ₂LP₂) − 2L⁻¹`.
    pub fn smooth_gradient(&self, l: &SymmetricMatrix) -> Result<SymmetricMatrix> {
        self.check_dim(l)?;
        let c = cholesky(l.as_matrix())?;
        Ok(self.gradient_with_inverse(l.as_matrix(), &cholesky_inverse(&c)))
    }

    fn gradient_with_inverse(&self, l: &DMatrix<f64>, linv: &DMatrix<f64>) -> SymmetricMatrix {
        let mut g = &self.psi1 * l * &self.p1;
        if self.complex {
            g -= &self.psi2 * l * &self.p2;
        }
        let p = l.nrows();
        SymmetricMatrix::from_fn(p, |i, j| g[(i, j)] + g[(j, i)] - linv[(i, j)] - linv[(j, i)])
    }

    /// Exact change of the trace term, `Tr(Ψ(L+Δ)P(L+Δ)) − Tr(ΨLPL)`, given `⟨∇T(L), Δ⟩`.
    fn trace_increment(&self, linear: f64, delta: &DMatrix<f64>) -> f64 {
        let mut quad = trace_of_product(&(&self.psi1 * delta), &(&self.p1 * delta));
        if self.complex {
            quad -= trace_of_product(&(&self.psi2 * delta), &(&self.p2 * delta));
        }
        linear + quad
    }

    fn check_dim(&self, l: &SymmetricMatrix) -> Result<()> {
        if l.dim() != self.p() {
            return Err(Error::DimensionMismatch { expected: self.p(), found: l.dim() });
        }
        Ok(())
    }

    /// Diagonal start `1/√(P_ii Ψ₁_ii)`, the minimizer of the decoupled scalar problems.
    pub fn diagonal_start(&self) -> SymmetricMatrix {
        let diag: Vec<f64> = (0..self.p()).map(|i| 1.0 / (self.p1[(i, i)] * self.psi1[(i, i)]).sqrt()).collect();
        SymmetricMatrix::from_diagonal(&diag)
    }

    /// Smallest `λ` at which the solution is diagonal: the largest off-diagonal gradient
    /// magnitude at the diagonal optimum.
    pub fn lambda_max(&self, opts: &SolverOptions) -> Result<f64> {
        let diag = solve_restricted(&self.with_lambda(0.0), &[], opts)?;
        let g = self.smooth_gradient(&diag.l_hat)?;
        let p = self.p();
        let mut best: f64 = 0.0;
        for j in 0..p {
            for i in 0..p {
                if i != j {
                    best = best.max(g.get(i, j).abs());
                }
            }
        }
        Ok(best)
    }
}

fn trace_of_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    // Tr(AB) = Σ_ij A_ij B_ji
    a.component_mul(&b.transpose()).sum()
}

fn frob_inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.component_mul(b).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    Identity,
    #[default]
    Diagonal,
    Warm(SymmetricMatrix),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub max_iters: usize,
    pub grad_tol: f64,
    /// Step used on the first iteration; later iterations start from a Barzilai–Borwein guess.
    pub initial_step: f64,
    pub backtrack_factor: f64,
    pub armijo_c: f64,
    pub init: Init,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            grad_tol: 1e-7,
            initial_step: 1.0,
            backtrack_factor: 0.5,
            armijo_c: 1e-4,
            init: Init::Diagonal,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::ParameterOutOfRange(m.into()));
        if self.max_iters == 0 {
            return bad("max_iters must be positive");
        }
        if !(self.grad_tol > 0.0) {
            return bad("grad_tol must be positive");
        }
        if !(self.initial_step > 0.0) {
            return bad("initial_step must be positive");
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return bad("backtrack_factor must be in (0,1)");
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return bad("armijo_c must be in (0,1)");
        }
        Ok(())
    }

    pub fn warm(&self, l: &SymmetricMatrix) -> Self {
        Self { init: Init::Warm(l.clone()), ..self.clone() }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepStats {
    pub trial_steps: usize,
    pub pd_rejections: usize,
    pub descent_rejections: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub l_hat: SymmetricMatrix,
    pub lambda: f64,
    pub objective: f64,
    pub objective_trace: Vec<f64>,
    pub kkt_residual: f64,
    pub support: Vec<Edge>,
    pub iterations: usize,
    pub converged: bool,
    pub step_stats: StepStats,
}

/// Off-diagonal entries with magnitude at or below this fraction of `max_abs(L)` count as
/// zero in the optimality check.
const ZERO_REL_TOL: f64 = 1e-12;
const MIN_STEP: f64 = 1e-20;

/// Largest violation of the subgradient optimality conditions at `L`.
pub fn kkt_residual(l: &SymmetricMatrix, prob: &WhittleProblem) -> Result<f64> {
    let g = prob.smooth_gradient(l)?;
    Ok(kkt_from_gradient(l.as_matrix(), g.as_matrix(), prob.lambda, None))
}

/// As [`kkt_residual`] but only over the diagonal and the off-diagonal pairs in `support`.
pub fn kkt_residual_restricted(l: &SymmetricMatrix, prob: &WhittleProblem, support: &[Edge]) -> Result<f64> {
    let g = prob.smooth_gradient(l)?;
    let mask = support_mask(prob.p(), support);
    Ok(kkt_from_gradient(l.as_matrix(), g.as_matrix(), prob.lambda, Some(&mask)))
}

fn kkt_from_gradient(l: &DMatrix<f64>, g: &DMatrix<f64>, lambda: f64, mask: Option<&DMatrix<bool>>) -> f64 {
    let p = l.nrows();
    let zero = ZERO_REL_TOL * max_abs(l);
    let mut worst: f64 = 0.0;
    for j in 0..p {
        for i in 0..p {
            let r = if i == j {
                g[(i, i)].abs()
            } else if mask.is_some_and(|m| !m[(i, j)]) {
                continue;
            } else if l[(i, j)].abs() > zero {
                (g[(i, j)] + lambda * l[(i, j)].signum()).abs()
            } else {
                (g[(i, j)].abs() - lambda).max(0.0)
            };
            worst = worst.max(r);
        }
    }
    worst
}

fn support_mask(p: usize, support: &[Edge]) -> DMatrix<bool> {
    let mut m = DMatrix::from_element(p, p, false);
    for &(i, j) in support {
        m[(i, j)] = true;
        m[(j, i)] = true;
    }
    m
}

/// Entrywise soft threshold of the off-diagonals; the diagonal is copied unchanged.
pub fn prox_offdiag(m: &DMatrix<f64>, threshold: f64) -> DMatrix<f64> {
    let mut out = m.clone();
    let p = m.nrows();
    for j in 0..p {
        for i in 0..p {
            if i != j {
                let v = m[(i, j)];
                out[(i, j)] = v.signum() * (v.abs() - threshold).max(0.0);
            }
        }
    }
    out
}

pub fn solve(prob: &WhittleProblem, opts: &SolverOptions) -> Result<SolveReport> {
    run(prob, opts, None)
}

/// Solves with every off-diagonal entry outside `support` held at zero.
pub fn solve_restricted(prob: &WhittleProblem, support: &[Edge], opts: &SolverOptions) -> Result<SolveReport> {
    let p = prob.p();
    if let Some(&(i, j)) = support.iter().find(|&&(i, j)| i == j || i >= p || j >= p) {
        return Err(Error::BadProblem(format!(
            "support pair ({i},{j}) is not an off-diagonal index of a {p}×{p} matrix"
        )));
    }
    run(prob, opts, Some(support_mask(p, support)))
}

fn run(prob: &WhittleProblem, opts: &SolverOptions, mask: Option<DMatrix<bool>>) -> Result<SolveReport> {
    opts.validate()?;
    let p = prob.p();
    let lambda = prob.lambda;
    let clamp = |m: &mut DMatrix<f64>| {
        if let Some(mask) = &mask {
            for j in 0..p {
                for i in 0..p {
                    if i != j && !mask[(i, j)] {
                        m[(i, j)] = 0.0;
                    }
                }
            }
        }
    };

    let mut l = match &opts.init {
        Init::Identity => DMatrix::identity(p, p),
        Init::Diagonal => prob.diagonal_start().into_inner(),
        Init::Warm(w) if w.dim() == p && w.is_positive_definite() => w.as_matrix().clone(),
        Init::Warm(_) => prob.diagonal_start().into_inner(),
    };
    clamp(&mut l);
    let mut chol = match cholesky(&l) {
        Ok(c) => c,
        Err(_) => {
            l = prob.diagonal_start().into_inner();
            cholesky(&l)?
        }
    };
    let mut logdet = chol_logdet(&chol);
    let mut cinv = lower_inverse(&chol);
    let mut linv = cinv.transpose() * &cinv;
    let mut g = prob.gradient_with_inverse(&l, &linv).into_inner();
    let mut f = prob.smooth_objective(&SymmetricMatrix::symmetrize(&l))? + lambda * l1_offdiag(&l);
    let mut trace = vec![f];
    let mut stats = StepStats::default();
    let mut step = opts.initial_step;
    let mut prev: Option<(DMatrix<f64>, DMatrix<f64>)> = None;
    let mut iterations = 0;
    let mut residual = kkt_from_gradient(&l, &g, lambda, mask.as_ref());
    let mut converged = residual <= opts.grad_tol;

    while !converged && iterations < opts.max_iters {
        if let Some((l_old, g_old)) = &prev {
            let s = &l - l_old;
            let y = &g - g_old;
            let sy = frob_inner(&s, &y);
            if sy > 0.0 {
                step = (frob_inner(&s, &s) / sy).clamp(1e-12, 1e12);
            }
        }
        let mut accepted = None;
        while step >= MIN_STEP {
            stats.trial_steps += 1;
            let mut cand = prox_offdiag(&(&l - &g * step), step * lambda);
            clamp(&mut cand);
            let cand = SymmetricMatrix::symmetrize(&cand).into_inner();
            let delta = &cand - &l;
            let dnorm2 = frob_inner(&delta, &delta);
            if dnorm2 == 0.0 {
                accepted = Some((cand, 0.0, None));
                break;
            }
            let Ok(cand_chol) = cholesky(&cand) else {
                stats.pd_rejections += 1;
                step *= opts.backtrack_factor;
                continue;
            };
            // Bregman remainder of −log det: Σ(μ − log(1+μ)) with μ = eig(C⁻¹ΔC⁻ᵀ). The
            // Cholesky difference loses accuracy when the remainder is tiny; then use μ directly.
            let cand_logdet = chol_logdet(&cand_chol);
            let lin_inv = frob_inner(&linv, &delta);
            let mut breg = lin_inv - (cand_logdet - logdet);
            if breg.abs() < 1e-6 * (1.0 + logdet.abs() + lin_inv.abs()) {
                let m = &cinv * &delta * cinv.transpose();
                let mu = SymmetricMatrix::symmetrize(&m).into_inner().symmetric_eigenvalues();
                breg = mu.iter().map(|&x| mu_minus_ln1p(x)).sum();
            }
            // Split ΔF into the first-order part and the (nonnegative) Bregman remainder of the
            // smooth term.
            let curvature = prob.trace_increment(0.0, &delta) + 2.0 * breg;
            let first_order = frob_inner(&g, &delta) + lambda * (l1_offdiag(&cand) - l1_offdiag(&l));
            let df = first_order + curvature;
            let noise = 1e-14 * (1.0 + f.abs());
            if df <= -opts.armijo_c / (2.0 * step) * dnorm2 || (curvature <= dnorm2 / (2.0 * step) && df <= noise) {
                // A positive df here is rounding noise on a step that provably decreases F.
                accepted = Some((cand, df.min(0.0), Some((cand_chol, cand_logdet))));
                break;
            }
            stats.descent_rejections += 1;
            step *= opts.backtrack_factor;
        }
        let Some((cand, df, factor)) = accepted else { break };
        let moved = factor.is_some();
        if let Some((c, ld)) = factor {
            chol = c;
            logdet = ld;
            cinv = lower_inverse(&chol);
            linv = cinv.transpose() * &cinv;
        }
        iterations += 1;
        let new_g = prob.gradient_with_inverse(&cand, &linv).into_inner();
        prev = Some((std::mem::replace(&mut l, cand), std::mem::replace(&mut g, new_g)));
        f += df;
        trace.push(f);
        residual = kkt_from_gradient(&l, &g, lambda, mask.as_ref());
        converged = residual <= opts.grad_tol;
        if !moved && !converged {
            break;
        }
    }

    let l_hat = SymmetricMatrix::symmetrize(&l);
    let objective = prob.objective(&l_hat)?;
    let report = SolveReport {
        support: graphs::support_of(&l_hat, None),
        l_hat,
        lambda,
        objective,
        objective_trace: trace,
        kkt_residual: residual,
        iterations,
        converged,
        step_stats: stats,
    };
    if converged {
        Ok(report)
    } else {
        Err(Error::NotConverged(Box::new(report)))
    }
}

fn chol_logdet(c: &DMatrix<f64>) -> f64 {
    2.0 * c.diagonal().iter().map(|d| d.ln()).sum::<f64>()
}

/// `μ − ln(1+μ)`, accurate for small `μ`.
fn mu_minus_ln1p(mu: f64) -> f64 {
    if mu.abs() < 1e-3 {
        let m2 = mu * mu;
        m2 * (0.5 - mu / 3.0 + m2 / 4.0 - m2 * mu / 5.0)
    } else {
        mu - mu.ln_1p()
    }
}

fn lower_inverse(c: &DMatrix<f64>) -> DMatrix<f64> {
    let p = c.nrows();
    let mut inv = DMatrix::<f64>::zeros(p, p);
    for j in 0..p {
        inv[(j, j)] = 1.0 / c[(j, j)];
        for i in (j + 1)..p {
            let mut s = 0.0;
            for k in j..i {
                s -= c[(i, k)] * inv[(k, j)];
            }
            inv[(i, j)] = s / c[(i, i)];
        }
    }
    inv
}

/// Keeps the report of a run that stopped before meeting the tolerance.
pub fn recover_report(res: Result<SolveReport>) -> Result<SolveReport> {
    match res {
        Err(Error::NotConverged(report)) => Ok(*report),
        other => other,
    }
}

/// `k` log-spaced values from `max` down to `max·ratio`.
pub fn lambda_grid(max: f64, ratio: f64, k: usize) -> Vec<f64> {
    if k <= 1 {
        return vec![max];
    }
    let step = ratio.ln() / (k - 1) as f64;
    (0..k).map(|i| max * (step * i as f64).exp()).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct EbicRow {
    pub lambda: f64,
    pub ebic: Option<f64>,
    pub neg2_loglik: Option<f64>,
    pub edges: Option<usize>,
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EbicSelection {
    pub lambda: f64,
    pub report: SolveReport,
    pub table: Vec<EbicRow>,
}

/// `−2ℒ_n(L) = (2m+1)(Tr(DLPLD) − log det L²)` for a fit from a bandwidth-`m` periodogram.
pub fn neg2_loglik(prob: &WhittleProblem, l: &SymmetricMatrix, bandwidth: usize) -> Result<f64> {
    Ok((2 * bandwidth + 1) as f64 * prob.smooth_objective(l)?)
}

/// Fits every `λ` on a decreasing grid with warm starts and keeps the minimizer of
/// `−2ℒ_n + |Ê| log n + 4γ|Ê| log p`.
pub fn ebic_select(
    base: &WhittleProblem,
    n: usize,
    bandwidth: usize,
    lambdas: &[f64],
    gamma: f64,
    opts: &SolverOptions,
) -> Result<EbicSelection> {
    if lambdas.is_empty() {
        return Err(Error::EmptyInput("lambda grid is empty".into()));
    }
    if lambdas.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::ParameterOutOfRange("lambda grid must be decreasing".into()));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::ParameterOutOfRange(format!("gamma must be in [0,1], got {gamma}")));
    }
    let (logn, logp) = ((n as f64).ln(), (base.p() as f64).ln());
    let mut table = Vec::with_capacity(lambdas.len());
    let mut best: Option<(f64, f64, SolveReport)> = None;
    let mut warm = opts.clone();
    let mut last_err = None;
    for &lambda in lambdas {
        let prob = base.with_lambda(lambda);
        match solve(&prob, &warm) {
            Ok(rep) => {
                let nll = neg2_loglik(&prob, &rep.l_hat, bandwidth)?;
                let e = rep.support.len() as f64;
                let ebic = nll + e * logn + 4.0 * gamma * e * logp;
                table.push(EbicRow {
                    lambda,
                    ebic: Some(ebic),
                    neg2_loglik: Some(nll),
                    edges: Some(rep.support.len()),
                    converged: true,
                    error: None,
                });
                warm = opts.warm(&rep.l_hat);
                if best.as_ref().is_none_or(|b| ebic < b.1) {
                    best = Some((lambda, ebic, rep));
                }
            }
            Err(e) => {
                if let Error::NotConverged(rep) = &e {
                    warm = opts.warm(&rep.l_hat);
                }
                table.push(EbicRow {
                    lambda,
                    ebic: None,
                    neg2_loglik: None,
                    edges: None,
                    converged: false,
                    error: Some(e.to_string()),
                });
                last_err = Some(e);
            }
        }
    }
    match best {
        Some((lambda, _, report)) => Ok(EbicSelection { lambda, report, table }),
        None => Err(last_err.expect("grid nonempty")),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PathPoint {
    pub lambda: f64,
    pub report: Option<SolveReport>,
    pub error: Option<String>,
    pub f_score: Option<f64>,
    pub frobenius_error: Option<f64>,
}

/// Warm-started fits along a decreasing grid, scored against `truth` when given. Runs that
/// stop early keep their last iterate with `converged = false`.
pub fn regularization_path(
    base: &WhittleProblem,
    lambdas: &[f64],
    opts: &SolverOptions,
    truth: Option<&LaplacianSpec>,
) -> Result<Vec<PathPoint>> {
    if lambdas.is_empty() {
        return Err(Error::EmptyInput("lambda grid is empty".into()));
    }
    let mut warm = opts.clone();
    let mut out = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let res = recover_report(solve(&base.with_lambda(lambda), &warm));
        let point = match res {
            Ok(rep) => {
                warm = opts.warm(&rep.l_hat);
                let (f_score, frobenius_error) = match truth {
                    Some(t) => (
                        Some(crate::eval::f_score(&rep.support, &t.edges)),
                        Some((rep.l_hat.as_matrix() - t.matrix.as_matrix()).norm()),
                    ),
                    None => (None, None),
                };
                PathPoint { lambda, report: Some(rep), error: None, f_score, frobenius_error }
            }
            Err(e) => {
                PathPoint { lambda, report: None, error: Some(e.to_string()), f_score: None, frobenius_error: None }
            }
        };
        out.push(point);
    }
    Ok(out)
}

/// Default ridge for the two-step baseline, `1e-3·tr(P)/p`.
pub fn default_ridge(periodogram: &HermitianMatrix) -> f64 {
    1e-3 * periodogram.trace() / periodogram.dim() as f64
}

/// Two-step estimate: invert the ridged periodogram, then `L̂ = sym Re(Θ̂_Y^{1/2} Θ_X^{−1/2})`
/// hard-thresholded at the default support tolerance.
pub fn two_step_baseline(periodogram: &HermitianMatrix, theta_x: &HermitianMatrix, ridge: f64) -> Result<SolveReport> {
    let p = periodogram.dim();
    if theta_x.dim() != p {
        return Err(Error::DimensionMismatch { expected: p, found: theta_x.dim() });
    }
    if !(ridge > 0.0) {
        return Err(Error::ParameterOutOfRange(format!("ridge must be > 0, got {ridge}")));
    }
    let ridged = HermitianMatrix::project(
        &(periodogram.as_matrix() + DMatrix::identity(p, p) * nalgebra::Complex::new(ridge, 0.0)),
    );
    let theta_y = ridged.inverse()?;
    let root = hermitian_sqrt(&theta_y, DEFAULT_PD_TOL)?;
    let x_inv_root = hermitian_inv_sqrt(theta_x, DEFAULT_PD_TOL)?;
    let prod = (root.as_matrix() * x_inv_root.as_matrix()).map(|z| z.re);
    let mut l = SymmetricMatrix::symmetrize(&prod);
    let tol = graphs::DEFAULT_SUPPORT_REL_TOL * max_abs(l.as_matrix());
    for j in 0..p {
        for i in 0..j {
            if l.get(i, j).abs() <= tol {
                l.set(i, j, 0.0);
            }
        }
    }
    let kkt = WhittleProblem::new(periodogram.clone(), theta_x, 0.0, 0)
        .and_then(|prob| kkt_residual(&l, &prob))
        .unwrap_or(f64::INFINITY);
    let objective = WhittleProblem::new(periodogram.clone(), theta_x, 0.0, 0)
        .and_then(|prob| prob.objective(&l))
        .unwrap_or(f64::NAN);
    Ok(SolveReport {
        support: graphs::support_of(&l, None),
        l_hat: l,
        lambda: 0.0,
        objective,
        objective_trace: vec![objective],
        kkt_residual: kkt,
        iterations: 0,
        converged: true,
        step_stats: StepStats::default(),
    })
}
