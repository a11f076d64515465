//! Numerical versions of the quantities behind the recovery guarantees: the Hessian
//! `Γ* = L*⁻¹ ⊗ L*⁻¹`, mutual incoherence, the condition-number bound, dependence measures,
//! error thresholds and the primal-dual witness check.
//!
//! Vectorization stacks columns, so entry `(i, j)` of a `p × p` matrix sits at `i + p·j`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphs::{Edge, LaplacianSpec};
use crate::matcore::{
    cholesky, cholesky_inverse, kron_capped, max_abs, row_sum_norm, HermitianMatrix, SymmetricMatrix,
};
use crate::procgen::ProcessModel;
use crate::spectra::{AutocovSequence, AutocovTail};
use crate::whittle::{self, SolverOptions, WhittleProblem};

/// Largest `p` for which `p² × p²` Hessian quantities are formed.
pub const GAMMA_DIM_CAP: usize = 64;
/// Default tail exponent in the threshold `δ`.
pub const DEFAULT_TAU: f64 = 3.0;

/// `Γ* = L*⁻¹ ⊗ L*⁻¹`.
pub fn hessian_gamma(l_star: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    if l_star.dim() > GAMMA_DIM_CAP {
        return Err(Error::DimensionOverflow { dim: l_star.dim(), cap: GAMMA_DIM_CAP });
    }
    let inv = l_star.inverse()?;
    kron_capped(&inv, &inv, GAMMA_DIM_CAP * GAMMA_DIM_CAP)
}

/// Off-diagonal support in both orientations plus every diagonal pair, as vec indices.
pub fn augmented_indices(p: usize, edges: &[Edge]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..p).map(|i| i + p * i).collect();
    for &(i, j) in edges {
        idx.push(i + p * j);
        idx.push(j + p * i);
    }
    idx.sort_unstable();
    idx.dedup();
    idx
}

/// `α = 1 − |||Γ*_{EᶜE} (Γ*_{EE})⁻¹|||_∞` over the augmented edge set. May be ≤ 0.
pub fn incoherence_alpha(l_star: &SymmetricMatrix, edges: &[Edge]) -> Result<f64> {
    let p = l_star.dim();
    if p > GAMMA_DIM_CAP {
        return Err(Error::DimensionOverflow { dim: p, cap: GAMMA_DIM_CAP });
    }
    let linv = l_star.inverse()?.into_inner();
    // Γ((i,j),(k,l)) = L⁻¹[i,k]·L⁻¹[j,l]
    let entry = |a: usize, b: usize| linv[(a % p, b % p)] * linv[(a / p, b / p)];
    let e = augmented_indices(p, edges);
    let mut in_e = vec![false; p * p];
    for &k in &e {
        in_e[k] = true;
    }
    let s = e.len();
    let gee = DMatrix::from_fn(s, s, |r, c| entry(e[r], e[c]));
    let chol = cholesky(&gee).map_err(|_| Error::SingularSubHessian)?;
    let gee_inv = cholesky_inverse(&chol);
    let mut worst: f64 = 0.0;
    let mut row = DMatrix::<f64>::zeros(1, s);
    for a in (0..p * p).filter(|&a| !in_e[a]) {
        for (c, &b) in e.iter().enumerate() {
            row[(0, c)] = entry(a, b);
        }
        let prod = &row * &gee_inv;
        worst = worst.max(prod.iter().map(|x| x.abs()).sum());
    }
    Ok(1.0 - worst)
}

/// `C_α = 1 + 24/α`.
pub fn c_alpha(alpha: f64) -> f64 {
    1.0 + 24.0 / alpha
}

/// The `ν_A = |||A|||_∞` constants that enter the guarantees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuConstants {
    pub nu_l: f64,
    pub nu_l_inv: f64,
    pub nu_d2: f64,
    /// `|||Γ*⁻¹|||_∞ = |||L* ⊗ L*|||_∞ = ν_{L*}²`.
    pub nu_gamma_inv: f64,
}

impl NuConstants {
    pub fn compute(l_star: &SymmetricMatrix, theta_x: &HermitianMatrix) -> Result<Self> {
        let nu_l = row_sum_norm(l_star.as_matrix());
        let nu_l_inv = row_sum_norm(l_star.inverse()?.as_matrix());
        Ok(Self { nu_l, nu_l_inv, nu_d2: row_sum_norm(theta_x.as_matrix()), nu_gamma_inv: nu_l * nu_l })
    }

    /// `κ(Γ*) = |||Γ*|||_∞ |||Γ*⁻¹|||_∞ = ν_{L*⁻¹}² ν_{L*}²`.
    pub fn kappa(&self) -> f64 {
        self.nu_l_inv.powi(2) * self.nu_l.powi(2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaCheck {
    pub kappa: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Compares `κ(Γ*)` with `1/(4 d ν_{D²} ‖Θ_Y⁻¹‖_∞ C_α)`.
pub fn kappa_check(
    l_star: &SymmetricMatrix,
    theta_x: &HermitianMatrix,
    theta_y_inv: &HermitianMatrix,
    d: usize,
    alpha: f64,
) -> Result<KappaCheck> {
    if !(alpha > 0.0) {
        return Err(Error::ParameterOutOfRange(format!("kappa bound needs alpha > 0, got {alpha}")));
    }
    let nu = NuConstants::compute(l_star, theta_x)?;
    let kappa = nu.kappa();
    let rhs = 1.0 / (4.0 * d as f64 * nu.nu_d2 * max_abs(theta_y_inv.as_matrix()) * c_alpha(alpha));
    Ok(KappaCheck { kappa, rhs, holds: kappa <= rhs })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DependenceMeasures {
    pub omega_n: f64,
    pub l_n: f64,
}

/// `Ω_n = max_{r,s} Σ_{|l|<n} |l|·|Φ_rs(l)|` and `L_n = max_{r,s} Σ_{|l|>n} |Φ_rs(l)|`, both
/// two-sided. Needs lags beyond `n` unless the stored tail is negligible.
pub fn dependence_measures(acov: &AutocovSequence, n: usize) -> Result<DependenceMeasures> {
    let p = acov.p();
    let lags = acov.nonnegative_lags();
    let mut omega: f64 = 0.0;
    let mut tail: f64 = 0.0;
    for r in 0..p {
        for s in 0..p {
            let mut o = 0.0;
            let mut t = 0.0;
            for (l, phi) in lags.iter().enumerate().skip(1) {
                // Φ_rs(−l) = Φ_sr(l)
                let both = phi[(r, s)].abs() + phi[(s, r)].abs();
                if l < n {
                    o += l as f64 * both;
                } else if l > n {
                    t += both;
                }
            }
            omega = omega.max(o);
            tail = tail.max(t);
        }
    }
    if acov.tail() == AutocovTail::Unknown && acov.max_lag() <= n {
        return Err(Error::TailNotComputable { max_lag: acov.max_lag(), omega_lower: omega, l_lower: tail });
    }
    Ok(DependenceMeasures { omega_n: omega, l_n: tail })
}

/// Concentration regimes for the threshold `δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DeltaFamily {
    Gaussian,
    SubGaussian,
    SubExponential { rho: f64 },
    FiniteFourth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaThreshold {
    pub statistical: f64,
    pub bias: f64,
    pub total: f64,
    /// True for the linear-process forms, which hold only up to unspecified universal constants.
    pub up_to_constants: bool,
}

/// `δ = stat(m, p, τ) + ((m + 1/2π)/n)·Ω_n + (1/2π)·L_n`.
///
/// `stat` is `√(τ log p/m)` for Gaussian data; the linear-process forms multiply
/// `√(τ log p/m)`, `(τ log p)^{2+2ρ}/√m` or `p^{1+τ}/√m` by `|||Θ_Y⁻¹|||_∞`.
pub fn delta_threshold(
    theta_y_inv: &HermitianMatrix,
    m: usize,
    n: usize,
    tau: f64,
    family: DeltaFamily,
    dep: DependenceMeasures,
) -> Result<DeltaThreshold> {
    if !(tau > 0.0) || m == 0 || n == 0 {
        return Err(Error::ParameterOutOfRange(format!(
            "delta needs tau > 0, m >= 1, n >= 1 (tau={tau}, m={m}, n={n})"
        )));
    }
    let p = theta_y_inv.dim() as f64;
    let mf = m as f64;
    let nu = row_sum_norm(theta_y_inv.as_matrix());
    let base = (tau * p.ln() / mf).sqrt();
    let (statistical, up_to_constants) = match family {
        DeltaFamily::Gaussian => (base, false),
        DeltaFamily::SubGaussian => (nu * base, true),
        DeltaFamily::SubExponential { rho } => (nu * (tau * p.ln()).powf(2.0 + 2.0 * rho) / mf.sqrt(), true),
        DeltaFamily::FiniteFourth => (nu * p.powf(1.0 + tau) / mf.sqrt(), true),
    };
    let inv_two_pi = 1.0 / (2.0 * std::f64::consts::PI);
    let bias = (mf + inv_two_pi) / n as f64 * dep.omega_n + inv_two_pi * dep.l_n;
    Ok(DeltaThreshold { statistical, bias, total: statistical + bias, up_to_constants })
}

/// `λ_n = 96 ν_{D²} ν_{L*} δ / α`.
pub fn theorem1_lambda(nu_d2: f64, nu_l: f64, delta: f64, alpha: f64) -> f64 {
    96.0 * nu_d2 * nu_l * delta / alpha
}

/// `ζ = max{ν_{Γ⁻¹}ν_{L⁻¹}ν_Lν_{D²}C_α², ν_{Γ⁻¹}²ν_{L⁻¹}³ν_Lν_{D²}C_α²}`.
pub fn zeta(nu: &NuConstants, alpha: f64) -> f64 {
    let ca2 = c_alpha(alpha).powi(2);
    let common = nu.nu_l * nu.nu_d2 * ca2;
    (nu.nu_gamma_inv * nu.nu_l_inv * common).max(nu.nu_gamma_inv.powi(2) * nu.nu_l_inv.powi(3) * common)
}

/// `r = 8 ν_{Γ⁻¹} [ν_{D²} ν_{L*} ‖W‖_∞ + λ/4]`.
pub fn radius_r(nu: &NuConstants, w_max: f64, lambda: f64) -> f64 {
    8.0 * nu.nu_gamma_inv * (nu.nu_d2 * nu.nu_l * w_max + lambda / 4.0)
}

/// `R(Δ) = L̃⁻¹ − L*⁻¹ + L*⁻¹ Δ L*⁻¹`, the part of `L̃⁻¹` beyond its first-order expansion.
pub fn remainder(l_tilde: &SymmetricMatrix, l_star: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    let a = l_tilde.inverse()?.into_inner();
    let b = l_star.inverse()?.into_inner();
    let delta = l_tilde.as_matrix() - l_star.as_matrix();
    Ok(SymmetricMatrix::symmetrize(&(a - &b + &b * delta * &b)))
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessQuantities {
    /// `P − Θ_Y⁻¹`.
    pub w: HermitianMatrix,
    /// `L̃ − L*`.
    pub delta: SymmetricMatrix,
    pub r_delta: SymmetricMatrix,
    pub w_max: f64,
    pub delta_max: f64,
    pub r_delta_max: f64,
    /// `max_abs(R(Δ) − (L̃⁻¹ − L*⁻¹ + L*⁻¹ΔL*⁻¹))` with every term recomputed independently.
    pub identity_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessReport {
    pub quantities: WitnessQuantities,
    pub l_tilde: SymmetricMatrix,
    pub converged: bool,
    pub lambda: f64,
    /// `max |Z̃_ij|` over off-support pairs.
    pub dual_max: f64,
    pub strict_feasible: bool,
    /// The three sufficient-condition quantities compared against `αλ/24`.
    pub lemma2_terms: [f64; 3],
    pub lemma2_bound: f64,
    pub lemma2_holds: bool,
    /// Whether `‖Δ‖_∞ ≤ 1/(3 ν_{L*⁻¹} d)`, in which case `lemma3_bound` applies.
    pub lemma3_applies: bool,
    pub lemma3_bound: f64,
    pub lemma3_holds: bool,
    pub radius_r: f64,
}

/// Solves the problem restricted to the true support and certifies (or not) that the
/// restricted solution is the global one via strict dual feasibility off the support.
pub fn witness_check(
    truth: &LaplacianSpec,
    prob: &WhittleProblem,
    theta_y_inv: &HermitianMatrix,
    theta_x: &HermitianMatrix,
    alpha: f64,
    opts: &SolverOptions,
) -> Result<WitnessReport> {
    let lambda = prob.lambda;
    if !(lambda > 0.0) {
        return Err(Error::ParameterOutOfRange("witness check needs lambda > 0".into()));
    }
    let rep = whittle::recover_report(whittle::solve_restricted(prob, &truth.edges, opts))?;
    let l_tilde = rep.l_hat.clone();
    let l_star = &truth.matrix;
    let p = l_star.dim();

    let w = HermitianMatrix::project(&(prob.periodogram().as_matrix() - theta_y_inv.as_matrix()));
    let delta = SymmetricMatrix::symmetrize(&(l_tilde.as_matrix() - l_star.as_matrix()));
    let r_delta = remainder(&l_tilde, l_star)?;
    let lt_inv = l_tilde.inverse()?.into_inner();
    let ls_inv = l_star.inverse()?.into_inner();
    let first_order = &ls_inv * delta.as_matrix() * &ls_inv;
    let identity_residual = max_abs(&(r_delta.as_matrix() - (&lt_inv - &ls_inv + first_order)));

    let g = prob.smooth_gradient(&l_tilde)?;
    let mut on_support = vec![false; p * p];
    for &(i, j) in &truth.edges {
        on_support[i + p * j] = true;
        on_support[j + p * i] = true;
    }
    let mut dual_max: f64 = 0.0;
    for j in 0..p {
        for i in 0..p {
            if i != j && !on_support[i + p * j] {
                // λ Z̃_ij = −[∇ smooth]_ij
                dual_max = dual_max.max((g.get(i, j) / lambda).abs());
            }
        }
    }

    let nu = NuConstants::compute(l_star, theta_x)?;
    let d = truth.max_degree.max(1) as f64;
    let (w_max, delta_max, r_max) = (max_abs(w.as_matrix()), max_abs(delta.as_matrix()), max_abs(r_delta.as_matrix()));
    let theta_max = max_abs(theta_y_inv.as_matrix());
    let lemma2_terms =
        [2.0 * nu.nu_d2 * (d * delta_max + nu.nu_l) * w_max, r_max, 2.0 * nu.nu_d2 * d * delta_max * theta_max];
    let lemma2_bound = alpha * lambda / 24.0;
    let lemma3_applies = delta_max <= 1.0 / (3.0 * nu.nu_l_inv * d);
    let lemma3_bound = 1.5 * d * delta_max * delta_max * nu.nu_l_inv.powi(3);

    Ok(WitnessReport {
        quantities: WitnessQuantities { w, delta, r_delta, w_max, delta_max, r_delta_max: r_max, identity_residual },
        l_tilde,
        converged: rep.converged,
        lambda,
        dual_max,
        strict_feasible: dual_max < 1.0,
        lemma2_terms,
        lemma2_bound,
        lemma2_holds: alpha > 0.0 && lemma2_terms.iter().all(|&q| q <= lemma2_bound),
        lemma3_applies,
        lemma3_bound,
        lemma3_holds: !lemma3_applies || r_max <= lemma3_bound * (1.0 + 1e-12),
        radius_r: radius_r(&nu, w_max, lambda),
    })
}

/// A side-by-side comparison of a quantity and the threshold it must exceed, up to an
/// unspecified constant factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleCondition {
    pub value: f64,
    pub required_scale: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoryReport {
    pub p: usize,
    pub d: usize,
    pub n: usize,
    pub m: usize,
    pub tau: f64,
    pub alpha: f64,
    pub c_alpha: f64,
    pub kappa: f64,
    pub kappa_bound_rhs: f64,
    pub kappa_holds: bool,
    pub omega_n: f64,
    pub l_n: f64,
    pub delta_threshold: f64,
    pub delta_statistical: f64,
    pub delta_bias: f64,
    pub nu: NuConstants,
    pub beta_min: f64,
    pub zeta: f64,
    pub theorem1_lambda: f64,
    /// `8 ν' δ` with `ν' = ν_{Γ⁻¹}ν_{D²}ν_{L*}C_α`: the max-norm error bound.
    pub error_bound: f64,
    /// `m` against `|||Θ_Y⁻¹|||²_∞ ζ² d² log p`.
    pub bandwidth_condition: ScaleCondition,
    /// `n` against `Ω_n ζ m d`.
    pub sample_condition: ScaleCondition,
    /// Filled in when a witness check was run.
    pub radius_r: Option<f64>,
    pub dual_max: Option<f64>,
}

/// Evaluates every population-level diagnostic for `truth` under `model` at frequency `omega`.
pub fn theory_report(
    truth: &LaplacianSpec,
    model: &ProcessModel,
    n: usize,
    m: usize,
    tau: f64,
    omega: f64,
) -> Result<TheoryReport> {
    let p = truth.p();
    let l_star = &truth.matrix;
    let theta_x_inv = model.psd(p, omega)?;
    let theta_x = theta_x_inv.inverse()?;
    let l_inv = l_star.inverse()?;
    let theta_y_inv = theta_x_inv.congruence(&l_inv);
    let alpha = incoherence_alpha(l_star, &truth.edges)?;
    let nu = NuConstants::compute(l_star, &theta_x)?;
    let d = truth.max_degree;
    let kappa = nu.kappa();
    let ca = c_alpha(alpha);
    let kappa_bound_rhs = if alpha > 0.0 {
        1.0 / (4.0 * d.max(1) as f64 * nu.nu_d2 * max_abs(theta_y_inv.as_matrix()) * ca)
    } else {
        0.0
    };
    let acov_y = model.autocov(p, n.max(1) + 2000)?.congruence(&l_inv);
    let dep = match dependence_measures(&acov_y, n) {
        Ok(d) => d,
        Err(Error::TailNotComputable { omega_lower, l_lower, .. }) => {
            DependenceMeasures { omega_n: omega_lower, l_n: l_lower }
        }
        Err(e) => return Err(e),
    };
    let delta = delta_threshold(&theta_y_inv, m, n, tau, DeltaFamily::Gaussian, dep)?;
    let beta_min = truth.edges.iter().map(|&(i, j)| l_star.get(i, j).abs()).fold(f64::INFINITY, f64::min);
    let z = zeta(&nu, alpha);
    let nu_theta = row_sum_norm(theta_y_inv.as_matrix());
    let nu_prime = nu.nu_gamma_inv * nu.nu_d2 * nu.nu_l * ca;
    Ok(TheoryReport {
        p,
        d,
        n,
        m,
        tau,
        alpha,
        c_alpha: ca,
        kappa,
        kappa_bound_rhs,
        kappa_holds: alpha > 0.0 && kappa <= kappa_bound_rhs,
        omega_n: dep.omega_n,
        l_n: dep.l_n,
        delta_threshold: delta.total,
        delta_statistical: delta.statistical,
        delta_bias: delta.bias,
        nu,
        beta_min: if beta_min.is_finite() { beta_min } else { 0.0 },
        zeta: z,
        theorem1_lambda: theorem1_lambda(nu.nu_d2, nu.nu_l, delta.total, alpha),
        error_bound: 8.0 * nu_prime * delta.total,
        bandwidth_condition: ScaleCondition {
            value: m as f64,
            required_scale: nu_theta.powi(2) * z * z * (d * d) as f64 * (p as f64).ln(),
        },
        sample_condition: ScaleCondition { value: n as f64, required_scale: dep.omega_n * z * (m * d) as f64 },
        radius_r: None,
        dual_max: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{unvec, vec_of};
    use crate::procgen::NoiseFamily;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn path(p: usize) -> LaplacianSpec {
        path_with(p, 0.1)
    }

    fn path_with(p: usize, eps: f64) -> LaplacianSpec {
        let m = SymmetricMatrix::from_fn(p, |i, j| {
            if i == j {
                let deg = usize::from(i > 0) + usize::from(i + 1 < p);
                deg as f64 + eps
            } else if i.abs_diff(j) == 1 {
                -1.0
            } else {
                0.0
            }
        });
        LaplacianSpec::from_matrix(m, eps, crate::graphs::Provenance::Supplied).unwrap()
    }

    #[test]
    fn gamma_cases() {
        let g = hessian_gamma(&SymmetricMatrix::identity(3)).unwrap();
        assert_eq!(g, SymmetricMatrix::identity(9));
        let g = hessian_gamma(&SymmetricMatrix::identity(3).scale(2.0)).unwrap();
        assert!(max_abs(&(g.as_matrix() - DMatrix::identity(9, 9) * 0.25)) < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = DMatrix::from_fn(3, 3, |_, _| rng.random::<f64>() - 0.5);
        let l = SymmetricMatrix::symmetrize(&(&a * a.transpose() + DMatrix::identity(3, 3)));
        let g = hessian_gamma(&l).unwrap();
        let m = DMatrix::from_fn(3, 3, |_, _| rng.random::<f64>());
        let linv = l.inverse().unwrap().into_inner();
        let lhs = g.as_matrix() * vec_of(&m);
        let rhs = vec_of(&(&linv * &m * &linv));
        assert!((lhs - rhs).amax() < 1e-10);
        assert_eq!(unvec(&vec_of(&m), 3), m);
        assert!(matches!(hessian_gamma(&SymmetricMatrix::identity(65)), Err(Error::DimensionOverflow { .. })));
    }

    #[test]
    fn incoherence_cases() {
        assert_eq!(incoherence_alpha(&SymmetricMatrix::identity(5), &[]).unwrap(), 1.0);
        // Measured on the combinatorial chain plus 0.1·I; the near-null direction makes Γ*
        // almost rank one and incoherence fails.
        for (p, frozen) in [(4, -2.7410888902908543), (8, -2.779961340872999)] {
            let spec = path(p);
            let alpha = incoherence_alpha(&spec.matrix, &spec.edges).unwrap();
            assert!((alpha - frozen).abs() < 1e-9, "p={p}: {alpha}");
        }
        for (p, frozen) in [(4, 0.30303030303030276), (8, 0.3094009072422961)] {
            let spec = path_with(p, 2.0);
            let alpha = incoherence_alpha(&spec.matrix, &spec.edges).unwrap();
            assert!((alpha - frozen).abs() < 1e-9, "p={p}: {alpha}");
        }
        // Strong dense coupling breaks incoherence but is reported, not rejected.
        let dense = SymmetricMatrix::from_fn(4, |i, j| if i == j { 1.0 } else { 0.32 });
        let alpha = incoherence_alpha(&dense, &[(0, 1)]).unwrap();
        assert!(alpha.is_finite());
    }

    #[test]
    fn incoherence_matches_materialized_gamma() {
        let spec = path(5);
        let g = hessian_gamma(&spec.matrix).unwrap().into_inner();
        let e = augmented_indices(5, &spec.edges);
        let ec: Vec<usize> = (0..25).filter(|k| !e.contains(k)).collect();
        let gee = DMatrix::from_fn(e.len(), e.len(), |r, c| g[(e[r], e[c])]);
        let gce = DMatrix::from_fn(ec.len(), e.len(), |r, c| g[(ec[r], e[c])]);
        let prod = gce * gee.try_inverse().unwrap();
        let oracle = 1.0 - row_sum_norm(&prod);
        assert!((incoherence_alpha(&spec.matrix, &spec.edges).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn kappa_identity_case() {
        let eye = SymmetricMatrix::identity(3);
        let ty = HermitianMatrix::identity(3).scale(1.0 / (2.0 * std::f64::consts::PI));
        let k = kappa_check(&eye, &HermitianMatrix::identity(3), &ty, 1, 1.0).unwrap();
        assert_eq!(k.kappa, 1.0);
        let rhs = 2.0 * std::f64::consts::PI / (4.0 * 25.0);
        assert!((k.rhs - rhs).abs() < 1e-14);
        assert!(!k.holds);
        let tiny = kappa_check(&eye, &HermitianMatrix::identity(3), &ty, 1, 1e-12).unwrap();
        assert!(tiny.rhs < 1e-11 && !tiny.holds);
    }

    #[test]
    fn kappa_at_least_one() {
        for p in [3, 6, 10] {
            let spec = path(p);
            let nu = NuConstants::compute(&spec.matrix, &HermitianMatrix::identity(p)).unwrap();
            assert!(nu.kappa() >= 1.0);
        }
    }

    #[test]
    fn dependence_of_iid_is_zero() {
        let acov = AutocovSequence::new(vec![DMatrix::identity(2, 2)], AutocovTail::Negligible).unwrap();
        let d = dependence_measures(&acov, 100).unwrap();
        assert_eq!((d.omega_n, d.l_n), (0.0, 0.0));
    }

    #[test]
    fn dependence_of_scalar_ar1() {
        let rho: f64 = 0.5;
        let model = ProcessModel::var1_scaled_identity(1, rho, NoiseFamily::Gaussian);
        let acov = model.autocov(1, 5000).unwrap();
        let c = 1.0 / (1.0 - rho * rho);
        let n = 2000;
        let d = dependence_measures(&acov, n).unwrap();
        assert!((d.omega_n - 2.0 * c * rho / (1.0 - rho).powi(2)).abs() < 1e-6);
        assert!(d.l_n < 1e-12);
        let n = 5;
        let d = dependence_measures(&acov, n).unwrap();
        let tail = 2.0 * c * rho.powi(n as i32 + 1) / (1.0 - rho);
        assert!((d.l_n - tail).abs() < 1e-6);
        let mut prev = f64::INFINITY;
        for n in 1..40 {
            let l = dependence_measures(&acov, n).unwrap().l_n;
            assert!(l <= prev);
            prev = l;
        }
    }

    #[test]
    fn dependence_unknown_tail() {
        let lags = vec![DMatrix::identity(1, 1), DMatrix::from_element(1, 1, 0.5)];
        let acov = AutocovSequence::new(lags, AutocovTail::Unknown).unwrap();
        assert!(matches!(dependence_measures(&acov, 10), Err(Error::TailNotComputable { .. })));
    }

    #[test]
    fn delta_cases() {
        let eye = HermitianMatrix::identity(30);
        let zero = DependenceMeasures { omega_n: 0.0, l_n: 0.0 };
        let d = delta_threshold(&eye, 100, 100, 2.0, DeltaFamily::Gaussian, zero).unwrap();
        assert!((d.total - (2.0 * 30f64.ln() / 100.0).sqrt()).abs() < 1e-12);
        assert!((d.total - 0.2608).abs() < 1e-4);
        let dep = DependenceMeasures { omega_n: 0.01, l_n: 0.0 };
        let a = delta_threshold(&eye, 50, 100_000, 3.0, DeltaFamily::Gaussian, dep).unwrap();
        let b = delta_threshold(&eye, 200, 100_000, 3.0, DeltaFamily::Gaussian, dep).unwrap();
        assert!(a.bias < 0.1 * a.total);
        assert!(b.total < a.total);
        let s = delta_threshold(&eye, 100, 100, 3.0, DeltaFamily::SubExponential { rho: 0.5 }, zero).unwrap();
        assert!(s.up_to_constants);
    }

    #[test]
    fn lambda_recipe() {
        assert!((theorem1_lambda(1.0, 1.0, 0.01, 1.0) - 0.96).abs() < 1e-15);
        assert!((theorem1_lambda(1.0, 1.0, 0.02, 1.0) - 2.0 * 0.96).abs() < 1e-15);
    }

    #[test]
    fn witness_noiseless_limit() {
        let spec = path_with(6, 2.0);
        let model = ProcessModel::var1_scaled_identity(6, 0.5, NoiseFamily::Gaussian);
        let fx = model.psd(6, 0.0).unwrap();
        let tx = fx.inverse().unwrap();
        let fy = fx.congruence(&spec.matrix.inverse().unwrap());
        let alpha = incoherence_alpha(&spec.matrix, &spec.edges).unwrap();
        let mut prev = f64::INFINITY;
        for lambda in [1e-2, 1e-3, 1e-4] {
            let prob = WhittleProblem::new(fy.clone(), &tx, lambda, 0).unwrap();
            let rep = witness_check(&spec, &prob, &fy, &tx, alpha, &SolverOptions::default()).unwrap();
            assert!(rep.quantities.identity_residual <= 1e-10);
            assert!(rep.quantities.delta_max < prev);
            prev = rep.quantities.delta_max;
            assert!(rep.quantities.w_max < 1e-12);
            assert!(rep.strict_feasible);
            assert!(rep.lemma3_holds);
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn report_for_chain() {
        let spec = path_with(8, 2.0);
        let model = ProcessModel::var1_scaled_identity(8, 0.7, NoiseFamily::Gaussian);
        let rep = theory_report(&spec, &model, 4000, 63, DEFAULT_TAU, 0.0).unwrap();
        assert!(rep.alpha > 0.0);
        assert!(rep.kappa >= 1.0);
        assert!(rep.theorem1_lambda > 0.0);
        assert_eq!(rep.beta_min, 1.0);
        let expected = theorem1_lambda(rep.nu.nu_d2, rep.nu.nu_l, rep.delta_threshold, rep.alpha);
        assert_eq!(rep.theorem1_lambda, expected);
    }
}
