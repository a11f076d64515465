//! Simulation of injection processes and of the observed potentials `Y_t = L⁻¹ X_t`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal, StudentT, Weibull};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::matcore::{cholesky, cholesky_solve, HermitianMatrix, SymmetricMatrix};
use crate::panel::TimeSeriesPanel;
use crate::spectra::{self, AutocovSequence, AutocovTail};

pub const DEFAULT_BURN_IN: usize = 500;

/// Zero-mean, unit-variance innovation distributions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseFamily {
    #[default]
    Gaussian,
    Laplace,
    /// Symmetrized Weibull with shape `1/rho`, which has `P(|ε| > η^ρ) ≤ a e^{−bη}`.
    Weibull {
        rho: f64,
    },
    StudentT {
        df: f64,
    },
}

impl NoiseFamily {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseFamily::Weibull { rho } if !(rho > 0.0 && rho.is_finite()) => {
                Err(Error::ParameterOutOfRange(format!("weibull rho must be > 0, got {rho}")))
            }
            NoiseFamily::StudentT { df } if !(df >= 5.0 && df.is_finite()) => {
                Err(Error::ParameterOutOfRange(format!("student-t df must be >= 5, got {df}")))
            }
            _ => Ok(()),
        }
    }

    fn sampler(&self) -> Result<Sampler> {
        self.validate()?;
        Ok(match *self {
            NoiseFamily::Gaussian => Sampler::Gaussian,
            NoiseFamily::Laplace => Sampler::Laplace,
            NoiseFamily::Weibull { rho } => {
                let shape = 1.0 / rho;
                let sd = gamma(1.0 + 2.0 / shape).sqrt();
                let dist = Weibull::new(1.0, shape).map_err(|e| Error::ParameterOutOfRange(format!("weibull: {e}")))?;
                Sampler::Weibull(dist, sd)
            }
            NoiseFamily::StudentT { df } => {
                let dist = StudentT::new(df).map_err(|e| Error::ParameterOutOfRange(format!("student-t: {e}")))?;
                Sampler::StudentT(dist, (df / (df - 2.0)).sqrt())
            }
        })
    }
}

enum Sampler {
    Gaussian,
    Laplace,
    Weibull(Weibull<f64>, f64),
    StudentT(StudentT<f64>, f64),
}

impl Sampler {
    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Gaussian => rng.sample(StandardNormal),
            Sampler::Laplace => {
                let e: f64 = rng.sample(Exp1);
                let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
                s * e / std::f64::consts::SQRT_2
            }
            Sampler::Weibull(w, sd) => {
                let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
                s * w.sample(rng) / sd
            }
            Sampler::StudentT(t, sd) => t.sample(rng) / sd,
        }
    }
}

/// I.i.d. standardized draws.
pub fn sample_noise(family: NoiseFamily, count: usize, seed: u64) -> Result<Vec<f64>> {
    let sampler = family.sampler()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count).map(|_| sampler.draw(&mut rng)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProcessKind {
    Iid,
    Var1 {
        a: DMatrix<f64>,
    },
    Varma22 {
        a1: DMatrix<f64>,
        a2: DMatrix<f64>,
        b1: DMatrix<f64>,
        b2: DMatrix<f64>,
    },
    /// `X_t = Σ_{l=0}^{K} A_l ε_{t−l}`.
    LinearMa {
        coeffs: Vec<DMatrix<f64>>,
    },
}

/// A stationary linear injection process `X_t` with innovations `innovation_sd · ε_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessModel {
    pub kind: ProcessKind,
    pub noise: NoiseFamily,
    pub burn_in: usize,
    pub innovation_sd: f64,
}

impl ProcessModel {
    pub fn new(kind: ProcessKind, noise: NoiseFamily) -> Self {
        Self { kind, noise, burn_in: DEFAULT_BURN_IN, innovation_sd: 1.0 }
    }

    pub fn iid(noise: NoiseFamily) -> Self {
        Self::new(ProcessKind::Iid, noise)
    }

    /// VAR(1) with `A = rho·I`.
    pub fn var1_scaled_identity(p: usize, rho: f64, noise: NoiseFamily) -> Self {
        Self::new(ProcessKind::Var1 { a: DMatrix::identity(p, p) * rho }, noise)
    }

    /// VAR(1) with `A = rho·I` and innovation variance `1 − rho²`, so `Φ_X(l) = rho^{|l|} I`.
    pub fn unit_variance_var1(p: usize, rho: f64, noise: NoiseFamily) -> Self {
        let mut m = Self::var1_scaled_identity(p, rho, noise);
        m.innovation_sd = (1.0 - rho * rho).sqrt();
        m
    }

    /// The VARMA(2,2) configuration used in the synthetic experiments:
    /// `A1 = 0.4I`, `A2 = 0.2I`, `B1 = 1.5(I+J)`, `B2 = 0.75(I+J)` with `J` all ones.
    pub fn standard_varma22(p: usize, noise: NoiseFamily) -> Self {
        let eye = DMatrix::<f64>::identity(p, p);
        let ij = &eye + DMatrix::from_element(p, p, 1.0);
        Self::new(ProcessKind::Varma22 { a1: &eye * 0.4, a2: &eye * 0.2, b1: &ij * 1.5, b2: &ij * 0.75 }, noise)
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }

    /// Checks dimensions against `p`, stability and parameter ranges.
    pub fn validate(&self, p: usize) -> Result<()> {
        self.noise.validate()?;
        if !(self.innovation_sd > 0.0 && self.innovation_sd.is_finite()) {
            return Err(Error::ParameterOutOfRange(format!("innovation_sd must be > 0, got {}", self.innovation_sd)));
        }
        let square = |m: &DMatrix<f64>| -> Result<()> {
            if m.nrows() != m.ncols() {
                return Err(Error::NonSquare { rows: m.nrows(), cols: m.ncols() });
            }
            if m.nrows() != p {
                return Err(Error::DimensionMismatch { expected: p, found: m.nrows() });
            }
            Ok(())
        };
        match &self.kind {
            ProcessKind::Iid => {}
            ProcessKind::Var1 { a } => {
                square(a)?;
                let radius = spectra::spectral_radius(a);
                if radius >= 1.0 - 1e-8 {
                    return Err(Error::UnstableProcess { radius });
                }
            }
            ProcessKind::Varma22 { a1, a2, b1, b2 } => {
                for m in [a1, a2, b1, b2] {
                    square(m)?;
                }
                let radius = spectral_radius_companion(a1, a2);
                if radius >= 1.0 - 1e-8 {
                    return Err(Error::UnstableProcess { radius });
                }
            }
            ProcessKind::LinearMa { coeffs } => {
                if coeffs.is_empty() {
                    return Err(Error::EmptyInput("linear MA needs at least A_0".into()));
                }
                for m in coeffs {
                    square(m)?;
                }
            }
        }
        Ok(())
    }

    /// `max_{i,j} Σ_l |A_l(i,j)|` for the MA(∞) weights truncated at `max_lag`.
    pub fn coefficient_abs_sum(&self, p: usize, max_lag: usize) -> Result<f64> {
        let psi = self.psi_weights(p, max_lag)?;
        let mut acc = DMatrix::<f64>::zeros(p, p);
        for m in &psi {
            acc += m.abs();
        }
        Ok(acc.max())
    }

    /// Moving-average weights `Ψ_0..Ψ_K` with `X_t = Σ Ψ_k (innovation_sd · ε_{t−k})`.
    pub fn psi_weights(&self, p: usize, max_lag: usize) -> Result<Vec<DMatrix<f64>>> {
        self.validate(p)?;
        let eye = DMatrix::<f64>::identity(p, p);
        Ok(match &self.kind {
            ProcessKind::Iid => vec![eye],
            ProcessKind::LinearMa { coeffs } => coeffs.clone(),
            ProcessKind::Var1 { a } => {
                let mut out = vec![eye];
                for _ in 0..max_lag {
                    let next = a * out.last().unwrap();
                    out.push(next);
                }
                out
            }
            ProcessKind::Varma22 { a1, a2, b1, b2 } => {
                let zero = DMatrix::zeros(p, p);
                let b = [eye.clone(), b1.clone(), b2.clone()];
                let mut out: Vec<DMatrix<f64>> = Vec::with_capacity(max_lag + 1);
                for k in 0..=max_lag {
                    let mut m = b.get(k).cloned().unwrap_or_else(|| zero.clone());
                    if k >= 1 {
                        m += a1 * &out[k - 1];
                    }
                    if k >= 2 {
                        m += a2 * &out[k - 2];
                    }
                    out.push(m);
                }
                out
            }
        })
    }

    pub fn innovation_cov(&self, p: usize) -> SymmetricMatrix {
        SymmetricMatrix::identity(p).scale(self.innovation_sd * self.innovation_sd)
    }

    /// Population spectral density `f_X(ω)`.
    pub fn psd(&self, p: usize, omega: f64) -> Result<HermitianMatrix> {
        self.validate(p)?;
        let sigma = self.innovation_cov(p);
        match &self.kind {
            ProcessKind::Iid => spectra::linear_process_psd(&[], &[], &sigma, omega),
            ProcessKind::Var1 { a } => spectra::var1_psd(a, &sigma, omega),
            ProcessKind::Varma22 { a1, a2, b1, b2 } => {
                spectra::linear_process_psd(&[a1.clone(), a2.clone()], &[b1.clone(), b2.clone()], &sigma, omega)
            }
            ProcessKind::LinearMa { coeffs } => {
                let (a0, rest) = coeffs.split_first().expect("validated");
                // H(z) = Σ A_l z^l
                let z = nalgebra::Complex::from_polar(1.0, -omega);
                let mut h = a0.map(|x| nalgebra::Complex::new(x, 0.0));
                let mut zk = nalgebra::Complex::new(1.0, 0.0);
                for m in rest {
                    zk *= z;
                    h += m.map(|x| nalgebra::Complex::new(x, 0.0)) * zk;
                }
                let s = sigma.as_matrix().map(|x| nalgebra::Complex::new(x, 0.0));
                let f = &h * s * h.adjoint() / nalgebra::Complex::new(2.0 * std::f64::consts::PI, 0.0);
                Ok(HermitianMatrix::project(&f))
            }
        }
    }

    /// Population autocovariance of `X_t`. VAR(1) uses the Lyapunov solution; other
    /// processes sum MA(∞) weights truncated at `max_lag`; the tail is marked unknown when the
    /// last retained weight is not negligible.
    pub fn autocov(&self, p: usize, max_lag: usize) -> Result<AutocovSequence> {
        self.validate(p)?;
        let sigma = self.innovation_cov(p);
        match &self.kind {
            ProcessKind::Var1 { a } => spectra::var1_autocov(a, &sigma, max_lag),
            _ => {
                let mut psi = self.psi_weights(p, max_lag)?;
                psi.truncate(max_lag + 1);
                let acov = spectra::ma_autocov(&psi, &sigma)?;
                let scale = crate::matcore::max_abs(&psi[0]).max(f64::MIN_POSITIVE);
                let last = psi.last().map_or(0.0, crate::matcore::max_abs);
                if last <= 1e-15 * scale || matches!(self.kind, ProcessKind::Iid | ProcessKind::LinearMa { .. }) {
                    Ok(acov)
                } else {
                    AutocovSequence::new(acov.nonnegative_lags().to_vec(), AutocovTail::Unknown)
                }
            }
        }
    }
}

fn spectral_radius_companion(a1: &DMatrix<f64>, a2: &DMatrix<f64>) -> f64 {
    let p = a1.nrows();
    let mut c = DMatrix::<f64>::zeros(2 * p, 2 * p);
    c.view_mut((0, 0), (p, p)).copy_from(a1);
    c.view_mut((0, p), (p, p)).copy_from(a2);
    c.view_mut((p, 0), (p, p)).fill_with_identity();
    spectra::spectral_radius(&c)
}

/// Simulates `X_1..X_n` after discarding `burn_in` samples started from zero.
///
/// Innovations are drawn time-major (all `p` coordinates of `ε_t`, then `ε_{t+1}`) from a
/// ChaCha8 stream seeded with `seed`.
pub fn simulate_injections(model: &ProcessModel, n: usize, p: usize, seed: u64) -> Result<TimeSeriesPanel> {
    if n == 0 || p == 0 {
        return Err(Error::ParameterOutOfRange("simulation needs n >= 1 and p >= 1".into()));
    }
    model.validate(p)?;
    let sampler = model.noise.sampler()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = n + model.burn_in;
    let sd = model.innovation_sd;
    let mut eps = DMatrix::<f64>::zeros(p, total);
    for t in 0..total {
        for k in 0..p {
            eps[(k, t)] = sd * sampler.draw(&mut rng);
        }
    }
    let mut x = DMatrix::<f64>::zeros(p, total);
    match &model.kind {
        ProcessKind::Iid => x.copy_from(&eps),
        ProcessKind::Var1 { a } => {
            x.set_column(0, &eps.column(0));
            for t in 1..total {
                let next = a * x.column(t - 1) + eps.column(t);
                x.set_column(t, &next);
            }
        }
        ProcessKind::Varma22 { a1, a2, b1, b2 } => {
            for t in 0..total {
                let mut v = eps.column(t).into_owned();
                if t >= 1 {
                    v += a1 * x.column(t - 1) + b1 * eps.column(t - 1);
                }
                if t >= 2 {
                    v += a2 * x.column(t - 2) + b2 * eps.column(t - 2);
                }
                x.set_column(t, &v);
            }
        }
        ProcessKind::LinearMa { coeffs } => {
            for t in 0..total {
                let mut v = nalgebra::DVector::zeros(p);
                for (l, a) in coeffs.iter().enumerate().take(t + 1) {
                    v += a * eps.column(t - l);
                }
                x.set_column(t, &v);
            }
        }
    }
    let data = x.columns(model.burn_in, n).transpose();
    Ok(TimeSeriesPanel::new(data, process_tag(model))?.with_seed(seed))
}

fn process_tag(model: &ProcessModel) -> String {
    let kind = match model.kind {
        ProcessKind::Iid => "iid",
        ProcessKind::Var1 { .. } => "var1",
        ProcessKind::Varma22 { .. } => "varma22",
        ProcessKind::LinearMa { .. } => "linear_ma",
    };
    let noise = match model.noise {
        NoiseFamily::Gaussian => "gaussian".to_string(),
        NoiseFamily::Laplace => "laplace".to_string(),
        NoiseFamily::Weibull { rho } => format!("weibull(rho={rho})"),
        NoiseFamily::StudentT { df } => format!("student_t(df={df})"),
    };
    format!("{kind}/{noise}")
}

/// `Y_t = L⁻¹ X_t` for every row, reusing one Cholesky factor of `L`.
pub fn observe_potentials(l: &SymmetricMatrix, x: &TimeSeriesPanel) -> Result<TimeSeriesPanel> {
    if l.dim() != x.p() {
        return Err(Error::DimensionMismatch { expected: l.dim(), found: x.p() });
    }
    let c = cholesky(l.as_matrix())?;
    let y = cholesky_solve(&c, &x.data().transpose()).transpose();
    let panel = TimeSeriesPanel::new(y, format!("{}/observed", x.process_tag()))?;
    Ok(match x.seed() {
        Some(s) => panel.with_seed(s),
        None => panel,
    })
}
