//! Spectral densities and empirical spectral estimation.
//!
//! Closed-form PSDs for linear processes, autocovariance-to-PSD transforms, the DFT with
//! the 1-based time index convention, and the bandwidth-`m` averaged periodogram.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Schur};
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matcore::{cholesky, max_abs, HermitianMatrix, SymmetricMatrix, C64};
use crate::panel::TimeSeriesPanel;
use crate::parallel::{self, Execution};

const TWO_PI: f64 = 2.0 * PI;

/// What is known about `Φ(l)` beyond the stored lags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AutocovTail {
    /// Lags past `max_lag` are below machine precision relative to `Φ(0)`.
    Negligible,
    /// Lags past `max_lag` were not observed (empirical estimates).
    Unknown,
}

/// `Φ(l)` for `l = 0..=max_lag`; negative lags follow from `Φ(−l) = Φ(l)ᵀ`.
#[derive(Debug, Clone)]
pub struct AutocovSequence {
    lags: Vec<DMatrix<f64>>,
    tail: AutocovTail,
}

impl AutocovSequence {
    pub fn new(lags: Vec<DMatrix<f64>>, tail: AutocovTail) -> Result<Self> {
        let Some(phi0) = lags.first() else {
            return Err(Error::EmptyInput("autocovariance needs lag 0".into()));
        };
        let p = phi0.nrows();
        if let Some(bad) = lags.iter().find(|m| m.nrows() != p || m.ncols() != p) {
            return Err(Error::DimensionMismatch { expected: p, found: bad.nrows().max(bad.ncols()) });
        }
        let asym = max_abs(&(phi0 - phi0.transpose()));
        if asym > 1e-12 * max_abs(phi0).max(f64::MIN_POSITIVE) {
            return Err(Error::AsymmetricBeyondTolerance { row: 0, col: 0, gap: asym });
        }
        let mut lags = lags;
        lags[0] = SymmetricMatrix::symmetrize(&lags[0]).into_inner();
        cholesky(&lags[0])?;
        Ok(Self { lags, tail })
    }

    pub fn p(&self) -> usize {
        self.lags[0].nrows()
    }

    pub fn max_lag(&self) -> usize {
        self.lags.len() - 1
    }

    pub fn tail(&self) -> AutocovTail {
        self.tail
    }

    /// `Φ(l)` for any integer lag; zero past `max_lag`.
    pub fn at(&self, l: isize) -> DMatrix<f64> {
        let k = l.unsigned_abs();
        match self.lags.get(k) {
            Some(m) if l >= 0 => m.clone(),
            Some(m) => m.transpose(),
            None => DMatrix::zeros(self.p(), self.p()),
        }
    }

    pub fn nonnegative_lags(&self) -> &[DMatrix<f64>] {
        &self.lags
    }

    /// `A Φ(l) A` for every lag, e.g. `L*⁻¹ Φ_X(l) L*⁻¹` for the observed potentials.
    pub fn congruence(&self, a: &SymmetricMatrix) -> AutocovSequence {
        let a = a.as_matrix();
        let lags = self.lags.iter().map(|m| a * m * a).collect::<Vec<_>>();
        let mut out = AutocovSequence { lags, tail: self.tail };
        out.lags[0] = SymmetricMatrix::symmetrize(&out.lags[0]).into_inner();
        out
    }
}

/// The Fourier frequencies `ω_j = 2πj/n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrequencyGrid {
    n: usize,
}

impl FrequencyGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyInput("frequency grid needs n >= 1".into()));
        }
        Ok(Self { n })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn omega(&self, j: usize) -> f64 {
        TWO_PI * j as f64 / self.n as f64
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.omega(j)).collect()
    }
}

/// Averaged periodogram at one Fourier frequency.
#[derive(Debug, Clone, Serialize)]
pub struct PeriodogramEstimate {
    pub omega_index: usize,
    pub bandwidth: usize,
    pub matrix: HermitianMatrix,
    pub n_used: usize,
}

/// `(1/2π) Σ_{|l| ≤ L_max} Φ(l) e^{−ilω}`.
pub fn psd_from_autocov(acov: &AutocovSequence, omega: f64) -> HermitianMatrix {
    let p = acov.p();
    let mut acc = acov.lags[0].map(|x| C64::new(x, 0.0));
    for (l, phi) in acov.lags.iter().enumerate().skip(1) {
        let e = C64::from_polar(1.0, -(l as f64) * omega);
        for j in 0..p {
            for i in 0..p {
                // Φ(l) e^{−ilω} + Φ(l)ᵀ e^{ilω}
                acc[(i, j)] += e * phi[(i, j)] + e.conj() * phi[(j, i)];
            }
        }
    }
    HermitianMatrix::project(&acc.map(|z| z / TWO_PI))
}

/// Spectral radius of a real square matrix.
///
/// Uses the real Schur form when its QR iteration converges. Matrices with many repeated
/// eigenvalues (block companion forms of diagonal coefficients) can stall it; those fall back
/// to `‖A^N‖^{1/N}` with `N = 2⁴⁰`, an upper bound on the radius that converges to it.
pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    match Schur::try_new(a.clone(), f64::EPSILON, 10_000) {
        Some(schur) => schur.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max),
        None => gelfand_radius(a, 40),
    }
}

/// `‖A^{2^k}‖^{1/2^k}` by repeated squaring, renormalized each step to avoid overflow.
fn gelfand_radius(a: &DMatrix<f64>, k: u32) -> f64 {
    let mut m = a.clone();
    let mut log_norm = 0.0;
    for _ in 0..k {
        m = &m * &m;
        log_norm *= 2.0;
        let norm = m.norm();
        if norm == 0.0 {
            return 0.0;
        }
        m /= norm;
        log_norm += norm.ln();
    }
    (log_norm / 2f64.powi(k as i32)).exp()
}

fn to_complex(m: &DMatrix<f64>) -> DMatrix<C64> {
    m.map(|x| C64::new(x, 0.0))
}

/// Transfer function `𝒜(z)⁻¹ ℬ(z)` of the linear process
/// `X_t = Σ_k AR_k X_{t−k} + ε_t + Σ_k MA_k ε_{t−k}` at `z = e^{−iω}`.
pub fn transfer_function(ar: &[DMatrix<f64>], ma: &[DMatrix<f64>], p: usize, omega: f64) -> Result<DMatrix<C64>> {
    let z = C64::from_polar(1.0, -omega);
    let mut a_poly = DMatrix::<C64>::identity(p, p);
    let mut zk = C64::new(1.0, 0.0);
    for a in ar {
        zk *= z;
        a_poly -= to_complex(a) * zk;
    }
    let mut b_poly = DMatrix::<C64>::identity(p, p);
    zk = C64::new(1.0, 0.0);
    for b in ma {
        zk *= z;
        b_poly += to_complex(b) * zk;
    }
    let sv = a_poly.clone().singular_values();
    let (lo, hi) = sv.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &s| (lo.min(s), hi.max(s)));
    if !(lo > 1e-12 * hi.max(1.0)) {
        return Err(Error::SingularArPolynomial { omega });
    }
    let lu = a_poly.lu();
    lu.solve(&b_poly).ok_or(Error::SingularArPolynomial { omega })
}

/// `(1/2π) H(z) Σ H(z)†` for the linear process with transfer function `H = 𝒜⁻¹ℬ`.
pub fn linear_process_psd(
    ar: &[DMatrix<f64>],
    ma: &[DMatrix<f64>],
    sigma: &SymmetricMatrix,
    omega: f64,
) -> Result<HermitianMatrix> {
    let p = sigma.dim();
    let h = transfer_function(ar, ma, p, omega)?;
    let f = &h * to_complex(sigma.as_matrix()) * h.adjoint();
    Ok(HermitianMatrix::project(&f.map(|z| z / TWO_PI)))
}

/// VAR(1) spectral density `(1/2π)(I − Az)⁻¹ Σ ((I − Az)⁻¹)†`, `z = e^{−iω}`.
pub fn var1_psd(a: &DMatrix<f64>, sigma: &SymmetricMatrix, omega: f64) -> Result<HermitianMatrix> {
    let radius = spectral_radius(a);
    if radius >= 1.0 - 1e-8 {
        return Err(Error::UnstableProcess { radius });
    }
    linear_process_psd(std::slice::from_ref(a), &[], sigma, omega)
}

/// VARMA(2,2) spectral density with `𝒜(z) = I − A1 z − A2 z²`, `ℬ(z) = I + B1 z + B2 z²`
/// and unit-variance innovations.
pub fn varma22_psd(
    a1: &DMatrix<f64>,
    a2: &DMatrix<f64>,
    b1: &DMatrix<f64>,
    b2: &DMatrix<f64>,
    omega: f64,
) -> Result<HermitianMatrix> {
    let p = a1.nrows();
    linear_process_psd(&[a1.clone(), a2.clone()], &[b1.clone(), b2.clone()], &SymmetricMatrix::identity(p), omega)
}

/// `Θ_Y = L Θ_X L`.
pub fn theta_y_true(l: &SymmetricMatrix, theta_x: &HermitianMatrix) -> Result<HermitianMatrix> {
    if l.dim() != theta_x.dim() {
        return Err(Error::DimensionMismatch { expected: l.dim(), found: theta_x.dim() });
    }
    cholesky(l.as_matrix())?;
    if !theta_x.is_positive_definite() {
        return Err(Error::NotPositiveDefinite("theta_x".into()));
    }
    Ok(theta_x.congruence(l))
}

/// `d_j = n^{−1/2} Σ_{t=1}^{n} Y_t e^{−itω_j}` by direct summation.
pub fn dft_coeff(panel: &TimeSeriesPanel, j: usize) -> Result<DVector<C64>> {
    let n = panel.n();
    if j >= n {
        return Err(Error::IndexOutOfRange { index: j, len: n });
    }
    let mut d = DVector::<C64>::zeros(panel.p());
    let y = panel.data();
    for t in 0..n {
        // Reduce the phase index modulo n to keep the angle small.
        let e = C64::from_polar(1.0, -TWO_PI * (((t + 1) * j) % n) as f64 / n as f64);
        for k in 0..panel.p() {
            d[k] += e * y[(t, k)];
        }
    }
    Ok(d.unscale((n as f64).sqrt()))
}

/// All DFT coefficients of a panel (`n × p`, row `j` holds `d_j`), computed with an FFT.
#[derive(Debug, Clone)]
pub struct PanelDft {
    coeffs: DMatrix<C64>,
}

impl PanelDft {
    pub fn compute(panel: &TimeSeriesPanel) -> Self {
        let (n, p) = (panel.n(), panel.p());
        let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
        let scale = 1.0 / (n as f64).sqrt();
        let mut coeffs = DMatrix::<C64>::zeros(n, p);
        let mut buf = vec![C64::new(0.0, 0.0); n];
        for k in 0..p {
            for (t, slot) in buf.iter_mut().enumerate() {
                *slot = C64::new(panel.data()[(t, k)], 0.0);
            }
            fft.process(&mut buf);
            for (j, v) in buf.iter().enumerate() {
                // The FFT indexes time from 0; shifting to t = 1 multiplies by e^{−iω_j}.
                let shift = C64::from_polar(1.0, -TWO_PI * j as f64 / n as f64);
                coeffs[(j, k)] = v * shift * scale;
            }
        }
        Self { coeffs }
    }

    pub fn n(&self) -> usize {
        self.coeffs.nrows()
    }

    pub fn p(&self) -> usize {
        self.coeffs.ncols()
    }

    pub fn coeff(&self, j: usize) -> DVector<C64> {
        self.coeffs.row(j % self.n()).transpose()
    }

    /// `P_j = (1/(2π(2m+1))) Σ_{|k| ≤ m} d_{j+k} d_{j+k}†` with indices taken modulo `n`.
    pub fn averaged(&self, j: usize, m: usize) -> Result<PeriodogramEstimate> {
        let n = self.n();
        if j >= n {
            return Err(Error::IndexOutOfRange { index: j, len: n });
        }
        if 2 * m + 1 > n {
            return Err(Error::BandwidthTooLarge { m, n });
        }
        let p = self.p();
        let mut acc = DMatrix::<C64>::zeros(p, p);
        for k in 0..(2 * m + 1) {
            let idx = (j + n + k - m) % n;
            let d = self.coeffs.row(idx);
            for b in 0..p {
                let db = d[b].conj();
                for a in 0..p {
                    acc[(a, b)] += d[a] * db;
                }
            }
        }
        let scale = 1.0 / (TWO_PI * (2 * m + 1) as f64);
        Ok(PeriodogramEstimate {
            omega_index: j,
            bandwidth: m,
            matrix: HermitianMatrix::project(&acc.map(|z| z * scale)),
            n_used: n,
        })
    }
}

pub fn averaged_periodogram(panel: &TimeSeriesPanel, j: usize, m: usize) -> Result<PeriodogramEstimate> {
    if 2 * m + 1 > panel.n() {
        return Err(Error::BandwidthTooLarge { m, n: panel.n() });
    }
    PanelDft::compute(panel).averaged(j, m)
}

/// Periodograms at several frequencies from a single FFT pass.
pub fn averaged_periodogram_many(
    panel: &TimeSeriesPanel,
    indices: &[usize],
    m: usize,
    exec: Execution,
) -> Result<Vec<PeriodogramEstimate>> {
    let dft = PanelDft::compute(panel);
    parallel::map(exec, indices.to_vec(), |j| dft.averaged(j, m)).into_iter().collect()
}

/// Default bandwidth `⌊√n⌋`.
pub fn default_bandwidth(n: usize) -> usize {
    (n as f64).sqrt().floor() as usize
}

/// Analytic VAR(1) autocovariance: `Φ(0)` solves `Φ = AΦAᵀ + Σ` and `Φ(l) = A^l Φ(0)`.
///
/// Lags are generated until they fall below `1e-17·‖Φ(0)‖_max` (the tail is then marked
/// negligible) or `max_lag` is reached.
pub fn var1_autocov(a: &DMatrix<f64>, sigma: &SymmetricMatrix, max_lag: usize) -> Result<AutocovSequence> {
    let radius = spectral_radius(a);
    if radius >= 1.0 - 1e-8 {
        return Err(Error::UnstableProcess { radius });
    }
    // Doubling iteration for the discrete Lyapunov equation.
    let mut phi0 = sigma.as_matrix().clone();
    let mut ak = a.clone();
    for _ in 0..64 {
        let inc = &ak * &phi0 * ak.transpose();
        let done = max_abs(&inc) <= 1e-18 * max_abs(&phi0);
        phi0 += inc;
        if done {
            break;
        }
        ak = &ak * &ak;
    }
    let phi0 = SymmetricMatrix::symmetrize(&phi0).into_inner();
    let floor = 1e-17 * max_abs(&phi0);
    let mut lags = vec![phi0];
    let mut tail = AutocovTail::Unknown;
    while lags.len() <= max_lag {
        let next = a * lags.last().unwrap();
        if max_abs(&next) <= floor {
            tail = AutocovTail::Negligible;
            break;
        }
        lags.push(next);
    }
    if a.iter().all(|&x| x == 0.0) {
        tail = AutocovTail::Negligible;
    }
    AutocovSequence::new(lags, tail)
}

/// Autocovariance of `X_t = Σ_k Ψ_k ε_{t−k}` with `Cov(ε) = Σ`: `Φ(l) = Σ_k Ψ_{k+l} Σ Ψ_kᵀ`.
pub fn ma_autocov(psi: &[DMatrix<f64>], sigma: &SymmetricMatrix) -> Result<AutocovSequence> {
    let s = sigma.as_matrix();
    let lags = (0..psi.len())
        .map(|l| {
            let mut acc = DMatrix::zeros(s.nrows(), s.nrows());
            for k in 0..psi.len() - l {
                acc += &psi[k + l] * s * psi[k].transpose();
            }
            acc
        })
        .collect();
    AutocovSequence::new(lags, AutocovTail::Negligible)
}

/// Biased (divide by `n`) sample autocovariance up to `max_lag`, after centering.
pub fn sample_autocov(panel: &TimeSeriesPanel, max_lag: usize) -> Result<AutocovSequence> {
    let n = panel.n();
    let y = panel.data();
    let mean = y.row_mean();
    let centered = DMatrix::from_fn(n, panel.p(), |t, k| y[(t, k)] - mean[k]);
    let lags = (0..=max_lag.min(n - 1))
        .map(|l| {
            let a = centered.rows(l, n - l);
            let b = centered.rows(0, n - l);
            a.transpose() * b / n as f64
        })
        .collect();
    AutocovSequence::new(lags, AutocovTail::Unknown)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian_panel(n: usize, p: usize, seed: u64) -> TimeSeriesPanel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        TimeSeriesPanel::new(data, "iid").unwrap()
    }

    fn identity_over_two_pi(p: usize) -> DMatrix<C64> {
        DMatrix::identity(p, p).map(|x: f64| C64::new(x / TWO_PI, 0.0))
    }

    fn block_companion(p: usize, a1: f64, a2: f64) -> DMatrix<f64> {
        let mut c = DMatrix::zeros(2 * p, 2 * p);
        c.view_mut((0, 0), (p, p)).fill_diagonal(a1);
        c.view_mut((0, p), (p, p)).fill_diagonal(a2);
        c.view_mut((p, 0), (p, p)).fill_with_identity();
        c
    }

    #[test]
    fn spectral_radius_of_repeated_block_companion() {
        // Largest root of z² − 0.4z − 0.2, repeated p times.
        let root = (0.4 + 0.96f64.sqrt()) / 2.0;
        for p in [2, 30, 60] {
            assert_relative_eq!(spectral_radius(&block_companion(p, 0.4, 0.2)), root, max_relative = 1e-9);
        }
    }

    #[test]
    fn gelfand_fallback_matches_schur() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = DMatrix::from_fn(6, 6, |_, _| rng.sample::<f64, _>(StandardNormal) * 0.3);
        let schur = spectral_radius(&a);
        assert_relative_eq!(gelfand_radius(&a, 40), schur, max_relative = 1e-9);
        assert_eq!(gelfand_radius(&DMatrix::zeros(3, 3), 40), 0.0);
    }

    #[test]
    fn white_noise_psd_is_flat() {
        let acov = AutocovSequence::new(vec![DMatrix::identity(3, 3)], AutocovTail::Negligible).unwrap();
        for &w in &[0.0, 0.7, 2.0, -3.0] {
            let f = psd_from_autocov(&acov, w);
            assert!(max_abs(&(f.as_matrix() - identity_over_two_pi(3))) < 1e-15);
        }
    }

    #[test]
    fn scalar_ar1_geometric_series() {
        let rho: f64 = 0.5;
        let lags = (0..=200).map(|l| DMatrix::from_element(1, 1, rho.powi(l))).collect();
        let acov = AutocovSequence::new(lags, AutocovTail::Negligible).unwrap();
        let f = psd_from_autocov(&acov, 0.0);
        assert_relative_eq!(f.as_matrix()[(0, 0)].re, 3.0 / TWO_PI, epsilon = 1e-12);
    }

    #[test]
    fn psd_from_autocov_matches_direct_complex_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let phi0 = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.5]);
        let mut lags = vec![phi0];
        for _ in 0..4 {
            lags.push(DMatrix::from_fn(2, 2, |_, _| rng.random::<f64>() * 0.4 - 0.2));
        }
        let acov = AutocovSequence::new(lags, AutocovTail::Negligible).unwrap();
        let w = 1.1;
        let mut oracle = DMatrix::<C64>::zeros(2, 2);
        for l in -4isize..=4 {
            let e = C64::new(0.0, -(l as f64) * w).exp();
            oracle += acov.at(l).map(|x| C64::new(x, 0.0)) * e;
        }
        oracle /= C64::new(TWO_PI, 0.0);
        let f = psd_from_autocov(&acov, w);
        assert!(max_abs(&(f.as_matrix() - &oracle)) < 1e-12);
        let m = f.as_matrix();
        assert!((m[(0, 1)] - m[(1, 0)].conj()).norm() < 1e-15);
    }

    #[test]
    fn var1_psd_cases() {
        let z = DMatrix::zeros(3, 3);
        let f = var1_psd(&z, &SymmetricMatrix::identity(3), 1.3).unwrap();
        assert!(max_abs(&(f.as_matrix() - identity_over_two_pi(3))) < 1e-15);

        let a = DMatrix::identity(4, 4) * 0.7;
        let f = var1_psd(&a, &SymmetricMatrix::identity(4), 0.0).unwrap();
        let expected = 1.0 / (TWO_PI * 0.09);
        for i in 0..4 {
            assert_relative_eq!(f.as_matrix()[(i, i)].re, expected, max_relative = 1e-12);
        }

        let unstable = DMatrix::identity(2, 2) * 1.0;
        assert!(matches!(var1_psd(&unstable, &SymmetricMatrix::identity(2), 0.0), Err(Error::UnstableProcess { .. })));
    }

    #[test]
    fn var1_psd_nondiagonal_is_hermitian_pd() {
        let a = DMatrix::from_row_slice(2, 2, &[0.5, 0.3, -0.2, 0.4]);
        for k in 0..8 {
            let w = -PI + k as f64 * PI / 4.0;
            let f = var1_psd(&a, &SymmetricMatrix::identity(2), w).unwrap();
            assert!(f.is_positive_definite());
            let m = f.as_matrix();
            assert!((m[(0, 1)] - m[(1, 0)].conj()).norm() < 1e-14);
        }
    }

    #[test]
    fn var1_psd_agrees_with_truncated_autocov() {
        let a = DMatrix::from_row_slice(2, 2, &[0.4, 0.3, 0.1, 0.5]);
        assert!(a.clone().singular_values().max() <= 0.7);
        let sigma = SymmetricMatrix::identity(2);
        let acov = var1_autocov(&a, &sigma, 500).unwrap();
        for &w in &[0.0, 0.5, 2.5] {
            let f1 = var1_psd(&a, &sigma, w).unwrap();
            let f2 = psd_from_autocov(&acov, w);
            assert!(max_abs(&(f1.as_matrix() - f2.as_matrix())) < 1e-4);
        }
    }

    #[test]
    fn varma_white_noise_and_ar1_route() {
        let z = DMatrix::zeros(2, 2);
        let f = varma22_psd(&z, &z, &z, &z, 0.4).unwrap();
        assert!(max_abs(&(f.as_matrix() - identity_over_two_pi(2))) < 1e-15);

        // Scalar AR(1) with a = 0.5: Φ(l) = a^|l| / (1 − a²).
        let a: f64 = 0.5;
        let zero = DMatrix::zeros(1, 1);
        let a1 = DMatrix::from_element(1, 1, a);
        let lags = (0..=200).map(|l| DMatrix::from_element(1, 1, a.powi(l) / (1.0 - a * a))).collect();
        let acov = AutocovSequence::new(lags, AutocovTail::Negligible).unwrap();
        for &w in &[0.0, 1.0, 3.0] {
            let f1 = varma22_psd(&a1, &zero, &zero, &zero, w).unwrap();
            let f2 = psd_from_autocov(&acov, w);
            assert!((f1.as_matrix()[(0, 0)] - f2.as_matrix()[(0, 0)]).norm() < 1e-6);
        }
    }

    #[test]
    fn varma_singular_ar_polynomial() {
        let a1 = DMatrix::identity(2, 2);
        let z = DMatrix::zeros(2, 2);
        assert!(matches!(varma22_psd(&a1, &z, &z, &z, 0.0), Err(Error::SingularArPolynomial { .. })));
    }

    #[test]
    fn dft_constant_series() {
        let n = 16;
        let panel = TimeSeriesPanel::new(DMatrix::from_element(n, 2, 1.5), "c").unwrap();
        let d = dft_coeff(&panel, 0).unwrap();
        assert_relative_eq!(d[0].re, 4.0 * 1.5, epsilon = 1e-12);
        assert!(d[0].im.abs() < 1e-12);
        for j in 1..n {
            assert!(dft_coeff(&panel, j).unwrap().norm() < 1e-12);
        }
        assert!(matches!(dft_coeff(&panel, n), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn dft_single_tone_concentrates() {
        let n = 64;
        let k = 5;
        let data = DMatrix::from_fn(n, 1, |t, _| (TWO_PI * k as f64 * (t + 1) as f64 / n as f64).cos());
        let panel = TimeSeriesPanel::new(data, "tone").unwrap();
        let dft = PanelDft::compute(&panel);
        let root_n = (n as f64).sqrt();
        for j in 0..n {
            let mag = dft.coeff(j)[0].norm();
            if j == k || j == n - k {
                assert_relative_eq!(mag, root_n / 2.0, epsilon = 1e-10);
            } else {
                assert!(mag < 1e-10, "leak at {j}: {mag}");
            }
        }
    }

    #[test]
    fn fft_matches_direct_and_parseval() {
        let panel = gaussian_panel(37, 3, 8);
        let dft = PanelDft::compute(&panel);
        let mut energy = 0.0;
        for j in 0..37 {
            let direct = dft_coeff(&panel, j).unwrap();
            assert!((dft.coeff(j) - &direct).norm() < 1e-12);
            energy += direct.norm_squared();
        }
        let time_energy: f64 = panel.data().iter().map(|x| x * x).sum();
        assert!((energy - time_energy).abs() < 1e-8);
    }

    #[test]
    fn periodogram_single_term() {
        let panel = gaussian_panel(20, 2, 3);
        let est = averaged_periodogram(&panel, 3, 0).unwrap();
        let d = dft_coeff(&panel, 3).unwrap();
        let oracle = &d * d.adjoint() / C64::new(TWO_PI, 0.0);
        assert!(max_abs(&(est.matrix.as_matrix() - oracle)) < 1e-13);
        assert!(matches!(averaged_periodogram(&panel, 0, 10), Err(Error::BandwidthTooLarge { m: 10, n: 20 })));
    }

    #[test]
    fn periodogram_brute_force_triple_sum() {
        let y = [0.3, -1.2, 2.0, 0.7, -0.4, 1.1, 0.0, -2.2];
        let n = y.len();
        let panel = TimeSeriesPanel::new(DMatrix::from_column_slice(n, 1, &y), "hand").unwrap();
        for j in 0..n {
            let mut oracle = 0.0;
            for k in -1i64..=1 {
                let idx = (j as i64 + k).rem_euclid(n as i64) as f64;
                let w = TWO_PI * idx / n as f64;
                let mut d = C64::new(0.0, 0.0);
                for (t, &v) in y.iter().enumerate() {
                    d += C64::new(0.0, -w * (t + 1) as f64).exp() * v;
                }
                oracle += d.norm_sqr() / n as f64;
            }
            oracle /= TWO_PI * 3.0;
            let est = averaged_periodogram(&panel, j, 1).unwrap();
            assert!((est.matrix.as_matrix()[(0, 0)].re - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn white_noise_periodogram_flatness() {
        let panel = gaussian_panel(4096, 3, 12);
        let est = averaged_periodogram(&panel, 0, 64).unwrap();
        let err = max_abs(&(est.matrix.as_matrix() - identity_over_two_pi(3)));
        assert!(err <= 0.15, "err {err}");
    }

    #[test]
    fn many_frequencies_match_single_calls() {
        let panel = gaussian_panel(50, 2, 1);
        let js = [0, 7, 49];
        let many = averaged_periodogram_many(&panel, &js, 3, Execution::Parallel).unwrap();
        for (est, &j) in many.iter().zip(&js) {
            let single = averaged_periodogram(&panel, j, 3).unwrap();
            assert_eq!(est.matrix, single.matrix);
        }
    }

    #[test]
    fn theta_y_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let b = DMatrix::from_fn(3, 3, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let theta = HermitianMatrix::new(&b * b.adjoint() + DMatrix::identity(3, 3)).unwrap();
        let same = theta_y_true(&SymmetricMatrix::identity(3), &theta).unwrap();
        assert!(max_abs(&(same.as_matrix() - theta.as_matrix())) < 1e-15);
        let four = theta_y_true(&SymmetricMatrix::identity(3).scale(2.0), &theta).unwrap();
        assert!(max_abs(&(four.as_matrix() - theta.as_matrix() * C64::new(4.0, 0.0))) < 1e-14);

        let a = DMatrix::from_fn(3, 3, |_, _| rng.random::<f64>() - 0.5);
        let l = SymmetricMatrix::symmetrize(&(&a * a.transpose() + DMatrix::identity(3, 3)));
        let ty = theta_y_true(&l, &theta).unwrap();
        let linv = l.inverse().unwrap().as_matrix().map(|x| C64::new(x, 0.0));
        let f_y = &linv * theta.inverse().unwrap().as_matrix() * &linv;
        let prod = ty.as_matrix() * f_y;
        assert!(max_abs(&(prod - DMatrix::<C64>::identity(3, 3))) < 1e-9);

        let bad = SymmetricMatrix::from_diagonal(&[1.0, -1.0, 1.0]);
        assert!(matches!(theta_y_true(&bad, &theta), Err(Error::NotPositiveDefinite(_))));
    }

    #[test]
    fn var1_autocov_solves_lyapunov() {
        let a = DMatrix::from_row_slice(2, 2, &[0.5, 0.2, -0.1, 0.3]);
        let sigma = SymmetricMatrix::identity(2);
        let acov = var1_autocov(&a, &sigma, 1000).unwrap();
        let phi0 = acov.at(0);
        let resid = &phi0 - &a * &phi0 * a.transpose() - sigma.as_matrix();
        assert!(max_abs(&resid) < 1e-13);
        assert_eq!(acov.tail(), AutocovTail::Negligible);
        assert!(max_abs(&(acov.at(2) - &a * &a * &phi0)) < 1e-14);
        assert_eq!(acov.at(-1), acov.at(1).transpose());
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(32))]
        #[test]
        fn periodogram_is_hermitian_psd(seed in 0u64..10_000, n in 8usize..80, p in 1usize..5, j in 0usize..8) {
            let panel = gaussian_panel(n, p, seed);
            let m = default_bandwidth(n).min((n - 1) / 2);
            let est = averaged_periodogram(&panel, j % n, m).unwrap();
            let h = &est.matrix;
            let floor = -1e-10 * h.trace();
            proptest::prop_assert!(h.eigenvalues().iter().all(|&l| l >= floor));
        }
    }
}
