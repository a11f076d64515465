//! Dense real/complex matrix kernel.
//!
//! Two wrapper types carry the structural invariants the rest of the crate relies on:
//! [`SymmetricMatrix`] (exactly symmetric real) and [`HermitianMatrix`] (exactly Hermitian
//! complex, real diagonal). Both are constructed by validating and then projecting onto the
//! structure, so downstream code never sees a half-symmetric matrix.
//!
//! Eigen-decompositions of Hermitian matrices go through nalgebra's `SymmetricEigen`
//! (Householder tridiagonalization followed by implicit symmetric QR), never a general
//! nonsymmetric routine.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use nalgebra::{ComplexField, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Relative eigenvalue floor used by [`hermitian_sqrt`] and friends.
pub const DEFAULT_PD_TOL: f64 = 1e-10;

/// Largest Kronecker product dimension [`kron`] will build.
pub const DEFAULT_KRON_CAP: usize = 4096;

const HERMITIAN_TOL: f64 = 1e-12;

/// Real symmetric matrix; `m[(i, j)] == m[(j, i)]` holds bit-for-bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    m: DMatrix<f64>,
}

impl SymmetricMatrix {
    /// Validates exact symmetry.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        check_square(m.nrows(), m.ncols())?;
        for j in 0..m.ncols() {
            for i in (j + 1)..m.nrows() {
                if m[(i, j)] != m[(j, i)] {
                    return Err(Error::AsymmetricBeyondTolerance {
                        row: i,
                        col: j,
                        gap: (m[(i, j)] - m[(j, i)]).abs(),
                    });
                }
            }
        }
        Ok(Self { m })
    }

    /// Projects onto the symmetric matrices: `(M + Mᵀ)/2`.
    pub fn symmetrize(m: &DMatrix<f64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "symmetrize needs a square matrix");
        let p = m.nrows();
        let mut out = m.clone();
        for j in 0..p {
            for i in (j + 1)..p {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        Self { m: out }
    }

    pub fn identity(p: usize) -> Self {
        Self { m: DMatrix::identity(p, p) }
    }

    pub fn zeros(p: usize) -> Self {
        Self { m: DMatrix::zeros(p, p) }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self { m: DMatrix::from_diagonal(&DVector::from_column_slice(diag)) }
    }

    /// Builds from a function evaluated on the upper triangle and mirrored.
    pub fn from_fn(p: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = DMatrix::zeros(p, p);
        for j in 0..p {
            for i in 0..=j {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Self { m }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    /// Writes both `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.m[(i, j)] = v;
        self.m[(j, i)] = v;
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { m: &self.m * s }
    }

    pub fn to_hermitian(&self) -> HermitianMatrix {
        HermitianMatrix { m: self.m.map(|x| C64::new(x, 0.0)) }
    }

    /// Smallest eigenvalue (symmetric QR).
    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.m.clone()).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_positive_definite(&self) -> bool {
        cholesky(&self.m).is_ok()
    }

    pub fn inverse(&self) -> Result<SymmetricMatrix> {
        spd_inverse(&self.m)
    }
}

impl Serialize for SymmetricMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        rows_of(&self.m).serialize(s)
    }
}

impl<'de> Deserialize<'de> for SymmetricMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        let p = rows.len();
        if rows.iter().any(|r| r.len() != p) {
            return Err(serde::de::Error::custom("matrix rows must all have length p"));
        }
        let m = DMatrix::from_fn(p, p, |i, j| rows[i][j]);
        SymmetricMatrix::new(m).map_err(serde::de::Error::custom)
    }
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Complex Hermitian matrix; the diagonal is exactly real and `m[(i,j)] == conj(m[(j,i)])`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    m: DMatrix<C64>,
}

impl HermitianMatrix {
    /// Validates the Hermitian property to a relative tolerance of 1e-12 and then projects
    /// onto `(M + M†)/2`.
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        Self::with_tolerance(m, HERMITIAN_TOL)
    }

    pub fn with_tolerance(m: DMatrix<C64>, rel_tol: f64) -> Result<Self> {
        check_square(m.nrows(), m.ncols())?;
        let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let p = m.nrows();
        for j in 0..p {
            for i in j..p {
                let gap = (m[(i, j)] - m[(j, i)].conj()).norm();
                if gap > rel_tol * scale {
                    return Err(Error::NotHermitian { row: i, col: j, gap });
                }
            }
        }
        Ok(Self::project(&m))
    }

    /// `(M + M†)/2` without validation.
    pub fn project(m: &DMatrix<C64>) -> Self {
        let p = m.nrows();
        let mut out = m.clone();
        for j in 0..p {
            out[(j, j)] = C64::new(m[(j, j)].re, 0.0);
            for i in (j + 1)..p {
                let v = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
                out[(i, j)] = v;
                out[(j, i)] = v.conj();
            }
        }
        Self { m: out }
    }

    pub fn identity(p: usize) -> Self {
        Self { m: DMatrix::identity(p, p) }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let p = diag.len();
        Self { m: DMatrix::from_fn(p, p, |i, j| if i == j { C64::new(diag[i], 0.0) } else { C64::new(0.0, 0.0) }) }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn into_inner(self) -> DMatrix<C64> {
        self.m
    }

    pub fn real_part(&self) -> DMatrix<f64> {
        self.m.map(|z| z.re)
    }

    pub fn imag_part(&self) -> DMatrix<f64> {
        self.m.map(|z| z.im)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { m: self.m.map(|z| z * s) }
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.m[(i, i)].re).sum()
    }

    /// Ascending eigenvalues and the matching unitary eigenvector matrix.
    pub fn eigen(&self) -> (Vec<f64>, DMatrix<C64>) {
        let eig = SymmetricEigen::new(self.m.clone());
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(self.dim(), self.dim(), |i, j| eig.eigenvectors[(i, order[j])]);
        (values, vectors)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigen().0
    }

    /// `f(H)` for a real function of the (positive) spectrum, with the relative PD floor
    /// `pd_tol · λ_max`.
    pub fn spectral_map(&self, pd_tol: f64, f: impl Fn(f64) -> f64) -> Result<HermitianMatrix> {
        let (values, vectors) = self.eigen();
        let top = values.last().copied().unwrap_or(0.0);
        let floor = pd_tol * top.abs();
        if let Some(&low) = values.first() {
            if !(low > floor) || !(top > 0.0) {
                return Err(Error::NotPositiveDefinite(format!("smallest eigenvalue {low:e} <= floor {floor:e}")));
            }
        }
        let p = self.dim();
        let mut scaled = vectors.clone();
        for (k, &lam) in values.iter().enumerate() {
            let s = f(lam);
            for i in 0..p {
                scaled[(i, k)] *= s;
            }
        }
        Ok(Self::project(&(scaled * vectors.adjoint())))
    }

    pub fn inverse(&self) -> Result<HermitianMatrix> {
        self.spectral_map(DEFAULT_PD_TOL, |x| 1.0 / x)
    }

    pub fn is_positive_definite(&self) -> bool {
        let values = self.eigenvalues();
        let top = values.last().copied().unwrap_or(0.0);
        values.first().is_some_and(|&low| low > DEFAULT_PD_TOL * top.abs() && top > 0.0)
    }

    /// `A · H · A` for a real symmetric `A` (congruence).
    pub fn congruence(&self, a: &SymmetricMatrix) -> HermitianMatrix {
        let ac = a.as_matrix().map(|x| C64::new(x, 0.0));
        Self::project(&(&ac * &self.m * &ac))
    }
}

impl Serialize for HermitianMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> =
            (0..self.dim()).map(|i| self.m.row(i).iter().map(|z| [z.re, z.im]).collect()).collect();
        rows.serialize(s)
    }
}

fn check_square(rows: usize, cols: usize) -> Result<()> {
    if rows != cols || rows == 0 {
        return Err(Error::NonSquare { rows, cols });
    }
    Ok(())
}

/// The unique Hermitian positive-definite square root, via eigendecomposition.
///
/// `pd_tol` is relative to the largest eigenvalue.
pub fn hermitian_sqrt(h: &HermitianMatrix, pd_tol: f64) -> Result<HermitianMatrix> {
    h.spectral_map(pd_tol, f64::sqrt)
}

pub fn hermitian_inv_sqrt(h: &HermitianMatrix, pd_tol: f64) -> Result<HermitianMatrix> {
    h.spectral_map(pd_tol, |x| 1.0 / x.sqrt())
}

/// Lower Cholesky factor `C` with `C Cᵀ = M`; fails on any nonpositive or non-finite pivot.
pub fn cholesky(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_square(m.nrows(), m.ncols())?;
    let p = m.nrows();
    let mut c = DMatrix::<f64>::zeros(p, p);
    for j in 0..p {
        let mut pivot = m[(j, j)];
        for k in 0..j {
            pivot -= c[(j, k)] * c[(j, k)];
        }
        if !(pivot > 0.0) || !pivot.is_finite() {
            return Err(Error::NotPositiveDefinite(format!("pivot {j} is {pivot:e}")));
        }
        let d = pivot.sqrt();
        c[(j, j)] = d;
        for i in (j + 1)..p {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= c[(i, k)] * c[(j, k)];
            }
            c[(i, j)] = s / d;
        }
    }
    Ok(c)
}

/// Log-determinant of an SPD matrix as twice the sum of log Cholesky pivots.
pub fn logdet_spd(m: &SymmetricMatrix) -> Result<f64> {
    let c = cholesky(m.as_matrix())?;
    Ok(2.0 * c.diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

/// Inverse of an SPD matrix through its Cholesky factor, returned exactly symmetric.
pub fn spd_inverse(m: &DMatrix<f64>) -> Result<SymmetricMatrix> {
    let c = cholesky(m)?;
    Ok(SymmetricMatrix::symmetrize(&cholesky_inverse(&c)))
}

/// `(C Cᵀ)⁻¹` given the lower factor `C`.
pub(crate) fn cholesky_inverse(c: &DMatrix<f64>) -> DMatrix<f64> {
    let p = c.nrows();
    // Invert the triangular factor column by column, then form C⁻ᵀ C⁻¹.
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
    inv.transpose() * inv
}

/// Solves `M x = b` for each column of `b`, with `M = C Cᵀ`.
pub(crate) fn cholesky_solve(c: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let p = c.nrows();
    let mut x = b.clone();
    for col in 0..b.ncols() {
        for i in 0..p {
            let mut s = x[(i, col)];
            for k in 0..i {
                s -= c[(i, k)] * x[(k, col)];
            }
            x[(i, col)] = s / c[(i, i)];
        }
        for i in (0..p).rev() {
            let mut s = x[(i, col)];
            for k in (i + 1)..p {
                s -= c[(k, i)] * x[(k, col)];
            }
            x[(i, col)] = s / c[(i, i)];
        }
    }
    x
}

/// Kronecker product with block `(i, j)` equal to `A[i][j]·B`.
pub fn kron(a: &SymmetricMatrix, b: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    kron_capped(a, b, DEFAULT_KRON_CAP)
}

pub fn kron_capped(a: &SymmetricMatrix, b: &SymmetricMatrix, cap: usize) -> Result<SymmetricMatrix> {
    let dim = a.dim() * b.dim();
    if dim > cap {
        return Err(Error::DimensionOverflow { dim, cap });
    }
    // A ⊗ B is symmetric when both factors are; the product is bitwise symmetric because
    // each mirrored entry is the same pair of factors multiplied.
    Ok(SymmetricMatrix { m: a.as_matrix().kronecker(b.as_matrix()) })
}

/// Column-stacking vectorization; entry `(i, j)` lands at `i + p·j`.
pub fn vec_of(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

pub fn unvec(v: &DVector<f64>, rows: usize) -> DMatrix<f64> {
    assert_eq!(v.len() % rows, 0);
    DMatrix::from_column_slice(rows, v.len() / rows, v.as_slice())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixNorms {
    /// Element-wise maximum absolute entry.
    pub max_abs: f64,
    /// Maximum absolute row sum, the induced ∞-norm.
    pub row_sum: f64,
    pub frobenius: f64,
    /// Largest singular value.
    pub operator2: f64,
    /// Sum of absolute off-diagonal entries.
    pub l1_offdiag: f64,
}

pub fn norms<T>(m: &DMatrix<T>) -> MatrixNorms
where
    T: ComplexField<RealField = f64>,
{
    let mut max_abs = 0.0f64;
    let mut fro = 0.0;
    let mut off = 0.0;
    let mut row_sum = 0.0f64;
    for i in 0..m.nrows() {
        let mut r = 0.0;
        for j in 0..m.ncols() {
            let a = m[(i, j)].clone().modulus();
            max_abs = max_abs.max(a);
            fro += a * a;
            r += a;
            if i != j {
                off += a;
            }
        }
        row_sum = row_sum.max(r);
    }
    let operator2 = if m.is_empty() { 0.0 } else { m.clone().singular_values().iter().copied().fold(0.0, f64::max) };
    MatrixNorms { max_abs, row_sum, frobenius: fro.sqrt(), operator2, l1_offdiag: off }
}

pub fn max_abs<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> f64 {
    m.iter().map(|x| x.clone().modulus()).fold(0.0, f64::max)
}

/// The induced ∞-norm (maximum absolute row sum).
pub fn row_sum_norm<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> f64 {
    (0..m.nrows()).map(|i| m.row(i).iter().map(|x| x.clone().modulus()).sum::<f64>()).fold(0.0, f64::max)
}

pub fn l1_offdiag(m: &DMatrix<f64>) -> f64 {
    let mut s = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if i != j {
                s += m[(i, j)].abs();
            }
        }
    }
    s
}

/// A matrix as stored in a golden CSV file.
#[derive(Debug, Clone, PartialEq)]
pub enum GoldenMatrix {
    Real(DMatrix<f64>),
    Complex(DMatrix<C64>),
}

impl GoldenMatrix {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            GoldenMatrix::Real(m) => m.shape(),
            GoldenMatrix::Complex(m) => m.shape(),
        }
    }

    pub fn into_complex(self) -> DMatrix<C64> {
        match self {
            GoldenMatrix::Real(m) => m.map(|x| C64::new(x, 0.0)),
            GoldenMatrix::Complex(m) => m,
        }
    }
}

/// `re+imj` literal; the imaginary sign is always explicit.
pub fn format_complex(z: C64) -> String {
    let mut s = String::new();
    if z.im.is_sign_negative() {
        let _ = write!(s, "{}-{}j", z.re, -z.im);
    } else {
        let _ = write!(s, "{}+{}j", z.re, z.im);
    }
    s
}

pub fn parse_complex(text: &str) -> Option<C64> {
    let t = text.trim();
    let Some(body) = t.strip_suffix('j') else {
        return t.parse::<f64>().ok().map(|re| C64::new(re, 0.0));
    };
    let bytes = body.as_bytes();
    // Split at the last sign that is not a leading sign or an exponent sign.
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'))?;
    let re = body[..split].parse::<f64>().ok()?;
    let im = body[split..].trim_start_matches('+').parse::<f64>().ok()?;
    Some(C64::new(re, im))
}

/// Writes the golden-file format: `# rows,cols,complex={0,1}` then one CSV row per matrix row.
pub fn write_golden<W: Write>(mut w: W, m: &GoldenMatrix) -> std::io::Result<()> {
    let (rows, cols) = m.shape();
    let complex = matches!(m, GoldenMatrix::Complex(_)) as u8;
    writeln!(w, "# {rows},{cols},complex={complex}")?;
    for i in 0..rows {
        let line: Vec<String> = (0..cols)
            .map(|j| match m {
                GoldenMatrix::Real(r) => format!("{}", r[(i, j)]),
                GoldenMatrix::Complex(c) => format_complex(c[(i, j)]),
            })
            .collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn read_golden<R: BufRead>(r: R) -> Result<GoldenMatrix> {
    let mut lines = r.lines().enumerate();
    let (rows, cols, complex) = loop {
        let Some((k, line)) = lines.next() else {
            return Err(Error::Parse { line: 1, msg: "missing golden header".into() });
        };
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        break parse_golden_header(&line)
            .ok_or_else(|| Error::Parse { line: k + 1, msg: format!("bad golden header `{line}`") })?;
    };
    let mut data = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    for (k, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols {
            return Err(Error::Parse { line: k + 1, msg: format!("expected {cols} fields, found {}", fields.len()) });
        }
        for f in fields {
            let z = parse_complex(f).ok_or_else(|| Error::Parse { line: k + 1, msg: format!("bad number `{f}`") })?;
            if !complex && z.im != 0.0 {
                return Err(Error::Parse { line: k + 1, msg: "complex entry in a real golden file".into() });
            }
            data.push(z);
        }
        seen += 1;
    }
    if seen != rows {
        return Err(Error::Parse { line: seen + 2, msg: format!("expected {rows} rows, found {seen}") });
    }
    let m = DMatrix::from_row_iterator(rows, cols, data);
    Ok(if complex { GoldenMatrix::Complex(m) } else { GoldenMatrix::Real(m.map(|z| z.re)) })
}

fn parse_golden_header(line: &str) -> Option<(usize, usize, bool)> {
    let body = line.trim().strip_prefix('#')?.trim();
    let mut parts = body.split(',');
    let rows = parts.next()?.trim().parse().ok()?;
    let cols = parts.next()?.trim().parse().ok()?;
    let flag = parts.next()?.trim().strip_prefix("complex=")?;
    let complex = match flag {
        "0" => false,
        "1" => true,
        _ => return None,
    };
    Some((rows, cols, complex))
}
