//! Ground-truth networks: random graph generators, perturbed Laplacians, benchmark
//! adjacency loading and support extraction.

use std::collections::BTreeSet;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::matcore::{cholesky, max_abs, SymmetricMatrix};

/// Diagonal shift added to synthetic combinatorial Laplacians.
pub const SYNTHETIC_PERTURBATION: f64 = 0.1;
const MAX_RESAMPLES: usize = 20_000;

pub type Edge = (usize, usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Synthetic { generator: String, seed: u64, attempts: usize },
    Benchmark { name: String, sha256: String },
    Supplied,
}

/// A positive definite ground-truth matrix together with its sparsity pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaplacianSpec {
    pub matrix: SymmetricMatrix,
    pub edges: Vec<Edge>,
    pub max_degree: usize,
    pub perturbation: f64,
    pub provenance: Provenance,
}

impl LaplacianSpec {
    /// Wraps any symmetric PD matrix; the edge set is its off-diagonal pattern above `1e-12`.
    pub fn from_matrix(matrix: SymmetricMatrix, perturbation: f64, provenance: Provenance) -> Result<Self> {
        cholesky(matrix.as_matrix())?;
        let edges = support_of(&matrix, Some(1e-12));
        let max_degree = max_degree(matrix.dim(), &edges);
        Ok(Self { matrix, edges, max_degree, perturbation, provenance })
    }

    pub fn p(&self) -> usize {
        self.matrix.dim()
    }
}

/// Synthetic network families. `small_world.k` counts ring neighbours on each side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphKind {
    /// Edge probability `target_degree/(p−1)`; redrawn until the max degree is within one
    /// of the target.
    ErdosRenyi { p: usize, target_degree: usize },
    /// Watts–Strogatz; redrawn until the max degree equals `target_degree` when given.
    SmallWorld { p: usize, k: usize, beta: f64, target_degree: Option<usize> },
    /// Barabási–Albert; redrawn until the max degree is within one of `target_degree`.
    ScaleFree { p: usize, m_attach: usize, target_degree: Option<usize> },
    /// Chain `(i, i+1)` plus links to the fourth-nearest node `(i, i+4)`.
    GridChain { p: usize },
    /// Path graph `(i, i+1)`.
    Chain { p: usize },
}

impl GraphKind {
    /// The synthetic families at the degrees used in the experiments (4, 3, 9, 4), plus the plain chain.
    pub fn standard(name: &str, p: usize) -> Option<GraphKind> {
        Some(match name {
            "grid" | "grid_chain" => GraphKind::GridChain { p },
            "chain" => GraphKind::Chain { p },
            "small_world" => GraphKind::SmallWorld { p, k: 1, beta: 0.2, target_degree: Some(3) },
            "scale_free" => GraphKind::ScaleFree { p, m_attach: 2, target_degree: Some(9) },
            "erdos_renyi" => GraphKind::ErdosRenyi { p, target_degree: 4 },
            _ => return None,
        })
    }

    pub fn p(&self) -> usize {
        match *self {
            GraphKind::ErdosRenyi { p, .. }
            | GraphKind::SmallWorld { p, .. }
            | GraphKind::ScaleFree { p, .. }
            | GraphKind::GridChain { p }
            | GraphKind::Chain { p } => p,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            GraphKind::ErdosRenyi { .. } => "erdos_renyi",
            GraphKind::SmallWorld { .. } => "small_world",
            GraphKind::ScaleFree { .. } => "scale_free",
            GraphKind::GridChain { .. } => "grid_chain",
            GraphKind::Chain { .. } => "chain",
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::ParameterOutOfRange(msg));
        let p = self.p();
        if p < 2 {
            return bad(format!("graph needs p >= 2, got {p}"));
        }
        match *self {
            GraphKind::ErdosRenyi { target_degree, .. } if target_degree == 0 || target_degree >= p => {
                bad(format!("erdos_renyi target_degree must be in 1..{p}, got {target_degree}"))
            }
            GraphKind::SmallWorld { k, beta, .. } if k == 0 || 2 * k >= p || !(0.0..=1.0).contains(&beta) => {
                bad(format!("small_world needs 1 <= k < p/2 and beta in [0,1], got k={k}, beta={beta}"))
            }
            GraphKind::ScaleFree { m_attach, .. } if m_attach == 0 || m_attach >= p => {
                bad(format!("scale_free m_attach must be in 1..{p}, got {m_attach}"))
            }
            _ => Ok(()),
        }
    }
}

/// Builds `L = D − A + 0.1·I` for a random graph of the given kind.
pub fn gen_graph(kind: &GraphKind, seed: u64) -> Result<LaplacianSpec> {
    kind.validate()?;
    let p = kind.p();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (edges, attempts) = match *kind {
        GraphKind::GridChain { p } => (grid_chain_edges(p), 1),
        GraphKind::Chain { p } => ((0..p - 1).map(|i| (i, i + 1)).collect(), 1),
        GraphKind::ErdosRenyi { p, target_degree } => {
            let prob = target_degree as f64 / (p - 1) as f64;
            let lo = target_degree.saturating_sub(1);
            resample(&mut rng, p, |r| erdos_renyi_edges(r, p, prob), |d| (lo..=target_degree + 1).contains(&d))?
        }
        GraphKind::SmallWorld { p, k, beta, target_degree } => {
            resample(&mut rng, p, |r| small_world_edges(r, p, k, beta), |d| target_degree.is_none_or(|t| d == t))?
        }
        GraphKind::ScaleFree { p, m_attach, target_degree } => resample(
            &mut rng,
            p,
            |r| scale_free_edges(r, p, m_attach),
            |d| target_degree.is_none_or(|t| d + 1 >= t && d <= t + 1),
        )?,
    };
    let matrix = laplacian_from_edges(p, &edges, SYNTHETIC_PERTURBATION);
    let provenance = Provenance::Synthetic { generator: kind.name().into(), seed, attempts };
    let spec = LaplacianSpec::from_matrix(matrix, SYNTHETIC_PERTURBATION, provenance)?;
    debug_assert_eq!(spec.edges.len(), edges.len());
    Ok(spec)
}

fn resample<R: Rng>(
    rng: &mut R,
    p: usize,
    mut draw: impl FnMut(&mut R) -> BTreeSet<Edge>,
    accept: impl Fn(usize) -> bool,
) -> Result<(BTreeSet<Edge>, usize)> {
    for attempt in 1..=MAX_RESAMPLES {
        let edges = draw(rng);
        if accept(max_degree(p, &edges.iter().copied().collect::<Vec<_>>())) {
            return Ok((edges, attempt));
        }
    }
    Err(Error::ParameterOutOfRange(format!("no graph with the requested maximum degree after {MAX_RESAMPLES} draws")))
}

fn ordered(i: usize, j: usize) -> Edge {
    (i.min(j), i.max(j))
}

fn grid_chain_edges(p: usize) -> BTreeSet<Edge> {
    let mut e = BTreeSet::new();
    for i in 0..p {
        for step in [1, 4] {
            if i + step < p {
                e.insert((i, i + step));
            }
        }
    }
    e
}

fn erdos_renyi_edges<R: Rng>(rng: &mut R, p: usize, prob: f64) -> BTreeSet<Edge> {
    let mut e = BTreeSet::new();
    for i in 0..p {
        for j in i + 1..p {
            if rng.random::<f64>() < prob {
                e.insert((i, j));
            }
        }
    }
    e
}

fn small_world_edges<R: Rng>(rng: &mut R, p: usize, k: usize, beta: f64) -> BTreeSet<Edge> {
    // The ring closes only when it cannot create duplicate or self edges.
    let wrap = p >= 2 * k + 2;
    let mut e = BTreeSet::new();
    for i in 0..p {
        for step in 1..=k {
            if wrap || i + step < p {
                e.insert(ordered(i, (i + step) % p));
            }
        }
    }
    if beta == 0.0 {
        return e;
    }
    for step in 1..=k {
        for i in 0..p {
            let j = (i + step) % p;
            if !(wrap || i + step < p) || !e.contains(&ordered(i, j)) {
                continue;
            }
            if rng.random::<f64>() >= beta {
                continue;
            }
            let free: Vec<usize> = (0..p).filter(|&w| w != i && !e.contains(&ordered(i, w))).collect();
            if free.is_empty() {
                continue;
            }
            let w = free[rng.random_range(0..free.len())];
            e.remove(&ordered(i, j));
            e.insert(ordered(i, w));
        }
    }
    e
}

fn scale_free_edges<R: Rng>(rng: &mut R, p: usize, m: usize) -> BTreeSet<Edge> {
    let mut e = BTreeSet::new();
    // Each endpoint appears once per incident edge, so uniform picks are degree-weighted.
    let mut endpoints: Vec<usize> = Vec::new();
    let mut targets: Vec<usize> = (0..m).collect();
    for new in m..p {
        for &t in &targets {
            e.insert(ordered(new, t));
            endpoints.push(t);
            endpoints.push(new);
        }
        let mut chosen = BTreeSet::new();
        while chosen.len() < m.min(new + 1) {
            chosen.insert(endpoints[rng.random_range(0..endpoints.len())]);
        }
        targets = chosen.into_iter().collect();
    }
    e
}

fn max_degree(p: usize, edges: &[Edge]) -> usize {
    let mut deg = vec![0usize; p];
    for &(i, j) in edges {
        deg[i] += 1;
        deg[j] += 1;
    }
    deg.into_iter().max().unwrap_or(0)
}

fn laplacian_from_edges(p: usize, edges: &BTreeSet<Edge>, shift: f64) -> SymmetricMatrix {
    let mut m = SymmetricMatrix::identity(p).scale(shift);
    for &(i, j) in edges {
        m.set(i, j, -1.0);
        m.set(i, i, m.get(i, i) + 1.0);
        m.set(j, j, m.get(j, j) + 1.0);
    }
    m
}

/// `L* = A + ε·I` for a 0/1 adjacency matrix.
pub fn benchmark_laplacian(
    adjacency: &SymmetricMatrix,
    epsilon: f64,
    name: &str,
    sha256: &str,
) -> Result<LaplacianSpec> {
    let p = adjacency.dim();
    for i in 0..p {
        if adjacency.get(i, i) != 0.0 {
            return Err(Error::BadProblem(format!("adjacency diagonal entry {i} is nonzero")));
        }
    }
    if let Some(v) = adjacency.as_matrix().iter().find(|&&v| v != 0.0 && v != 1.0) {
        return Err(Error::BadProblem(format!("adjacency must be 0/1, found {v}")));
    }
    let shifted = SymmetricMatrix::new(adjacency.as_matrix() + nalgebra::DMatrix::identity(p, p) * epsilon)?;
    if cholesky(shifted.as_matrix()).is_err() {
        let needed = 1e-6 - adjacency.min_eigenvalue();
        return Err(Error::NotPositiveDefinite(format!(
            "A + {epsilon}·I is not positive definite; epsilon must be at least {needed:.6}"
        )));
    }
    let provenance = Provenance::Benchmark { name: name.into(), sha256: sha256.into() };
    LaplacianSpec::from_matrix(shifted, epsilon, provenance)
}

/// Benchmark networks with their published sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Benchmark {
    Power,
    Water,
    Brain,
}

const IEEE33_EDGES: &str = include_str!("../data/ieee33_edges.csv");

impl Benchmark {
    pub const ALL: [Benchmark; 3] = [Benchmark::Power, Benchmark::Water, Benchmark::Brain];

    pub fn name(self) -> &'static str {
        match self {
            Benchmark::Power => "power",
            Benchmark::Water => "water",
            Benchmark::Brain => "brain",
        }
    }

    pub fn parse(name: &str) -> Option<Benchmark> {
        Self::ALL.into_iter().find(|b| b.name() == name)
    }

    pub fn epsilon(self) -> f64 {
        match self {
            Benchmark::Brain => 3.0,
            _ => 2.0,
        }
    }

    /// Published `(p, |E|, d)`.
    pub fn expected_shape(self) -> (usize, usize, usize) {
        match self {
            Benchmark::Power => (33, 32, 3),
            Benchmark::Water => (121, 162, 6),
            Benchmark::Brain => (90, 141, 7),
        }
    }

    /// File looked up in the data directory for networks that are not bundled.
    pub fn file_name(self) -> &'static str {
        match self {
            Benchmark::Power => "ieee33_edges.csv",
            Benchmark::Water => "water_bellingham.csv",
            Benchmark::Brain => "brain_s001.csv",
        }
    }

    /// Reads the adjacency. The power network is bundled; the others are read from
    /// `data_dir` (or `$NETWHITTLE_DATA_DIR`, or `./data`) as edge lists or adjacency matrices.
    pub fn load_adjacency(self, data_dir: Option<&Path>) -> Result<(SymmetricMatrix, String)> {
        let bytes = match self {
            Benchmark::Power => IEEE33_EDGES.as_bytes().to_vec(),
            _ => {
                let path = self.locate(data_dir).ok_or_else(|| {
                    Error::Io(std::io::Error::new(
                        std::io::ErrorKind::NotFound,
                        format!(
                            "benchmark `{}` needs {} in the data directory (set NETWHITTLE_DATA_DIR)",
                            self.name(),
                            self.file_name()
                        ),
                    ))
                })?;
                std::fs::read(path)?
            }
        };
        let hash = hex::encode(Sha256::digest(&bytes));
        let loaded = read_adjacency(bytes.as_slice())?;
        Ok((loaded.adjacency, hash))
    }

    /// `A + ε·I` with the published `ε` when that is positive definite. Otherwise `ε` is raised
    /// so the smallest eigenvalue is [`SYNTHETIC_PERTURBATION`]; for trees such as the
    /// 33-bus feeder the adjacency spectrum is symmetric and exceeds 2 in magnitude.
    pub fn load(self, data_dir: Option<&Path>) -> Result<LaplacianSpec> {
        let (adjacency, hash) = self.load_adjacency(data_dir)?;
        let feasible = SYNTHETIC_PERTURBATION - adjacency.min_eigenvalue();
        let epsilon = if self.epsilon() > feasible { self.epsilon() } else { feasible };
        if epsilon != self.epsilon() {
            log::warn!(
                "benchmark {}: epsilon {} leaves A + epsilon·I indefinite, using {epsilon:.6}",
                self.name(),
                self.epsilon()
            );
        }
        benchmark_laplacian(&adjacency, epsilon, self.name(), &hash)
    }

    fn locate(self, data_dir: Option<&Path>) -> Option<PathBuf> {
        let env = std::env::var_os("NETWHITTLE_DATA_DIR").map(PathBuf::from);
        [data_dir.map(Path::to_path_buf), env, Some(PathBuf::from("data"))]
            .into_iter()
            .flatten()
            .map(|d| d.join(self.file_name()))
            .find(|p| p.is_file())
    }
}

/// Result of reading an adjacency file, with counts of silently repaired entries.
#[derive(Debug, Clone)]
pub struct AdjacencyLoad {
    pub adjacency: SymmetricMatrix,
    pub symmetrized_entries: usize,
    pub diagonal_zeroed: usize,
}

pub fn load_adjacency_csv(path: &Path) -> Result<AdjacencyLoad> {
    let file = std::fs::File::open(path)?;
    read_adjacency(std::io::BufReader::new(file))
}

/// Reads a square numeric matrix or an `i,j[,w]` edge list (0-indexed).
///
/// A header line starting with `i,j` selects the edge-list format. Without a header, rows of
/// two or three integer fields are an edge list unless they form a square 0/1 matrix.
pub fn read_adjacency<R: BufRead>(r: R) -> Result<AdjacencyLoad> {
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut edge_header = false;
    for (k, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = t.split(',').map(str::trim).collect();
        if rows.is_empty() && !edge_header && fields.iter().any(|f| f.parse::<f64>().is_err()) {
            let lower: Vec<String> = fields.iter().map(|f| f.to_ascii_lowercase()).collect();
            if lower.len() >= 2 && lower[0] == "i" && lower[1] == "j" {
                edge_header = true;
                continue;
            }
            return Err(Error::Parse { line: k + 1, msg: format!("unrecognized header `{t}`") });
        }
        let mut vals = Vec::with_capacity(fields.len());
        for f in &fields {
            let v: f64 = f.parse().map_err(|_| Error::Parse { line: k + 1, msg: format!("bad number `{f}`") })?;
            if !v.is_finite() {
                return Err(Error::Parse { line: k + 1, msg: format!("non-finite value `{f}`") });
            }
            vals.push(v);
        }
        rows.push((k + 1, vals));
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput("adjacency file has no data rows".into()));
    }
    let is_index = |v: f64| v >= 0.0 && v.fract() == 0.0;
    let square_01 = rows.iter().all(|(_, r)| r.len() == rows.len() && r.iter().all(|&v| v == 0.0 || v == 1.0));
    let edge_like = rows.iter().all(|(_, r)| (2..=3).contains(&r.len()) && is_index(r[0]) && is_index(r[1]));
    if edge_header || (edge_like && !square_01) {
        edge_list(&rows)
    } else {
        dense_matrix(&rows)
    }
}

fn edge_list(rows: &[(usize, Vec<f64>)]) -> Result<AdjacencyLoad> {
    let mut edges = Vec::new();
    let mut diagonal_zeroed = 0;
    let mut p = 0;
    for (line, r) in rows {
        if !(2..=3).contains(&r.len()) || r[..2].iter().any(|&v| v < 0.0 || v.fract() != 0.0) {
            return Err(Error::Parse { line: *line, msg: "expected `i,j[,w]` with 0-indexed integers".into() });
        }
        let (i, j) = (r[0] as usize, r[1] as usize);
        p = p.max(i + 1).max(j + 1);
        if r.get(2).is_some_and(|&w| w == 0.0) {
            continue;
        }
        if i == j {
            diagonal_zeroed += 1;
            continue;
        }
        edges.push(ordered(i, j));
    }
    let mut a = SymmetricMatrix::zeros(p);
    for (i, j) in edges {
        a.set(i, j, 1.0);
    }
    Ok(AdjacencyLoad { adjacency: a, symmetrized_entries: 0, diagonal_zeroed })
}

fn dense_matrix(rows: &[(usize, Vec<f64>)]) -> Result<AdjacencyLoad> {
    let p = rows.len();
    for (line, r) in rows {
        if r.len() != p {
            if rows.iter().all(|(_, r)| r.len() == rows[0].1.len()) {
                return Err(Error::NonSquare { rows: p, cols: r.len() });
            }
            return Err(Error::Parse { line: *line, msg: format!("expected {p} fields, found {}", r.len()) });
        }
    }
    let m = nalgebra::DMatrix::from_fn(p, p, |i, j| rows[i].1[j]);
    let weighted = m.iter().any(|&v| v != 0.0 && v != 1.0);
    let mut symmetrized_entries = 0;
    for i in 0..p {
        for j in i + 1..p {
            let (a, b) = (m[(i, j)], m[(j, i)]);
            if weighted {
                let gap = (a - b).abs();
                if gap > 1e-9 * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::AsymmetricBeyondTolerance { row: i, col: j, gap });
                }
            } else if (a != 0.0) != (b != 0.0) {
                symmetrized_entries += 1;
            }
        }
    }
    let diagonal_zeroed = (0..p).filter(|&i| m[(i, i)] != 0.0).count();
    let adjacency =
        SymmetricMatrix::from_fn(p, |i, j| if i != j && (m[(i, j)] != 0.0 || m[(j, i)] != 0.0) { 1.0 } else { 0.0 });
    if symmetrized_entries > 0 {
        log::warn!("adjacency: {symmetrized_entries} one-sided entries symmetrized");
    }
    if diagonal_zeroed > 0 {
        log::warn!("adjacency: {diagonal_zeroed} diagonal entries zeroed");
    }
    Ok(AdjacencyLoad { adjacency, symmetrized_entries, diagonal_zeroed })
}

/// Relative threshold used by [`support_of`] when none is given.
pub const DEFAULT_SUPPORT_REL_TOL: f64 = 1e-5;

/// Off-diagonal pattern `{(i,j): i<j, |M_ij| > tol}`; `tol` defaults to `1e-5·max_abs(M)`.
pub fn support_of(m: &SymmetricMatrix, tol: Option<f64>) -> Vec<Edge> {
    let tol = tol.unwrap_or_else(|| DEFAULT_SUPPORT_REL_TOL * max_abs(m.as_matrix()));
    let p = m.dim();
    let mut out = Vec::new();
    for i in 0..p {
        for j in i + 1..p {
            if m.get(i, j).abs() > tol {
                out.push((i, j));
            }
        }
    }
    out
}
