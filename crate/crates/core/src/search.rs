//! Greedy penalized search over uncoloured graphs using the score matching
//! objective `J_λ(L) = −tr(Ǩ)/2 + λ d`.
//!
//! The search starts from the maximum-weight spanning tree on squared
//! correlations, adds edges in decreasing squared-correlation order until
//! the first candidate that does not improve `J_λ`, then removes edges in
//! sweeps until no removal improves it.

use std::collections::{BTreeSet, HashSet};

use nalgebra::{DMatrix, DVector};

use crate::concentration::FitResult;
use crate::data::{scatter_matrix, squared_correlations};
use crate::error::{Error, Result};
use crate::estimability::gram_entry;
use crate::linalg;
use crate::model_space::ColouredGraph;
use crate::sym::SymMatrix;

pub type Edge = (usize, usize);

/// `J_2(Ǩ)/n + λ d`.
pub fn penalized_objective(fit: &FitResult, n: usize, lambda: f64, d: usize) -> f64 {
    fit.j2 / n as f64 + lambda * d as f64
}

/// `√p · ln(ln(np)) / (2n)`; requires `np > e`.
pub fn default_lambda(n: usize, p: usize) -> Result<f64> {
    let np = (n * p) as f64;
    if !(np > std::f64::consts::E) {
        return Err(Error::InvalidArgument(format!("default λ needs n·p > e, got n·p = {np}")));
    }
    Ok((p as f64).sqrt() * np.ln().ln() / (2.0 * n as f64))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lambda {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    pub lambda: Lambda,
    pub center: bool,
    pub improvement_tol: f64,
    /// Repeat backward sweeps until one removes nothing; otherwise a
    /// single sweep.
    pub backward_fixed_point: bool,
    /// Update the Gram matrix by one row/column per move instead of
    /// rebuilding it.
    pub incremental_gram: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            lambda: Lambda::Auto,
            center: true,
            improvement_tol: 1e-12,
            backward_fixed_point: true,
            incremental_gram: true,
        }
    }
}

/// Maximum-weight spanning tree on weights `r2[(i, j)]`, Kruskal with ties
/// broken by lexicographic edge order. Edges are returned sorted.
pub fn kruskal_tree_init(r2: &SymMatrix) -> Vec<Edge> {
    let p = r2.dim();
    if p < 2 {
        return Vec::new();
    }
    let mut edges: Vec<Edge> = (0..p).flat_map(|i| ((i + 1)..p).map(move |j| (i, j))).collect();
    edges.sort_by(|&a, &b| r2.get(b.0, b.1).total_cmp(&r2.get(a.0, a.1)).then(a.cmp(&b)));
    let mut parent: Vec<usize> = (0..p).collect();
    fn root(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut tree = Vec::with_capacity(p - 1);
    for (i, j) in edges {
        let (ri, rj) = (root(&mut parent, i), root(&mut parent, j));
        if ri != rj {
            parent[ri] = rj;
            tree.push((i, j));
            if tree.len() == p - 1 {
                break;
            }
        }
    }
    tree.sort_unstable();
    tree
}

/// Sufficient statistics shared by every candidate fit.
#[derive(Debug, Clone)]
pub struct SearchData {
    pub w: SymMatrix,
    pub r2: SymMatrix,
    pub n: usize,
    pub lambda: f64,
}

impl SearchData {
    pub fn from_data(data: &DMatrix<f64>, config: &SearchConfig) -> Result<Self> {
        let (n, p) = data.shape();
        if n < 1 || p < 2 {
            return Err(Error::InvalidArgument(format!("search needs n >= 1 and p >= 2, got n = {n}, p = {p}")));
        }
        let w = scatter_matrix(data, config.center)?;
        Self::from_scatter(w, n, config)
    }

    pub fn from_scatter(w: SymMatrix, n: usize, config: &SearchConfig) -> Result<Self> {
        let r2 = squared_correlations(&w)?;
        let lambda = match config.lambda {
            Lambda::Auto => default_lambda(n, w.dim())?,
            Lambda::Fixed(l) if l >= 0.0 => l,
            Lambda::Fixed(l) => return Err(Error::InvalidArgument(format!("λ must be >= 0, got {l}"))),
        };
        Ok(SearchData { w, r2, n, lambda })
    }

    pub fn p(&self) -> usize {
        self.w.dim()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    Init,
    Add,
    Remove,
}

impl Move {
    pub fn as_str(self) -> &'static str {
        match self {
            Move::Init => "init",
            Move::Add => "add",
            Move::Remove => "remove",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub mv: Move,
    pub edge: Option<Edge>,
    pub before: f64,
    /// `NaN` when the candidate was not estimable.
    pub after: f64,
    pub accepted: bool,
    /// Backward sweep number (0 for init and forward moves).
    pub sweep: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub edges: Vec<Edge>,
    pub objective: f64,
    pub lambda: f64,
    pub trace: Vec<TraceEntry>,
    pub fits_evaluated: usize,
}

impl SearchResult {
    pub fn graph(&self, p: usize) -> ColouredGraph {
        ColouredGraph::uncoloured(p, &self.edges).expect("search produces valid edges")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Generator {
    Vertex(usize),
    Edge(usize, usize),
}

impl Generator {
    fn entries(self) -> Vec<(usize, usize, f64)> {
        match self {
            Generator::Vertex(i) => vec![(i, i, 1.0)],
            Generator::Edge(i, j) => vec![(i, j, 1.0), (j, i, 1.0)],
        }
    }
}

/// Gram system of an uncoloured graph, generators ordered vertices first,
/// then edges lexicographically (the same order as
/// `ModelSpace::from_graph(&ColouredGraph::uncoloured(p, sorted_edges))`).
#[derive(Debug, Clone)]
struct GraphGram {
    gens: Vec<Generator>,
    entries: Vec<Vec<(usize, usize, f64)>>,
    m: DMatrix<f64>,
}

impl GraphGram {
    fn entry(&self, data: &SearchData, u: usize, v: usize) -> f64 {
        let (a, b) = if u <= v { (u, v) } else { (v, u) };
        gram_entry(&self.entries[a], &data.w, &self.entries[b], data.n)
    }

    fn build(p: usize, edges: &BTreeSet<Edge>, data: &SearchData) -> Self {
        let gens: Vec<Generator> = (0..p)
            .map(Generator::Vertex)
            .chain(edges.iter().map(|&(i, j)| Generator::Edge(i, j)))
            .collect();
        let entries = gens.iter().map(|g| g.entries()).collect();
        let d = gens.len();
        let mut out = GraphGram { gens, entries, m: DMatrix::zeros(d, d) };
        for u in 0..d {
            for v in u..d {
                let e = out.entry(data, u, v);
                out.m[(u, v)] = e;
                out.m[(v, u)] = e;
            }
        }
        out
    }

    fn with_edge(&self, edge: Edge, data: &SearchData) -> Self {
        let g = Generator::Edge(edge.0, edge.1);
        let pos = self.gens.binary_search(&g).expect_err("edge already present");
        let mut gens = self.gens.clone();
        gens.insert(pos, g);
        let mut entries = self.entries.clone();
        entries.insert(pos, g.entries());
        let d = gens.len();
        let old = |k: usize| if k < pos { k } else { k - 1 };
        let mut out = GraphGram { gens, entries, m: DMatrix::zeros(d, d) };
        for u in 0..d {
            for v in u..d {
                let e = if u == pos || v == pos { out.entry(data, u, v) } else { self.m[(old(u), old(v))] };
                out.m[(u, v)] = e;
                out.m[(v, u)] = e;
            }
        }
        out
    }

    fn without_edge(&self, edge: Edge) -> Self {
        let g = Generator::Edge(edge.0, edge.1);
        let pos = self.gens.binary_search(&g).expect("edge present");
        let mut gens = self.gens.clone();
        gens.remove(pos);
        let mut entries = self.entries.clone();
        entries.remove(pos);
        GraphGram { gens, entries, m: self.m.clone().remove_row(pos).remove_column(pos) }
    }

    /// Solves the SME system and returns `J_λ`.
    fn objective(&self, data: &SearchData) -> Result<f64> {
        let rhs = DVector::from_iterator(
            self.gens.len(),
            self.gens.iter().map(|g| if matches!(g, Generator::Vertex(_)) { 1.0 } else { 0.0 }),
        );
        let theta = linalg::solve_symmetric(&self.m, &(rhs * data.n as f64))?;
        let trace: f64 = self
            .gens
            .iter()
            .zip(theta.iter())
            .filter(|(g, _)| matches!(g, Generator::Vertex(_)))
            .map(|(_, t)| t)
            .sum();
        Ok(-0.5 * trace + data.lambda * self.gens.len() as f64)
    }
}

/// Current graph plus its fitted Gram system and the move log.
#[derive(Debug, Clone)]
pub struct SearchState {
    pub edges: BTreeSet<Edge>,
    pub objective: f64,
    pub trace: Vec<TraceEntry>,
    pub fits_evaluated: usize,
    gram: GraphGram,
    incremental: bool,
}

impl SearchState {
    /// Fits the Kruskal tree.
    pub fn from_tree(data: &SearchData, incremental: bool) -> Result<Self> {
        let edges: BTreeSet<Edge> = kruskal_tree_init(&data.r2).into_iter().collect();
        Self::from_edges(data, edges, incremental)
    }

    pub fn from_edges(data: &SearchData, edges: BTreeSet<Edge>, incremental: bool) -> Result<Self> {
        let gram = GraphGram::build(data.p(), &edges, data);
        let objective = gram.objective(data)?;
        Ok(SearchState {
            edges,
            objective,
            trace: vec![TraceEntry {
                mv: Move::Init,
                edge: None,
                before: f64::NAN,
                after: objective,
                accepted: true,
                sweep: 0,
            }],
            fits_evaluated: 1,
            gram,
            incremental,
        })
    }

    fn candidate(&self, data: &SearchData, mv: Move, edge: Edge) -> (BTreeSet<Edge>, GraphGram) {
        let mut edges = self.edges.clone();
        let gram = match mv {
            Move::Add => {
                edges.insert(edge);
                if self.incremental { self.gram.with_edge(edge, data) } else { GraphGram::build(data.p(), &edges, data) }
            }
            Move::Remove => {
                edges.remove(&edge);
                if self.incremental { self.gram.without_edge(edge) } else { GraphGram::build(data.p(), &edges, data) }
            }
            Move::Init => unreachable!("init is not a candidate move"),
        };
        (edges, gram)
    }

    /// Evaluates one move, applies it when it improves `J_λ` by more than
    /// `tol`, and logs it. Returns whether it was accepted.
    fn try_move(&mut self, data: &SearchData, mv: Move, edge: Edge, tol: f64, sweep: usize) -> bool {
        let (edges, gram) = self.candidate(data, mv, edge);
        self.fits_evaluated += 1;
        let after = gram.objective(data).unwrap_or(f64::NAN);
        let accepted = after.is_finite() && self.objective - after > tol;
        self.trace.push(TraceEntry { mv, edge: Some(edge), before: self.objective, after, accepted, sweep });
        if accepted {
            self.edges = edges;
            self.gram = gram;
            self.objective = after;
        }
        accepted
    }

    pub fn result(&self, data: &SearchData) -> SearchResult {
        SearchResult {
            edges: self.edges.iter().copied().collect(),
            objective: self.objective,
            lambda: data.lambda,
            trace: self.trace.clone(),
            fits_evaluated: self.fits_evaluated,
        }
    }
}

fn r2_order(data: &SearchData, edges: &mut [Edge], descending: bool) {
    edges.sort_by(|&a, &b| {
        let (wa, wb) = (data.r2.get(a.0, a.1), data.r2.get(b.0, b.1));
        let ord = if descending { wb.total_cmp(&wa) } else { wa.total_cmp(&wb) };
        ord.then(a.cmp(&b))
    });
}

/// Adds absent edges in decreasing `r2` order, stopping at the first
/// candidate that fails to improve `J_λ` (a non-estimable candidate counts
/// as a failure).
pub fn forward_search(mut state: SearchState, data: &SearchData, config: &SearchConfig) -> SearchState {
    let p = data.p();
    let mut candidates: Vec<Edge> = (0..p)
        .flat_map(|i| ((i + 1)..p).map(move |j| (i, j)))
        .filter(|e| !state.edges.contains(e))
        .collect();
    r2_order(data, &mut candidates, true);
    let mut seen: HashSet<BTreeSet<Edge>> = HashSet::new();
    for e in candidates {
        let mut next = state.edges.clone();
        next.insert(e);
        if !seen.insert(next) {
            continue;
        }
        if !state.try_move(data, Move::Add, e, config.improvement_tol, 0) {
            break;
        }
    }
    state
}

/// Sweeps over present edges in increasing `r2` order, removing each edge
/// whose removal improves `J_λ`. Sweeps repeat until one removes nothing
/// unless `backward_fixed_point` is off.
pub fn backward_search(mut state: SearchState, data: &SearchData, config: &SearchConfig) -> SearchState {
    let mut seen: HashSet<BTreeSet<Edge>> = HashSet::new();
    let mut sweep = 0;
    loop {
        sweep += 1;
        let mut order: Vec<Edge> = state.edges.iter().copied().collect();
        r2_order(data, &mut order, false);
        let mut removed = false;
        for e in order {
            let mut next = state.edges.clone();
            next.remove(&e);
            if !seen.insert(next) {
                continue;
            }
            removed |= state.try_move(data, Move::Remove, e, config.improvement_tol, sweep);
        }
        if !removed || !config.backward_fixed_point {
            break;
        }
    }
    state
}

/// Full pipeline on an `n × p` data matrix (rows are observations).
pub fn search(data: &DMatrix<f64>, config: &SearchConfig) -> Result<SearchResult> {
    let summary = SearchData::from_data(data, config)?;
    search_with(&summary, config)
}

pub fn search_with(summary: &SearchData, config: &SearchConfig) -> Result<SearchResult> {
    let state = SearchState::from_tree(summary, config.incremental_gram)?;
    let state = forward_search(state, summary, config);
    let state = backward_search(state, summary, config);
    Ok(state.result(summary))
}
