//! Linear subspaces of symmetric matrices and the coloured graphs that
//! generate them.

use std::collections::BTreeSet;

use crate::error::{check_dim, Error, Result};
use crate::sym::{jordan_product, trace_inner, SymMatrix};

/// Relative tolerance for generator orthogonality and membership checks.
pub const MEMBERSHIP_TOL: f64 = 1e-10;

/// Vertex and edge colour classes over vertices `0..p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColouredGraph {
    p: usize,
    vertex_classes: Vec<Vec<usize>>,
    edge_classes: Vec<Vec<(usize, usize)>>,
}

impl ColouredGraph {
    /// Validates the partitions. Edges are stored with the smaller endpoint first.
    pub fn new(
        p: usize,
        vertex_classes: Vec<Vec<usize>>,
        edge_classes: Vec<Vec<(usize, usize)>>,
    ) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidGraph("graph needs at least one vertex".into()));
        }
        let mut seen = vec![false; p];
        for class in &vertex_classes {
            if class.is_empty() {
                return Err(Error::InvalidGraph("empty vertex class".into()));
            }
            for &v in class {
                if v >= p {
                    return Err(Error::InvalidGraph(format!("vertex {v} out of range 0..{p}")));
                }
                if std::mem::replace(&mut seen[v], true) {
                    return Err(Error::InvalidGraph(format!("vertex {v} appears in two classes")));
                }
            }
        }
        if let Some(v) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidGraph(format!("vertex {v} is in no class")));
        }

        let mut edges_seen = BTreeSet::new();
        let mut normalized = Vec::with_capacity(edge_classes.len());
        for class in edge_classes {
            if class.is_empty() {
                return Err(Error::InvalidGraph("empty edge class".into()));
            }
            let mut out = Vec::with_capacity(class.len());
            for (a, b) in class {
                if a >= p || b >= p {
                    return Err(Error::InvalidGraph(format!("edge ({a}, {b}) out of range 0..{p}")));
                }
                if a == b {
                    return Err(Error::InvalidGraph(format!("self-loop at vertex {a}")));
                }
                let e = (a.min(b), a.max(b));
                if !edges_seen.insert(e) {
                    return Err(Error::InvalidGraph(format!("duplicate edge ({}, {})", e.0, e.1)));
                }
                out.push(e);
            }
            normalized.push(out);
        }
        Ok(ColouredGraph { p, vertex_classes, edge_classes: normalized })
    }

    /// Graph with every vertex and every edge in its own class.
    pub fn uncoloured(p: usize, edges: &[(usize, usize)]) -> Result<Self> {
        Self::new(p, (0..p).map(|v| vec![v]).collect(), edges.iter().map(|&e| vec![e]).collect())
    }

    pub fn num_vertices(&self) -> usize {
        self.p
    }

    pub fn vertex_classes(&self) -> &[Vec<usize>] {
        &self.vertex_classes
    }

    pub fn edge_classes(&self) -> &[Vec<(usize, usize)>] {
        &self.edge_classes
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edge_classes.iter().flatten().copied()
    }

    pub fn num_edges(&self) -> usize {
        self.edge_classes.iter().map(Vec::len).sum()
    }

    /// Number of parameters `|V| + |E|` (classes, not vertices/edges).
    pub fn num_classes(&self) -> usize {
        self.vertex_classes.len() + self.edge_classes.len()
    }
}

/// Uncoloured `s × s` lattice on `p = s²` vertices.
///
/// With 1-based vertex labels `i`, the edges are `{i, i+s}` and
/// `{i, i+1}` when `i mod s != 0`.
pub fn lattice_graph(s: usize) -> Result<ColouredGraph> {
    if s < 2 {
        return Err(Error::InvalidArgument(format!("lattice side must be at least 2, got {s}")));
    }
    ColouredGraph::uncoloured(s * s, &lattice_edges(s))
}

pub(crate) fn lattice_edges(s: usize) -> Vec<(usize, usize)> {
    let p = s * s;
    let mut edges = Vec::with_capacity(2 * s * (s - 1));
    for i in 1..=p {
        if i % s != 0 {
            edges.push((i - 1, i));
        }
        if i + s <= p {
            edges.push((i - 1, i + s - 1));
        }
    }
    edges.sort_unstable();
    edges
}

/// Circular autoregression of order `q` on a ring of `p` variables: one
/// vertex class and one edge class per circular distance `1..=q`.
pub fn circular_ar_graph(p: usize, q: usize) -> Result<ColouredGraph> {
    if q == 0 || 2 * q >= p {
        return Err(Error::InvalidArgument(format!(
            "circular AR order must satisfy 1 <= q < p/2 (p = {p}, q = {q})"
        )));
    }
    let edge_classes = (1..=q).map(|k| (0..p).map(|i| (i, (i + k) % p)).collect()).collect();
    ColouredGraph::new(p, vec![(0..p).collect()], edge_classes)
}

/// Four-cycle `0-1-3-2-0`, the `s = 2` lattice.
pub fn four_cycle_graph() -> ColouredGraph {
    lattice_graph(2).expect("s = 2 is valid")
}

/// Symmetry model for five exam-mark variables in the column order
/// (mechanics, vectors, algebra, analysis, statistics).
pub fn mathmarks_graph() -> ColouredGraph {
    ColouredGraph::new(
        5,
        vec![vec![2], vec![1, 3], vec![0, 4]],
        vec![vec![(0, 1), (0, 2)], vec![(3, 4), (2, 3)], vec![(2, 4), (1, 2)]],
    )
    .expect("built-in graph is valid")
}

/// Coordinates of a matrix in the generator basis of a [`ModelSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients(pub Vec<f64>);

impl Coefficients {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// A `d`-dimensional subspace `L` of symmetric `p × p` matrices with an
/// orthogonal generator basis.
#[derive(Debug, Clone)]
pub struct ModelSpace {
    p: usize,
    generators: Vec<SymMatrix>,
    labels: Vec<String>,
    entries: Vec<Vec<(usize, usize, f64)>>,
    sq_norms: Vec<f64>,
    traces: Vec<f64>,
}

impl ModelSpace {
    /// Accepts a generator list as given; non-orthogonal or zero generators
    /// are rejected rather than orthogonalized.
    pub fn new(p: usize, generators: Vec<SymMatrix>, labels: Vec<String>) -> Result<Self> {
        check_dim(generators.len(), labels.len())?;
        let tp = p * (p + 1) / 2;
        if generators.len() > tp {
            return Err(Error::InvalidModelSpace(format!(
                "{} generators exceed dim Sym({p}) = {tp}",
                generators.len()
            )));
        }
        for g in &generators {
            check_dim(p, g.dim())?;
        }
        let sq_norms: Vec<f64> = generators.iter().map(|g| trace_inner(g, g).unwrap()).collect();
        for (u, &n) in sq_norms.iter().enumerate() {
            if n == 0.0 {
                return Err(Error::InvalidModelSpace(format!("generator {u} is zero")));
            }
        }
        for u in 0..generators.len() {
            for v in (u + 1)..generators.len() {
                let ip = trace_inner(&generators[u], &generators[v]).unwrap();
                if ip.abs() > MEMBERSHIP_TOL * (sq_norms[u] * sq_norms[v]).sqrt() {
                    return Err(Error::InvalidModelSpace(format!(
                        "generators {u} and {v} are not orthogonal (inner product {ip:.3e})"
                    )));
                }
            }
        }
        let entries = generators.iter().map(SymMatrix::nonzeros).collect();
        let traces = generators.iter().map(SymMatrix::trace).collect();
        Ok(ModelSpace { p, generators, labels, entries, sq_norms, traces })
    }

    /// One diagonal 0/1 generator per vertex class, then one symmetric 0/1
    /// generator per edge class.
    pub fn from_graph(g: &ColouredGraph) -> Self {
        let p = g.num_vertices();
        let mut generators = Vec::with_capacity(g.num_classes());
        let mut labels = Vec::with_capacity(g.num_classes());
        for class in g.vertex_classes() {
            let mut m = SymMatrix::zeros(p);
            for &v in class {
                m.set(v, v, 1.0);
            }
            generators.push(m);
            let names: Vec<String> = class.iter().map(usize::to_string).collect();
            labels.push(format!("v:{}", names.join(",")));
        }
        for class in g.edge_classes() {
            let mut m = SymMatrix::zeros(p);
            for &(a, b) in class {
                m.set(a, b, 1.0);
            }
            generators.push(m);
            let names: Vec<String> = class.iter().map(|(a, b)| format!("{a}-{b}")).collect();
            labels.push(format!("e:{}", names.join(",")));
        }
        ModelSpace::new(p, generators, labels).expect("coloured graph generators are orthogonal")
    }

    /// Diagonal matrices.
    pub fn diagonal(p: usize) -> Self {
        Self::from_graph(&ColouredGraph::uncoloured(p, &[]).expect("valid"))
    }

    /// All of `Sym(p)`.
    pub fn full(p: usize) -> Self {
        let edges: Vec<(usize, usize)> =
            (0..p).flat_map(|i| ((i + 1)..p).map(move |j| (i, j))).collect();
        Self::from_graph(&ColouredGraph::uncoloured(p, &edges).expect("valid"))
    }

    /// Four-dimensional Jordan subalgebra of `Sym(4)` of matrices
    ///
    /// ```text
    /// [ a  c  0  f ]
    /// [ c  b -f  0 ]
    /// [ 0 -f  a  c ]
    /// [ f  0  c  b ]
    /// ```
    ///
    /// It satisfies the dimension bound at `n = 1` yet is not 1-estimable.
    pub fn jordan_counterexample() -> Self {
        let build = |entries: &[(usize, usize, f64)]| {
            let mut m = SymMatrix::zeros(4);
            for &(i, j, v) in entries {
                m.set(i, j, v);
            }
            m
        };
        let a = build(&[(0, 0, 1.0), (2, 2, 1.0)]);
        let b = build(&[(1, 1, 1.0), (3, 3, 1.0)]);
        let c = build(&[(0, 1, 1.0), (2, 3, 1.0)]);
        let f = build(&[(0, 3, 1.0), (1, 2, -1.0)]);
        ModelSpace::new(4, vec![a, b, c, f], ["a", "b", "c", "f"].map(String::from).to_vec())
            .expect("generators are orthogonal")
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.p
    }

    /// `d = dim L`.
    #[inline]
    pub fn dim(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[SymMatrix] {
        &self.generators
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Nonzero entries of generator `u`, both triangles.
    pub fn generator_entries(&self, u: usize) -> &[(usize, usize, f64)] {
        &self.entries[u]
    }

    /// `tr(e^u)` for every generator.
    pub fn generator_traces(&self) -> &[f64] {
        &self.traces
    }

    pub fn generator_sq_norms(&self) -> &[f64] {
        &self.sq_norms
    }

    /// Projection coordinates `⟨e^u, M⟩ / ⟨e^u, e^u⟩`.
    pub fn coordinates(&self, m: &SymMatrix) -> Result<Vec<f64>> {
        check_dim(self.p, m.dim())?;
        Ok(self
            .entries
            .iter()
            .zip(&self.sq_norms)
            .map(|(ent, n)| ent.iter().map(|&(i, j, v)| v * m.get(i, j)).sum::<f64>() / n)
            .collect())
    }

    /// Orthogonal projection `Π_L(M)`.
    pub fn project(&self, m: &SymMatrix) -> Result<SymMatrix> {
        let coords = self.coordinates(m)?;
        self.to_matrix(&Coefficients(coords))
    }

    /// `Σ_u θ_u e^u`.
    pub fn to_matrix(&self, theta: &Coefficients) -> Result<SymMatrix> {
        check_dim(self.dim(), theta.len())?;
        let mut out = SymMatrix::zeros(self.p);
        for (ent, &t) in self.entries.iter().zip(&theta.0) {
            for &(i, j, v) in ent {
                if i <= j {
                    out.set(i, j, out.get(i, j) + t * v);
                }
            }
        }
        Ok(out)
    }

    /// Coordinates of `K`, failing when `K` is not in `L`.
    pub fn from_matrix(&self, k: &SymMatrix) -> Result<Coefficients> {
        let theta = Coefficients(self.coordinates(k)?);
        let residual = k.sub(&self.to_matrix(&theta)?)?.frobenius_norm();
        if residual > MEMBERSHIP_TOL * k.frobenius_norm() {
            return Err(Error::NotInModelSpace { residual });
        }
        Ok(theta)
    }

    pub fn contains_identity(&self) -> bool {
        let id = SymMatrix::identity(self.p);
        let res = id.sub(&self.project(&id).unwrap()).unwrap().frobenius_norm();
        res <= MEMBERSHIP_TOL * (self.p as f64).sqrt()
    }

    /// Whether `L` is closed under the Jordan product, tested pairwise on
    /// generators.
    pub fn is_jordan_subalgebra(&self) -> bool {
        for u in 0..self.dim() {
            for v in u..self.dim() {
                let prod = jordan_product(&self.generators[u], &self.generators[v]).unwrap();
                let res = prod.sub(&self.project(&prod).unwrap()).unwrap().frobenius_norm();
                if res > MEMBERSHIP_TOL * (1.0 + prod.frobenius_norm()) {
                    return false;
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(p: usize, rng: &mut ChaCha8Rng) -> SymMatrix {
        SymMatrix::from_upper_fn(p, |_, _| rng.random_range(-2.0..2.0)).unwrap()
    }

    #[test]
    fn graph_dimensions() {
        let four = four_cycle_graph();
        assert_eq!(ModelSpace::from_graph(&four).dim(), 8);
        assert_eq!(ModelSpace::from_graph(&mathmarks_graph()).dim(), 6);
        let one = ColouredGraph::new(3, vec![vec![0, 1, 2]], vec![]).unwrap();
        let l = ModelSpace::from_graph(&one);
        assert_eq!(l.dim(), 1);
        assert_eq!(l.generators()[0], SymMatrix::identity(3));
    }

    #[test]
    fn vertex_generators_sum_to_identity() {
        let l = ModelSpace::from_graph(&mathmarks_graph());
        let mut sum = SymMatrix::zeros(5);
        for g in &l.generators()[..3] {
            sum = sum.add(g).unwrap();
        }
        assert_eq!(sum, SymMatrix::identity(5));
        assert_eq!(l.project(&SymMatrix::identity(5)).unwrap(), SymMatrix::identity(5));
    }

    #[test]
    fn invalid_graphs() {
        assert!(ColouredGraph::new(3, vec![vec![0, 1]], vec![]).is_err());
        assert!(ColouredGraph::new(3, vec![vec![0, 1], vec![1, 2]], vec![]).is_err());
        assert!(ColouredGraph::new(2, vec![vec![0, 1], vec![]], vec![]).is_err());
        assert!(ColouredGraph::new(2, vec![vec![0, 1]], vec![vec![(0, 0)]]).is_err());
        assert!(ColouredGraph::new(2, vec![vec![0, 1]], vec![vec![(0, 1)], vec![(1, 0)]]).is_err());
        assert!(ColouredGraph::new(2, vec![vec![0, 1]], vec![vec![(0, 2)]]).is_err());
    }

    #[test]
    fn projection_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = random_sym(4, &mut rng);
        assert!(ModelSpace::full(4).project(&m).unwrap().max_abs_diff(&m) < 1e-15);

        let w = SymMatrix::from_rows(&[&[5.0, 1.0], &[1.0, 2.0]]).unwrap();
        let d = ModelSpace::diagonal(2).project(&w).unwrap();
        assert_eq!(d, SymMatrix::from_diagonal(&[5.0, 2.0]).unwrap());
    }

    #[test]
    fn projection_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for l in [
            ModelSpace::from_graph(&mathmarks_graph()),
            ModelSpace::from_graph(&four_cycle_graph()),
            ModelSpace::jordan_counterexample(),
        ] {
            for _ in 0..20 {
                let m = random_sym(l.p(), &mut rng);
                let pm = l.project(&m).unwrap();
                let ppm = l.project(&pm).unwrap();
                assert!(ppm.max_abs_diff(&pm) <= 1e-12);
                let res = m.sub(&pm).unwrap();
                for g in l.generators() {
                    assert!(trace_inner(g, &res).unwrap().abs() <= 1e-12);
                }
                let total = m.frobenius_norm().powi(2);
                let parts = pm.frobenius_norm().powi(2) + res.frobenius_norm().powi(2);
                assert!((total - parts).abs() <= 1e-10 * total);
            }
        }
    }

    #[test]
    fn coefficient_round_trip() {
        let l = ModelSpace::diagonal(2);
        assert_eq!(l.to_matrix(&Coefficients(vec![0.0, 0.0])).unwrap(), SymMatrix::zeros(2));
        assert_eq!(
            l.to_matrix(&Coefficients(vec![0.2, 0.5])).unwrap(),
            SymMatrix::from_diagonal(&[0.2, 0.5]).unwrap()
        );

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let l = ModelSpace::jordan_counterexample();
        for _ in 0..50 {
            let theta: Vec<f64> = (0..4).map(|_| rng.random_range(-5.0..5.0)).collect();
            let k = l.to_matrix(&Coefficients(theta.clone())).unwrap();
            let back = l.from_matrix(&k).unwrap();
            for (a, b) in back.0.iter().zip(&theta) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
        let outside = SymMatrix::identity(4).axpy(1.0, &SymMatrix::from_diagonal(&[1.0, 0.0, 0.0, 0.0]).unwrap()).unwrap();
        assert!(matches!(l.from_matrix(&outside), Err(Error::NotInModelSpace { .. })));
    }

    #[test]
    fn lattice_shapes() {
        let g = lattice_graph(2).unwrap();
        let edges: Vec<_> = g.edges().collect();
        assert_eq!(edges, vec![(0, 1), (0, 2), (1, 3), (2, 3)]);
        assert_eq!(lattice_graph(3).unwrap().num_edges(), 12);
        let g4 = lattice_graph(4).unwrap();
        assert_eq!((g4.num_vertices(), g4.num_edges()), (16, 24));
        assert!(lattice_graph(1).is_err());
    }

    #[test]
    fn lattice_edges_match_grid_enumeration() {
        for s in 2..=6 {
            let mut brute = Vec::new();
            for r in 0..s {
                for c in 0..s {
                    let v = r * s + c;
                    if c + 1 < s {
                        brute.push((v, v + 1));
                    }
                    if r + 1 < s {
                        brute.push((v, v + s));
                    }
                }
            }
            brute.sort_unstable();
            assert_eq!(lattice_edges(s), brute);
            assert_eq!(brute.len(), 2 * s * (s - 1));
        }
    }

    #[test]
    fn circular_ar_shapes() {
        let g = circular_ar_graph(7, 2).unwrap();
        assert_eq!(g.num_classes(), 3);
        assert!(g.edge_classes().iter().all(|c| c.len() == 7));
        let g = circular_ar_graph(5, 1).unwrap();
        assert_eq!(g.vertex_classes().len(), 1);
        assert_eq!(g.num_edges(), 5);
        assert!(circular_ar_graph(6, 3).is_err());
        assert!(circular_ar_graph(6, 0).is_err());
    }

    #[test]
    fn jordan_closure_detection() {
        assert!(ModelSpace::diagonal(3).is_jordan_subalgebra());
        assert!(ModelSpace::full(3).is_jordan_subalgebra());
        assert!(!ModelSpace::from_graph(&four_cycle_graph()).is_jordan_subalgebra());
        assert!(ModelSpace::jordan_counterexample().is_jordan_subalgebra());
        // symmetric circulants with every distance present
        assert!(ModelSpace::from_graph(&circular_ar_graph(7, 3).unwrap()).is_jordan_subalgebra());
        assert!(!ModelSpace::from_graph(&circular_ar_graph(7, 1).unwrap()).is_jordan_subalgebra());
    }

    #[test]
    fn jordan_projection_commutes() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let l = ModelSpace::jordan_counterexample();
        for _ in 0..30 {
            let theta: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let a = l.to_matrix(&Coefficients(theta)).unwrap();
            let b = random_sym(4, &mut rng);
            let lhs = l.project(&jordan_product(&a, &b).unwrap()).unwrap();
            let rhs = jordan_product(&a, &l.project(&b).unwrap()).unwrap();
            assert!(lhs.max_abs_diff(&rhs) <= 1e-10);
        }
    }

    #[test]
    fn rejects_non_orthogonal_generators() {
        let a = SymMatrix::identity(2);
        let b = SymMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        assert!(ModelSpace::new(2, vec![a.clone(), b], vec!["a".into(), "b".into()]).is_err());
        assert!(ModelSpace::new(2, vec![SymMatrix::zeros(2)], vec!["z".into()]).is_err());
        assert!(ModelSpace::new(3, vec![a], vec!["a".into()]).is_err());
    }
}
