//! Exact sparse tensors, the tensor families used throughout the crate,
//! flattenings and graph cuts.
//!
//! A tensor is stored as its support: a map from coordinate tuples to nonzero
//! rational coefficients. All constructors produce 0/1 coefficients; exact
//! arithmetic keeps rank computations certifiable.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::linalg::{rank_sparse, Rat};

/// Hard cap on materialized support sizes (tensor powers and graph tensors).
pub const SUPPORT_BUDGET: u64 = 10_000_000;

/// Exhaustive cut search is limited to this many vertices.
pub const CUT_VERTEX_CAP: usize = 24;

/// One point of a tensor support: one basis index per leg, 0-based.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SupportPoint(pub Vec<u64>);

impl SupportPoint {
    pub fn arity(&self) -> usize {
        self.0.len()
    }
}

/// Sparse tensor with exact rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseTensor {
    dims: Vec<u64>,
    entries: BTreeMap<SupportPoint, Rat>,
}

impl SparseTensor {
    /// Build a tensor from explicit entries. Zero coefficients and
    /// out-of-range points are rejected.
    pub fn new(dims: Vec<u64>, entries: BTreeMap<SupportPoint, Rat>) -> Result<Self> {
        for (p, c) in &entries {
            if c.is_zero() {
                return Err(Error::InvalidArgument(format!(
                    "zero coefficient stored at {:?}",
                    p.0
                )));
            }
            check_point(p, &dims)?;
        }
        Ok(SparseTensor { dims, entries })
    }

    /// Tensor with the given 0/1 support.
    pub fn from_support(
        dims: Vec<u64>,
        points: impl IntoIterator<Item = SupportPoint>,
    ) -> Result<Self> {
        let entries = points.into_iter().map(|p| (p, Rat::one())).collect();
        SparseTensor::new(dims, entries)
    }

    pub fn arity(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[u64] {
        &self.dims
    }

    pub fn entries(&self) -> &BTreeMap<SupportPoint, Rat> {
        &self.entries
    }

    pub fn support_size(&self) -> usize {
        self.entries.len()
    }

    /// The support as a standalone object (points sorted lexicographically).
    pub fn support(&self) -> Support {
        Support {
            dims: self.dims.clone(),
            points: self.entries.keys().cloned().collect(),
        }
    }

    /// Leg-wise tensor product: arities must match, dimensions multiply, and
    /// coordinates combine mixed-radix with the left factor most significant.
    pub fn tensor_product(&self, other: &SparseTensor) -> Result<SparseTensor> {
        if self.arity() != other.arity() {
            return Err(Error::ArityMismatch(self.arity(), other.arity()));
        }
        let k = self.arity();
        let mut dims = Vec::with_capacity(k);
        for i in 0..k {
            let d = (self.dims[i] as u128) * (other.dims[i] as u128);
            dims.push(u64::try_from(d).map_err(|_| {
                Error::InvalidArgument("tensor product dimension overflows u64".into())
            })?);
        }
        let total = (self.entries.len() as u128) * (other.entries.len() as u128);
        if total > SUPPORT_BUDGET as u128 {
            return Err(Error::SupportBudget(total, SUPPORT_BUDGET));
        }
        let mut entries = BTreeMap::new();
        for (pa, ca) in &self.entries {
            for (pb, cb) in &other.entries {
                let coords: Vec<u64> = (0..k).map(|i| pa.0[i] * other.dims[i] + pb.0[i]).collect();
                entries.insert(SupportPoint(coords), ca * cb);
            }
        }
        Ok(SparseTensor { dims, entries })
    }

    /// N-th tensor power. Rejected if the support would exceed the budget.
    pub fn tensor_power(&self, n: u32) -> Result<SparseTensor> {
        if n == 0 {
            return SparseTensor::from_support(
                vec![1; self.arity()],
                [SupportPoint(vec![0; self.arity()])],
            );
        }
        let total = (self.entries.len() as u128)
            .checked_pow(n)
            .unwrap_or(u128::MAX);
        if total > SUPPORT_BUDGET as u128 {
            return Err(Error::SupportBudget(total, SUPPORT_BUDGET));
        }
        let mut acc = self.clone();
        for _ in 1..n {
            acc = acc.tensor_product(self)?;
        }
        Ok(acc)
    }

    /// Exact rank over the rationals of the matrix obtained by grouping the
    /// legs in `legs_left` against the rest.
    pub fn flattening_rank(&self, legs_left: &[usize]) -> Result<usize> {
        let k = self.arity();
        let left: BTreeSet<usize> = legs_left.iter().copied().collect();
        if left.is_empty() || left.len() >= k {
            return Err(Error::InvalidArgument(
                "legs_left must be a nonempty proper subset".into(),
            ));
        }
        if left.iter().any(|&l| l >= k) {
            return Err(Error::InvalidArgument("leg index out of range".into()));
        }
        let right: Vec<usize> = (0..k).filter(|i| !left.contains(i)).collect();
        let left: Vec<usize> = left.into_iter().collect();
        for side in [&left, &right] {
            let mut prod: u128 = 1;
            for &l in side.iter() {
                prod = prod.saturating_mul(self.dims[l] as u128);
            }
            if prod > u64::MAX as u128 {
                return Err(Error::Budget("flattening index space overflows u64".into()));
            }
        }
        let mut rows: BTreeMap<u64, BTreeMap<u64, Rat>> = BTreeMap::new();
        for (p, c) in &self.entries {
            let r = mixed_radix(&left, &p.0, &self.dims);
            let col = mixed_radix(&right, &p.0, &self.dims);
            rows.entry(r).or_default().insert(col, c.clone());
        }
        Ok(rank_sparse(rows.into_values().collect()))
    }

    /// 0/1 tensor over blocks of a product partition: entry 1 where the
    /// projection of this tensor onto the block combination is nonzero.
    pub fn outer_structure(&self, partition: &ProductPartition) -> Result<SparseTensor> {
        partition.check_against(&self.dims)?;
        let maps = partition.index_to_block();
        let mut points = BTreeSet::new();
        for p in self.entries.keys() {
            let block: Vec<u64> = p.0.iter().enumerate().map(|(i, &c)| maps[i][&c]).collect();
            points.insert(SupportPoint(block));
        }
        let dims = partition.block_counts();
        SparseTensor::from_support(dims, points)
    }

    /// JSON document form: `{"arity", "dims", "entries": [{"point", "coeff"}]}`.
    pub fn to_json(&self) -> Value {
        let entries: Vec<Value> = self
            .entries
            .iter()
            .map(|(p, c)| json!({ "point": p.0, "coeff": format_rat(c) }))
            .collect();
        json!({ "arity": self.arity(), "dims": self.dims, "entries": entries })
    }

    pub fn from_json(v: &Value) -> Result<SparseTensor> {
        let arity =
            v.get("arity")
                .and_then(Value::as_u64)
                .ok_or_else(|| Error::MalformedInput("missing arity".into()))? as usize;
        let dims: Vec<u64> = v
            .get("dims")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::MalformedInput("missing dims".into()))?
            .iter()
            .map(|d| {
                d.as_u64()
                    .ok_or_else(|| Error::MalformedInput("bad dim".into()))
            })
            .collect::<Result<_>>()?;
        if dims.len() != arity {
            return Err(Error::MalformedInput("dims length != arity".into()));
        }
        let mut entries = BTreeMap::new();
        for e in v
            .get("entries")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::MalformedInput("missing entries".into()))?
        {
            let point: Vec<u64> = e
                .get("point")
                .and_then(Value::as_array)
                .ok_or_else(|| Error::MalformedInput("missing point".into()))?
                .iter()
                .map(|x| {
                    x.as_u64()
                        .ok_or_else(|| Error::MalformedInput("bad coord".into()))
                })
                .collect::<Result<_>>()?;
            let coeff = e
                .get("coeff")
                .and_then(Value::as_str)
                .ok_or_else(|| Error::MalformedInput("missing coeff".into()))?;
            entries.insert(SupportPoint(point), parse_rat(coeff)?);
        }
        SparseTensor::new(dims, entries)
    }
}

fn check_point(p: &SupportPoint, dims: &[u64]) -> Result<()> {
    if p.0.len() != dims.len() || p.0.iter().zip(dims).any(|(&c, &d)| c >= d) {
        return Err(Error::PointOutOfRange(p.0.clone(), dims.to_vec()));
    }
    Ok(())
}

fn mixed_radix(legs: &[usize], coords: &[u64], dims: &[u64]) -> u64 {
    let mut acc: u128 = 0;
    for &l in legs {
        acc = acc * dims[l] as u128 + coords[l] as u128;
    }
    acc as u64
}

pub fn format_rat(c: &Rat) -> String {
    if c.denom().is_one() {
        format!("{}", c.numer())
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

pub fn parse_rat(s: &str) -> Result<Rat> {
    let parse = |t: &str| -> Result<BigInt> {
        t.trim()
            .parse::<BigInt>()
            .map_err(|_| Error::MalformedInput(format!("bad rational '{s}'")))
    };
    match s.split_once('/') {
        Some((n, d)) => {
            let denom = parse(d)?;
            if denom.is_zero() {
                return Err(Error::MalformedInput("zero denominator".into()));
            }
            Ok(Rat::new(parse(n)?, denom))
        }
        None => Ok(Rat::from_integer(parse(s)?)),
    }
}

/// The support of a tensor, detached from its coefficients. Points are kept
/// sorted lexicographically; this ordering is the canonical point ordering
/// used when distributions are serialized.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Support {
    dims: Vec<u64>,
    points: Vec<SupportPoint>,
}

impl Support {
    pub fn new(dims: Vec<u64>, mut points: Vec<SupportPoint>) -> Result<Self> {
        points.sort();
        points.dedup();
        for p in &points {
            check_point(p, &dims)?;
        }
        Ok(Support { dims, points })
    }

    pub fn arity(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[u64] {
        &self.dims
    }

    pub fn points(&self) -> &[SupportPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn index_of(&self, p: &SupportPoint) -> Option<usize> {
        self.points.binary_search(p).ok()
    }

    /// Symbols that actually occur on leg `i`, sorted.
    pub fn occurring(&self, leg: usize) -> Vec<u64> {
        let set: BTreeSet<u64> = self.points.iter().map(|p| p.0[leg]).collect();
        set.into_iter().collect()
    }

    /// Point indices grouped by the value of coordinate `axis`.
    pub fn fibers(&self, axis: usize) -> BTreeMap<u64, Vec<usize>> {
        let mut out: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
        for (i, p) in self.points.iter().enumerate() {
            out.entry(p.0[axis]).or_default().push(i);
        }
        out
    }
}

/// Simple undirected graph. Edges are stored normalized as (min, max).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    vertex_count: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Graph {
    pub fn new(vertex_count: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if vertex_count == 0 {
            return Err(Error::NotSimpleGraph(
                "graph needs at least one vertex".into(),
            ));
        }
        let mut set = BTreeSet::new();
        for &(u, v) in edges {
            if u == v {
                return Err(Error::NotSimpleGraph(format!("self-loop at vertex {u}")));
            }
            if u >= vertex_count || v >= vertex_count {
                return Err(Error::NotSimpleGraph(format!(
                    "edge ({u}, {v}) out of range for {vertex_count} vertices"
                )));
            }
            let e = (u.min(v), u.max(v));
            if !set.insert(e) {
                return Err(Error::NotSimpleGraph(format!("duplicate edge {e:?}")));
            }
        }
        Ok(Graph {
            vertex_count,
            edges: set,
        })
    }

    pub fn complete(k: usize) -> Result<Self> {
        let edges: Vec<(usize, usize)> = (0..k)
            .flat_map(|u| ((u + 1)..k).map(move |v| (u, v)))
            .collect();
        Graph::new(k, &edges)
    }

    pub fn cycle(k: usize) -> Result<Self> {
        if k < 3 {
            return Err(Error::NotSimpleGraph(
                "cycle needs at least 3 vertices".into(),
            ));
        }
        let edges: Vec<(usize, usize)> = (0..k).map(|u| (u, (u + 1) % k)).collect();
        Graph::new(k, &edges)
    }

    pub fn path(k: usize) -> Result<Self> {
        let edges: Vec<(usize, usize)> = (0..k.saturating_sub(1)).map(|u| (u, u + 1)).collect();
        Graph::new(k, &edges)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges incident to `v`, in the global lexicographic edge order. This is
    /// the fixed order used by the leg encoding of graph tensors.
    pub fn incident_edges(&self, v: usize) -> Vec<(usize, usize)> {
        self.edges
            .iter()
            .copied()
            .filter(|&(a, b)| a == v || b == v)
            .collect()
    }

    pub fn to_json(&self) -> Value {
        let edges: Vec<Value> = self.edges.iter().map(|&(u, v)| json!([u, v])).collect();
        json!({ "vertices": self.vertex_count, "edges": edges })
    }

    pub fn from_json(v: &Value) -> Result<Graph> {
        let n = v
            .get("vertices")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::MalformedInput("missing vertices".into()))?
            as usize;
        let mut edges = Vec::new();
        for e in v
            .get("edges")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::MalformedInput("missing edges".into()))?
        {
            let pair = e
                .as_array()
                .filter(|a| a.len() == 2)
                .ok_or_else(|| Error::MalformedInput("edge must be a pair".into()))?;
            let u = pair[0]
                .as_u64()
                .ok_or_else(|| Error::MalformedInput("bad vertex".into()))?;
            let w = pair[1]
                .as_u64()
                .ok_or_else(|| Error::MalformedInput("bad vertex".into()))?;
            edges.push((u as usize, w as usize));
        }
        Graph::new(n, &edges)
    }
}

/// Per-leg partitions of the index sets, defining a block decomposition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductPartition {
    /// legs[i] lists the blocks of leg i, each block a set of indices.
    legs: Vec<Vec<Vec<u64>>>,
}

impl ProductPartition {
    pub fn new(legs: Vec<Vec<Vec<u64>>>) -> Self {
        ProductPartition { legs }
    }

    /// All-singleton partition of each leg.
    pub fn singletons(dims: &[u64]) -> Self {
        ProductPartition {
            legs: dims
                .iter()
                .map(|&d| (0..d).map(|i| vec![i]).collect())
                .collect(),
        }
    }

    /// One block per leg covering everything.
    pub fn one_block(dims: &[u64]) -> Self {
        ProductPartition {
            legs: dims.iter().map(|&d| vec![(0..d).collect()]).collect(),
        }
    }

    /// Same partition repeated on every leg.
    pub fn uniform(arity: usize, blocks: Vec<Vec<u64>>) -> Self {
        ProductPartition {
            legs: vec![blocks; arity],
        }
    }

    pub fn legs(&self) -> &[Vec<Vec<u64>>] {
        &self.legs
    }

    pub fn block_counts(&self) -> Vec<u64> {
        self.legs.iter().map(|blocks| blocks.len() as u64).collect()
    }

    pub fn check_against(&self, dims: &[u64]) -> Result<()> {
        if self.legs.len() != dims.len() {
            return Err(Error::InvalidPartition(format!(
                "partition has {} legs, tensor has {}",
                self.legs.len(),
                dims.len()
            )));
        }
        for (i, blocks) in self.legs.iter().enumerate() {
            let mut seen = BTreeSet::new();
            for b in blocks {
                if b.is_empty() {
                    return Err(Error::InvalidPartition(format!("empty block on leg {i}")));
                }
                for &x in b {
                    if x >= dims[i] || !seen.insert(x) {
                        return Err(Error::InvalidPartition(format!(
                            "leg {i}: index {x} out of range or repeated"
                        )));
                    }
                }
            }
            if seen.len() as u64 != dims[i] {
                return Err(Error::InvalidPartition(format!(
                    "leg {i}: blocks do not cover all {} indices",
                    dims[i]
                )));
            }
        }
        Ok(())
    }

    fn index_to_block(&self) -> Vec<BTreeMap<u64, u64>> {
        self.legs
            .iter()
            .map(|blocks| {
                let mut m = BTreeMap::new();
                for (bi, b) in blocks.iter().enumerate() {
                    for &x in b {
                        m.insert(x, bi as u64);
                    }
                }
                m
            })
            .collect()
    }

    /// Product partition of a leg-wise tensor product: block I x J on each
    /// leg, in mixed-radix coordinates matching `SparseTensor::tensor_product`.
    pub fn tensor(&self, other: &ProductPartition, other_dims: &[u64]) -> ProductPartition {
        let legs = self
            .legs
            .iter()
            .zip(other.legs.iter())
            .zip(other_dims)
            .map(|((ba, bb), &db)| {
                let mut blocks = Vec::new();
                for ia in ba {
                    for jb in bb {
                        let mut block = Vec::new();
                        for &a in ia {
                            for &b in jb {
                                block.push(a * db + b);
                            }
                        }
                        blocks.push(block);
                    }
                }
                blocks
            })
            .collect();
        ProductPartition { legs }
    }
}

/// Graph tensor: one leg per vertex; each edge carries a symbol in `[n]` and
/// each vertex sees the tuple of symbols on its incident edges. Incident
/// edges are taken in lexicographic endpoint order and packed mixed-radix,
/// most significant first.
pub fn graph_tensor(g: &Graph, n: u64) -> Result<SparseTensor> {
    let weights: BTreeMap<(usize, usize), u64> = g.edges().map(|e| (e, n)).collect();
    graph_tensor_weighted(g, &weights)
}

/// Nonuniform graph tensor: edge `e` ranges over [f(e)]. With a triangle and
/// weights (n1, n2, n3) this is the rectangular matrix multiplication tensor.
pub fn graph_tensor_weighted(
    g: &Graph,
    weights: &BTreeMap<(usize, usize), u64>,
) -> Result<SparseTensor> {
    let edges: Vec<(usize, usize)> = g.edges().collect();
    let mut radix = Vec::with_capacity(edges.len());
    for &e in &edges {
        match weights.get(&e) {
            Some(&w) if w >= 1 => radix.push(w),
            Some(_) => {
                return Err(Error::InvalidArgument(format!("edge {e:?} has weight 0")));
            }
            None => return Err(Error::MissingEdgeWeight(e.0, e.1)),
        }
    }
    let total: u128 = radix.iter().map(|&w| w as u128).product();
    if total > SUPPORT_BUDGET as u128 {
        return Err(Error::SupportBudget(total, SUPPORT_BUDGET));
    }
    // dims: per vertex, product of incident edge weights
    let incident: Vec<Vec<usize>> = (0..g.vertex_count())
        .map(|v| {
            edges
                .iter()
                .enumerate()
                .filter(|(_, &(a, b))| a == v || b == v)
                .map(|(i, _)| i)
                .collect()
        })
        .collect();
    let mut dims = Vec::with_capacity(g.vertex_count());
    for inc in &incident {
        let mut d: u128 = 1;
        for &ei in inc {
            d *= radix[ei] as u128;
        }
        dims.push(
            u64::try_from(d)
                .map_err(|_| Error::InvalidArgument("leg dimension overflows u64".into()))?,
        );
    }
    let mut points = Vec::with_capacity(total as usize);
    let mut symbols = vec![0u64; edges.len()];
    loop {
        let coords: Vec<u64> = incident
            .iter()
            .map(|inc| {
                let mut acc = 0u64;
                for &ei in inc {
                    acc = acc * radix[ei] + symbols[ei];
                }
                acc
            })
            .collect();
        points.push(SupportPoint(coords));
        // odometer over edge symbols, last edge fastest
        let mut pos = edges.len();
        loop {
            if pos == 0 {
                break;
            }
            pos -= 1;
            symbols[pos] += 1;
            if symbols[pos] < radix[pos] {
                break;
            }
            symbols[pos] = 0;
            if pos == 0 {
                return SparseTensor::from_support(dims, points);
            }
        }
        if edges.is_empty() {
            return SparseTensor::from_support(dims, points);
        }
    }
}

/// Dicke tensor for a composition `lambda`: the support consists of all
/// distinct permutations of the sequence with `lambda[j]` copies of symbol j.
pub fn dicke_tensor(lambda: &[u64]) -> Result<SparseTensor> {
    if lambda.is_empty() || lambda.contains(&0) {
        return Err(Error::InvalidArgument(
            "partition must be nonempty with all parts >= 1".into(),
        ));
    }
    let k: u64 = lambda.iter().sum();
    let n = lambda.len() as u64;
    let mut seq: Vec<u64> = Vec::with_capacity(k as usize);
    for (j, &part) in lambda.iter().enumerate() {
        seq.extend(std::iter::repeat_n(j as u64, part as usize));
    }
    let mut points = Vec::new();
    loop {
        points.push(SupportPoint(seq.clone()));
        if !next_permutation(&mut seq) {
            break;
        }
        if points.len() as u64 > SUPPORT_BUDGET {
            return Err(Error::SupportBudget(points.len() as u128, SUPPORT_BUDGET));
        }
    }
    SparseTensor::from_support(vec![n; k as usize], points)
}

fn next_permutation(seq: &mut [u64]) -> bool {
    if seq.len() < 2 {
        return false;
    }
    let mut i = seq.len() - 1;
    while i > 0 && seq[i - 1] >= seq[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = seq.len() - 1;
    while seq[j] <= seq[i - 1] {
        j -= 1;
    }
    seq.swap(i - 1, j);
    seq[i..].reverse();
    true
}

/// Rank-r unit tensor: diagonal support {(i,...,i)}.
pub fn unit_tensor(r: u64, k: usize) -> Result<SparseTensor> {
    if r == 0 || k == 0 {
        return Err(Error::InvalidArgument(
            "unit tensor needs r >= 1, k >= 1".into(),
        ));
    }
    let points = (0..r).map(|i| SupportPoint(vec![i; k]));
    SparseTensor::from_support(vec![r; k], points)
}

/// Generalized Coppersmith-Winograd tensor on alphabet {0,...,q}: support is
/// all k-tuples with exactly two identical nonzero entries and zeros
/// elsewhere, so |supp| = C(k,2) * q.
pub fn cw_tensor(q: u64, k: usize) -> Result<SparseTensor> {
    if q == 0 || k < 2 {
        return Err(Error::InvalidArgument(
            "cw tensor needs q >= 1, k >= 2".into(),
        ));
    }
    let mut points = Vec::new();
    for a in 0..k {
        for b in (a + 1)..k {
            for s in 1..=q {
                let mut coords = vec![0u64; k];
                coords[a] = s;
                coords[b] = s;
                points.push(SupportPoint(coords));
            }
        }
    }
    SparseTensor::from_support(vec![q + 1; k], points)
}

/// Exact max-cut value by exhaustive bipartition enumeration.
pub fn max_cut(g: &Graph) -> Result<usize> {
    cut_extrema(g).map(|(_, max)| max)
}

/// Exact min-cut value by exhaustive bipartition enumeration.
pub fn min_cut(g: &Graph) -> Result<usize> {
    cut_extrema(g).map(|(min, _)| min)
}

/// (min cut, max cut) over all 2^{|V|-1} - 1 bipartitions with both sides
/// nonempty. Vertex 0 is pinned to one side.
pub fn cut_extrema(g: &Graph) -> Result<(usize, usize)> {
    let n = g.vertex_count();
    if n < 2 {
        return Err(Error::GraphTooSmall(n));
    }
    if n > CUT_VERTEX_CAP {
        return Err(Error::GraphTooLarge(n, CUT_VERTEX_CAP));
    }
    let edges: Vec<(usize, usize)> = g.edges().collect();
    let mut min = usize::MAX;
    let mut max = 0usize;
    // mask over vertices 1..n joining vertex 0's side; all-ones would leave
    // the other side empty.
    let full: u64 = (1 << (n - 1)) - 1;
    for mask in 0..full {
        let side = |v: usize| -> bool { v != 0 && (mask >> (v - 1)) & 1 == 0 };
        let crossing = edges.iter().filter(|&&(u, v)| side(u) != side(v)).count();
        min = min.min(crossing);
        max = max.max(crossing);
    }
    Ok((min, max))
}

/// Univariate polynomial with rational coefficients, truncated at a fixed
/// maximum degree during arithmetic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly {
    coeffs: Vec<Rat>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn constant(c: Rat) -> Self {
        let mut p = Poly { coeffs: vec![c] };
        p.trim();
        p
    }

    /// c * eps^d
    pub fn monomial(c: Rat, d: usize) -> Self {
        let mut coeffs = vec![Rat::zero(); d + 1];
        coeffs[d] = c;
        let mut p = Poly { coeffs };
        p.trim();
        p
    }

    pub fn coeff(&self, d: usize) -> Rat {
        self.coeffs.get(d).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(Rat::is_zero) {
            self.coeffs.pop();
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let len = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..len).map(|d| self.coeff(d) + other.coeff(d)).collect();
        let mut p = Poly { coeffs };
        p.trim();
        p
    }

    /// Product, dropping all terms above `max_deg`.
    pub fn mul_trunc(&self, other: &Poly, max_deg: usize) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut coeffs = vec![Rat::zero(); max_deg + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() || i > max_deg {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if i + j > max_deg {
                    break;
                }
                if !b.is_zero() {
                    coeffs[i + j] = &coeffs[i + j] + &(a * b);
                }
            }
        }
        let mut p = Poly { coeffs };
        p.trim();
        p
    }
}

/// Sparse tensor whose entries are polynomials in the degeneration parameter.
/// Arithmetic truncates above `max_deg` eagerly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyTensor {
    dims: Vec<u64>,
    entries: BTreeMap<SupportPoint, Poly>,
    max_deg: usize,
}

impl PolyTensor {
    /// Arity-1 tensor from a coefficient vector.
    pub fn from_vector(coeffs: Vec<Poly>, max_deg: usize) -> Self {
        let dims = vec![coeffs.len() as u64];
        let entries = coeffs
            .into_iter()
            .enumerate()
            .filter(|(_, p)| !p.is_zero())
            .map(|(i, p)| (SupportPoint(vec![i as u64]), p))
            .collect();
        PolyTensor {
            dims,
            entries,
            max_deg,
        }
    }

    pub fn dims(&self) -> &[u64] {
        &self.dims
    }

    pub fn entry_count(&self) -> usize {
        self.entries.len()
    }

    /// Outer product: arities concatenate.
    pub fn outer_product(&self, other: &PolyTensor) -> PolyTensor {
        let mut entries = BTreeMap::new();
        for (pa, ca) in &self.entries {
            for (pb, cb) in &other.entries {
                let prod = ca.mul_trunc(cb, self.max_deg);
                if prod.is_zero() {
                    continue;
                }
                let mut coords = pa.0.clone();
                coords.extend_from_slice(&pb.0);
                entries.insert(SupportPoint(coords), prod);
            }
        }
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        PolyTensor {
            dims,
            entries,
            max_deg: self.max_deg,
        }
    }

    /// k-fold outer power of an arity-1 tensor.
    pub fn outer_power(&self, k: usize) -> PolyTensor {
        assert!(k >= 1);
        let mut acc = self.clone();
        for _ in 1..k {
            acc = acc.outer_product(self);
        }
        acc
    }

    pub fn scale(&self, factor: &Poly) -> PolyTensor {
        let entries = self
            .entries
            .iter()
            .filter_map(|(p, c)| {
                let prod = c.mul_trunc(factor, self.max_deg);
                (!prod.is_zero()).then(|| (p.clone(), prod))
            })
            .collect();
        PolyTensor {
            dims: self.dims.clone(),
            entries,
            max_deg: self.max_deg,
        }
    }

    pub fn add(&self, other: &PolyTensor) -> Result<PolyTensor> {
        if self.dims != other.dims {
            return Err(Error::ArityMismatch(self.dims.len(), other.dims.len()));
        }
        let mut entries = self.entries.clone();
        for (p, c) in &other.entries {
            let merged = match entries.get(p) {
                Some(existing) => existing.add(c),
                None => c.clone(),
            };
            if merged.is_zero() {
                entries.remove(p);
            } else {
                entries.insert(p.clone(), merged);
            }
        }
        Ok(PolyTensor {
            dims: self.dims.clone(),
            entries,
            max_deg: self.max_deg,
        })
    }

    /// The coefficient of eps^d as a plain sparse tensor.
    pub fn coefficient_tensor(&self, d: usize) -> Result<SparseTensor> {
        let mut entries = BTreeMap::new();
        for (p, poly) in &self.entries {
            let c = poly.coeff(d);
            if !c.is_zero() {
                entries.insert(p.clone(), c);
            }
        }
        SparseTensor::new(self.dims.clone(), entries)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_edge_tensor_is_diagonal() {
        let g = Graph::new(2, &[(0, 1)]).unwrap();
        let t = graph_tensor(&g, 2).unwrap();
        assert_eq!(t.dims(), &[2, 2]);
        let pts: Vec<_> = t.entries().keys().map(|p| p.0.clone()).collect();
        assert_eq!(pts, vec![vec![0, 0], vec![1, 1]]);
    }

    #[test]
    fn triangle_tensor_shape() {
        let g = Graph::complete(3).unwrap();
        let t = graph_tensor(&g, 2).unwrap();
        assert_eq!(t.dims(), &[4, 4, 4]);
        assert_eq!(t.support_size(), 8);
        // edges of K3 in lex order: (0,1), (0,2), (1,2); vertex 0 sees
        // (e01, e02), vertex 1 sees (e01, e12), vertex 2 sees (e02, e12),
        // packed most-significant first.
        for p in t.entries().keys() {
            let (a, b, c) = (p.0[0], p.0[1], p.0[2]);
            assert_eq!(a >> 1, b >> 1); // e01 shared by vertices 0 and 1
            assert_eq!(a & 1, c >> 1); // e02 shared by vertices 0 and 2
            assert_eq!(b & 1, c & 1); // e12 shared by vertices 1 and 2
        }
    }

    #[test]
    fn k4_tensor_shape() {
        let g = Graph::complete(4).unwrap();
        let t = graph_tensor(&g, 2).unwrap();
        assert_eq!(t.dims(), &[8, 8, 8, 8]);
        assert_eq!(t.support_size(), 64);
    }

    #[test]
    fn weighted_triangle_is_matmul_tensor() {
        let g = Graph::complete(3).unwrap();
        let mut w = BTreeMap::new();
        for e in g.edges() {
            w.insert(e, 2);
        }
        let t = graph_tensor_weighted(&g, &w).unwrap();
        assert_eq!(t, graph_tensor(&g, 2).unwrap());
        assert_eq!(t.support_size(), 8);

        let single = Graph::new(2, &[(0, 1)]).unwrap();
        let mut w5 = BTreeMap::new();
        w5.insert((0, 1), 5);
        let t5 = graph_tensor_weighted(&single, &w5).unwrap();
        assert_eq!(t5.support_size(), 5);
        assert!(t5.entries().keys().all(|p| p.0[0] == p.0[1]));
    }

    #[test]
    fn weighted_triangle_is_rectangular_matmul() {
        // weights (2,3,4) on the triangle give the rectangular matrix
        // multiplication tensor: 24 points, leg dims (products of incident
        // edge weights)
        let g = Graph::complete(3).unwrap();
        let mut w = BTreeMap::new();
        w.insert((0, 1), 2);
        w.insert((0, 2), 3);
        w.insert((1, 2), 4);
        let t = graph_tensor_weighted(&g, &w).unwrap();
        assert_eq!(t.support_size(), 24);
        assert_eq!(t.dims(), &[6, 8, 12]);
        // matrix-multiplication structure: every flattening along one leg
        // has full rank equal to that leg's dimension
        assert_eq!(t.flattening_rank(&[0]).unwrap(), 6);
        assert_eq!(t.flattening_rank(&[1]).unwrap(), 8);
        assert_eq!(t.flattening_rank(&[2]).unwrap(), 12);
    }

    #[test]
    fn weighted_tensor_missing_edge_weight() {
        let g = Graph::complete(3).unwrap();
        let w = BTreeMap::new();
        assert!(matches!(
            graph_tensor_weighted(&g, &w),
            Err(Error::MissingEdgeWeight(_, _))
        ));
    }

    #[test]
    fn dicke_supports() {
        assert_eq!(dicke_tensor(&[2, 1]).unwrap().support_size(), 3);
        assert_eq!(dicke_tensor(&[1, 1, 1]).unwrap().support_size(), 6);
        let d22 = dicke_tensor(&[2, 2]).unwrap();
        assert_eq!(d22.support_size(), 6);
        assert_eq!(d22.dims(), &[2, 2, 2, 2]);
    }

    #[test]
    fn unit_tensor_support() {
        let t = unit_tensor(2, 3).unwrap();
        let pts: Vec<_> = t.entries().keys().map(|p| p.0.clone()).collect();
        assert_eq!(pts, vec![vec![0, 0, 0], vec![1, 1, 1]]);
        assert_eq!(unit_tensor(1, 4).unwrap().support_size(), 1);
        assert_eq!(unit_tensor(7, 2).unwrap().support_size(), 7);
    }

    #[test]
    fn cw_tensor_sizes() {
        // q = 1 collapses onto the weight-(2, k-2) Dicke support
        let cw = cw_tensor(1, 4).unwrap();
        assert_eq!(cw.support_size(), 6);
        assert_eq!(
            cw.support().points(),
            dicke_tensor(&[2, 2]).unwrap().support().points()
        );
        assert_eq!(cw_tensor(2, 3).unwrap().support_size(), 6);
        assert_eq!(cw_tensor(2, 3).unwrap().dims(), &[3, 3, 3]);
        assert_eq!(cw_tensor(3, 5).unwrap().support_size(), 30);
    }

    #[test]
    fn product_multiplies_supports() {
        let u2 = unit_tensor(2, 3).unwrap();
        let prod = u2.tensor_product(&u2).unwrap();
        assert_eq!(prod, unit_tensor(4, 3).unwrap());

        let d = dicke_tensor(&[1, 1, 1]).unwrap();
        assert_eq!(d.tensor_power(2).unwrap().support_size(), 36);

        let id = unit_tensor(1, 3).unwrap();
        assert_eq!(d.tensor_product(&id).unwrap(), d);
    }

    #[test]
    fn product_arity_mismatch() {
        let a = unit_tensor(2, 3).unwrap();
        let b = unit_tensor(2, 4).unwrap();
        assert!(matches!(
            a.tensor_product(&b),
            Err(Error::ArityMismatch(3, 4))
        ));
    }

    #[test]
    fn flattening_ranks() {
        let u = unit_tensor(5, 4).unwrap();
        assert_eq!(u.flattening_rank(&[0]).unwrap(), 5);
        assert_eq!(u.flattening_rank(&[0, 2]).unwrap(), 5);

        let k4 = graph_tensor(&Graph::complete(4).unwrap(), 2).unwrap();
        assert_eq!(k4.flattening_rank(&[0, 1]).unwrap(), 16);

        // two disjoint edges: flattening across the split has rank 1
        let two_edges = Graph::new(4, &[(0, 1), (2, 3)]).unwrap();
        let t = graph_tensor(&two_edges, 2).unwrap();
        assert_eq!(t.flattening_rank(&[0, 1]).unwrap(), 1);
        assert_eq!(t.flattening_rank(&[0, 2]).unwrap(), 4);
    }

    #[test]
    fn flattening_complement_symmetry() {
        let d = dicke_tensor(&[2, 2]).unwrap();
        assert_eq!(
            d.flattening_rank(&[0, 1]).unwrap(),
            d.flattening_rank(&[2, 3]).unwrap()
        );
        assert_eq!(
            d.flattening_rank(&[0]).unwrap(),
            d.flattening_rank(&[1, 2, 3]).unwrap()
        );
    }

    #[test]
    fn cut_values() {
        assert_eq!(cut_extrema(&Graph::complete(4).unwrap()).unwrap(), (3, 4));
        assert_eq!(cut_extrema(&Graph::cycle(5).unwrap()).unwrap(), (2, 4));
        assert_eq!(
            cut_extrema(&Graph::new(2, &[(0, 1)]).unwrap()).unwrap(),
            (1, 1)
        );
        // even cycle: max cut picks up every edge
        assert_eq!(max_cut(&Graph::cycle(6).unwrap()).unwrap(), 6);
        assert!(matches!(
            cut_extrema(&Graph::new(1, &[]).unwrap()),
            Err(Error::GraphTooSmall(1))
        ));
    }

    #[test]
    fn outer_structure_blocks() {
        let cw = cw_tensor(2, 4).unwrap();
        let part = ProductPartition::uniform(4, vec![vec![0], vec![1, 2]]);
        let outer = cw.outer_structure(&part).unwrap();
        // nonzero symbols collapse to block 1: the weight-(k-2, 2) Dicke support
        assert_eq!(
            outer.support().points(),
            dicke_tensor(&[2, 2]).unwrap().support().points()
        );

        let d = dicke_tensor(&[2, 1]).unwrap();
        let singles = ProductPartition::singletons(d.dims());
        assert_eq!(d.outer_structure(&singles).unwrap().support(), d.support());

        let one = ProductPartition::one_block(d.dims());
        assert_eq!(d.outer_structure(&one).unwrap().support_size(), 1);
    }

    #[test]
    fn outer_structure_multiplicative() {
        let a = dicke_tensor(&[2, 1]).unwrap();
        let b = unit_tensor(2, 3).unwrap();
        let pa = ProductPartition::uniform(3, vec![vec![0], vec![1]]);
        let pb = ProductPartition::uniform(3, vec![vec![0, 1]]);
        let prod = a.tensor_product(&b).unwrap();
        let pprod = pa.tensor(&pb, b.dims());
        let lhs = prod.outer_structure(&pprod).unwrap();
        let rhs = a
            .outer_structure(&pa)
            .unwrap()
            .tensor_product(&b.outer_structure(&pb).unwrap())
            .unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn json_round_trip() {
        let t = dicke_tensor(&[2, 2]).unwrap();
        let v = t.to_json();
        assert_eq!(SparseTensor::from_json(&v).unwrap(), t);

        let g = Graph::cycle(5).unwrap();
        assert_eq!(Graph::from_json(&g.to_json()).unwrap(), g);
    }

    #[test]
    fn rat_parsing() {
        assert_eq!(
            parse_rat("3/4").unwrap(),
            Rat::new(BigInt::from(3), BigInt::from(4))
        );
        assert_eq!(parse_rat("-2").unwrap(), rat_int(-2));
        assert!(parse_rat("1/0").is_err());
        assert_eq!(
            format_rat(&Rat::new(BigInt::from(1), BigInt::from(2))),
            "1/2"
        );
        assert_eq!(format_rat(&rat_int(5)), "5");
    }

    use crate::linalg::rat_int;

    #[test]
    fn poly_truncation() {
        let p = Poly::monomial(rat_int(1), 3);
        let q = Poly::monomial(rat_int(2), 3);
        assert!(p.mul_trunc(&q, 5).is_zero());
        let r = Poly::monomial(rat_int(2), 2);
        assert_eq!(p.mul_trunc(&r, 5), Poly::monomial(rat_int(2), 5));
    }

    #[test]
    fn rejects_nonsimple_graphs() {
        assert!(Graph::new(3, &[(0, 0)]).is_err());
        assert!(Graph::new(3, &[(0, 1), (1, 0)]).is_err());
        assert!(Graph::new(2, &[(0, 5)]).is_err());
    }

    #[test]
    fn power_budget_enforced() {
        let t = graph_tensor(&Graph::complete(4).unwrap(), 2).unwrap();
        // 64^5 > 10^7
        assert!(matches!(t.tensor_power(5), Err(Error::SupportBudget(_, _))));
    }
}
