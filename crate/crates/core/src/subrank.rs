//! Lower bounds on the monomial subexponent of tight tensors.
//!
//! The bound maximizes, over distributions P on the support,
//! H(P) - (k-2) * max_R (max_Q H(Q) - H(P)) / r(R), where R ranges over
//! fiber-respecting equivalence relations and Q over couplings on R matching
//! P's marginals on all 2k components. Completeness of the relation
//! enumeration and upward rounding of every penalty make the result a valid
//! lower bound for any candidate P; the best candidate is reported with the
//! witnesses needed to recheck it.
//!
//! Two enumeration modes are available. The exhaustive mode walks all
//! products of set partitions of the fibers of each axis. The closed mode
//! enumerates only relations that are maximal for their difference span:
//! merging pairs whose labeled difference already lies in the span cannot
//! decrease the coupling entropy and keeps the rank, so these relations
//! dominate all others. Closed relations are the flats of the matroid on the
//! labeled difference vectors, found by a breadth-first walk over spans.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::entropy::{
    binary_entropy, marginals, max_entropy_coupling, max_entropy_on_support,
    maximin_marginal_entropy, Distribution, IpfOptions, MaximinOptions,
};
use crate::error::{Error, Result};
use crate::linalg::{in_row_space, next_up_f64, rref, Rat};
use crate::tensor::{SparseTensor, Support};
use crate::tightness::{
    check_tight, find_labeling, relation_rank, EquivRelation, LabelingSearch, TightLabeling,
};

/// Default cap on the per-axis relation enumeration.
pub const RELATION_BUDGET: u64 = 1_000_000;
/// Cap on the symmetry group order when closing generators.
pub const GROUP_ORDER_CAP: usize = 100_000;

/// Bell number B(n), saturating at u128::MAX.
pub fn bell_number(n: usize) -> u128 {
    // Bell triangle
    let mut row = vec![1u128];
    for _ in 1..=n {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(*row.last().unwrap());
        for &x in &row {
            let last = *next.last().unwrap();
            next.push(last.saturating_add(x));
        }
        row = next;
    }
    row[0]
}

/// All set partitions of {0,...,n-1} as restricted-growth label vectors.
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut labels = vec![0usize; n];
    fn rec(labels: &mut Vec<usize>, pos: usize, max_used: usize, out: &mut Vec<Vec<usize>>) {
        if pos == labels.len() {
            out.push(labels.clone());
            return;
        }
        for label in 0..=max_used + 1 {
            labels[pos] = label;
            rec(labels, pos + 1, max_used.max(label), out);
        }
    }
    if n == 0 {
        out.push(Vec::new());
        return out;
    }
    labels[0] = 0;
    rec(&mut labels, 1, 0, &mut out);
    out
}

/// Reflexive-symmetric-transitive closure of a raw pair set, as a fiber
/// partition. All pairs must agree on a common axis and at least one pair
/// must be off-diagonal.
pub fn closure(support: &Support, pairs: &[(usize, usize)]) -> Result<EquivRelation> {
    if pairs.is_empty() {
        return Err(Error::InvalidRelation("empty pair set".into()));
    }
    let k = support.arity();
    let axis = (0..k)
        .find(|&i| {
            pairs
                .iter()
                .all(|&(x, y)| support.points()[x].0[i] == support.points()[y].0[i])
        })
        .ok_or_else(|| Error::InvalidRelation("pairs share no common agreeing axis".into()))?;
    if pairs.iter().all(|&(x, y)| x == y) {
        return Err(Error::InvalidRelation("all pairs are diagonal".into()));
    }
    let n = support.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(x, y) in pairs {
        let (rx, ry) = (root(&mut parent, x), root(&mut parent, y));
        if rx != ry {
            parent[rx] = ry;
        }
    }
    let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let r = root(&mut parent, i);
        classes.entry(r).or_default().push(i);
    }
    EquivRelation::new(support, axis, classes.into_values().collect())
}

/// How candidate relations are produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RelationEnumeration {
    /// All products of set partitions of each axis's fibers.
    Exhaustive,
    /// Span-maximal relations only (flats of the difference matroid).
    Closed,
}

/// Exhaustive enumeration over one axis: every combination of set partitions
/// of the fibers, excluding the all-singleton combination.
pub fn enumerate_relations_axis(
    support: &Support,
    axis: usize,
    budget: u64,
) -> Result<Vec<EquivRelation>> {
    let fibers: Vec<Vec<usize>> = support.fibers(axis).into_values().collect();
    let mut combos: u128 = 1;
    for f in &fibers {
        combos = combos.saturating_mul(bell_number(f.len()));
    }
    if combos > budget as u128 {
        return Err(Error::EnumerationBudget(combos, budget));
    }
    let per_fiber: Vec<Vec<Vec<usize>>> = fibers.iter().map(|f| set_partitions(f.len())).collect();
    let mut out = Vec::new();
    let mut choice = vec![0usize; fibers.len()];
    loop {
        let mut classes: Vec<Vec<usize>> = Vec::new();
        let mut all_singleton = true;
        for (fi, fiber) in fibers.iter().enumerate() {
            let labels = &per_fiber[fi][choice[fi]];
            let nclasses = labels.iter().copied().max().map_or(0, |m| m + 1);
            let mut fiber_classes: Vec<Vec<usize>> = vec![Vec::new(); nclasses];
            for (pos, &label) in labels.iter().enumerate() {
                fiber_classes[label].push(fiber[pos]);
            }
            if fiber_classes.iter().any(|c| c.len() > 1) {
                all_singleton = false;
            }
            classes.extend(fiber_classes);
        }
        if !all_singleton {
            out.push(EquivRelation::new(support, axis, classes)?);
        }
        // odometer over per-fiber partition choices
        let mut pos = fibers.len();
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            choice[pos] += 1;
            if choice[pos] < per_fiber[pos].len() {
                break;
            }
            choice[pos] = 0;
            if pos == 0 {
                return Ok(out);
            }
        }
    }
}

/// Exhaustive enumeration over all axes, deduplicated by class structure
/// (a partition qualifying on several axes is kept once).
pub fn enumerate_relations(support: &Support, budget: u64) -> Result<Vec<EquivRelation>> {
    let mut seen: BTreeSet<Vec<Vec<usize>>> = BTreeSet::new();
    let mut out = Vec::new();
    for axis in 0..support.arity() {
        for rel in enumerate_relations_axis(support, axis, budget)? {
            if seen.insert(rel.classes().to_vec()) {
                out.push(rel);
            }
        }
    }
    Ok(out)
}

/// Closed (span-maximal) relations for all axes: for each subspace V spanned
/// by labeled intra-fiber differences, the relation joining x and y exactly
/// when their difference lies in V.
pub fn enumerate_closed_relations(
    support: &Support,
    labeling: &TightLabeling,
    budget: u64,
) -> Result<Vec<EquivRelation>> {
    let labeled: Vec<Vec<i64>> = support
        .points()
        .iter()
        .map(|p| labeling.labeled(&p.0))
        .collect();
    let mut seen: BTreeSet<Vec<Vec<usize>>> = BTreeSet::new();
    let mut out = Vec::new();
    for axis in 0..support.arity() {
        let fibers: Vec<Vec<usize>> = support.fibers(axis).into_values().collect();
        // distinct primitive difference directions within fibers
        let mut diffs: BTreeSet<Vec<BigInt>> = BTreeSet::new();
        for fiber in &fibers {
            for (ai, &a) in fiber.iter().enumerate() {
                for &b in &fiber[ai + 1..] {
                    let d: Vec<Rat> = labeled[a]
                        .iter()
                        .zip(&labeled[b])
                        .map(|(x, y)| Rat::from_integer(BigInt::from(x - y)))
                        .collect();
                    diffs.insert(primitive_direction(&d));
                }
            }
        }
        let diffs: Vec<Vec<Rat>> = diffs
            .into_iter()
            .map(|v| v.into_iter().map(Rat::from_integer).collect())
            .collect();
        if diffs.is_empty() {
            continue;
        }
        // BFS over spans of difference subsets; every span-extension attempt
        // counts against the budget so oversized inputs fail fast instead of
        // grinding
        let mut spans: BTreeMap<String, Vec<Vec<Rat>>> = BTreeMap::new();
        let mut queue: VecDeque<Vec<Vec<Rat>>> = VecDeque::new();
        let mut work: u128 = 0;
        for d in &diffs {
            let basis = rref(std::slice::from_ref(d));
            let key = span_key(&basis);
            if spans.insert(key, basis.clone()).is_none() {
                queue.push_back(basis);
            }
        }
        while let Some(basis) = queue.pop_front() {
            work += diffs.len() as u128;
            if spans.len() as u128 > budget as u128 || work > budget as u128 {
                return Err(Error::EnumerationBudget(work.max(spans.len() as u128), budget));
            }
            for d in &diffs {
                if in_row_space(&basis, d) {
                    continue;
                }
                let mut rows = basis.clone();
                rows.push(d.clone());
                let bigger = rref(&rows);
                let key = span_key(&bigger);
                if spans.insert(key, bigger.clone()).is_none() {
                    queue.push_back(bigger);
                }
            }
        }
        for basis in spans.values() {
            let mut classes: Vec<Vec<usize>> = Vec::new();
            for fiber in &fibers {
                let mut fiber_classes: Vec<Vec<usize>> = Vec::new();
                for &p in fiber {
                    let mut placed = false;
                    for class in fiber_classes.iter_mut() {
                        let rep = class[0];
                        let d: Vec<Rat> = labeled[p]
                            .iter()
                            .zip(&labeled[rep])
                            .map(|(x, y)| Rat::from_integer(BigInt::from(x - y)))
                            .collect();
                        if in_row_space(basis, &d) {
                            class.push(p);
                            placed = true;
                            break;
                        }
                    }
                    if !placed {
                        fiber_classes.push(vec![p]);
                    }
                }
                classes.extend(fiber_classes);
            }
            if classes.iter().all(|c| c.len() < 2) {
                continue;
            }
            let rel = EquivRelation::new(support, axis, classes)?;
            if seen.insert(rel.classes().to_vec()) {
                out.push(rel);
            }
        }
    }
    Ok(out)
}

fn primitive_direction(v: &[Rat]) -> Vec<BigInt> {
    let ints = crate::linalg::clear_denominators(v);
    // canonical sign: first nonzero positive
    let flip = ints
        .iter()
        .find(|x| !x.is_zero())
        .map(|x| x.is_negative())
        .unwrap_or(false);
    if flip {
        ints.into_iter().map(|x| -x).collect()
    } else {
        ints
    }
}

fn span_key(basis: &[Vec<Rat>]) -> String {
    let mut s = String::new();
    for row in basis {
        for x in row {
            s.push_str(&format!("{x},"));
        }
        s.push(';');
    }
    s
}

/// One symmetry of a support: a leg permutation combined with per-leg symbol
/// permutations. Point x maps to y with `y[perm[j]] = symbol_maps[perm[j]][x[j]]`.
#[derive(Clone, Debug)]
pub struct SymmetryGenerator {
    pub leg_perm: Vec<usize>,
    pub symbol_maps: Vec<Vec<u64>>,
}

impl SymmetryGenerator {
    fn apply(&self, point: &[u64]) -> Vec<u64> {
        let k = point.len();
        let mut out = vec![0u64; k];
        for j in 0..k {
            let i = self.leg_perm[j];
            out[i] = self.symbol_maps[i][point[j] as usize];
        }
        out
    }
}

#[derive(Clone, Debug)]
struct GroupElement {
    leg_perm: Vec<usize>,
    point_perm: Vec<usize>,
}

/// A finite group of support symmetries, closed under composition.
#[derive(Clone, Debug)]
pub struct SymmetryGroup {
    elements: Vec<GroupElement>,
}

impl SymmetryGroup {
    /// Close the generators over the support. Every generator must map the
    /// support onto itself.
    pub fn generate(support: &Support, generators: &[SymmetryGenerator]) -> Result<Self> {
        let k = support.arity();
        let n = support.len();
        let mut gen_elements = Vec::new();
        for g in generators {
            if g.leg_perm.len() != k || g.symbol_maps.len() != k {
                return Err(Error::InvalidSymmetry("generator arity mismatch".into()));
            }
            let mut seen_legs = vec![false; k];
            for &i in &g.leg_perm {
                if i >= k || seen_legs[i] {
                    return Err(Error::InvalidSymmetry(
                        "leg_perm is not a permutation".into(),
                    ));
                }
                seen_legs[i] = true;
            }
            for (i, map) in g.symbol_maps.iter().enumerate() {
                if map.len() as u64 != support.dims()[i] {
                    return Err(Error::InvalidSymmetry(format!(
                        "symbol map on leg {i} has wrong length"
                    )));
                }
                let mut seen = vec![false; map.len()];
                for &s in map {
                    if s as usize >= map.len() || seen[s as usize] {
                        return Err(Error::InvalidSymmetry(format!(
                            "symbol map on leg {i} is not a permutation"
                        )));
                    }
                    seen[s as usize] = true;
                }
            }
            for j in 0..k {
                if support.dims()[g.leg_perm[j]] != support.dims()[j] {
                    return Err(Error::InvalidSymmetry(
                        "leg permutation moves between unequal dimensions".into(),
                    ));
                }
            }
            let mut point_perm = Vec::with_capacity(n);
            for p in support.points() {
                let image = crate::tensor::SupportPoint(g.apply(&p.0));
                match support.index_of(&image) {
                    Some(idx) => point_perm.push(idx),
                    None => {
                        return Err(Error::InvalidSymmetry(format!(
                            "generator does not fix the support: {:?} -> {:?}",
                            p.0, image.0
                        )))
                    }
                }
            }
            gen_elements.push(GroupElement {
                leg_perm: g.leg_perm.clone(),
                point_perm,
            });
        }
        // BFS closure
        let identity = GroupElement {
            leg_perm: (0..k).collect(),
            point_perm: (0..n).collect(),
        };
        let mut seen: BTreeSet<(Vec<usize>, Vec<usize>)> = BTreeSet::new();
        seen.insert((identity.leg_perm.clone(), identity.point_perm.clone()));
        let mut elements = vec![identity];
        let mut frontier = 0;
        while frontier < elements.len() {
            let current = elements[frontier].clone();
            frontier += 1;
            for g in &gen_elements {
                let leg_perm: Vec<usize> =
                    current.leg_perm.iter().map(|&j| g.leg_perm[j]).collect();
                let point_perm: Vec<usize> = current
                    .point_perm
                    .iter()
                    .map(|&p| g.point_perm[p])
                    .collect();
                if seen.insert((leg_perm.clone(), point_perm.clone())) {
                    elements.push(GroupElement {
                        leg_perm,
                        point_perm,
                    });
                    if elements.len() > GROUP_ORDER_CAP {
                        return Err(Error::InvalidSymmetry(format!(
                            "group order exceeds cap {GROUP_ORDER_CAP}"
                        )));
                    }
                }
            }
        }
        Ok(SymmetryGroup { elements })
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    /// Penalties are constant along an orbit only if the labeling transforms
    /// linearly on every leg: for each generator and each source leg j with
    /// image i, label differences on leg j must map to a fixed nonzero
    /// multiple of themselves on leg i.
    pub fn labeling_compatible(
        &self,
        support: &Support,
        labeling: &TightLabeling,
        generators: &[SymmetryGenerator],
    ) -> bool {
        for g in generators {
            for j in 0..support.arity() {
                let i = g.leg_perm[j];
                let occ = support.occurring(j);
                if occ.len() < 2 {
                    continue;
                }
                let b0 = occ[0];
                let base = labeling.value(j, occ[1]) - labeling.value(j, b0);
                let mapped_base = labeling.value(i, g.symbol_maps[i][occ[1] as usize])
                    - labeling.value(i, g.symbol_maps[i][b0 as usize]);
                if base == 0 {
                    return false; // labeling not injective here anyway
                }
                for &b in &occ[1..] {
                    let d = labeling.value(j, b) - labeling.value(j, b0);
                    let md = labeling.value(i, g.symbol_maps[i][b as usize])
                        - labeling.value(i, g.symbol_maps[i][b0 as usize]);
                    // require md / d == mapped_base / base exactly
                    if (md as i128) * (base as i128) != (mapped_base as i128) * (d as i128) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Whether a distribution on the points is invariant under the group.
    pub fn fixes_distribution(&self, p: &[f64]) -> bool {
        self.elements.iter().all(|e| {
            e.point_perm
                .iter()
                .enumerate()
                .all(|(from, &to)| (p[from] - p[to]).abs() < 1e-12)
        })
    }

    /// Smallest class encoding of the relation's orbit.
    fn orbit_key(&self, classes: &[Vec<usize>]) -> Vec<Vec<usize>> {
        let mut best: Option<Vec<Vec<usize>>> = None;
        for e in &self.elements {
            let mut mapped: Vec<Vec<usize>> = classes
                .iter()
                .map(|c| {
                    let mut m: Vec<usize> = c.iter().map(|&p| e.point_perm[p]).collect();
                    m.sort_unstable();
                    m
                })
                .collect();
            mapped.sort();
            if best.as_ref().is_none_or(|b| mapped < *b) {
                best = Some(mapped);
            }
        }
        best.unwrap()
    }

    /// Keep one representative relation per orbit.
    pub fn orbit_representatives(&self, relations: Vec<EquivRelation>) -> Vec<EquivRelation> {
        let mut seen: BTreeSet<Vec<Vec<usize>>> = BTreeSet::new();
        let mut out = Vec::new();
        for rel in relations {
            if seen.insert(self.orbit_key(rel.classes())) {
                out.push(rel);
            }
        }
        out
    }
}

/// Leg-transposition and equal-part symbol-swap generators of a Dicke
/// support's symmetry group.
pub fn dicke_symmetry_generators(lambda: &[u64]) -> Vec<SymmetryGenerator> {
    let k: usize = lambda.iter().sum::<u64>() as usize;
    let n = lambda.len();
    let mut gens = Vec::new();
    for j in 0..k.saturating_sub(1) {
        let mut leg_perm: Vec<usize> = (0..k).collect();
        leg_perm.swap(j, j + 1);
        gens.push(SymmetryGenerator {
            leg_perm,
            symbol_maps: vec![(0..n as u64).collect(); k],
        });
    }
    for a in 0..n {
        for b in (a + 1)..n {
            if lambda[a] == lambda[b] {
                let mut map: Vec<u64> = (0..n as u64).collect();
                map.swap(a, b);
                gens.push(SymmetryGenerator {
                    leg_perm: (0..k).collect(),
                    symbol_maps: vec![map; k],
                });
            }
        }
    }
    gens
}

/// How the candidate distribution P is chosen.
#[derive(Clone, Debug)]
pub enum PStrategy {
    Uniform,
    Supplied(Vec<f64>),
    /// Seeded random-restart hill climbing on the full bound objective,
    /// starting from uniform. Every iterate yields a valid bound; the best
    /// one is kept.
    Ascent {
        restarts: usize,
        steps: usize,
    },
}

/// How the labeling is chosen.
#[derive(Clone, Debug)]
pub enum LabelingChoice {
    Supplied(TightLabeling),
    Synthesize,
}

/// Options for [`main_lower_bound`].
#[derive(Clone, Debug)]
pub struct MainBoundOptions {
    pub labeling: LabelingChoice,
    pub p_strategy: PStrategy,
    pub enumeration: RelationEnumeration,
    pub symmetry: Option<Vec<SymmetryGenerator>>,
    pub seed: u64,
    pub ipf: IpfOptions,
    pub budget: u64,
}

impl Default for MainBoundOptions {
    fn default() -> Self {
        MainBoundOptions {
            labeling: LabelingChoice::Synthesize,
            p_strategy: PStrategy::Uniform,
            enumeration: RelationEnumeration::Closed,
            symmetry: None,
            seed: crate::DEFAULT_SEED,
            ipf: IpfOptions::default(),
            budget: RELATION_BUDGET,
        }
    }
}

/// The worst (penalty-maximizing) relation of a certificate.
#[derive(Clone, Debug, Serialize)]
pub struct WorstRelation {
    pub axis: usize,
    pub classes: Vec<Vec<usize>>,
    pub pair_count: usize,
    pub rank: usize,
    pub coupling_entropy_bits: f64,
    pub dual_gap_bits: f64,
    pub penalty: f64,
}

/// A computed lower bound plus everything needed to re-verify it.
#[derive(Clone, Debug, Serialize)]
pub struct BoundCertificate {
    pub bound_bits: f64,
    pub arity: usize,
    pub dims: Vec<u64>,
    pub support_size: usize,
    pub points: Vec<Vec<u64>>,
    pub strategy: String,
    pub enumeration: String,
    pub witness_p: Vec<f64>,
    pub entropy_p_bits: f64,
    pub labeling: Vec<Vec<i64>>,
    pub worst: Option<WorstRelation>,
    pub relation_count: usize,
    pub relations_evaluated: usize,
    pub symmetry_order: usize,
}

impl BoundCertificate {
    /// Re-derive the bound from the stored witnesses.
    pub fn recompute_bound(&self) -> f64 {
        let penalty = self.worst.as_ref().map_or(0.0, |w| w.penalty).max(0.0);
        self.entropy_p_bits - (self.arity as f64 - 2.0) * penalty
    }
}

/// One relation's contribution to the bound: (max H(Q) + dual gap - H(P)) / r(R),
/// rounded up one ulp so the subtracted term errs against us.
pub fn relation_penalty(
    support: &Support,
    labeling: &TightLabeling,
    relation: &EquivRelation,
    marg: &crate::entropy::MarginalFamily,
    h_p: f64,
    ipf_opts: IpfOptions,
) -> Result<PenaltyReport> {
    let rank = relation_rank(support, labeling, relation)?;
    let coupling = max_entropy_coupling(support, relation, marg, ipf_opts)?;
    let raw = (coupling.entropy_bits + coupling.dual_gap_bits - h_p) / rank as f64;
    Ok(PenaltyReport {
        penalty: next_up_f64(raw),
        rank,
        coupling_entropy_bits: coupling.entropy_bits,
        dual_gap_bits: coupling.dual_gap_bits,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct PenaltyReport {
    pub penalty: f64,
    pub rank: usize,
    pub coupling_entropy_bits: f64,
    pub dual_gap_bits: f64,
}

struct Evaluation {
    bound: f64,
    h_p: f64,
    p: Vec<f64>,
    worst: Option<WorstRelation>,
}

fn evaluate_candidate(
    support: &Support,
    labeling: &TightLabeling,
    relations: &[EquivRelation],
    p: &Distribution,
    ipf_opts: IpfOptions,
) -> Result<Evaluation> {
    let k = support.arity();
    // entropy lift: replace P by the max-entropy distribution with the same
    // marginals, then use that distribution's own exact marginals throughout
    let m0 = marginals(support, p);
    let lifted = max_entropy_on_support(support, &m0, ipf_opts)?;
    let p_star = if lifted.entropy_bits >= p.entropy_bits() {
        lifted.dist
    } else {
        p.clone()
    };
    let m_star = marginals(support, &p_star);
    let h_star = p_star.entropy_bits();

    let penalties: Vec<Result<PenaltyReport>> = relations
        .par_iter()
        .map(|rel| {
            let report = relation_penalty(support, labeling, rel, &m_star, h_star, ipf_opts)?;
            debug_assert!(report.rank >= 1 && report.rank <= k.saturating_sub(2).max(1));
            Ok(report)
        })
        .collect();

    let mut worst: Option<(usize, PenaltyReport)> = None;
    for (idx, res) in penalties.into_iter().enumerate() {
        let report = res?;
        let better = match &worst {
            None => true,
            Some((widx, best)) => {
                report.penalty > best.penalty
                    || (report.penalty == best.penalty && relations[idx] < relations[*widx])
            }
        };
        if better {
            worst = Some((idx, report));
        }
    }
    let (bound, worst) = match worst {
        None => (h_star, None),
        Some((idx, report)) => {
            let rel = &relations[idx];
            let bound = h_star - (k as f64 - 2.0) * report.penalty.max(0.0);
            (
                bound,
                Some(WorstRelation {
                    axis: rel.axis(),
                    classes: rel.classes().to_vec(),
                    pair_count: rel.pair_count(),
                    rank: report.rank,
                    coupling_entropy_bits: report.coupling_entropy_bits,
                    dual_gap_bits: report.dual_gap_bits,
                    penalty: report.penalty,
                }),
            )
        }
    };
    Ok(Evaluation {
        bound,
        h_p: h_star,
        p: p_star.probs().to_vec(),
        worst,
    })
}

/// Certified lower bound on the monomial subexponent of a tight tensor.
pub fn main_lower_bound(t: &SparseTensor, opts: &MainBoundOptions) -> Result<BoundCertificate> {
    let support = t.support();
    if support.is_empty() {
        return Err(Error::InvalidArgument("empty tensor".into()));
    }
    let k = support.arity();
    let labeling = match &opts.labeling {
        LabelingChoice::Supplied(l) => {
            if !check_tight(&support, l)? {
                return Err(Error::LabelingMismatch(
                    "supplied labeling is not tight for this support".into(),
                ));
            }
            l.clone()
        }
        LabelingChoice::Synthesize => match find_labeling(&support, opts.seed)? {
            LabelingSearch::Tight { labeling, .. } => labeling,
            LabelingSearch::NotTight { leg, a, b } => return Err(Error::NotTight { leg, a, b }),
            LabelingSearch::Undetermined => {
                return Err(Error::InvalidArgument(
                    "labeling search exhausted its retry budget".into(),
                ))
            }
        },
    };

    let relations = match opts.enumeration {
        RelationEnumeration::Exhaustive => enumerate_relations(&support, opts.budget)?,
        RelationEnumeration::Closed => {
            enumerate_closed_relations(&support, &labeling, opts.budget)?
        }
    };
    let relation_count = relations.len();

    let (group, evaluated_relations) = match &opts.symmetry {
        Some(gens) => {
            let group = SymmetryGroup::generate(&support, gens)?;
            if !group.labeling_compatible(&support, &labeling, gens) {
                return Err(Error::InvalidSymmetry(
                    "labeling is not equivariant under the group; orbit reduction would be unsound"
                        .into(),
                ));
            }
            let reps = group.orbit_representatives(relations.clone());
            (Some(group), reps)
        }
        None => (None, relations.clone()),
    };

    let eval_with = |p: &Distribution| -> Result<Evaluation> {
        let rels: &[EquivRelation] = match &group {
            Some(g) if g.fixes_distribution(p.probs()) => &evaluated_relations,
            _ => &relations,
        };
        evaluate_candidate(&support, &labeling, rels, p, opts.ipf)
    };

    let n = support.len();
    let (strategy_name, best) = match &opts.p_strategy {
        PStrategy::Uniform => ("uniform".to_string(), eval_with(&Distribution::uniform(n))?),
        PStrategy::Supplied(p) => {
            if p.len() != n {
                return Err(Error::InvalidDistribution(format!(
                    "supplied P has {} entries, support has {n}",
                    p.len()
                )));
            }
            let dist = Distribution::new(p.clone())?;
            ("supplied".to_string(), eval_with(&dist)?)
        }
        PStrategy::Ascent { restarts, steps } => {
            let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
            let mut best = eval_with(&Distribution::uniform(n))?;
            for _ in 0..*restarts {
                let mut current: Vec<f64> = best.p.clone();
                for _ in 0..*steps {
                    let proposal: Vec<f64> = current
                        .iter()
                        .map(|&x| (x.max(1e-9)) * (rng.gen_range(-0.3f64..0.3)).exp())
                        .collect();
                    let Ok(dist) = Distribution::new(proposal) else {
                        continue;
                    };
                    let eval = eval_with(&dist)?;
                    if eval.bound > best.bound {
                        current = eval.p.clone();
                        best = eval;
                    }
                }
            }
            ("ascent".to_string(), best)
        }
    };

    Ok(BoundCertificate {
        bound_bits: best.bound,
        arity: k,
        dims: support.dims().to_vec(),
        support_size: n,
        points: support.points().iter().map(|p| p.0.clone()).collect(),
        strategy: strategy_name,
        enumeration: match opts.enumeration {
            RelationEnumeration::Exhaustive => "exhaustive".into(),
            RelationEnumeration::Closed => "closed".into(),
        },
        witness_p: best.p,
        entropy_p_bits: best.h_p,
        labeling: labeling.legs().to_vec(),
        worst: best.worst,
        relation_count,
        relations_evaluated: evaluated_relations.len(),
        symmetry_order: group.as_ref().map_or(1, SymmetryGroup::order),
    })
}

/// Lower bound for tight 3-tensors: the maximin marginal entropy.
#[derive(Clone, Debug, Serialize)]
pub struct TripartiteBound {
    pub value_bits: f64,
    pub witness_p: Vec<f64>,
}

pub fn strassen_bound(t: &SparseTensor, opts: MaximinOptions) -> Result<TripartiteBound> {
    let support = t.support();
    if support.arity() != 3 {
        return Err(Error::WrongArity {
            expected: 3,
            got: support.arity(),
        });
    }
    match find_labeling(&support, opts.seed)? {
        LabelingSearch::Tight { .. } => {}
        LabelingSearch::NotTight { leg, a, b } => return Err(Error::NotTight { leg, a, b }),
        LabelingSearch::Undetermined => {
            return Err(Error::InvalidArgument(
                "labeling search exhausted its retry budget".into(),
            ))
        }
    }
    let (value, p) = maximin_marginal_entropy(&support, opts)?;
    Ok(TripartiteBound {
        value_bits: value,
        witness_p: p.probs().to_vec(),
    })
}

/// Closed form h(1/k) for the generalized W-state tensor.
pub fn wstate_closed_form(k: u64) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidArgument(
            "wstate closed form needs k >= 2".into(),
        ));
    }
    Ok(binary_entropy(1.0 / k as f64))
}
