//! Tightness of supports: sum-zero integer labelings, their synthesis, and
//! ranks of labeled difference matrices over equivalence relations.
//!
//! A support is tight when each leg admits an injective integer labeling such
//! that the labels sum to zero on every support point. The solution space of
//! the sum-zero constraints is a rational linear space; we compute it exactly
//! and certify non-tightness by exhibiting two indices whose labels are
//! forced equal on the whole space. Injective labelings are found by generic
//! integer sampling from the space.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::linalg::{nullspace_int, rank_int, rat_int, Rat};
use crate::tensor::Support;

/// Sampling retry budget for injective labelings.
pub const LABELING_RETRY_BUDGET: usize = 64;
/// Coefficient box for generic integer combinations of the labeling space.
pub const LABELING_COEFF_BOX: i64 = 1_000_000;

/// Per-leg integer labeling. `legs[i][b]` is the label of index b on leg i;
/// only indices occurring in the support matter.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TightLabeling {
    legs: Vec<Vec<i64>>,
}

impl TightLabeling {
    pub fn new(legs: Vec<Vec<i64>>) -> Self {
        TightLabeling { legs }
    }

    pub fn legs(&self) -> &[Vec<i64>] {
        &self.legs
    }

    pub fn value(&self, leg: usize, symbol: u64) -> i64 {
        self.legs[leg][symbol as usize]
    }

    /// The labeled image of a support point.
    pub fn labeled(&self, point: &[u64]) -> Vec<i64> {
        point
            .iter()
            .enumerate()
            .map(|(i, &b)| self.value(i, b))
            .collect()
    }

    pub fn to_json(&self) -> Value {
        json!(self.legs)
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let legs: Vec<Vec<i64>> = serde_json::from_value(v.clone())
            .map_err(|e| Error::MalformedInput(format!("labeling: {e}")))?;
        Ok(TightLabeling { legs })
    }

    fn check_dims(&self, support: &Support) -> Result<()> {
        if self.legs.len() != support.arity() {
            return Err(Error::LabelingMismatch(format!(
                "labeling has {} legs, support has {}",
                self.legs.len(),
                support.arity()
            )));
        }
        for (i, leg) in self.legs.iter().enumerate() {
            if (leg.len() as u64) < support.dims()[i] {
                return Err(Error::LabelingMismatch(format!(
                    "leg {i} labels {} indices, dimension is {}",
                    leg.len(),
                    support.dims()[i]
                )));
            }
        }
        Ok(())
    }
}

/// Identity labeling with the last leg shifted so that labels sum to zero on
/// every point of a Dicke support: label b on legs 0..k-1, label b - s on the
/// last leg, where s is the coordinate sum common to all points.
pub fn dicke_standard_labeling(lambda: &[u64]) -> TightLabeling {
    let k: u64 = lambda.iter().sum();
    let n = lambda.len() as u64;
    let s: i64 = lambda
        .iter()
        .enumerate()
        .map(|(j, &part)| (j as i64) * (part as i64))
        .sum();
    let mut legs: Vec<Vec<i64>> = (0..k).map(|_| (0..n as i64).collect()).collect();
    if let Some(last) = legs.last_mut() {
        for v in last.iter_mut() {
            *v -= s;
        }
    }
    TightLabeling::new(legs)
}

/// True iff the labels sum to zero on every support point and each leg's
/// labeling is injective on the indices occurring there.
pub fn check_tight(support: &Support, labeling: &TightLabeling) -> Result<bool> {
    labeling.check_dims(support)?;
    for p in support.points() {
        let sum: i128 =
            p.0.iter()
                .enumerate()
                .map(|(i, &b)| labeling.value(i, b) as i128)
                .sum();
        if sum != 0 {
            return Ok(false);
        }
    }
    for leg in 0..support.arity() {
        let occurring = support.occurring(leg);
        let mut seen = BTreeSet::new();
        for &b in &occurring {
            if !seen.insert(labeling.value(leg, b)) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Rational basis of the space of all (not necessarily injective) labelings
/// satisfying the sum-zero constraints, over the occurring indices.
#[derive(Clone, Debug)]
pub struct LabelingSpace {
    /// occurring[i]: sorted indices occurring on leg i
    occurring: Vec<Vec<u64>>,
    /// column index where leg i's occurring symbols start
    col_offset: Vec<usize>,
    /// integer basis vectors (denominators cleared), one per space dimension
    basis: Vec<Vec<BigInt>>,
    dims: Vec<u64>,
}

impl LabelingSpace {
    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<BigInt>] {
        &self.basis
    }

    fn col(&self, leg: usize, symbol: u64) -> usize {
        let pos = self.occurring[leg]
            .binary_search(&symbol)
            .expect("occurring symbol");
        self.col_offset[leg] + pos
    }

    /// Integer combination of the basis with the given coefficients, as a
    /// labeling (non-occurring indices get label 0).
    pub fn combine(&self, coeffs: &[i64]) -> Result<TightLabeling> {
        assert_eq!(coeffs.len(), self.basis.len());
        let ncols = self.col_offset.last().copied().unwrap_or(0)
            + self.occurring.last().map_or(0, Vec::len);
        let mut values = vec![BigInt::zero(); ncols];
        for (c, vec) in coeffs.iter().zip(&self.basis) {
            for (j, v) in vec.iter().enumerate() {
                values[j] += v * BigInt::from(*c);
            }
        }
        let mut legs = Vec::with_capacity(self.occurring.len());
        for (i, occ) in self.occurring.iter().enumerate() {
            let mut leg = vec![0i64; self.dims[i] as usize];
            for (pos, &b) in occ.iter().enumerate() {
                let v = &values[self.col_offset[i] + pos];
                leg[b as usize] = v
                    .to_i64()
                    .ok_or_else(|| Error::InvalidArgument("labeling value overflows i64".into()))?;
            }
            legs.push(leg);
        }
        Ok(TightLabeling::new(legs))
    }

    /// If some leg has two occurring indices whose labels agree on the whole
    /// space, no injective solution exists; return that certificate.
    pub fn forced_collision(&self) -> Option<(usize, u64, u64)> {
        for (leg, occ) in self.occurring.iter().enumerate() {
            for (ai, &a) in occ.iter().enumerate() {
                for &b in &occ[ai + 1..] {
                    let ca = self.col(leg, a);
                    let cb = self.col(leg, b);
                    if self.basis.iter().all(|v| v[ca] == v[cb]) {
                        return Some((leg, a, b));
                    }
                }
            }
        }
        None
    }
}

/// Outcome of labeling synthesis.
#[derive(Clone, Debug)]
pub enum LabelingSearch {
    /// An injective sum-zero labeling, with the full solution space.
    Tight {
        labeling: TightLabeling,
        space: LabelingSpace,
    },
    /// Certified: the labels of indices `a` and `b` on `leg` agree on every
    /// solution, so no injective labeling exists.
    NotTight { leg: usize, a: u64, b: u64 },
    /// Retry budget exhausted without an injective sample.
    Undetermined,
}

/// Compute the labeling solution space and synthesize an injective labeling.
pub fn find_labeling(support: &Support, seed: u64) -> Result<LabelingSearch> {
    if support.is_empty() {
        return Err(Error::InvalidArgument("support is empty".into()));
    }
    let space = labeling_space(support)?;
    if let Some((leg, a, b)) = space.forced_collision() {
        return Ok(LabelingSearch::NotTight { leg, a, b });
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    for _ in 0..LABELING_RETRY_BUDGET {
        let coeffs: Vec<i64> = (0..space.dimension())
            .map(|_| rng.gen_range(-LABELING_COEFF_BOX..=LABELING_COEFF_BOX))
            .collect();
        let labeling = space.combine(&coeffs)?;
        if check_tight(support, &labeling)? {
            return Ok(LabelingSearch::Tight { labeling, space });
        }
    }
    Ok(LabelingSearch::Undetermined)
}

/// The sum-zero constraint space of a support.
pub fn labeling_space(support: &Support) -> Result<LabelingSpace> {
    let k = support.arity();
    let occurring: Vec<Vec<u64>> = (0..k).map(|i| support.occurring(i)).collect();
    let mut col_offset = Vec::with_capacity(k);
    let mut ncols = 0usize;
    for occ in &occurring {
        col_offset.push(ncols);
        ncols += occ.len();
    }
    let mut rows = Vec::with_capacity(support.len());
    for p in support.points() {
        let mut row = vec![Rat::zero(); ncols];
        for (i, &b) in p.0.iter().enumerate() {
            let pos = occurring[i].binary_search(&b).expect("occurring");
            row[col_offset[i] + pos] = rat_int(1);
        }
        rows.push(row);
    }
    let basis = nullspace_int(&rows, ncols);
    Ok(LabelingSpace {
        occurring,
        col_offset,
        basis,
        dims: support.dims().to_vec(),
    })
}

/// A fiber-respecting equivalence relation on a support: a partition of the
/// point indices such that every class lies inside one fiber {x : x_i = v} of
/// the given axis, with at least one class of size two or more.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct EquivRelation {
    axis: usize,
    classes: Vec<Vec<usize>>,
}

impl EquivRelation {
    pub fn new(support: &Support, axis: usize, mut classes: Vec<Vec<usize>>) -> Result<Self> {
        if axis >= support.arity() {
            return Err(Error::InvalidRelation(format!("axis {axis} out of range")));
        }
        let n = support.len();
        let mut seen = vec![false; n];
        for class in &mut classes {
            class.sort_unstable();
            if class.is_empty() {
                return Err(Error::InvalidRelation("empty class".into()));
            }
            let v = support.points()[class[0]].0[axis];
            for &idx in class.iter() {
                if idx >= n || seen[idx] {
                    return Err(Error::InvalidRelation(format!(
                        "index {idx} out of range or repeated"
                    )));
                }
                seen[idx] = true;
                if support.points()[idx].0[axis] != v {
                    return Err(Error::InvalidRelation(format!(
                        "class mixes fibers on axis {axis}"
                    )));
                }
            }
        }
        if !seen.iter().all(|&s| s) {
            return Err(Error::InvalidRelation(
                "classes do not cover the support".into(),
            ));
        }
        if classes.iter().all(|c| c.len() < 2) {
            return Err(Error::InvalidRelation(
                "all classes are singletons (relation inside the diagonal)".into(),
            ));
        }
        classes.sort();
        Ok(EquivRelation { axis, classes })
    }

    pub fn axis(&self) -> usize {
        self.axis
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    /// Number of ordered pairs, reflexive pairs included.
    pub fn pair_count(&self) -> usize {
        self.classes.iter().map(|c| c.len() * c.len()).sum()
    }

    /// All ordered pairs (x, y) of the relation, reflexive included.
    pub fn ordered_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.pair_count());
        for class in &self.classes {
            for &x in class {
                for &y in class {
                    out.push((x, y));
                }
            }
        }
        out
    }

    /// The multiset of class sizes, sorted descending.
    pub fn class_type(&self) -> Vec<usize> {
        let mut sizes: Vec<usize> = self.classes.iter().map(Vec::len).collect();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        sizes
    }

    pub fn to_json(&self) -> Value {
        json!({ "axis": self.axis, "classes": self.classes })
    }
}

/// Rank over the rationals of the matrix with one row per pair of the
/// relation. Within a class all differences are spanned by differences
/// against one representative, so those are the rows used.
pub fn relation_rank(
    support: &Support,
    labeling: &TightLabeling,
    relation: &EquivRelation,
) -> Result<usize> {
    labeling.check_dims(support)?;
    let rows = spanning_rows(support, labeling, relation);
    Ok(rank_int(&rows))
}

fn spanning_rows(
    support: &Support,
    labeling: &TightLabeling,
    relation: &EquivRelation,
) -> Vec<Vec<BigInt>> {
    let mut rows = Vec::new();
    for class in relation.classes() {
        let rep = labeling.labeled(&support.points()[class[0]].0);
        for &other in &class[1..] {
            let lab = labeling.labeled(&support.points()[other].0);
            rows.push(
                lab.iter()
                    .zip(&rep)
                    .map(|(a, b)| BigInt::from(a - b))
                    .collect(),
            );
        }
    }
    rows
}

/// Generic (rank-maximizing) relation rank over the labeling space: the
/// maximum rank attained by random integer specializations. A generic
/// combination attains the true maximum; sampling several combinations makes
/// a miss overwhelmingly unlikely, and any miss only underestimates.
pub fn relation_rank_generic(
    support: &Support,
    space: &LabelingSpace,
    relation: &EquivRelation,
    seed: u64,
    trials: usize,
) -> Result<usize> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut best = 0;
    for _ in 0..trials.max(1) {
        let coeffs: Vec<i64> = (0..space.dimension())
            .map(|_| rng.gen_range(-LABELING_COEFF_BOX..=LABELING_COEFF_BOX))
            .collect();
        let labeling = space.combine(&coeffs)?;
        best = best.max(relation_rank(support, &labeling, relation)?);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{dicke_tensor, graph_tensor, unit_tensor, Graph, Support, SupportPoint};

    fn d22_support() -> Support {
        dicke_tensor(&[2, 2]).unwrap().support()
    }

    #[test]
    fn dicke_labeling_is_tight() {
        let s = d22_support();
        let lab = dicke_standard_labeling(&[2, 2]);
        assert!(check_tight(&s, &lab).unwrap());

        let w3 = dicke_tensor(&[1, 2]).unwrap().support();
        assert!(check_tight(&w3, &dicke_standard_labeling(&[1, 2])).unwrap());
    }

    #[test]
    fn triangle_graph_labeling_is_tight() {
        // vertex 0 reads edges (01, 02), vertex 1 reads (01, 12),
        // vertex 2 reads (02, 12); signed powers of two telescope to zero.
        let t = graph_tensor(&Graph::complete(3).unwrap(), 2).unwrap();
        let legs = vec![
            vec![0, -4, 1, -3], // a - 4c at index 2a + c
            vec![0, 2, -1, 1],  // -a + 2b at index 2a + b
            vec![0, -2, 4, 2],  // 4c - 2b at index 2c + b
        ];
        assert!(check_tight(&t.support(), &TightLabeling::new(legs)).unwrap());
    }

    #[test]
    fn unit_tensor_labeling() {
        let s = unit_tensor(3, 3).unwrap().support();
        let legs = vec![vec![0, 1, 2], vec![0, 1, 2], vec![0, -2, -4]];
        assert!(check_tight(&s, &TightLabeling::new(legs)).unwrap());
    }

    #[test]
    fn full_square_is_not_tight() {
        let points = vec![
            SupportPoint(vec![0, 0]),
            SupportPoint(vec![0, 1]),
            SupportPoint(vec![1, 0]),
            SupportPoint(vec![1, 1]),
        ];
        let s = Support::new(vec![2, 2], points).unwrap();
        // the four sum-zero constraints force equal labels on each leg
        for legs in [
            vec![vec![0, 1], vec![0, -1]],
            vec![vec![3, 5], vec![-3, -5]],
        ] {
            assert!(!check_tight(&s, &TightLabeling::new(legs)).unwrap());
        }
        match find_labeling(&s, 7).unwrap() {
            LabelingSearch::NotTight { .. } => {}
            other => panic!("expected NotTight, got {other:?}"),
        }
    }

    #[test]
    fn synthesis_finds_injective_labeling() {
        for support in [
            d22_support(),
            dicke_tensor(&[1, 2]).unwrap().support(),
            unit_tensor(3, 3).unwrap().support(),
            graph_tensor(&Graph::cycle(3).unwrap(), 2)
                .unwrap()
                .support(),
        ] {
            match find_labeling(&support, 42).unwrap() {
                LabelingSearch::Tight { labeling, .. } => {
                    assert!(check_tight(&support, &labeling).unwrap());
                }
                other => panic!("expected Tight, got {other:?}"),
            }
        }
    }

    #[test]
    fn sum_violation_fails_check() {
        let s = unit_tensor(2, 3).unwrap().support();
        let legs = vec![vec![0, 1], vec![0, 1], vec![0, 1]];
        assert!(!check_tight(&s, &TightLabeling::new(legs)).unwrap());
    }

    #[test]
    fn d22_relation_ranks() {
        let s = d22_support();
        let lab = dicke_standard_labeling(&[2, 2]);
        let fibers = s.fibers(0);
        let f0 = fibers[&0].clone();
        let f1 = fibers[&1].clone();
        assert_eq!(f0.len(), 3);

        // whole R_1: one class per fiber
        let full = EquivRelation::new(&s, 0, vec![f0.clone(), f1.clone()]).unwrap();
        assert_eq!(full.pair_count(), 18);
        assert_eq!(relation_rank(&s, &lab, &full).unwrap(), 2);

        // type (2,1) with mirrored classes: rank 1
        let pair = EquivRelation::new(
            &s,
            0,
            vec![
                vec![f0[0], f0[1]],
                vec![f0[2]],
                vec![f1[1], f1[2]],
                vec![f1[0]],
            ],
        )
        .unwrap();
        assert_eq!(pair.pair_count(), 10);
        assert_eq!(relation_rank(&s, &lab, &pair).unwrap(), 1);

        // generic rank agrees here
        let space = labeling_space(&s).unwrap();
        assert_eq!(relation_rank_generic(&s, &space, &full, 5, 4).unwrap(), 2);
        assert_eq!(relation_rank_generic(&s, &space, &pair, 5, 4).unwrap(), 1);
    }

    #[test]
    fn all_singleton_relation_rejected() {
        let s = d22_support();
        let classes: Vec<Vec<usize>> = (0..s.len()).map(|i| vec![i]).collect();
        assert!(EquivRelation::new(&s, 0, classes).is_err());
    }

    #[test]
    fn cross_fiber_class_rejected() {
        let s = d22_support();
        let fibers = s.fibers(0);
        let bad = [fibers[&0].clone(), fibers[&1].clone()].concat();
        assert!(EquivRelation::new(&s, 0, vec![bad]).is_err());
    }

    #[test]
    fn generic_rank_dominates_specializations() {
        let s = d22_support();
        let space = labeling_space(&s).unwrap();
        let fibers = s.fibers(0);
        let rel = EquivRelation::new(&s, 0, vec![fibers[&0].clone(), fibers[&1].clone()]).unwrap();
        let generic = relation_rank_generic(&s, &space, &rel, 11, 8).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(99);
        for _ in 0..10 {
            let coeffs: Vec<i64> = (0..space.dimension())
                .map(|_| rng.gen_range(-LABELING_COEFF_BOX..=LABELING_COEFF_BOX))
                .collect();
            let lab = space.combine(&coeffs).unwrap();
            assert!(relation_rank(&s, &lab, &rel).unwrap() <= generic);
        }
    }
}
