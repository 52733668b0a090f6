//! Empirical re-enactment of the monomial restriction pipeline at small N:
//! type-class restriction of a tensor power, the average-free-set hash
//! filter, and the greedy collision-free diagonal.
//!
//! Elements of a power support are stored as index vectors into the base
//! support (length N), so leg coordinates are symbol strings and never need
//! the flattened mixed-radix encoding.

use std::collections::{BTreeMap, HashSet};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::entropy::Distribution;
use crate::error::{Error, Result};
use crate::subrank::{main_lower_bound, MainBoundOptions};
use crate::tensor::{SparseTensor, Support, SUPPORT_BUDGET};
use crate::tightness::{check_tight, find_labeling, LabelingSearch, TightLabeling};

/// Exhaustive average-free search is limited to this range bound.
pub const AVGFREE_EXHAUSTIVE_CAP: u64 = 30;

/// A k-average-free subset of [1, n]: a1 + ... + ak = k y with all members
/// forces a1 = ... = ak = y.
#[derive(Clone, Debug, Serialize)]
pub struct AverageFreeSet {
    /// Average order (the k in the defining equation).
    pub k: u64,
    /// Range bound.
    pub n: u64,
    /// Elements, increasing.
    pub elements: Vec<u64>,
}

impl AverageFreeSet {
    /// Exhaustive defining check by counting ordered k-tuples: the
    /// coefficient of x^{ky} in (sum_a x^a)^k must be exactly 1 (the
    /// all-equal tuple) for every member y.
    pub fn validate(&self) -> bool {
        validate_avg_free(self.k, &self.elements)
    }

    pub fn max_element(&self) -> u64 {
        self.elements.last().copied().unwrap_or(0)
    }
}

fn validate_avg_free(k: u64, elements: &[u64]) -> bool {
    if elements.is_empty() {
        return true;
    }
    let max = *elements.last().unwrap() as usize;
    let mut poly = vec![0u128; max + 1];
    for &a in elements {
        poly[a as usize] = 1;
    }
    let mut acc = vec![0u128; 1];
    acc[0] = 1;
    for _ in 0..k {
        let mut next = vec![0u128; acc.len() + max];
        for (i, &c) in acc.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for (j, &d) in poly.iter().enumerate() {
                if d != 0 {
                    next[i + j] = next[i + j].saturating_add(c * d);
                }
            }
        }
        acc = next;
    }
    elements.iter().all(|&y| {
        let target = (k * y) as usize;
        acc.get(target).copied().unwrap_or(0) == 1
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AvgFreeMode {
    /// Branch-and-bound search for a maximum set; n capped.
    Exhaustive,
    /// Ascending scan keeping every element that causes no violation.
    Greedy,
}

/// Build a k-average-free subset of [1, n].
pub fn average_free_set(k: u64, n: u64, mode: AvgFreeMode) -> Result<AverageFreeSet> {
    if k < 1 || n < 1 {
        return Err(Error::InvalidArgument(
            "average_free_set needs k, n >= 1".into(),
        ));
    }
    let elements = match mode {
        AvgFreeMode::Greedy => {
            let mut s: Vec<u64> = Vec::new();
            for c in 1..=n {
                s.push(c);
                if !validate_avg_free(k, &s) {
                    s.pop();
                }
            }
            s
        }
        AvgFreeMode::Exhaustive => {
            if n > AVGFREE_EXHAUSTIVE_CAP {
                return Err(Error::Budget(format!(
                    "exhaustive average-free search capped at n = {AVGFREE_EXHAUSTIVE_CAP}"
                )));
            }
            let mut best: Vec<u64> = Vec::new();
            let mut current: Vec<u64> = Vec::new();
            search_avg_free(k, n, 1, &mut current, &mut best);
            best
        }
    };
    Ok(AverageFreeSet { k, n, elements })
}

fn search_avg_free(k: u64, n: u64, next: u64, current: &mut Vec<u64>, best: &mut Vec<u64>) {
    if next > n {
        if current.len() > best.len() {
            *best = current.clone();
        }
        return;
    }
    let remaining = (n - next + 1) as usize;
    if current.len() + remaining <= best.len() {
        return; // cannot beat the incumbent
    }
    current.push(next);
    if validate_avg_free(k, current) {
        search_avg_free(k, n, next + 1, current, best);
    }
    current.pop();
    search_avg_free(k, n, next + 1, current, best);
}

/// Exact multinomial coefficient n! / prod(parts!).
pub fn multinomial(n: u64, parts: &[u64]) -> Result<u128> {
    if parts.iter().sum::<u64>() != n {
        return Err(Error::InvalidArgument(
            "multinomial parts must sum to n".into(),
        ));
    }
    let mut acc: u128 = 1;
    let mut consumed = 0u64;
    for &part in parts {
        for i in 1..=part {
            acc = acc
                .checked_mul((consumed + i) as u128)
                .ok_or_else(|| Error::Budget("multinomial overflows u128".into()))?;
            acc /= i as u128;
        }
        consumed += part;
    }
    Ok(acc)
}

/// All elements of the N-th power support, as base-point index vectors in
/// lexicographic order.
pub fn power_support(support: &Support, n: usize) -> Result<Vec<Vec<usize>>> {
    let total = (support.len() as u128)
        .checked_pow(n as u32)
        .unwrap_or(u128::MAX);
    if total > SUPPORT_BUDGET as u128 {
        return Err(Error::SupportBudget(total, SUPPORT_BUDGET));
    }
    let mut out = Vec::with_capacity(total as usize);
    let mut element = vec![0usize; n];
    loop {
        out.push(element.clone());
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            element[pos] += 1;
            if element[pos] < support.len() {
                break;
            }
            element[pos] = 0;
            if pos == 0 {
                return Ok(out);
            }
        }
    }
}

/// Leg coordinate strings of a power element: `strings[i][j]` is the leg-i
/// symbol of the j-th base point.
pub fn element_leg_strings(support: &Support, element: &[usize]) -> Vec<Vec<u64>> {
    let k = support.arity();
    (0..k)
        .map(|i| element.iter().map(|&e| support.points()[e].0[i]).collect())
        .collect()
}

/// Result of restricting a power support to per-leg type classes.
#[derive(Clone, Debug)]
pub struct TypeRestriction {
    /// Surviving elements, in power-support (lexicographic) order.
    pub elements: Vec<Vec<usize>>,
    /// Per-leg type class sizes |T^N_{P_i}| (multinomials).
    pub leg_class_sizes: Vec<u128>,
}

/// Keep the elements whose leg-i string has exactly the prescribed symbol
/// counts, for every leg. `counts[i]` is aligned with `support.occurring(i)`
/// and must sum to N.
pub fn type_class_restrict(
    support: &Support,
    n: usize,
    counts: &[Vec<u64>],
) -> Result<TypeRestriction> {
    let k = support.arity();
    if counts.len() != k {
        return Err(Error::InvalidArgument("counts arity mismatch".into()));
    }
    let mut leg_class_sizes = Vec::with_capacity(k);
    for (i, leg_counts) in counts.iter().enumerate() {
        let occ = support.occurring(i);
        if leg_counts.len() != occ.len() {
            return Err(Error::NonIntegralType(format!(
                "leg {i}: {} counts for {} occurring symbols",
                leg_counts.len(),
                occ.len()
            )));
        }
        if leg_counts.iter().sum::<u64>() != n as u64 {
            return Err(Error::NonIntegralType(format!(
                "leg {i}: counts sum to {} instead of {n}",
                leg_counts.iter().sum::<u64>()
            )));
        }
        leg_class_sizes.push(multinomial(n as u64, leg_counts)?);
    }
    let occurring: Vec<Vec<u64>> = (0..k).map(|i| support.occurring(i)).collect();
    let all = power_support(support, n)?;
    let mut elements = Vec::new();
    'outer: for element in all {
        for i in 0..k {
            let mut got = vec![0u64; occurring[i].len()];
            for &e in &element {
                let sym = support.points()[e].0[i];
                let pos = occurring[i].binary_search(&sym).expect("occurring");
                got[pos] += 1;
            }
            if got != counts[i] {
                continue 'outer;
            }
        }
        elements.push(element);
    }
    Ok(TypeRestriction {
        elements,
        leg_class_sizes,
    })
}

/// Deterministic Miller-Rabin for u64.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n.is_multiple_of(p) {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..s - 1 {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

pub fn smallest_prime_at_least(n: u64) -> u64 {
    let mut c = n.max(2);
    while !is_prime(c) {
        c += 1;
    }
    c
}

/// Configuration of the modular hash: prime modulus, average-free target set,
/// per-position randomizers and per-leg offsets.
#[derive(Clone, Debug, Serialize)]
pub struct HashConfig {
    pub modulus: u64,
    pub avg_free: AverageFreeSet,
    /// Per-copy randomizers v_1..v_N.
    pub v: Vec<u64>,
    /// Per-leg offsets u_1..u_{k-1}.
    pub u: Vec<u64>,
    pub seed: u64,
}

impl HashConfig {
    /// Sample a configuration for a k-tensor power of length n: smallest
    /// prime at least `modulus_floor`, a greedy (k-1)-average-free set
    /// filling the admissible range, and uniform randomizers.
    pub fn sample(k: usize, n: usize, modulus_floor: u64, seed: u64) -> Result<HashConfig> {
        if k < 3 {
            return Err(Error::InvalidHashConfig(
                "hash construction needs arity >= 3".into(),
            ));
        }
        let modulus = smallest_prime_at_least(modulus_floor.max(k as u64));
        let bound = (modulus - 1) / (k as u64 - 1);
        if bound < 1 {
            return Err(Error::InvalidHashConfig("modulus too small".into()));
        }
        let avg_free = average_free_set(k as u64 - 1, bound, AvgFreeMode::Greedy)?;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let v: Vec<u64> = (0..n).map(|_| rng.gen_range(0..modulus)).collect();
        let u: Vec<u64> = (0..k - 1).map(|_| rng.gen_range(0..modulus)).collect();
        Ok(HashConfig {
            modulus,
            avg_free,
            v,
            u,
            seed,
        })
    }

    fn validate(&self, k: usize, n: usize) -> Result<()> {
        if !is_prime(self.modulus) {
            return Err(Error::InvalidHashConfig(format!(
                "modulus {} is not prime",
                self.modulus
            )));
        }
        if k < 3 {
            return Err(Error::InvalidHashConfig("arity must be >= 3".into()));
        }
        if (k as u64 - 1).is_multiple_of(self.modulus) {
            return Err(Error::InvalidHashConfig(
                "k - 1 is not invertible modulo the modulus".into(),
            ));
        }
        if self.avg_free.k != k as u64 - 1 {
            return Err(Error::InvalidHashConfig(format!(
                "average-free order {} does not match k - 1 = {}",
                self.avg_free.k,
                k - 1
            )));
        }
        if self.avg_free.max_element() * (k as u64 - 1) >= self.modulus {
            return Err(Error::InvalidHashConfig(
                "max(B) * (k-1) must stay below the modulus".into(),
            ));
        }
        if self.v.len() != n || self.u.len() != k - 1 {
            return Err(Error::InvalidHashConfig(
                "randomizer lengths do not match (n, k-1)".into(),
            ));
        }
        Ok(())
    }
}

/// Survivors of the hash filter. Every survivor has all k leg hashes equal to
/// a single value in B; that value is recorded per survivor.
#[derive(Clone, Debug)]
pub struct HashFilterResult {
    pub survivors: Vec<Vec<usize>>,
    pub common_hash: Vec<u64>,
}

/// The k leg hashes of one power element: b_i = u_i + sum_j label_ij v_j for
/// the first k-1 legs and b_k = (u_1 + ... + u_{k-1} - sum_j label_kj v_j)
/// divided by k-1, everything modulo the prime.
pub fn element_hashes(
    element: &[usize],
    support: &Support,
    labeling: &TightLabeling,
    cfg: &HashConfig,
) -> Vec<u64> {
    let k = support.arity();
    let m = cfg.modulus;
    let inv_km1 = pow_mod(k as u64 - 1, m - 2, m);
    let mut hashes = Vec::with_capacity(k);
    for i in 0..k {
        let mut dot = 0u64;
        for (j, &e) in element.iter().enumerate() {
            let label = labeling.value(i, support.points()[e].0[i]);
            let label_mod = (label.rem_euclid(m as i64)) as u64;
            dot = (dot + mul_mod(label_mod, cfg.v[j], m)) % m;
        }
        let b = if i < k - 1 {
            (cfg.u[i] + dot) % m
        } else {
            let u_sum = cfg.u.iter().fold(0u64, |acc, &x| (acc + x) % m);
            mul_mod(inv_km1, (u_sum + m - dot % m) % m, m)
        };
        hashes.push(b);
    }
    hashes
}

/// Filter power elements by requiring every leg hash to land in the
/// average-free set. Labels are applied coordinate-wise before hashing.
/// Tightness plus average-freeness force all k hashes of a survivor equal.
pub fn hash_filter(
    elements: &[Vec<usize>],
    support: &Support,
    labeling: &TightLabeling,
    cfg: &HashConfig,
) -> Result<HashFilterResult> {
    let k = support.arity();
    let n = elements.first().map_or(0, Vec::len);
    cfg.validate(k, n)?;
    if !check_tight(support, labeling)? {
        return Err(Error::LabelingMismatch(
            "labeling is not tight for this support".into(),
        ));
    }
    let in_b: HashSet<u64> = cfg.avg_free.elements.iter().copied().collect();
    let mut survivors = Vec::new();
    let mut common = Vec::new();
    for element in elements {
        let hashes = element_hashes(element, support, labeling, cfg);
        if hashes.iter().all(|h| in_b.contains(h)) {
            if hashes.iter().any(|&h| h != hashes[0]) {
                return Err(Error::InvalidHashConfig(
                    "survivor with unequal hashes; configuration violates the construction".into(),
                ));
            }
            survivors.push(element.clone());
            common.push(hashes[0]);
        }
    }
    Ok(HashFilterResult {
        survivors,
        common_hash: common,
    })
}

/// A collision-free diagonal extracted from a support.
#[derive(Clone, Debug, Serialize)]
pub struct DiagonalResult {
    /// Indices (into the input order) of the selected elements.
    pub selected: Vec<usize>,
    /// |Psi|: number of input elements.
    pub x: usize,
    /// |C|: number of unordered colliding pairs.
    pub y: usize,
    pub size: usize,
}

/// Pick one element per connected component of the collision graph (two
/// elements collide when they agree on some leg), taking the first element
/// in the given order as the representative. The selected set is independent
/// in the collision graph and has size at least x - y.
pub fn greedy_diagonal_strings(items: &[Vec<Vec<u64>>]) -> DiagonalResult {
    let n = items.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut v: usize) -> usize {
        while parent[v] != v {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        v
    }
    let k = items.first().map_or(0, Vec::len);
    let mut colliding: HashSet<(usize, usize)> = HashSet::new();
    for leg in 0..k {
        let mut groups: BTreeMap<&[u64], Vec<usize>> = BTreeMap::new();
        for (idx, item) in items.iter().enumerate() {
            groups.entry(&item[leg]).or_default().push(idx);
        }
        for group in groups.values() {
            for (ai, &a) in group.iter().enumerate() {
                for &b in &group[ai + 1..] {
                    colliding.insert((a.min(b), a.max(b)));
                    let (ra, rb) = (root(&mut parent, a), root(&mut parent, b));
                    if ra != rb {
                        parent[ra] = rb;
                    }
                }
            }
        }
    }
    let mut rep: BTreeMap<usize, usize> = BTreeMap::new();
    for idx in 0..n {
        let r = root(&mut parent, idx);
        rep.entry(r).or_insert(idx); // first in order wins
    }
    let mut selected: Vec<usize> = rep.into_values().collect();
    selected.sort_unstable();
    let y = colliding.len();
    DiagonalResult {
        x: n,
        y,
        size: selected.len(),
        selected,
    }
}

/// Convenience wrapper for power elements given as base-point index vectors.
pub fn greedy_diagonal(support: &Support, elements: &[Vec<usize>]) -> DiagonalResult {
    let items: Vec<Vec<Vec<u64>>> = elements
        .iter()
        .map(|e| element_leg_strings(support, e))
        .collect();
    greedy_diagonal_strings(&items)
}

/// Controls for the end-to-end experiment.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub trials: usize,
    pub seed: u64,
    /// Restrict the power to the type classes of the uniform distribution.
    pub type_restrict: bool,
    /// Apply the hash filter (needs arity >= 3).
    pub hash: bool,
    pub modulus_floor: u64,
    /// Compare against the certified lower bound of the base tensor.
    pub compute_target: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            trials: 20,
            seed: crate::DEFAULT_SEED,
            type_restrict: true,
            hash: true,
            modulus_floor: 11,
            compute_target: true,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TrialReport {
    pub trial: usize,
    pub modulus: u64,
    pub b_size: usize,
    pub survivors: usize,
    pub collisions: usize,
    pub diagonal: usize,
    pub rate: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    #[serde(rename = "N")]
    pub n: usize,
    pub trials: usize,
    pub psi: usize,
    pub best_rate: f64,
    pub target_bound: Option<f64>,
    pub per_trial: Vec<TrialReport>,
}

/// Run the restriction pipeline on the N-th power of a tight tensor:
/// type-class restriction, per-trial hash filtering, greedy diagonal. The
/// achieved rate log2(diagonal)/N approaches the certified bound from below
/// as N grows; at desk scale it mainly validates every proof ingredient.
pub fn run_cw_experiment(
    t: &SparseTensor,
    n: usize,
    cfg: &ExperimentConfig,
) -> Result<ExperimentReport> {
    if n == 0 {
        return Err(Error::InvalidArgument("power must be >= 1".into()));
    }
    let support = t.support();
    let k = support.arity();
    let labeling = match find_labeling(&support, cfg.seed)? {
        LabelingSearch::Tight { labeling, .. } => labeling,
        LabelingSearch::NotTight { leg, a, b } => return Err(Error::NotTight { leg, a, b }),
        LabelingSearch::Undetermined => {
            return Err(Error::InvalidArgument(
                "labeling search exhausted its retry budget".into(),
            ))
        }
    };
    let elements = if cfg.type_restrict {
        let uniform = Distribution::uniform(support.len());
        let m = crate::entropy::marginals(&support, &uniform);
        let mut counts = Vec::with_capacity(k);
        for i in 0..k {
            let leg: Vec<u64> = m
                .leg(i)
                .iter()
                .map(|&p| {
                    let scaled = p * n as f64;
                    let rounded = scaled.round();
                    if (scaled - rounded).abs() > 1e-9 {
                        Err(Error::NonIntegralType(format!(
                            "leg {i}: N * P = {scaled} is not integral"
                        )))
                    } else {
                        Ok(rounded as u64)
                    }
                })
                .collect::<Result<_>>()?;
            counts.push(leg);
        }
        type_class_restrict(&support, n, &counts)?.elements
    } else {
        power_support(&support, n)?
    };
    let psi = elements.len();

    let target_bound = if cfg.compute_target {
        Some(main_lower_bound(t, &MainBoundOptions::default())?.bound_bits)
    } else {
        None
    };

    let mut per_trial = Vec::with_capacity(cfg.trials);
    let mut best_rate = f64::NEG_INFINITY;
    for trial in 0..cfg.trials.max(1) {
        let trial_seed = cfg
            .seed
            .wrapping_add((trial as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let (survivors, modulus, b_size) = if cfg.hash {
            let hcfg = HashConfig::sample(k, n, cfg.modulus_floor, trial_seed)?;
            let filtered = hash_filter(&elements, &support, &labeling, &hcfg)?;
            (
                filtered.survivors,
                hcfg.modulus,
                hcfg.avg_free.elements.len(),
            )
        } else {
            (elements.clone(), 0, 0)
        };
        let diag = greedy_diagonal(&support, &survivors);
        let rate = if diag.size > 0 {
            (diag.size as f64).log2() / n as f64
        } else {
            0.0
        };
        best_rate = best_rate.max(rate);
        per_trial.push(TrialReport {
            trial,
            modulus,
            b_size,
            survivors: diag.x,
            collisions: diag.y,
            diagonal: diag.size,
            rate,
        });
    }
    Ok(ExperimentReport {
        n,
        trials: cfg.trials.max(1),
        psi,
        best_rate,
        target_bound,
        per_trial,
    })
}
