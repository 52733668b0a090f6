//! Entropy arithmetic and max-entropy problems with prescribed marginals.
//!
//! The workhorse is cyclic iterative proportional fitting over an index set
//! with a list of marginal constraint families. Each IPF iterate has Gibbs
//! product form, which yields a certified upper bound on the achievable
//! entropy: for any feasible Q and any positive G on the index set,
//! H(Q) <= -sum Q log G, and when G factors through the constraint groups the
//! right-hand side depends only on the target marginals. The reported
//! `dual_gap` is that upper bound minus the achieved entropy, so
//! `entropy + dual_gap` always dominates the true maximum.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::linalg::Rat;
use crate::tensor::Support;
use crate::tightness::EquivRelation;

/// Shannon entropy in bits; 0 log 0 = 0.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.log2())
        .sum::<f64>()
}

/// Binary entropy h(x) in bits, with h(0) = h(1) = 0.
pub fn binary_entropy(x: f64) -> f64 {
    assert!((0.0..=1.0).contains(&x), "binary_entropy domain is [0,1]");
    entropy(&[x, 1.0 - x])
}

/// Probability vector over an externally tracked index set.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    p: Vec<f64>,
}

impl Distribution {
    /// Normalize and validate. Mass must be positive and each entry
    /// nonnegative; after normalization the total is 1 up to 1e-12.
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidDistribution("empty index set".into()));
        }
        if p.iter().any(|&x| !x.is_finite() || x < 0.0) {
            return Err(Error::InvalidDistribution(
                "negative or non-finite probability".into(),
            ));
        }
        let total: f64 = p.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidDistribution("zero total mass".into()));
        }
        let p: Vec<f64> = p.into_iter().map(|x| x / total).collect();
        debug_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        Ok(Distribution { p })
    }

    pub fn from_rationals(p: &[Rat]) -> Result<Self> {
        let floats: Vec<f64> = p.iter().map(rat_to_f64).collect();
        Distribution::new(floats)
    }

    pub fn uniform(n: usize) -> Self {
        Distribution {
            p: vec![1.0 / n as f64; n],
        }
    }

    pub fn point_mass(n: usize, at: usize) -> Self {
        let mut p = vec![0.0; n];
        p[at] = 1.0;
        Distribution { p }
    }

    pub fn probs(&self) -> &[f64] {
        &self.p
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn entropy_bits(&self) -> f64 {
        entropy(&self.p)
    }
}

fn rat_to_f64(r: &Rat) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

/// Per-leg marginal distributions, aligned with `Support::occurring(leg)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginalFamily {
    legs: Vec<Vec<f64>>,
}

impl MarginalFamily {
    pub fn new(legs: Vec<Vec<f64>>) -> Self {
        MarginalFamily { legs }
    }

    pub fn legs(&self) -> &[Vec<f64>] {
        &self.legs
    }

    pub fn leg(&self, i: usize) -> &[f64] {
        &self.legs[i]
    }
}

/// Component-wise marginals of a distribution on the support points.
pub fn marginals(support: &Support, p: &Distribution) -> MarginalFamily {
    assert_eq!(p.len(), support.len(), "distribution/support size mismatch");
    let mut legs = Vec::with_capacity(support.arity());
    for i in 0..support.arity() {
        let occurring = support.occurring(i);
        let mut m = vec![0.0; occurring.len()];
        for (idx, point) in support.points().iter().enumerate() {
            let pos = occurring.binary_search(&point.0[i]).expect("occurring");
            m[pos] += p.probs()[idx];
        }
        legs.push(m);
    }
    MarginalFamily::new(legs)
}

/// One marginal constraint: `groups` partition the active index set and
/// `targets[gi]` is the required mass of `groups[gi]`.
#[derive(Clone, Debug)]
pub struct ConstraintFamily {
    pub groups: Vec<Vec<usize>>,
    pub targets: Vec<f64>,
}

/// Iteration controls for the IPF loop.
#[derive(Clone, Copy, Debug)]
pub struct IpfOptions {
    /// Stop when the total-variation change of one full cycle drops below this.
    pub tol: f64,
    /// Cycle cap; hitting it returns the current value plus its dual gap.
    pub max_cycles: usize,
}

impl Default for IpfOptions {
    fn default() -> Self {
        IpfOptions {
            tol: 1e-10,
            max_cycles: 100_000,
        }
    }
}

/// Result of an IPF run.
#[derive(Clone, Debug)]
pub struct IpfSolution {
    /// Fitted distribution over the full index set (pruned items are 0).
    pub q: Vec<f64>,
    /// Achieved entropy in bits.
    pub entropy_bits: f64,
    /// Certified slack: entropy_bits + dual_gap_bits >= true maximum.
    pub dual_gap_bits: f64,
    /// Largest total-variation residual of any constraint at termination.
    pub max_residual_tv: f64,
    pub cycles: usize,
    pub converged: bool,
}

/// Cyclic iterative proportional fitting from the uniform start.
pub fn ipf(n: usize, families: &[ConstraintFamily], opts: IpfOptions) -> Result<IpfSolution> {
    let mut active = vec![true; n];
    for fam in families {
        if fam.groups.len() != fam.targets.len() {
            return Err(Error::InvalidArgument(
                "family groups/targets mismatch".into(),
            ));
        }
        for (group, &target) in fam.groups.iter().zip(&fam.targets) {
            if target == 0.0 {
                for &i in group {
                    active[i] = false;
                }
            }
        }
    }
    for fam in families {
        for (group, &target) in fam.groups.iter().zip(&fam.targets) {
            if target > 0.0 && !group.iter().any(|&i| active[i]) {
                return Err(Error::InfeasibleMarginals(
                    "positive marginal mass on indices outside the feasible set".into(),
                ));
            }
        }
    }
    let n_active = active.iter().filter(|&&a| a).count();
    if n_active == 0 {
        return Err(Error::InfeasibleMarginals("no active indices".into()));
    }
    let mut q = vec![0.0f64; n];
    for (i, &a) in active.iter().enumerate() {
        if a {
            q[i] = 1.0 / n_active as f64;
        }
    }
    // log2 scaling factors per (family, group); q keeps the Gibbs form
    // q[i] = 2^(sum of gains over i's groups) / n_active throughout.
    let mut gains: Vec<Vec<f64>> = families.iter().map(|f| vec![0.0; f.groups.len()]).collect();
    let mut cycles = 0;
    let mut converged = false;
    while cycles < opts.max_cycles {
        cycles += 1;
        let before = q.clone();
        for (fi, fam) in families.iter().enumerate() {
            for (gi, group) in fam.groups.iter().enumerate() {
                let target = fam.targets[gi];
                if target == 0.0 {
                    continue;
                }
                let sum: f64 = group.iter().map(|&i| q[i]).sum();
                let ratio = target / sum;
                for &i in group {
                    q[i] *= ratio;
                }
                gains[fi][gi] += ratio.log2();
            }
        }
        let tv_change: f64 = 0.5
            * q.iter()
                .zip(&before)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>();
        if tv_change < opts.tol {
            converged = true;
            break;
        }
    }
    let entropy_bits = entropy(&q);
    let mut upper = (n_active as f64).log2();
    for (fi, fam) in families.iter().enumerate() {
        for (gi, &target) in fam.targets.iter().enumerate() {
            if target > 0.0 {
                upper -= target * gains[fi][gi];
            }
        }
    }
    let dual_gap_bits = (upper - entropy_bits).max(0.0);
    let mut max_residual_tv = 0.0f64;
    for fam in families {
        let mut residual = 0.0;
        for (group, &target) in fam.groups.iter().zip(&fam.targets) {
            let sum: f64 = group.iter().map(|&i| q[i]).sum();
            residual += (sum - target).abs();
        }
        max_residual_tv = max_residual_tv.max(0.5 * residual);
    }
    Ok(IpfSolution {
        q,
        entropy_bits,
        dual_gap_bits,
        max_residual_tv,
        cycles,
        converged,
    })
}

/// Max-entropy coupling over the ordered pairs of a class partition.
#[derive(Clone, Debug)]
pub struct CouplingResult {
    /// Ordered pairs (point indices), reflexive included, in enumeration order.
    pub pairs: Vec<(usize, usize)>,
    pub q: Vec<f64>,
    pub entropy_bits: f64,
    pub dual_gap_bits: f64,
    pub max_residual_tv: f64,
    pub cycles: usize,
    pub converged: bool,
}

/// Max-entropy distribution over the ordered pairs of the relation, subject
/// to all 2k symbol marginals matching the given family.
pub fn max_entropy_coupling(
    support: &Support,
    relation: &EquivRelation,
    marg: &MarginalFamily,
    opts: IpfOptions,
) -> Result<CouplingResult> {
    max_entropy_coupling_classes(support, relation.classes(), marg, opts)
}

/// Same as [`max_entropy_coupling`] but on raw classes; accepts all-singleton
/// partitions (the diagonal coupling).
pub fn max_entropy_coupling_classes(
    support: &Support,
    classes: &[Vec<usize>],
    marg: &MarginalFamily,
    opts: IpfOptions,
) -> Result<CouplingResult> {
    let k = support.arity();
    if marg.legs().len() != k {
        return Err(Error::InvalidArgument(
            "marginal family arity mismatch".into(),
        ));
    }
    let mut pairs = Vec::new();
    for class in classes {
        for &x in class {
            for &y in class {
                pairs.push((x, y));
            }
        }
    }
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("empty relation".into()));
    }
    let mut families = Vec::with_capacity(2 * k);
    for side in 0..2 {
        for leg in 0..k {
            let occurring = support.occurring(leg);
            let mut groups: Vec<Vec<usize>> = vec![Vec::new(); occurring.len()];
            for (pi, &(x, y)) in pairs.iter().enumerate() {
                let point = if side == 0 { x } else { y };
                let symbol = support.points()[point].0[leg];
                let pos = occurring.binary_search(&symbol).expect("occurring");
                groups[pos].push(pi);
            }
            let targets = marg.leg(leg).to_vec();
            if targets.len() != occurring.len() {
                return Err(Error::InvalidArgument(
                    "marginal length does not match occurring symbols".into(),
                ));
            }
            for (gi, group) in groups.iter().enumerate() {
                if targets[gi] > 0.0 && group.is_empty() {
                    return Err(Error::InfeasibleMarginals(format!(
                        "leg {leg}: symbol with mass {} absent from relation pairs",
                        targets[gi]
                    )));
                }
            }
            families.push(ConstraintFamily { groups, targets });
        }
    }
    let sol = ipf(pairs.len(), &families, opts)?;
    Ok(CouplingResult {
        pairs,
        q: sol.q,
        entropy_bits: sol.entropy_bits,
        dual_gap_bits: sol.dual_gap_bits,
        max_residual_tv: sol.max_residual_tv,
        cycles: sol.cycles,
        converged: sol.converged,
    })
}

/// Max-entropy lift: the entropy-maximizing distribution on the support with
/// the given marginals.
#[derive(Clone, Debug)]
pub struct LiftResult {
    pub dist: Distribution,
    pub entropy_bits: f64,
    pub dual_gap_bits: f64,
    pub max_residual_tv: f64,
    pub converged: bool,
}

pub fn max_entropy_on_support(
    support: &Support,
    marg: &MarginalFamily,
    opts: IpfOptions,
) -> Result<LiftResult> {
    let k = support.arity();
    if marg.legs().len() != k {
        return Err(Error::InvalidArgument(
            "marginal family arity mismatch".into(),
        ));
    }
    let mut families = Vec::with_capacity(k);
    for leg in 0..k {
        let occurring = support.occurring(leg);
        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); occurring.len()];
        for (idx, point) in support.points().iter().enumerate() {
            let pos = occurring.binary_search(&point.0[leg]).expect("occurring");
            groups[pos].push(idx);
        }
        let targets = marg.leg(leg).to_vec();
        if targets.len() != occurring.len() {
            return Err(Error::InvalidArgument(
                "marginal length does not match occurring symbols".into(),
            ));
        }
        families.push(ConstraintFamily { groups, targets });
    }
    let sol = ipf(support.len(), &families, opts)?;
    Ok(LiftResult {
        dist: Distribution::new(sol.q.clone())?,
        entropy_bits: sol.entropy_bits,
        dual_gap_bits: sol.dual_gap_bits,
        max_residual_tv: sol.max_residual_tv,
        converged: sol.converged,
    })
}

/// Controls for the maximin marginal-entropy ascent.
#[derive(Clone, Copy, Debug)]
pub struct MaximinOptions {
    pub restarts: usize,
    pub steps: usize,
    pub seed: u64,
}

impl Default for MaximinOptions {
    fn default() -> Self {
        MaximinOptions {
            restarts: 16,
            steps: 10_000,
            seed: crate::DEFAULT_SEED,
        }
    }
}

/// Best found value of min_i H(P_i) over distributions P on an arity-3
/// support, with the witness P. Exponentiated supergradient ascent from the
/// uniform start plus seeded random restarts; the reported value is exactly
/// recomputed from the witness, hence always a valid lower bound.
pub fn maximin_marginal_entropy(
    support: &Support,
    opts: MaximinOptions,
) -> Result<(f64, Distribution)> {
    if support.arity() != 3 {
        return Err(Error::WrongArity {
            expected: 3,
            got: support.arity(),
        });
    }
    if support.is_empty() {
        return Err(Error::InvalidArgument("support is empty".into()));
    }
    let n = support.len();
    let occurring: Vec<Vec<u64>> = (0..3).map(|i| support.occurring(i)).collect();
    let positions: Vec<Vec<usize>> = (0..3)
        .map(|i| {
            support
                .points()
                .iter()
                .map(|p| occurring[i].binary_search(&p.0[i]).expect("occurring"))
                .collect()
        })
        .collect();
    let objective = |p: &[f64]| -> f64 {
        (0..3)
            .map(|i| {
                let mut m = vec![0.0; occurring[i].len()];
                for (idx, &prob) in p.iter().enumerate() {
                    m[positions[i][idx]] += prob;
                }
                entropy(&m)
            })
            .fold(f64::INFINITY, f64::min)
    };

    let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
    let mut best_p = vec![1.0 / n as f64; n];
    let mut best_val = objective(&best_p);

    for restart in 0..opts.restarts.max(1) {
        let mut logits: Vec<f64> = if restart == 0 {
            vec![0.0; n]
        } else {
            (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
        };
        let mut p = softmax(&logits);
        for t in 1..=opts.steps {
            // supergradient of the currently smallest marginal entropy
            let mut worst_axis = 0;
            let mut worst = f64::INFINITY;
            let mut margs: Vec<Vec<f64>> = Vec::with_capacity(3);
            for i in 0..3 {
                let mut m = vec![0.0; occurring[i].len()];
                for (idx, &prob) in p.iter().enumerate() {
                    m[positions[i][idx]] += prob;
                }
                let h = entropy(&m);
                if h < worst {
                    worst = h;
                    worst_axis = i;
                }
                margs.push(m);
            }
            let eta = 1.0 / (t as f64).sqrt();
            for idx in 0..n {
                let m = margs[worst_axis][positions[worst_axis][idx]].max(1e-300);
                logits[idx] += eta * (-m.log2());
            }
            p = softmax(&logits);
            let val = objective(&p);
            if val > best_val {
                best_val = val;
                best_p = p.clone();
            }
        }
    }
    let dist = Distribution::new(best_p)?;
    let value = objective(dist.probs());
    Ok((value, dist))
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&w| (w - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}
