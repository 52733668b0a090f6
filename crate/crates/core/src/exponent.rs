//! Upper-bound combiners for exponents per edge of complete-graph tensors:
//! the generalized asymptotic sum inequality, the Coppersmith-Winograd
//! construction bound, border-rank bookkeeping, cut-based lower bounds, the
//! odd-cycle formula and the per-k summary table.

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::linalg::rat_int;
use crate::tensor::{cut_extrema, cw_tensor, Graph, Poly, PolyTensor};

/// Literature constants consumed by the combiners. Both drift with the state
/// of the art, so they are inputs, not hard-coded truths.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Constants {
    /// Upper bound on the matrix multiplication exponent.
    pub omega_mm: f64,
    /// Lower bound on the dual matrix multiplication exponent.
    pub alpha_dual: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            omega_mm: 2.3728639,
            alpha_dual: 0.3029805,
        }
    }
}

/// Expansion budget for the border-rank certificate: (q+2)(q+1)^k terms.
pub const CW_CERT_BUDGET: u64 = 1_000_000;

/// Solve sum_i N_i^tau = r for tau by monotone bisection, to 1e-12 absolute.
/// Requires every N_i >= 2 and r greater than the number of terms.
pub fn tau_from_sum_inequality(products: &[u64], r: f64) -> Result<f64> {
    if products.is_empty() {
        return Err(Error::EmptyRange("no products given".into()));
    }
    if products.iter().any(|&n| n < 2) {
        return Err(Error::InvalidArgument("every product must be >= 2".into()));
    }
    let p = products.len();
    if r <= p as f64 {
        return Err(Error::SumInequalityHypothesis { r, p });
    }
    let eval = |tau: f64| -> f64 { products.iter().map(|&n| (n as f64).powf(tau)).sum() };
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    while eval(hi) < r {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::InvalidArgument("tau search diverged".into()));
        }
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if eval(mid) < r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Minimize log_q((q+2) / 2^q_m) over integer q in [q_lo, q_hi].
/// Returns the minimizing q and the value. The scan is exhaustive; no
/// unimodality is assumed.
pub fn cw_tau_bound(k: usize, q_m: f64, q_lo: u64, q_hi: u64) -> Result<(u64, f64)> {
    if q_lo < 2 || q_hi < q_lo {
        return Err(Error::EmptyRange(format!("bad q range [{q_lo}, {q_hi}]")));
    }
    if k < 2 {
        return Err(Error::InvalidArgument("k must be >= 2".into()));
    }
    // q_m is a monomial subexponent of a k-leg Dicke tensor: it cannot exceed
    // the log of that support size
    let support_size = (k * (k - 1) / 2) as f64;
    if !(0.0..=support_size.log2().max(1.0)).contains(&q_m) {
        return Err(Error::InvalidArgument(format!(
            "q_m = {q_m} outside [0, log2(k choose 2)]"
        )));
    }
    let mut best: Option<(u64, f64)> = None;
    for q in q_lo..=q_hi {
        let value = (((q + 2) as f64).log2() - q_m) / (q as f64).log2();
        if best.is_none_or(|(_, b)| value < b) {
            best = Some((q, value));
        }
    }
    Ok(best.unwrap())
}

/// Border-rank-to-rank conversion factor c_h = C(h + k - 1, k - 1).
pub fn border_to_rank_factor(k: u64, h: u64) -> Result<u128> {
    binomial(h + k - 1, k - 1)
}

fn binomial(n: u64, r: u64) -> Result<u128> {
    if r > n {
        return Ok(0);
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc
            .checked_mul((n - i) as u128)
            .ok_or_else(|| Error::Budget("binomial overflows u128".into()))?;
        acc /= (i + 1) as u128;
    }
    Ok(acc)
}

/// Outcome of the border-rank certificate expansion.
#[derive(Clone, Debug, Serialize)]
pub struct CwBorderReport {
    pub q: u64,
    pub k: usize,
    pub pass: bool,
    /// Degrees 0..=4 must vanish; degree 5 must equal the CW tensor.
    pub failure: Option<CwBorderFailure>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CwBorderFailure {
    pub degree: usize,
    pub detail: String,
}

/// Symbolically expand
/// sum_i eps (b0 + eps^2 b_i)^k - (b0 + eps^3 sum_i b_i)^k + (1 - q eps) b0^k
/// truncated at degree 5 and check that orders 0..4 vanish while the order-5
/// coefficient equals the CW tensor exactly. Establishes border rank <= q+2.
pub fn check_cw_border_certificate(q: u64, k: usize) -> Result<CwBorderReport> {
    check_cw_border_with_linear_coeff(q, k, q as i64)
}

/// Same expansion with the coefficient of eps in the last term replaced, as a
/// falsification hook: any value other than q must fail at order 1.
pub fn check_cw_border_with_linear_coeff(q: u64, k: usize, linear: i64) -> Result<CwBorderReport> {
    if q == 0 || k < 2 {
        return Err(Error::InvalidArgument(
            "certificate needs q >= 1, k >= 2".into(),
        ));
    }
    let terms = (q as u128 + 2) * (q as u128 + 1).pow(k as u32);
    if terms > CW_CERT_BUDGET as u128 {
        return Err(Error::Budget(format!(
            "expansion needs {terms} terms, cap {CW_CERT_BUDGET}"
        )));
    }
    const MAX_DEG: usize = 5;
    let dim = (q + 1) as usize;

    // sum_i eps * (b0 + eps^2 b_i)^{(x)k}
    let mut total: Option<PolyTensor> = None;
    let eps = Poly::monomial(rat_int(1), 1);
    for i in 1..=q as usize {
        let mut v = vec![Poly::zero(); dim];
        v[0] = Poly::constant(rat_int(1));
        v[i] = Poly::monomial(rat_int(1), 2);
        let term = PolyTensor::from_vector(v, MAX_DEG)
            .outer_power(k)
            .scale(&eps);
        total = Some(match total {
            None => term,
            Some(acc) => acc.add(&term)?,
        });
    }
    let mut total = total.expect("q >= 1");

    // - (b0 + eps^3 sum_i b_i)^{(x)k}
    let mut w = vec![Poly::monomial(rat_int(1), 3); dim];
    w[0] = Poly::constant(rat_int(1));
    let second = PolyTensor::from_vector(w, MAX_DEG)
        .outer_power(k)
        .scale(&Poly::constant(rat_int(-1)));
    total = total.add(&second)?;

    // + (1 - linear * eps) b0^{(x)k}
    let mut b0 = vec![Poly::zero(); dim];
    b0[0] = Poly::constant(rat_int(1));
    let unit_coeff = Poly::constant(rat_int(1)).add(&Poly::monomial(rat_int(-linear), 1));
    let third = PolyTensor::from_vector(b0, MAX_DEG)
        .outer_power(k)
        .scale(&unit_coeff);
    total = total.add(&third)?;

    for degree in 0..MAX_DEG {
        let coeff = total.coefficient_tensor(degree)?;
        if coeff.support_size() != 0 {
            let (point, c) = coeff.entries().iter().next().expect("nonzero");
            return Ok(CwBorderReport {
                q,
                k,
                pass: false,
                failure: Some(CwBorderFailure {
                    degree,
                    detail: format!("coefficient {c} at {:?}", point.0),
                }),
            });
        }
    }
    let top = total.coefficient_tensor(MAX_DEG)?;
    let expected = cw_tensor(q, k)?;
    if top != expected {
        return Ok(CwBorderReport {
            q,
            k,
            pass: false,
            failure: Some(CwBorderFailure {
                degree: MAX_DEG,
                detail: "eps^5 coefficient differs from the CW tensor".into(),
            }),
        });
    }
    Ok(CwBorderReport {
        q,
        k,
        pass: true,
        failure: None,
    })
}

/// Exact cut values of a graph and the exponent bounds they induce.
#[derive(Clone, Debug, Serialize)]
pub struct CutReport {
    pub vertices: usize,
    pub edges: usize,
    pub min_cut: usize,
    pub max_cut: usize,
    /// f(G)/|E|: lower bound on the exponent per edge.
    pub tau_lower: f64,
    /// g(G): upper bound on the subexponent.
    pub subexponent_upper: f64,
    /// f(G): lower bound on the exponent.
    pub omega_lower: f64,
}

pub fn flattening_lower_bounds(g: &Graph) -> Result<CutReport> {
    let (min, max) = cut_extrema(g)?;
    let edges = g.edge_count();
    Ok(CutReport {
        vertices: g.vertex_count(),
        edges,
        min_cut: min,
        max_cut: max,
        tau_lower: if edges > 0 {
            max as f64 / edges as f64
        } else {
            0.0
        },
        subexponent_upper: min as f64,
        omega_lower: max as f64,
    })
}

/// Odd-cycle exponent bounds.
#[derive(Clone, Debug, Serialize)]
pub struct CycleBound {
    pub k: usize,
    /// k - alpha (1 + (1 - alpha)/(k - 1 + alpha))
    pub alpha_form: f64,
    /// (k-1)/2 * omega_mm
    pub omega_form: f64,
}

pub fn cycle_bound(k: usize, alpha: f64, consts: &Constants) -> Result<CycleBound> {
    if k < 3 || k.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "cycle bound needs odd k >= 3, got {k}"
        )));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha = {alpha} outside (0, 1]"
        )));
    }
    let kf = k as f64;
    Ok(CycleBound {
        k,
        alpha_form: kf - alpha * (1.0 + (1.0 - alpha) / (kf - 1.0 + alpha)),
        omega_form: (kf - 1.0) / 2.0 * consts.omega_mm,
    })
}

/// One row of the complete-graph exponent table.
#[derive(Clone, Debug, Serialize)]
pub struct ExponentRow {
    pub k: usize,
    pub omega_lower: f64,
    pub omega_upper: f64,
    pub edges: usize,
    pub tau_lower: f64,
    pub tau_upper: f64,
    pub lower_source: String,
    pub upper_source: String,
}

/// Inputs for the table: literature constants, the monomial subexponent fed
/// to the CW bound, and the q scan range.
#[derive(Clone, Copy, Debug)]
pub struct TableOptions {
    pub constants: Constants,
    /// Monomial subexponent of the weight-(2,2) Dicke tensor.
    pub q_m: f64,
    pub q_lo: u64,
    pub q_hi: u64,
}

impl Default for TableOptions {
    fn default() -> Self {
        TableOptions {
            constants: Constants::default(),
            q_m: 1.0,
            q_lo: 2,
            q_hi: 10_000,
        }
    }
}

/// Complete-graph rows k = 3..=k_max. Lower bounds come from max cuts; upper
/// bounds from the matrix-multiplication exponent for k = 3 and from the CW
/// construction at k = 4 propagated upward by edge-transitivity (per-edge
/// values only improve with k), both capped by the trivial edge count.
pub fn complete_graph_table(k_max: usize, opts: &TableOptions) -> Result<Vec<ExponentRow>> {
    if !(3..=24).contains(&k_max) {
        return Err(Error::InvalidArgument(format!(
            "k_max must lie in [3, 24], got {k_max}"
        )));
    }
    let (_, tau_cw) = cw_tau_bound(4, opts.q_m, opts.q_lo, opts.q_hi)?;
    let tau_le_gall = opts.constants.omega_mm / 3.0;
    let mut rows = Vec::new();
    for k in 3..=k_max {
        let graph = Graph::complete(k)?;
        let edges = graph.edge_count();
        let cuts = flattening_lower_bounds(&graph)?;
        let (tau_upper, upper_source) = if k == 3 {
            (tau_le_gall.min(1.0), "matrix multiplication exponent")
        } else {
            let best = tau_cw.min(tau_le_gall);
            if best < 1.0 {
                (best, "cw construction")
            } else {
                (1.0, "edge count")
            }
        };
        rows.push(ExponentRow {
            k,
            omega_lower: cuts.omega_lower,
            omega_upper: tau_upper * edges as f64,
            edges,
            tau_lower: cuts.tau_lower,
            tau_upper,
            lower_source: "max-cut flattening".into(),
            upper_source: upper_source.into(),
        });
    }
    Ok(rows)
}

/// CSV form of the table: fixed header, floats at six decimals.
pub fn table_to_csv(rows: &[ExponentRow]) -> String {
    let mut out = String::from("k,omega_lower,omega_upper,edges,tau_lower,tau_upper\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:.6},{:.6},{},{:.6},{:.6}\n",
            r.k, r.omega_lower, r.omega_upper, r.edges, r.tau_lower, r.tau_upper
        ));
    }
    out
}

pub fn table_to_json(rows: &[ExponentRow], opts: &TableOptions) -> Value {
    json!({
        "constants": { "omega_mm": opts.constants.omega_mm, "alpha_dual": opts.constants.alpha_dual },
        "q_m": opts.q_m,
        "rows": rows,
    })
}
