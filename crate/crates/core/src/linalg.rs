//! Exact linear algebra over the rationals.
//!
//! Everything here works with arbitrary-precision rationals so that ranks and
//! nullspaces are certificates, not estimates. Matrices in this crate are
//! small (dimensions bounded by supports and arities), so simple dense
//! elimination is enough; flattenings get a sparse path.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Rat = BigRational;

pub fn rat_int(v: i64) -> Rat {
    Rat::from_integer(BigInt::from(v))
}

/// Rank of a dense rational matrix, by Gaussian elimination with exact pivots.
pub fn rank_dense(rows: &[Vec<Rat>]) -> usize {
    let mut m: Vec<Vec<Rat>> = rows.to_vec();
    let nrows = m.len();
    if nrows == 0 {
        return 0;
    }
    let ncols = m[0].len();
    let mut rank = 0;
    let mut row = 0;
    for col in 0..ncols {
        let pivot = (row..nrows).find(|&r| !m[r][col].is_zero());
        let Some(p) = pivot else { continue };
        m.swap(row, p);
        let inv = m[row][col].clone();
        for r in 0..nrows {
            if r != row && !m[r][col].is_zero() {
                let factor = &m[r][col] / &inv;
                for c in col..ncols {
                    let sub = &factor * &m[row][c];
                    m[r][c] = &m[r][c] - sub;
                }
            }
        }
        rank += 1;
        row += 1;
        if row == nrows {
            break;
        }
    }
    rank
}

/// Rank of an integer matrix over the rationals.
pub fn rank_int(rows: &[Vec<BigInt>]) -> usize {
    let rat_rows: Vec<Vec<Rat>> = rows
        .iter()
        .map(|r| r.iter().map(|x| Rat::from_integer(x.clone())).collect())
        .collect();
    rank_dense(&rat_rows)
}

/// Rank of a sparse rational matrix given as rows of (column, value) maps.
///
/// Columns are arbitrary u64 keys. Rows are reduced against previously found
/// pivot rows; each surviving row contributes one pivot.
pub fn rank_sparse(rows: Vec<BTreeMap<u64, Rat>>) -> usize {
    // pivot column -> reduced row with leading coefficient 1
    let mut pivots: BTreeMap<u64, BTreeMap<u64, Rat>> = BTreeMap::new();
    for mut row in rows {
        while let Some((&lead, _)) = row.iter().next() {
            match pivots.get(&lead) {
                Some(pivot_row) => {
                    let factor = row[&lead].clone();
                    for (c, v) in pivot_row {
                        let delta = &factor * v;
                        let entry = row.entry(*c).or_insert_with(Rat::zero);
                        *entry = &*entry - delta;
                        if entry.is_zero() {
                            row.remove(c);
                        }
                    }
                }
                None => {
                    let inv = row[&lead].clone();
                    let normalized: BTreeMap<u64, Rat> =
                        row.iter().map(|(c, v)| (*c, v / &inv)).collect();
                    pivots.insert(lead, normalized);
                    break;
                }
            }
        }
    }
    pivots.len()
}

/// Reduced row echelon form with canonical pivots; rows returned sorted by
/// pivot column. Used both for nullspaces and as a hashable canonical key for
/// rational subspaces.
pub fn rref(rows: &[Vec<Rat>]) -> Vec<Vec<Rat>> {
    let mut m: Vec<Vec<Rat>> = rows
        .iter()
        .filter(|r| !r.iter().all(Rat::is_zero))
        .cloned()
        .collect();
    if m.is_empty() {
        return Vec::new();
    }
    let ncols = m[0].len();
    let nrows = m.len();
    let mut row = 0;
    for col in 0..ncols {
        let pivot = (row..nrows).find(|&r| !m[r][col].is_zero());
        let Some(p) = pivot else { continue };
        m.swap(row, p);
        let inv = m[row][col].clone();
        for c in 0..ncols {
            m[row][c] = &m[row][c] / &inv;
        }
        for r in 0..nrows {
            if r != row && !m[r][col].is_zero() {
                let factor = m[r][col].clone();
                for c in 0..ncols {
                    let sub = &factor * &m[row][c];
                    m[r][c] = &m[r][c] - sub;
                }
            }
        }
        row += 1;
        if row == nrows {
            break;
        }
    }
    m.truncate(row);
    m
}

/// Whether `v` lies in the row space described by an rref basis.
pub fn in_row_space(basis: &[Vec<Rat>], v: &[Rat]) -> bool {
    let mut v = v.to_vec();
    for row in basis {
        let lead = row.iter().position(|x| !x.is_zero());
        let Some(lead) = lead else { continue };
        if !v[lead].is_zero() {
            let factor = v[lead].clone();
            for c in 0..v.len() {
                let sub = &factor * &row[c];
                v[c] = &v[c] - sub;
            }
        }
    }
    v.iter().all(Rat::is_zero)
}

/// Basis of the right nullspace of the matrix, as integer vectors with
/// cleared denominators.
pub fn nullspace_int(rows: &[Vec<Rat>], ncols: usize) -> Vec<Vec<BigInt>> {
    let reduced = rref(rows);
    let mut pivot_cols = Vec::new();
    for r in &reduced {
        if let Some(lead) = r.iter().position(|x| !x.is_zero()) {
            pivot_cols.push(lead);
        }
    }
    let free_cols: Vec<usize> = (0..ncols).filter(|c| !pivot_cols.contains(c)).collect();
    let mut basis = Vec::new();
    for &fc in &free_cols {
        let mut v = vec![Rat::zero(); ncols];
        v[fc] = Rat::one();
        for (ri, r) in reduced.iter().enumerate() {
            // pivot row ri solves for pivot_cols[ri]
            let pc = pivot_cols[ri];
            v[pc] = -r[fc].clone();
        }
        basis.push(clear_denominators(&v));
    }
    basis
}

/// Scale a rational vector to a primitive integer vector.
pub fn clear_denominators(v: &[Rat]) -> Vec<BigInt> {
    let mut lcm = BigInt::one();
    for x in v {
        lcm = num_integer::lcm(lcm, x.denom().clone());
    }
    let ints: Vec<BigInt> = v.iter().map(|x| x.numer() * (&lcm / x.denom())).collect();
    let mut gcd = BigInt::zero();
    for x in &ints {
        gcd = num_integer::gcd(gcd, x.abs());
    }
    if gcd.is_zero() || gcd.is_one() {
        ints
    } else {
        ints.into_iter().map(|x| x / &gcd).collect()
    }
}

/// Next representable f64 above `x`. Conservative rounding helper for
/// penalties that must err upward.
pub fn next_up_f64(x: f64) -> f64 {
    if x.is_nan() || x == f64::INFINITY {
        return x;
    }
    if x == 0.0 {
        return f64::from_bits(1);
    }
    let bits = x.to_bits();
    if x.is_sign_positive() {
        f64::from_bits(bits + 1)
    } else {
        f64::from_bits(bits - 1)
    }
}
