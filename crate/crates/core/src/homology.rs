//! Integer homology of a simplicial complex via Smith normal forms of its
//! boundary matrices.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::nerve::NerveComplex;
use crate::par;

/// Sparse integer matrix stored by columns, each sorted by row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundaryMatrix {
    pub k: usize,
    pub rows: usize,
    pub cols: usize,
    pub columns: Vec<Vec<(usize, i64)>>,
}

impl BoundaryMatrix {
    pub fn to_dense(&self) -> Vec<Vec<i64>> {
        let mut m = vec![vec![0; self.cols]; self.rows];
        for (j, col) in self.columns.iter().enumerate() {
            for &(i, v) in col {
                m[i][j] = v;
            }
        }
        m
    }

    /// Exact product `self * other`, dense.
    pub fn compose(&self, other: &BoundaryMatrix) -> Vec<Vec<i64>> {
        let mut out = vec![vec![0; other.cols]; self.rows];
        for (j, col) in other.columns.iter().enumerate() {
            for &(mid, w) in col {
                for &(i, v) in &self.columns[mid] {
                    out[i][j] += v * w;
                }
            }
        }
        out
    }
}

/// Boundary of each `k`-simplex: deleting position `j` contributes `(-1)^j`.
pub fn boundary_matrix(complex: &NerveComplex, k: usize) -> Result<BoundaryMatrix> {
    if k == 0 || k > complex.q_max() {
        return Err(Error::Precondition(format!("boundary dimension {k} outside 1..={}", complex.q_max())));
    }
    let simplices: Vec<&[usize]> = complex.iter(k).collect();
    let columns = par::map_vec(simplices, |s| {
        let mut col = Vec::with_capacity(k + 1);
        let mut facet = Vec::with_capacity(k);
        for j in 0..=k {
            facet.clear();
            facet.extend(s.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, &v)| v));
            let row = complex.index_of(&facet).ok_or_else(|| Error::MissingFacet(facet.clone()))?;
            col.push((row, if j % 2 == 0 { 1 } else { -1 }));
        }
        col.sort_unstable();
        Ok(col)
    });
    Ok(BoundaryMatrix {
        k,
        rows: complex.count(k - 1),
        cols: complex.count(k),
        columns: columns.into_iter().collect::<Result<_>>()?,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmithForm {
    /// Nonzero invariant factors, each dividing the next.
    pub diagonal: Vec<BigInt>,
    pub rank: usize,
}

/// Integer arithmetic used by the elimination. `None` means overflow.
trait Entry: Clone + PartialEq + Sized {
    fn from_i64(v: i64) -> Self;
    fn is_zero(&self) -> bool;
    fn is_unit(&self) -> bool;
    fn magnitude_lt(&self, other: &Self) -> bool;
    /// `a - q * b`
    fn sub_mul(a: &Self, q: &Self, b: &Self) -> Option<Self>;
    /// Truncated quotient.
    fn quot(a: &Self, b: &Self) -> Self;
    fn add(a: &Self, b: &Self) -> Option<Self>;
    fn mul(a: &Self, b: &Self) -> Option<Self>;
    fn divides(&self, other: &Self) -> bool;
    fn to_big(&self) -> BigInt;
}

impl Entry for i64 {
    fn from_i64(v: i64) -> Self {
        v
    }
    fn is_zero(&self) -> bool {
        *self == 0
    }
    fn is_unit(&self) -> bool {
        *self == 1 || *self == -1
    }
    fn magnitude_lt(&self, other: &Self) -> bool {
        self.unsigned_abs() < other.unsigned_abs()
    }
    fn sub_mul(a: &Self, q: &Self, b: &Self) -> Option<Self> {
        a.checked_sub(q.checked_mul(*b)?)
    }
    fn quot(a: &Self, b: &Self) -> Self {
        a / b
    }
    fn add(a: &Self, b: &Self) -> Option<Self> {
        a.checked_add(*b)
    }
    fn mul(a: &Self, b: &Self) -> Option<Self> {
        a.checked_mul(*b)
    }
    fn divides(&self, other: &Self) -> bool {
        other % self == 0
    }
    fn to_big(&self) -> BigInt {
        BigInt::from(*self)
    }
}

impl Entry for BigInt {
    fn from_i64(v: i64) -> Self {
        BigInt::from(v)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_unit(&self) -> bool {
        self.abs().is_one()
    }
    fn magnitude_lt(&self, other: &Self) -> bool {
        self.abs() < other.abs()
    }
    fn sub_mul(a: &Self, q: &Self, b: &Self) -> Option<Self> {
        Some(a - q * b)
    }
    fn quot(a: &Self, b: &Self) -> Self {
        a / b
    }
    fn add(a: &Self, b: &Self) -> Option<Self> {
        Some(a + b)
    }
    fn mul(a: &Self, b: &Self) -> Option<Self> {
        Some(a * b)
    }
    fn divides(&self, other: &Self) -> bool {
        other.is_multiple_of(self)
    }
    fn to_big(&self) -> BigInt {
        self.clone()
    }
}

type SparseCol<T> = Vec<(usize, T)>;

/// `a - f * b` on sorted sparse columns.
fn col_sub_mul<T: Entry>(a: &SparseCol<T>, f: &T, b: &SparseCol<T>) -> Option<SparseCol<T>> {
    let zero = T::from_i64(0);
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let ra = a.get(i).map_or(usize::MAX, |e| e.0);
        let rb = b.get(j).map_or(usize::MAX, |e| e.0);
        let (row, v) = if ra < rb {
            i += 1;
            (ra, a[i - 1].1.clone())
        } else if rb < ra {
            j += 1;
            (rb, T::sub_mul(&zero, f, &b[j - 1].1)?)
        } else {
            i += 1;
            j += 1;
            (ra, T::sub_mul(&a[i - 1].1, f, &b[j - 1].1)?)
        };
        if !v.is_zero() {
            out.push((row, v));
        }
    }
    Some(out)
}

/// Peels off unit pivots without densifying. Returns how many were found
/// and leaves the unreduced remainder in `cols`.
fn eliminate_units<T: Entry>(cols: &mut [SparseCol<T>], rows: usize) -> Option<usize> {
    let mut row_index: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); rows];
    for (c, col) in cols.iter().enumerate() {
        for (r, _) in col {
            row_index[*r].insert(c);
        }
    }
    let mut units = 0;
    loop {
        let mut order: Vec<usize> = (0..cols.len()).filter(|&c| !cols[c].is_empty()).collect();
        order.sort_by_key(|&c| (cols[c].len(), c));
        let mut progress = false;
        for c in order {
            // sparsest row among unit entries keeps fill-in low
            let Some(&(r, ref p)) =
                cols[c].iter().filter(|e| e.1.is_unit()).min_by_key(|e| (row_index[e.0].len(), e.0))
            else {
                continue;
            };
            let p = p.clone();
            let pivot_col = std::mem::take(&mut cols[c]);
            for (row, _) in &pivot_col {
                row_index[*row].remove(&c);
            }
            let others: Vec<usize> = row_index[r].iter().copied().collect();
            for o in others {
                let a = cols[o].iter().find(|e| e.0 == r).map(|e| e.1.clone()).expect("row index is consistent");
                // p is its own inverse
                let f = T::mul(&a, &p)?;
                let updated = col_sub_mul(&cols[o], &f, &pivot_col)?;
                for (row, _) in &cols[o] {
                    row_index[*row].remove(&o);
                }
                for (row, _) in &updated {
                    row_index[*row].insert(o);
                }
                cols[o] = updated;
            }
            units += 1;
            progress = true;
        }
        if !progress {
            return Some(units);
        }
    }
}

/// Classical elimination. The pivot is always the smallest-magnitude entry of
/// the remaining block, reselected whenever a reduction leaves a remainder,
/// which keeps coefficient growth in check. Returns the nonzero invariant
/// factors in divisibility order.
#[allow(clippy::needless_range_loop)] // row updates read a second row
fn dense_snf<T: Entry>(mut a: Vec<Vec<T>>) -> Option<Vec<T>> {
    let rows = a.len();
    let cols = a.first().map_or(0, |r| r.len());
    let mut diag = Vec::new();
    for t in 0..rows.min(cols) {
        loop {
            let mut best: Option<(usize, usize)> = None;
            for (i, row) in a.iter().enumerate().skip(t) {
                for (j, v) in row.iter().enumerate().skip(t) {
                    if !v.is_zero() && best.is_none_or(|(bi, bj)| v.magnitude_lt(&a[bi][bj])) {
                        best = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = best else { return Some(diag) };
            a.swap(t, pi);
            for row in a.iter_mut() {
                row.swap(t, pj);
            }
            let mut clean = true;
            for i in t + 1..rows {
                if a[i][t].is_zero() {
                    continue;
                }
                let q = T::quot(&a[i][t], &a[t][t]);
                for j in t..cols {
                    a[i][j] = T::sub_mul(&a[i][j], &q, &a[t][j])?;
                }
                clean &= a[i][t].is_zero();
            }
            for j in t + 1..cols {
                if a[t][j].is_zero() {
                    continue;
                }
                let q = T::quot(&a[t][j], &a[t][t]);
                for row in a.iter_mut().skip(t) {
                    row[j] = T::sub_mul(&row[j], &q, &row[t])?;
                }
                clean &= a[t][j].is_zero();
            }
            if !clean {
                continue;
            }
            // the pivot must divide the whole remaining block
            match (t + 1..rows).find(|&i| (t + 1..cols).any(|j| !a[t][t].divides(&a[i][j]))) {
                Some(i) => {
                    for j in t..cols {
                        a[t][j] = T::add(&a[t][j], &a[i][j])?;
                    }
                }
                None => break,
            }
        }
        diag.push(a[t][t].clone());
    }
    Some(diag)
}

fn snf_with<T: Entry>(rows: usize, columns: &[Vec<(usize, i64)>]) -> Option<Vec<BigInt>> {
    let mut cols: Vec<SparseCol<T>> =
        columns.iter().map(|c| c.iter().filter(|e| e.1 != 0).map(|&(r, v)| (r, T::from_i64(v))).collect()).collect();
    for c in &mut cols {
        c.sort_by_key(|e| e.0);
    }
    let units = eliminate_units(&mut cols, rows)?;
    let rest: Vec<&SparseCol<T>> = cols.iter().filter(|c| !c.is_empty()).collect();
    let mut live: Vec<usize> = rest.iter().flat_map(|c| c.iter().map(|e| e.0)).collect();
    live.sort_unstable();
    live.dedup();
    let mut dense = vec![vec![T::from_i64(0); rest.len()]; live.len()];
    for (j, c) in rest.iter().enumerate() {
        for (r, v) in c.iter() {
            let i = live.binary_search(r).expect("row collected above");
            dense[i][j] = v.clone();
        }
    }
    let tail = dense_snf(dense)?;
    let mut diag = vec![BigInt::one(); units];
    diag.extend(tail.iter().map(|v| v.to_big().abs()));
    Some(diag)
}

fn snf_columns(rows: usize, columns: &[Vec<(usize, i64)>]) -> SmithForm {
    let diagonal = snf_with::<i64>(rows, columns)
        .unwrap_or_else(|| snf_with::<BigInt>(rows, columns).expect("big integers do not overflow"));
    SmithForm { rank: diagonal.len(), diagonal }
}

/// Invariant factors of a dense integer matrix.
pub fn smith_normal_form(matrix: &[Vec<i64>]) -> SmithForm {
    let rows = matrix.len();
    let cols = matrix.first().map_or(0, |r| r.len());
    let columns: Vec<Vec<(usize, i64)>> =
        (0..cols).map(|j| (0..rows).filter(|&i| matrix[i][j] != 0).map(|i| (i, matrix[i][j])).collect()).collect();
    snf_columns(rows, &columns)
}

pub fn smith_normal_form_sparse(m: &BoundaryMatrix) -> SmithForm {
    snf_columns(m.rows, &m.columns)
}

/// Rank over the rationals by fraction-free elimination.
pub fn rational_rank(matrix: &[Vec<i64>]) -> usize {
    let mut a: Vec<Vec<BigInt>> = matrix.iter().map(|r| r.iter().map(|&v| BigInt::from(v)).collect()).collect();
    let rows = a.len();
    let cols = a.first().map_or(0, |r| r.len());
    let mut rank = 0;
    let mut prev = BigInt::one();
    for c in 0..cols {
        let Some(p) = (rank..rows).find(|&i| !Zero::is_zero(&a[i][c])) else { continue };
        a.swap(rank, p);
        for i in rank + 1..rows {
            for j in c + 1..cols {
                let v = (&a[rank][c] * &a[i][j] - &a[i][c] * &a[rank][j]) / &prev;
                a[i][j] = v;
            }
            a[i][c] = BigInt::zero();
        }
        prev = a[rank][c].clone();
        rank += 1;
        if rank == rows {
            break;
        }
    }
    rank
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HomologyResult {
    pub betti: Vec<usize>,
    #[serde(serialize_with = "serialize_torsion")]
    pub torsion: Vec<Vec<BigInt>>,
}

pub(crate) fn serialize_torsion<S: Serializer>(torsion: &[Vec<BigInt>], s: S) -> std::result::Result<S::Ok, S::Error> {
    let mut outer = s.serialize_seq(Some(torsion.len()))?;
    for dim in torsion {
        let entries: Vec<serde_json::Value> = dim
            .iter()
            .map(|v| match v.to_u64() {
                Some(small) => serde_json::Value::from(small),
                None => serde_json::Value::from(v.to_string()),
            })
            .collect();
        outer.serialize_element(&entries)?;
    }
    outer.end()
}

/// Betti numbers and torsion for `k = 0..=q_top`. Needs boundary data one
/// dimension above `q_top`.
pub fn homology_from_complex(complex: &NerveComplex, q_top: usize) -> Result<HomologyResult> {
    if q_top + 1 > complex.q_max() {
        return Err(Error::QTopTooLarge { q_top, q_max: complex.q_max() });
    }
    let dims: Vec<usize> = (1..=q_top + 1).collect();
    let forms = par::map_vec(dims, |k| boundary_matrix(complex, k).map(|m| smith_normal_form_sparse(&m)));
    let forms: Vec<SmithForm> = forms.into_iter().collect::<Result<_>>()?;
    // t[k] = rank of the k-th boundary, t[0] = 0
    let mut t = vec![0];
    t.extend(forms.iter().map(|f| f.rank));
    let mut betti = Vec::with_capacity(q_top + 1);
    let mut torsion = Vec::with_capacity(q_top + 1);
    for k in 0..=q_top {
        let b = complex
            .count(k)
            .checked_sub(t[k] + t[k + 1])
            .ok_or_else(|| Error::Invariant(format!("negative Betti number in dimension {k}")))?;
        betti.push(b);
        torsion.push(forms[k].diagonal.iter().filter(|d| **d > BigInt::one()).cloned().collect());
    }
    Ok(HomologyResult { betti, torsion })
}

/// Betti numbers from rational ranks alone, used as a cross-check.
pub fn rational_betti(complex: &NerveComplex, q_top: usize) -> Result<Vec<usize>> {
    if q_top + 1 > complex.q_max() {
        return Err(Error::QTopTooLarge { q_top, q_max: complex.q_max() });
    }
    let mut t = vec![0];
    for k in 1..=q_top + 1 {
        t.push(rational_rank(&boundary_matrix(complex, k)?.to_dense()));
    }
    Ok((0..=q_top).map(|k| complex.count(k) - t[k] - t[k + 1]).collect())
}

/// Downward closure of a list of maximal simplices.
pub fn complex_from_facets(vertex_count: usize, q_max: usize, facets: &[Vec<usize>]) -> Result<NerveComplex> {
    let mut lists: Vec<BTreeSet<Vec<usize>>> = vec![BTreeSet::new(); q_max + 1];
    for f in facets {
        let mut f = f.clone();
        f.sort_unstable();
        let n = f.len();
        if n == 0 || n > q_max + 1 {
            return Err(Error::Malformed(format!("facet {f:?} does not fit q_max {q_max}")));
        }
        for mask in 1u32..(1 << n) {
            let sub: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| f[i]).collect();
            lists[sub.len() - 1].insert(sub);
        }
    }
    for v in 0..vertex_count {
        lists[0].insert(vec![v]);
    }
    NerveComplex::new(vertex_count, q_max, lists.into_iter().map(|s| s.into_iter().collect()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    fn hollow_triangle() -> NerveComplex {
        complex_from_facets(3, 2, &[vec![0, 1], vec![0, 2], vec![1, 2]]).unwrap()
    }

    #[test]
    fn boundary_signs() {
        let c = complex_from_facets(3, 2, &[vec![0, 1, 2]]).unwrap();
        let d1 = boundary_matrix(&c, 1).unwrap();
        assert_eq!(d1.columns[0], vec![(0, -1), (1, 1)]);
        let d2 = boundary_matrix(&c, 2).unwrap();
        // {1,2} - {0,2} + {0,1}, rows ordered [01, 02, 12]
        assert_eq!(d2.columns[0], vec![(0, 1), (1, -1), (2, 1)]);
        assert!(d1.compose(&d2).iter().flatten().all(|&v| v == 0));
        let hollow = boundary_matrix(&hollow_triangle(), 2).unwrap();
        assert_eq!((hollow.rows, hollow.cols), (3, 0));
    }

    #[test]
    fn dense_block_stays_small() {
        // once blew up into hundred-digit entries and never finished
        let m = vec![
            vec![-5, 0, 0, 1, 4, 1, 2, 5],
            vec![-3, -1, -5, 1, 3, 0, -4, 5],
            vec![3, 2, 5, -1, -5, -2, 3, 2],
            vec![0, 5, 3, 1, -1, 2, -2, -3],
            vec![2, 5, 2, -5, 0, 5, -1, 4],
            vec![3, -5, -4, 1, 3, -1, 1, -4],
            vec![-4, 2, 0, -3, 3, -5, -5, -2],
            vec![4, 2, -4, -1, -3, 5, 0, 2],
        ];
        let form = smith_normal_form(&m);
        assert_eq!(form.rank, 8);
        let det: BigInt = form.diagonal.iter().product();
        assert_eq!(det, BigInt::from(1470524));
    }

    #[test]
    fn snf_examples() {
        assert_eq!(smith_normal_form(&[vec![1, 0], vec![0, 0]]).diagonal, big(&[1]));
        assert_eq!(smith_normal_form(&[vec![2, 1], vec![0, 2]]).diagonal, big(&[1, 4]));
        assert_eq!(smith_normal_form(&[vec![2, 0], vec![0, 3]]).diagonal, big(&[1, 6]));
        assert_eq!(smith_normal_form(&[vec![2, 4], vec![6, 8]]).diagonal, big(&[2, 4]));
        let d1 = boundary_matrix(&hollow_triangle(), 1).unwrap();
        let f = smith_normal_form_sparse(&d1);
        assert_eq!((f.diagonal, f.rank), (big(&[1, 1]), 2));
        assert_eq!(smith_normal_form(&[]).rank, 0);
    }

    #[test]
    fn overflow_falls_back_to_big_integers() {
        let m = vec![vec![i64::MAX, 3], vec![5, i64::MAX - 1]];
        let f = smith_normal_form(&m);
        let det = BigInt::from(i64::MAX) * BigInt::from(i64::MAX - 1) - BigInt::from(15);
        assert_eq!(f.diagonal, vec![BigInt::one(), det]);
    }

    #[test]
    fn rational_rank_examples() {
        assert_eq!(rational_rank(&[vec![1, 2], vec![2, 4]]), 1);
        assert_eq!(rational_rank(&[vec![0, 0], vec![0, 3]]), 1);
        assert_eq!(rational_rank(&[vec![2, 1], vec![0, 2]]), 2);
    }

    #[test]
    fn single_vertex_and_circle() {
        let point = complex_from_facets(1, 1, &[vec![0]]).unwrap();
        let h = homology_from_complex(&point, 0).unwrap();
        assert_eq!(h.betti, vec![1]);
        assert!(h.torsion[0].is_empty());
        let h = homology_from_complex(&hollow_triangle(), 1).unwrap();
        assert_eq!(h.betti, vec![1, 1]);
        assert_eq!(h.torsion, vec![vec![], vec![]]);
        assert_eq!(homology_from_complex(&hollow_triangle(), 2), Err(Error::QTopTooLarge { q_top: 2, q_max: 2 }));
    }

    #[test]
    fn torsion_serializes_as_numbers() {
        let h = HomologyResult { betti: vec![1, 0], torsion: vec![vec![], big(&[2])] };
        assert_eq!(serde_json::to_string(&h).unwrap(), r#"{"betti":[1,0],"torsion":[[],[2]]}"#);
    }
}
