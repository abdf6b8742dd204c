//! Exact rational linear algebra over sparse rows.
//!
//! Everything downstream (trace decompositions, invariant-operator
//! classification, Killing-tensor kernels, ideal kernels) reduces to
//! reduced row echelon form here. The RREF of a row space is unique,
//! so kernel bases and spans derived from it are reproducible across
//! runs regardless of row insertion order.

use num_traits::{One, Zero};

use crate::ring::Rat;

/// A sparse row: strictly ascending column indices, nonzero entries.
pub type SparseRow = Vec<(usize, Rat)>;

fn normalize_row(mut row: SparseRow) -> SparseRow {
    row.sort_by_key(|&(c, _)| c);
    let mut out: SparseRow = Vec::with_capacity(row.len());
    for (c, v) in row {
        match out.last_mut() {
            Some((lc, lv)) if *lc == c => *lv += v,
            _ => out.push((c, v)),
        }
    }
    out.retain(|(_, v)| !v.is_zero());
    out
}

/// row + k·other, sparse merge.
fn add_scaled(row: &SparseRow, other: &SparseRow, k: &Rat) -> SparseRow {
    let mut out = Vec::with_capacity(row.len() + other.len());
    let (mut i, mut j) = (0, 0);
    while i < row.len() || j < other.len() {
        let ci = row.get(i).map(|&(c, _)| c);
        let cj = other.get(j).map(|&(c, _)| c);
        match (ci, cj) {
            (Some(a), Some(b)) if a == b => {
                let v = &row[i].1 + &other[j].1 * k;
                if !v.is_zero() {
                    out.push((a, v));
                }
                i += 1;
                j += 1;
            }
            (Some(a), Some(b)) if a < b => {
                out.push((a, row[i].1.clone()));
                i += 1;
            }
            (Some(_), Some(b)) => {
                let v = &other[j].1 * k;
                if !v.is_zero() {
                    out.push((b, v));
                }
                j += 1;
            }
            (Some(a), None) => {
                out.push((a, row[i].1.clone()));
                i += 1;
            }
            (None, Some(b)) => {
                let v = &other[j].1 * k;
                if !v.is_zero() {
                    out.push((b, v));
                }
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    out
}

fn scale_to_monic(row: &mut SparseRow) {
    if let Some((_, lead)) = row.first() {
        let lead = lead.clone();
        if !lead.is_one() {
            for (_, v) in row.iter_mut() {
                *v = &*v / &lead;
            }
        }
    }
}

/// An incrementally maintained row space in reduced echelon form.
///
/// Rows are stored fully reduced against each other, sorted by pivot
/// column, each with leading entry 1. Inserting every row of a matrix
/// yields its unique RREF.
#[derive(Clone, Debug)]
pub struct RowSpan {
    ncols: usize,
    rows: Vec<SparseRow>,
}

impl RowSpan {
    pub fn new(ncols: usize) -> Self {
        RowSpan { ncols, rows: Vec::new() }
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[SparseRow] {
        &self.rows
    }

    pub fn pivots(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r[0].0).collect()
    }

    fn pivot_position(&self, col: usize) -> std::result::Result<usize, usize> {
        self.rows.binary_search_by_key(&col, |r| r[0].0)
    }

    /// Reduces `row` against the span; the remainder shares no pivot column.
    pub fn reduce(&self, row: SparseRow) -> SparseRow {
        let mut row = normalize_row(row);
        let mut i = 0;
        while i < row.len() {
            let col = row[i].0;
            match self.pivot_position(col) {
                Ok(r) => {
                    let k = -row[i].1.clone();
                    row = add_scaled(&row, &self.rows[r], &k);
                    // entries before `col` are untouched; the col entry vanished
                }
                Err(_) => i += 1,
            }
        }
        row
    }

    /// Inserts a row; returns true if the rank grew.
    pub fn insert(&mut self, row: SparseRow) -> bool {
        let mut row = self.reduce(row);
        if row.is_empty() {
            return false;
        }
        scale_to_monic(&mut row);
        let col = row[0].0;
        let pos = self.pivot_position(col).unwrap_err();
        // Back-substitute the new pivot into earlier rows to keep RREF.
        for r in self.rows.iter_mut() {
            if let Ok(idx) = r.binary_search_by_key(&col, |&(c, _)| c) {
                let k = -r[idx].1.clone();
                *r = add_scaled(r, &row, &k);
            }
        }
        self.rows.insert(pos, row);
        true
    }

    /// True iff `row` lies in the span.
    pub fn contains(&self, row: &SparseRow) -> bool {
        self.reduce(row.clone()).is_empty()
    }

    /// Basis of {v : M v = 0} where the span holds the rows of M.
    /// One vector per non-pivot column, in ascending column order; the
    /// free coordinate is set to 1. This is the canonical RREF kernel.
    pub fn nullspace(&self) -> Vec<SparseRow> {
        let pivots = self.pivots();
        let is_pivot = {
            let mut v = vec![false; self.ncols];
            for &c in &pivots {
                v[c] = true;
            }
            v
        };
        let mut basis = Vec::new();
        for free in 0..self.ncols {
            if is_pivot[free] {
                continue;
            }
            let mut vec_entries: SparseRow = vec![(free, Rat::one())];
            for (r, row) in self.rows.iter().enumerate() {
                if let Ok(idx) = row.binary_search_by_key(&free, |&(c, _)| c) {
                    vec_entries.push((pivots[r], -row[idx].1.clone()));
                }
            }
            basis.push(normalize_row(vec_entries));
        }
        basis
    }
}

/// Outcome of an exact linear solve A x = b.
#[derive(Clone, Debug)]
pub enum Solve {
    /// No solution.
    Inconsistent,
    /// One particular solution together with a kernel basis (empty
    /// kernel ⇒ the solution is unique).
    Solution { particular: Vec<Rat>, kernel: Vec<SparseRow> },
}

/// Solves A x = b from sparse rows of A (length `ncols`) and the
/// right-hand entries `b` (one per row).
pub fn solve(ncols: usize, rows: &[SparseRow], b: &[Rat]) -> Solve {
    assert_eq!(rows.len(), b.len());
    // Augmented system; the RHS occupies column `ncols`.
    let mut span = RowSpan::new(ncols + 1);
    for (row, rhs) in rows.iter().zip(b) {
        let mut r = row.clone();
        if !rhs.is_zero() {
            r.push((ncols, rhs.clone()));
        }
        span.insert(r);
    }
    if span.pivots().contains(&ncols) {
        return Solve::Inconsistent;
    }
    let mut particular = vec![Rat::zero(); ncols];
    for row in span.rows() {
        let pivot = row[0].0;
        if let Ok(idx) = row.binary_search_by_key(&ncols, |&(c, _)| c) {
            particular[pivot] = row[idx].1.clone();
        }
    }
    // Kernel of A alone: drop the RHS column.
    let mut a_span = RowSpan::new(ncols);
    for row in span.rows() {
        let r: SparseRow = row.iter().filter(|&&(c, _)| c < ncols).cloned().collect();
        a_span.insert(r);
    }
    Solve::Solution { particular, kernel: a_span.nullspace() }
}

/// Kernel basis of the matrix whose rows are given.
pub fn nullspace(ncols: usize, rows: impl IntoIterator<Item = SparseRow>) -> Vec<SparseRow> {
    let mut span = RowSpan::new(ncols);
    for row in rows {
        span.insert(row);
    }
    span.nullspace()
}

/// Dense vector from a sparse one.
pub fn to_dense(ncols: usize, row: &SparseRow) -> Vec<Rat> {
    let mut v = vec![Rat::zero(); ncols];
    for (c, x) in row {
        v[*c] = x.clone();
    }
    v
}

/// Kernel basis computed per connected component of the column graph
/// (columns joined when a row touches both).  The matrix is block
/// diagonal over the components, so the blockwise RREF kernels,
/// re-embedded and ordered by free column, equal [`nullspace`] exactly
/// while echelonizing much smaller blocks.
pub fn nullspace_components(
    ncols: usize,
    rows: impl IntoIterator<Item = SparseRow>,
) -> Vec<SparseRow> {
    // Union-find over columns.
    let mut parent: Vec<usize> = (0..ncols).collect();
    fn find(parent: &mut Vec<usize>, mut c: usize) -> usize {
        while parent[c] != c {
            parent[c] = parent[parent[c]];
            c = parent[c];
        }
        c
    }
    let rows: Vec<SparseRow> = rows.into_iter().collect();
    for row in &rows {
        if let Some(&(first, _)) = row.first() {
            let root = find(&mut parent, first);
            for &(c, _) in &row[1..] {
                let rc = find(&mut parent, c);
                parent[rc] = root;
            }
        }
    }

    let mut comp_cols: std::collections::BTreeMap<usize, Vec<usize>> =
        std::collections::BTreeMap::new();
    for c in 0..ncols {
        let root = find(&mut parent, c);
        comp_cols.entry(root).or_default().push(c);
    }
    let mut comp_rows: std::collections::BTreeMap<usize, Vec<&SparseRow>> =
        std::collections::BTreeMap::new();
    for row in &rows {
        if let Some(&(first, _)) = row.first() {
            let root = find(&mut parent, first);
            comp_rows.entry(root).or_default().push(row);
        }
    }

    let mut out: Vec<(usize, SparseRow)> = Vec::new();
    for (root, cols) in &comp_cols {
        let local: std::collections::BTreeMap<usize, usize> =
            cols.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let mut span = RowSpan::new(cols.len());
        for row in comp_rows.get(root).map(|v| v.as_slice()).unwrap_or(&[]) {
            span.insert(row.iter().map(|(c, v)| (local[c], v.clone())).collect());
        }
        let pivots = span.pivots();
        let mut is_pivot = vec![false; cols.len()];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        let free: Vec<usize> = (0..cols.len()).filter(|&i| !is_pivot[i]).collect();
        for (f, vec) in free.iter().zip(span.nullspace()) {
            let global: SparseRow = vec.into_iter().map(|(c, v)| (cols[c], v)).collect();
            out.push((cols[*f], global));
        }
    }
    out.sort_by_key(|(f, _)| *f);
    out.into_iter().map(|(_, v)| v).collect()
}

/// Determinant of a square dense matrix by fraction-free-enough
/// Gaussian elimination (exact rationals, partial structure only).
pub fn determinant(mat: &[Vec<Rat>]) -> Rat {
    let n = mat.len();
    let mut m: Vec<Vec<Rat>> = mat.to_vec();
    let mut det = Rat::one();
    for col in 0..n {
        let pivot = match (col..n).find(|&r| !m[r][col].is_zero()) {
            None => return Rat::zero(),
            Some(p) => p,
        };
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        let lead = m[col][col].clone();
        det *= lead.clone();
        for r in col + 1..n {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = &m[r][col] / &lead;
            for c in col..n {
                let delta = &m[col][c] * &factor;
                m[r][c] -= delta;
            }
        }
    }
    det
}

/// Inverse of a square dense matrix, if it exists.
pub fn invert_dense(mat: &[Vec<Rat>]) -> Option<Vec<Vec<Rat>>> {
    let n = mat.len();
    let mut m: Vec<Vec<Rat>> = mat.to_vec();
    let mut inv: Vec<Vec<Rat>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { Rat::one() } else { Rat::zero() }).collect())
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(pivot, col);
        inv.swap(pivot, col);
        let lead = m[col][col].clone();
        for c in 0..n {
            m[col][c] /= lead.clone();
            inv[col][c] /= lead.clone();
        }
        for r in 0..n {
            if r == col || m[r][col].is_zero() {
                continue;
            }
            let factor = m[r][col].clone();
            for c in 0..n {
                let dm = &m[col][c] * &factor;
                m[r][c] -= dm;
                let di = &inv[col][c] * &factor;
                inv[r][c] -= di;
            }
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::{rat, rint};

    fn row(entries: &[(usize, i64)]) -> SparseRow {
        entries.iter().map(|&(c, v)| (c, rint(v))).collect()
    }

    #[test]
    fn rref_is_canonical() {
        let mut a = RowSpan::new(3);
        a.insert(row(&[(0, 1), (1, 2), (2, 3)]));
        a.insert(row(&[(0, 2), (1, 4), (2, 7)]));
        let mut b = RowSpan::new(3);
        b.insert(row(&[(0, 2), (1, 4), (2, 7)]));
        b.insert(row(&[(0, 3), (1, 6), (2, 10)]));
        assert_eq!(a.rows(), b.rows());
        assert_eq!(a.rank(), 2);
        assert_eq!(a.pivots(), vec![0, 2]);
    }

    #[test]
    fn nullspace_of_rank_one() {
        // x + 2y + 3z = 0
        let ns = nullspace(3, vec![row(&[(0, 1), (1, 2), (2, 3)])]);
        assert_eq!(ns.len(), 2);
        assert_eq!(to_dense(3, &ns[0]), vec![rint(-2), rint(1), rint(0)]);
        assert_eq!(to_dense(3, &ns[1]), vec![rint(-3), rint(0), rint(1)]);
    }

    #[test]
    fn solve_unique() {
        // x + y = 3, x − y = 1  →  x = 2, y = 1
        let rows = vec![row(&[(0, 1), (1, 1)]), row(&[(0, 1), (1, -1)])];
        match solve(2, &rows, &[rint(3), rint(1)]) {
            Solve::Solution { particular, kernel } => {
                assert_eq!(particular, vec![rint(2), rint(1)]);
                assert!(kernel.is_empty());
            }
            Solve::Inconsistent => panic!("expected a solution"),
        }
    }

    #[test]
    fn solve_inconsistent_and_underdetermined() {
        let rows = vec![row(&[(0, 1), (1, 1)]), row(&[(0, 2), (1, 2)])];
        match solve(2, &rows, &[rint(1), rint(3)]) {
            Solve::Inconsistent => {}
            _ => panic!("expected inconsistency"),
        }
        match solve(2, &rows, &[rint(1), rint(2)]) {
            Solve::Solution { particular, kernel } => {
                assert_eq!(particular, vec![rint(1), rint(0)]);
                assert_eq!(kernel.len(), 1);
                assert_eq!(to_dense(2, &kernel[0]), vec![rint(-1), rint(1)]);
            }
            _ => panic!("expected solutions"),
        }
    }

    #[test]
    fn membership() {
        let mut span = RowSpan::new(3);
        span.insert(row(&[(0, 1), (1, 1)]));
        span.insert(row(&[(1, 1), (2, 1)]));
        assert!(span.contains(&row(&[(0, 2), (1, 1), (2, -1)])));
        assert!(!span.contains(&row(&[(2, 1)])));
        let reduced = span.reduce(vec![(0, rat(1, 2)), (2, rat(1, 2))]);
        assert!(!reduced.is_empty());
    }

    #[test]
    fn componentwise_nullspace_matches_global() {
        // Two independent blocks ({0,2,4} and {1,3}) plus an untouched
        // column 5; interleaved indices exercise the re-embedding.
        let rows = vec![
            row(&[(0, 1), (2, 2)]),
            row(&[(2, 1), (4, -1)]),
            row(&[(1, 3), (3, 1)]),
            row(&[(1, 6), (3, 2)]),
        ];
        let global = nullspace(6, rows.clone());
        let split = nullspace_components(6, rows);
        assert_eq!(global, split);
        assert_eq!(split.len(), 3);
    }

    #[test]
    fn determinant_and_inverse() {
        let m = vec![
            vec![rint(2), rint(1), rint(0)],
            vec![rint(1), rint(3), rint(1)],
            vec![rint(0), rint(1), rint(2)],
        ];
        assert_eq!(determinant(&m), rint(8));
        let inv = invert_dense(&m).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = Rat::zero();
                for k in 0..3 {
                    acc += &m[i][k] * &inv[k][j];
                }
                assert_eq!(acc, if i == j { Rat::one() } else { Rat::zero() });
            }
        }
        let singular = vec![vec![rint(1), rint(2)], vec![rint(2), rint(4)]];
        assert_eq!(determinant(&singular), Rat::zero());
        assert!(invert_dense(&singular).is_none());
    }
}
