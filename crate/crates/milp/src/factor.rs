//! Sparse LU factorization of a simplex basis with product-form updates.
//!
//! The basis is eliminated with Markowitz pivoting under a relative
//! threshold. Row operations are kept as L etas, the pivot rows as U, and
//! every basis change after the factorization appends one column eta.
//! Right-hand sides live in row space; solutions live in basis-position
//! space.

const THRESHOLD: f64 = 0.1;
const ABS_PIVOT_TOL: f64 = 1e-11;
const DROP_TOL: f64 = 1e-14;
/// Columns examined per Markowitz search.
const SEARCH_COLUMNS: usize = 4;

/// Rows and positions that could not be pivoted.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Singular {
    pub rows: Vec<usize>,
    pub positions: Vec<usize>,
    pub pivot: f64,
}

#[derive(Debug, Clone, Default)]
struct Sparse {
    start: Vec<usize>,
    index: Vec<usize>,
    value: Vec<f64>,
}

impl Sparse {
    fn clear(&mut self) {
        self.start.clear();
        self.start.push(0);
        self.index.clear();
        self.value.clear();
    }

    fn push(&mut self, entries: impl IntoIterator<Item = (usize, f64)>) {
        for (i, v) in entries {
            self.index.push(i);
            self.value.push(v);
        }
        self.start.push(self.index.len());
    }

    fn entries(&self, k: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.start[k]..self.start[k + 1];
        self.index[r.clone()].iter().copied().zip(self.value[r].iter().copied())
    }

    fn len(&self) -> usize {
        self.start.len().saturating_sub(1)
    }
}

#[derive(Debug, Clone, Default)]
pub(crate) struct Factor {
    m: usize,
    /// (pivot row, pivot position) per elimination step.
    pivots: Vec<(usize, usize)>,
    lower: Sparse,
    diag: Vec<f64>,
    upper: Sparse,
    eta_pos: Vec<usize>,
    eta_pivot: Vec<f64>,
    etas: Sparse,
}

impl Factor {
    pub fn new(m: usize) -> Self {
        let mut f = Self {
            m,
            ..Default::default()
        };
        f.lower.clear();
        f.upper.clear();
        f.etas.clear();
        f
    }

    /// Factorizes the basis whose position `k` holds column `columns[k]`
    /// (row, value) entries.
    pub fn factorize(&mut self, columns: &[Vec<(usize, f64)>]) -> Result<(), Singular> {
        let m = self.m;
        assert_eq!(columns.len(), m);
        self.pivots.clear();
        self.diag.clear();
        self.lower.clear();
        self.upper.clear();
        self.eta_pos.clear();
        self.eta_pivot.clear();
        self.etas.clear();

        let mut cols: Vec<Vec<(usize, f64)>> = columns
            .iter()
            .map(|c| c.iter().copied().filter(|&(_, v)| v != 0.0).collect())
            .collect();
        let mut row_cols: Vec<Vec<usize>> = vec![Vec::new(); m];
        for (k, c) in cols.iter().enumerate() {
            for &(i, _) in c {
                row_cols[i].push(k);
            }
        }
        let mut row_count: Vec<usize> = row_cols.iter().map(Vec::len).collect();
        let mut row_active = vec![true; m];
        let mut col_active = vec![true; m];
        let mut col_singletons: Vec<usize> = (0..m).filter(|&k| cols[k].len() == 1).rev().collect();
        let mut row_singletons: Vec<usize> = (0..m).filter(|&i| row_count[i] == 1).rev().collect();

        for _ in 0..m {
            let Some((p, q)) = Self::choose_pivot(
                &cols,
                &row_cols,
                &row_count,
                &row_active,
                &col_active,
                &mut col_singletons,
                &mut row_singletons,
            ) else {
                let positions: Vec<usize> = (0..m).filter(|&k| col_active[k]).collect();
                let rows: Vec<usize> = (0..m).filter(|&i| row_active[i]).collect();
                let pivot = positions
                    .iter()
                    .flat_map(|&k| cols[k].iter().map(|e| e.1.abs()))
                    .fold(0.0, f64::max);
                return Err(Singular { rows, positions, pivot });
            };

            let a = cols[q].iter().find(|e| e.0 == p).map(|e| e.1).expect("pivot entry");
            // U row: the rest of row p, removed from the active columns.
            let mut urow: Vec<(usize, f64)> = Vec::new();
            for &c in &row_cols[p] {
                if c == q || !col_active[c] {
                    continue;
                }
                if let Some(at) = cols[c].iter().position(|e| e.0 == p) {
                    let (_, v) = cols[c].swap_remove(at);
                    urow.push((c, v));
                    if cols[c].len() == 1 {
                        col_singletons.push(c);
                    }
                }
            }
            row_active[p] = false;
            col_active[q] = false;
            let lcol: Vec<(usize, f64)> = cols[q]
                .iter()
                .filter(|e| e.0 != p)
                .map(|&(i, v)| (i, v / a))
                .collect();
            cols[q].clear();

            for &(i, l) in &lcol {
                row_count[i] -= 1;
                for &(c, u) in &urow {
                    let delta = -l * u;
                    match cols[c].iter().position(|e| e.0 == i) {
                        Some(at) => {
                            let v = cols[c][at].1 + delta;
                            if v.abs() <= DROP_TOL {
                                cols[c].swap_remove(at);
                                row_count[i] -= 1;
                                if cols[c].len() == 1 {
                                    col_singletons.push(c);
                                }
                            } else {
                                cols[c][at].1 = v;
                            }
                        }
                        None => {
                            if delta.abs() > DROP_TOL {
                                cols[c].push((i, delta));
                                row_cols[i].push(c);
                                row_count[i] += 1;
                            }
                        }
                    }
                }
                if row_count[i] == 1 {
                    row_singletons.push(i);
                }
            }

            self.pivots.push((p, q));
            self.diag.push(a);
            self.lower.push(lcol);
            self.upper.push(urow);
        }
        Ok(())
    }

    fn choose_pivot(
        cols: &[Vec<(usize, f64)>],
        row_cols: &[Vec<usize>],
        row_count: &[usize],
        row_active: &[bool],
        col_active: &[bool],
        col_singletons: &mut Vec<usize>,
        row_singletons: &mut Vec<usize>,
    ) -> Option<(usize, usize)> {
        let col_max = |k: usize| cols[k].iter().fold(0.0f64, |a, e| a.max(e.1.abs()));
        while let Some(k) = col_singletons.pop() {
            if col_active[k] && cols[k].len() == 1 && cols[k][0].1.abs() > ABS_PIVOT_TOL {
                return Some((cols[k][0].0, k));
            }
        }
        while let Some(i) = row_singletons.pop() {
            if !row_active[i] || row_count[i] != 1 {
                continue;
            }
            let found = row_cols[i]
                .iter()
                .copied()
                .filter(|&c| col_active[c])
                .find_map(|c| cols[c].iter().find(|e| e.0 == i).map(|e| (c, e.1)));
            if let Some((c, v)) = found {
                if v.abs() > ABS_PIVOT_TOL && v.abs() >= THRESHOLD * col_max(c) {
                    return Some((i, c));
                }
            }
        }
        // Markowitz search over the sparsest active columns.
        let mut order: Vec<usize> = (0..cols.len())
            .filter(|&k| col_active[k] && !cols[k].is_empty())
            .collect();
        if order.is_empty() {
            return None;
        }
        if order.len() > SEARCH_COLUMNS {
            order.select_nth_unstable_by_key(SEARCH_COLUMNS - 1, |&k| (cols[k].len(), k));
            order.truncate(SEARCH_COLUMNS);
        }
        order.sort_by_key(|&k| (cols[k].len(), k));
        let mut best: Option<(usize, usize, usize, f64)> = None;
        for &k in &order {
            let cmax = col_max(k);
            let ck = cols[k].len() - 1;
            for &(i, v) in &cols[k] {
                let a = v.abs();
                if a <= ABS_PIVOT_TOL || a < THRESHOLD * cmax {
                    continue;
                }
                let cost = (row_count[i] - 1) * ck;
                let better = match best {
                    None => true,
                    Some((_, _, bc, ba)) => cost < bc || (cost == bc && a > ba),
                };
                if better {
                    best = Some((i, k, cost, a));
                }
            }
        }
        best.map(|(i, k, ..)| (i, k))
    }

    /// Replaces `b` (row space) by `B^{-1} b` (position space).
    pub fn ftran(&self, b: &mut [f64]) {
        for (k, &(p, _)) in self.pivots.iter().enumerate() {
            let bp = b[p];
            if bp != 0.0 {
                for (i, l) in self.lower.entries(k) {
                    b[i] -= l * bp;
                }
            }
        }
        let mut x = vec![0.0; self.m];
        for k in (0..self.pivots.len()).rev() {
            let (p, q) = self.pivots[k];
            let mut s = b[p];
            for (c, u) in self.upper.entries(k) {
                s -= u * x[c];
            }
            x[q] = s / self.diag[k];
        }
        for e in 0..self.eta_pos.len() {
            let r = self.eta_pos[e];
            let xr = x[r] / self.eta_pivot[e];
            x[r] = xr;
            if xr != 0.0 {
                for (i, a) in self.etas.entries(e) {
                    x[i] -= a * xr;
                }
            }
        }
        b.copy_from_slice(&x);
    }

    /// Replaces `c` (position space) by `B^{-T} c` (row space).
    pub fn btran(&self, c: &mut [f64]) {
        for e in (0..self.eta_pos.len()).rev() {
            let r = self.eta_pos[e];
            let mut s = c[r];
            for (i, a) in self.etas.entries(e) {
                s -= a * c[i];
            }
            c[r] = s / self.eta_pivot[e];
        }
        let mut z = vec![0.0; self.m];
        for (k, &(p, q)) in self.pivots.iter().enumerate() {
            let zp = c[q] / self.diag[k];
            z[p] = zp;
            if zp != 0.0 {
                for (pos, u) in self.upper.entries(k) {
                    c[pos] -= u * zp;
                }
            }
        }
        for k in (0..self.pivots.len()).rev() {
            let p = self.pivots[k].0;
            let mut s = z[p];
            for (i, l) in self.lower.entries(k) {
                s -= l * z[i];
            }
            z[p] = s;
        }
        c.copy_from_slice(&z);
    }

    /// Records that position `r` now holds a column with `B^{-1} a = alpha`.
    pub fn update(&mut self, r: usize, alpha: &[f64]) {
        self.eta_pos.push(r);
        self.eta_pivot.push(alpha[r]);
        self.etas.push(
            alpha
                .iter()
                .enumerate()
                .filter(|&(i, &a)| i != r && a != 0.0)
                .map(|(i, &a)| (i, a)),
        );
        debug_assert_eq!(self.etas.len(), self.eta_pos.len());
    }
}
