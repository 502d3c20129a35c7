//! Column transfer matrices on strips of fixed height.

use std::collections::HashMap;
use std::ops::ControlFlow;

use super::search::{Problem, SearchOptions};
use super::SftSpec;
use crate::error::{Error, Result};
use crate::lattice::Symbol;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wrap {
    /// Rows are periodic.
    Cylinder,
    /// Only windows fully inside the strip are checked.
    Free,
}

/// Sparse nonnegative matrix over column states.
///
/// A state is the sequence of the last `span - 1` columns; moving to the
/// next state appends one column and carries the weight of that column.
#[derive(Debug, Clone)]
pub struct TransferMatrix {
    pub width: usize,
    /// Column patterns, bottom row first, one column after another.
    pub states: Vec<Vec<Symbol>>,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
    /// Weight of each state's own columns, for strip partition sums.
    initial: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigen {
    pub lambda: f64,
    /// Collatz–Wielandt bounds from the final iterate.
    pub lower: f64,
    pub upper: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl TransferMatrix {
    pub fn from_triplets(width: usize, states: Vec<Vec<Symbol>>, mut entries: Vec<(u32, u32, f64)>, initial: Vec<f64>) -> Self {
        let n = states.len();
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(entries.len());
        let mut vals: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(u32, u32)> = None;
        for (r, c, v) in entries {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            last = Some((r, c));
            row_ptr[r as usize + 1] += 1;
            cols.push(c);
            vals.push(v);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        TransferMatrix { width, states, row_ptr, cols, vals, initial }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn entry(&self, r: usize, c: usize) -> f64 {
        (self.row_ptr[r]..self.row_ptr[r + 1]).find(|&k| self.cols[k] as usize == c).map_or(0.0, |k| self.vals[k])
    }

    /// `y = x T` (row vector times matrix).
    pub fn apply_left(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for r in 0..self.len() {
            let xr = x[r];
            if xr == 0.0 {
                continue;
            }
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                y[self.cols[k] as usize] += xr * self.vals[k];
            }
        }
    }

    /// `y = T x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for r in 0..self.len() {
            let mut s = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.vals[k] * x[self.cols[k] as usize];
            }
            y[r] = s;
        }
    }

    /// Perron root by shifted power iteration.
    pub fn leading_eigenvalue(&self, tol: f64, max_iter: usize) -> Eigen {
        let n = self.len();
        if n == 0 {
            return Eigen { lambda: 0.0, lower: 0.0, upper: 0.0, iterations: 0, converged: true };
        }
        // shifting by a positive multiple of the identity removes periodicity
        let shift = 1.0;
        let mut x = vec![1.0 / n as f64; n];
        let mut y = vec![0.0; n];
        let mut lambda = 0.0;
        let mut converged = false;
        let mut it = 0;
        while it < max_iter {
            it += 1;
            self.apply(&x, &mut y);
            let norm: f64 = y.iter().zip(&x).map(|(a, b)| a + shift * b).sum();
            let est = norm - shift;
            for (yi, xi) in y.iter_mut().zip(&x) {
                *yi = (*yi + shift * xi) / norm;
            }
            std::mem::swap(&mut x, &mut y);
            if (est - lambda).abs() <= tol * est.abs().max(1e-300) && it > 2 {
                lambda = est;
                converged = true;
                break;
            }
            lambda = est;
        }
        self.apply(&x, &mut y);
        let mut lower = f64::INFINITY;
        let mut upper: f64 = 0.0;
        let xmax = x.iter().cloned().fold(0.0, f64::max);
        for (yi, xi) in y.iter().zip(&x) {
            if *xi > 1e-13 * xmax {
                let r = yi / xi;
                lower = lower.min(r);
                upper = upper.max(r);
            }
        }
        Eigen { lambda, lower, upper, iterations: it, converged }
    }

    /// Weighted count of strips `length` columns long.
    pub fn strip_partition(&self, length: usize, span: usize) -> f64 {
        assert!(length + 1 >= span, "strip shorter than a state");
        let mut v = self.initial.clone();
        let mut w = vec![0.0; v.len()];
        for _ in 0..length + 1 - span {
            self.apply_left(&v, &mut w);
            std::mem::swap(&mut v, &mut w);
        }
        v.iter().sum()
    }
}

/// Transfer matrix for strips of height `width`.
///
/// With symbol classes present (tone lifts), states are built from class
/// representatives and each site contributes the summed weight of its
/// class, which gives the same spectrum as the uncompressed matrix.
pub fn strip_transfer_matrix(
    spec: &SftSpec,
    width: usize,
    site_weight: Option<&dyn Fn(Symbol) -> f64>,
    wrap: Wrap,
    state_budget: usize,
) -> Result<TransferMatrix> {
    if width == 0 {
        return Err(Error::Invalid("strip width must be positive".into()));
    }
    let offs = spec.window().offsets();
    let xmin = offs.iter().map(|o| o.x).min().unwrap();
    let xmax = offs.iter().map(|o| o.x).max().unwrap();
    let ymin = offs.iter().map(|o| o.y).min().unwrap();
    let ymax = offs.iter().map(|o| o.y).max().unwrap();
    let span = ((xmax - xmin + 1) as usize).max(2);
    let w = width as i32;
    let slot = |x: i32, y: i32| (x as usize) * width + y as usize;

    let mut windows = Vec::new();
    for ax in -xmin..(span as i32 - xmax) {
        for ay in 0..w {
            if wrap == Wrap::Free && !(ay + ymin >= 0 && ay + ymax < w) {
                continue;
            }
            windows.push(
                offs.iter().map(|o| slot(ax + o.x, (ay + o.y).rem_euclid(w))).collect::<Vec<usize>>(),
            );
        }
    }
    let classes = spec.has_nontrivial_classes();
    let class_weight: Vec<f64> = (0..spec.alphabet_size() as Symbol)
        .map(|s| {
            let members = &spec.classes()[spec.class_of(s) as usize];
            if classes {
                members.iter().map(|&m| site_weight.map_or(1.0, |f| f(m))).sum()
            } else {
                site_weight.map_or(1.0, |f| f(s))
            }
        })
        .collect();

    let n = span * width;
    let mut prob = Problem::new(spec, vec![super::UNSET; n], (0..n).collect(), &windows);
    let opts = SearchOptions { classes, ..SearchOptions::default() };
    let mut index: HashMap<Vec<Symbol>, u32> = HashMap::new();
    let mut states: Vec<Vec<Symbol>> = Vec::new();
    let mut entries: Vec<(u32, u32, f64)> = Vec::new();
    let mut over = false;
    let head = (span - 1) * width;
    let _ = prob.search(&opts, |vals| {
        let mut id = |key: &[Symbol], states: &mut Vec<Vec<Symbol>>| -> u32 {
            if let Some(&i) = index.get(key) {
                return i;
            }
            let i = states.len() as u32;
            index.insert(key.to_vec(), i);
            states.push(key.to_vec());
            i
        };
        let a = id(&vals[..head], &mut states);
        let b = id(&vals[width..], &mut states);
        let weight: f64 = vals[head..].iter().map(|&s| class_weight[s as usize]).product();
        entries.push((a, b, weight));
        if states.len() > state_budget || entries.len() > 8 * state_budget {
            over = true;
            return ControlFlow::Break(());
        }
        ControlFlow::Continue(())
    })?;
    if over {
        return Err(Error::StateBudgetExceeded(states.len()));
    }
    let initial = states.iter().map(|st| st.iter().map(|&s| class_weight[s as usize]).product()).collect();
    Ok(TransferMatrix::from_triplets(width, states, entries, initial))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sft::full_shift;

    #[test]
    fn full_shift_width_three() {
        let tm = strip_transfer_matrix(&full_shift(2), 3, None, Wrap::Cylinder, 1 << 20).unwrap();
        let e = tm.leading_eigenvalue(1e-12, 100_000);
        assert!((e.lambda - 8.0).abs() < 1e-9);
        assert!(e.lower <= e.lambda + 1e-9 && e.lambda <= e.upper + 1e-9);
        assert!(((e.lambda.ln() / 3.0) - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn periodic_matrix_still_converges() {
        let tm = TransferMatrix::from_triplets(
            1,
            vec![vec![0], vec![1]],
            vec![(0, 1, 2.0), (1, 0, 2.0)],
            vec![1.0, 1.0],
        );
        let e = tm.leading_eigenvalue(1e-13, 10_000);
        assert!(e.converged);
        assert!((e.lambda - 2.0).abs() < 1e-10);
    }
}
