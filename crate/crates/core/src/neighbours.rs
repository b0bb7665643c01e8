//! Nearest-better neighbour queries over a fitness-sorted selection.

use crate::hillvalley::Solution;

/// Largest dimension for which the grid index is used.
const GRID_MAX_DIMENSION: usize = 4;
/// Smallest selection for which building the grid pays off.
const GRID_MIN_SIZE: usize = 1024;

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Finds, for each rank in turn, the nearest solutions among the better
/// ranks. Results are the `capacity` smallest `(distance, rank)` pairs in
/// lexicographic order, whether a linear scan or the grid answers the query.
pub(crate) struct NearestBetter<'a> {
    selection: &'a [Solution],
    order: &'a [usize],
    capacity: usize,
    grid: Option<Grid>,
    // (squared distance, rank), ascending
    buf: Vec<(f64, usize)>,
    out: Vec<(f64, usize)>,
}

impl<'a> NearestBetter<'a> {
    pub(crate) fn new(selection: &'a [Solution], order: &'a [usize], capacity: usize) -> Self {
        let d = order.first().map_or(0, |&i| selection[i].dimension());
        let grid = (d > 0 && d <= GRID_MAX_DIMENSION && order.len() >= GRID_MIN_SIZE)
            .then(|| Grid::new(selection, order, d));
        Self {
            selection,
            order,
            capacity,
            grid,
            buf: Vec::with_capacity(capacity + 1),
            out: Vec::with_capacity(capacity),
        }
    }

    /// Collects the neighbours of `rank` among ranks `0..rank` as
    /// `(distance, rank)` pairs, nearest first.
    pub(crate) fn collect(&mut self, rank: usize) -> &[(f64, usize)] {
        self.buf.clear();
        let x = &self.selection[self.order[rank]].position;
        match self.grid.as_mut() {
            Some(grid) if !grid.scan_is_cheaper(rank, self.capacity) => {
                grid.insert_up_to(self.selection, self.order, rank);
                grid.query(x, self.selection, self.order, self.capacity, &mut self.buf);
            }
            _ => {
                for (better_rank, &idx) in self.order[..rank].iter().enumerate() {
                    let d2 = squared_distance(x, &self.selection[idx].position);
                    offer(&mut self.buf, self.capacity, d2, better_rank);
                }
            }
        }
        self.out.clear();
        self.out.extend(self.buf.iter().map(|&(d2, r)| (d2.sqrt(), r)));
        &self.out
    }
}

fn offer(buf: &mut Vec<(f64, usize)>, capacity: usize, d2: f64, rank: usize) {
    let before = |a: &(f64, usize)| a.0 < d2 || (a.0 == d2 && a.1 < rank);
    if buf.len() == capacity {
        match buf.last() {
            Some(last) if before(last) => return,
            None => return,
            _ => {}
        }
        buf.pop();
    }
    let pos = buf.partition_point(before);
    buf.insert(pos, (d2, rank));
}

/// Uniform grid over the bounding box of the selection, filled in rank order.
struct Grid {
    lower: Vec<f64>,
    cell: f64,
    dims: Vec<usize>,
    strides: Vec<usize>,
    cells: Vec<Vec<usize>>,
    inserted: usize,
}

impl Grid {
    fn new(selection: &[Solution], order: &[usize], d: usize) -> Self {
        let mut lower = vec![f64::INFINITY; d];
        let mut upper = vec![f64::NEG_INFINITY; d];
        for &i in order {
            for (k, &v) in selection[i].position.iter().enumerate() {
                lower[k] = lower[k].min(v);
                upper[k] = upper[k].max(v);
            }
        }
        let widest = lower.iter().zip(&upper).map(|(l, u)| u - l).fold(0.0, f64::max);
        let widest = if widest > 0.0 { widest } else { 1.0 };
        let extents: Vec<f64> = lower
            .iter()
            .zip(&upper)
            .map(|(l, u)| (u - l).max(widest * 1e-9))
            .collect();

        // about two solutions per cell
        let target = (order.len() / 2).max(1) as f64;
        let volume: f64 = extents.iter().product();
        let mut cell = (volume / target).powf(1.0 / d as f64);
        let dims = loop {
            let dims: Vec<usize> = extents.iter().map(|e| ((e / cell).ceil() as usize).max(1)).collect();
            if dims.iter().product::<usize>() <= 4 * order.len() {
                break dims;
            }
            cell *= 1.5;
        };
        let mut strides = vec![1; d];
        for k in 1..d {
            strides[k] = strides[k - 1] * dims[k - 1];
        }
        let total = dims.iter().product();
        Self {
            lower,
            cell,
            dims,
            strides,
            cells: vec![Vec::new(); total],
            inserted: 0,
        }
    }

    fn coords(&self, x: &[f64]) -> Vec<usize> {
        x.iter()
            .zip(&self.lower)
            .zip(&self.dims)
            .map(|((v, l), &m)| (((v - l) / self.cell).floor().max(0.0) as usize).min(m - 1))
            .collect()
    }

    /// Rough comparison of a linear scan against the rings a grid query is
    /// expected to visit when `rank` solutions are spread over the grid.
    fn scan_is_cheaper(&self, rank: usize, capacity: usize) -> bool {
        let d = self.dims.len() as f64;
        let side = (self.cells.len() as f64).powf(1.0 / d);
        let radius = side * (capacity as f64 / rank.max(1) as f64).powf(1.0 / d);
        let cells = (2.0 * radius + 3.0).powf(d);
        rank as f64 <= cells
    }

    fn insert_up_to(&mut self, selection: &[Solution], order: &[usize], rank: usize) {
        while self.inserted < rank {
            let c = self.coords(&selection[order[self.inserted]].position);
            let index: usize = c.iter().zip(&self.strides).map(|(a, s)| a * s).sum();
            self.cells[index].push(self.inserted);
            self.inserted += 1;
        }
    }

    fn query(&self, x: &[f64], selection: &[Solution], order: &[usize], capacity: usize, buf: &mut Vec<(f64, usize)>) {
        let d = self.dims.len();
        let centre = self.coords(x);
        let max_ring = centre
            .iter()
            .zip(&self.dims)
            .map(|(&c, &m)| c.max(m - 1 - c))
            .max()
            .unwrap_or(0);
        let mut at = vec![0usize; d];
        for ring in 0..=max_ring {
            let lo: Vec<usize> = centre.iter().map(|&c| c.saturating_sub(ring)).collect();
            let hi: Vec<usize> = centre.iter().zip(&self.dims).map(|(&c, &m)| (c + ring).min(m - 1)).collect();
            at.copy_from_slice(&lo);
            'cells: loop {
                let on_ring = at.iter().zip(&centre).any(|(&a, &c)| a.abs_diff(c) == ring);
                if on_ring {
                    let index: usize = at.iter().zip(&self.strides).map(|(a, s)| a * s).sum();
                    for &r in &self.cells[index] {
                        let d2 = squared_distance(x, &selection[order[r]].position);
                        offer(buf, capacity, d2, r);
                    }
                }
                for k in 0..d {
                    if at[k] < hi[k] {
                        at[k] += 1;
                        continue 'cells;
                    }
                    at[k] = lo[k];
                }
                break;
            }
            // every solution outside rings 0..=ring is at least ring * cell away
            let reach = ring as f64 * self.cell;
            if buf.len() == capacity && buf[capacity - 1].0 < reach * reach * (1.0 - 1e-9) {
                return;
            }
        }
    }
}
