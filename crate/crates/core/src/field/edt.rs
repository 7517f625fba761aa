//! Exact Euclidean distance transforms.
//!
//! [`compute_edt`] runs the separable lower-envelope-of-parabolas transform on
//! integer squared cell distances, comparing envelope breakpoints as exact
//! rationals. Both it and [`brute_force_edt`] map the integer squared distance
//! to meters through the same final expression, so the two agree bit for bit.

use super::grid::{DistanceField, OccupancyGrid};

const INF: i64 = i64::MAX;

pub fn compute_edt(grid: &OccupancyGrid) -> DistanceField {
    let g = grid.geometry();
    let (w, h) = (g.width(), g.height());
    let mut scratch = Envelope::with_capacity(w.max(h));

    // Rows: squared distance along x to the nearest occupied cell in the same row.
    let mut rows = vec![INF; w * h];
    let mut f = vec![0i64; w.max(h)];
    let mut out = vec![0i64; w.max(h)];
    for iy in 0..h {
        let row = &grid.cells()[iy * w..(iy + 1) * w];
        for (fx, &occ) in f.iter_mut().zip(row) {
            *fx = if occ { 0 } else { INF };
        }
        scratch.transform(&f[..w], &mut out[..w]);
        rows[iy * w..(iy + 1) * w].copy_from_slice(&out[..w]);
    }

    // Columns: fold the row distances along y.
    let mut sq = vec![INF; w * h];
    for ix in 0..w {
        for iy in 0..h {
            f[iy] = rows[iy * w + ix];
        }
        scratch.transform(&f[..h], &mut out[..h]);
        for iy in 0..h {
            sq[iy * w + ix] = out[iy];
        }
    }

    let values = sq.into_iter().map(|d| to_meters(d, grid)).collect();
    DistanceField::from_values(*g, values).expect("field matches grid geometry")
}

/// O(cells²) minimum over all occupied cells; the reference for [`compute_edt`].
pub fn brute_force_edt(grid: &OccupancyGrid) -> DistanceField {
    let g = grid.geometry();
    let occupied: Vec<(i64, i64)> = (0..g.len())
        .filter(|&i| grid.cells()[i])
        .map(|i| {
            let (x, y) = g.coords(i);
            (x as i64, y as i64)
        })
        .collect();
    let values = (0..g.len())
        .map(|i| {
            let (x, y) = g.coords(i);
            let best = occupied
                .iter()
                .map(|&(ox, oy)| (ox - x as i64).pow(2) + (oy - y as i64).pow(2))
                .min()
                .unwrap_or(INF);
            to_meters(best, grid)
        })
        .collect();
    DistanceField::from_values(*g, values).expect("field matches grid geometry")
}

#[inline]
fn to_meters(squared_cells: i64, grid: &OccupancyGrid) -> f64 {
    let g = grid.geometry();
    if squared_cells == INF {
        g.diagonal()
    } else {
        (squared_cells as f64).sqrt() * g.cell_size()
    }
}

/// Breakpoint between two parabolas, `num / den` with `den > 0`.
#[derive(Clone, Copy)]
struct Ratio {
    num: i64,
    den: i64,
}

impl Ratio {
    #[inline]
    fn le(self, other: Ratio) -> bool {
        (self.num as i128) * (other.den as i128) <= (other.num as i128) * (self.den as i128)
    }

    #[inline]
    fn lt_int(self, q: i64) -> bool {
        (self.num as i128) < (q as i128) * (self.den as i128)
    }
}

struct Envelope {
    sites: Vec<usize>,
    // bounds[k] is where parabola k starts to be the lowest; bounds[0] is -inf.
    bounds: Vec<Ratio>,
}

impl Envelope {
    fn with_capacity(n: usize) -> Self {
        Self { sites: Vec::with_capacity(n), bounds: Vec::with_capacity(n) }
    }

    /// out[q] = min_p (q - p)² + f[p] over sites with finite f, INF if none.
    fn transform(&mut self, f: &[i64], out: &mut [i64]) {
        self.sites.clear();
        self.bounds.clear();
        for (q, &fq) in f.iter().enumerate() {
            if fq == INF {
                continue;
            }
            let qi = q as i64;
            loop {
                let Some(&p) = self.sites.last() else {
                    self.sites.push(q);
                    self.bounds.push(Ratio { num: i64::MIN, den: 1 });
                    break;
                };
                let pi = p as i64;
                let s = Ratio { num: (fq + qi * qi) - (f[p] + pi * pi), den: 2 * (qi - pi) };
                let k = self.sites.len() - 1;
                if k > 0 && s.le(self.bounds[k]) {
                    self.sites.pop();
                    self.bounds.pop();
                    continue;
                }
                self.sites.push(q);
                self.bounds.push(s);
                break;
            }
        }
        if self.sites.is_empty() {
            out.fill(INF);
            return;
        }
        let mut k = 0;
        for (q, o) in out.iter_mut().enumerate() {
            let qi = q as i64;
            while k + 1 < self.sites.len() && self.bounds[k + 1].lt_int(qi) {
                k += 1;
            }
            let p = self.sites[k] as i64;
            *o = (qi - p) * (qi - p) + f[self.sites[k]];
        }
    }
}
