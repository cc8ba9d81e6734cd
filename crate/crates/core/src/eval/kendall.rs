//! Kendall rank correlation with tie correction (tau-b), in O(n log n).

use std::cmp::Ordering;

use crate::scalar::Scalar;

/// Pair counts behind tau-b.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TauCounts {
    /// `n (n - 1) / 2`
    pub pairs: u64,
    /// Pairs tied in x (including those also tied in y).
    pub tied_x: u64,
    /// Pairs tied in y (including those also tied in x).
    pub tied_y: u64,
    /// Pairs tied in both.
    pub tied_xy: u64,
    /// Strictly discordant pairs.
    pub discordant: u64,
}

impl TauCounts {
    /// Concordant minus discordant pairs.
    pub fn score(&self) -> i128 {
        self.pairs as i128 - self.tied_x as i128 - self.tied_y as i128 + self.tied_xy as i128
            - 2 * self.discordant as i128
    }

    /// `None` when either ranking is constant.
    pub fn tau_b(&self) -> Option<f64> {
        let untied_x = (self.pairs - self.tied_x) as u128;
        let untied_y = (self.pairs - self.tied_y) as u128;
        let denom = untied_x * untied_y;
        if denom == 0 {
            return None;
        }
        Some(self.score() as f64 / (denom as f64).sqrt())
    }
}

fn cmp<T: Scalar>(a: T, b: T) -> Ordering {
    a.partial_cmp(&b).unwrap_or(Ordering::Equal)
}

fn tied_pairs(run: u64) -> u64 {
    run * (run.saturating_sub(1)) / 2
}

/// Counts pairs for tau-b using Knight's sort-and-merge algorithm.
pub fn tau_counts<T: Scalar>(x: &[T], y: &[T]) -> TauCounts {
    assert_eq!(x.len(), y.len(), "kendall: length mismatch");
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| cmp(x[a], x[b]).then(cmp(y[a], y[b])));

    let mut counts = TauCounts {
        pairs: tied_pairs(n as u64),
        ..TauCounts::default()
    };
    let (mut run_x, mut run_xy) = (1u64, 1u64);
    for w in order.windows(2) {
        let (a, b) = (w[0], w[1]);
        if x[a] == x[b] {
            run_x += 1;
            if y[a] == y[b] {
                run_xy += 1;
            } else {
                counts.tied_xy += tied_pairs(run_xy);
                run_xy = 1;
            }
        } else {
            counts.tied_x += tied_pairs(run_x);
            counts.tied_xy += tied_pairs(run_xy);
            run_x = 1;
            run_xy = 1;
        }
    }
    counts.tied_x += tied_pairs(run_x);
    counts.tied_xy += tied_pairs(run_xy);

    let mut ys: Vec<T> = order.iter().map(|&i| y[i]).collect();
    let mut buf = ys.clone();
    counts.discordant = merge_count(&mut ys, &mut buf);

    let mut run_y = 1u64;
    for w in ys.windows(2) {
        if w[0] == w[1] {
            run_y += 1;
        } else {
            counts.tied_y += tied_pairs(run_y);
            run_y = 1;
        }
    }
    counts.tied_y += tied_pairs(run_y);
    counts
}

/// Stable bottom-up merge sort returning the number of strict inversions.
fn merge_count<T: Scalar>(v: &mut [T], buf: &mut [T]) -> u64 {
    let n = v.len();
    let mut swaps = 0u64;
    let mut width = 1;
    while width < n {
        let mut start = 0;
        while start < n {
            let mid = (start + width).min(n);
            let end = (start + 2 * width).min(n);
            let (mut i, mut j, mut k) = (start, mid, start);
            while i < mid && j < end {
                if cmp(v[j], v[i]) == Ordering::Less {
                    buf[k] = v[j];
                    swaps += (mid - i) as u64;
                    j += 1;
                } else {
                    buf[k] = v[i];
                    i += 1;
                }
                k += 1;
            }
            buf[k..k + (mid - i)].copy_from_slice(&v[i..mid]);
            k += mid - i;
            buf[k..k + (end - j)].copy_from_slice(&v[j..end]);
            start = end;
        }
        v.copy_from_slice(buf);
        width *= 2;
    }
    swaps
}

/// Tie-corrected Kendall tau. `None` when fewer than two values or either
/// vector is constant.
pub fn kendall_tau_b<T: Scalar>(x: &[T], y: &[T]) -> Option<T> {
    if x.len() < 2 {
        return None;
    }
    tau_counts(x, y).tau_b().and_then(T::from_f64)
}
