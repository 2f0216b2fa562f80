//! Periodic sliding-window maxima (monotone deque) and box sums, applied
//! separably along the axes of a grid.

use std::collections::VecDeque;

use crate::grid::GridSpec;

/// Maximum over the periodic window `[i − r, i + r]` for every `i`.
///
/// Amortized O(1) per element; a window at least as long as the line
/// degenerates to the global maximum.
pub fn sliding_max_periodic(line: &[f64], half_width: usize) -> Vec<f64> {
    let n = line.len();
    if n == 0 {
        return Vec::new();
    }
    if 2 * half_width + 1 >= n {
        let m = line.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        return vec![m; n];
    }
    let r = half_width as i64;
    let at = |j: i64| line[j.rem_euclid(n as i64) as usize];
    let mut queue: VecDeque<(i64, f64)> = VecDeque::with_capacity(2 * half_width + 2);
    let mut out = Vec::with_capacity(n);
    let mut next = -r;
    for i in 0..n as i64 {
        while next <= i + r {
            let v = at(next);
            while queue.back().is_some_and(|&(_, b)| b <= v) {
                queue.pop_back();
            }
            queue.push_back((next, v));
            next += 1;
        }
        while queue.front().is_some_and(|&(j, _)| j < i - r) {
            queue.pop_front();
        }
        out.push(queue.front().expect("window is never empty").1);
    }
    out
}

/// Sum over the periodic window `[i − r, i + r]`; requires `2r + 1 ≤ len`.
pub fn box_sum_periodic(line: &[f64], half_width: usize) -> Vec<f64> {
    let n = line.len();
    debug_assert!(2 * half_width < n);
    let mut prefix = Vec::with_capacity(3 * n + 1);
    prefix.push(0.0);
    for k in 0..3 * n {
        let last = *prefix.last().expect("non-empty");
        prefix.push(last + line[k % n]);
    }
    (0..n).map(|i| prefix[n + i + half_width + 1] - prefix[n + i - half_width]).collect()
}

/// Applies a line operation along `axis` of row-major grid data.
pub fn along_axis(
    data: &[f64],
    spec: &GridSpec,
    axis: usize,
    op: impl Fn(&[f64]) -> Vec<f64>,
) -> Vec<f64> {
    let n = spec.points();
    match (spec.dim(), axis) {
        (1, _) => op(data),
        (_, 1) => data.chunks(n).flat_map(&op).collect(),
        _ => {
            let mut out = vec![0.0; data.len()];
            let mut column = vec![0.0; n];
            for j in 0..n {
                for i in 0..n {
                    column[i] = data[i * n + j];
                }
                for (i, v) in op(&column).into_iter().enumerate() {
                    out[i * n + j] = v;
                }
            }
            out
        }
    }
}

/// Maximum over the periodic Chebyshev box of half-width `r` cells.
pub fn box_max(data: &[f64], spec: &GridSpec, half_width: usize) -> Vec<f64> {
    let mut out = data.to_vec();
    for axis in 0..spec.dim() {
        out = along_axis(&out, spec, axis, |l| sliding_max_periodic(l, half_width));
    }
    out
}

/// Sum over the periodic Chebyshev box of half-width `r` cells.
pub fn box_sum(data: &[f64], spec: &GridSpec, half_width: usize) -> Vec<f64> {
    let mut out = data.to_vec();
    for axis in 0..spec.dim() {
        out = along_axis(&out, spec, axis, |l| box_sum_periodic(l, half_width));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_max(line: &[f64], r: usize) -> Vec<f64> {
        let n = line.len() as i64;
        (0..n)
            .map(|i| {
                (-(r as i64)..=r as i64)
                    .map(|d| line[(i + d).rem_euclid(n) as usize])
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect()
    }

    #[test]
    fn zero_width_is_identity() {
        let line = [3.0, -1.0, 2.0, 7.0];
        assert_eq!(sliding_max_periodic(&line, 0), line.to_vec());
    }

    #[test]
    fn window_wraps_around_the_seam() {
        let line = [9.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0];
        assert_eq!(sliding_max_periodic(&line, 1), vec![9.0, 9.0, 0.0, 0.0, 0.0, 0.0, 1.0, 9.0]);
    }

    proptest! {
        #[test]
        fn matches_brute_force(line in proptest::collection::vec(-5.0f64..5.0, 1..40), r in 0usize..25) {
            prop_assert_eq!(sliding_max_periodic(&line, r), brute_max(&line, r));
        }

        #[test]
        fn box_sum_matches_brute_force(line in proptest::collection::vec(-5.0f64..5.0, 16..40), r in 0usize..7) {
            let n = line.len() as i64;
            let fast = box_sum_periodic(&line, r);
            for i in 0..n {
                let s: f64 = (-(r as i64)..=r as i64).map(|d| line[(i + d).rem_euclid(n) as usize]).sum();
                prop_assert!((s - fast[i as usize]).abs() < 1e-9);
            }
        }
    }
}
