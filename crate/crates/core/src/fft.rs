//! Unnormalized 2D FFT plumbing on square complex arrays.
//!
//! Plans are cached behind a mutex keyed by size and direction; the plan
//! objects themselves are thread-safe, so concurrent transforms on distinct
//! buffers are deterministic regardless of scheduling.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use ndarray::Array2;
use num_complex::Complex64;
use once_cell::sync::Lazy;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) enum Direction {
    Forward,
    Inverse,
}

static PLANS: Lazy<Mutex<HashMap<(usize, Direction), Arc<dyn Fft<f64>>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

fn plan(n: usize, dir: Direction) -> Arc<dyn Fft<f64>> {
    let mut cache = PLANS.lock().unwrap();
    cache
        .entry((n, dir))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            match dir {
                Direction::Forward => planner.plan_fft_forward(n),
                Direction::Inverse => planner.plan_fft_inverse(n),
            }
        })
        .clone()
}

// Below this size the per-row dispatch overhead dominates.
const PAR_MIN_N: usize = 256;

fn fft_rows(data: &mut [Complex64], n: usize, plan: &Arc<dyn Fft<f64>>) {
    if n >= PAR_MIN_N {
        data.par_chunks_mut(n).for_each(|row| plan.process(row));
    } else {
        for row in data.chunks_mut(n) {
            plan.process(row);
        }
    }
}

fn transpose_square(a: &mut Array2<Complex64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let x = a[(i, j)];
            a[(i, j)] = a[(j, i)];
            a[(j, i)] = x;
        }
    }
}

/// In-place unnormalized 2D transform: rows, then columns.
pub(crate) fn fft2(a: &mut Array2<Complex64>, dir: Direction) {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    let plan = plan(n, dir);
    fft_rows(a.as_slice_mut().expect("standard layout"), n, &plan);
    transpose_square(a);
    fft_rows(a.as_slice_mut().expect("standard layout"), n, &plan);
    transpose_square(a);
}
