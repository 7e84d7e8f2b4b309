//! Two-dimensional complex FFTs on square grids.
//!
//! Plans and scratch buffers live in a thread-local cache keyed by grid size,
//! so concurrent callers on different threads never share scratch memory.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

struct Plan2d {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl Plan2d {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            n,
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    fn run(&mut self, data: &mut [Complex64], inverse: bool) {
        let n = self.n;
        debug_assert_eq!(data.len(), n * n);
        let fft = if inverse { &self.inverse } else { &self.forward };
        // Contiguous rows (second index), then columns via transposition.
        fft.process_with_scratch(data, &mut self.scratch);
        transpose(data, n);
        fft.process_with_scratch(data, &mut self.scratch);
        transpose(data, n);
    }
}

fn transpose(data: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

thread_local! {
    static PLANS: RefCell<HashMap<usize, Plan2d>> = RefCell::new(HashMap::new());
}

fn with_plan<R>(n: usize, f: impl FnOnce(&mut Plan2d) -> R) -> R {
    PLANS.with(|cell| {
        let mut plans = cell.borrow_mut();
        let plan = plans.entry(n).or_insert_with(|| Plan2d::new(n));
        f(plan)
    })
}

/// Unnormalized forward transform `sum_x a(x) e^{-i k x}` in place.
pub(crate) fn forward(data: &mut [Complex64], n: usize) {
    with_plan(n, |p| p.run(data, false));
}

/// Unnormalized inverse transform `sum_k a(k) e^{+i k x}` in place.
pub(crate) fn inverse(data: &mut [Complex64], n: usize) {
    with_plan(n, |p| p.run(data, true));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_then_inverse_is_identity_up_to_scale() {
        let n = 8;
        let orig: Vec<Complex64> = (0..n * n)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut data = orig.clone();
        forward(&mut data, n);
        inverse(&mut data, n);
        for (a, b) in data.iter().zip(&orig) {
            assert!((a / (n * n) as f64 - b).norm() < 1e-13);
        }
    }

    #[test]
    fn single_mode_lands_in_expected_bin() {
        let n = 8;
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        // e^{i(2 x1 + (-1) x2)} sampled on the grid
        for i1 in 0..n {
            for i2 in 0..n {
                let phase = 2.0 * std::f64::consts::PI * (2.0 * i1 as f64 - i2 as f64) / n as f64;
                data[i1 * n + i2] = Complex64::from_polar(1.0, phase);
            }
        }
        forward(&mut data, n);
        let peak = 2 * n + (n - 1);
        assert!((data[peak] - Complex64::new((n * n) as f64, 0.0)).norm() < 1e-10);
        let rest: f64 = data
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != peak)
            .map(|(_, c)| c.norm())
            .sum();
        assert!(rest < 1e-9);
    }
}
