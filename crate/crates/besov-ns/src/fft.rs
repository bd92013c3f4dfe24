//! Row-major n-dimensional FFT built from 1-d `rustfft` plans.
//!
//! Forward transforms carry the `1/N^d` factor, so stored coefficients are
//! Fourier-series coefficients: `f(x) = sum_k fhat(k) exp(i k.x)`. Plans and
//! line scratch are cached per thread; transforms share no mutable state
//! across threads.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANS: RefCell<PlanCache> = RefCell::new(PlanCache::new());
}

struct PlanCache {
    planner: FftPlanner<f64>,
    plans: HashMap<(usize, bool), Arc<dyn Fft<f64>>>,
    scratch: Vec<Complex64>,
    line: Vec<Complex64>,
}

impl PlanCache {
    fn new() -> Self {
        Self {
            planner: FftPlanner::new(),
            plans: HashMap::new(),
            scratch: Vec::new(),
            line: Vec::new(),
        }
    }

    fn plan(&mut self, len: usize, forward: bool) -> Arc<dyn Fft<f64>> {
        let planner = &mut self.planner;
        self.plans
            .entry((len, forward))
            .or_insert_with(|| {
                if forward {
                    planner.plan_fft_forward(len)
                } else {
                    planner.plan_fft_inverse(len)
                }
            })
            .clone()
    }

    fn transform_axis(&mut self, data: &mut [Complex64], shape: [usize; 3], axis: usize, forward: bool) {
        let len = shape[axis];
        if len <= 1 {
            return;
        }
        let plan = self.plan(len, forward);
        let need = plan.get_inplace_scratch_len();
        if self.scratch.len() < need {
            self.scratch.resize(need, Complex64::default());
        }
        if axis == 2 {
            plan.process_with_scratch(data, &mut self.scratch);
            return;
        }
        let stride = if axis == 0 { shape[1] * shape[2] } else { shape[2] };
        if self.line.len() < len {
            self.line.resize(len, Complex64::default());
        }
        let line = &mut self.line[..len];
        let line_starts: Vec<usize> = match axis {
            0 => (0..shape[1] * shape[2]).collect(),
            _ => (0..shape[0])
                .flat_map(|i| (0..shape[2]).map(move |k| i * shape[1] * shape[2] + k))
                .collect(),
        };
        for start in line_starts {
            for (j, slot) in line.iter_mut().enumerate() {
                *slot = data[start + j * stride];
            }
            plan.process_with_scratch(line, &mut self.scratch);
            for (j, slot) in line.iter().enumerate() {
                data[start + j * stride] = *slot;
            }
        }
    }
}

/// In-place physical -> coefficient transform, including the `1/N^d` factor.
pub fn forward(data: &mut [Complex64], shape: [usize; 3]) {
    transform(data, shape, true);
    let scale = 1.0 / (shape[0] * shape[1] * shape[2]) as f64;
    for z in data.iter_mut() {
        *z *= scale;
    }
}

/// In-place coefficient -> physical transform (unnormalized synthesis).
pub fn inverse(data: &mut [Complex64], shape: [usize; 3]) {
    transform(data, shape, false);
}

fn transform(data: &mut [Complex64], shape: [usize; 3], forward: bool) {
    debug_assert_eq!(data.len(), shape[0] * shape[1] * shape[2]);
    PLANS.with(|p| {
        let mut cache = p.borrow_mut();
        for axis in 0..3 {
            cache.transform_axis(data, shape, axis, forward);
        }
    });
}
