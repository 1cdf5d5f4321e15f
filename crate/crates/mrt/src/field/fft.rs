//! Fourier differentiation along the periodic direction, with a process-wide
//! plan cache.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use ndarray::Array2;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{Grid2D, ScalarField};

struct PlanPair {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plans(n: usize) -> Arc<PlanPair> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<PlanPair>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(PlanPair {
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            })
        })
        .clone()
}

/// Signed wavenumber of bin `i` for length `n`.
fn wavenumber(i: usize, n: usize) -> f64 {
    if i <= n / 2 {
        i as f64
    } else {
        i as f64 - n as f64
    }
}

fn rowwise_spectral(grid: &Grid2D, f: &ScalarField, symbol: impl Fn(f64) -> Complex64) -> ScalarField {
    let n1 = grid.n1;
    let plans = plans(n1);
    let mut out = Array2::zeros((grid.n2, n1));
    let mut buf: Vec<Complex64> = vec![Complex64::default(); n1];
    let scale = 1.0 / n1 as f64;
    for j in 0..grid.n2 {
        for i in 0..n1 {
            buf[i] = Complex64::new(f[(j, i)], 0.0);
        }
        plans.forward.process(&mut buf);
        for (i, b) in buf.iter_mut().enumerate() {
            *b *= symbol(wavenumber(i, n1));
        }
        plans.inverse.process(&mut buf);
        for i in 0..n1 {
            out[(j, i)] = buf[i].re * scale;
        }
    }
    out
}

/// First derivative. The Nyquist mode is dropped: an odd-order derivative of
/// the real sawtooth mode has no consistent collocation representation.
pub fn d1(grid: &Grid2D, f: &ScalarField) -> ScalarField {
    let n1 = grid.n1;
    rowwise_spectral(grid, f, |k| {
        if k.abs() as usize * 2 == n1 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, k)
        }
    })
}

/// Second derivative (the Nyquist mode keeps its real symbol `-k^2`).
pub fn d11(grid: &Grid2D, f: &ScalarField) -> ScalarField {
    rowwise_spectral(grid, f, |k| Complex64::new(-k * k, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn d11_exact_on_modes() {
        let g = Grid2D::new(32, 9, 1.0).unwrap();
        let f = g.from_fn(|y1, _| (3.0 * y1).cos());
        let d2f = d11(&g, &f);
        let exact = g.from_fn(|y1, _| -9.0 * (3.0 * y1).cos());
        let err = (&d2f - &exact).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(err < 1e-11);
    }

    #[test]
    fn d1_then_d1_matches_d11_below_nyquist() {
        let g = Grid2D::new(64, 9, 1.0).unwrap();
        let f = g.from_fn(|y1, _| (5.0 * y1).sin() + 0.3 * (11.0 * y1).cos());
        let once = d1(&g, &d1(&g, &f));
        let twice = d11(&g, &f);
        let err = (&once - &twice).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(err < 1e-10);
    }
}
