//! Multi-dimensional complex FFTs over [`Grid`] arrays.
//!
//! Coefficients are normalized so that `f(x) = sum_k c_k exp(i k.x)`: the forward
//! transform divides by the number of points, the inverse does not.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use super::grid::Grid;
use crate::error::{Error, Result};

type Plan = Arc<dyn Fft<f64>>;

fn plan(len: usize, direction: FftDirection) -> Plan {
    static PLANS: OnceLock<Mutex<(FftPlanner<f64>, HashMap<(usize, bool), Plan>)>> = OnceLock::new();
    let cache = PLANS.get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    let key = (len, direction == FftDirection::Forward);
    if let Some(p) = guard.1.get(&key) {
        return p.clone();
    }
    let p = guard.0.plan_fft(len, direction);
    guard.1.insert(key, p.clone());
    p
}

fn transform_axis(grid: &Grid, data: &mut [Complex64], axis: usize, direction: FftDirection) {
    let [n1, n2, n3] = grid.dims;
    let n = grid.dims[axis];
    if n == 1 {
        return;
    }
    let fft = plan(n, direction);
    match axis {
        0 => fft.process(data),
        1 => {
            let mut line = vec![Complex64::default(); n2 * n1];
            for k in 0..n3 {
                let slab = &mut data[k * n1 * n2..(k + 1) * n1 * n2];
                // transpose the (i, j) slab so that j runs fastest
                for j in 0..n2 {
                    for i in 0..n1 {
                        line[i * n2 + j] = slab[i + n1 * j];
                    }
                }
                fft.process(&mut line);
                for j in 0..n2 {
                    for i in 0..n1 {
                        slab[i + n1 * j] = line[i * n2 + j];
                    }
                }
            }
        }
        _ => {
            let plane = n1 * n2;
            let mut lines = vec![Complex64::default(); plane * n3];
            for k in 0..n3 {
                for p in 0..plane {
                    lines[p * n3 + k] = data[p + plane * k];
                }
            }
            fft.process(&mut lines);
            for k in 0..n3 {
                for p in 0..plane {
                    data[p + plane * k] = lines[p * n3 + k];
                }
            }
        }
    }
}

/// In-place forward transform (normalized by `1/N`).
pub fn forward_in_place(grid: &Grid, data: &mut [Complex64]) -> Result<()> {
    check_len(grid, data.len())?;
    for axis in 0..3 {
        transform_axis(grid, data, axis, FftDirection::Forward);
    }
    let scale = 1.0 / grid.len() as f64;
    data.iter_mut().for_each(|c| *c *= scale);
    Ok(())
}

/// In-place inverse transform (unnormalized).
pub fn inverse_in_place(grid: &Grid, data: &mut [Complex64]) -> Result<()> {
    check_len(grid, data.len())?;
    for axis in 0..3 {
        transform_axis(grid, data, axis, FftDirection::Inverse);
    }
    Ok(())
}

pub fn forward_real(grid: &Grid, values: &[f64]) -> Result<Vec<Complex64>> {
    check_len(grid, values.len())?;
    let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    forward_in_place(grid, &mut data)?;
    Ok(data)
}

/// Inverse transform keeping the real part.
pub fn inverse_real(grid: &Grid, coeffs: &[Complex64]) -> Result<Vec<f64>> {
    let mut data = coeffs.to_vec();
    inverse_in_place(grid, &mut data)?;
    Ok(data.into_iter().map(|c| c.re).collect())
}

fn check_len(grid: &Grid, len: usize) -> Result<()> {
    if len != grid.len() {
        return Err(Error::DimensionMismatch(format!(
            "array of length {len} on a grid with {} points",
            grid.len()
        )));
    }
    Ok(())
}
