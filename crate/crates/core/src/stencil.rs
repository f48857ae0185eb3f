//! Fourth-order first-derivative stencils on a uniform lattice.

use num_complex::Complex64;

/// Derivative at cell `i`: centered in the interior, one-sided in the two
/// cells nearest each end. Exact on polynomials of degree at most four.
#[inline]
pub fn d1_at(f: &[Complex64], i: usize, inv12h: f64) -> Complex64 {
    let n = f.len();
    let z = if i >= 2 && i + 2 < n {
        (f[i - 2] - f[i + 2]) + (f[i + 1] - f[i - 1]) * 8.0
    } else if i == 0 {
        f[0] * -25.0 + f[1] * 48.0 - f[2] * 36.0 + f[3] * 16.0 - f[4] * 3.0
    } else if i == 1 {
        f[0] * -3.0 - f[1] * 10.0 + f[2] * 18.0 - f[3] * 6.0 + f[4]
    } else if i == n - 1 {
        f[n - 1] * 25.0 - f[n - 2] * 48.0 + f[n - 3] * 36.0 - f[n - 4] * 16.0 + f[n - 5] * 3.0
    } else {
        f[n - 1] * 3.0 + f[n - 2] * 10.0 - f[n - 3] * 18.0 + f[n - 4] * 6.0 - f[n - 5]
    };
    z * inv12h
}

/// Writes the derivative of `f` into `out`. Requires at least five cells.
pub fn d1_into(f: &[Complex64], h: f64, out: &mut [Complex64]) {
    assert!(f.len() >= 5 && out.len() == f.len(), "stencil needs >= 5 cells");
    let inv = 1.0 / (12.0 * h);
    for (i, o) in out.iter_mut().enumerate() {
        *o = d1_at(f, i, inv);
    }
}

pub fn d1(f: &[Complex64], h: f64) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); f.len()];
    d1_into(f, h, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_quartics() {
        let h = 0.37;
        let xs: Vec<f64> = (0..9).map(|i| -1.0 + i as f64 * h).collect();
        let f: Vec<Complex64> =
            xs.iter().map(|&x| Complex64::new(x.powi(4) - 2.0 * x.powi(3) + x, 3.0 * x * x)).collect();
        let d = d1(&f, h);
        for (x, z) in xs.iter().zip(&d) {
            let exact = Complex64::new(4.0 * x.powi(3) - 6.0 * x * x + 1.0, 6.0 * x);
            assert!((z - exact).norm() < 1e-12, "x = {x}: {z} vs {exact}");
        }
    }
}
