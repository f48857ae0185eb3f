//! Element-wise kernels with an optional rayon backend.
//!
//! Every kernel here is a pure map over cell indices, so the parallel and
//! sequential paths produce bit-identical results. Reductions are kept
//! sequential elsewhere in the crate for the same reason.

use num_complex::Complex64;

/// Cells per rayon task. Below this a kernel always runs sequentially.
pub const CHUNK: usize = 4096;

/// How element-wise kernels are dispatched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Uses rayon when the `parallel` feature is enabled; otherwise the same
    /// as `Sequential`.
    #[default]
    Parallel,
}

impl Execution {
    #[cfg(feature = "parallel")]
    fn split(self, len: usize) -> bool {
        self == Execution::Parallel && len > CHUNK && rayon::current_num_threads() > 1
    }
}

/// Applies `f(i, &mut a[i], &mut b[i])` to every cell.
pub fn zip2<F>(exec: Execution, a: &mut [Complex64], b: &mut [Complex64], f: F)
where
    F: Fn(usize, &mut Complex64, &mut Complex64) + Sync + Send,
{
    debug_assert_eq!(a.len(), b.len());
    #[cfg(feature = "parallel")]
    if exec.split(a.len()) {
        use rayon::prelude::*;
        a.par_chunks_mut(CHUNK)
            .zip(b.par_chunks_mut(CHUNK))
            .enumerate()
            .for_each(|(c, (ca, cb))| {
                let base = c * CHUNK;
                for (j, (x, y)) in ca.iter_mut().zip(cb.iter_mut()).enumerate() {
                    f(base + j, x, y);
                }
            });
        return;
    }
    let _ = exec;
    for (i, (x, y)) in a.iter_mut().zip(b.iter_mut()).enumerate() {
        f(i, x, y);
    }
}

/// Fills `out[i] = f(i)`.
pub fn fill<F>(exec: Execution, out: &mut [Complex64], f: F)
where
    F: Fn(usize) -> Complex64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.split(out.len()) {
        use rayon::prelude::*;
        out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
            let base = c * CHUNK;
            for (j, x) in chunk.iter_mut().enumerate() {
                *x = f(base + j);
            }
        });
        return;
    }
    let _ = exec;
    for (i, x) in out.iter_mut().enumerate() {
        *x = f(i);
    }
}

/// Fills `(a[i], b[i]) = f(i)`.
pub fn fill2<F>(exec: Execution, a: &mut [Complex64], b: &mut [Complex64], f: F)
where
    F: Fn(usize) -> (Complex64, Complex64) + Sync + Send,
{
    zip2(exec, a, b, |i, x, y| {
        let (p, q) = f(i);
        *x = p;
        *y = q;
    });
}
