use std::hint::black_box;
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

/// Timed repetitions; the fastest one is reported.
pub const TRIAD_REPETITIONS: usize = 10;
/// Bytes per triad iteration: two 8-byte reads and one 8-byte write.
pub const TRIAD_BYTES_PER_ITER: u64 = 24;
const SCALAR: f64 = 3.0;

#[derive(Debug, Error)]
pub enum TriadError {
    #[error("length must be >= 1")]
    EmptyLength,
    #[error("workers must be >= 1")]
    Workers,
    #[error("could not allocate three arrays of {0} doubles")]
    Allocation(usize),
    #[error("thread pool: {0}")]
    Pool(String),
    #[error("kernel verification failed at index {index}: {got} != {expected}")]
    Verification { index: usize, got: f64, expected: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriadResult {
    pub length: usize,
    pub workers: usize,
    /// Fastest repetition, seconds.
    pub best_time: f64,
    /// `24 * length / best_time`, in 10⁹ bytes per second.
    pub bandwidth_gbs: f64,
    /// Largest |a - (b + q c)| after timing.
    pub max_error: f64,
}

fn alloc(len: usize) -> Result<Vec<f64>, TriadError> {
    let mut v = Vec::new();
    v.try_reserve_exact(len).map_err(|_| TriadError::Allocation(len))?;
    Ok(v)
}

/// STREAM triad `a[i] = b[i] + q c[i]` over double-precision arrays.
///
/// Inputs are small integers and halves so every result is exact; the output
/// is checked after timing.
pub fn stream_triad(length: usize, workers: usize) -> Result<TriadResult, TriadError> {
    if length == 0 {
        return Err(TriadError::EmptyLength);
    }
    if workers == 0 {
        return Err(TriadError::Workers);
    }
    let mut a = alloc(length)?;
    let mut b = alloc(length)?;
    let mut c = alloc(length)?;
    a.resize(length, 0.0);
    b.extend((0..length).map(|i| (i % 7) as f64));
    c.extend((0..length).map(|i| (i % 5) as f64 * 0.5));

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| TriadError::Pool(e.to_string()))?;
    let chunk = length.div_ceil(workers);

    let mut best = f64::INFINITY;
    for _ in 0..TRIAD_REPETITIONS {
        let start = Instant::now();
        pool.install(|| {
            a.par_chunks_mut(chunk)
                .zip(b.par_chunks(chunk).zip(c.par_chunks(chunk)))
                .for_each(|(ac, (bc, cc))| {
                    for ((ai, bi), ci) in ac.iter_mut().zip(bc).zip(cc) {
                        *ai = bi + SCALAR * ci;
                    }
                });
        });
        black_box(&mut a);
        best = best.min(start.elapsed().as_secs_f64());
    }
    // clock granularity floor for very short arrays
    let best_time = best.max(1e-9);

    let mut max_error = 0.0f64;
    for i in 0..length {
        let expected = b[i] + SCALAR * c[i];
        let err = (a[i] - expected).abs();
        if err != 0.0 {
            return Err(TriadError::Verification { index: i, got: a[i], expected });
        }
        max_error = max_error.max(err);
    }

    Ok(TriadResult {
        length,
        workers,
        best_time,
        bandwidth_gbs: TRIAD_BYTES_PER_ITER as f64 * length as f64 / best_time / 1e9,
        max_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoke() {
        let r = stream_triad(1, 1).unwrap();
        assert!(r.bandwidth_gbs.is_finite() && r.bandwidth_gbs > 0.0);
        assert_eq!(r.max_error, 0.0);
    }

    #[test]
    fn bandwidth_is_definitional() {
        let r = stream_triad(100_000, 2).unwrap();
        assert_eq!(r.bandwidth_gbs, 24.0 * 100_000.0 / r.best_time / 1e9);
        assert_eq!(r.max_error, 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(stream_triad(0, 1), Err(TriadError::EmptyLength)));
        assert!(matches!(stream_triad(10, 0), Err(TriadError::Workers)));
    }
}
