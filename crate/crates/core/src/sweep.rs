// SPDX-License-Identifier: Apache-2.0

//! Exhaustive sweeps over input codes.
//!
//! With the `parallel` feature (on by default) sweeps fan out over rayon;
//! without it everything runs on the calling thread. Both paths produce
//! bit-identical results for any chunking: squared errors are summed as
//! integers on a fixed `2^-100` grid and the maximum uses a total order.

use std::ops::RangeInclusive;

/// Chunk length used when splitting a sweep across threads.
pub const DEFAULT_CHUNK: usize = 4096;

const SQ_SCALE_LOG2: i32 = 100;

/// Order-insensitive accumulator of signed errors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorStats {
    sum_sq: i128,
    max_abs: f64,
    argmax: i32,
    count: u64,
}

impl Default for ErrorStats {
    fn default() -> Self {
        ErrorStats {
            sum_sq: 0,
            max_abs: -1.0,
            argmax: 0,
            count: 0,
        }
    }
}

impl ErrorStats {
    pub fn push(&mut self, input: i32, error: f64) {
        let sq = error * error;
        self.sum_sq += (sq * (SQ_SCALE_LOG2 as f64).exp2()).round() as i128;
        self.count += 1;
        let abs = error.abs();
        if beats(abs, input, self.max_abs, self.argmax) {
            self.max_abs = abs;
            self.argmax = input;
        }
    }

    pub fn merge(mut self, other: ErrorStats) -> ErrorStats {
        self.sum_sq += other.sum_sq;
        self.count += other.count;
        if beats(other.max_abs, other.argmax, self.max_abs, self.argmax) {
            self.max_abs = other.max_abs;
            self.argmax = other.argmax;
        }
        self
    }

    pub fn rms(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        let mean_sq = self.sum_sq as f64 * (-SQ_SCALE_LOG2 as f64).exp2() / self.count as f64;
        mean_sq.sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.max_abs.max(0.0)
    }

    /// Input with the largest error; ties go to non-negative, then smaller inputs.
    pub fn argmax(&self) -> i32 {
        self.argmax
    }

    pub fn count(&self) -> u64 {
        self.count
    }
}

fn beats(abs: f64, input: i32, best_abs: f64, best_input: i32) -> bool {
    if abs != best_abs {
        return abs > best_abs;
    }
    let key = |x: i32| (x < 0, x);
    key(input) < key(best_input)
}

fn chunk_bounds(codes: &RangeInclusive<i32>, chunk: usize) -> Vec<(i32, i32)> {
    let (lo, hi) = (*codes.start() as i64, *codes.end() as i64);
    let chunk = chunk.max(1) as i64;
    let mut out = Vec::new();
    let mut start = lo;
    while start <= hi {
        let end = (start + chunk - 1).min(hi);
        out.push((start as i32, end as i32));
        start = end + 1;
    }
    out
}

pub fn sequential<F>(codes: RangeInclusive<i32>, error: F) -> ErrorStats
where
    F: Fn(i32) -> f64,
{
    let mut stats = ErrorStats::default();
    for x in codes {
        stats.push(x, error(x));
    }
    stats
}

#[cfg(feature = "parallel")]
pub fn parallel<F>(codes: RangeInclusive<i32>, chunk: usize, error: F) -> ErrorStats
where
    F: Fn(i32) -> f64 + Sync,
{
    use rayon::prelude::*;

    chunk_bounds(&codes, chunk)
        .into_par_iter()
        .map(|(lo, hi)| sequential(lo..=hi, &error))
        .reduce(ErrorStats::default, ErrorStats::merge)
}

/// Chunked but single-threaded; mirrors the parallel partitioning.
pub fn chunked<F>(codes: RangeInclusive<i32>, chunk: usize, error: F) -> ErrorStats
where
    F: Fn(i32) -> f64,
{
    chunk_bounds(&codes, chunk)
        .into_iter()
        .rev()
        .map(|(lo, hi)| sequential(lo..=hi, &error))
        .fold(ErrorStats::default(), ErrorStats::merge)
}

/// Sweeps with the parallel path when it is compiled in.
pub fn run<F>(codes: RangeInclusive<i32>, error: F) -> ErrorStats
where
    F: Fn(i32) -> f64 + Sync,
{
    #[cfg(feature = "parallel")]
    {
        parallel(codes, DEFAULT_CHUNK, error)
    }
    #[cfg(not(feature = "parallel"))]
    {
        sequential(codes, error)
    }
}

/// Evaluates `f` on every code, in ascending input order.
pub fn map_codes<T, F>(codes: RangeInclusive<i32>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(i32) -> T + Sync,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        codes.into_par_iter().map(&f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        codes.map(f).collect()
    }
}
