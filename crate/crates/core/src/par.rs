//! Order-preserving parallel map over a line stream.

use rayon::prelude::*;

const BATCH: usize = 8192;

/// Applies `f` to every item of `input` using `workers` threads and feeds
/// the results to `sink` in input order. `f` receives the zero-based item
/// index. Input errors stop the run and are returned as-is.
pub fn map_ordered<T, U, E, I, F, S>(input: I, workers: usize, f: F, mut sink: S) -> Result<(), E>
where
    I: IntoIterator<Item = Result<T, E>>,
    T: Send,
    U: Send,
    F: Fn(u64, T) -> U + Sync,
    S: FnMut(U) -> Result<(), E>,
{
    let mut input = input.into_iter();
    if workers <= 1 {
        for (i, item) in input.by_ref().enumerate() {
            sink(f(i as u64, item?))?;
        }
        return Ok(());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("failed to start worker pool");
    let batch_size = BATCH * workers;
    let mut batch: Vec<(u64, T)> = Vec::with_capacity(batch_size);
    let mut next_index = 0u64;
    loop {
        batch.clear();
        for item in input.by_ref().take(batch_size) {
            batch.push((next_index, item?));
            next_index += 1;
        }
        if batch.is_empty() {
            return Ok(());
        }
        let results: Vec<U> = pool.install(|| batch.par_drain(..).map(|(i, t)| f(i, t)).collect());
        for r in results {
            sink(r)?;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved_for_any_worker_count() {
        let input: Vec<u64> = (0..50_000).collect();
        let expected: Vec<u64> = input.iter().map(|x| x * 3 + 1).collect();
        for workers in [1, 2, 3, 8] {
            let mut out = Vec::new();
            map_ordered(
                input.iter().map(|&x| Ok::<_, ()>(x)),
                workers,
                |i, x| {
                    assert_eq!(i, x);
                    x * 3 + 1
                },
                |y| {
                    out.push(y);
                    Ok(())
                },
            )
            .unwrap();
            assert_eq!(out, expected, "workers={workers}");
        }
    }

    #[test]
    fn input_error_stops_the_run() {
        let input = vec![Ok(1), Ok(2), Err("bad"), Ok(4)];
        let mut seen = Vec::new();
        let r = map_ordered(
            input,
            1,
            |_, x| x,
            |x| {
                seen.push(x);
                Ok(())
            },
        );
        assert_eq!(r, Err("bad"));
        assert_eq!(seen, vec![1, 2]);
    }
}
