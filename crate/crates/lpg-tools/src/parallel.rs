//! Order-preserving parallel map over scenes. Work is split into
//! contiguous chunks, one per worker, so results are deterministic and
//! independent of scheduling.

pub fn parallel_map<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let workers = workers.max(1).min(items.len().max(1));
    if workers == 1 {
        return items.iter().map(&f).collect();
    }
    let chunk_size = items.len().div_ceil(workers);
    let mut results: Vec<Vec<R>> = Vec::new();
    std::thread::scope(|scope| {
        let handles: Vec<_> = items
            .chunks(chunk_size)
            .map(|chunk| scope.spawn(|| chunk.iter().map(&f).collect::<Vec<R>>()))
            .collect();
        for handle in handles {
            results.push(handle.join().expect("worker panicked"));
        }
    });
    results.into_iter().flatten().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_order_for_any_worker_count() {
        let items: Vec<i64> = (0..103).collect();
        let expected: Vec<i64> = items.iter().map(|x| x * x).collect();
        for workers in [0, 1, 2, 3, 7, 200] {
            assert_eq!(parallel_map(&items, workers, |x| x * x), expected);
        }
    }

    #[test]
    fn empty_input_is_fine() {
        let out: Vec<i32> = parallel_map(&[] as &[i32], 4, |x| *x);
        assert!(out.is_empty());
    }
}
