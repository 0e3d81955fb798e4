//! Deterministic fan-out over independent replicas.
//!
//! Each replica draws from its own counter-derived stream
//! (`stream_rng(seed, replica_id)`), so results are a pure function of
//! `(seed, replica_id)` and the aggregate is byte-identical no matter how
//! many worker threads run; threads only change who computes what.

use rdcp::rng::{stream_rng, Stream};

/// Worker-thread count: `RDCP_THREADS` overrides the flag, which defaults
/// to the number of available cores.
pub fn thread_count(flag: Option<usize>) -> usize {
    if let Ok(v) = std::env::var("RDCP_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            return n.max(1);
        }
    }
    flag.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
        .max(1)
}

/// Run `replicas` jobs on up to `threads` workers; `job(replica, rng)`
/// must depend only on its arguments. Results come back in replica order.
pub fn run_replicas<T, F>(seed: u64, replicas: usize, threads: usize, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut Stream) -> T + Sync,
{
    let threads = threads.clamp(1, replicas.max(1));
    if threads <= 1 {
        return (0..replicas)
            .map(|r| {
                let mut rng = stream_rng(seed, r as u64);
                job(r, &mut rng)
            })
            .collect();
    }
    let mut slots: Vec<Option<T>> = (0..replicas).map(|_| None).collect();
    let job_ref = &job;
    std::thread::scope(|scope| {
        let mut chunks: Vec<&mut [Option<T>]> = Vec::new();
        let mut rest = slots.as_mut_slice();
        let base = replicas / threads;
        let extra = replicas % threads;
        for w in 0..threads {
            let len = base + usize::from(w < extra);
            let (head, tail) = rest.split_at_mut(len);
            chunks.push(head);
            rest = tail;
        }
        let mut start = 0usize;
        for chunk in chunks {
            let offset = start;
            start += chunk.len();
            scope.spawn(move || {
                for (i, slot) in chunk.iter_mut().enumerate() {
                    let replica = offset + i;
                    let mut rng = stream_rng(seed, replica as u64);
                    *slot = Some(job_ref(replica, &mut rng));
                }
            });
        }
    });
    slots.into_iter().map(|s| s.unwrap()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replica_results_independent_of_thread_count() {
        let job = |r: usize, rng: &mut Stream| -> (usize, f64) { (r, rand::Rng::random(rng)) };
        let a = run_replicas(9, 13, 1, job);
        let b = run_replicas(9, 13, 4, job);
        assert_eq!(a, b);
    }
}
