//! Minimal scoped worker pool for independent grid cells.
//!
//! Worker count is capped by the `STREAMFILL_THREADS` environment variable
//! (0 or unset = number of available cores). Results land in index order,
//! so output never depends on scheduling.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Effective worker cap from `STREAMFILL_THREADS`.
pub(crate) fn thread_cap() -> usize {
    let auto = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    match std::env::var("STREAMFILL_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(0) | Err(_) => auto,
            Ok(n) => n,
        },
        Err(_) => auto,
    }
}

/// Apply `f` to every item, possibly on several threads, preserving order.
pub(crate) fn parallel_map<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync,
{
    let n = items.len();
    let workers = thread_cap().min(n);
    if workers <= 1 {
        return items.into_iter().map(f).collect();
    }
    let slots: Vec<Mutex<Option<R>>> = (0..n).map(|_| Mutex::new(None)).collect();
    let inputs: Vec<Mutex<Option<T>>> = items.into_iter().map(|t| Mutex::new(Some(t))).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let item = inputs[i].lock().unwrap().take().expect("item taken once");
                let out = f(item);
                *slots[i].lock().unwrap() = Some(out);
            });
        }
    });
    slots.into_iter().map(|s| s.into_inner().unwrap().expect("slot filled")).collect()
}
