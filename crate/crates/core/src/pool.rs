//! Column fan-out over scoped worker threads.

use std::sync::Mutex;
use std::thread;

use crate::error::Result;

/// Columns handed to a worker per queue pop.
const BLOCK_COLUMNS: usize = 32;

/// Calls `f(state, j, column_j)` for every `r`-long column of `values`.
///
/// One thread runs per entry of `states`; each owns its state for the whole
/// call and columns are claimed in blocks from a shared queue, so no two
/// workers ever touch the same column.
pub(crate) fn for_each_column<S, F>(
    values: &mut [f64],
    r: usize,
    states: &mut [S],
    f: F,
) -> Result<()>
where
    S: Send,
    F: Fn(&mut S, usize, &mut [f64]) -> Result<()> + Sync,
{
    assert!(r > 0 && !states.is_empty());
    if states.len() == 1 {
        let state = &mut states[0];
        for (j, col) in values.chunks_exact_mut(r).enumerate() {
            f(state, j, col)?;
        }
        return Ok(());
    }

    let queue = Mutex::new(values.chunks_mut(r * BLOCK_COLUMNS).enumerate());
    let f = &f;
    let queue = &queue;
    thread::scope(|scope| {
        let handles: Vec<_> = states
            .iter_mut()
            .map(|state| {
                scope.spawn(move || -> Result<()> {
                    loop {
                        let next = queue.lock().expect("column queue poisoned").next();
                        let Some((block, chunk)) = next else {
                            return Ok(());
                        };
                        for (off, col) in chunk.chunks_exact_mut(r).enumerate() {
                            f(state, block * BLOCK_COLUMNS + off, col)?;
                        }
                    }
                })
            })
            .collect();
        handles
            .into_iter()
            .try_for_each(|h| h.join().expect("worker panicked"))
    })
}
