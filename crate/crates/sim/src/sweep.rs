//! Independent experiment cells run in parallel.

use rayon::prelude::*;

/// One cell of a sweep: its input and either the output or why it failed.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell<I, O> {
    pub input: I,
    pub outcome: Result<O, String>,
}

/// Runs `f` on every input concurrently. A failing or panicking cell is
/// recorded with its reason and the others carry on; results keep the
/// input order.
pub fn sweep<I, O, F>(inputs: Vec<I>, f: F) -> Vec<Cell<I, O>>
where
    I: Send + Sync,
    O: Send,
    F: Fn(&I) -> anyhow::Result<O> + Sync,
{
    inputs
        .into_par_iter()
        .map(|input| {
            let outcome = match std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| f(&input))) {
                Ok(Ok(o)) => Ok(o),
                Ok(Err(e)) => Err(format!("{e:#}")),
                Err(p) => Err(match p.downcast_ref::<&str>() {
                    Some(s) => format!("panicked: {s}"),
                    None => match p.downcast_ref::<String>() {
                        Some(s) => format!("panicked: {s}"),
                        None => "panicked".to_string(),
                    },
                }),
            };
            Cell { input, outcome }
        })
        .collect()
}
