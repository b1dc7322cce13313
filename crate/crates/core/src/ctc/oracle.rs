//! Exhaustive path enumeration. Exponential in `T`; only for checking the
//! dynamic programme on tiny instances.

use std::collections::HashMap;

use super::{collapse, CtcError, LabelSequence, PosteriorMatrix};

pub const ORACLE_MAX_PATHS: usize = 10_000_000;

fn for_each_path(
    posts: &PosteriorMatrix,
    mut visit: impl FnMut(&[usize], f64),
) -> Result<(), CtcError> {
    let (frames, symbols) = (posts.frames(), posts.symbols());
    let paths = (symbols as f64).powi(frames as i32);
    if paths > ORACLE_MAX_PATHS as f64 {
        return Err(CtcError::OracleTooLarge {
            paths,
            limit: ORACLE_MAX_PATHS,
        });
    }
    let probs = posts.probs();
    let mut path = vec![0usize; frames];
    loop {
        let p: f64 = path.iter().enumerate().map(|(t, &c)| probs[[t, c]]).product();
        visit(&path, p);
        // odometer increment
        let mut t = frames;
        loop {
            if t == 0 {
                return Ok(());
            }
            t -= 1;
            path[t] += 1;
            if path[t] < symbols {
                break;
            }
            path[t] = 0;
        }
    }
}

/// `ln` of the summed probability of every length-`T` path collapsing to
/// `target`; `-inf` when none does.
pub fn brute_force_ctc(
    posts: &PosteriorMatrix,
    target: &LabelSequence,
    blank: usize,
) -> Result<f64, CtcError> {
    let mut total = 0.0;
    for_each_path(posts, |path, p| {
        if collapse(path, blank) == *target {
            total += p;
        }
    })?;
    Ok(total.ln())
}

/// Probability of every reachable label sequence, in linear space.
pub fn brute_force_distribution(
    posts: &PosteriorMatrix,
    blank: usize,
) -> Result<HashMap<LabelSequence, f64>, CtcError> {
    let mut dist = HashMap::new();
    for_each_path(posts, |path, p| {
        *dist.entry(collapse(path, blank)).or_insert(0.0) += p;
    })?;
    Ok(dist)
}
