use ndarray::{Array2, ArrayView2};

use super::{log_add, log_softmax_rows, CtcError, LabelSequence, PosteriorMatrix};

const NEG_INF: f64 = f64::NEG_INFINITY;

#[derive(Debug, Clone, PartialEq)]
pub struct CtcResult {
    /// `ln p(y|x)`.
    pub log_prob: f64,
    /// `-ln p(y|x)`.
    pub loss: f64,
    /// Gradient of `loss` with respect to the pre-softmax logits.
    pub grad: Array2<f64>,
}

/// Target with a blank before, between and after every label.
fn extend_with_blanks(target: &[usize], blank: usize) -> Vec<usize> {
    let mut ext = Vec::with_capacity(2 * target.len() + 1);
    ext.push(blank);
    for &l in target {
        ext.push(l);
        ext.push(blank);
    }
    ext
}

fn check_instance(
    frames: usize,
    symbols: usize,
    target: &LabelSequence,
    blank: usize,
) -> Result<(), CtcError> {
    if blank >= symbols {
        return Err(CtcError::InvalidLabel {
            label: blank,
            size: symbols,
            blank,
        });
    }
    target.check(symbols, blank)?;
    let required = target.min_frames();
    if required > frames {
        return Err(CtcError::ImpossibleAlignment {
            target_len: target.len(),
            required,
            frames,
        });
    }
    Ok(())
}

/// Log-space forward variables: `alpha[t][s]` is the log mass of all path
/// prefixes of length `t + 1` ending in extended state `s`.
fn forward(logp: ArrayView2<f64>, ext: &[usize], blank: usize) -> Array2<f64> {
    let (frames, states) = (logp.nrows(), ext.len());
    let mut alpha = Array2::from_elem((frames, states), NEG_INF);
    if frames == 0 {
        return alpha;
    }
    alpha[[0, 0]] = logp[[0, ext[0]]];
    if states > 1 {
        alpha[[0, 1]] = logp[[0, ext[1]]];
    }
    for t in 1..frames {
        for s in 0..states {
            let mut acc = alpha[[t - 1, s]];
            if s >= 1 {
                acc = log_add(acc, alpha[[t - 1, s - 1]]);
            }
            if s >= 2 && ext[s] != blank && ext[s] != ext[s - 2] {
                acc = log_add(acc, alpha[[t - 1, s - 2]]);
            }
            alpha[[t, s]] = acc + logp[[t, ext[s]]];
        }
    }
    alpha
}

/// Log-space backward variables: `beta[t][s]` is the log mass of all path
/// suffixes covering frames `t..T` that start in state `s` (frame `t`'s
/// emission included).
fn backward(logp: ArrayView2<f64>, ext: &[usize], blank: usize) -> Array2<f64> {
    let (frames, states) = (logp.nrows(), ext.len());
    let mut beta = Array2::from_elem((frames, states), NEG_INF);
    if frames == 0 {
        return beta;
    }
    let last = frames - 1;
    beta[[last, states - 1]] = logp[[last, ext[states - 1]]];
    if states > 1 {
        beta[[last, states - 2]] = logp[[last, ext[states - 2]]];
    }
    for t in (0..last).rev() {
        for s in 0..states {
            let mut acc = beta[[t + 1, s]];
            if s + 1 < states {
                acc = log_add(acc, beta[[t + 1, s + 1]]);
            }
            if s + 2 < states && ext[s] != blank && ext[s] != ext[s + 2] {
                acc = log_add(acc, beta[[t + 1, s + 2]]);
            }
            beta[[t, s]] = acc + logp[[t, ext[s]]];
        }
    }
    beta
}

fn terminal_log_prob(alpha: &Array2<f64>) -> f64 {
    let frames = alpha.nrows();
    if frames == 0 {
        return 0.0;
    }
    let states = alpha.ncols();
    let mut lp = alpha[[frames - 1, states - 1]];
    if states > 1 {
        lp = log_add(lp, alpha[[frames - 1, states - 2]]);
    }
    lp
}

fn log_prob_from_logp(
    logp: ArrayView2<f64>,
    target: &LabelSequence,
    blank: usize,
) -> Result<f64, CtcError> {
    check_instance(logp.nrows(), logp.ncols(), target, blank)?;
    let ext = extend_with_blanks(target.as_slice(), blank);
    Ok(terminal_log_prob(&forward(logp, &ext, blank)))
}

/// `ln p(y|x)` by the forward recursion. A zero-probability but
/// length-feasible target yields `-inf`.
pub fn ctc_log_prob(
    posts: &PosteriorMatrix,
    target: &LabelSequence,
    blank: usize,
) -> Result<f64, CtcError> {
    let logp = posts.log_probs();
    log_prob_from_logp(logp.view(), target, blank)
}

/// Same quantity as [`ctc_log_prob`], read off the backward variables.
pub fn ctc_log_prob_backward(
    posts: &PosteriorMatrix,
    target: &LabelSequence,
    blank: usize,
) -> Result<f64, CtcError> {
    let logp = posts.log_probs();
    check_instance(logp.nrows(), logp.ncols(), target, blank)?;
    if logp.nrows() == 0 {
        return Ok(0.0);
    }
    let ext = extend_with_blanks(target.as_slice(), blank);
    let beta = backward(logp.view(), &ext, blank);
    let mut lp = beta[[0, 0]];
    if ext.len() > 1 {
        lp = log_add(lp, beta[[0, 1]]);
    }
    Ok(lp)
}

/// Loss and logit gradient for one utterance. The gradient is
/// `softmax(logits) - occupancy`, where occupancy is the posterior
/// probability of emitting each symbol at each frame.
pub fn ctc_loss_and_grad(
    logits: &Array2<f64>,
    target: &LabelSequence,
    blank: usize,
) -> Result<CtcResult, CtcError> {
    let logp = log_softmax_rows(logits);
    check_instance(logp.nrows(), logp.ncols(), target, blank)?;
    let ext = extend_with_blanks(target.as_slice(), blank);
    let alpha = forward(logp.view(), &ext, blank);
    let log_prob = terminal_log_prob(&alpha);
    let mut grad = logp.mapv(f64::exp);
    if logp.nrows() == 0 {
        return Ok(CtcResult {
            log_prob,
            loss: -log_prob,
            grad,
        });
    }
    let beta = backward(logp.view(), &ext, blank);
    let (frames, symbols) = logp.dim();
    let mut occ = vec![NEG_INF; symbols];
    for t in 0..frames {
        occ.iter_mut().for_each(|v| *v = NEG_INF);
        for (s, &k) in ext.iter().enumerate() {
            let v = alpha[[t, s]] + beta[[t, s]] - logp[[t, k]];
            occ[k] = log_add(occ[k], v);
        }
        for k in 0..symbols {
            grad[[t, k]] -= (occ[k] - log_prob).exp();
        }
    }
    Ok(CtcResult {
        log_prob,
        loss: -log_prob,
        grad,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn posts(rows: Array2<f64>) -> PosteriorMatrix {
        PosteriorMatrix::new(rows).unwrap()
    }

    #[test]
    fn single_frame_single_label() {
        // {a, b, blank}
        let p = posts(array![[0.6, 0.1, 0.3]]);
        let lp = ctc_log_prob(&p, &LabelSequence(vec![0]), 2).unwrap();
        assert!((lp - 0.6f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn uniform_two_frames_is_one_third() {
        let third = 1.0 / 3.0;
        let p = posts(Array2::from_elem((2, 3), third));
        let lp = ctc_log_prob(&p, &LabelSequence(vec![0]), 2).unwrap();
        assert!((lp - third.ln()).abs() < 1e-12);
    }

    #[test]
    fn empty_target_is_all_blank() {
        let p = posts(array![[0.2, 0.3, 0.5], [0.1, 0.1, 0.8]]);
        let lp = ctc_log_prob(&p, &LabelSequence(vec![]), 2).unwrap();
        assert!((lp - (0.5f64 * 0.8).ln()).abs() < 1e-12);
    }

    #[test]
    fn repeated_label_needs_separator() {
        // {a, blank}: only a·a fits three frames
        let p = posts(array![[0.7, 0.3], [0.4, 0.6], [0.9, 0.1]]);
        let lp = ctc_log_prob(&p, &LabelSequence(vec![0, 0]), 1).unwrap();
        assert!((lp - (0.7f64 * 0.6 * 0.9).ln()).abs() < 1e-12);
        let err = ctc_log_prob(&posts(array![[0.7, 0.3], [0.4, 0.6]]), &LabelSequence(vec![0, 0]), 1);
        assert!(matches!(err, Err(CtcError::ImpossibleAlignment { required: 3, .. })));
    }

    #[test]
    fn uniform_logits_single_frame_loss() {
        let logits = Array2::<f64>::zeros((1, 5));
        let r = ctc_loss_and_grad(&logits, &LabelSequence(vec![1]), 4).unwrap();
        assert!((r.loss - 5f64.ln()).abs() < 1e-12);
        for row in r.grad.rows() {
            assert!(row.sum().abs() < 1e-12);
        }
    }

    #[test]
    fn blank_label_in_target_rejected() {
        let logits = Array2::<f64>::zeros((3, 3));
        assert!(matches!(
            ctc_loss_and_grad(&logits, &LabelSequence(vec![2]), 2),
            Err(CtcError::InvalidLabel { .. })
        ));
    }

    #[test]
    fn zero_probability_path_is_negative_infinity() {
        let p = posts(array![[0.0, 1.0], [0.0, 1.0]]);
        let lp = ctc_log_prob(&p, &LabelSequence(vec![0]), 1).unwrap();
        assert_eq!(lp, f64::NEG_INFINITY);
    }
}
