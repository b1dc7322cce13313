//! Count-based estimator for building small test models.
//!
//! Seen n-grams get absolute-discounted relative frequencies; each
//! context's back-off weight is solved so its conditional distribution
//! over the predictable vocabulary (everything but `<s>`) sums to one.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{ArpaModel, NgramEntry, BOS, EOS};

const BOS_LOG10: f64 = -99.0;

/// Estimates an order-`order` model from whitespace-tokenized sentences.
/// `discount` must lie in `[0, 1)`.
pub fn estimate_arpa<S: AsRef<str>>(sentences: &[S], order: usize, discount: f64) -> ArpaModel {
    assert!((1..=super::MAX_ORDER).contains(&order), "order {order}");
    assert!((0.0..1.0).contains(&discount), "discount {discount}");

    let padded: Vec<Vec<String>> = sentences
        .iter()
        .map(|s| {
            std::iter::once(BOS.to_string())
                .chain(s.as_ref().split_whitespace().map(str::to_lowercase))
                .chain(std::iter::once(EOS.to_string()))
                .collect()
        })
        .collect();

    let mut vocab: BTreeSet<&str> = BTreeSet::new();
    for s in &padded {
        vocab.extend(s.iter().map(String::as_str));
    }
    let words: Vec<String> = vocab.iter().map(|w| w.to_string()).collect();
    let id: HashMap<&str, u32> = vocab.iter().enumerate().map(|(i, w)| (*w, i as u32)).collect();
    let bos = id[BOS];
    let predictable: Vec<u32> = (0..words.len() as u32).filter(|&w| w != bos).collect();

    // counts[k - 1]: k-gram -> count
    let mut counts: Vec<BTreeMap<Vec<u32>, u64>> = vec![BTreeMap::new(); order];
    for s in &padded {
        let ids: Vec<u32> = s.iter().map(|w| id[w.as_str()]).collect();
        for k in 1..=order {
            for win in ids.windows(k) {
                *counts[k - 1].entry(win.to_vec()).or_insert(0) += 1;
            }
        }
    }

    let unigram_total: u64 = counts[0]
        .iter()
        .filter(|(g, _)| g[0] != bos)
        .map(|(_, c)| c)
        .sum();
    let unigrams: HashMap<Vec<u32>, NgramEntry> = counts[0]
        .iter()
        .map(|(g, &c)| {
            let p = if g[0] == bos {
                BOS_LOG10
            } else {
                (c as f64 / unigram_total as f64).log10()
            };
            (
                g.clone(),
                NgramEntry {
                    log10_prob: p,
                    log10_backoff: 0.0,
                },
            )
        })
        .collect();

    let mut model = ArpaModel::from_parts(words.clone(), vec![unigrams]);

    for k in 2..=order {
        // context -> (word -> count)
        let mut followers: BTreeMap<&[u32], Vec<(u32, u64)>> = BTreeMap::new();
        for (g, &c) in &counts[k - 1] {
            followers.entry(&g[..k - 1]).or_default().push((g[k - 1], c));
        }
        let mut table = HashMap::new();
        let mut backoffs = Vec::new();
        for (ctx, seen) in followers {
            let total: u64 = seen.iter().map(|(_, c)| c).sum();
            let covers_all = predictable
                .iter()
                .all(|w| seen.iter().any(|(s, _)| s == w));
            let d = if covers_all { 0.0 } else { discount };
            let mut stored_mass = 0.0;
            let mut lower_mass = 0.0;
            for &(w, c) in &seen {
                let p = (c as f64 - d) / total as f64;
                stored_mass += p;
                lower_mass += 10f64.powf(model.score_ids(&ctx[1..], w).0);
                let mut key = ctx.to_vec();
                key.push(w);
                table.insert(
                    key,
                    NgramEntry {
                        log10_prob: p.log10(),
                        log10_backoff: 0.0,
                    },
                );
            }
            let bo = if covers_all {
                0.0
            } else {
                ((1.0 - stored_mass) / (1.0 - lower_mass)).log10()
            };
            backoffs.push((ctx.to_vec(), bo));
        }
        for (ctx, bo) in backoffs {
            if let Some(e) = model.tables[k - 2].get_mut(&ctx) {
                e.log10_backoff = bo;
            }
        }
        model.tables.push(table);
        model = ArpaModel::from_parts(words.clone(), std::mem::take(&mut model.tables));
    }
    model
}
