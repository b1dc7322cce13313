use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{ArpaModel, LmError, NgramEntry, MAX_ORDER};

fn parse_float(section: &str, tok: &str) -> Result<f64, LmError> {
    tok.parse::<f64>()
        .ok()
        .filter(|v| !v.is_nan())
        .ok_or_else(|| LmError::malformed(section, "a number", tok))
}

impl ArpaModel {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, Box<dyn std::error::Error + Send + Sync>> {
        let text = std::fs::read_to_string(path)?;
        Ok(Self::parse(&text)?)
    }

    pub fn parse(text: &str) -> Result<Self, LmError> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty()).peekable();

        // anything before \data\ is a free-form preamble
        loop {
            match lines.next() {
                Some("\\data\\") => break,
                Some(_) => continue,
                None => return Err(LmError::malformed("header", "\\data\\", "end of input")),
            }
        }

        let mut counts: Vec<usize> = Vec::new();
        while let Some(line) = lines.peek() {
            let Some(rest) = line.strip_prefix("ngram ") else {
                break;
            };
            let (k, c) = rest
                .split_once('=')
                .ok_or_else(|| LmError::malformed("\\data\\", "ngram k=count", *line))?;
            let k: usize = k
                .trim()
                .parse()
                .map_err(|_| LmError::malformed("\\data\\", "integer order", k))?;
            let c: usize = c
                .trim()
                .parse()
                .map_err(|_| LmError::malformed("\\data\\", "integer count", c))?;
            if k != counts.len() + 1 {
                return Err(LmError::malformed(
                    "\\data\\",
                    format!("ngram {}", counts.len() + 1),
                    format!("ngram {k}"),
                ));
            }
            counts.push(c);
            lines.next();
        }
        let order = counts.len();
        if !(1..=MAX_ORDER).contains(&order) {
            return Err(LmError::malformed(
                "\\data\\",
                format!("order in 1..={MAX_ORDER}"),
                order.to_string(),
            ));
        }

        let mut words: Vec<String> = Vec::new();
        let mut vocab: HashMap<String, u32> = HashMap::new();
        let mut tables: Vec<HashMap<Vec<u32>, NgramEntry>> = Vec::with_capacity(order);

        for k in 1..=order {
            let section = format!("\\{k}-grams:");
            match lines.next() {
                Some(l) if l == section => {}
                other => {
                    return Err(LmError::malformed(
                        section,
                        "section header",
                        other.unwrap_or("end of input"),
                    ))
                }
            }
            let mut table = HashMap::with_capacity(counts[k - 1]);
            while let Some(line) = lines.peek() {
                if line.starts_with('\\') {
                    break;
                }
                let toks: Vec<&str> = line.split_whitespace().collect();
                if toks.len() != k + 1 && toks.len() != k + 2 {
                    return Err(LmError::malformed(
                        &section,
                        format!("{} or {} fields", k + 1, k + 2),
                        format!("{} fields in {line:?}", toks.len()),
                    ));
                }
                if toks.len() == k + 2 && k == order {
                    return Err(LmError::malformed(
                        &section,
                        "no back-off at the highest order",
                        *line,
                    ));
                }
                let log10_prob = parse_float(&section, toks[0])?;
                if log10_prob > 0.0 {
                    return Err(LmError::malformed(&section, "log10 probability <= 0", toks[0]));
                }
                let log10_backoff = match toks.get(k + 1) {
                    Some(t) => parse_float(&section, t)?,
                    None => 0.0,
                };
                let mut ids = Vec::with_capacity(k);
                for w in &toks[1..=k] {
                    let w = w.to_lowercase();
                    let id = if k == 1 {
                        if vocab.contains_key(&w) {
                            return Err(LmError::malformed(&section, "unique unigrams", w));
                        }
                        let id = words.len() as u32;
                        vocab.insert(w.clone(), id);
                        words.push(w);
                        id
                    } else {
                        *vocab.get(&w).ok_or_else(|| {
                            LmError::malformed(&section, "word present as a unigram", w.clone())
                        })?
                    };
                    ids.push(id);
                }
                if k > 1 && !tables[k - 2].contains_key(&ids[..k - 1]) {
                    return Err(LmError::malformed(
                        &section,
                        format!("prefix {:?} stored as a {}-gram", &toks[1..k], k - 1),
                        "missing prefix",
                    ));
                }
                let entry = NgramEntry {
                    log10_prob,
                    log10_backoff,
                };
                if table.insert(ids, entry).is_some() {
                    return Err(LmError::malformed(&section, "unique entries", *line));
                }
                lines.next();
            }
            if table.len() != counts[k - 1] {
                return Err(LmError::malformed(
                    section,
                    format!("{} entries", counts[k - 1]),
                    format!("{} entries", table.len()),
                ));
            }
            tables.push(table);
        }
        match lines.next() {
            Some("\\end\\") => {}
            other => {
                return Err(LmError::malformed(
                    "trailer",
                    "\\end\\",
                    other.unwrap_or("end of input"),
                ))
            }
        }
        Ok(Self::from_parts(words, tables))
    }

    /// Writes the model in ARPA format. Unigrams keep vocabulary order;
    /// higher orders are sorted by word id. Values print with the shortest
    /// representation that parses back to the same `f64`.
    pub fn to_arpa(&self) -> String {
        let mut out = String::from("\\data\\\n");
        for (k, t) in self.tables.iter().enumerate() {
            let _ = writeln!(out, "ngram {}={}", k + 1, t.len());
        }
        for (k, table) in self.tables.iter().enumerate() {
            let _ = write!(out, "\n\\{}-grams:\n", k + 1);
            let mut keys: Vec<&Vec<u32>> = table.keys().collect();
            keys.sort();
            for ids in keys {
                let e = table[ids];
                let gram: Vec<&str> = ids.iter().map(|&i| self.words[i as usize].as_str()).collect();
                let _ = write!(out, "{}\t{}", e.log10_prob, gram.join(" "));
                if k + 1 < self.order && e.log10_backoff != 0.0 {
                    let _ = write!(out, "\t{}", e.log10_backoff);
                }
                out.push('\n');
            }
        }
        out.push_str("\n\\end\\\n");
        out
    }
}
