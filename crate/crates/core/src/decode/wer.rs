use super::DecodeError;

/// Levenshtein distance with unit substitution, insertion and deletion costs.
pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn wer(hypothesis: &str, reference: &str) -> Result<f64, DecodeError> {
    let r: Vec<&str> = reference.split_whitespace().collect();
    if r.is_empty() {
        return Err(DecodeError::EmptyReference);
    }
    let h: Vec<&str> = hypothesis.split_whitespace().collect();
    Ok(edit_distance(&h, &r) as f64 / r.len() as f64)
}

pub fn cer(hypothesis: &str, reference: &str) -> Result<f64, DecodeError> {
    let r: Vec<char> = reference.chars().collect();
    if r.is_empty() {
        return Err(DecodeError::EmptyReference);
    }
    let h: Vec<char> = hypothesis.chars().collect();
    Ok(edit_distance(&h, &r) as f64 / r.len() as f64)
}

/// Corpus-level accumulator: total edits over total reference length.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ErrorTally {
    pub edits: usize,
    pub reference_len: usize,
}

impl ErrorTally {
    pub fn add_words(&mut self, hypothesis: &str, reference: &str) {
        let h: Vec<&str> = hypothesis.split_whitespace().collect();
        let r: Vec<&str> = reference.split_whitespace().collect();
        self.edits += edit_distance(&h, &r);
        self.reference_len += r.len();
    }

    pub fn add_chars(&mut self, hypothesis: &str, reference: &str) {
        let h: Vec<char> = hypothesis.chars().collect();
        let r: Vec<char> = reference.chars().collect();
        self.edits += edit_distance(&h, &r);
        self.reference_len += r.len();
    }

    pub fn rate(&self) -> f64 {
        if self.reference_len == 0 {
            0.0
        } else {
            self.edits as f64 / self.reference_len as f64
        }
    }
}
