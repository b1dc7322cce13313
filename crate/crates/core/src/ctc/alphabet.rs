use super::{CtcError, LabelSequence};

/// Output symbol inventory. `None` marks the blank.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    symbols: Vec<Option<char>>,
    blank: usize,
}

impl Alphabet {
    pub fn new(symbols: Vec<Option<char>>) -> Result<Self, CtcError> {
        if symbols.len() < 2 {
            return Err(CtcError::InvalidAlphabet("need at least two symbols".into()));
        }
        let blanks: Vec<usize> = symbols
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_none())
            .map(|(i, _)| i)
            .collect();
        if blanks.len() != 1 {
            return Err(CtcError::InvalidAlphabet(format!(
                "expected exactly one blank, found {}",
                blanks.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for c in symbols.iter().flatten() {
            if !seen.insert(*c) {
                return Err(CtcError::InvalidAlphabet(format!("duplicate symbol {c:?}")));
            }
        }
        Ok(Self {
            blank: blanks[0],
            symbols,
        })
    }

    /// The given characters in order, followed by the blank.
    pub fn with_blank_last(chars: &str) -> Result<Self, CtcError> {
        let mut symbols: Vec<Option<char>> = chars.chars().map(Some).collect();
        symbols.push(None);
        Self::new(symbols)
    }

    /// `a`..`z`, space, apostrophe, blank.
    pub fn english() -> Self {
        Self::with_blank_last("abcdefghijklmnopqrstuvwxyz '").expect("static alphabet")
    }

    pub fn size(&self) -> usize {
        self.symbols.len()
    }

    pub fn blank(&self) -> usize {
        self.blank
    }

    pub fn symbol(&self, index: usize) -> Option<char> {
        self.symbols.get(index).copied().flatten()
    }

    pub fn index_of(&self, c: char) -> Option<usize> {
        self.symbols.iter().position(|s| *s == Some(c))
    }

    pub fn space(&self) -> Option<usize> {
        self.index_of(' ')
    }

    /// Non-blank symbols in index order.
    pub fn chars(&self) -> String {
        self.symbols.iter().flatten().collect()
    }

    /// Lowercases `text` and maps it to label indices.
    pub fn encode(&self, text: &str) -> Result<LabelSequence, CtcError> {
        text.chars()
            .flat_map(char::to_lowercase)
            .map(|c| self.index_of(c).ok_or(CtcError::UnknownSymbol(c)))
            .collect::<Result<Vec<_>, _>>()
            .map(LabelSequence)
    }

    pub fn render(&self, labels: &[usize]) -> String {
        labels.iter().filter_map(|&l| self.symbol(l)).collect()
    }
}

impl Default for Alphabet {
    fn default() -> Self {
        Self::english()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn english_layout() {
        let a = Alphabet::english();
        assert_eq!(a.size(), 29);
        assert_eq!(a.blank(), 28);
        assert_eq!(a.space(), Some(26));
        assert_eq!(a.index_of('\''), Some(27));
    }

    #[test]
    fn encode_render_round_trip() {
        let a = Alphabet::english();
        let seq = a.encode("Don't Stop").unwrap();
        assert_eq!(a.render(seq.as_slice()), "don't stop");
        assert_eq!(a.encode("a!"), Err(CtcError::UnknownSymbol('!')));
    }

    #[test]
    fn rejects_bad_inventories() {
        assert!(Alphabet::new(vec![Some('a'), Some('b')]).is_err());
        assert!(Alphabet::new(vec![None, None]).is_err());
        assert!(Alphabet::new(vec![Some('a'), Some('a'), None]).is_err());
        assert!(Alphabet::new(vec![None]).is_err());
        let mid = Alphabet::new(vec![Some('x'), None, Some('y')]).unwrap();
        assert_eq!(mid.blank(), 1);
        assert_eq!(mid.render(&[0, 1, 2]), "xy");
    }
}
