use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};

/// Source/target word links, 0-based, Pharaoh `i-j` convention (`i` source,
/// `j` target). Many-to-many links are allowed, duplicates are not.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WordAlignment {
    links: BTreeSet<(usize, usize)>,
}

impl WordAlignment {
    pub fn new(links: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for link in links {
            if !set.insert(link) {
                return Err(Error::validation(format!(
                    "duplicate alignment link {}-{}",
                    link.0, link.1
                )));
            }
        }
        Ok(WordAlignment { links: set })
    }

    /// Parses one sentence line of space-separated `i-j` pairs.
    pub fn parse(line: &str) -> Result<Self> {
        let mut links = Vec::new();
        for pair in line.split_whitespace() {
            let (i, j) = pair
                .split_once('-')
                .ok_or_else(|| Error::validation(format!("alignment item `{pair}` is not `i-j`")))?;
            let i: usize = i
                .parse()
                .map_err(|_| Error::validation(format!("bad source index in `{pair}`")))?;
            let j: usize = j
                .parse()
                .map_err(|_| Error::validation(format!("bad target index in `{pair}`")))?;
            links.push((i, j));
        }
        WordAlignment::new(links)
    }

    pub fn check_bounds(&self, src_len: usize, tgt_len: usize) -> Result<()> {
        for &(i, j) in &self.links {
            if i >= src_len || j >= tgt_len {
                return Err(Error::validation(format!(
                    "alignment link {i}-{j} out of bounds for lengths {src_len}/{tgt_len}"
                )));
            }
        }
        Ok(())
    }

    pub fn links(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.links.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    /// Source indices aligned to target `j`, ascending.
    pub fn sources_of(&self, j: usize) -> Vec<usize> {
        let mut v: Vec<usize> = self.links.iter().filter(|l| l.1 == j).map(|l| l.0).collect();
        v.sort_unstable();
        v
    }

    /// One-to-one identity alignment over `n` tokens.
    pub fn identity(n: usize) -> Self {
        WordAlignment {
            links: (0..n).map(|i| (i, i)).collect(),
        }
    }
}

impl fmt::Display for WordAlignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, j) in &self.links {
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            write!(f, "{i}-{j}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pharaoh_pairs() {
        let a = WordAlignment::parse("0-0 1-1 2-1").unwrap();
        assert_eq!(a.sources_of(1), vec![1, 2]);
        assert!(a.sources_of(3).is_empty());
        assert_eq!(a.to_string(), "0-0 1-1 2-1");
        assert!(a.check_bounds(3, 2).is_ok());
        assert!(a.check_bounds(2, 2).is_err());
    }

    #[test]
    fn rejects_duplicates_and_garbage() {
        assert!(WordAlignment::parse("0-0 0-0").is_err());
        assert!(WordAlignment::parse("0:1").is_err());
        assert!(WordAlignment::parse("a-1").is_err());
        assert!(WordAlignment::parse("").unwrap().is_empty());
    }
}
