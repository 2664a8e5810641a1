use std::fmt;

use crate::error::{Error, Result};

/// A bijection on the cover indices `0..M`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(mapping: Vec<usize>) -> Result<Self> {
        let m = mapping.len();
        let mut seen = vec![false; m];
        for &x in &mapping {
            if x >= m || seen[x] {
                return Err(Error::InvalidInput(format!(
                    "{mapping:?} is not a permutation of 0..{m}"
                )));
            }
            seen[x] = true;
        }
        Ok(Permutation(mapping))
    }

    pub fn identity(m: usize) -> Self {
        Permutation((0..m).collect())
    }

    pub(crate) fn from_vec_unchecked(mapping: Vec<usize>) -> Self {
        debug_assert!(Permutation::new(mapping.clone()).is_ok());
        Permutation(mapping)
    }

    #[inline]
    pub fn apply(&self, alpha: usize) -> usize {
        self.0[alpha]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.0.len()];
        for (a, &b) in self.0.iter().enumerate() {
            inv[b] = a;
        }
        Permutation(inv)
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(a, &b)| a == b)
    }

    /// Parse one line of the bank text format: space-separated 1-based images.
    pub fn parse_line(line: &str) -> Result<Self> {
        let mapping = line
            .split_whitespace()
            .map(|tok| match tok.parse::<usize>() {
                Ok(v) if v >= 1 => Ok(v - 1),
                _ => Err(Error::InvalidInput(format!("bad permutation entry {tok:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Permutation::new(mapping)
    }
}

impl fmt::Display for Permutation {
    /// 1-based, space separated.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{}", v + 1)?;
        }
        Ok(())
    }
}

/// Advance `p` to the next permutation in lexicographic order; false once the
/// last one has been passed (and `p` is reset to ascending order).
pub(crate) fn next_lexicographic(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        p.reverse();
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_bijections() {
        assert!(Permutation::new(vec![0, 0]).is_err());
        assert!(Permutation::new(vec![0, 2]).is_err());
        assert!(Permutation::new(vec![1, 0]).is_ok());
    }

    #[test]
    fn inverse_composes_to_identity() {
        let p = Permutation::new(vec![2, 0, 3, 1]).unwrap();
        let inv = p.inverse();
        for a in 0..4 {
            assert_eq!(inv.apply(p.apply(a)), a);
        }
    }

    #[test]
    fn text_line_is_one_based() {
        let p = Permutation::new(vec![2, 0, 1]).unwrap();
        assert_eq!(p.to_string(), "3 1 2");
        assert_eq!(Permutation::parse_line("3 1 2").unwrap(), p);
        assert!(Permutation::parse_line("0 1 2").is_err());
    }

    #[test]
    fn lexicographic_enumeration_visits_all() {
        let mut p = vec![0, 1, 2, 3];
        let mut count = 1;
        while next_lexicographic(&mut p) {
            count += 1;
        }
        assert_eq!(count, 24);
        assert_eq!(p, vec![0, 1, 2, 3]);
    }
}
