//! Index sets over variables or eigenpairs, kept as sorted `Vec<usize>`.

use crate::error::{Error, Result};

/// Sorted, duplicate-free copy of `set`, checked against `len`.
pub fn normalize(set: &[usize], len: usize) -> Result<Vec<usize>> {
    let mut out = set.to_vec();
    out.sort_unstable();
    out.dedup();
    if out.len() != set.len() {
        return Err(Error::InvalidParameter(format!(
            "index set {set:?} contains duplicates"
        )));
    }
    if let Some(&bad) = out.iter().find(|&&i| i >= len) {
        return Err(Error::IndexOutOfRange { index: bad, len });
    }
    Ok(out)
}

/// Like [`normalize`] but also requires `1 <= |set| < len`.
pub fn proper_subset(set: &[usize], len: usize) -> Result<Vec<usize>> {
    let out = normalize(set, len)?;
    if out.is_empty() || out.len() >= len {
        return Err(Error::InvalidParameter(format!(
            "index set {set:?} must be a nonempty proper subset of 0..{len}"
        )));
    }
    Ok(out)
}

/// `{0..len} \ set` in ascending order. `set` must be sorted.
pub fn complement(set: &[usize], len: usize) -> Vec<usize> {
    (0..len).filter(|i| set.binary_search(i).is_err()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complement_of_middle() {
        assert_eq!(complement(&[1, 3], 5), vec![0, 2, 4]);
    }

    #[test]
    fn rejects_duplicates_and_out_of_range() {
        assert!(normalize(&[1, 1], 3).is_err());
        assert_eq!(
            normalize(&[4], 3),
            Err(Error::IndexOutOfRange { index: 4, len: 3 })
        );
        assert_eq!(normalize(&[2, 0], 3).unwrap(), vec![0, 2]);
    }

    #[test]
    fn proper_subset_bounds() {
        assert!(proper_subset(&[], 3).is_err());
        assert!(proper_subset(&[0, 1, 2], 3).is_err());
        assert!(proper_subset(&[0, 2], 3).is_ok());
    }
}
