use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::seeded_rng;
use crate::error::{Error, Result};

/// Assignment of whole documents to cross-validation folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub assignment: BTreeMap<String, usize>,
}

/// Shuffles the documents with `seed` and deals them round-robin into `k`
/// folds, so fold sizes differ by at most one.
pub fn make_folds(doc_ids: &[String], k: usize, seed: u64) -> Result<FoldPlan> {
    let mut seen = HashSet::new();
    let mut ids: Vec<&String> = doc_ids.iter().filter(|d| seen.insert(d.as_str())).collect();
    if ids.len() != doc_ids.len() {
        return Err(Error::invalid("duplicate doc_id in fold input"));
    }
    if k < 2 {
        return Err(Error::invalid(format!("need at least 2 folds, got {k}")));
    }
    if k > ids.len() {
        return Err(Error::invalid(format!("{k} folds for {} documents", ids.len())));
    }
    ids.shuffle(&mut seeded_rng(seed, 0xF01D));
    let assignment = ids.into_iter().enumerate().map(|(i, d)| (d.clone(), i % k)).collect();
    Ok(FoldPlan { k, assignment })
}

impl FoldPlan {
    pub fn fold_of(&self, doc_id: &str) -> Option<usize> {
        self.assignment.get(doc_id).copied()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &f in self.assignment.values() {
            s[f] += 1;
        }
        s
    }

    /// Splits `items` into (train, test) for `fold` by each item's document.
    pub fn partition<'a, T>(&self, fold: usize, items: &'a [T], doc_of: impl Fn(&T) -> &str) -> Result<(Vec<&'a T>, Vec<&'a T>)> {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for item in items {
            let doc = doc_of(item);
            match self.fold_of(doc) {
                Some(f) if f == fold => test.push(item),
                Some(_) => train.push(item),
                None => return Err(Error::invalid(format!("{doc} missing from fold plan"))),
            }
        }
        Ok((train, test))
    }

    pub fn test_docs(&self, fold: usize) -> impl Iterator<Item = &str> {
        self.assignment.iter().filter(move |(_, &f)| f == fold).map(|(d, _)| d.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("doc{i}")).collect()
    }

    #[test]
    fn one_doc_per_fold() {
        let p = make_folds(&ids(10), 10, 1).unwrap();
        assert_eq!(p.sizes(), vec![1; 10]);
    }

    #[test]
    fn balanced_sizes() {
        let p = make_folds(&ids(23), 10, 1).unwrap();
        let mut s = p.sizes();
        s.sort_unstable_by(|a, b| b.cmp(a));
        assert_eq!(s, vec![3, 3, 3, 2, 2, 2, 2, 2, 2, 2]);
    }

    #[test]
    fn seed_determinism() {
        assert_eq!(make_folds(&ids(40), 10, 7).unwrap(), make_folds(&ids(40), 10, 7).unwrap());
        assert_ne!(make_folds(&ids(40), 10, 7).unwrap(), make_folds(&ids(40), 10, 8).unwrap());
    }

    #[test]
    fn invalid_inputs() {
        assert!(make_folds(&ids(5), 6, 0).is_err());
        assert!(make_folds(&ids(5), 1, 0).is_err());
        assert!(make_folds(&["a".into(), "a".into()], 2, 0).is_err());
    }
}
