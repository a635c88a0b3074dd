//! Strictly increasing multi-indices and the sign calculus of the wedge product.

use std::fmt;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::Rational;
use crate::gaussian::WeightSequence;
use num_traits::One;

/// A strictly increasing tuple of coordinate indices, all `>= 1`.
///
/// Entries are unbounded; truncation to `1..=n` is a property of the form
/// that stores the index, not of the index itself.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(entries: Vec<usize>) -> Result<Self> {
        if entries.iter().any(|&e| e == 0) {
            return Err(Error::InvalidArg(format!("multi-index {entries:?} has a zero entry")));
        }
        if entries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArg(format!(
                "multi-index {entries:?} is not strictly increasing"
            )));
        }
        Ok(Self(entries))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn single(j: usize) -> Self {
        assert!(j >= 1, "coordinate indices start at 1");
        Self(vec![j])
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.0.binary_search(&j).is_ok()
    }

    pub fn max_entry(&self) -> usize {
        self.0.last().copied().unwrap_or(0)
    }

    /// `{j} ∪ self` together with the sign of the permutation sorting
    /// `(j, self...)`; `None` when `j` is already present.
    pub fn insert(&self, j: usize) -> Option<(i8, MultiIndex)> {
        if j == 0 {
            return None;
        }
        match self.0.binary_search(&j) {
            Ok(_) => None,
            Err(pos) => {
                let mut entries = self.0.clone();
                entries.insert(pos, j);
                Some((parity_sign(pos), MultiIndex(entries)))
            }
        }
    }

    /// `self ∖ {j}` with the sign `eps(j, self∖{j}, self)`.
    pub fn remove(&self, j: usize) -> Option<(i8, MultiIndex)> {
        let pos = self.0.binary_search(&j).ok()?;
        let mut entries = self.0.clone();
        entries.remove(pos);
        Some((parity_sign(pos), MultiIndex(entries)))
    }
}

impl TryFrom<Vec<usize>> for MultiIndex {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        MultiIndex::new(v)
    }
}

impl From<MultiIndex> for Vec<usize> {
    fn from(m: MultiIndex) -> Self {
        m.0
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.iter().join(","))
    }
}

fn parity_sign(transpositions: usize) -> i8 {
    if transpositions % 2 == 0 {
        1
    } else {
        -1
    }
}

/// `ε_{j,J}^K`: zero unless `K = {j} ∪ J` with `j ∉ J`, otherwise the sign of
/// the permutation taking `(j, j_1, .., j_t)` to `K`.
pub fn eps_sign(j: usize, big_j: &MultiIndex, k: &MultiIndex) -> i8 {
    match big_j.insert(j) {
        Some((sign, merged)) if &merged == k => sign,
        _ => 0,
    }
}

/// Convenience wrapper matching [`MultiIndex::insert`].
pub fn insert(j: usize, big_j: &MultiIndex) -> Option<(i8, MultiIndex)> {
    big_j.insert(j)
}

/// `a^{I,J} = ∏ a_{i_l}^2 · ∏ a_{j_r}^2` (empty products are 1).
pub fn weight_aij(i: &MultiIndex, j: &MultiIndex, w: &WeightSequence) -> Result<Rational> {
    let mut acc = Rational::one();
    for &k in i.entries().iter().chain(j.entries()) {
        let a = w.a(k)?;
        acc *= a * a;
    }
    Ok(acc)
}

/// All strictly increasing multi-indices of cardinality `card` in `1..=n`,
/// lexicographically ordered.
pub fn enumerate_indices(card: usize, n: usize) -> Result<Vec<MultiIndex>> {
    if card > n {
        return Err(Error::InvalidArg(format!("cardinality {card} exceeds dimension {n}")));
    }
    Ok((1..=n).combinations(card).map(MultiIndex).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;
    use proptest::prelude::*;

    fn mi(v: &[usize]) -> MultiIndex {
        MultiIndex::new(v.to_vec()).unwrap()
    }

    /// Sign of the permutation sorting `seq`, by explicit bubble sort.
    fn brute_sign(seq: &[usize]) -> i8 {
        let mut v = seq.to_vec();
        let mut swaps = 0;
        for a in 0..v.len() {
            for b in 0..v.len() - 1 - a {
                if v[b] > v[b + 1] {
                    v.swap(b, b + 1);
                    swaps += 1;
                }
            }
        }
        if swaps % 2 == 0 {
            1
        } else {
            -1
        }
    }

    /// Brute-force ε by enumerating all permutations of `(j, J)` and picking
    /// the one that lands on `K`.
    fn brute_eps(j: usize, big_j: &MultiIndex, k: &MultiIndex) -> i8 {
        let mut seq = vec![j];
        seq.extend_from_slice(big_j.entries());
        if seq.len() != k.len() {
            return 0;
        }
        for perm in (0..seq.len()).permutations(seq.len()) {
            let image: Vec<usize> = perm.iter().map(|&p| seq[p]).collect();
            if image == k.entries() {
                let inv: Vec<usize> = perm.clone();
                return brute_sign(&inv);
            }
        }
        0
    }

    #[test]
    fn construction_validates() {
        assert!(MultiIndex::new(vec![1, 1]).is_err());
        assert!(MultiIndex::new(vec![2, 1]).is_err());
        assert!(MultiIndex::new(vec![0]).is_err());
        assert!(MultiIndex::new(vec![]).unwrap().is_empty());
    }

    #[test]
    fn eps_examples() {
        assert_eq!(eps_sign(2, &mi(&[1, 3]), &mi(&[1, 2, 3])), -1);
        assert_eq!(brute_eps(2, &mi(&[1, 3]), &mi(&[1, 2, 3])), -1);
        assert_eq!(eps_sign(1, &mi(&[1, 2]), &mi(&[1, 2, 3])), 0);
        assert_eq!(eps_sign(1, &mi(&[2, 3]), &mi(&[1, 2, 3])), 1);
        assert_eq!(eps_sign(4, &mi(&[1, 2]), &mi(&[1, 2, 3])), 0);
    }

    #[test]
    fn insert_examples() {
        assert_eq!(insert(3, &mi(&[1, 2])), Some((1, mi(&[1, 2, 3]))));
        assert_eq!(insert(2, &mi(&[1, 3])), Some((-1, mi(&[1, 2, 3]))));
        assert_eq!(insert(2, &mi(&[2, 5])), None);
        assert_eq!(mi(&[1, 2, 3]).remove(2), Some((-1, mi(&[1, 3]))));
    }

    #[test]
    fn weight_examples() {
        let w = WeightSequence::geometric(rat(1, 4), rat(1, 2), 8).unwrap();
        assert_eq!(weight_aij(&mi(&[]), &mi(&[]), &w).unwrap(), rat(1, 1));
        assert_eq!(weight_aij(&mi(&[1]), &mi(&[2]), &w).unwrap(), rat(1, 1024));
        assert_eq!(weight_aij(&mi(&[1, 2]), &mi(&[1]), &w).unwrap(), rat(1, 16384));
        assert!(matches!(
            weight_aij(&mi(&[9]), &mi(&[]), &w),
            Err(Error::IndexOutOfRange { index: 9, len: 8 })
        ));
    }

    #[test]
    fn enumeration_examples() {
        assert_eq!(enumerate_indices(0, 3).unwrap(), vec![mi(&[])]);
        assert_eq!(
            enumerate_indices(2, 3).unwrap(),
            vec![mi(&[1, 2]), mi(&[1, 3]), mi(&[2, 3])]
        );
        assert_eq!(enumerate_indices(2, 5).unwrap().len(), 10);
        assert!(enumerate_indices(4, 3).is_err());
    }

    fn arb_index(max: usize) -> impl Strategy<Value = MultiIndex> {
        proptest::collection::btree_set(1..=max, 0..=4)
            .prop_map(|s| MultiIndex::new(s.into_iter().collect()).unwrap())
    }

    proptest! {
        #[test]
        fn eps_matches_permutation_oracle(j in 1usize..7, big_j in arb_index(6)) {
            let k = match big_j.insert(j) { Some((_, k)) => k, None => big_j.clone() };
            prop_assert_eq!(eps_sign(j, &big_j, &k), brute_eps(j, &big_j, &k));
        }

        #[test]
        fn double_insertion_is_antisymmetric(i in 1usize..7, j in 1usize..7, big_j in arb_index(6)) {
            prop_assume!(i != j);
            let via_i = big_j.insert(i).and_then(|(s1, k)| k.insert(j).map(|(s2, m)| (s1 * s2, m)));
            let via_j = big_j.insert(j).and_then(|(s1, k)| k.insert(i).map(|(s2, m)| (s1 * s2, m)));
            if let (Some((a, m1)), Some((b, m2))) = (via_i, via_j) {
                prop_assert_eq!(m1, m2);
                prop_assert_eq!(a, -b);
            }
        }

        #[test]
        fn nonzero_eps_implies_disjoint_growth(j in 1usize..7, big_j in arb_index(6), k in arb_index(6)) {
            if eps_sign(j, &big_j, &k) != 0 {
                prop_assert_eq!(k.len(), big_j.len() + 1);
                prop_assert!(!big_j.contains(j));
            }
        }

        #[test]
        fn each_member_removal_has_unit_sign(k in arb_index(8)) {
            let total: usize = k.entries().iter()
                .map(|&j| eps_sign(j, &k.remove(j).unwrap().1, &k).unsigned_abs() as usize)
                .sum();
            prop_assert_eq!(total, k.len());
        }

        #[test]
        fn weight_symmetric_under_swap(i in arb_index(6), j in arb_index(6)) {
            let w = WeightSequence::dyadic(8);
            prop_assert_eq!(weight_aij(&i, &j, &w).unwrap(), weight_aij(&j, &i, &w).unwrap());
        }
    }
}
