use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::dataset::SplitTag;
use crate::error::{Error, Result};
use crate::models::seeded_rng;

pub const MIN_SPLIT_DOCS: usize = 5;

/// Disjoint 60/20/20 partition of corpus positions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
    /// True when the partition came from the corpus' own split column.
    pub given: bool,
}

/// `(train, validation, test)` sizes for `n` documents: validation and test
/// are each `n / 5` rounded half up, train gets the remainder.
pub fn split_sizes(n: usize) -> (usize, usize, usize) {
    let eval = (2 * n + 5) / 10;
    (n - 2 * eval, eval, eval)
}

impl DatasetSplit {
    pub fn tags(&self, n: usize) -> Vec<SplitTag> {
        let mut t = vec![SplitTag::Train; n];
        self.validation
            .iter()
            .for_each(|&i| t[i] = SplitTag::Validation);
        self.test.iter().for_each(|&i| t[i] = SplitTag::Test);
        t
    }

    pub fn part(&self, tag: SplitTag) -> &[usize] {
        match tag {
            SplitTag::Train => &self.train,
            SplitTag::Validation => &self.validation,
            SplitTag::Test => &self.test,
        }
    }
}

/// Seeded shuffle then 60/20/20 cut, or the given tags when `given` is set.
pub fn split_dataset(n: usize, seed: u64, given: Option<&[SplitTag]>) -> Result<DatasetSplit> {
    if let Some(tags) = given {
        if tags.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: tags.len(),
            });
        }
        let pick = |t: SplitTag| (0..n).filter(|&i| tags[i] == t).collect::<Vec<_>>();
        let s = DatasetSplit {
            train: pick(SplitTag::Train),
            validation: pick(SplitTag::Validation),
            test: pick(SplitTag::Test),
            seed,
            given: true,
        };
        if s.train.is_empty() || s.validation.is_empty() || s.test.is_empty() {
            return Err(Error::param(
                "given split must have train, validation and test rows",
            ));
        }
        return Ok(s);
    }
    if n < MIN_SPLIT_DOCS {
        return Err(Error::param(format!(
            "need at least {MIN_SPLIT_DOCS} documents to split, got {n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded_rng(seed));
    let (tr, va, _) = split_sizes(n);
    let mut train = order[..tr].to_vec();
    let mut validation = order[tr..tr + va].to_vec();
    let mut test = order[tr + va..].to_vec();
    train.sort_unstable();
    validation.sort_unstable();
    test.sort_unstable();
    Ok(DatasetSplit {
        train,
        validation,
        test,
        seed,
        given: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        assert_eq!(split_sizes(100), (60, 20, 20));
        assert_eq!(split_sizes(101), (61, 20, 20));
        assert_eq!(split_sizes(5), (3, 1, 1));
        assert_eq!(split_sizes(6000), (3600, 1200, 1200));
    }

    #[test]
    fn deterministic_disjoint_cover() {
        for n in [5, 17, 100, 101, 1000] {
            let a = split_dataset(n, 3, None).unwrap();
            assert_eq!(a, split_dataset(n, 3, None).unwrap());
            let mut all: Vec<usize> = a
                .train
                .iter()
                .chain(&a.validation)
                .chain(&a.test)
                .copied()
                .collect();
            all.sort_unstable();
            assert_eq!(all, (0..n).collect::<Vec<_>>());
        }
        assert_ne!(
            split_dataset(100, 1, None).unwrap().test,
            split_dataset(100, 2, None).unwrap().test
        );
        assert!(split_dataset(4, 0, None).is_err());
    }

    #[test]
    fn given_split_honored() {
        use SplitTag::*;
        let tags = [Train, Test, Validation, Train];
        let s = split_dataset(4, 0, Some(&tags)).unwrap();
        assert_eq!(
            (s.train, s.validation, s.test, s.given),
            (vec![0, 3], vec![2], vec![1], true)
        );
        assert!(split_dataset(2, 0, Some(&[Train, Test])).is_err());
    }
}
