use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::FeatureMatrix;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl SplitRatios {
    pub const SIXTY_TWENTY_TWENTY: SplitRatios = SplitRatios {
        train: 0.6,
        val: 0.2,
        test: 0.2,
    };

    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::invalid(format!("split ratios must be positive, got {parts:?}")));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("split ratios must sum to 1, got {parts:?}")));
        }
        Ok(())
    }
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios::SIXTY_TWENTY_TWENTY
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
    /// Classes too small to split (fewer than 3 rows); all their rows are in
    /// `train`.
    pub unsplit_classes: Vec<usize>,
}

/// Integer partition sizes for `n` rows: floors of `n * ratio`, with the
/// leftover rows handed out by largest fractional remainder (train first on
/// ties). Every size is within one row of its exact share.
fn allocate(n: usize, ratios: &SplitRatios) -> [usize; 3] {
    let exact = [
        n as f64 * ratios.train,
        n as f64 * ratios.val,
        n as f64 * ratios.test,
    ];
    // Absorb representation error such as 10 * 0.6 = 5.999...
    let mut sizes = exact.map(|x| (x + 1e-9).floor() as usize);
    let mut left = n.saturating_sub(sizes.iter().sum::<usize>());
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let fa = exact[a] - sizes[a] as f64;
        let fb = exact[b] - sizes[b] as f64;
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &k in order.iter().cycle() {
        if left == 0 {
            break;
        }
        sizes[k] += 1;
        left -= 1;
    }
    sizes
}

/// Per-class seeded shuffle followed by proportional allocation. Index lists
/// are returned in ascending order.
pub fn stratified_split_ids(
    class_ids: &[usize],
    n_classes: usize,
    ratios: SplitRatios,
    seed: u64,
) -> Result<SplitIndices> {
    ratios.validate()?;
    let mut by_class = vec![Vec::new(); n_classes];
    for (i, &c) in class_ids.iter().enumerate() {
        if c >= n_classes {
            return Err(Error::invalid(format!("class id {c} out of range")));
        }
        by_class[c].push(i);
    }
    let mut rng = seed::rng(seed);
    let mut split = SplitIndices {
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
        seed,
        unsplit_classes: Vec::new(),
    };
    for (class, mut rows) in by_class.into_iter().enumerate() {
        if rows.is_empty() {
            continue;
        }
        if rows.len() < 3 {
            split.unsplit_classes.push(class);
            split.train.extend(rows);
            continue;
        }
        rows.shuffle(&mut rng);
        let [n_train, n_val, _] = allocate(rows.len(), &ratios);
        split.train.extend_from_slice(&rows[..n_train]);
        split.val.extend_from_slice(&rows[n_train..n_train + n_val]);
        split.test.extend_from_slice(&rows[n_train + n_val..]);
    }
    split.train.sort_unstable();
    split.val.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}

pub fn stratified_split(m: &FeatureMatrix, ratios: SplitRatios, seed: u64) -> Result<SplitIndices> {
    stratified_split_ids(&m.class_ids, m.n_classes(), ratios, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hundred_rows_one_class() {
        let s = stratified_split_ids(&[0; 100], 1, SplitRatios::default(), 1).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (60, 20, 20));
    }

    #[test]
    fn ten_rows() {
        let s = stratified_split_ids(&[0; 10], 1, SplitRatios::default(), 1).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (6, 2, 2));
    }

    #[test]
    fn same_seed_same_split() {
        let ids: Vec<usize> = (0..500).map(|i| i % 4).collect();
        let a = stratified_split_ids(&ids, 4, SplitRatios::default(), 9).unwrap();
        let b = stratified_split_ids(&ids, 4, SplitRatios::default(), 9).unwrap();
        let c = stratified_split_ids(&ids, 4, SplitRatios::default(), 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.test, c.test);
    }

    #[test]
    fn tiny_class_goes_to_train() {
        let ids = [0, 0, 0, 0, 0, 1, 1];
        let s = stratified_split_ids(&ids, 2, SplitRatios::default(), 3).unwrap();
        assert_eq!(s.unsplit_classes, vec![1]);
        assert!(s.train.contains(&5) && s.train.contains(&6));
    }

    #[test]
    fn bad_ratios_rejected() {
        let r = SplitRatios { train: 0.5, val: 0.2, test: 0.2 };
        assert!(stratified_split_ids(&[0; 10], 1, r, 0).is_err());
        let r = SplitRatios { train: 1.0, val: 0.0, test: 0.0 };
        assert!(stratified_split_ids(&[0; 10], 1, r, 0).is_err());
    }

    proptest! {
        #[test]
        fn disjoint_exhaustive_within_one_row(
            ids in prop::collection::vec(0usize..5, 1..400),
            seed in any::<u64>(),
        ) {
            let s = stratified_split_ids(&ids, 5, SplitRatios::default(), seed).unwrap();
            let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..ids.len()).collect::<Vec<_>>());
            for c in 0..5 {
                let n = ids.iter().filter(|&&x| x == c).count();
                if n < 3 { continue; }
                for (part, r) in [(&s.train, 0.6), (&s.val, 0.2), (&s.test, 0.2)] {
                    let got = part.iter().filter(|&&i| ids[i] == c).count() as f64;
                    prop_assert!((got - n as f64 * r).abs() < 1.0 + 1e-9, "class {} n {} got {} r {}", c, n, got, r);
                }
            }
        }
    }
}
