use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::InteractionMatrix;
use crate::error::{Error, Result};

/// Parameters of a strong-generalization split.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SplitSpec {
    /// Fraction of all users held out for validation.
    pub validation_fraction: f64,
    /// Fraction of all users held out for testing.
    pub test_fraction: f64,
    /// Share of each held-out user's items fed to the model as input.
    pub foldin_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            validation_fraction: 0.1,
            test_fraction: 0.1,
            foldin_fraction: 0.8,
            seed: 98765,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let in_open_unit = |x: f64| x > 0.0 && x < 1.0;
        if !in_open_unit(self.validation_fraction) || !in_open_unit(self.test_fraction) {
            return Err(Error::InvalidSplit(format!(
                "user fractions must lie in (0, 1), got validation={} test={}",
                self.validation_fraction, self.test_fraction
            )));
        }
        if !in_open_unit(self.foldin_fraction) {
            return Err(Error::InvalidSplit(format!(
                "fold-in fraction must lie in (0, 1), got {}",
                self.foldin_fraction
            )));
        }
        if self.validation_fraction + self.test_fraction >= 1.0 {
            return Err(Error::InvalidSplit(format!(
                "validation ({}) + test ({}) leaves no training users",
                self.validation_fraction, self.test_fraction
            )));
        }
        Ok(())
    }
}

/// Held-out users with their interactions divided into model input and ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct HeldOutSet {
    /// Row `r` of `foldin`/`holdout` belongs to original user `users[r]`.
    pub users: Vec<usize>,
    pub foldin: InteractionMatrix,
    pub holdout: InteractionMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSplit {
    pub train_users: Vec<usize>,
    pub train: InteractionMatrix,
    pub validation: HeldOutSet,
    pub test: HeldOutSet,
}

/// Splits users into train / validation / test; held-out users get their
/// items split into fold-in and holdout parts. Deterministic in `spec.seed`.
///
/// Only users with at least two interactions can be held out.
pub fn split_strong_generalization(x: &InteractionMatrix, spec: &SplitSpec) -> Result<EvalSplit> {
    spec.validate()?;
    let m = x.num_users();
    let n_val = ((spec.validation_fraction * m as f64).round() as usize).max(1);
    let n_test = ((spec.test_fraction * m as f64).round() as usize).max(1);

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut rng);

    let eligible: Vec<usize> = order.iter().copied().filter(|&u| x.row_len(u) >= 2).collect();
    if eligible.len() < n_val + n_test || m <= n_val + n_test {
        return Err(Error::InsufficientUsers {
            needed: n_val + n_test,
            available: eligible.len().min(m.saturating_sub(1)),
        });
    }
    let val_users: Vec<usize> = eligible[..n_val].to_vec();
    let test_users: Vec<usize> = eligible[n_val..n_val + n_test].to_vec();
    let mut held = vec![false; m];
    for &u in val_users.iter().chain(&test_users) {
        held[u] = true;
    }
    let train_users: Vec<usize> = (0..m).filter(|&u| !held[u]).collect();

    let validation = hold_out(x, val_users, spec.foldin_fraction, &mut rng)?;
    let test = hold_out(x, test_users, spec.foldin_fraction, &mut rng)?;
    Ok(EvalSplit {
        train: x.select_users(&train_users),
        train_users,
        validation,
        test,
    })
}

fn hold_out(x: &InteractionMatrix, users: Vec<usize>, foldin_fraction: f64, rng: &mut ChaCha8Rng) -> Result<HeldOutSet> {
    let mut foldin = Vec::new();
    let mut holdout = Vec::new();
    for (r, &u) in users.iter().enumerate() {
        let (items, values) = x.row(u);
        let count = items.len();
        let mut positions: Vec<usize> = (0..count).collect();
        positions.shuffle(rng);
        let n_in = ((foldin_fraction * count as f64).round() as usize).clamp(1, count - 1);
        let (fi, ho) = positions.split_at(n_in);
        foldin.extend(fi.iter().map(|&p| (r, items[p], values[p])));
        holdout.extend(ho.iter().map(|&p| (r, items[p], values[p])));
    }
    let n = x.num_items();
    let binarized = x.is_binarized();
    Ok(HeldOutSet {
        foldin: InteractionMatrix::from_triples(users.len(), n, foldin, binarized)?,
        holdout: InteractionMatrix::from_triples(users.len(), n, holdout, binarized)?,
        users,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(users: usize, items: usize) -> InteractionMatrix {
        let rows: Vec<Vec<usize>> = (0..users)
            .map(|u| (0..items).filter(|i| (u * 7 + i * 3) % 5 != 0).collect())
            .collect();
        InteractionMatrix::from_rows(items, &rows).unwrap()
    }

    #[test]
    fn deterministic() {
        let x = data(50, 12);
        let spec = SplitSpec::default();
        assert_eq!(
            split_strong_generalization(&x, &spec).unwrap(),
            split_strong_generalization(&x, &spec).unwrap()
        );
        let other = SplitSpec { seed: 1, ..spec };
        assert_ne!(
            split_strong_generalization(&x, &spec).unwrap(),
            split_strong_generalization(&x, &other).unwrap()
        );
    }

    #[test]
    fn ten_items_split_eight_two() {
        let rows: Vec<Vec<usize>> = (0..10).map(|_| (0..10).collect()).collect();
        let x = InteractionMatrix::from_rows(10, &rows).unwrap();
        let s = split_strong_generalization(&x, &SplitSpec::default()).unwrap();
        for set in [&s.validation, &s.test] {
            for r in 0..set.users.len() {
                assert_eq!(set.foldin.row_len(r), 8);
                assert_eq!(set.holdout.row_len(r), 2);
            }
        }
    }

    #[test]
    fn invalid_fractions() {
        let x = data(20, 5);
        let spec = SplitSpec {
            validation_fraction: 0.5,
            test_fraction: 0.6,
            ..SplitSpec::default()
        };
        assert!(matches!(split_strong_generalization(&x, &spec), Err(Error::InvalidSplit(_))));
        let spec = SplitSpec {
            foldin_fraction: 1.0,
            ..SplitSpec::default()
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn single_item_users_stay_in_train() {
        let mut rows: Vec<Vec<usize>> = (0..10).map(|u| vec![u % 4]).collect();
        rows.push(vec![0, 1, 2]);
        rows.push(vec![1, 3]);
        let x = InteractionMatrix::from_rows(4, &rows).unwrap();
        let spec = SplitSpec {
            validation_fraction: 0.05,
            test_fraction: 0.05,
            ..SplitSpec::default()
        };
        let s = split_strong_generalization(&x, &spec).unwrap();
        let mut held: Vec<usize> = s.validation.users.iter().chain(&s.test.users).copied().collect();
        held.sort();
        assert_eq!(held, vec![10, 11]);

        let only_singles = InteractionMatrix::from_rows(4, &rows[..10]).unwrap();
        assert!(matches!(
            split_strong_generalization(&only_singles, &spec),
            Err(Error::InsufficientUsers { .. })
        ));
    }

    #[test]
    fn partition_properties() {
        let x = data(80, 15);
        let s = split_strong_generalization(&x, &SplitSpec::default()).unwrap();
        let mut all: Vec<usize> = s
            .train_users
            .iter()
            .chain(&s.validation.users)
            .chain(&s.test.users)
            .copied()
            .collect();
        all.sort();
        assert_eq!(all, (0..80).collect::<Vec<_>>());
        for set in [&s.validation, &s.test] {
            for (r, &u) in set.users.iter().enumerate() {
                let f = set.foldin.row(r).0;
                let h = set.holdout.row(r).0;
                assert!(!f.is_empty() && !h.is_empty());
                assert!(f.iter().all(|i| !h.contains(i)));
                let mut joined: Vec<usize> = f.iter().chain(h).copied().collect();
                joined.sort();
                assert_eq!(joined, x.row(u).0);
            }
        }
    }
}
