use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Stratified fold assignment: every class is shuffled, the classes are
/// concatenated, and indices are dealt round-robin to folds. Consecutive
/// members of a class land in different folds, so each training split sees
/// every class as long as each class has at least two members.
pub fn stratified_folds(labels: &[usize], n_classes: usize, n_folds: usize, seed: u64) -> Result<Vec<usize>> {
    if n_folds < 2 {
        return Err(Error::InvalidArgument(format!("n_folds must be at least 2, got {n_folds}")));
    }
    if n_folds > labels.len() {
        return Err(Error::InvalidArgument(format!(
            "{n_folds} folds requested for {} samples",
            labels.len()
        )));
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        members[l].push(i);
    }
    if let Some((class, m)) = members.iter().enumerate().find(|(_, m)| m.len() < 2) {
        return Err(Error::MissingClass {
            class,
            reason: format!("class has {} member(s); at least 2 are needed", m.len()),
        });
    }
    let mut rng = SplitMix64::new(seed);
    let mut assignment = vec![0; labels.len()];
    let mut counter = 0usize;
    for class in members.iter_mut() {
        rng.shuffle(class);
        for &i in class.iter() {
            assignment[i] = counter % n_folds;
            counter += 1;
        }
    }
    Ok(assignment)
}
