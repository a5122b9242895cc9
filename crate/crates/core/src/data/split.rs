use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::SeededRng;

/// Disjoint train/validation/test row indices, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Per-class shuffled split. Validation and test each get
/// `max(1, round(f·n_c))` rows of class `c`; train takes the rest.
pub fn stratified_split(
    labels: &[usize],
    n_classes: usize,
    fractions: [f64; 3],
    rng: &mut SeededRng,
) -> Result<SplitIndices> {
    if fractions.iter().any(|f| !(*f > 0.0)) || (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Parameter(format!(
            "split fractions must be positive and sum to 1, got {fractions:?}"
        )));
    }
    let mut members = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        if l >= n_classes {
            return Err(Error::Data(format!("label {l} out of range for {n_classes} classes")));
        }
        members[l].push(i);
    }
    let mut split = SplitIndices {
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
    };
    for (c, mut m) in members.into_iter().enumerate() {
        let n = m.len();
        if n == 0 {
            continue;
        }
        if n < 3 {
            return Err(Error::Data(format!(
                "class {c} has {n} samples; stratification needs at least 3"
            )));
        }
        let n_val = ((fractions[1] * n as f64).round() as usize).max(1);
        let n_test = ((fractions[2] * n as f64).round() as usize).max(1);
        let n_train = n.saturating_sub(n_val + n_test).max(1);
        let n_val = n - n_train - n_test;
        rng.shuffle(&mut m);
        split.train.extend_from_slice(&m[..n_train]);
        split.val.extend_from_slice(&m[n_train..n_train + n_val]);
        split.test.extend_from_slice(&m[n_train + n_val..]);
    }
    split.train.sort_unstable();
    split.val.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}
