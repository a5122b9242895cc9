use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::numerics::SeededRng;

/// Class-balancing strategy for the training split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Balancing {
    #[default]
    None,
    Undersample,
    Smote { k: usize },
}

impl Balancing {
    pub fn apply(&self, data: &Dataset, rng: &mut SeededRng) -> Result<Dataset> {
        match *self {
            Balancing::None => Ok(data.clone()),
            Balancing::Undersample => undersample(data, rng),
            Balancing::Smote { k } => smote(data, k, rng),
        }
    }
}

fn class_members(data: &Dataset) -> Vec<Vec<usize>> {
    let mut members = vec![Vec::new(); data.n_classes()];
    for (i, &l) in data.labels.iter().enumerate() {
        members[l].push(i);
    }
    members
}

/// Reduces every class to the minority count by sampling without
/// replacement. Retained rows keep their original relative order.
pub fn undersample(data: &Dataset, rng: &mut SeededRng) -> Result<Dataset> {
    let members = class_members(data);
    if let Some(c) = members.iter().position(Vec::is_empty) {
        return Err(Error::Data(format!(
            "class {:?} has no samples",
            data.class_names[c]
        )));
    }
    let target = members.iter().map(Vec::len).min().unwrap_or(0);
    let mut keep = Vec::with_capacity(target * members.len());
    for mut m in members {
        rng.shuffle(&mut m);
        keep.extend_from_slice(&m[..target]);
    }
    keep.sort_unstable();
    Ok(data.subset(&keep))
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// SMOTE oversampling: each minority class is filled up to the majority
/// count with points `x_i + u·(x_nn − x_i)`, where `x_nn` is one of the `k`
/// nearest same-class neighbours of a random member `x_i` and `u ~ U(0,1)`.
/// Synthetic rows are appended after the originals, class by class.
pub fn smote(data: &Dataset, k: usize, rng: &mut SeededRng) -> Result<Dataset> {
    if k == 0 {
        return Err(Error::Parameter("SMOTE needs k >= 1".into()));
    }
    let members = class_members(data);
    let majority = members.iter().map(Vec::len).max().unwrap_or(0);
    let mut out = data.clone();
    for (c, m) in members.iter().enumerate() {
        let deficit = majority - m.len();
        if deficit == 0 {
            continue;
        }
        if m.len() < 2 {
            return Err(Error::Data(format!(
                "SMOTE needs at least 2 samples in class {:?}, found {}",
                data.class_names[c],
                m.len()
            )));
        }
        let k_eff = k.min(m.len() - 1);
        let neighbours: Vec<Vec<usize>> = m
            .iter()
            .map(|&i| {
                let mut others: Vec<(f64, usize)> = m
                    .iter()
                    .filter(|&&j| j != i)
                    .map(|&j| (sq_dist(data.row(i), data.row(j)), j))
                    .collect();
                others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                others.into_iter().take(k_eff).map(|(_, j)| j).collect()
            })
            .collect();
        for _ in 0..deficit {
            let pick = rng.below(m.len());
            let base = data.row(m[pick]);
            let nn = data.row(neighbours[pick][rng.below(k_eff)]);
            let u = rng.next_f64();
            let point: Vec<f64> = base.iter().zip(nn).map(|(a, b)| a + u * (b - a)).collect();
            out.features.push_row(&point)?;
            out.labels.push(c);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Matrix;

    fn labelled(counts: &[usize], rng: &mut SeededRng) -> Dataset {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (c, &n) in counts.iter().enumerate() {
            for _ in 0..n {
                rows.push(vec![rng.normal(c as f64 * 3.0, 1.0), rng.normal(0.0, 1.0)]);
                labels.push(c);
            }
        }
        let names = (0..counts.len()).map(|c| format!("c{c}")).collect();
        Dataset::new(
            Matrix::from_rows(&rows).unwrap(),
            labels,
            vec!["x".into(), "y".into()],
            names,
        )
        .unwrap()
    }

    #[test]
    fn undersample_counts() {
        let mut rng = SeededRng::new(1);
        let d = labelled(&[100, 50, 10], &mut rng);
        let u = undersample(&d, &mut rng).unwrap();
        assert_eq!(u.class_counts(), vec![10, 10, 10]);
        // every retained row exists in the original
        for (r, l) in u.features.row_iter().zip(&u.labels) {
            assert!(d.features.row_iter().zip(&d.labels).any(|(o, ol)| o == r && ol == l));
        }
        let b = labelled(&[5, 5], &mut rng);
        assert_eq!(undersample(&b, &mut rng).unwrap(), b);
    }

    #[test]
    fn undersample_rejects_empty_class() {
        let mut rng = SeededRng::new(1);
        let d = labelled(&[3, 0, 2], &mut rng);
        assert!(matches!(undersample(&d, &mut rng), Err(Error::Data(_))));
    }

    #[test]
    fn smote_balanced_is_unchanged() {
        let mut rng = SeededRng::new(2);
        let d = labelled(&[6, 6], &mut rng);
        assert_eq!(smote(&d, 5, &mut rng).unwrap(), d);
    }

    #[test]
    fn two_point_class_interpolates_on_segment() {
        let mut rng = SeededRng::new(3);
        let d = labelled(&[10, 2], &mut rng);
        let s = smote(&d, 5, &mut rng).unwrap();
        assert_eq!(s.class_counts(), vec![10, 10]);
        let (a, b) = (d.row(10).to_vec(), d.row(11).to_vec());
        for i in 12..20 {
            let p = s.row(i);
            let t = (p[0] - a[0]) / (b[0] - a[0]);
            assert!((-1e-12..=1.0 + 1e-12).contains(&t));
            assert!((a[1] + t * (b[1] - a[1]) - p[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn smote_rejects_singleton_minority() {
        let mut rng = SeededRng::new(4);
        let d = labelled(&[4, 1], &mut rng);
        assert!(matches!(smote(&d, 5, &mut rng), Err(Error::Data(_))));
    }
}
