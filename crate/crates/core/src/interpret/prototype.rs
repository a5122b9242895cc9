use log::warn;
use serde::{Deserialize, Serialize};

use super::ActivationSpace;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numerics::{cosine_similarity, norm};

/// Cached activations of a reference set.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationBank {
    pub activations: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl ActivationBank {
    pub fn build<M: ActivationSpace + ?Sized>(model: &M, data: &Dataset) -> Result<Self> {
        use rayon::prelude::*;
        let activations = (0..data.len())
            .into_par_iter()
            .map(|i| model.activation(data.row(i)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            activations,
            labels: data.labels.clone(),
        })
    }

    pub fn len(&self) -> usize {
        self.activations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.activations.is_empty()
    }
}

/// One row of a prototype table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrototypeMatch {
    pub rank: usize,
    pub train_index: usize,
    pub label: usize,
    pub similarity: f64,
    pub same_class: bool,
}

/// Training instances most cosine-similar to the query in activation space.
/// `query_class` fills the `same_class` column.
pub fn prototype_match(
    query: &[f64],
    query_class: usize,
    bank: &ActivationBank,
    top_k: usize,
) -> Result<Vec<PrototypeMatch>> {
    if bank.is_empty() {
        return Err(Error::Data("prototype bank is empty".into()));
    }
    if norm(query) == 0.0 {
        return Err(Error::Degenerate("query activation is all zero".into()));
    }
    let mut skipped = 0;
    let mut scored = Vec::with_capacity(bank.len());
    for (i, a) in bank.activations.iter().enumerate() {
        if a.len() != query.len() {
            return Err(Error::Shape(format!(
                "bank activation {i} has width {}, query has {}",
                a.len(),
                query.len()
            )));
        }
        match cosine_similarity(query, a) {
            Some(s) => scored.push((i, s)),
            None => skipped += 1,
        }
    }
    if skipped > 0 {
        warn!("skipped {skipped} zero-norm training activations");
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(scored
        .into_iter()
        .take(top_k)
        .enumerate()
        .map(|(rank, (i, s))| PrototypeMatch {
            rank: rank + 1,
            train_index: i,
            label: bank.labels[i],
            similarity: s,
            same_class: bank.labels[i] == query_class,
        })
        .collect())
}
