//! Krippendorff's alpha over set-valued or single-label annotations.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::annotation::{AnnotationSet, DialogueKey};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distance {
    /// Exactly one label per dialogue; 0 if equal, 1 otherwise.
    NominalSingle,
    /// `1 - jaccard * m`, m = 1 (equal), 2/3 (subset), 1/3 (overlap), 0.
    SetMasi,
}

pub fn masi_distance(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let inter = a.intersection(b).count();
    let union = a.union(b).count();
    let jaccard = inter as f64 / union as f64;
    let m = if a == b {
        1.0
    } else if a.is_subset(b) || b.is_subset(a) {
        2.0 / 3.0
    } else if inter > 0 {
        1.0 / 3.0
    } else {
        0.0
    };
    1.0 - jaccard * m
}

fn delta(distance: Distance, a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    match distance {
        Distance::NominalSingle => (a != b) as u8 as f64,
        Distance::SetMasi => masi_distance(a, b),
    }
}

/// `alpha = 1 - D_o / D_e` over dialogues coded by at least two annotators.
pub fn krippendorff_alpha(sets: &[AnnotationSet], distance: Distance) -> Result<f64> {
    if sets.len() < 2 {
        return Err(Error::Contract(format!("alpha needs at least two annotators, got {}", sets.len())));
    }
    let mut units: BTreeMap<&DialogueKey, Vec<&BTreeSet<String>>> = BTreeMap::new();
    for set in sets {
        for (key, labels) in &set.labels {
            if distance == Distance::NominalSingle && labels.len() != 1 {
                return Err(Error::Contract(format!(
                    "annotator {} gave {} labels to {}@{}; nominal alpha needs exactly one",
                    set.annotator,
                    labels.len(),
                    key.0,
                    key.1
                )));
            }
            units.entry(key).or_default().push(labels);
        }
    }
    units.retain(|_, v| v.len() >= 2);
    if units.is_empty() {
        return Err(Error::Contract("no dialogue is coded by two or more annotators".into()));
    }

    // distinct values with their pairable frequency
    let mut values: Vec<(&BTreeSet<String>, f64)> = Vec::new();
    let mut observed = 0.0;
    for coded in units.values() {
        let m = coded.len() as f64;
        let mut within = 0.0;
        for (i, a) in coded.iter().enumerate() {
            for (j, b) in coded.iter().enumerate() {
                if i != j {
                    within += delta(distance, a, b);
                }
            }
            match values.iter_mut().find(|(v, _)| v == a) {
                Some((_, n)) => *n += 1.0,
                None => values.push((a, 1.0)),
            }
        }
        observed += within / (m - 1.0);
    }
    let n: f64 = values.iter().map(|(_, k)| k).sum();
    let mut expected = 0.0;
    for (a, na) in &values {
        for (b, nb) in &values {
            expected += na * nb * delta(distance, a, b);
        }
    }
    let (d_o, d_e) = (observed / n, expected / (n * (n - 1.0)));
    if d_e == 0.0 {
        log::warn!("expected disagreement is zero; reporting alpha = 1");
        return Ok(1.0);
    }
    Ok(1.0 - d_o / d_e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(xs: &[&str]) -> BTreeSet<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn masi_cases() {
        assert_eq!(masi_distance(&set(&["a"]), &set(&["a"])), 0.0);
        assert!((masi_distance(&set(&["a"]), &set(&["a", "b"])) - (1.0 - 0.5 * 2.0 / 3.0)).abs() < 1e-12);
        assert!((masi_distance(&set(&["a", "c"]), &set(&["a", "b"])) - (1.0 - 1.0 / 9.0)).abs() < 1e-12);
        assert_eq!(masi_distance(&set(&["a"]), &set(&["b"])), 1.0);
    }

    #[test]
    fn needs_two_coders() {
        let mut a = AnnotationSet::new("a");
        a.insert("g", 1, ["x"]);
        assert!(krippendorff_alpha(&[a.clone()], Distance::SetMasi).is_err());
        let mut b = AnnotationSet::new("b");
        b.insert("g", 2, ["x"]);
        assert!(krippendorff_alpha(&[a, b], Distance::SetMasi).is_err());
    }

    #[test]
    fn degenerate_corpus_is_one() {
        let mut a = AnnotationSet::new("a");
        let mut b = AnnotationSet::new("b");
        for t in 0..3 {
            a.insert("g", t, ["x"]);
            b.insert("g", t, ["x"]);
        }
        assert_eq!(krippendorff_alpha(&[a, b], Distance::NominalSingle).unwrap(), 1.0);
    }

    #[test]
    fn nominal_rejects_multi_labels() {
        let mut a = AnnotationSet::new("a");
        a.insert("g", 1, ["x", "y"]);
        let mut b = AnnotationSet::new("b");
        b.insert("g", 1, ["x"]);
        assert!(krippendorff_alpha(&[a.clone(), b.clone()], Distance::NominalSingle).is_err());
        assert!(krippendorff_alpha(&[a, b], Distance::SetMasi).is_ok());
    }
}
