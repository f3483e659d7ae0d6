use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Category {
    pub id: String,
    #[serde(default)]
    pub parent_id: Option<String>,
    pub name: String,
}

/// Hierarchical label set, one JSON object per line.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Taxonomy {
    pub categories: Vec<Category>,
}

impl Taxonomy {
    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Taxonomy> {
        let mut categories: Vec<Category> = Vec::new();
        let mut seen = HashSet::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let c: Category = serde_json::from_str(&line).map_err(|e| Error::Parse { line: i + 1, message: e.to_string() })?;
            if !seen.insert(c.id.clone()) {
                return Err(Error::Parse { line: i + 1, message: format!("duplicate category `{}`", c.id) });
            }
            categories.push(c);
        }
        let tax = Taxonomy { categories };
        tax.check_tree()?;
        Ok(tax)
    }

    fn check_tree(&self) -> Result<()> {
        for c in &self.categories {
            let mut cur = c.parent_id.as_deref();
            let mut hops = 0;
            while let Some(p) = cur {
                let parent = self
                    .get(p)
                    .ok_or_else(|| Error::Config(format!("category `{}` has unknown parent `{p}`", c.id)))?;
                hops += 1;
                if hops > self.categories.len() {
                    return Err(Error::Config(format!("category `{}` is part of a parent cycle", c.id)));
                }
                cur = parent.parent_id.as_deref();
            }
        }
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&Category> {
        self.categories.iter().find(|c| c.id == id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.get(id).is_some()
    }

    /// Ids from the root down to `id`.
    pub fn path(&self, id: &str) -> Vec<&str> {
        let mut out = Vec::new();
        let mut cur = self.get(id);
        while let Some(c) = cur {
            out.push(c.id.as_str());
            cur = c.parent_id.as_deref().and_then(|p| self.get(p));
        }
        out.reverse();
        out
    }

    pub fn children(&self, id: &str) -> impl Iterator<Item = &Category> {
        let id = id.to_string();
        self.categories.iter().filter(move |c| c.parent_id.as_deref() == Some(id.as_str()))
    }
}

/// A dialogue is addressed by its game and step.
pub type DialogueKey = (String, u32);

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AnnotationSet {
    pub annotator: String,
    pub labels: BTreeMap<DialogueKey, BTreeSet<String>>,
}

impl AnnotationSet {
    pub fn new(annotator: impl Into<String>) -> Self {
        AnnotationSet { annotator: annotator.into(), labels: BTreeMap::new() }
    }

    pub fn insert<I, S>(&mut self, game_id: &str, t: u32, labels: I)
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.labels
            .entry((game_id.to_string(), t))
            .or_default()
            .extend(labels.into_iter().map(Into::into));
    }
}

#[derive(Debug, Deserialize)]
struct AnnotationLine {
    annotator: String,
    game_id: String,
    t: u32,
    labels: Vec<String>,
}

/// Reads `{annotator, game_id, t, labels}` lines, grouped by annotator in
/// first-seen order. Labels must resolve in `taxonomy` when one is given.
pub fn read_annotations<R: BufRead>(r: R, taxonomy: Option<&Taxonomy>) -> Result<Vec<AnnotationSet>> {
    let mut sets: Vec<AnnotationSet> = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let a: AnnotationLine = serde_json::from_str(&line).map_err(|e| Error::Parse { line: i + 1, message: e.to_string() })?;
        if let Some(tax) = taxonomy {
            if let Some(bad) = a.labels.iter().find(|l| !tax.contains(l)) {
                return Err(Error::Parse { line: i + 1, message: format!("unknown category `{bad}`") });
            }
        }
        let idx = match sets.iter().position(|s| s.annotator == a.annotator) {
            Some(k) => k,
            None => {
                sets.push(AnnotationSet::new(a.annotator.clone()));
                sets.len() - 1
            }
        };
        sets[idx].insert(&a.game_id, a.t, a.labels);
    }
    Ok(sets)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TAX: &str = r#"{"id":"root","name":"Message"}
{"id":"observation","parent_id":"root","name":"Observation"}
{"id":"target_enemy","parent_id":"observation","name":"Target enemy"}
"#;

    #[test]
    fn taxonomy_paths() {
        let t = Taxonomy::read_jsonl(TAX.as_bytes()).unwrap();
        assert_eq!(t.path("target_enemy"), vec!["root", "observation", "target_enemy"]);
        assert_eq!(t.children("root").count(), 1);
    }

    #[test]
    fn broken_taxonomies_fail() {
        let dup = "{\"id\":\"a\",\"name\":\"A\"}\n{\"id\":\"a\",\"name\":\"B\"}\n";
        assert!(matches!(Taxonomy::read_jsonl(dup.as_bytes()), Err(Error::Parse { line: 2, .. })));
        let orphan = "{\"id\":\"a\",\"parent_id\":\"zz\",\"name\":\"A\"}\n";
        assert!(Taxonomy::read_jsonl(orphan.as_bytes()).is_err());
        let cycle = "{\"id\":\"a\",\"parent_id\":\"b\",\"name\":\"A\"}\n{\"id\":\"b\",\"parent_id\":\"a\",\"name\":\"B\"}\n";
        assert!(Taxonomy::read_jsonl(cycle.as_bytes()).is_err());
    }

    #[test]
    fn annotations_group_by_annotator() {
        let t = Taxonomy::read_jsonl(TAX.as_bytes()).unwrap();
        let text = r#"{"annotator":"x","game_id":"g","t":3,"labels":["observation"]}
{"annotator":"y","game_id":"g","t":3,"labels":["target_enemy","observation"]}
{"annotator":"x","game_id":"g","t":7,"labels":["target_enemy"]}
"#;
        let sets = read_annotations(text.as_bytes(), Some(&t)).unwrap();
        assert_eq!(sets.len(), 2);
        assert_eq!(sets[0].labels.len(), 2);
        assert_eq!(sets[1].labels[&("g".to_string(), 3)].len(), 2);
        let bad = r#"{"annotator":"x","game_id":"g","t":3,"labels":["nope"]}"#;
        assert!(matches!(read_annotations(bad.as_bytes(), Some(&t)), Err(Error::Parse { line: 1, .. })));
    }
}
