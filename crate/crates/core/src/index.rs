//! Biological-entity index: surface form → entity → postings.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::kg::NodeId;
use crate::tables::{EntityType, MentionRow};

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("entity {entity_id} has conflicting types {first} and {second}")]
    ConflictingType {
        entity_id: String,
        first: EntityType,
        second: EntityType,
    },
    #[error("unknown entity {0}")]
    NotFound(String),
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Lowercase, collapse internal whitespace, strip surrounding punctuation.
pub fn normalize_surface(s: &str) -> String {
    let collapsed = s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    collapsed.trim_matches(|c: char| !c.is_alphanumeric()).to_string()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityRecord {
    pub entity_id: String,
    pub entity_type: EntityType,
    pub surfaces: BTreeSet<String>,
    pub postings: BTreeSet<String>,
}

impl EntityRecord {
    pub fn node_id(&self) -> NodeId {
        NodeId::entity(self.entity_type, &self.entity_id)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EntityIndex {
    by_surface: BTreeMap<String, BTreeSet<String>>,
    by_entity: BTreeMap<String, EntityRecord>,
}

impl EntityIndex {
    pub fn len(&self) -> usize {
        self.by_entity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_entity.is_empty()
    }

    pub fn record(&self, entity_id: &str) -> Option<&EntityRecord> {
        self.by_entity.get(entity_id)
    }

    pub fn records(&self) -> impl Iterator<Item = &EntityRecord> {
        self.by_entity.values()
    }

    /// Surfaces in ascending lexicographic order with the entities they name.
    pub fn surfaces(&self) -> impl Iterator<Item = (&str, &BTreeSet<String>)> {
        self.by_surface.iter().map(|(s, ids)| (s.as_str(), ids))
    }

    pub fn lookup_exact(&self, surface: &str) -> BTreeSet<String> {
        self.by_surface
            .get(&normalize_surface(surface))
            .cloned()
            .unwrap_or_default()
    }

    pub fn postings(&self, entity_id: &str) -> Result<&BTreeSet<String>, IndexError> {
        self.by_entity
            .get(entity_id)
            .map(|r| &r.postings)
            .ok_or_else(|| IndexError::NotFound(entity_id.to_string()))
    }

    /// Every surface maps back to each of its entities and vice versa.
    pub fn is_consistent(&self) -> bool {
        let forward = self.by_surface.iter().all(|(s, ids)| {
            !ids.is_empty()
                && ids
                    .iter()
                    .all(|id| self.by_entity.get(id).is_some_and(|r| r.surfaces.contains(s)))
        });
        let backward = self.by_entity.values().all(|r| {
            !r.surfaces.is_empty()
                && !r.postings.is_empty()
                && r.surfaces
                    .iter()
                    .all(|s| self.by_surface.get(s).is_some_and(|ids| ids.contains(&r.entity_id)))
        });
        forward && backward
    }

    fn insert(
        &mut self,
        entity_id: &str,
        entity_type: EntityType,
        surface: &str,
        pmid: &str,
    ) -> Result<(), IndexError> {
        let surface = normalize_surface(surface);
        if surface.is_empty() {
            return Ok(());
        }
        let record = self
            .by_entity
            .entry(entity_id.to_string())
            .or_insert_with(|| EntityRecord {
                entity_id: entity_id.to_string(),
                entity_type,
                surfaces: BTreeSet::new(),
                postings: BTreeSet::new(),
            });
        if record.entity_type != entity_type {
            return Err(IndexError::ConflictingType {
                entity_id: entity_id.to_string(),
                first: record.entity_type,
                second: entity_type,
            });
        }
        record.surfaces.insert(surface.clone());
        record.postings.insert(pmid.to_string());
        self.by_surface
            .entry(surface)
            .or_default()
            .insert(entity_id.to_string());
        Ok(())
    }
}

pub fn build_index<'a>(mentions: impl IntoIterator<Item = &'a MentionRow>) -> Result<EntityIndex, IndexError> {
    let mut index = EntityIndex::default();
    for m in mentions {
        index.insert(&m.entity_id, m.entity_type, &m.surface_form, &m.pmid)?;
    }
    Ok(index)
}

const HEADER: &str = "entity_id\tentity_type\tsurface\tpmid";

/// One row per (entity, surface, posting) combination.
pub fn write_index(index: &EntityIndex, path: &Path) -> Result<(), IndexError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{HEADER}")?;
    for r in index.by_entity.values() {
        for s in &r.surfaces {
            for p in &r.postings {
                writeln!(w, "{}\t{}\t{}\t{}", r.entity_id, r.entity_type, s, p)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_index(path: &Path) -> Result<EntityIndex, IndexError> {
    let reader = BufReader::new(File::open(path)?);
    let mut index = EntityIndex::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let err = |msg: String| IndexError::Parse {
            path: path.display().to_string(),
            line: i + 1,
            msg,
        };
        if i == 0 {
            if line != HEADER {
                return Err(err(format!("expected header {HEADER:?}")));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 4 {
            return Err(err(format!("expected 4 fields, got {}", f.len())));
        }
        let entity_type: EntityType = f[1].parse().map_err(err)?;
        index.insert(f[0], entity_type, f[2], f[3])?;
    }
    Ok(index)
}
