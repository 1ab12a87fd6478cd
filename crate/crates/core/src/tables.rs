//! Tab-separated relational source tables.
//!
//! One file per table, each with a mandatory header row naming exactly the
//! expected columns. Rows with the wrong field count, an invalid pmid or an
//! unknown entity type are skipped and tallied.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("missing table file {0}")]
    Missing(PathBuf),
    #[error("{path}: header {found:?} does not match expected {expected:?}")]
    Header {
        path: PathBuf,
        expected: Vec<&'static str>,
        found: Vec<String>,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EntityType {
    Drug,
    Disease,
    Gene,
    Species,
}

impl EntityType {
    pub const ALL: [EntityType; 4] = [
        EntityType::Drug,
        EntityType::Disease,
        EntityType::Gene,
        EntityType::Species,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EntityType::Drug => "drug",
            EntityType::Disease => "disease",
            EntityType::Gene => "gene",
            EntityType::Species => "species",
        }
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntityType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "drug" => Ok(EntityType::Drug),
            "disease" => Ok(EntityType::Disease),
            "gene" => Ok(EntityType::Gene),
            "species" => Ok(EntityType::Species),
            other => Err(format!("unknown entity type {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArticleRow {
    pub pmid: String,
    pub title: String,
    pub abstract_text: String,
    pub completion_date: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuthorRow {
    pub pmid: String,
    pub aid: String,
    pub display_name: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MentionRow {
    pub pmid: String,
    pub surface_form: String,
    pub entity_id: String,
    pub entity_type: EntityType,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceRow {
    pub pmid: String,
    pub ref_pmid: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NihLinkRow {
    pub pmid: String,
    pub project_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeshLinkRow {
    pub pmid: String,
    pub mesh_id: String,
    pub term: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubstanceLinkRow {
    pub pmid: String,
    pub substance_id: String,
    pub name: String,
}

/// The seven source tables.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RelationalTables {
    pub articles: Vec<ArticleRow>,
    pub authors: Vec<AuthorRow>,
    pub mentions: Vec<MentionRow>,
    pub references: Vec<ReferenceRow>,
    pub nih_links: Vec<NihLinkRow>,
    pub mesh_links: Vec<MeshLinkRow>,
    pub substance_links: Vec<SubstanceLinkRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Table {
    Articles,
    Authors,
    Mentions,
    References,
    NihLinks,
    MeshLinks,
    SubstanceLinks,
}

impl Table {
    pub const ALL: [Table; 7] = [
        Table::Articles,
        Table::Authors,
        Table::Mentions,
        Table::References,
        Table::NihLinks,
        Table::MeshLinks,
        Table::SubstanceLinks,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Table::Articles => "articles",
            Table::Authors => "authors",
            Table::Mentions => "mentions",
            Table::References => "references",
            Table::NihLinks => "nih_links",
            Table::MeshLinks => "mesh_links",
            Table::SubstanceLinks => "substance_links",
        }
    }

    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Table::Articles => &["pmid", "title", "abstract", "completion_date"],
            Table::Authors => &["pmid", "aid", "display_name"],
            Table::Mentions => &["pmid", "surface_form", "entity_id", "entity_type"],
            Table::References => &["pmid", "ref_pmid"],
            Table::NihLinks => &["pmid", "project_id"],
            Table::MeshLinks => &["pmid", "mesh_id", "term"],
            Table::SubstanceLinks => &["pmid", "substance_id", "name"],
        }
    }

    pub fn file_name(self) -> String {
        format!("{}.tsv", self.name())
    }
}

/// Where each table lives on disk.
#[derive(Debug, Clone)]
pub struct TablePaths {
    paths: BTreeMap<Table, PathBuf>,
}

impl TablePaths {
    /// Conventional layout: `<dir>/<table>.tsv`.
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        let paths = Table::ALL.iter().map(|&t| (t, dir.join(t.file_name()))).collect();
        TablePaths { paths }
    }

    pub fn with(mut self, table: Table, path: impl Into<PathBuf>) -> Self {
        self.paths.insert(table, path.into());
        self
    }

    pub fn get(&self, table: Table) -> &Path {
        &self.paths[&table]
    }
}

/// Per-table count of skipped rows.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MalformedTally {
    pub by_table: BTreeMap<Table, usize>,
}

impl MalformedTally {
    pub fn total(&self) -> usize {
        self.by_table.values().sum()
    }

    pub fn get(&self, table: Table) -> usize {
        self.by_table.get(&table).copied().unwrap_or(0)
    }
}

pub fn is_valid_pmid(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())
}

fn reader(path: &Path) -> Result<csv::Reader<File>, TableError> {
    if !path.is_file() {
        return Err(TableError::Missing(path.to_path_buf()));
    }
    csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .quoting(false)
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|source| TableError::Csv {
            path: path.to_path_buf(),
            source,
        })
}

/// Reads one table, handing each well-sized record to `parse`. Records that
/// have the wrong width or that `parse` rejects are counted, not returned.
fn read_table<T>(
    path: &Path,
    table: Table,
    mut parse: impl FnMut(&csv::StringRecord) -> Option<T>,
) -> Result<(Vec<T>, usize), TableError> {
    let mut rdr = reader(path)?;
    let expected = table.columns();
    let header = rdr
        .headers()
        .map_err(|source| TableError::Csv {
            path: path.to_path_buf(),
            source,
        })?
        .clone();
    if header.iter().ne(expected.iter().copied()) {
        return Err(TableError::Header {
            path: path.to_path_buf(),
            expected: expected.to_vec(),
            found: header.iter().map(str::to_string).collect(),
        });
    }
    let mut rows = Vec::new();
    let mut bad = 0usize;
    for record in rdr.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) if e.is_io_error() => {
                return Err(TableError::Csv {
                    path: path.to_path_buf(),
                    source: e,
                })
            }
            Err(_) => {
                bad += 1;
                continue;
            }
        };
        if record.len() != expected.len() {
            bad += 1;
            continue;
        }
        match parse(&record) {
            Some(row) => rows.push(row),
            None => bad += 1,
        }
    }
    if bad > 0 {
        log::warn!("{}: skipped {bad} malformed row(s)", path.display());
    }
    Ok((rows, bad))
}

fn pmid_field(record: &csv::StringRecord, i: usize) -> Option<String> {
    let v = record[i].trim();
    is_valid_pmid(v).then(|| v.to_string())
}

fn text_field(record: &csv::StringRecord, i: usize) -> String {
    record[i].to_string()
}

fn id_field(record: &csv::StringRecord, i: usize) -> Option<String> {
    let v = record[i].trim();
    (!v.is_empty() && !v.contains('/') && !v.contains(char::is_whitespace)).then(|| v.to_string())
}

/// Parses every table. Missing files and header mismatches are fatal.
pub fn load_tables(paths: &TablePaths) -> Result<(RelationalTables, MalformedTally), TableError> {
    let mut tally = MalformedTally::default();
    let mut tables = RelationalTables::default();

    let (rows, bad) = read_table(paths.get(Table::Articles), Table::Articles, |r| {
        Some(ArticleRow {
            pmid: pmid_field(r, 0)?,
            title: text_field(r, 1),
            abstract_text: text_field(r, 2),
            completion_date: text_field(r, 3),
        })
    })?;
    tables.articles = rows;
    tally.by_table.insert(Table::Articles, bad);

    let (rows, bad) = read_table(paths.get(Table::Authors), Table::Authors, |r| {
        Some(AuthorRow {
            pmid: pmid_field(r, 0)?,
            aid: id_field(r, 1)?,
            display_name: text_field(r, 2),
        })
    })?;
    tables.authors = rows;
    tally.by_table.insert(Table::Authors, bad);

    let (rows, bad) = read_table(paths.get(Table::Mentions), Table::Mentions, |r| {
        let surface = r[1].trim();
        if surface.is_empty() {
            return None;
        }
        Some(MentionRow {
            pmid: pmid_field(r, 0)?,
            surface_form: surface.to_string(),
            entity_id: id_field(r, 2)?,
            entity_type: r[3].trim().parse().ok()?,
        })
    })?;
    tables.mentions = rows;
    tally.by_table.insert(Table::Mentions, bad);

    let (rows, bad) = read_table(paths.get(Table::References), Table::References, |r| {
        Some(ReferenceRow {
            pmid: pmid_field(r, 0)?,
            ref_pmid: pmid_field(r, 1)?,
        })
    })?;
    tables.references = rows;
    tally.by_table.insert(Table::References, bad);

    let (rows, bad) = read_table(paths.get(Table::NihLinks), Table::NihLinks, |r| {
        Some(NihLinkRow {
            pmid: pmid_field(r, 0)?,
            project_id: id_field(r, 1)?,
        })
    })?;
    tables.nih_links = rows;
    tally.by_table.insert(Table::NihLinks, bad);

    let (rows, bad) = read_table(paths.get(Table::MeshLinks), Table::MeshLinks, |r| {
        Some(MeshLinkRow {
            pmid: pmid_field(r, 0)?,
            mesh_id: id_field(r, 1)?,
            term: text_field(r, 2),
        })
    })?;
    tables.mesh_links = rows;
    tally.by_table.insert(Table::MeshLinks, bad);

    let (rows, bad) = read_table(paths.get(Table::SubstanceLinks), Table::SubstanceLinks, |r| {
        Some(SubstanceLinkRow {
            pmid: pmid_field(r, 0)?,
            substance_id: id_field(r, 1)?,
            name: text_field(r, 2),
        })
    })?;
    tables.substance_links = rows;
    tally.by_table.insert(Table::SubstanceLinks, bad);

    Ok((tables, tally))
}

fn clean(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

/// Writes the tables in the layout [`TablePaths::in_dir`] expects.
pub fn write_tables(tables: &RelationalTables, dir: &Path) -> Result<(), TableError> {
    std::fs::create_dir_all(dir).map_err(|source| TableError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let write = |table: Table, lines: Vec<String>| -> Result<(), TableError> {
        let path = dir.join(table.file_name());
        let io = |source| TableError::Io {
            path: path.clone(),
            source,
        };
        let mut w = BufWriter::new(File::create(&path).map_err(io)?);
        writeln!(w, "{}", table.columns().join("\t")).map_err(io)?;
        for line in lines {
            writeln!(w, "{line}").map_err(io)?;
        }
        w.flush().map_err(io)
    };
    write(
        Table::Articles,
        tables
            .articles
            .iter()
            .map(|r| {
                format!(
                    "{}\t{}\t{}\t{}",
                    r.pmid,
                    clean(&r.title),
                    clean(&r.abstract_text),
                    clean(&r.completion_date)
                )
            })
            .collect(),
    )?;
    write(
        Table::Authors,
        tables
            .authors
            .iter()
            .map(|r| format!("{}\t{}\t{}", r.pmid, r.aid, clean(&r.display_name)))
            .collect(),
    )?;
    write(
        Table::Mentions,
        tables
            .mentions
            .iter()
            .map(|r| {
                format!(
                    "{}\t{}\t{}\t{}",
                    r.pmid,
                    clean(&r.surface_form),
                    r.entity_id,
                    r.entity_type
                )
            })
            .collect(),
    )?;
    write(
        Table::References,
        tables
            .references
            .iter()
            .map(|r| format!("{}\t{}", r.pmid, r.ref_pmid))
            .collect(),
    )?;
    write(
        Table::NihLinks,
        tables
            .nih_links
            .iter()
            .map(|r| format!("{}\t{}", r.pmid, r.project_id))
            .collect(),
    )?;
    write(
        Table::MeshLinks,
        tables
            .mesh_links
            .iter()
            .map(|r| format!("{}\t{}\t{}", r.pmid, r.mesh_id, clean(&r.term)))
            .collect(),
    )?;
    write(
        Table::SubstanceLinks,
        tables
            .substance_links
            .iter()
            .map(|r| format!("{}\t{}\t{}", r.pmid, r.substance_id, clean(&r.name)))
            .collect(),
    )?;
    Ok(())
}
