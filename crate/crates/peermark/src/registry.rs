//! Append-only registry of watermark assignments.
//!
//! The registry is the secret side of the pipeline: it records which
//! watermark was drawn for which paper/review slot, with seed provenance, so
//! detection can later look the choice up. Records are never mutated;
//! corrections are new records that supersede by key. Every record carries a
//! hash chained over its predecessor, which makes the stored audit trail
//! tamper-evident, and the file format is plain text (unit-separator fields)
//! so it diffs cleanly.
//!
//! Candidate phrases are never stored: a record holds only `set_id` and
//! `index`, so a leaked registry file does not reveal the watermarks without
//! the corresponding set file.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::watermark::{SchemeKind, Watermark, WatermarkSet};

const FIELD_SEP: char = '\u{1f}';
const CHAIN_GENESIS: &[u8] = b"peermark-registry-v1";

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("assignment for {0} already present (use supersede to replace)")]
    DuplicateKey(String),
    #[error("assignment references unknown set {0}")]
    UnknownSet(String),
    #[error("no assignment found for {0}")]
    NotFound(String),
    #[error("watermark index {index} out of range for set of size {size}")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("field {0:?} contains a reserved separator or newline")]
    InvalidField(String),
    #[error("line {0}: malformed registry record")]
    MalformedRecord(usize),
    #[error("line {0}: chain hash mismatch, registry may have been altered")]
    ChainMismatch(usize),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Key identifying one expected review of one paper.
///
/// One watermark per paper is the default (no slot); per-reviewer sampling is
/// supported by giving each expected review its own slot.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AssignmentKey {
    pub paper_id: String,
    pub review_slot: Option<String>,
}

impl AssignmentKey {
    pub fn paper(paper_id: impl Into<String>) -> Self {
        Self {
            paper_id: paper_id.into(),
            review_slot: None,
        }
    }

    pub fn slot(paper_id: impl Into<String>, slot: impl Into<String>) -> Self {
        Self {
            paper_id: paper_id.into(),
            review_slot: Some(slot.into()),
        }
    }

    /// Canonical display form, also used as corpus review id.
    pub fn label(&self) -> String {
        match &self.review_slot {
            Some(slot) => format!("{}::{}", self.paper_id, slot),
            None => self.paper_id.clone(),
        }
    }

    /// Parses `paper` or `paper::slot`.
    pub fn parse(label: &str) -> Self {
        match label.split_once("::") {
            Some((p, s)) => Self::slot(p, s),
            None => Self::paper(label),
        }
    }
}

/// One recorded watermark choice.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub key: AssignmentKey,
    pub set_id: String,
    pub index: usize,
    pub scheme: SchemeKind,
    pub seed: u64,
    pub created_at: String,
    pub injection_method: String,
    /// Set on records that replace an earlier record with the same key.
    pub supersedes: bool,
}

/// Set metadata stored alongside assignments for index validation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetEntry {
    pub set_id: String,
    pub scheme: SchemeKind,
    pub size: usize,
}

/// One journal record, in arrival order.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Record {
    Set(SetEntry),
    Assign(Assignment),
}

/// In-memory registry backed by the append-only record file.
#[derive(Debug, Default, Clone)]
pub struct Registry {
    journal: Vec<Record>,
    sets: HashMap<String, SetEntry>,
    latest: HashMap<AssignmentKey, usize>,
    chain_tip: [u8; 32],
    initialized: bool,
}

fn genesis() -> [u8; 32] {
    Sha256::digest(CHAIN_GENESIS).into()
}

fn chain_next(prev: &[u8; 32], record_core: &str) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(prev);
    hasher.update(record_core.as_bytes());
    hasher.finalize().into()
}

fn check_field(value: &str) -> Result<(), RegistryError> {
    if value.contains(FIELD_SEP) || value.contains('\n') || value.contains('\r') {
        return Err(RegistryError::InvalidField(value.to_string()));
    }
    Ok(())
}

impl Registry {
    pub fn new() -> Self {
        Self {
            chain_tip: genesis(),
            initialized: true,
            ..Self::default()
        }
    }

    pub fn assignments(&self) -> Vec<&Assignment> {
        self.journal
            .iter()
            .filter_map(|r| match r {
                Record::Assign(a) => Some(a),
                Record::Set(_) => None,
            })
            .collect()
    }

    pub fn sets(&self) -> impl Iterator<Item = &SetEntry> {
        self.journal.iter().filter_map(|r| match r {
            Record::Set(e) => Some(e),
            Record::Assign(_) => None,
        })
    }

    pub fn len(&self) -> usize {
        self.assignments().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn tip(&mut self) -> [u8; 32] {
        if !self.initialized {
            self.chain_tip = genesis();
            self.initialized = true;
        }
        self.chain_tip
    }

    /// Registers the metadata of a candidate set so assignments against it
    /// can be validated. Re-registering the same set is a no-op.
    pub fn register_set(&mut self, set: &WatermarkSet) {
        self.register_set_entry(SetEntry {
            set_id: set.id().to_string(),
            scheme: set.scheme(),
            size: set.len(),
        });
    }

    pub fn register_set_entry(&mut self, entry: SetEntry) {
        if !self.sets.contains_key(&entry.set_id) {
            let tip = self.tip();
            self.chain_tip = chain_next(&tip, &set_record_core(&entry));
            self.sets.insert(entry.set_id.clone(), entry.clone());
            self.journal.push(Record::Set(entry));
        }
    }

    /// Appends an assignment. Fails on duplicate keys unless `supersede` is
    /// set, and on references to unregistered sets or out-of-range indices.
    pub fn record_assignment(
        &mut self,
        mut assignment: Assignment,
        supersede: bool,
    ) -> Result<(), RegistryError> {
        check_field(&assignment.key.paper_id)?;
        if let Some(slot) = &assignment.key.review_slot {
            check_field(slot)?;
        }
        check_field(&assignment.injection_method)?;
        check_field(&assignment.created_at)?;
        let set = self
            .sets
            .get(&assignment.set_id)
            .ok_or_else(|| RegistryError::UnknownSet(assignment.set_id.clone()))?;
        if assignment.index >= set.size {
            return Err(RegistryError::IndexOutOfRange {
                index: assignment.index,
                size: set.size,
            });
        }
        if self.latest.contains_key(&assignment.key) && !supersede {
            return Err(RegistryError::DuplicateKey(assignment.key.label()));
        }
        assignment.supersedes = supersede && self.latest.contains_key(&assignment.key);
        let tip = self.tip();
        self.chain_tip = chain_next(&tip, &assignment_record_core(&assignment));
        self.latest
            .insert(assignment.key.clone(), self.journal.len());
        self.journal.push(Record::Assign(assignment));
        Ok(())
    }

    /// Builds and records the assignment for a freshly sampled watermark.
    pub fn record_sampled(
        &mut self,
        key: AssignmentKey,
        watermark: &Watermark,
        seed: u64,
        created_at: String,
        injection_method: String,
        supersede: bool,
    ) -> Result<(), RegistryError> {
        self.record_assignment(
            Assignment {
                key,
                set_id: watermark.set_id.clone(),
                index: watermark.index,
                scheme: watermark.scheme,
                seed,
                created_at,
                injection_method,
                supersedes: false,
            },
            supersede,
        )
    }

    /// Latest (possibly superseding) record for the key.
    pub fn lookup(&self, key: &AssignmentKey) -> Result<&Assignment, RegistryError> {
        self.latest
            .get(key)
            .map(|&i| match &self.journal[i] {
                Record::Assign(a) => a,
                Record::Set(_) => unreachable!("latest points at assignments"),
            })
            .ok_or_else(|| RegistryError::NotFound(key.label()))
    }

    /// Resolves the key's watermark surface against the set it was drawn
    /// from.
    pub fn resolve_watermark(
        &self,
        key: &AssignmentKey,
        set: &WatermarkSet,
    ) -> Result<Watermark, RegistryError> {
        let a = self.lookup(key)?;
        if a.set_id != set.id() {
            return Err(RegistryError::UnknownSet(a.set_id.clone()));
        }
        set.watermark(a.index)
            .map_err(|_| RegistryError::IndexOutOfRange {
                index: a.index,
                size: set.len(),
            })
    }

    /// Serializes the registry as one record per line, in arrival order; the
    /// final field of each line is the hex chain hash.
    pub fn write(&self, mut w: impl Write) -> Result<(), RegistryError> {
        let mut tip = genesis();
        for record in &self.journal {
            let core = match record {
                Record::Set(e) => set_record_core(e),
                Record::Assign(a) => assignment_record_core(a),
            };
            tip = chain_next(&tip, &core);
            writeln!(w, "{core}{FIELD_SEP}{}", hex::encode(tip))?;
        }
        debug_assert_eq!(tip, self.chain_tip);
        Ok(())
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<(), RegistryError> {
        let file = std::fs::File::create(path)?;
        self.write(std::io::BufWriter::new(file))
    }

    /// Loads a registry, validating the full hash chain.
    pub fn read(r: impl BufRead) -> Result<Self, RegistryError> {
        let mut reg = Registry::new();
        let mut expected_tip = genesis();
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let lineno = idx + 1;
            let (core, hash_hex) = line
                .rsplit_once(FIELD_SEP)
                .ok_or(RegistryError::MalformedRecord(lineno))?;
            expected_tip = chain_next(&expected_tip, core);
            if hex::encode(expected_tip) != hash_hex {
                return Err(RegistryError::ChainMismatch(lineno));
            }
            let fields: Vec<&str> = core.split(FIELD_SEP).collect();
            match fields.first() {
                Some(&"S") if fields.len() == 4 => {
                    let scheme = SchemeKind::parse(fields[2])
                        .ok_or(RegistryError::MalformedRecord(lineno))?;
                    let size = fields[3]
                        .parse()
                        .map_err(|_| RegistryError::MalformedRecord(lineno))?;
                    reg.register_set_entry(SetEntry {
                        set_id: fields[1].to_string(),
                        scheme,
                        size,
                    });
                }
                Some(&"A") if fields.len() == 10 => {
                    let key = if fields[2].is_empty() {
                        AssignmentKey::paper(fields[1])
                    } else {
                        AssignmentKey::slot(fields[1], fields[2])
                    };
                    let assignment = Assignment {
                        key,
                        set_id: fields[3].to_string(),
                        index: fields[4]
                            .parse()
                            .map_err(|_| RegistryError::MalformedRecord(lineno))?,
                        scheme: SchemeKind::parse(fields[5])
                            .ok_or(RegistryError::MalformedRecord(lineno))?,
                        seed: fields[6]
                            .parse()
                            .map_err(|_| RegistryError::MalformedRecord(lineno))?,
                        created_at: fields[7].to_string(),
                        injection_method: fields[8].to_string(),
                        supersedes: fields[9] == "1",
                    };
                    let supersede = assignment.supersedes;
                    reg.record_assignment(assignment, supersede)
                        .map_err(|_| RegistryError::MalformedRecord(lineno))?;
                }
                _ => return Err(RegistryError::MalformedRecord(lineno)),
            }
        }
        debug_assert_eq!(reg.chain_tip, expected_tip);
        Ok(reg)
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self, RegistryError> {
        let file = std::fs::File::open(path)?;
        Self::read(std::io::BufReader::new(file))
    }

    /// Human-auditable table. With `redacted` the watermark stays as
    /// `set_id:index`; otherwise surfaces are resolved from `sets` when
    /// available.
    pub fn export_table(&self, sets: &[&WatermarkSet], redacted: bool) -> String {
        let by_id: HashMap<&str, &WatermarkSet> =
            sets.iter().map(|s| (s.id(), *s)).collect();
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<24} {:<14} {:<10} {:<20} {:<12} watermark",
            "key", "scheme", "seed", "created_at", "method"
        );
        for a in self.assignments() {
            let wm = if redacted {
                format!("{}:{}", a.set_id, a.index)
            } else {
                by_id
                    .get(a.set_id.as_str())
                    .and_then(|s| s.candidate(a.index))
                    .map(|c| format!("{:?}", c))
                    .unwrap_or_else(|| format!("{}:{}", a.set_id, a.index))
            };
            let _ = writeln!(
                out,
                "{:<24} {:<14} {:<10} {:<20} {:<12} {}{}",
                a.key.label(),
                a.scheme.to_string(),
                a.seed,
                a.created_at,
                a.injection_method,
                wm,
                if a.supersedes { "  (supersedes)" } else { "" }
            );
        }
        out
    }
}

fn set_record_core(entry: &SetEntry) -> String {
    format!(
        "S{FIELD_SEP}{}{FIELD_SEP}{}{FIELD_SEP}{}",
        entry.set_id, entry.scheme, entry.size
    )
}

fn assignment_record_core(a: &Assignment) -> String {
    format!(
        "A{FIELD_SEP}{}{FIELD_SEP}{}{FIELD_SEP}{}{FIELD_SEP}{}{FIELD_SEP}{}{FIELD_SEP}{}{FIELD_SEP}{}{FIELD_SEP}{}{FIELD_SEP}{}",
        a.key.paper_id,
        a.key.review_slot.as_deref().unwrap_or(""),
        a.set_id,
        a.index,
        a.scheme,
        a.seed,
        a.created_at,
        a.injection_method,
        if a.supersedes { "1" } else { "0" },
    )
}
