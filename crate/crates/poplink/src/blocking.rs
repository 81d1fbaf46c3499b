//! Blocking: split the record store into blocks of records sharing a
//! phonetically encoded key value, then emit deduplicated candidate record
//! pairs that pass the role-pair and temporal filters.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::comparators::{double_metaphone_primary, soundex};
use crate::error::{Error, Result};
use crate::ingest::RecordStore;
use crate::model::{
    is_valid_role_pair, temporal_check, CertType, RecordId, RoleId, RolePairSet,
    TemporalConstraintTable,
};

/// Per-attribute phonetic encoding applied before concatenating a block
/// value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyEncoding {
    None,
    Soundex,
    DoubleMetaphonePrimary,
}

impl KeyEncoding {
    pub const ALL: [KeyEncoding; 3] = [
        KeyEncoding::None,
        KeyEncoding::Soundex,
        KeyEncoding::DoubleMetaphonePrimary,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KeyEncoding::None => "none",
            KeyEncoding::Soundex => "soundex",
            KeyEncoding::DoubleMetaphonePrimary => "double_metaphone_primary",
        }
    }

    pub fn parse(s: &str) -> Result<KeyEncoding> {
        match s {
            "none" => Ok(KeyEncoding::None),
            "soundex" => Ok(KeyEncoding::Soundex),
            "double_metaphone_primary" => Ok(KeyEncoding::DoubleMetaphonePrimary),
            other => Err(Error::Config(format!("unknown key encoding `{other}`"))),
        }
    }

    pub fn apply(self, value: &str) -> String {
        match self {
            KeyEncoding::None => value.to_ascii_lowercase(),
            KeyEncoding::Soundex => soundex(value),
            KeyEncoding::DoubleMetaphonePrimary => double_metaphone_primary(value),
        }
    }
}

/// One blocking key b = (T_b, a_x…a_z): the roles whose records may enter
/// its blocks and the ordered, per-attribute-encoded values concatenated
/// into the block value. A key with no attributes puts every record of its
/// roles into one block (the universal key used for oracle comparisons).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockingKey {
    pub id: String,
    pub roles: BTreeSet<RoleId>,
    pub attributes: Vec<(String, KeyEncoding)>,
}

impl BlockingKey {
    /// Distinct roles co-blocked by this key must form a clique in the
    /// valid-role-pair set, so records that may never link (bride and
    /// groom, say) are never inserted into the same block.
    pub fn validate(&self, pairs: &RolePairSet) -> Result<()> {
        if self.roles.is_empty() {
            return Err(Error::Config(format!(
                "blocking key '{}' has an empty role set",
                self.id
            )));
        }
        let roles: Vec<RoleId> = self.roles.iter().copied().collect();
        for (i, &a) in roles.iter().enumerate() {
            for &b in &roles[i + 1..] {
                if !pairs.contains(a, b) {
                    return Err(Error::Config(format!(
                        "blocking key '{}' co-blocks roles that are not a valid pair",
                        self.id
                    )));
                }
            }
        }
        Ok(())
    }

    /// The record's block value under this key, or `None` when its role is
    /// outside the key's role set or any keyed attribute is missing.
    fn block_value(&self, role: RoleId, attr: impl Fn(&str) -> Option<String>) -> Option<String> {
        if !self.roles.contains(&role) {
            return None;
        }
        let mut parts = Vec::with_capacity(self.attributes.len());
        for (name, encoding) in &self.attributes {
            let value = attr(name)?;
            if value.is_empty() {
                return None;
            }
            parts.push(encoding.apply(&value));
        }
        Some(parts.join("\x1f"))
    }
}

/// Keys must validate individually and carry distinct ids.
pub fn validate_keys(keys: &[BlockingKey], pairs: &RolePairSet) -> Result<()> {
    let mut ids = BTreeSet::new();
    for key in keys {
        key.validate(pairs)?;
        if !ids.insert(key.id.as_str()) {
            return Err(Error::Config(format!("duplicate blocking key id '{}'", key.id)));
        }
    }
    Ok(())
}

/// Blocks by (key index, block value); record lists are ascending.
pub type Blocks = BTreeMap<(u32, String), Vec<RecordId>>;

/// Insert every record into the blocks of every key whose role set admits
/// it and whose attributes it carries.
pub fn build_blocks(store: &RecordStore, keys: &[BlockingKey]) -> Blocks {
    let per_key: Vec<BTreeMap<String, Vec<RecordId>>> = keys
        .par_iter()
        .map(|key| {
            let mut blocks: BTreeMap<String, Vec<RecordId>> = BTreeMap::new();
            for (id, rec) in store.records() {
                let value = key.block_value(rec.role, |name| {
                    rec.attr(name).map(str::to_string)
                });
                if let Some(value) = value {
                    blocks.entry(value).or_default().push(id);
                }
            }
            blocks
        })
        .collect();
    let mut out = Blocks::new();
    for (idx, blocks) in per_key.into_iter().enumerate() {
        for (value, records) in blocks {
            out.insert((idx as u32, value), records);
        }
    }
    out
}

/// Candidate pair filters beyond role-pair and temporal validity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateOptions {
    /// Drop pairs involving a census record whose event years differ by
    /// more than ten years, keeping only the temporally closest censuses.
    pub census_decade_limit: bool,
    /// Blocks above this size are reported (and still processed).
    pub block_cap: usize,
}

impl Default for CandidateOptions {
    fn default() -> CandidateOptions {
        CandidateOptions { census_decade_limit: false, block_cap: 10_000 }
    }
}

/// Deduplicated candidate pairs in canonical (ascending record id) order,
/// each remembering the keys that generated it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CandidateSet {
    pairs: BTreeMap<(RecordId, RecordId), BTreeSet<u32>>,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, a: RecordId, b: RecordId) -> bool {
        let key = if a < b { (a, b) } else { (b, a) };
        self.pairs.contains_key(&key)
    }

    pub fn iter(&self) -> impl Iterator<Item = ((RecordId, RecordId), &BTreeSet<u32>)> {
        self.pairs.iter().map(|(&p, keys)| (p, keys))
    }

    pub fn pair_iter(&self) -> impl Iterator<Item = (RecordId, RecordId)> + '_ {
        self.pairs.keys().copied()
    }

    /// Debug dump: external record ids plus the comma-joined ids of the
    /// generating keys.
    pub fn write_tsv<W: Write>(
        &self,
        store: &RecordStore,
        keys: &[BlockingKey],
        writer: &mut W,
    ) -> Result<()> {
        writeln!(writer, "record_id_1\trecord_id_2\tkey_ids")?;
        for ((a, b), key_idxs) in &self.pairs {
            let ids: Vec<&str> = key_idxs
                .iter()
                .map(|&i| keys[i as usize].id.as_str())
                .collect();
            writeln!(
                writer,
                "{}\t{}\t{}",
                store.record(*a).id,
                store.record(*b).id,
                ids.join(",")
            )?;
        }
        Ok(())
    }
}

/// Sizes and anomalies observed while emitting candidates.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BlockingReport {
    pub blocks: usize,
    pub candidates: usize,
    /// (key index, block value, size) of blocks above the configured cap.
    pub oversized: Vec<(u32, String, usize)>,
}

/// Pair up records within each block, dropping same-certificate pairs,
/// invalid role pairs, temporal violations, and (optionally) census links
/// beyond one decade; deduplicate across keys.
pub fn emit_candidates(
    blocks: &Blocks,
    store: &RecordStore,
    role_pairs: &RolePairSet,
    temporal: &TemporalConstraintTable,
    options: &CandidateOptions,
) -> (CandidateSet, BlockingReport) {
    let block_list: Vec<(&(u32, String), &Vec<RecordId>)> = blocks.iter().collect();
    let per_block: Vec<Vec<(RecordId, RecordId, u32)>> = block_list
        .par_iter()
        .map(|((key_idx, _), members)| {
            let mut found = Vec::new();
            for (i, &a) in members.iter().enumerate() {
                for &b in &members[i + 1..] {
                    if admissible(store, a, b, role_pairs, temporal, options) {
                        let (a, b) = if a < b { (a, b) } else { (b, a) };
                        found.push((a, b, *key_idx));
                    }
                }
            }
            found
        })
        .collect();
    let mut set = CandidateSet::default();
    for found in per_block {
        for (a, b, key_idx) in found {
            set.pairs.entry((a, b)).or_default().insert(key_idx);
        }
    }
    let report = BlockingReport {
        blocks: blocks.len(),
        candidates: set.len(),
        oversized: block_list
            .iter()
            .filter(|(_, members)| members.len() > options.block_cap)
            .map(|((idx, value), members)| (*idx, value.clone(), members.len()))
            .collect(),
    };
    (set, report)
}

fn admissible(
    store: &RecordStore,
    a: RecordId,
    b: RecordId,
    role_pairs: &RolePairSet,
    temporal: &TemporalConstraintTable,
    options: &CandidateOptions,
) -> bool {
    let ra = store.record(a);
    let rb = store.record(b);
    if ra.certificate == rb.certificate {
        return false;
    }
    if !is_valid_role_pair(ra.role, rb.role, role_pairs) {
        return false;
    }
    let ca = store.certificate(ra.certificate);
    let cb = store.certificate(rb.certificate);
    if !temporal_check(ra.role, ca.event_year, rb.role, cb.event_year, temporal) {
        return false;
    }
    if options.census_decade_limit
        && (ca.cert_type == CertType::Census || cb.cert_type == CertType::Census)
        && (ca.event_year - cb.event_year).abs() > 10
    {
        return false;
    }
    true
}
