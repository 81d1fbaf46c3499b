//! Pipeline step 1: parse certificate CSV files, clean attribute values,
//! and assemble the common-schema record store.
//!
//! Input is one CSV per certificate type with columns `certificate_id`,
//! `event_year`, `role`, optionally `entity_id` (ground truth carried
//! through for evaluation, never compared), then attribute columns. Rows
//! that cannot be used (unknown role, unparseable event year, inconsistent
//! year within a certificate) are rejected and counted in the ingest
//! report — dirty rows never abort a run.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{CertId, CertType, Certificate, IndividualRecord, RecordId, RoleId, RoleVocabulary};

/// Columns with fixed meaning in input CSVs; never treated as attributes.
pub const RESERVED_COLUMNS: [&str; 4] = ["certificate_id", "event_year", "role", "entity_id"];

/// Per-(certificate type, role) mapping from source columns onto the
/// common attribute schema. Unmapped source columns are ignored; mapped
/// targets must be common attributes.
#[derive(Debug, Clone)]
pub struct MappingSchema {
    attributes: BTreeSet<String>,
    overrides: HashMap<(CertType, String), HashMap<String, String>>,
}

impl MappingSchema {
    /// Identity mapping: every source column named like a common attribute
    /// maps to itself.
    pub fn identity<I: IntoIterator<Item = String>>(attributes: I) -> Self {
        MappingSchema {
            attributes: attributes.into_iter().collect(),
            overrides: HashMap::new(),
        }
    }

    /// Add a source-column rename for one (certificate type, role).
    pub fn add_override(
        &mut self,
        cert_type: CertType,
        role: &str,
        source: &str,
        target: &str,
    ) -> Result<()> {
        if !self.attributes.contains(target) {
            return Err(Error::Schema(format!(
                "mapping target '{target}' is not a common attribute"
            )));
        }
        self.overrides
            .entry((cert_type, role.to_string()))
            .or_default()
            .insert(source.to_string(), target.to_string());
        Ok(())
    }

    pub fn attributes(&self) -> &BTreeSet<String> {
        &self.attributes
    }

    /// Common attribute a source column feeds for the given role, if any.
    fn target_for(&self, cert_type: CertType, role: &str, source: &str) -> Option<&str> {
        if let Some(map) = self.overrides.get(&(cert_type, role.to_string())) {
            if let Some(t) = map.get(source) {
                return Some(t);
            }
        }
        self.attributes.get(source).map(String::as_str)
    }
}

/// Value-cleaning rules: the gender alias table is editable data; age-unit
/// parsing is fixed.
#[derive(Debug, Clone)]
pub struct CleaningRules {
    gender_aliases: BTreeMap<String, String>,
}

impl Default for CleaningRules {
    fn default() -> Self {
        let mut gender_aliases = BTreeMap::new();
        for (alias, norm) in [
            ("f", "f"),
            ("fem", "f"),
            ("female", "f"),
            ("woman", "f"),
            ("girl", "f"),
            ("fe", "f"),
            ("m", "m"),
            ("male", "m"),
            ("man", "m"),
            ("boy", "m"),
            ("masc", "m"),
        ] {
            gender_aliases.insert(alias.to_string(), norm.to_string());
        }
        CleaningRules { gender_aliases }
    }
}

impl CleaningRules {
    /// Extend the gender alias table from a two-column TSV (alias, value).
    pub fn load_gender_aliases<R: Read>(&mut self, reader: R) -> Result<()> {
        let mut rdr = csv::ReaderBuilder::new()
            .delimiter(b'\t')
            .has_headers(false)
            .from_reader(reader);
        for row in rdr.records() {
            let row = row?;
            if row.len() != 2 {
                return Err(Error::Schema(
                    "gender alias file rows must have exactly 2 columns".into(),
                ));
            }
            self.gender_aliases
                .insert(row[0].to_lowercase(), row[1].to_lowercase());
        }
        Ok(())
    }
}

/// Generic text normalization shared by all attributes: transliterate,
/// lower-case, delete apostrophes, turn other punctuation and control
/// characters into spaces, collapse whitespace.
fn normalize_text(raw: &str) -> String {
    let lowered = crate::comparators::transliterate(raw).to_lowercase();
    let mut out = String::with_capacity(lowered.len());
    let mut pending_space = false;
    for c in lowered.chars() {
        if c == '\'' {
            continue;
        }
        if c.is_ascii_alphanumeric() {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.push(c);
        } else {
            pending_space = true;
        }
    }
    out
}

/// Parse an age expression to whole years: a leading integer with an
/// optional unit (years assumed; months/weeks/days floor toward zero).
fn parse_age_years(text: &str) -> Option<i64> {
    let mut parts = text.split_whitespace();
    let number: i64 = parts.next()?.parse().ok()?;
    let unit = parts.next().unwrap_or("years");
    if parts.next().is_some() {
        return None;
    }
    let years = match unit {
        u if "years".starts_with(u) || u == "yrs" || u == "yr" || u == "y" => number,
        u if "months".starts_with(u) || u == "mos" => number / 12,
        u if "weeks".starts_with(u) || u == "wks" || u == "wk" => number / 52,
        u if "days".starts_with(u) => number / 365,
        _ => return None,
    };
    (years >= 0).then_some(years)
}

/// Clean one raw attribute value. Lower-cases, strips punctuation and
/// control characters, collapses whitespace; `gender` is normalized to
/// {f, m} via the alias table; `age` is normalized to integer years
/// ("3 mo" → "0"). An empty or unusable result is an absent value.
/// Cleaning never fails and is idempotent.
pub fn clean_value(rules: &CleaningRules, attribute: &str, raw: &str) -> Option<String> {
    let text = normalize_text(raw);
    if text.is_empty() {
        return None;
    }
    match attribute {
        "gender" => rules.gender_aliases.get(&text).cloned(),
        "age" => parse_age_years(&text).map(|y| y.to_string()),
        _ => Some(text),
    }
}

/// Birth year from an event year and an age in whole years.
pub fn impute_birth_year(event_year: i32, age: i32) -> Result<i32> {
    if age < 0 {
        return Err(Error::Schema(format!("negative age {age} rejected")));
    }
    Ok(event_year - age)
}

/// Counters describing one ingest run, emitted as sorted key-value text.
#[derive(Debug, Clone, Default)]
pub struct IngestReport {
    counters: BTreeMap<String, u64>,
}

impl IngestReport {
    pub fn bump(&mut self, key: &str) {
        self.add(key, 1);
    }

    pub fn add(&mut self, key: &str, n: u64) {
        *self.counters.entry(key.to_string()).or_insert(0) += n;
    }

    pub fn get(&self, key: &str) -> u64 {
        self.counters.get(key).copied().unwrap_or(0)
    }

    pub fn merge(&mut self, other: &IngestReport) {
        for (k, v) in &other.counters {
            self.add(k, *v);
        }
    }
}

impl fmt::Display for IngestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.counters {
            writeln!(f, "{k}\t{v}")?;
        }
        Ok(())
    }
}

/// One member row of a parsed certificate, already cleaned.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedMember {
    pub role: RoleId,
    pub attributes: BTreeMap<String, String>,
    pub entity: Option<String>,
}

/// One certificate parsed from an input file, before store assembly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedCertificate {
    pub ext_id: String,
    pub cert_type: CertType,
    pub event_year: i32,
    pub members: Vec<ParsedMember>,
}

/// Options applied while parsing rows into certificates.
#[derive(Debug, Clone, Default)]
pub struct ParseOptions {
    /// Roles silently dropped at ingest (e.g. informants — present in the
    /// sources but not useful link evidence).
    pub drop_roles: BTreeSet<String>,
}

/// Parse one certificate CSV. Rows are grouped by `certificate_id` in file
/// order; each usable row becomes one member. Unusable rows are rejected
/// and counted; structural problems (missing mandatory columns, non-UTF-8)
/// are errors.
pub fn parse_certificates<R: Read>(
    reader: R,
    cert_type: CertType,
    schema: &MappingSchema,
    vocab: &RoleVocabulary,
    rules: &CleaningRules,
    options: &ParseOptions,
    report: &mut IngestReport,
) -> Result<Vec<ParsedCertificate>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let id_col = col("certificate_id")
        .ok_or_else(|| Error::Schema("missing mandatory column 'certificate_id'".into()))?;
    let year_col = col("event_year")
        .ok_or_else(|| Error::Schema("missing mandatory column 'event_year'".into()))?;
    let role_col =
        col("role").ok_or_else(|| Error::Schema("missing mandatory column 'role'".into()))?;
    let entity_col = col("entity_id");

    let mut certs: Vec<ParsedCertificate> = Vec::new();
    let mut by_ext_id: HashMap<String, usize> = HashMap::new();
    for row in rdr.records() {
        let row = row?;
        report.bump("rows_read");
        let ext_id = row[id_col].to_string();
        if ext_id.is_empty() {
            report.bump("rows_rejected_empty_certificate_id");
            continue;
        }
        let Ok(event_year) = row[year_col].trim().parse::<i32>() else {
            report.bump("rows_rejected_bad_event_year");
            continue;
        };
        let role_name = row[role_col].trim();
        if options.drop_roles.contains(role_name) {
            report.bump("rows_dropped_by_role");
            continue;
        }
        let Some(role) = vocab.lookup(cert_type, role_name) else {
            report.bump("rows_rejected_unknown_role");
            continue;
        };
        let mut attributes = BTreeMap::new();
        for (i, value) in row.iter().enumerate() {
            if i == id_col || i == year_col || i == role_col || Some(i) == entity_col {
                continue;
            }
            let Some(target) = schema.target_for(cert_type, role_name, &headers[i]) else {
                continue;
            };
            match clean_value(rules, target, value) {
                Some(cleaned) => {
                    attributes.insert(target.to_string(), cleaned);
                }
                None => {
                    if !value.is_empty() {
                        report.bump("values_cleaned_to_absent");
                    }
                }
            }
        }
        let entity = entity_col
            .map(|i| row[i].to_string())
            .filter(|e| !e.is_empty());
        let member = ParsedMember { role, attributes, entity };
        match by_ext_id.get(&ext_id) {
            Some(&idx) => {
                if certs[idx].event_year != event_year {
                    report.bump("rows_rejected_inconsistent_event_year");
                    continue;
                }
                certs[idx].members.push(member);
            }
            None => {
                by_ext_id.insert(ext_id.clone(), certs.len());
                certs.push(ParsedCertificate {
                    ext_id,
                    cert_type,
                    event_year,
                    members: vec![member],
                });
            }
        }
    }
    certs.retain(|c| {
        if c.members.is_empty() {
            report.bump("certificates_rejected_empty");
            false
        } else {
            true
        }
    });
    report.add("certificates_parsed", certs.len() as u64);
    Ok(certs)
}

/// The frozen single-table view of all parsed certificates: every
/// individual in one common schema, with indexes for role-scoped access.
#[derive(Debug, Clone)]
pub struct RecordStore {
    certificates: Vec<Certificate>,
    records: Vec<IndividualRecord>,
    cert_by_ext: HashMap<String, CertId>,
    record_by_ext: HashMap<String, RecordId>,
    role_index: HashMap<(CertType, RoleId), Vec<RecordId>>,
    attributes: BTreeSet<String>,
}

impl RecordStore {
    /// Assemble parsed certificates into the frozen store. When
    /// `impute_birth_years` is set, records carrying `age` but no
    /// `birth_year` get one computed from the event year.
    pub fn assemble(
        batches: Vec<ParsedCertificate>,
        vocab: &RoleVocabulary,
        impute_birth_years: bool,
        report: &mut IngestReport,
    ) -> Result<RecordStore> {
        let mut store = RecordStore {
            certificates: Vec::new(),
            records: Vec::new(),
            cert_by_ext: HashMap::new(),
            record_by_ext: HashMap::new(),
            role_index: HashMap::new(),
            attributes: BTreeSet::new(),
        };
        for parsed in batches {
            if store.cert_by_ext.contains_key(&parsed.ext_id) {
                return Err(Error::Integrity(format!(
                    "duplicate certificate id '{}'",
                    parsed.ext_id
                )));
            }
            let cert_id = CertId(store.certificates.len() as u32);
            let mut members = Vec::with_capacity(parsed.members.len());
            for (i, member) in parsed.members.into_iter().enumerate() {
                debug_assert_eq!(vocab.cert_type(member.role), parsed.cert_type);
                let record_id = RecordId(store.records.len() as u32);
                let ext = format!("{}.{i}", parsed.ext_id);
                let mut attributes = member.attributes;
                if impute_birth_years && !attributes.contains_key("birth_year") {
                    if let Some(age) = attributes.get("age").and_then(|a| a.parse::<i32>().ok()) {
                        if let Ok(year) = impute_birth_year(parsed.event_year, age) {
                            attributes.insert("birth_year".to_string(), year.to_string());
                            report.bump("birth_years_imputed");
                        }
                    }
                }
                store.attributes.extend(attributes.keys().cloned());
                store.record_by_ext.insert(ext.clone(), record_id);
                store
                    .role_index
                    .entry((parsed.cert_type, member.role))
                    .or_default()
                    .push(record_id);
                store.records.push(IndividualRecord {
                    id: ext,
                    certificate: cert_id,
                    role: member.role,
                    attributes,
                    entity: member.entity,
                });
                members.push(record_id);
            }
            store.cert_by_ext.insert(parsed.ext_id.clone(), cert_id);
            store.certificates.push(Certificate {
                id: parsed.ext_id,
                cert_type: parsed.cert_type,
                event_year: parsed.event_year,
                members,
            });
        }
        report.add("records_assembled", store.records.len() as u64);
        debug_assert_eq!(
            store.records.len(),
            store.certificates.iter().map(|c| c.members.len()).sum::<usize>()
        );
        Ok(store)
    }

    pub fn record(&self, id: RecordId) -> &IndividualRecord {
        &self.records[id.0 as usize]
    }

    pub fn certificate(&self, id: CertId) -> &Certificate {
        &self.certificates[id.0 as usize]
    }

    pub fn certificate_of(&self, record: RecordId) -> &Certificate {
        self.certificate(self.record(record).certificate)
    }

    /// Event year of the certificate a record belongs to.
    pub fn event_year(&self, record: RecordId) -> i32 {
        self.certificate_of(record).event_year
    }

    pub fn record_by_ext_id(&self, ext: &str) -> Option<RecordId> {
        self.record_by_ext.get(ext).copied()
    }

    /// Segment-member view of a record for life-segment assembly.
    pub fn segment_member(&self, record: RecordId) -> crate::model::SegmentMember {
        let rec = self.record(record);
        let cert = self.certificate(rec.certificate);
        crate::model::SegmentMember {
            record,
            record_id: rec.id.clone(),
            certificate: rec.certificate,
            certificate_id: cert.id.clone(),
            role: rec.role,
            event_year: cert.event_year,
        }
    }

    pub fn cert_by_ext_id(&self, ext: &str) -> Option<CertId> {
        self.cert_by_ext.get(ext).copied()
    }

    pub fn records(&self) -> impl Iterator<Item = (RecordId, &IndividualRecord)> {
        self.records
            .iter()
            .enumerate()
            .map(|(i, r)| (RecordId(i as u32), r))
    }

    pub fn certificates(&self) -> impl Iterator<Item = (CertId, &Certificate)> {
        self.certificates
            .iter()
            .enumerate()
            .map(|(i, c)| (CertId(i as u32), c))
    }

    pub fn by_role(&self, cert_type: CertType, role: RoleId) -> &[RecordId] {
        self.role_index
            .get(&(cert_type, role))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn record_count(&self) -> usize {
        self.records.len()
    }

    pub fn certificate_count(&self) -> usize {
        self.certificates.len()
    }

    /// All attribute names present anywhere in the store.
    pub fn attribute_names(&self) -> &BTreeSet<String> {
        &self.attributes
    }

    /// Serialize as the canonical TSV: fixed leading columns, then one
    /// column per attribute in name order. Re-parsing this file and
    /// re-serializing reproduces it byte-identically.
    pub fn write_canonical_tsv<W: Write>(&self, vocab: &RoleVocabulary, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().delimiter(b'\t').from_writer(out);
        let attrs: Vec<&String> = self.attributes.iter().collect();
        let mut header = vec![
            "record_id".to_string(),
            "certificate_id".to_string(),
            "certificate_type".to_string(),
            "event_year".to_string(),
            "role".to_string(),
            "entity_id".to_string(),
        ];
        header.extend(attrs.iter().map(|a| a.to_string()));
        w.write_record(&header)?;
        for record in &self.records {
            let cert = self.certificate(record.certificate);
            let mut row = vec![
                record.id.clone(),
                cert.id.clone(),
                cert.cert_type.as_str().to_string(),
                cert.event_year.to_string(),
                vocab.name(record.role).to_string(),
                record.entity.clone().unwrap_or_default(),
            ];
            row.extend(
                attrs
                    .iter()
                    .map(|a| record.attributes.get(*a).cloned().unwrap_or_default()),
            );
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Parse a canonical TSV back into certificates (inverse of
    /// [`RecordStore::write_canonical_tsv`] up to assembly).
    pub fn read_canonical_tsv<R: Read>(
        reader: R,
        vocab: &RoleVocabulary,
        rules: &CleaningRules,
        report: &mut IngestReport,
    ) -> Result<Vec<ParsedCertificate>> {
        let mut rdr = csv::ReaderBuilder::new()
            .delimiter(b'\t')
            .has_headers(true)
            .from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if headers.len() < 6 || headers[..6] != [
            "record_id",
            "certificate_id",
            "certificate_type",
            "event_year",
            "role",
            "entity_id",
        ] {
            return Err(Error::Schema("not a canonical record-store TSV".into()));
        }
        let mut certs: Vec<ParsedCertificate> = Vec::new();
        let mut by_ext_id: HashMap<String, usize> = HashMap::new();
        for row in rdr.records() {
            let row = row?;
            report.bump("rows_read");
            let ext_id = row[1].to_string();
            let cert_type = CertType::parse(&row[2])?;
            let event_year: i32 = row[3]
                .parse()
                .map_err(|_| Error::Schema(format!("bad event year '{}'", &row[3])))?;
            let role = vocab
                .lookup(cert_type, &row[4])
                .ok_or_else(|| Error::Schema(format!("unknown role '{}'", &row[4])))?;
            let entity = (!row[5].is_empty()).then(|| row[5].to_string());
            let mut attributes = BTreeMap::new();
            for (i, header) in headers.iter().enumerate().skip(6) {
                if let Some(cleaned) = clean_value(rules, header, &row[i]) {
                    attributes.insert(header.clone(), cleaned);
                }
            }
            let member = ParsedMember { role, attributes, entity };
            match by_ext_id.get(&ext_id) {
                Some(&idx) => {
                    if certs[idx].event_year != event_year {
                        report.bump("rows_rejected_inconsistent_event_year");
                        continue;
                    }
                    certs[idx].members.push(member);
                }
                None => {
                    by_ext_id.insert(ext_id.clone(), certs.len());
                    certs.push(ParsedCertificate {
                        ext_id,
                        cert_type,
                        event_year,
                        members: vec![member],
                    });
                }
            }
        }
        Ok(certs)
    }
}

/// Parse a certificate CSV file from disk.
pub fn parse_certificates_file(
    path: &Path,
    cert_type: CertType,
    schema: &MappingSchema,
    vocab: &RoleVocabulary,
    rules: &CleaningRules,
    options: &ParseOptions,
    report: &mut IngestReport,
) -> Result<Vec<ParsedCertificate>> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Schema(format!("cannot open {}: {e}", path.display())))?;
    parse_certificates(file, cert_type, schema, vocab, rules, options, report)
}
