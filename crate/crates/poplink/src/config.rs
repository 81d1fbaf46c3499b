//! Configuration loading: one TOML file drives every pipeline stage. The
//! crate embeds a complete default configuration; a user file overrides
//! it section by section (a section present in the user file replaces the
//! embedded section entirely). Everything is validated here, at load
//! time: role references resolve against the declared vocabulary,
//! temporal windows derive from role age ranges, linkage types and
//! blocking keys are expanded and checked, and all numeric parameters are
//! range-checked.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::blocking::{BlockingKey, CandidateOptions, KeyEncoding};
use crate::comparators::ComparatorSpec;
use crate::constraints::AssignmentMode;
use crate::error::{Error, Result};
use crate::fusion::FusionParams;
use crate::graph::{LinkageType, RelationshipSpec};
use crate::group::GroupMethod;
use crate::ingest::{CleaningRules, MappingSchema, ParseOptions};
use crate::model::{
    Cardinality, CertType, LinkConstraintTable, RoleId, RolePairSet, RoleVocabulary,
    TemporalConstraintTable, YearWindow,
};
use crate::pairwise::MissingValuePolicy;
use crate::relational::RelationalMethod;
use crate::synthgen::PopulationParams;

/// The embedded default configuration; also serves as the format's
/// reference documentation.
pub const DEFAULT_CONFIG_TOML: &str = include_str!("../data/default_config.toml");

/// How per-attribute weights are chosen for the pairwise aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightingMode {
    Uniform,
    /// Estimate weights from ground-truth entity ids before linking.
    Trained,
}

/// Input data files. Relative paths are resolved against the directory
/// of the configuration file they came from.
#[derive(Debug, Clone, Default)]
pub struct DataPaths {
    pub births: Option<PathBuf>,
    pub deaths: Option<PathBuf>,
    pub marriages: Option<PathBuf>,
    pub censuses: Option<PathBuf>,
    pub gold: Option<PathBuf>,
}

impl DataPaths {
    /// Certificate sources that are configured, in fixed type order.
    pub fn sources(&self) -> Vec<(CertType, &Path)> {
        [
            (CertType::Birth, &self.births),
            (CertType::Death, &self.deaths),
            (CertType::Marriage, &self.marriages),
            (CertType::Census, &self.censuses),
        ]
        .into_iter()
        .filter_map(|(t, p)| p.as_deref().map(|p| (t, p)))
        .collect()
    }
}

/// Everything the ingest stage needs.
#[derive(Debug, Clone)]
pub struct IngestSettings {
    pub attributes: Vec<String>,
    pub schema: MappingSchema,
    pub parse_options: ParseOptions,
    pub impute_birth_years: bool,
    pub cleaning: CleaningRules,
}

/// The validated, runtime-ready configuration.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub seed: u64,
    pub data: DataPaths,
    pub ingest: IngestSettings,
    pub vocab: RoleVocabulary,
    pub role_pairs: RolePairSet,
    pub temporal: TemporalConstraintTable,
    pub linkage_types: Vec<LinkageType>,
    pub link_constraints: LinkConstraintTable,
    pub blocking_keys: Vec<BlockingKey>,
    pub candidates: CandidateOptions,
    pub comparators: BTreeMap<String, ComparatorSpec>,
    pub missing_value_policy: MissingValuePolicy,
    pub weighting: WeightingMode,
    pub train_sample_size: usize,
    pub s_m: f64,
    pub relational_method: RelationalMethod,
    pub group_method: GroupMethod,
    pub constraints_enabled: bool,
    pub assignment_mode: AssignmentMode,
    pub fusion: FusionParams,
    pub strict_evaluation: bool,
    pub synthgen: Option<PopulationParams>,
}

impl PipelineConfig {
    /// Load the embedded defaults.
    pub fn load_default() -> Result<PipelineConfig> {
        build(RawConfig::default(), None)
    }

    /// Load from TOML text; sections not present fall back to the
    /// embedded defaults. Relative data paths stay relative.
    pub fn load_str(text: &str) -> Result<PipelineConfig> {
        build(toml::from_str(text)?, None)
    }

    /// Load from a file; relative data paths resolve against the file's
    /// directory.
    pub fn load_path(path: &Path) -> Result<PipelineConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        build(toml::from_str(&text)?, path.parent())
    }
}

// ---------------------------------------------------------------------
// Raw deserialization layer.

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    data: Option<RawData>,
    ingest: Option<RawIngest>,
    roles: Option<BTreeMap<String, Vec<RawRole>>>,
    role_pairs: Option<RawRolePairs>,
    linkage: Option<RawLinkage>,
    blocking: Option<RawBlocking>,
    comparators: Option<BTreeMap<String, ComparatorSpec>>,
    options: Option<RawOptions>,
    pairwise: Option<RawPairwise>,
    relational: Option<RawRelational>,
    group: Option<RawGroup>,
    constraints: Option<RawConstraints>,
    fusion: Option<RawFusion>,
    evaluation: Option<RawEvaluation>,
    synthgen: Option<PopulationParams>,
}

impl RawConfig {
    /// Section-level fallback: `self` wins wherever it has a section.
    fn merge(self, base: RawConfig) -> RawConfig {
        RawConfig {
            seed: self.seed.or(base.seed),
            data: self.data.or(base.data),
            ingest: self.ingest.or(base.ingest),
            roles: self.roles.or(base.roles),
            role_pairs: self.role_pairs.or(base.role_pairs),
            linkage: self.linkage.or(base.linkage),
            blocking: self.blocking.or(base.blocking),
            comparators: self.comparators.or(base.comparators),
            options: self.options.or(base.options),
            pairwise: self.pairwise.or(base.pairwise),
            relational: self.relational.or(base.relational),
            group: self.group.or(base.group),
            constraints: self.constraints.or(base.constraints),
            fusion: self.fusion.or(base.fusion),
            evaluation: self.evaluation.or(base.evaluation),
            synthgen: self.synthgen.or(base.synthgen),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawData {
    births: Option<String>,
    deaths: Option<String>,
    marriages: Option<String>,
    censuses: Option<String>,
    gold: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIngest {
    attributes: Vec<String>,
    #[serde(default)]
    drop_roles: Vec<String>,
    impute_birth_years: bool,
    gender_alias_file: Option<String>,
    #[serde(default)]
    overrides: Vec<RawColumnOverride>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawColumnOverride {
    cert: String,
    role: String,
    column: String,
    attribute: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRole {
    name: String,
    age: Option<[i32; 2]>,
    #[serde(default)]
    terminal: bool,
    #[serde(default)]
    posthumous: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRolePairs {
    #[serde(default = "default_pad")]
    pad: i32,
    pairs: Vec<[String; 2]>,
    #[serde(default)]
    overrides: Vec<RawWindowOverride>,
}

fn default_pad() -> i32 {
    5
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWindowOverride {
    pair: [String; 2],
    window: Option<[i32; 2]>,
    #[serde(default)]
    unconstrained: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLinkage {
    auto: bool,
    #[serde(default)]
    overrides: Vec<RawLinkageOverride>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLinkageOverride {
    pair: [String; 2],
    name: Option<String>,
    cardinality: Option<Cardinality>,
    relationship: Option<RawRelationship>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRelationship {
    cert_types: Option<Vec<String>>,
    role_pairs: Option<Vec<[String; 2]>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBlocking {
    block_cap: usize,
    #[serde(default)]
    templates: Vec<RawTemplate>,
    #[serde(default)]
    keys: Vec<RawKey>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTemplate {
    id: String,
    role_sets: Vec<Vec<String>>,
    encoded: Vec<Vec<String>>,
    #[serde(default)]
    plain: Vec<String>,
    encodings: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKey {
    id: String,
    roles: Vec<String>,
    attributes: Vec<(String, String)>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOptions {
    missing_value_policy: MissingValuePolicy,
    attribute_weighting: WeightingMode,
    census_decade_limit: bool,
    constraints: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPairwise {
    s_m: f64,
    train_sample_size: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRelational {
    method: RelationalMethod,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGroup {
    method: GroupMethod,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConstraints {
    mode: AssignmentMode,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFusion {
    w_r: f64,
    w_g: f64,
    s_t: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvaluation {
    strict: bool,
}

// ---------------------------------------------------------------------
// Building and validation.

#[derive(Debug, Clone, Copy, Default)]
struct RoleMeta {
    age: Option<(i32, i32)>,
    terminal: bool,
    posthumous: bool,
}

fn section<T>(value: Option<T>, name: &str) -> Result<T> {
    value.ok_or_else(|| Error::Config(format!("embedded default config lacks section [{name}]")))
}

fn resolve_path(base: Option<&Path>, value: &str) -> PathBuf {
    let p = PathBuf::from(value);
    match base {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p,
    }
}

/// Resolve a `cert_type/RoleName` reference against the vocabulary.
fn resolve_role(vocab: &RoleVocabulary, reference: &str) -> Result<RoleId> {
    let Some((cert, role)) = reference.split_once('/') else {
        return Err(Error::Config(format!(
            "role reference `{reference}` is not of the form certificate_type/RoleName"
        )));
    };
    let cert_type = CertType::parse(cert)?;
    vocab.lookup(cert_type, role).ok_or_else(|| {
        Error::Config(format!("role reference `{reference}` names an undeclared role"))
    })
}

/// `BrideMother` -> `bride_mother`, for derived linkage-type names.
fn snake_case(name: &str) -> String {
    let mut out = String::with_capacity(name.len() + 4);
    for (i, c) in name.chars().enumerate() {
        if c.is_ascii_uppercase() {
            if i > 0 {
                out.push('_');
            }
            out.push(c.to_ascii_lowercase());
        } else {
            out.push(c);
        }
    }
    out
}

/// Temporal window for a role pair from the roles' age ranges: both
/// events are anchored at the person's birth, so the year difference is
/// the difference of the ages at each event, padded against recording
/// errors. A living role paired with the terminal role is clipped to the
/// "never seen alive after death" half-line.
fn derive_window(a: RoleMeta, b: RoleMeta, pad: i32) -> Result<Option<YearWindow>> {
    let (Some((a_min, a_max)), Some((b_min, b_max))) = (a.age, b.age) else {
        return Ok(None);
    };
    let mut lo = b_min - a_max - pad;
    let mut hi = b_max - a_min + pad;
    if b.terminal && !a.terminal && !a.posthumous {
        lo = lo.max(-pad);
    }
    if a.terminal && !b.terminal && !b.posthumous {
        hi = hi.min(pad);
    }
    Ok(Some(YearWindow::new(lo, hi)?))
}

fn mirror_cardinality(c: Cardinality) -> Cardinality {
    match c {
        Cardinality::OneToMany => Cardinality::ManyToOne,
        Cardinality::ManyToOne => Cardinality::OneToMany,
        other => other,
    }
}

fn canonical_pair(a: RoleId, b: RoleId) -> (RoleId, RoleId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

fn build(user: RawConfig, base_dir: Option<&Path>) -> Result<PipelineConfig> {
    let defaults: RawConfig = toml::from_str(DEFAULT_CONFIG_TOML)?;
    let raw = user.merge(defaults);

    let seed = section(raw.seed, "seed")?;

    // Role vocabulary, in fixed certificate-type order so role ids are
    // deterministic for a given file.
    let raw_roles = section(raw.roles, "roles")?;
    for cert_name in raw_roles.keys() {
        CertType::parse(cert_name)?;
    }
    let mut vocab = RoleVocabulary::new();
    let mut meta: BTreeMap<RoleId, RoleMeta> = BTreeMap::new();
    for cert_type in CertType::ALL {
        for role in raw_roles.get(cert_type.as_str()).into_iter().flatten() {
            if let Some([lo, hi]) = role.age {
                if lo > hi || lo < 0 {
                    return Err(Error::Config(format!(
                        "role {}/{} has invalid age range [{lo}, {hi}]",
                        cert_type, role.name
                    )));
                }
            }
            let id = vocab.add(cert_type, &role.name)?;
            meta.insert(
                id,
                RoleMeta {
                    age: role.age.map(|[lo, hi]| (lo, hi)),
                    terminal: role.terminal,
                    posthumous: role.posthumous,
                },
            );
        }
    }
    if vocab.is_empty() {
        return Err(Error::Config("role vocabulary is empty".into()));
    }

    // Ingest settings.
    let raw_ingest = section(raw.ingest, "ingest")?;
    if raw_ingest.attributes.is_empty() {
        return Err(Error::Config("ingest.attributes must not be empty".into()));
    }
    for attr in &raw_ingest.attributes {
        if crate::ingest::RESERVED_COLUMNS.contains(&attr.as_str()) {
            return Err(Error::Config(format!(
                "ingest attribute `{attr}` collides with a reserved column"
            )));
        }
    }
    let mut schema = MappingSchema::identity(raw_ingest.attributes.iter().cloned());
    for o in &raw_ingest.overrides {
        schema.add_override(CertType::parse(&o.cert)?, &o.role, &o.column, &o.attribute)?;
    }
    let mut cleaning = CleaningRules::default();
    if let Some(file) = &raw_ingest.gender_alias_file {
        let path = resolve_path(base_dir, file);
        let reader = std::fs::File::open(&path).map_err(|e| {
            Error::Config(format!("cannot read gender alias file {}: {e}", path.display()))
        })?;
        cleaning.load_gender_aliases(reader)?;
    }
    let ingest = IngestSettings {
        attributes: raw_ingest.attributes.clone(),
        schema,
        parse_options: ParseOptions {
            drop_roles: raw_ingest.drop_roles.iter().cloned().collect(),
        },
        impute_birth_years: raw_ingest.impute_birth_years,
        cleaning,
    };
    // Attributes usable in comparators and blocking keys: the ingested
    // ones plus the derived birth year when imputation is on.
    let mut known_attrs: BTreeSet<&str> =
        raw_ingest.attributes.iter().map(String::as_str).collect();
    if raw_ingest.impute_birth_years {
        known_attrs.insert("birth_year");
    }

    // Role pairs and their temporal windows.
    let raw_pairs = section(raw.role_pairs, "role_pairs")?;
    if raw_pairs.pad < 0 {
        return Err(Error::Config(format!(
            "role_pairs.pad must be non-negative, got {}",
            raw_pairs.pad
        )));
    }
    let mut window_overrides: BTreeMap<(RoleId, RoleId), (&RawWindowOverride, bool)> =
        BTreeMap::new();
    for o in &raw_pairs.overrides {
        if o.unconstrained == o.window.is_some() {
            return Err(Error::Config(format!(
                "window override for `{}`/`{}` must set exactly one of window, unconstrained",
                o.pair[0], o.pair[1]
            )));
        }
        let a = resolve_role(&vocab, &o.pair[0])?;
        let b = resolve_role(&vocab, &o.pair[1])?;
        if window_overrides.insert(canonical_pair(a, b), (o, false)).is_some() {
            return Err(Error::Config(format!(
                "duplicate window override for `{}`/`{}`",
                o.pair[0], o.pair[1]
            )));
        }
    }
    let mut role_pairs = RolePairSet::new();
    let mut temporal = TemporalConstraintTable::new();
    // Listed pairs with their oriented windows, in file order; linkage
    // types derive from this.
    let mut pair_list: Vec<((RoleId, RoleId), Option<YearWindow>)> = Vec::new();
    let mut seen: BTreeSet<(RoleId, RoleId)> = BTreeSet::new();
    let mut window_override_hits = 0usize;
    for pair in &raw_pairs.pairs {
        let a = resolve_role(&vocab, &pair[0])?;
        let b = resolve_role(&vocab, &pair[1])?;
        if !seen.insert(canonical_pair(a, b)) {
            return Err(Error::Config(format!(
                "role pair `{}`/`{}` listed twice",
                pair[0], pair[1]
            )));
        }
        let window = match window_overrides.get(&canonical_pair(a, b)) {
            Some((o, _)) => {
                window_override_hits += 1;
                match o.window {
                    None => None,
                    Some([lo, hi]) => {
                        // Mirror if the override lists the pair in the
                        // opposite orientation.
                        let o_a = resolve_role(&vocab, &o.pair[0])?;
                        if o_a == a {
                            Some(YearWindow::new(lo, hi)?)
                        } else {
                            Some(YearWindow::new(-hi, -lo)?)
                        }
                    }
                }
            }
            None => derive_window(meta[&a], meta[&b], raw_pairs.pad)?,
        };
        role_pairs.insert(a, b);
        if let Some(w) = window {
            temporal.set_role_window(a, b, w);
        }
        pair_list.push(((a, b), window));
    }
    if window_override_hits != window_overrides.len() {
        return Err(Error::Config(
            "a window override references a pair missing from role_pairs.pairs".into(),
        ));
    }
    if role_pairs.is_empty() {
        return Err(Error::Config("role_pairs.pairs must not be empty".into()));
    }

    // Linkage types, one per role pair unless overridden.
    let raw_linkage = section(raw.linkage, "linkage")?;
    let mut linkage_overrides: BTreeMap<(RoleId, RoleId), (&RawLinkageOverride, RoleId)> =
        BTreeMap::new();
    for o in &raw_linkage.overrides {
        let a = resolve_role(&vocab, &o.pair[0])?;
        let b = resolve_role(&vocab, &o.pair[1])?;
        if !seen.contains(&canonical_pair(a, b)) {
            return Err(Error::Config(format!(
                "linkage override `{}`/`{}` references a pair missing from role_pairs.pairs",
                o.pair[0], o.pair[1]
            )));
        }
        if linkage_overrides.insert(canonical_pair(a, b), (o, a)).is_some() {
            return Err(Error::Config(format!(
                "duplicate linkage override for `{}`/`{}`",
                o.pair[0], o.pair[1]
            )));
        }
    }
    let mut linkage_types: Vec<LinkageType> = Vec::new();
    let mut link_constraints = LinkConstraintTable::new();
    let mut names: BTreeSet<String> = BTreeSet::new();
    for &((a, b), window) in &pair_list {
        let o = linkage_overrides.get(&canonical_pair(a, b));
        if !raw_linkage.auto && o.is_none() {
            continue;
        }
        let (ct_a, ct_b) = (vocab.cert_type(a), vocab.cert_type(b));
        let mut name = format!(
            "{}_{}_{}_{}",
            ct_a,
            ct_b,
            snake_case(vocab.name(a)),
            snake_case(vocab.name(b))
        );
        let mut cardinality = Cardinality::ManyToMany;
        let mut relationship = RelationshipSpec::unrestricted();
        if let Some((o, listed_a)) = o {
            // The override may list the pair in the opposite orientation;
            // sided cardinalities then mirror.
            let flipped = *listed_a != a;
            if let Some(n) = &o.name {
                name = n.clone();
            }
            if let Some(c) = o.cardinality {
                cardinality = if flipped { mirror_cardinality(c) } else { c };
            }
            if let Some(rel) = &o.relationship {
                let cert_types = match &rel.cert_types {
                    None => None,
                    Some(list) => Some(
                        list.iter()
                            .map(|s| CertType::parse(s))
                            .collect::<Result<BTreeSet<_>>>()?,
                    ),
                };
                let pairs = match &rel.role_pairs {
                    None => None,
                    Some(list) => {
                        let mut set = RolePairSet::new();
                        for p in list {
                            set.insert(resolve_role(&vocab, &p[0])?, resolve_role(&vocab, &p[1])?);
                        }
                        Some(set)
                    }
                };
                relationship = RelationshipSpec { cert_types, role_pairs: pairs };
            }
        }
        if !names.insert(name.clone()) {
            return Err(Error::Config(format!("duplicate linkage type name `{name}`")));
        }
        link_constraints.set(&name, cardinality);
        if let Some(w) = window {
            temporal.set_cert_window(&name, w);
        }
        linkage_types.push(LinkageType {
            name,
            cert_types: (ct_a, ct_b),
            anchor: (a, b),
            relationship,
            window,
        });
    }
    if linkage_types.is_empty() {
        return Err(Error::Config("configuration declares no linkage types".into()));
    }

    // Options (needed before blocking for the census decade limit).
    let options = section(raw.options, "options")?;

    // Blocking keys: template expansion plus explicit keys.
    let raw_blocking = section(raw.blocking, "blocking")?;
    let mut blocking_keys: Vec<BlockingKey> = Vec::new();
    let check_attr = |attr: &str| -> Result<()> {
        if known_attrs.contains(attr) {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "blocking key attribute `{attr}` is not an ingested or derived attribute"
            )))
        }
    };
    for tpl in &raw_blocking.templates {
        let encodings = tpl
            .encodings
            .iter()
            .map(|e| KeyEncoding::parse(e))
            .collect::<Result<Vec<_>>>()?;
        for attr in tpl.encoded.iter().flatten().chain(tpl.plain.iter()) {
            check_attr(attr)?;
        }
        for (ri, role_set) in tpl.role_sets.iter().enumerate() {
            let roles = role_set
                .iter()
                .map(|r| resolve_role(&vocab, r))
                .collect::<Result<BTreeSet<_>>>()?;
            for enc_set in &tpl.encoded {
                for &encoding in &encodings {
                    let mut attributes: Vec<(String, KeyEncoding)> =
                        enc_set.iter().map(|a| (a.clone(), encoding)).collect();
                    attributes
                        .extend(tpl.plain.iter().map(|a| (a.clone(), KeyEncoding::None)));
                    blocking_keys.push(BlockingKey {
                        id: format!(
                            "{}.{}.{}.{}",
                            tpl.id,
                            ri,
                            enc_set.join("+"),
                            encoding.name()
                        ),
                        roles: roles.clone(),
                        attributes,
                    });
                }
            }
        }
    }
    for key in &raw_blocking.keys {
        let roles = key
            .roles
            .iter()
            .map(|r| resolve_role(&vocab, r))
            .collect::<Result<BTreeSet<_>>>()?;
        let attributes = key
            .attributes
            .iter()
            .map(|(attr, enc)| {
                check_attr(attr)?;
                Ok((attr.clone(), KeyEncoding::parse(enc)?))
            })
            .collect::<Result<Vec<_>>>()?;
        blocking_keys.push(BlockingKey { id: key.id.clone(), roles, attributes });
    }
    crate::blocking::validate_keys(&blocking_keys, &role_pairs)?;
    let candidates = CandidateOptions {
        census_decade_limit: options.census_decade_limit,
        block_cap: raw_blocking.block_cap,
    };

    // Comparators.
    let comparators = section(raw.comparators, "comparators")?;
    for (attr, spec) in &comparators {
        if !known_attrs.contains(attr.as_str()) {
            return Err(Error::Config(format!(
                "comparator declared for unknown attribute `{attr}`"
            )));
        }
        spec.validate()?;
    }
    if comparators.is_empty() {
        return Err(Error::Config("no attribute comparators declared".into()));
    }

    // Scalar stages.
    let raw_pairwise = section(raw.pairwise, "pairwise")?;
    if !raw_pairwise.s_m.is_finite() || !(0.0..=1.0).contains(&raw_pairwise.s_m) {
        return Err(Error::Config(format!(
            "pairwise.s_m must lie in [0, 1], got {}",
            raw_pairwise.s_m
        )));
    }
    if raw_pairwise.train_sample_size == 0 {
        return Err(Error::Config("pairwise.train_sample_size must be positive".into()));
    }
    let relational_method = section(raw.relational, "relational")?.method;
    let group_method = section(raw.group, "group")?.method;
    let assignment_mode = section(raw.constraints, "constraints")?.mode;
    let raw_fusion = section(raw.fusion, "fusion")?;
    let fusion = FusionParams::new(raw_fusion.w_r, raw_fusion.w_g, raw_fusion.s_t)?;
    let strict_evaluation = section(raw.evaluation, "evaluation")?.strict;

    // Data paths.
    let raw_data = section(raw.data, "data")?;
    let path = |s: &Option<String>| s.as_deref().map(|s| resolve_path(base_dir, s));
    let data = DataPaths {
        births: path(&raw_data.births),
        deaths: path(&raw_data.deaths),
        marriages: path(&raw_data.marriages),
        censuses: path(&raw_data.censuses),
        gold: path(&raw_data.gold),
    };

    if let Some(params) = &raw.synthgen {
        params.validate()?;
    }

    Ok(PipelineConfig {
        seed,
        data,
        ingest,
        vocab,
        role_pairs,
        temporal,
        linkage_types,
        link_constraints,
        blocking_keys,
        candidates,
        comparators,
        missing_value_policy: options.missing_value_policy,
        weighting: options.attribute_weighting,
        train_sample_size: raw_pairwise.train_sample_size,
        s_m: raw_pairwise.s_m,
        relational_method,
        group_method,
        constraints_enabled: options.constraints,
        assignment_mode,
        fusion,
        strict_evaluation,
        synthgen: raw.synthgen,
    })
}
