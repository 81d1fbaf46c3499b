//! Seeded synthetic population generator: simulates individuals through
//! birth, marriage, and death events plus census snapshots, then writes
//! ingest-compatible certificate CSVs, a gold link TSV derived from shared
//! entity ids, and an entity registry. Deliberately simple demographics —
//! the generator exists to exercise the linker, not to model Scotland.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::CertType;

/// Per-field corruption probabilities, applied independently.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorruptionRates {
    /// Single-edit typo (substitution, insertion, or deletion) on each
    /// name field.
    pub typo: f64,
    /// Replace a first name by a nickname from the variant table.
    pub name_variant: f64,
    /// Drop a field value entirely.
    pub missing: f64,
    /// Shift the certificate event year (and, independently, each age) by
    /// up to `year_error_max` years.
    pub year_error: f64,
    pub year_error_max: i32,
}

impl CorruptionRates {
    pub const NONE: CorruptionRates = CorruptionRates {
        typo: 0.0,
        name_variant: 0.0,
        missing: 0.0,
        year_error: 0.0,
        year_error_max: 2,
    };
}

impl Default for CorruptionRates {
    fn default() -> CorruptionRates {
        PopulationParams::default().corruption
    }
}

/// Everything the generator needs; one seed drives the whole run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PopulationParams {
    pub seed: u64,
    pub initial_population: usize,
    pub start_year: i32,
    pub end_year: i32,
    /// Per married couple (wife 18–45) per year.
    pub birth_rate: f64,
    /// Base per person per year; old age adds mortality on top.
    pub death_rate: f64,
    /// Per eligible single woman per year.
    pub marriage_rate: f64,
    pub census_years: Vec<i32>,
    /// Target share of member rows whose first name is one of the five
    /// most common overall. Each gendered pool concentrates twice this
    /// mass on its five heaviest entries, because the two genders split
    /// the population roughly evenly; must therefore be at most 0.5.
    pub name_skew: f64,
    pub corruption: CorruptionRates,
    /// Roles whose appearances do not count towards gold links. Defaults
    /// to informants: they are real people, but a linker configured to
    /// drop informant records could never recover pairs mediated only by
    /// them, so scoring those pairs would just cap recall.
    pub gold_exclude_roles: Vec<String>,
}

impl Default for PopulationParams {
    fn default() -> PopulationParams {
        PopulationParams {
            seed: 1,
            initial_population: 300,
            start_year: 1861,
            end_year: 1901,
            birth_rate: 0.22,
            death_rate: 0.012,
            marriage_rate: 0.10,
            census_years: vec![1861, 1871, 1881, 1891, 1901],
            name_skew: 0.35,
            corruption: CorruptionRates {
                typo: 0.05,
                name_variant: 0.05,
                missing: 0.12,
                year_error: 0.05,
                year_error_max: 2,
            },
            gold_exclude_roles: vec!["Informant".to_string()],
        }
    }
}

impl PopulationParams {
    pub fn validate(&self) -> Result<()> {
        for (name, rate) in [
            ("birth_rate", self.birth_rate),
            ("death_rate", self.death_rate),
            ("marriage_rate", self.marriage_rate),
            ("typo", self.corruption.typo),
            ("name_variant", self.corruption.name_variant),
            ("missing", self.corruption.missing),
            ("year_error", self.corruption.year_error),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::Config(format!("{name} {rate} outside [0, 1]")));
            }
        }
        if !(0.0..=0.5).contains(&self.name_skew) {
            return Err(Error::Config(format!(
                "name_skew {} outside [0, 0.5]",
                self.name_skew
            )));
        }
        if self.initial_population < 10 {
            return Err(Error::Config(format!(
                "initial population {} too small to simulate",
                self.initial_population
            )));
        }
        if self.start_year > self.end_year {
            return Err(Error::Config(format!(
                "year range {}..{} is empty",
                self.start_year, self.end_year
            )));
        }
        for &y in &self.census_years {
            if y < self.start_year || y > self.end_year {
                return Err(Error::Config(format!(
                    "census year {y} outside simulated range {}..{}",
                    self.start_year, self.end_year
                )));
            }
        }
        if self.corruption.year_error_max < 1 {
            return Err(Error::Config("year_error_max must be at least 1".into()));
        }
        Ok(())
    }
}

/// Editable word lists backing the generator; the repository ships
/// 19th-century Isle-of-Skye-flavored defaults.
#[derive(Debug, Clone)]
pub struct NamePools {
    pub first_f: Vec<String>,
    pub first_m: Vec<String>,
    pub last: Vec<String>,
    pub occupations: Vec<String>,
    pub addresses: Vec<String>,
    /// first name → nickname variants.
    pub variants: BTreeMap<String, Vec<String>>,
}

fn lines(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

impl NamePools {
    pub fn builtin() -> NamePools {
        let mut variants: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for line in lines(include_str!("../data/name_variants.tsv")) {
            if let Some((name, variant)) = line.split_once('\t') {
                variants
                    .entry(name.trim().to_string())
                    .or_default()
                    .push(variant.trim().to_string());
            }
        }
        NamePools {
            first_f: lines(include_str!("../data/first_names_f.txt")),
            first_m: lines(include_str!("../data/first_names_m.txt")),
            last: lines(include_str!("../data/last_names.txt")),
            occupations: lines(include_str!("../data/occupations.txt")),
            addresses: lines(include_str!("../data/addresses.txt")),
            variants,
        }
    }
}

/// Pool sampler hitting a target top-5 share: the first five values carry
/// `skew` of the probability mass, the rest split the remainder evenly.
struct SkewedPool {
    values: Vec<String>,
    index: WeightedIndex<f64>,
}

impl SkewedPool {
    fn new(values: &[String], skew: f64) -> Result<SkewedPool> {
        if values.is_empty() {
            return Err(Error::Config("empty name pool".into()));
        }
        let n = values.len();
        let weights: Vec<f64> = if n <= 5 {
            vec![1.0; n]
        } else {
            (0..n)
                .map(|i| if i < 5 { skew / 5.0 } else { (1.0 - skew) / (n - 5) as f64 })
                .collect()
        };
        let index = WeightedIndex::new(&weights)
            .map_err(|e| Error::Config(format!("bad name pool weights: {e}")))?;
        Ok(SkewedPool { values: values.to_vec(), index })
    }

    fn pick<R: Rng>(&self, rng: &mut R) -> String {
        self.values[self.index.sample(rng)].clone()
    }
}

/// One member row of a generated certificate. `entity` is the ground
/// truth and is never corrupted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenMember {
    pub role: &'static str,
    pub entity: usize,
    pub first_name: Option<String>,
    pub last_name: Option<String>,
    pub gender: Option<String>,
    pub age: Option<i32>,
    pub occupation: Option<String>,
    pub address: Option<String>,
}

/// One generated certificate. `true_year` is the uncorrupted event year;
/// `event_year` is what gets written out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenCert {
    pub ext_id: String,
    pub cert_type: CertType,
    pub true_year: i32,
    pub event_year: i32,
    pub members: Vec<GenMember>,
}

/// One line of the entity registry (ground truth per simulated person).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityRow {
    pub id: String,
    pub first_name: String,
    pub last_name: String,
    pub gender: &'static str,
    pub birth_year: i32,
    pub death_year: Option<i32>,
}

/// A full generated population, before serialization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticPopulation {
    pub certificates: Vec<GenCert>,
    /// Canonically ordered external-id pairs of certificates sharing at
    /// least one entity.
    pub gold: BTreeSet<(String, String)>,
    pub entities: Vec<EntityRow>,
}

pub fn entity_ext_id(idx: usize) -> String {
    format!("P{idx:05}")
}

/// Roles emitted per certificate type, in row order.
pub fn role_names(cert_type: CertType) -> &'static [&'static str] {
    match cert_type {
        CertType::Birth => &["Baby", "Mother", "Father", "Informant"],
        CertType::Death => &["Deceased", "Mother", "Father", "Informant"],
        CertType::Marriage => &[
            "Bride",
            "Groom",
            "BrideMother",
            "BrideFather",
            "GroomMother",
            "GroomFather",
            "Informant",
        ],
        CertType::Census => &["Head", "Spouse", "Child"],
    }
}

/// Attribute columns of every generated CSV, after the reserved four.
pub const ATTRIBUTE_COLUMNS: [&str; 6] =
    ["first_name", "last_name", "gender", "age", "occupation", "address"];

/// Replace `value` by a random single-edit neighbor: substitution,
/// insertion, or deletion of one letter (never a transposition, so the
/// Levenshtein distance to the original is exactly 1).
pub fn apply_typo<R: Rng>(value: &str, rng: &mut R) -> String {
    let chars: Vec<char> = value.chars().collect();
    let letter = |rng: &mut R| (b'a' + rng.gen_range(0..26)) as char;
    loop {
        let mut out = chars.clone();
        match rng.gen_range(0..3) {
            0 if !out.is_empty() => {
                let pos = rng.gen_range(0..out.len());
                out[pos] = letter(rng);
            }
            1 => {
                let pos = rng.gen_range(0..=out.len());
                out.insert(pos, letter(rng));
            }
            _ if out.len() > 1 => {
                out.remove(rng.gen_range(0..out.len()));
            }
            _ => continue,
        }
        if out != chars {
            return out.into_iter().collect();
        }
    }
}

/// Corrupt one member's fields in place: nickname substitution first, then
/// typos, then age perturbation, then value deletion (so a value can be
/// both altered and subsequently dropped).
pub fn corrupt_member<R: Rng>(
    member: &mut GenMember,
    rates: &CorruptionRates,
    variants: &BTreeMap<String, Vec<String>>,
    rng: &mut R,
) {
    if let Some(first) = &member.first_name {
        if rng.gen_bool(rates.name_variant) {
            if let Some(options) = variants.get(first) {
                member.first_name = Some(options[rng.gen_range(0..options.len())].clone());
            }
        }
    }
    for name in [&mut member.first_name, &mut member.last_name] {
        if let Some(value) = name {
            if rng.gen_bool(rates.typo) {
                *value = apply_typo(value, rng);
            }
        }
    }
    if let Some(age) = &mut member.age {
        if rng.gen_bool(rates.year_error) {
            let shift = rng.gen_range(1..=rates.year_error_max);
            *age = (*age + if rng.gen_bool(0.5) { shift } else { -shift }).max(0);
        }
    }
    for field in [
        &mut member.first_name,
        &mut member.last_name,
        &mut member.gender,
        &mut member.occupation,
        &mut member.address,
    ] {
        if field.is_some() && rng.gen_bool(rates.missing) {
            *field = None;
        }
    }
    if member.age.is_some() && rng.gen_bool(rates.missing) {
        member.age = None;
    }
}

struct Person {
    first: String,
    /// Last name at birth; the registry records this one.
    maiden: String,
    /// Current last name (changes at marriage for women).
    last: String,
    female: bool,
    birth_year: i32,
    alive: bool,
    death_year: Option<i32>,
    mother: Option<usize>,
    father: Option<usize>,
    spouse: Option<usize>,
    married: bool,
    occupation: Option<String>,
    address: String,
}

struct Generator<'a> {
    params: &'a PopulationParams,
    pools: &'a NamePools,
    first_f: SkewedPool,
    first_m: SkewedPool,
    last: SkewedPool,
    rng: ChaCha8Rng,
    people: Vec<Person>,
    certs: Vec<GenCert>,
    counters: BTreeMap<CertType, usize>,
    /// Alive adults, rebuilt each year, for informant sampling.
    adults: Vec<usize>,
}

impl<'a> Generator<'a> {
    fn new(params: &'a PopulationParams, pools: &'a NamePools) -> Result<Generator<'a>> {
        let per_gender_skew = 2.0 * params.name_skew;
        Ok(Generator {
            params,
            pools,
            first_f: SkewedPool::new(&pools.first_f, per_gender_skew)?,
            first_m: SkewedPool::new(&pools.first_m, per_gender_skew)?,
            last: SkewedPool::new(&pools.last, params.name_skew)?,
            rng: ChaCha8Rng::seed_from_u64(params.seed),
            people: Vec::new(),
            certs: Vec::new(),
            counters: BTreeMap::new(),
            adults: Vec::new(),
        })
    }

    fn age(&self, idx: usize, year: i32) -> i32 {
        year - self.people[idx].birth_year
    }

    fn pick_first(&mut self, female: bool) -> String {
        if female {
            self.first_f.pick(&mut self.rng)
        } else {
            self.first_m.pick(&mut self.rng)
        }
    }

    fn pick_from<'v>(&mut self, values: &'v [String]) -> &'v str {
        &values[self.rng.gen_range(0..values.len())]
    }

    fn seed_population(&mut self) {
        for _ in 0..self.params.initial_population {
            let female = self.rng.gen_bool(0.5);
            let first = self.pick_first(female);
            let last = self.last.pick(&mut self.rng);
            let age = self.rng.gen_range(1..=60);
            let address = self.pick_from(&self.pools.addresses).to_string();
            self.people.push(Person {
                first,
                maiden: last.clone(),
                last,
                female,
                birth_year: self.params.start_year - age,
                alive: true,
                death_year: None,
                mother: None,
                father: None,
                spouse: None,
                married: false,
                occupation: None,
                address,
            });
        }
    }

    fn ensure_occupation(&mut self, idx: usize, year: i32) {
        if self.people[idx].occupation.is_none() && self.age(idx, year) >= 16 {
            let occ = self.pick_from(&self.pools.occupations).to_string();
            self.people[idx].occupation = Some(occ);
        }
    }

    fn member(&mut self, role: &'static str, idx: usize, year: i32) -> GenMember {
        self.ensure_occupation(idx, year);
        let p = &self.people[idx];
        let mut m = GenMember {
            role,
            entity: idx,
            first_name: Some(p.first.clone()),
            last_name: Some(p.last.clone()),
            gender: Some(if p.female { "f" } else { "m" }.to_string()),
            age: Some((year - p.birth_year).max(0)),
            occupation: p.occupation.clone(),
            address: Some(p.address.clone()),
        };
        corrupt_member(&mut m, &self.params.corruption, &self.pools.variants, &mut self.rng);
        m
    }

    fn push_cert(&mut self, cert_type: CertType, year: i32, members: Vec<GenMember>) {
        debug_assert!(
            members
                .iter()
                .map(|m| m.entity)
                .collect::<BTreeSet<_>>()
                .len()
                == members.len(),
            "certificate members must be distinct entities"
        );
        let counter = self.counters.entry(cert_type).or_insert(0);
        *counter += 1;
        let prefix = match cert_type {
            CertType::Birth => "B",
            CertType::Death => "D",
            CertType::Marriage => "M",
            CertType::Census => "C",
        };
        let event_year = if cert_type != CertType::Census
            && self.rng.gen_bool(self.params.corruption.year_error)
        {
            let shift = self.rng.gen_range(1..=self.params.corruption.year_error_max);
            year + if self.rng.gen_bool(0.5) { shift } else { -shift }
        } else {
            year
        };
        self.certs.push(GenCert {
            ext_id: format!("{prefix}{counter:05}"),
            cert_type,
            true_year: year,
            event_year,
            members,
        });
    }

    fn informant(&mut self, exclude: &BTreeSet<usize>) -> Option<usize> {
        for _ in 0..16 {
            if self.adults.is_empty() {
                return None;
            }
            let idx = self.adults[self.rng.gen_range(0..self.adults.len())];
            if !exclude.contains(&idx) && self.people[idx].alive {
                return Some(idx);
            }
        }
        None
    }

    fn refresh_adults(&mut self, year: i32) {
        self.adults = (0..self.people.len())
            .filter(|&i| self.people[i].alive && self.age(i, year) >= 18)
            .collect();
    }

    fn siblings(&self, a: usize, b: usize) -> bool {
        let (pa, pb) = (&self.people[a], &self.people[b]);
        (pa.mother.is_some() && pa.mother == pb.mother)
            || (pa.father.is_some() && pa.father == pb.father)
    }

    fn marriages(&mut self, year: i32) {
        let women: Vec<usize> = (0..self.people.len())
            .filter(|&i| {
                let p = &self.people[i];
                p.female && p.alive && !p.married && (18..=45).contains(&self.age(i, year))
            })
            .collect();
        let mut men: Vec<usize> = (0..self.people.len())
            .filter(|&i| {
                let p = &self.people[i];
                !p.female && p.alive && !p.married && (18..=50).contains(&self.age(i, year))
            })
            .collect();
        for w in women {
            if men.is_empty() {
                break;
            }
            if !self.rng.gen_bool(self.params.marriage_rate) {
                continue;
            }
            let mut chosen = None;
            for _ in 0..8 {
                let slot = self.rng.gen_range(0..men.len());
                if !self.siblings(w, men[slot]) {
                    chosen = Some(slot);
                    break;
                }
            }
            let Some(slot) = chosen else { continue };
            let m = men.swap_remove(slot);

            // The certificate records the bride under her maiden name.
            let mut members = vec![self.member("Bride", w, year), self.member("Groom", m, year)];
            let mut present: BTreeSet<usize> = BTreeSet::from([w, m]);
            for (role, parent) in [
                ("BrideMother", self.people[w].mother),
                ("BrideFather", self.people[w].father),
                ("GroomMother", self.people[m].mother),
                ("GroomFather", self.people[m].father),
            ] {
                if let Some(p) = parent {
                    if present.insert(p) {
                        members.push(self.member(role, p, year));
                    }
                }
            }
            if let Some(inf) = self.informant(&present) {
                members.push(self.member("Informant", inf, year));
            }
            self.push_cert(CertType::Marriage, year, members);

            self.people[w].married = true;
            self.people[m].married = true;
            self.people[w].spouse = Some(m);
            self.people[m].spouse = Some(w);
            self.people[w].last = self.people[m].last.clone();
            self.people[w].address = self.people[m].address.clone();
        }
    }

    fn births(&mut self, year: i32) {
        for w in 0..self.people.len() {
            let p = &self.people[w];
            if !(p.female && p.alive && p.married) || !(18..=45).contains(&self.age(w, year)) {
                continue;
            }
            let Some(h) = p.spouse else { continue };
            if !self.people[h].alive || !self.rng.gen_bool(self.params.birth_rate) {
                continue;
            }
            let female = self.rng.gen_bool(0.5);
            let first = self.pick_first(female);
            let child = self.people.len();
            self.people.push(Person {
                first,
                maiden: self.people[h].last.clone(),
                last: self.people[h].last.clone(),
                female,
                birth_year: year,
                alive: true,
                death_year: None,
                mother: Some(w),
                father: Some(h),
                spouse: None,
                married: false,
                occupation: None,
                address: self.people[w].address.clone(),
            });
            let members = vec![
                self.member("Baby", child, year),
                self.member("Mother", w, year),
                self.member("Father", h, year),
            ];
            let mut members = members;
            if let Some(inf) = self.informant(&BTreeSet::from([child, w, h])) {
                members.push(self.member("Informant", inf, year));
            }
            self.push_cert(CertType::Birth, year, members);
        }
    }

    fn deaths(&mut self, year: i32) {
        for i in 0..self.people.len() {
            if !self.people[i].alive {
                continue;
            }
            let age = self.age(i, year);
            let mut p = self.params.death_rate;
            if age == 0 {
                p += 0.06;
            }
            if age >= 65 {
                p += 0.08;
            }
            if age >= 80 {
                p += 0.25;
            }
            if !self.rng.gen_bool(p.min(0.9)) {
                continue;
            }
            let mut members = vec![self.member("Deceased", i, year)];
            let mut present = BTreeSet::from([i]);
            for (role, parent) in [("Mother", self.people[i].mother), ("Father", self.people[i].father)]
            {
                if let Some(par) = parent {
                    if present.insert(par) {
                        members.push(self.member(role, par, year));
                    }
                }
            }
            let spouse_alive = self.people[i].spouse.filter(|&s| self.people[s].alive);
            let informant = match spouse_alive {
                Some(s) if !present.contains(&s) => Some(s),
                _ => self.informant(&present),
            };
            if let Some(inf) = informant {
                members.push(self.member("Informant", inf, year));
            }
            self.push_cert(CertType::Death, year, members);

            self.people[i].alive = false;
            self.people[i].death_year = Some(year);
            if let Some(s) = self.people[i].spouse {
                self.people[s].married = false;
                self.people[s].spouse = None;
            }
        }
    }

    fn census(&mut self, year: i32) {
        let mut visited = vec![false; self.people.len()];
        for i in 0..self.people.len() {
            if !self.people[i].alive || visited[i] {
                continue;
            }
            let couple = self.people[i]
                .spouse
                .filter(|&s| self.people[i].married && self.people[s].alive && !visited[s]);
            let (head, spouse) = match couple {
                Some(s) if self.people[i].female => (s, Some(i)),
                Some(s) => (i, Some(s)),
                None => (i, None),
            };
            visited[head] = true;
            let mut members = vec![self.member("Head", head, year)];
            if let Some(s) = spouse {
                visited[s] = true;
                members.push(self.member("Spouse", s, year));
            }
            let parents: BTreeSet<usize> =
                [Some(head), spouse].into_iter().flatten().collect();
            for c in 0..self.people.len() {
                let child = &self.people[c];
                if child.alive
                    && !visited[c]
                    && !child.married
                    && self.age(c, year) < 18
                    && (child.mother.is_some_and(|m| parents.contains(&m))
                        || child.father.is_some_and(|f| parents.contains(&f)))
                {
                    visited[c] = true;
                    members.push(self.member("Child", c, year));
                }
            }
            self.push_cert(CertType::Census, year, members);
        }
    }

    fn run(mut self) -> SyntheticPopulation {
        self.seed_population();
        for year in self.params.start_year..=self.params.end_year {
            self.refresh_adults(year);
            self.marriages(year);
            self.births(year);
            self.deaths(year);
            if self.params.census_years.contains(&year) {
                self.census(year);
            }
        }

        let excluded: BTreeSet<&str> =
            self.params.gold_exclude_roles.iter().map(String::as_str).collect();
        let mut by_entity: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
        for (ci, cert) in self.certs.iter().enumerate() {
            for m in &cert.members {
                if excluded.contains(m.role) {
                    continue;
                }
                by_entity.entry(m.entity).or_default().insert(ci);
            }
        }
        let mut gold = BTreeSet::new();
        for certs in by_entity.values() {
            let list: Vec<usize> = certs.iter().copied().collect();
            for (i, &a) in list.iter().enumerate() {
                for &b in &list[i + 1..] {
                    let (x, y) = (self.certs[a].ext_id.clone(), self.certs[b].ext_id.clone());
                    gold.insert(if x < y { (x, y) } else { (y, x) });
                }
            }
        }
        let entities = self
            .people
            .iter()
            .enumerate()
            .map(|(i, p)| EntityRow {
                id: entity_ext_id(i),
                first_name: p.first.clone(),
                last_name: p.maiden.clone(),
                gender: if p.female { "f" } else { "m" },
                birth_year: p.birth_year,
                death_year: p.death_year,
            })
            .collect();
        SyntheticPopulation { certificates: self.certs, gold, entities }
    }
}

/// Simulate a population. Deterministic per `params.seed`.
pub fn synthesize(params: &PopulationParams, pools: &NamePools) -> Result<SyntheticPopulation> {
    params.validate()?;
    Ok(Generator::new(params, pools)?.run())
}

/// File names written by [`write_population`].
pub const CERTIFICATE_FILES: [(CertType, &str); 4] = [
    (CertType::Birth, "births.csv"),
    (CertType::Death, "deaths.csv"),
    (CertType::Marriage, "marriages.csv"),
    (CertType::Census, "censuses.csv"),
];
pub const GOLD_FILE: &str = "gold_links.tsv";
pub const ENTITY_FILE: &str = "entities.tsv";

/// Write one CSV per certificate type plus the gold link TSV and the
/// entity registry into `dir`.
pub fn write_population(pop: &SyntheticPopulation, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (cert_type, file) in CERTIFICATE_FILES {
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(dir.join(file))?));
        let mut header = vec!["certificate_id", "event_year", "role", "entity_id"];
        header.extend(ATTRIBUTE_COLUMNS);
        w.write_record(&header)?;
        for cert in pop.certificates.iter().filter(|c| c.cert_type == cert_type) {
            for m in &cert.members {
                let opt = |v: &Option<String>| v.clone().unwrap_or_default();
                w.write_record([
                    cert.ext_id.clone(),
                    cert.event_year.to_string(),
                    m.role.to_string(),
                    entity_ext_id(m.entity),
                    opt(&m.first_name),
                    opt(&m.last_name),
                    opt(&m.gender),
                    m.age.map(|a| a.to_string()).unwrap_or_default(),
                    opt(&m.occupation),
                    opt(&m.address),
                ])?;
            }
        }
        w.flush()?;
    }
    let mut gold = BufWriter::new(File::create(dir.join(GOLD_FILE))?);
    writeln!(gold, "cert_id_1\tcert_id_2")?;
    for (a, b) in &pop.gold {
        writeln!(gold, "{a}\t{b}")?;
    }
    gold.flush()?;
    let mut reg = BufWriter::new(File::create(dir.join(ENTITY_FILE))?);
    writeln!(reg, "entity_id\tfirst_name\tlast_name\tgender\tbirth_year\tdeath_year")?;
    for e in &pop.entities {
        writeln!(
            reg,
            "{}\t{}\t{}\t{}\t{}\t{}",
            e.id,
            e.first_name,
            e.last_name,
            e.gender,
            e.birth_year,
            e.death_year.map(|y| y.to_string()).unwrap_or_default()
        )?;
    }
    reg.flush()?;
    Ok(())
}

/// Simulate and write in one step, returning the population for
/// inspection.
pub fn generate(params: &PopulationParams, dir: &Path) -> Result<SyntheticPopulation> {
    let pools = NamePools::builtin();
    let pop = synthesize(params, &pools)?;
    write_population(&pop, dir)?;
    Ok(pop)
}

/// Share of simulated individuals carrying one of the five most common
/// first names, measured over the entity registry (one vote per person,
/// uncorrupted names).
pub fn top5_first_name_share(pop: &SyntheticPopulation) -> f64 {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for e in &pop.entities {
        *counts.entry(e.first_name.as_str()).or_default() += 1;
    }
    if pop.entities.is_empty() {
        return 0.0;
    }
    let mut tallies: Vec<usize> = counts.into_values().collect();
    tallies.sort_unstable_by(|a, b| b.cmp(a));
    tallies.iter().take(5).sum::<usize>() as f64 / pop.entities.len() as f64
}
