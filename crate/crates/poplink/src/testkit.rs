//! Small-fixture builders shared by unit tests across modules.

use std::collections::BTreeMap;

use crate::ingest::{IngestReport, ParsedCertificate, ParsedMember, RecordStore};
use crate::model::{CertType, RoleVocabulary};

/// The standard role vocabulary used by test fixtures.
pub fn vocab() -> RoleVocabulary {
    let mut v = RoleVocabulary::default();
    for (ct, name) in [
        (CertType::Birth, "Baby"),
        (CertType::Birth, "Mother"),
        (CertType::Birth, "Father"),
        (CertType::Death, "Deceased"),
        (CertType::Marriage, "Bride"),
        (CertType::Marriage, "Groom"),
        (CertType::Marriage, "BrideMother"),
        (CertType::Census, "Head"),
        (CertType::Census, "Spouse"),
        (CertType::Census, "Child"),
    ] {
        v.add(ct, name).unwrap();
    }
    v
}

/// One member row for [`store_from`]: role name, attribute pairs, entity.
pub type MemberSpec<'a> = (&'a str, &'a [(&'a str, &'a str)], Option<&'a str>);

/// One certificate for [`store_from`].
pub type CertSpec<'a> = (&'a str, CertType, i32, &'a [MemberSpec<'a>]);

/// Build a frozen store from inline certificate descriptions.
pub fn store_from(vocab: &RoleVocabulary, certs: &[CertSpec<'_>]) -> RecordStore {
    let batches = certs
        .iter()
        .map(|(ext_id, cert_type, year, members)| ParsedCertificate {
            ext_id: ext_id.to_string(),
            cert_type: *cert_type,
            event_year: *year,
            members: members
                .iter()
                .map(|(role, attrs, entity)| ParsedMember {
                    role: vocab.lookup(*cert_type, role).unwrap_or_else(|| {
                        panic!("role {role} not valid for {cert_type:?}")
                    }),
                    attributes: attrs
                        .iter()
                        .map(|(k, v)| (k.to_string(), v.to_string()))
                        .collect::<BTreeMap<_, _>>(),
                    entity: entity.map(str::to_string),
                })
                .collect(),
        })
        .collect();
    let mut report = IngestReport::default();
    RecordStore::assemble(batches, vocab, false, &mut report).unwrap()
}
