//! Attribute-level similarity functions and phonetic encoders used by
//! blocking and pair-wise linkage.
//!
//! All similarity functions are symmetric, return values in `[0, 1]`, and
//! score identical inputs as 1. The phonetic encoders (Soundex, Double
//! Metaphone) are deterministic and case-insensitive; non-ASCII letters are
//! transliterated to ASCII before encoding because the rule tables are
//! ASCII-defined.

use rphonetic::{DoubleMetaphone, Encoder, Soundex};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A similarity value in `[0, 1]`: 1 for identical inputs, 0 for maximally
/// different ones. Every function in this module upholds the range.
pub type SimilarityScore = f64;

/// Levenshtein edit distance (unit costs), over Unicode scalar values.
pub fn levenshtein_distance(s1: &str, s2: &str) -> usize {
    strsim::levenshtein(s1, s2)
}

/// Edit-distance similarity: `1 − dist / max(len)`. Two empty strings are
/// identical, hence 1.
pub fn levenshtein_sim(s1: &str, s2: &str) -> SimilarityScore {
    let max_len = s1.chars().count().max(s2.chars().count());
    if max_len == 0 {
        return 1.0;
    }
    1.0 - levenshtein_distance(s1, s2) as f64 / max_len as f64
}

/// Jaro similarity (match-window and transposition rules as in the
/// classical definition).
pub fn jaro_sim(s1: &str, s2: &str) -> SimilarityScore {
    strsim::jaro(s1, s2)
}

/// Maximum admissible Jaro-Winkler prefix weight (keeps scores ≤ 1 with the
/// 4-character prefix cap).
pub const MAX_PREFIX_WEIGHT: f64 = 0.25;

/// Validate a Jaro-Winkler prefix weight at configuration load.
pub fn validate_prefix_weight(w: f64) -> Result<()> {
    if !w.is_finite() || !(0.0..=MAX_PREFIX_WEIGHT).contains(&w) {
        return Err(Error::Config(format!(
            "jaro_winkler prefix weight {w} outside [0, {MAX_PREFIX_WEIGHT}]"
        )));
    }
    Ok(())
}

/// Jaro-Winkler similarity: Jaro boosted by the common prefix (length
/// capped at 4) scaled by `prefix_weight`. The weight must pass
/// [`validate_prefix_weight`]; configuration load enforces this.
pub fn jaro_winkler_sim(s1: &str, s2: &str, prefix_weight: f64) -> SimilarityScore {
    debug_assert!(validate_prefix_weight(prefix_weight).is_ok());
    let jaro = jaro_sim(s1, s2);
    let prefix = s1
        .chars()
        .zip(s2.chars())
        .take(4)
        .take_while(|(a, b)| a == b)
        .count();
    jaro + prefix_weight * prefix as f64 * (1.0 - jaro)
}

/// Approximate year similarity: linear decay `max(0, 1 − |Δ| / d_max)`.
pub fn year_diff_sim(y1: i32, y2: i32, d_max: u32) -> SimilarityScore {
    debug_assert!(d_max > 0);
    let delta = (i64::from(y1) - i64::from(y2)).unsigned_abs();
    (1.0 - delta as f64 / f64::from(d_max)).max(0.0)
}

/// Categorical equality after case-folding.
pub fn exact_sim(v1: &str, v2: &str) -> SimilarityScore {
    if v1.to_lowercase() == v2.to_lowercase() {
        1.0
    } else {
        0.0
    }
}

/// Fold common Latin diacritics to ASCII and drop any other non-ASCII
/// character. 19th-century transcriptions are ASCII-dominant; this keeps
/// the occasional accented vowel usable by the ASCII-defined encoders.
pub fn transliterate(s: &str) -> String {
    if s.is_ascii() {
        return s.to_string();
    }
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        if c.is_ascii() {
            out.push(c);
            continue;
        }
        out.push_str(match c {
            'à' | 'á' | 'â' | 'ã' | 'ä' | 'å' => "a",
            'À' | 'Á' | 'Â' | 'Ã' | 'Ä' | 'Å' => "A",
            'æ' => "ae",
            'Æ' => "AE",
            'ç' => "c",
            'Ç' => "C",
            'è' | 'é' | 'ê' | 'ë' => "e",
            'È' | 'É' | 'Ê' | 'Ë' => "E",
            'ì' | 'í' | 'î' | 'ï' => "i",
            'Ì' | 'Í' | 'Î' | 'Ï' => "I",
            'ñ' => "n",
            'Ñ' => "N",
            'ò' | 'ó' | 'ô' | 'õ' | 'ö' | 'ø' => "o",
            'Ò' | 'Ó' | 'Ô' | 'Õ' | 'Ö' | 'Ø' => "O",
            'ù' | 'ú' | 'û' | 'ü' => "u",
            'Ù' | 'Ú' | 'Û' | 'Ü' => "U",
            'ý' | 'ÿ' => "y",
            'Ý' => "Y",
            'ß' => "ss",
            'þ' | 'Þ' => "th",
            'ð' | 'Ð' => "d",
            _ => "",
        });
    }
    out
}

/// Standard 4-character American Soundex (letter + 3 digits, zero-padded).
///
/// Same-coded consonants separated by `h`/`w` are coded once; separated by
/// a vowel they are coded twice. Empty input (or input with no letters)
/// yields the empty code.
pub fn soundex(s: &str) -> String {
    Soundex::default().encode(&transliterate(s))
}

/// Double Metaphone primary code, for blocking-key encodings.
pub fn double_metaphone_primary(s: &str) -> String {
    let input = transliterate(s);
    DoubleMetaphone::default().encode(&input)
}

/// Double Metaphone phonetic encoding: `(primary, alternate)` codes of up
/// to four characters. The alternate equals the primary when no rule forks
/// (e.g. "Robertson" → `("RPRT", "RPRT")`); it differs where the rule set
/// recognizes variant pronunciations ("Smith" → `("SM0", "XMT")`).
pub fn double_metaphone(s: &str) -> (String, String) {
    let input = transliterate(s);
    let dm = DoubleMetaphone::default();
    (dm.encode(&input), dm.encode_alternate(&input))
}

fn default_prefix_weight() -> f64 {
    0.1
}

fn default_d_max() -> u32 {
    10
}

/// Configured comparator for one attribute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ComparatorSpec {
    Exact,
    Levenshtein,
    JaroWinkler {
        #[serde(default = "default_prefix_weight")]
        prefix_weight: f64,
    },
    YearDiff {
        #[serde(default = "default_d_max")]
        d_max: u32,
    },
}

impl ComparatorSpec {
    /// Parameter validation, run once at configuration load.
    pub fn validate(&self) -> Result<()> {
        match *self {
            ComparatorSpec::JaroWinkler { prefix_weight } => validate_prefix_weight(prefix_weight),
            ComparatorSpec::YearDiff { d_max } => {
                if d_max == 0 {
                    Err(Error::Config("year_diff d_max must be positive".into()))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Compare two present attribute values.
    pub fn compare(&self, a: &str, b: &str) -> SimilarityScore {
        match *self {
            ComparatorSpec::Exact => exact_sim(a, b),
            ComparatorSpec::Levenshtein => levenshtein_sim(a, b),
            ComparatorSpec::JaroWinkler { prefix_weight } => jaro_winkler_sim(a, b, prefix_weight),
            ComparatorSpec::YearDiff { d_max } => match (a.parse::<i32>(), b.parse::<i32>()) {
                (Ok(y1), Ok(y2)) => year_diff_sim(y1, y2, d_max),
                // A non-numeric year survived cleaning: no evidence.
                _ => 0.0,
            },
        }
    }
}
