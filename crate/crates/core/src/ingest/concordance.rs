//! SIC to CPA prefix concordance.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use crate::error::{Error, Result};
use crate::flow::{FlowRecord, IndustryCode, Scheme, UNCLASSIFIED};

/// What to do with a SIC code that no rule matches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DefaultPolicy {
    Reject,
    Unclassified,
}

/// Prefix rules mapping granular SIC codes onto CPA product classes.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcordanceTable {
    rules: BTreeMap<String, IndustryCode>,
    default_policy: DefaultPolicy,
}

impl ConcordanceTable {
    pub fn new(rules: impl IntoIterator<Item = (String, IndustryCode)>, default_policy: DefaultPolicy) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (prefix, target) in rules {
            if !(2..=5).contains(&prefix.len()) || !prefix.bytes().all(|b| b.is_ascii_digit()) {
                return Err(Error::Validation(format!("concordance prefix {prefix:?} must be 2-5 digits")));
            }
            if target.scheme() != Scheme::Cpa105 {
                return Err(Error::Validation(format!("concordance target {target} is not a CPA code")));
            }
            if map.insert(prefix.clone(), target).is_some() {
                return Err(Error::Validation(format!("duplicate concordance prefix {prefix}")));
            }
        }
        Ok(ConcordanceTable { rules: map, default_policy })
    }

    pub fn default_policy(&self) -> DefaultPolicy {
        self.default_policy
    }

    pub fn with_policy(mut self, policy: DefaultPolicy) -> Self {
        self.default_policy = policy;
        self
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Target of the longest rule prefix matching `sic`.
    pub fn lookup(&self, sic: &str) -> Option<&IndustryCode> {
        (2..=sic.len().min(5)).rev().find_map(|len| self.rules.get(&sic[..len]))
    }

    fn map_code(&self, code: &IndustryCode, unmatched: &mut BTreeSet<String>) -> Option<IndustryCode> {
        if code.scheme() == Scheme::Cpa105 {
            return Some(code.clone());
        }
        match self.lookup(code.as_str()) {
            Some(target) => Some(target.clone()),
            None => match self.default_policy {
                DefaultPolicy::Unclassified => {
                    Some(IndustryCode::new(Scheme::Cpa105, UNCLASSIFIED).expect("valid CPA code"))
                }
                DefaultPolicy::Reject => {
                    unmatched.insert(code.as_str().to_string());
                    None
                }
            },
        }
    }

    /// Relabel SIC codes with their CPA class. Weights are never touched.
    pub fn apply(&self, records: &[FlowRecord]) -> Result<Vec<FlowRecord>> {
        let mut unmatched = BTreeSet::new();
        let mut out = Vec::with_capacity(records.len());
        for r in records {
            let payer = self.map_code(&r.payer, &mut unmatched);
            let payee = self.map_code(&r.payee, &mut unmatched);
            if let (Some(payer), Some(payee)) = (payer, payee) {
                out.push(FlowRecord { payer, payee, ..r.clone() });
            }
        }
        if !unmatched.is_empty() {
            return Err(Error::Mapping { codes: unmatched.into_iter().collect() });
        }
        Ok(out)
    }
}

/// Map every record's SIC codes through `table` by longest-prefix match.
pub fn apply_concordance(records: &[FlowRecord], table: &ConcordanceTable) -> Result<Vec<FlowRecord>> {
    table.apply(records)
}

/// Parse a `sic_prefix,cpa_code` CSV.
pub fn parse_concordance<R: Read>(reader: R, default_policy: DefaultPolicy) -> Result<ConcordanceTable> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::Parse { line: 1, message: e.to_string() })?.clone();
    if headers.iter().collect::<Vec<_>>() != ["sic_prefix", "cpa_code"] {
        return Err(Error::Schema(format!(
            "concordance header must be `sic_prefix,cpa_code`, found `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rules = Vec::new();
    let mut seen = BTreeSet::new();
    for row in rdr.records() {
        let row = row
            .map_err(|e| Error::Parse { line: e.position().map(|p| p.line()).unwrap_or(0), message: e.to_string() })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let bad = |message: String| Error::Parse { line, message };
        let prefix = row.get(0).unwrap_or_default().to_string();
        let target = row.get(1).unwrap_or_default();
        if !(2..=5).contains(&prefix.len()) || !prefix.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad(format!("prefix {prefix:?} must be 2-5 digits")));
        }
        if !seen.insert(prefix.clone()) {
            return Err(bad(format!("duplicate prefix {prefix}")));
        }
        let target = IndustryCode::new(Scheme::Cpa105, target).map_err(|e| bad(e.to_string()))?;
        rules.push((prefix, target));
    }
    ConcordanceTable::new(rules, default_policy)
}

/// SIC 2007 divisions grouped by the CPA 2.1 section letter they belong to.
const SECTION_DIVISIONS: &[(char, &[&str])] = &[
    ('A', &["01", "02", "03"]),
    ('B', &["05", "06", "07", "08", "09"]),
    (
        'C',
        &[
            "10", "11", "12", "13", "14", "15", "16", "17", "18", "19", "20", "21", "22", "23", "24", "25", "26", "27",
            "28", "29", "30", "31", "32", "33",
        ],
    ),
    ('D', &["35"]),
    ('E', &["36", "37", "38", "39"]),
    ('F', &["41", "42", "43"]),
    ('G', &["45", "46", "47"]),
    ('H', &["49", "50", "51", "52", "53"]),
    ('I', &["55", "56"]),
    ('J', &["58", "59", "60", "61", "62", "63"]),
    ('K', &["64", "65", "66"]),
    ('L', &["68"]),
    ('M', &["69", "70", "71", "72", "73", "74", "75"]),
    ('N', &["77", "78", "79", "80", "81", "82"]),
    ('O', &["84"]),
    ('P', &["85"]),
    ('Q', &["86", "87", "88"]),
    ('R', &["90", "91", "92", "93"]),
    ('S', &["94", "95", "96"]),
    ('T', &["97", "98"]),
    ('U', &["99"]),
];

/// Division-level concordance: each 2-digit SIC 2007 division maps to the CPA
/// division with the same number, prefixed by its section letter (`64` -> `K64`).
///
/// The 105-class analytical tables split some divisions further; supply a full
/// concordance file for those.
pub fn division_concordance(default_policy: DefaultPolicy) -> ConcordanceTable {
    let rules = SECTION_DIVISIONS.iter().flat_map(|(section, divisions)| {
        divisions.iter().map(move |d| {
            (d.to_string(), IndustryCode::new(Scheme::Cpa105, format!("{section}{d}")).expect("valid CPA code"))
        })
    });
    ConcordanceTable::new(rules, default_policy).expect("built-in concordance is valid")
}
