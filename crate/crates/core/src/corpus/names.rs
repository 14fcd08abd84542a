//! Author name normalization and atomic name variates.
//!
//! A raw author string such as `"Bing Li 0001"` is split on whitespace. A
//! trailing token of exactly four ASCII digits is the disambiguation suffix
//! used by bibliographic sources to tell homonymous authors apart: it stays in
//! the identity key and is stripped from the display name.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NameError {
    #[error("author name is empty")]
    Empty,
    #[error("author name {0:?} has no last-name token")]
    NoLastName(String),
}

/// One author occurrence as written in a record.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct AuthorRef {
    pub raw: String,
    pub author_key: String,
    pub display_name: String,
    pub first: String,
    pub middle: Vec<String>,
    pub last: String,
}

impl AuthorRef {
    pub fn parse(raw: &str) -> Result<Self, NameError> {
        parse_author_name(raw)
    }

    pub fn variate(&self) -> AtomicNameVariate {
        atomic_name_variate(self)
    }

    /// Single-token names cannot yield an initial and never act as targets.
    pub fn is_single_token(&self) -> bool {
        self.first.is_empty()
    }
}

impl TryFrom<String> for AuthorRef {
    type Error = NameError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        parse_author_name(&value)
    }
}

impl From<AuthorRef> for String {
    fn from(value: AuthorRef) -> Self {
        value.raw
    }
}

fn is_suffix(token: &str) -> bool {
    token.len() == 4 && token.bytes().all(|b| b.is_ascii_digit())
}

/// Split a raw author string into its name parts.
pub fn parse_author_name(raw: &str) -> Result<AuthorRef, NameError> {
    let tokens: Vec<&str> = raw.split_whitespace().collect();
    if tokens.is_empty() {
        return Err(NameError::Empty);
    }
    let mut name_tokens = &tokens[..];
    while let Some((last, rest)) = name_tokens.split_last() {
        if !is_suffix(last) {
            break;
        }
        name_tokens = rest;
    }
    let display_name = name_tokens.join(" ");
    let author_key = tokens.join(" ");
    let (first, middle, last) = match name_tokens {
        [] => return Err(NameError::NoLastName(raw.to_string())),
        [only] => (String::new(), Vec::new(), (*only).to_string()),
        [first, mid @ .., last] => (
            (*first).to_string(),
            mid.iter().map(|s| (*s).to_string()).collect(),
            (*last).to_string(),
        ),
    };
    Ok(AuthorRef {
        raw: raw.trim().to_string(),
        author_key,
        display_name,
        first,
        middle,
        last,
    })
}

/// First initial plus last name, e.g. `"L Wang"`: the blocking key.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AtomicNameVariate {
    value: String,
    degenerate: bool,
}

impl AtomicNameVariate {
    pub fn as_str(&self) -> &str {
        &self.value
    }

    /// True when the name had no first-name initial (single-token names).
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// Interpret an already-atomic string such as `"Y Wang"`.
    pub fn from_variate_str(s: &str) -> Result<Self, NameError> {
        Ok(parse_author_name(s)?.variate())
    }
}

impl fmt::Display for AtomicNameVariate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.value)
    }
}

/// Uppercased first letter of the first name (periods ignored). Letters
/// whose uppercase form is several characters (`ß`) are kept as written so
/// that derivation stays idempotent.
pub fn first_initial(first: &str) -> Option<String> {
    let c = first.chars().find(|c| *c != '.')?;
    let mut upper = c.to_uppercase();
    Some(match (upper.next(), upper.next()) {
        (Some(u), None) => u.to_string(),
        _ => c.to_string(),
    })
}

pub fn atomic_name_variate(name: &AuthorRef) -> AtomicNameVariate {
    match first_initial(&name.first) {
        Some(initial) => AtomicNameVariate {
            value: format!("{initial} {}", name.last),
            degenerate: false,
        },
        None => AtomicNameVariate {
            value: name.last.clone(),
            degenerate: true,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suffix_is_kept_in_key_and_stripped_from_display() {
        let a = parse_author_name("Bing Li 0001").unwrap();
        assert_eq!(a.author_key, "Bing Li 0001");
        assert_eq!(a.display_name, "Bing Li");
        assert_eq!(a.first, "Bing");
        assert_eq!(a.last, "Li");
        assert!(a.middle.is_empty());
    }

    #[test]
    fn plain_name() {
        let a = parse_author_name("Rachid Deriche").unwrap();
        assert_eq!(a.first, "Rachid");
        assert_eq!(a.last, "Deriche");
        assert_eq!(a.author_key, "Rachid Deriche");
        assert_eq!(a.display_name, "Rachid Deriche");
    }

    #[test]
    fn middle_initials() {
        let a = parse_author_name("J. M. Lee").unwrap();
        assert_eq!(a.first, "J.");
        assert_eq!(a.middle, vec!["M.".to_string()]);
        assert_eq!(a.last, "Lee");
        assert_eq!(a.variate().as_str(), "J Lee");
    }

    #[test]
    fn whitespace_is_collapsed() {
        let a = parse_author_name("  Lei \t Wang  ").unwrap();
        assert_eq!(a.author_key, "Lei Wang");
        assert_eq!(a.raw, "Lei \t Wang");
    }

    #[test]
    fn single_token_is_last_name_only() {
        let a = parse_author_name("Madonna").unwrap();
        assert_eq!(a.first, "");
        assert_eq!(a.last, "Madonna");
        assert!(a.is_single_token());
        let v = a.variate();
        assert!(v.is_degenerate());
        assert_eq!(v.as_str(), "Madonna");
    }

    #[test]
    fn suffix_only_name_rejected() {
        assert!(matches!(parse_author_name("0001"), Err(NameError::NoLastName(_))));
        let a = parse_author_name("Bing 0001 0002").unwrap();
        assert_eq!(a.display_name, "Bing");
        assert_eq!(a.author_key, "Bing 0001 0002");
    }

    #[test]
    fn five_digit_token_is_not_a_suffix() {
        let a = parse_author_name("Bing Li 00011").unwrap();
        assert_eq!(a.last, "00011");
        assert_eq!(a.display_name, "Bing Li 00011");
    }

    #[test]
    fn empty_name_rejected() {
        assert_eq!(parse_author_name("   "), Err(NameError::Empty));
    }

    #[test]
    fn variates() {
        let v = |s: &str| parse_author_name(s).unwrap().variate().as_str().to_string();
        assert_eq!(v("Lei Wang"), "L Wang");
        assert_eq!(v("L Wang"), "L Wang");
        assert_eq!(v("José García"), "J García");
        assert_eq!(v("élodie Brun"), "É Brun");
        assert_eq!(v("Jean-Pierre Dupont-Moretti"), "J Dupont-Moretti");
        assert_eq!(v("Y. Wang 0003"), "Y Wang");
    }

    #[test]
    fn serde_uses_raw_string() {
        let a = parse_author_name("Bing Li 0002").unwrap();
        let json = serde_json::to_string(&a).unwrap();
        assert_eq!(json, "\"Bing Li 0002\"");
        let back: AuthorRef = serde_json::from_str(&json).unwrap();
        assert_eq!(back, a);
    }

    proptest::proptest! {
        #[test]
        fn variate_derivation_is_idempotent(first in "[A-Za-zÀ-ÿ.]{1,8}", last in "[A-Za-z-]{1,10}") {
            let once = parse_author_name(&format!("{first} {last}")).unwrap().variate();
            proptest::prop_assume!(!once.is_degenerate());
            let twice = AtomicNameVariate::from_variate_str(once.as_str()).unwrap();
            proptest::prop_assert_eq!(once, twice);
        }

        #[test]
        fn display_name_never_ends_in_suffix(tokens in proptest::collection::vec("[A-Za-z0-9]{1,5}", 1..5)) {
            if let Ok(a) = parse_author_name(&tokens.join(" ")) {
                let last = a.display_name.split(' ').next_back().unwrap();
                proptest::prop_assert!(!is_suffix(last));
                proptest::prop_assert!(!a.last.is_empty());
            } else {
                proptest::prop_assert!(tokens.iter().all(|t| is_suffix(t)));
            }
        }
    }
}
