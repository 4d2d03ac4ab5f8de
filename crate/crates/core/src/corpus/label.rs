use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Number of attribute classes.
pub const NUM_LABELS: usize = 8;

/// Attribute class assigned to a single token.
///
/// The discriminant order is the presentation order used in metric tables and
/// the index order used by every classifier; argmax ties resolve to the lowest
/// index.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Label {
    Name,
    State,
    Unit,
    Quantity,
    Size,
    Temperature,
    DryFresh,
    Others,
}

impl Label {
    pub const ALL: [Label; NUM_LABELS] = [
        Label::Name,
        Label::State,
        Label::Unit,
        Label::Quantity,
        Label::Size,
        Label::Temperature,
        Label::DryFresh,
        Label::Others,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Label> {
        Label::ALL.get(index).copied()
    }

    /// Canonical tag string as written in corpus files.
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Name => "NAME",
            Label::State => "STATE",
            Label::Unit => "UNIT",
            Label::Quantity => "QUANTITY",
            Label::Size => "SIZE",
            Label::Temperature => "TEMPERATURE",
            Label::DryFresh => "DRY_FRESH",
            Label::Others => "OTHERS",
        }
    }

    /// Human readable name used in report tables.
    pub fn title(self) -> &'static str {
        match self {
            Label::Name => "Name",
            Label::State => "State",
            Label::Unit => "Unit",
            Label::Quantity => "Quantity",
            Label::Size => "Size",
            Label::Temperature => "Temperature",
            Label::DryFresh => "Dry/Fresh",
            Label::Others => "Others",
        }
    }

    /// Key used for this class in JSON attribute records.
    pub fn json_key(self) -> &'static str {
        match self {
            Label::Name => "name",
            Label::State => "state",
            Label::Unit => "unit",
            Label::Quantity => "quantity",
            Label::Size => "size",
            Label::Temperature => "temperature",
            Label::DryFresh => "dry_fresh",
            Label::Others => "others",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Label::ALL
            .iter()
            .copied()
            .find(|l| l.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown label {s:?}")))
    }
}

/// Map from dataset tag strings to [`Label`]s.
///
/// Keys are stored upper-cased; lookups are case-insensitive. Canonical names
/// always resolve, and a leading `B-`/`I-` chunk prefix is ignored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelAliases {
    map: BTreeMap<String, Label>,
}

impl Default for LabelAliases {
    fn default() -> Self {
        let mut aliases = LabelAliases::empty();
        let defaults: &[(&str, Label)] = &[
            ("N", Label::Name),
            ("ING", Label::Name),
            ("INGREDIENT", Label::Name),
            ("S", Label::State),
            ("U", Label::Unit),
            ("Q", Label::Quantity),
            ("QTY", Label::Quantity),
            ("SZ", Label::Size),
            ("TEMP", Label::Temperature),
            ("DF", Label::DryFresh),
            ("DRY/FRESH", Label::DryFresh),
            ("DRYFRESH", Label::DryFresh),
            ("O", Label::Others),
            ("OTHER", Label::Others),
        ];
        for &(raw, label) in defaults {
            aliases.insert(raw, label);
        }
        aliases
    }
}

impl LabelAliases {
    /// An alias table that only knows the canonical tag strings.
    pub fn empty() -> Self {
        LabelAliases {
            map: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, raw: &str, label: Label) {
        self.map.insert(raw.trim().to_uppercase(), label);
    }

    /// Parse an alias given as `RAW=LABEL`.
    pub fn insert_spec(&mut self, spec: &str) -> Result<(), Error> {
        let (raw, label) = spec
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("alias {spec:?} is not RAW=LABEL")))?;
        if raw.trim().is_empty() {
            return Err(Error::InvalidArgument(format!("alias {spec:?} has an empty tag")));
        }
        self.insert(raw, label.trim().parse()?);
        Ok(())
    }

    pub fn resolve(&self, raw: &str) -> Option<Label> {
        let key = raw.trim().to_uppercase();
        let key = key
            .strip_prefix("B-")
            .or_else(|| key.strip_prefix("I-"))
            .unwrap_or(&key);
        Label::ALL
            .iter()
            .copied()
            .find(|l| l.as_str() == key)
            .or_else(|| self.map.get(key).copied())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Label)> {
        self.map.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eight_classes_in_table_order() {
        assert_eq!(Label::ALL.len(), 8);
        for (i, l) in Label::ALL.iter().enumerate() {
            assert_eq!(l.index(), i);
            assert_eq!(Label::from_index(i), Some(*l));
        }
        assert_eq!(Label::from_index(8), None);
    }

    #[test]
    fn aliases_resolve_case_insensitively() {
        let aliases = LabelAliases::default();
        assert_eq!(aliases.resolve("df"), Some(Label::DryFresh));
        assert_eq!(aliases.resolve("TEMP"), Some(Label::Temperature));
        assert_eq!(aliases.resolve("quantity"), Some(Label::Quantity));
        assert_eq!(aliases.resolve("B-NAME"), Some(Label::Name));
        assert_eq!(aliases.resolve("garbage"), None);
    }

    #[test]
    fn alias_spec_parsing() {
        let mut aliases = LabelAliases::empty();
        aliases.insert_spec("brand=name").unwrap();
        assert_eq!(aliases.resolve("BRAND"), Some(Label::Name));
        assert!(aliases.insert_spec("nolabel").is_err());
        assert!(aliases.insert_spec("x=NOTALABEL").is_err());
    }
}
