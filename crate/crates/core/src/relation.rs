//! Relation alphabets.
//!
//! Raw annotations arrive under one of nine original relations. After tail
//! normalization they are merged into six grouped relations, which are the
//! only relations stored as edges. `NoLink` is a label, never an edge.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::ParseLabelError;

/// Number of grouped relations (the classifier label count).
pub const K: usize = 6;

/// One of the nine relations used by the raw annotation files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OriginalRelation {
    XIntent,
    XNeed,
    XAttr,
    XEffect,
    XWant,
    XReact,
    OEffect,
    OWant,
    OReact,
}

impl OriginalRelation {
    pub const ALL: [OriginalRelation; 9] = [
        OriginalRelation::XIntent,
        OriginalRelation::XNeed,
        OriginalRelation::XAttr,
        OriginalRelation::XEffect,
        OriginalRelation::XWant,
        OriginalRelation::XReact,
        OriginalRelation::OEffect,
        OriginalRelation::OWant,
        OriginalRelation::OReact,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OriginalRelation::XIntent => "xIntent",
            OriginalRelation::XNeed => "xNeed",
            OriginalRelation::XAttr => "xAttr",
            OriginalRelation::XEffect => "xEffect",
            OriginalRelation::XWant => "xWant",
            OriginalRelation::XReact => "xReact",
            OriginalRelation::OEffect => "oEffect",
            OriginalRelation::OWant => "oWant",
            OriginalRelation::OReact => "oReact",
        }
    }

    /// Merge into the six-relation alphabet.
    pub fn group(self) -> Relation {
        match self {
            OriginalRelation::XEffect | OriginalRelation::XWant => Relation::XAfter,
            OriginalRelation::OEffect | OriginalRelation::OWant => Relation::OAfter,
            OriginalRelation::XAttr | OriginalRelation::XReact => Relation::XPersona,
            OriginalRelation::OReact => Relation::OPersona,
            OriginalRelation::XIntent => Relation::XIntent,
            OriginalRelation::XNeed => Relation::XNeed,
        }
    }

    /// Relations whose annotations are written as infinitives ("to ...").
    pub fn takes_infinitive(self) -> bool {
        matches!(
            self,
            OriginalRelation::XIntent
                | OriginalRelation::XWant
                | OriginalRelation::XNeed
                | OriginalRelation::OWant
        )
    }
}

impl fmt::Display for OriginalRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OriginalRelation {
    type Err = ParseLabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        OriginalRelation::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| ParseLabelError(s.to_string()))
    }
}

/// One of the six grouped relations. Declaration order is the classifier
/// index order and the order used on the wire.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Relation {
    XIntent,
    XNeed,
    XAfter,
    OAfter,
    XPersona,
    OPersona,
}

impl Relation {
    pub const ALL: [Relation; K] = [
        Relation::XIntent,
        Relation::XNeed,
        Relation::XAfter,
        Relation::OAfter,
        Relation::XPersona,
        Relation::OPersona,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Relation::XIntent => "xIntent",
            Relation::XNeed => "xNeed",
            Relation::XAfter => "xAfter",
            Relation::OAfter => "oAfter",
            Relation::XPersona => "xPersona",
            Relation::OPersona => "oPersona",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Relation> {
        Relation::ALL.get(i).copied()
    }

    /// Original relations that group into `self`, in declaration order.
    pub fn preimage(self) -> &'static [OriginalRelation] {
        match self {
            Relation::XIntent => &[OriginalRelation::XIntent],
            Relation::XNeed => &[OriginalRelation::XNeed],
            Relation::XAfter => &[OriginalRelation::XEffect, OriginalRelation::XWant],
            Relation::OAfter => &[OriginalRelation::OEffect, OriginalRelation::OWant],
            Relation::XPersona => &[OriginalRelation::XAttr, OriginalRelation::XReact],
            Relation::OPersona => &[OriginalRelation::OReact],
        }
    }

    /// A canonical original relation for re-normalizing grouped text.
    pub fn representative(self) -> OriginalRelation {
        self.preimage()[0]
    }

    pub fn is_persona(self) -> bool {
        matches!(self, Relation::XPersona | Relation::OPersona)
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Relation {
    type Err = ParseLabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Relation::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| ParseLabelError(s.to_string()))
    }
}

/// A gold or training label: a grouped relation or the absence of a link.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Linked(Relation),
    NoLink,
}

impl Label {
    pub const NO_LINK: &'static str = "NoLink";

    pub fn relation(self) -> Option<Relation> {
        match self {
            Label::Linked(r) => Some(r),
            Label::NoLink => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Linked(r) => r.as_str(),
            Label::NoLink => Self::NO_LINK,
        }
    }
}

impl From<Relation> for Label {
    fn from(r: Relation) -> Self {
        Label::Linked(r)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = ParseLabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == Self::NO_LINK {
            Ok(Label::NoLink)
        } else {
            s.parse().map(Label::Linked)
        }
    }
}

macro_rules! serde_via_str {
    ($($ty:ty),*) => {$(
        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(self.as_str())
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    )*};
}

serde_via_str!(OriginalRelation, Relation, Label);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grouping_preimage_sizes() {
        let mut sizes = [0usize; K];
        for r in OriginalRelation::ALL {
            sizes[r.group().index()] += 1;
        }
        // xIntent, xNeed, xAfter, oAfter, xPersona, oPersona
        assert_eq!(sizes, [1, 1, 2, 2, 2, 1]);
    }

    #[test]
    fn preimage_is_consistent_with_group() {
        for g in Relation::ALL {
            for o in g.preimage() {
                assert_eq!(o.group(), g);
            }
        }
        for o in OriginalRelation::ALL {
            assert!(o.group().preimage().contains(&o));
        }
    }

    #[test]
    fn parse_round_trip() {
        for r in Relation::ALL {
            assert_eq!(r.as_str().parse::<Relation>().unwrap(), r);
            assert_eq!(Label::from(r).as_str().parse::<Label>().unwrap(), Label::Linked(r));
        }
        assert_eq!("NoLink".parse::<Label>().unwrap(), Label::NoLink);
        assert!("xWant".parse::<Relation>().is_err());
        assert!("NoLink".parse::<Relation>().is_err());
    }
}
