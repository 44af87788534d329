//! Tail-event normalization.
//!
//! Crowdsourced tail annotations come in several shapes ("to study hard",
//! "He smiles", "loving"). Normalization rewrites each one into a
//! present-tense sentence with an explicit `PersonX`/`PersonY` subject and
//! maps its relation onto the grouped alphabet:
//!
//! 1. drop placeholders (`none`, anything with `_`);
//! 2. tag tokens and drop a leading subject;
//! 3. drop the infinitive `to` for the want/intent/need relations;
//! 4. put the head verb into the third person singular;
//! 5. prepend the subject implied by the relation;
//! 6. group the relation.
//!
//! Output is lower-case except the `PersonX`/`PersonY` tokens, and single
//! space separated, so the text doubles as a dedup key.

mod lexicon;
mod tagger;

pub use lexicon::{third_person, VerbAnalysis, VerbForm, VerbLexicon};
pub use tagger::{Dep, LexiconTagger, Pos, TaggedToken, Tagger};

use crate::relation::{OriginalRelation, Relation};

pub const PERSON_X: &str = "PersonX";
pub const PERSON_Y: &str = "PersonY";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawAnnotation {
    pub text: String,
    pub relation: OriginalRelation,
}

impl RawAnnotation {
    pub fn new(text: impl Into<String>, relation: OriginalRelation) -> Self {
        RawAnnotation {
            text: text.into(),
            relation,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NormalizedEventText {
    pub text: String,
    pub grouped_relation: Relation,
}

/// `false` for placeholder annotations: `none` or anything containing `_`.
pub fn filter_annotation(raw: &RawAnnotation) -> bool {
    let t = raw.text.trim();
    !(t.contains('_') || t.eq_ignore_ascii_case("none") || t.is_empty())
}

pub fn tag(text: &str) -> Vec<TaggedToken> {
    LexiconTagger::new().tag(text)
}

pub fn remove_subject(mut tokens: Vec<TaggedToken>) -> Vec<TaggedToken> {
    if tokens
        .first()
        .is_some_and(|t| t.pos == Pos::Prp && t.dep == Dep::Subj)
    {
        tokens.remove(0);
    }
    tokens
}

pub fn strip_infinitive(mut tokens: Vec<TaggedToken>, relation: OriginalRelation) -> Vec<TaggedToken> {
    if relation.takes_infinitive() && tokens.first().is_some_and(|t| t.token.eq_ignore_ascii_case("to")) {
        tokens.remove(0);
    }
    tokens
}

/// Rewrites the first VB-class token as its third-person-singular form.
pub fn conjugate_third_person(mut tokens: Vec<TaggedToken>) -> Vec<TaggedToken> {
    if let Some(verb) = tokens.iter_mut().find(|t| t.is_verb()) {
        let lower = verb.token.to_lowercase();
        let lemma = VerbLexicon::bundled().lemma(&lower).unwrap_or(lower);
        verb.token = third_person(&lemma);
        verb.pos = Pos::Vbz;
    }
    tokens
}

/// Subject prefix implied by an original relation.
pub fn subject_prefix(relation: OriginalRelation) -> &'static str {
    use OriginalRelation::*;
    match relation {
        XAttr | XReact => "PersonX is",
        OReact => "PersonY is",
        OWant | OEffect => PERSON_Y,
        XIntent | XNeed | XEffect | XWant => PERSON_X,
    }
}

/// Prepends the relation's subject. A copula already at the front is
/// absorbed by the `... is` prefixes instead of being doubled.
pub fn recover_subject(tokens: &[TaggedToken], relation: OriginalRelation) -> String {
    let prefix = subject_prefix(relation);
    let mut rest = tokens;
    if prefix.ends_with(" is") && rest.first().is_some_and(|t| t.token == "is") {
        rest = &rest[1..];
    }
    let mut out = String::from(prefix);
    for t in rest {
        out.push(' ');
        out.push_str(&t.token);
    }
    out
}

pub fn group_relation(relation: OriginalRelation) -> Relation {
    relation.group()
}

/// Lower-cases a phrase and restores the canonical `PersonX`/`PersonY`
/// spelling wherever it occurs.
pub fn canonicalize(text: &str) -> String {
    text.split_whitespace()
        .map(|tok| {
            let lower = tok.to_lowercase();
            for (canon, low) in [(PERSON_X, "personx"), (PERSON_Y, "persony")] {
                if let Some(rest) = lower.strip_prefix(low) {
                    if rest.is_empty() || rest.starts_with('\'') {
                        return format!("{canon}{rest}");
                    }
                }
            }
            lower
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Runs the full rule chain. Returns `None` for filtered annotations and for
/// phrases that cannot take the sentence pattern (nothing left after the
/// subject, or a leading `to` that the relation does not license).
pub fn normalize_tail(raw: &RawAnnotation) -> Option<NormalizedEventText> {
    if !filter_annotation(raw) {
        return None;
    }
    let text = canonicalize(&raw.text);
    let tokens = remove_subject(tag(&text));
    let tokens = strip_infinitive(tokens, raw.relation);
    match tokens.first() {
        None => return None,
        Some(t) if t.token == "to" => return None,
        _ => {}
    }
    let tokens = conjugate_third_person(tokens);
    let prefix_len = subject_prefix(raw.relation).split(' ').count();
    let text = recover_subject(&tokens, raw.relation);
    if text.split(' ').count() <= prefix_len {
        return None;
    }
    Some(NormalizedEventText {
        text,
        grouped_relation: group_relation(raw.relation),
    })
}

/// Rewrites a normalized sentence into the bare infinitive phrase an
/// annotator would have written for a want/intent/need relation
/// ("PersonX studies hard" -> "to study hard").
///
/// When the sentence has no head verb and starts with a word that would
/// read as a verb after `to`, the phrase is returned without `to` so that
/// normalizing it again gives back the same sentence.
pub fn to_infinitive(text: &str) -> String {
    let tokens = tag(text);
    let mut rest: Vec<TaggedToken> = tokens;
    if rest.len() > 1 && (rest[0].token == PERSON_X || rest[0].token == PERSON_Y) {
        rest.remove(0);
    }
    let words = |toks: &[TaggedToken]| toks.iter().map(|t| t.token.as_str()).collect::<Vec<_>>().join(" ");
    if let Some(verb) = rest.iter_mut().find(|t| t.is_verb()) {
        let lemma = VerbLexicon::bundled()
            .lemma(&verb.token)
            .unwrap_or_else(|| verb.token.clone());
        verb.token = lemma;
        return format!("to {}", words(&rest));
    }
    // no head verb: keep `to` unless it would turn the head slot into one
    let phrase = words(&rest);
    let with_to = format!("to {phrase}");
    if tag(&with_to).iter().any(TaggedToken::is_verb) {
        phrase
    } else {
        with_to
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use OriginalRelation::*;

    fn joined(tokens: &[TaggedToken]) -> String {
        tokens.iter().map(|t| t.token.as_str()).collect::<Vec<_>>().join(" ")
    }

    fn norm(text: &str, rel: OriginalRelation) -> Option<(String, Relation)> {
        normalize_tail(&RawAnnotation::new(text, rel)).map(|n| (n.text, n.grouped_relation))
    }

    #[test]
    fn filter_rules() {
        assert!(!filter_annotation(&RawAnnotation::new("none", XAttr)));
        assert!(!filter_annotation(&RawAnnotation::new(" None ", XAttr)));
        assert!(!filter_annotation(&RawAnnotation::new("fills in the ___", XWant)));
        assert!(filter_annotation(&RawAnnotation::new("smiles", XEffect)));
    }

    #[test]
    fn subject_removal() {
        assert_eq!(joined(&remove_subject(tag("He smiles"))), "smiles");
        assert_eq!(joined(&remove_subject(tag("smiles"))), "smiles");
        assert_eq!(joined(&remove_subject(tag("They want to leave"))), "want to leave");
    }

    #[test]
    fn infinitive_strip() {
        assert_eq!(joined(&strip_infinitive(tag("to study hard"), XWant)), "study hard");
        assert_eq!(joined(&strip_infinitive(tag("to study hard"), XEffect)), "to study hard");
        assert_eq!(joined(&strip_infinitive(tag("study hard"), XWant)), "study hard");
    }

    #[test]
    fn conjugation() {
        assert_eq!(joined(&conjugate_third_person(tag("study hard"))), "studies hard");
        assert_eq!(joined(&conjugate_third_person(tag("watch a movie"))), "watches a movie");
        assert_eq!(joined(&conjugate_third_person(tag("have fun"))), "has fun");
        assert_eq!(joined(&conjugate_third_person(tag("happy"))), "happy");
        let once = conjugate_third_person(tag("go home"));
        assert_eq!(conjugate_third_person(once.clone()), once);
    }

    #[test]
    fn subject_recovery() {
        assert_eq!(recover_subject(&tag("loving"), XAttr), "PersonX is loving");
        assert_eq!(recover_subject(&tag("says yes"), OEffect), "PersonY says yes");
        assert_eq!(recover_subject(&tag("smiles"), XEffect), "PersonX smiles");
        assert_eq!(recover_subject(&tag("happy"), OReact), "PersonY is happy");
        assert_eq!(recover_subject(&tag("is happy"), XReact), "PersonX is happy");
    }

    #[test]
    fn grouping() {
        assert_eq!(group_relation(XWant), Relation::XAfter);
        assert_eq!(group_relation(XReact), Relation::XPersona);
        assert_eq!(group_relation(XNeed), Relation::XNeed);
    }

    #[test]
    fn whole_chain() {
        assert_eq!(norm("to study hard", XWant), Some(("PersonX studies hard".into(), Relation::XAfter)));
        assert_eq!(norm("He smiles", OEffect), Some(("PersonY smiles".into(), Relation::OAfter)));
        assert_eq!(norm("none", XAttr), None);
    }

    #[test]
    fn leftover_infinitive_is_dropped() {
        assert_eq!(norm("to go home", XEffect), None);
        assert_eq!(norm("to", XWant), None);
    }

    #[test]
    fn person_tokens_keep_their_case() {
        assert_eq!(
            norm("to hug personY", XWant),
            Some(("PersonX hugs PersonY".into(), Relation::XAfter))
        );
        assert_eq!(canonicalize("Gives  PERSONY's book"), "gives PersonY's book");
    }

    #[test]
    fn infinitive_rewrite() {
        assert_eq!(to_infinitive("PersonX studies hard"), "to study hard");
        assert_eq!(to_infinitive("PersonY goes home"), "to go home");
        assert_eq!(to_infinitive("PersonX is nice"), "to be nice");
        assert_eq!(to_infinitive("PersonX calm"), "calm");
        assert_eq!(to_infinitive("PersonX money"), "to money");
    }
}
