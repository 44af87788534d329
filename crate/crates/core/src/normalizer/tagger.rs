//! Lexicon tagger for short, formulaic event phrases.
//!
//! Only two decisions matter downstream: whether the first token is a
//! removable subject, and which token (if any) is the head verb. The head
//! is looked for in a single slot: the first token after an optional
//! subject, an optional infinitive `to` and any adverbs. Words that are
//! mostly used as adjectives or nouns ("calm", "water") and bare
//! participles ("tired", "loving") only count as verbs when something
//! other than a conjunction or preposition follows them, or when they come
//! right after `to`.

use super::lexicon::{VerbForm, VerbLexicon};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pos {
    Prp,
    Vb,
    Vbz,
    To,
    Adj,
    Other,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Dep {
    Subj,
    Other,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaggedToken {
    pub token: String,
    pub pos: Pos,
    pub dep: Dep,
}

impl TaggedToken {
    pub fn new(token: impl Into<String>, pos: Pos, dep: Dep) -> Self {
        TaggedToken {
            token: token.into(),
            pos,
            dep,
        }
    }

    pub fn is_verb(&self) -> bool {
        matches!(self.pos, Pos::Vb | Pos::Vbz)
    }
}

/// Anything that can assign coarse tags to a phrase.
pub trait Tagger {
    fn tag(&self, text: &str) -> Vec<TaggedToken>;
}

const SUBJECTS: &[&str] = &[
    "he", "she", "they", "i", "we", "you", "personx", "persony", "x", "y",
];

const PRONOUNS: &[&str] = &[
    "he", "she", "they", "i", "we", "you", "it", "him", "her", "them", "me", "us",
];

/// Tokens after which a participle or ambiguous word reads as an adjective.
const BOUNDARY: &[&str] = &[
    "and", "or", "but", "about", "of", "with", "at", "by", "for", "from", "in", "on", "to",
    "because", "when", "that", "after", "before", "over", "into", "as", "than", "since",
    "while", "so", "if",
];

/// Base verbs that are far more often adjectives or nouns.
const AMBIGUOUS: &[&str] = &[
    "calm", "clean", "clear", "close", "cool", "cross", "dry", "empty", "faint", "fit", "hurt",
    "last", "long", "open", "slow", "sound", "tidy", "upset", "warm", "correct", "complete",
    "present", "mean", "water", "book", "fire", "film", "line", "name", "number", "time",
    "flower", "box", "post", "text", "face", "file", "hand", "head", "fish", "milk", "iron",
    "jail", "mug", "label", "date", "plant", "phone", "record", "program", "shower", "storm",
    "rain", "snow", "toast", "tour", "trade", "train", "dust", "nail", "present", "rock",
    "fancy", "fool", "guard", "host", "judge", "joke", "love", "cycle", "queue", "signal",
    "sin", "ski", "spark", "stamp", "stroke", "trap", "trip", "trouble", "twist", "type",
    "welcome", "wish", "wreck", "zip", "dream", "doubt", "fear", "favor", "interest",
];

const ADVERBS: &[&str] = &[
    "really", "just", "also", "then", "still", "always", "never", "often", "finally", "soon",
    "immediately", "eventually", "probably", "usually", "sometimes", "actually", "quickly",
    "suddenly", "slowly", "happily", "quietly", "gladly", "already", "again", "first",
];

const ADJECTIVES: &[&str] = &[
    "happy", "sad", "glad", "angry", "good", "bad", "nice", "kind", "proud", "sorry", "mad",
    "smart", "brave", "rich", "poor", "sick", "ill", "shy", "busy", "bored", "lazy", "strong",
    "weak", "fun", "friendly", "lonely", "silly", "upset", "relieved", "satisfied", "great",
];

const ADJ_SUFFIXES: &[&str] = &[
    "ful", "ous", "ive", "able", "ible", "less", "ish", "ic", "al", "ent", "ant", "ly",
];

pub struct LexiconTagger {
    lexicon: &'static VerbLexicon,
}

impl Default for LexiconTagger {
    fn default() -> Self {
        LexiconTagger {
            lexicon: VerbLexicon::bundled(),
        }
    }
}

impl LexiconTagger {
    pub fn new() -> Self {
        Self::default()
    }

    fn head_pos(&self, word: &str, next: Option<&str>, after_to: bool) -> Pos {
        let boundary = next.is_none_or(|n| BOUNDARY.contains(&n));
        match self.lexicon.analyze(word).map(|a| a.form) {
            Some(VerbForm::ThirdSingular) => Pos::Vbz,
            Some(VerbForm::Past) => Pos::Vb,
            Some(VerbForm::Base) => {
                if !after_to && boundary && AMBIGUOUS.contains(&word) {
                    Pos::Adj
                } else {
                    Pos::Vb
                }
            }
            Some(VerbForm::Participle | VerbForm::Gerund) => {
                if boundary {
                    Pos::Adj
                } else {
                    Pos::Vb
                }
            }
            None if looks_adjectival(word) => Pos::Adj,
            None => Pos::Other,
        }
    }

    fn is_adverb(&self, word: &str) -> bool {
        if ADVERBS.contains(&word) {
            return true;
        }
        word.len() > 4 && word.ends_with("ly") && self.lexicon.analyze(word).is_none()
    }
}

fn looks_adjectival(word: &str) -> bool {
    ADJECTIVES.contains(&word) || (word.len() > 4 && ADJ_SUFFIXES.iter().any(|s| word.ends_with(s)))
}

impl Tagger for LexiconTagger {
    fn tag(&self, text: &str) -> Vec<TaggedToken> {
        let surface: Vec<&str> = text.split_whitespace().collect();
        let lower: Vec<String> = surface.iter().map(|t| t.to_lowercase()).collect();
        let mut out: Vec<TaggedToken> = surface
            .iter()
            .zip(&lower)
            .map(|(s, l)| {
                let pos = if l == "to" {
                    Pos::To
                } else if PRONOUNS.contains(&l.as_str()) {
                    Pos::Prp
                } else {
                    Pos::Other
                };
                TaggedToken::new(*s, pos, Dep::Other)
            })
            .collect();
        if out.is_empty() {
            return out;
        }

        let mut slot = 0;
        if out.len() >= 2 && SUBJECTS.contains(&lower[0].as_str()) {
            out[0].pos = Pos::Prp;
            out[0].dep = Dep::Subj;
            slot = 1;
        }
        let mut after_to = false;
        if lower.get(slot).is_some_and(|w| w == "to") {
            after_to = true;
            slot += 1;
        }
        while slot + 1 < lower.len() && self.is_adverb(&lower[slot]) {
            slot += 1;
        }
        if let Some(word) = lower.get(slot) {
            if word != "to" && !PRONOUNS.contains(&word.as_str()) {
                let next = lower.get(slot + 1).map(String::as_str);
                out[slot].pos = self.head_pos(word, next, after_to);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tags(text: &str) -> Vec<(String, Pos, Dep)> {
        LexiconTagger::new()
            .tag(text)
            .into_iter()
            .map(|t| (t.token, t.pos, t.dep))
            .collect()
    }

    fn t(s: &str, p: Pos, d: Dep) -> (String, Pos, Dep) {
        (s.to_string(), p, d)
    }

    #[test]
    fn pronoun_subject_and_verb() {
        assert_eq!(
            tags("He smiles"),
            vec![t("He", Pos::Prp, Dep::Subj), t("smiles", Pos::Vbz, Dep::Other)]
        );
    }

    #[test]
    fn infinitive_phrase() {
        assert_eq!(
            tags("to study hard"),
            vec![
                t("to", Pos::To, Dep::Other),
                t("study", Pos::Vb, Dep::Other),
                t("hard", Pos::Other, Dep::Other)
            ]
        );
    }

    #[test]
    fn bare_participle_is_adjective() {
        assert_eq!(tags("loving"), vec![t("loving", Pos::Adj, Dep::Other)]);
        assert_eq!(tags("tired")[0].1, Pos::Adj);
        assert_eq!(tags("excited about it")[0].1, Pos::Adj);
        assert_eq!(tags("walked home")[0].1, Pos::Vb);
    }

    #[test]
    fn ambiguous_words() {
        assert_eq!(tags("calm")[0].1, Pos::Adj);
        assert_eq!(tags("clean the room")[0].1, Pos::Vb);
        assert_eq!(tags("to clean")[1].1, Pos::Vb);
        assert_eq!(tags("water")[0].1, Pos::Adj);
    }

    #[test]
    fn lone_pronoun_is_not_a_subject() {
        assert_eq!(tags("he")[0].2, Dep::Other);
        assert_eq!(tags("They want to leave")[0].2, Dep::Subj);
    }

    #[test]
    fn adverbs_are_skipped_for_the_head() {
        let t = tags("really wants to go");
        assert_eq!(t[1].1, Pos::Vbz);
        // only the head slot is tagged as a verb
        assert_eq!(t[3].1, Pos::Other);
    }

    #[test]
    fn later_verbs_are_not_heads() {
        let t = tags("very happy to help");
        assert!(t.iter().all(|x| !matches!(x.1, Pos::Vb | Pos::Vbz)), "{t:?}");
    }
}
