//! Bundled English verb lexicon: lemma lookup and third-person inflection.

use std::collections::{HashMap, HashSet};
use std::sync::LazyLock;

const REGULAR: &str = include_str!("verbs.txt");
const IRREGULAR: &str = include_str!("irregular.tsv");

/// Copula forms resolve to `be`; they are not covered by the generic rules.
const BE_FORMS: &[(&str, VerbForm)] = &[
    ("be", VerbForm::Base),
    ("am", VerbForm::Base),
    ("are", VerbForm::Base),
    ("is", VerbForm::ThirdSingular),
    ("was", VerbForm::Past),
    ("were", VerbForm::Past),
    ("been", VerbForm::Participle),
    ("being", VerbForm::Gerund),
];

/// Third-person forms that do not follow the suffix rules.
const IRREGULAR_THIRD: &[(&str, &str)] = &[
    ("have", "has"),
    ("be", "is"),
    ("do", "does"),
    ("go", "goes"),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerbForm {
    Base,
    ThirdSingular,
    /// Simple past that is not also a participle ("went", "ate").
    Past,
    /// Past participle, or a past form identical to it ("lost", "tired").
    Participle,
    Gerund,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerbAnalysis {
    pub lemma: String,
    pub form: VerbForm,
}

pub struct VerbLexicon {
    base: HashSet<String>,
    third: HashMap<String, String>,
    irregular: HashMap<String, (String, VerbForm)>,
}

static BUNDLED: LazyLock<VerbLexicon> = LazyLock::new(VerbLexicon::load_bundled);

/// Applies the English third-person-singular rules to a lemma.
pub fn third_person(lemma: &str) -> String {
    if let Some((_, t)) = IRREGULAR_THIRD.iter().find(|(b, _)| *b == lemma) {
        return (*t).to_string();
    }
    let bytes = lemma.as_bytes();
    let n = bytes.len();
    if n >= 2 && bytes[n - 1] == b'y' && !is_vowel(bytes[n - 2]) {
        return format!("{}ies", &lemma[..n - 1]);
    }
    if ["s", "x", "z", "ch", "sh"].iter().any(|s| lemma.ends_with(s)) {
        return format!("{lemma}es");
    }
    format!("{lemma}s")
}

fn is_vowel(b: u8) -> bool {
    matches!(b, b'a' | b'e' | b'i' | b'o' | b'u')
}

impl VerbLexicon {
    pub fn bundled() -> &'static VerbLexicon {
        &BUNDLED
    }

    fn load_bundled() -> Self {
        let mut base = HashSet::new();
        let mut irregular = HashMap::new();
        for line in REGULAR.lines().map(str::trim) {
            if !line.is_empty() && !line.starts_with('#') {
                base.insert(line.to_string());
            }
        }
        for line in IRREGULAR.lines().map(str::trim) {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let [lemma, past, participle] = cols[..] else {
                panic!("bad irregular verb row: {line}");
            };
            base.insert(lemma.to_string());
            if past == participle {
                irregular.insert(past.to_string(), (lemma.to_string(), VerbForm::Participle));
            } else {
                irregular.insert(past.to_string(), (lemma.to_string(), VerbForm::Past));
                irregular.insert(participle.to_string(), (lemma.to_string(), VerbForm::Participle));
            }
        }
        let third = base.iter().map(|l| (third_person(l), l.clone())).collect();
        VerbLexicon {
            base,
            third,
            irregular,
        }
    }

    pub fn is_base(&self, word: &str) -> bool {
        self.base.contains(word)
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    /// Base forms in sorted order.
    pub fn lemmas(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.base.iter().map(String::as_str).collect();
        v.sort_unstable();
        v
    }

    /// Identifies `word` (lower-case) as a form of a known verb.
    pub fn analyze(&self, word: &str) -> Option<VerbAnalysis> {
        let hit = |lemma: &str, form| {
            Some(VerbAnalysis {
                lemma: lemma.to_string(),
                form,
            })
        };
        if let Some((_, form)) = BE_FORMS.iter().find(|(w, _)| *w == word) {
            return hit("be", *form);
        }
        if self.base.contains(word) {
            return hit(word, VerbForm::Base);
        }
        if let Some(lemma) = self.third.get(word) {
            return hit(lemma, VerbForm::ThirdSingular);
        }
        if let Some((lemma, form)) = self.irregular.get(word) {
            return hit(lemma, *form);
        }
        if let Some(stem) = word.strip_suffix("ed") {
            if let Some(lemma) = self.past_stem(word, stem) {
                return hit(&lemma, VerbForm::Participle);
            }
        }
        if let Some(stem) = word.strip_suffix("ing") {
            let lemma = self
                .known(stem)
                .or_else(|| self.known(&format!("{stem}e")))
                .or_else(|| self.undouble(stem))
                .or_else(|| stem.strip_suffix('y').and_then(|s| self.known(&format!("{s}ie"))));
            if let Some(lemma) = lemma {
                return hit(&lemma, VerbForm::Gerund);
            }
        }
        None
    }

    /// studied -> study, liked -> like, walked -> walk, stopped -> stop
    fn past_stem(&self, word: &str, stem: &str) -> Option<String> {
        word.strip_suffix("ied")
            .and_then(|s| self.known(&format!("{s}y")))
            .or_else(|| self.known(stem))
            .or_else(|| word.strip_suffix('d').and_then(|s| self.known(s)))
            .or_else(|| self.undouble(stem))
    }

    fn known(&self, candidate: &str) -> Option<String> {
        self.base.contains(candidate).then(|| candidate.to_string())
    }

    /// stopp -> stop, runn -> run
    fn undouble(&self, stem: &str) -> Option<String> {
        let b = stem.as_bytes();
        let n = b.len();
        if n >= 3 && b[n - 1] == b[n - 2] {
            self.known(&stem[..n - 1])
        } else {
            None
        }
    }

    pub fn lemma(&self, word: &str) -> Option<String> {
        self.analyze(word).map(|a| a.lemma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suffix_classes() {
        assert_eq!(third_person("smile"), "smiles");
        assert_eq!(third_person("watch"), "watches");
        assert_eq!(third_person("wash"), "washes");
        assert_eq!(third_person("fix"), "fixes");
        assert_eq!(third_person("kiss"), "kisses");
        assert_eq!(third_person("buzz"), "buzzes");
        assert_eq!(third_person("study"), "studies");
        assert_eq!(third_person("play"), "plays");
        assert_eq!(third_person("have"), "has");
        assert_eq!(third_person("be"), "is");
        assert_eq!(third_person("do"), "does");
        assert_eq!(third_person("go"), "goes");
    }

    #[test]
    fn analyze_forms() {
        let lex = VerbLexicon::bundled();
        let a = |w: &str| lex.analyze(w).map(|a| (a.lemma, a.form));
        assert_eq!(a("studies"), Some(("study".into(), VerbForm::ThirdSingular)));
        assert_eq!(a("studied"), Some(("study".into(), VerbForm::Participle)));
        assert_eq!(a("stopped"), Some(("stop".into(), VerbForm::Participle)));
        assert_eq!(a("liked"), Some(("like".into(), VerbForm::Participle)));
        assert_eq!(a("walked"), Some(("walk".into(), VerbForm::Participle)));
        assert_eq!(a("running"), Some(("run".into(), VerbForm::Gerund)));
        assert_eq!(a("making"), Some(("make".into(), VerbForm::Gerund)));
        assert_eq!(a("lying"), Some(("lie".into(), VerbForm::Gerund)));
        assert_eq!(a("went"), Some(("go".into(), VerbForm::Past)));
        assert_eq!(a("lost"), Some(("lose".into(), VerbForm::Participle)));
        assert_eq!(a("has"), Some(("have".into(), VerbForm::ThirdSingular)));
        assert_eq!(a("were"), Some(("be".into(), VerbForm::Past)));
        assert_eq!(a("happy"), None);
        assert_eq!(a("money"), None);
    }

    #[test]
    fn lexicon_is_reasonably_large() {
        assert!(VerbLexicon::bundled().len() > 700);
    }

    #[test]
    fn inflection_inverts_on_whole_lexicon() {
        let lex = VerbLexicon::bundled();
        let mut seen = HashMap::new();
        for lemma in lex.lemmas() {
            let third = third_person(lemma);
            assert_eq!(lex.lemma(&third).as_deref(), Some(lemma), "{third}");
            if let Some(prev) = seen.insert(third.clone(), lemma) {
                panic!("{prev} and {lemma} both inflect to {third}");
            }
        }
    }
}
