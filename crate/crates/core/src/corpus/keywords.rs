use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Corpus, Document};
use crate::error::{AuditError, Result};

/// Something that decides subgroup membership from document text.
pub trait TextMatcher: Sync {
    fn name(&self) -> &str;

    /// `lower` must already be lowercased.
    fn matches_lower(&self, lower: &str) -> bool;

    fn matches_text(&self, text: &str) -> bool {
        self.matches_lower(&text.to_lowercase())
    }

    fn matches(&self, doc: &Document) -> bool {
        self.matches_text(&doc.text)
    }
}

/// A keyword and the surface forms that count as an occurrence of it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KeywordSpec {
    name: String,
    patterns: Vec<String>,
}

impl KeywordSpec {
    pub fn new<S: Into<String>>(
        name: impl Into<String>,
        patterns: impl IntoIterator<Item = S>,
    ) -> Result<Self> {
        let name = name.into();
        let patterns: Vec<String> = patterns
            .into_iter()
            .map(|p| p.into().to_lowercase())
            .collect();
        if patterns.is_empty() {
            return Err(AuditError::Config(format!(
                "keyword {name:?} has no patterns"
            )));
        }
        if patterns.iter().any(|p| p.trim().is_empty()) {
            return Err(AuditError::Config(format!(
                "keyword {name:?} has an empty pattern"
            )));
        }
        Ok(Self { name, patterns })
    }

    /// A keyword whose only surface form is its name.
    pub fn single(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        Self::new(name.clone(), [name])
    }

    pub fn patterns(&self) -> &[String] {
        &self.patterns
    }
}

impl TextMatcher for KeywordSpec {
    fn name(&self) -> &str {
        &self.name
    }

    fn matches_lower(&self, lower: &str) -> bool {
        self.patterns.iter().any(|p| contains_token(lower, p))
    }
}

/// True if `needle` occurs in `haystack` bounded on both sides by a
/// non-alphanumeric character or the string edge.
fn contains_token(haystack: &str, needle: &str) -> bool {
    haystack.match_indices(needle).any(|(start, m)| {
        let end = start + m.len();
        let before_ok = haystack[..start]
            .chars()
            .next_back()
            .is_none_or(|c| !c.is_alphanumeric());
        let after_ok = haystack[end..]
            .chars()
            .next()
            .is_none_or(|c| !c.is_alphanumeric());
        before_ok && after_ok
    })
}

/// A named union of keywords.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ThemeSpec {
    name: String,
    keywords: Vec<KeywordSpec>,
}

impl ThemeSpec {
    pub fn new(name: impl Into<String>, keywords: Vec<KeywordSpec>) -> Result<Self> {
        let name = name.into();
        if keywords.is_empty() {
            return Err(AuditError::Config(format!(
                "theme {name:?} has no keywords"
            )));
        }
        Ok(Self { name, keywords })
    }

    pub fn keywords(&self) -> &[KeywordSpec] {
        &self.keywords
    }
}

impl TextMatcher for ThemeSpec {
    fn name(&self) -> &str {
        &self.name
    }

    fn matches_lower(&self, lower: &str) -> bool {
        self.keywords.iter().any(|k| k.matches_lower(lower))
    }
}

/// Splits `corpus` into (documents matching `matcher`, everything else).
pub fn subgroup_split(corpus: &Corpus, matcher: &dyn TextMatcher) -> (Corpus, Corpus) {
    let (inside, outside): (Vec<Document>, Vec<Document>) =
        corpus.iter().cloned().partition(|d| matcher.matches(d));
    (Corpus { docs: inside }, Corpus { docs: outside })
}

/// Keywords and themes loaded together from one TOML file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroupSet {
    pub keywords: Vec<KeywordSpec>,
    pub themes: Vec<ThemeSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GroupFile {
    #[serde(default)]
    keyword: Vec<KeywordEntry>,
    #[serde(default)]
    theme: Vec<ThemeEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct KeywordEntry {
    name: String,
    #[serde(default)]
    patterns: Option<Vec<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ThemeEntry {
    name: String,
    keywords: Vec<String>,
}

impl GroupSet {
    pub fn from_keywords(keywords: Vec<KeywordSpec>) -> Self {
        Self {
            keywords,
            themes: Vec::new(),
        }
    }

    /// Parses `[[keyword]]` and `[[theme]]` tables. A keyword without
    /// `patterns` matches its own name; theme members refer to keyword names.
    pub fn from_toml(text: &str) -> Result<Self> {
        let file: GroupFile =
            toml::from_str(text).map_err(|e| AuditError::Config(e.to_string()))?;
        let mut keywords = Vec::with_capacity(file.keyword.len());
        for entry in file.keyword {
            let spec = match entry.patterns {
                Some(p) => KeywordSpec::new(entry.name, p)?,
                None => KeywordSpec::single(entry.name)?,
            };
            keywords.push(spec);
        }
        let by_name: HashMap<&str, &KeywordSpec> =
            keywords.iter().map(|k| (k.name.as_str(), k)).collect();
        let mut themes = Vec::with_capacity(file.theme.len());
        for entry in file.theme {
            let members = entry
                .keywords
                .iter()
                .map(|n| {
                    by_name
                        .get(n.as_str())
                        .map(|k| (*k).clone())
                        .ok_or_else(|| {
                            AuditError::Config(format!(
                                "theme {:?} refers to unknown keyword {n:?}",
                                entry.name
                            ))
                        })
                })
                .collect::<Result<Vec<_>>>()?;
            themes.push(ThemeSpec::new(entry.name, members)?);
        }
        let set = Self { keywords, themes };
        set.check_unique_names()?;
        Ok(set)
    }

    pub fn to_toml(&self) -> String {
        let mut out = String::new();
        for k in &self.keywords {
            let patterns: Vec<String> = k.patterns.iter().map(|p| format!("{p:?}")).collect();
            out.push_str(&format!(
                "[[keyword]]\nname = {:?}\npatterns = [{}]\n\n",
                k.name,
                patterns.join(", ")
            ));
        }
        for t in &self.themes {
            let members: Vec<String> = t.keywords.iter().map(|k| format!("{:?}", k.name)).collect();
            out.push_str(&format!(
                "[[theme]]\nname = {:?}\nkeywords = [{}]\n\n",
                t.name,
                members.join(", ")
            ));
        }
        out
    }

    fn check_unique_names(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for name in self.groups().iter().map(|g| g.name()) {
            if !seen.insert(name) {
                return Err(AuditError::Config(format!(
                    "group name {name:?} used twice"
                )));
            }
        }
        Ok(())
    }

    /// Keywords first, then themes, each in file order.
    pub fn groups(&self) -> Vec<&dyn TextMatcher> {
        self.keywords
            .iter()
            .map(|k| k as &dyn TextMatcher)
            .chain(self.themes.iter().map(|t| t as &dyn TextMatcher))
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.keywords.is_empty() && self.themes.is_empty()
    }
}

pub fn load_groups(path: impl AsRef<Path>) -> Result<GroupSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| AuditError::io(path, e))?;
    GroupSet::from_toml(&text)
}

#[cfg(test)]
mod tests {
    use super::super::tests::doc;
    use super::*;

    fn kw(name: &str, patterns: &[&str]) -> KeywordSpec {
        KeywordSpec::new(name, patterns.iter().copied()).unwrap()
    }

    #[test]
    fn case_insensitive() {
        assert!(kw("ass", &["ass"]).matches_text("His ASS was late"));
    }

    #[test]
    fn anchored_at_token_boundaries() {
        let k = kw("ass", &["ass"]);
        assert!(!k.matches_text("he passed the class"));
        assert!(!k.matches_text("assassin"));
        assert!(k.matches_text("ass"));
        assert!(k.matches_text("(ass)!"));
        assert!(!k.matches_text("ass9"));
    }

    #[test]
    fn plural_patterns() {
        assert!(kw("hoe", &["hoe", "hoes"]).matches_text("those hoes"));
        assert!(!kw("hoe", &["hoe"]).matches_text("those hoes"));
    }

    #[test]
    fn later_occurrence_can_match() {
        assert!(kw("gay", &["gay"]).matches_text("gaydar aside, gay pride"));
    }

    #[test]
    fn multibyte_text() {
        let k = kw("café", &["café"]);
        assert!(k.matches_text("Le CAFÉ, s'il vous plaît"));
        assert!(!k.matches_text("cafés"));
    }

    #[test]
    fn empty_patterns_rejected() {
        assert!(KeywordSpec::new("x", Vec::<String>::new()).is_err());
        assert!(KeywordSpec::new("x", [""]).is_err());
        assert!(ThemeSpec::new("t", vec![]).is_err());
    }

    fn ten_docs() -> Corpus {
        let texts = [
            "gay pride",
            "nothing here",
            "so gay",
            "plain",
            "GAY!",
            "gays",
            "xgay",
            "other",
            "more",
            "words",
        ];
        Corpus::new(
            texts
                .iter()
                .enumerate()
                .map(|(i, t)| doc(&format!("d{i}"), t, Some(0.1), false))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn split_partitions() {
        let corpus = ten_docs();
        let (sub, bg) = subgroup_split(&corpus, &kw("gay", &["gay"]));
        assert_eq!((sub.len(), bg.len()), (3, 7));
        let (sub, bg) = subgroup_split(&corpus, &kw("none", &["zebra"]));
        assert_eq!((sub.len(), bg.len()), (0, 10));
    }

    #[test]
    fn theme_split_is_set_union() {
        // Hand corpus: each doc mentions hoe, slut, both, or neither.
        let texts: Vec<String> = (0..20)
            .map(|i| match i % 4 {
                0 => format!("hoe number {i}"),
                1 => format!("slut number {i}"),
                2 => format!("hoes and sluts {i}"),
                _ => format!("neutral {i}"),
            })
            .collect();
        let corpus = Corpus::new(
            texts
                .iter()
                .enumerate()
                .map(|(i, t)| doc(&format!("d{i}"), t, Some(0.5), false))
                .collect(),
        )
        .unwrap();
        let hoe = kw("hoe", &["hoe", "hoes"]);
        let slut = kw("slut", &["slut", "sluts"]);
        let theme = ThemeSpec::new("women", vec![hoe.clone(), slut.clone()]).unwrap();

        let ids = |c: &Corpus| c.iter().map(|d| d.id.clone()).collect::<HashSet<_>>();
        let (a, _) = subgroup_split(&corpus, &hoe);
        let (b, _) = subgroup_split(&corpus, &slut);
        let expected: HashSet<_> = ids(&a).union(&ids(&b)).cloned().collect();
        let (t, bg) = subgroup_split(&corpus, &theme);
        assert_eq!(ids(&t), expected);
        assert_eq!(t.len(), 15);
        assert_eq!(t.len() + bg.len(), corpus.len());
    }

    #[test]
    fn toml_round_trip() {
        let text = r#"
            [[keyword]]
            name = "hoe"
            patterns = ["hoe", "hoes"]

            [[keyword]]
            name = "slut"

            [[theme]]
            name = "women"
            keywords = ["hoe", "slut"]
        "#;
        let set = GroupSet::from_toml(text).unwrap();
        assert_eq!(set.keywords.len(), 2);
        assert_eq!(set.keywords[1].patterns(), ["slut"]);
        assert_eq!(set.themes[0].keywords().len(), 2);
        assert_eq!(GroupSet::from_toml(&set.to_toml()).unwrap(), set);
        let names: Vec<_> = set.groups().iter().map(|g| g.name().to_string()).collect();
        assert_eq!(names, ["hoe", "slut", "women"]);
    }

    #[test]
    fn toml_errors() {
        assert!(GroupSet::from_toml("[[theme]]\nname = \"t\"\nkeywords = [\"nope\"]\n").is_err());
        assert!(
            GroupSet::from_toml("[[keyword]]\nname = \"a\"\n[[keyword]]\nname = \"a\"\n").is_err()
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn never_matches_inside_longer_token(
                prefix in "[a-z0-9]{0,3}",
                suffix in "[a-z0-9]{0,3}",
                word in "[a-z]{2,6}",
            ) {
                prop_assume!(!prefix.is_empty() || !suffix.is_empty());
                let k = KeywordSpec::single(word.clone()).unwrap();
                let text = format!("{prefix}{word}{suffix}");
                // Only a match if the word itself occurs as a whole token, which a
                // single alphanumeric run longer than the word cannot contain.
                prop_assert!(!k.matches_text(&text));
            }

            #[test]
            fn split_is_exhaustive_and_disjoint(
                texts in prop::collection::vec("[a-c ]{0,12}", 1..30),
                word in "[a-c]{1,2}",
            ) {
                let corpus = Corpus::new(
                    texts.iter().enumerate()
                        .map(|(i, t)| doc(&i.to_string(), t, None, false))
                        .collect(),
                ).unwrap();
                let k = KeywordSpec::single(word).unwrap();
                let (sub, bg) = subgroup_split(&corpus, &k);
                prop_assert_eq!(sub.len() + bg.len(), corpus.len());
                let a: HashSet<_> = sub.iter().map(|d| &d.id).collect();
                prop_assert!(bg.iter().all(|d| !a.contains(&d.id)));
                prop_assert!(sub.iter().all(|d| k.matches(d)));
                prop_assert!(bg.iter().all(|d| !k.matches(d)));
            }
        }
    }
}
