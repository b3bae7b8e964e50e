//! Token-level keyword blacklist for determinism screening.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::token::{tokenize_lenient, Token, TokenKind};

/// Default keyword table (randomness, file I/O, archives, external formats,
/// serialization, databases).
pub const DEFAULT_BLACKLIST: &str = "\
# randomness
random
random.shuffle
random.randint
random.choice
random.choices
random.seed
numpy.random
np.random
torch.rand
torch.randn
secrets
# file I/O and filesystem traversal
open
.read
.write
fileinput
pathlib
os.path
os.listdir
os.walk
os.scandir
os.remove
os.unlink
os.rmdir
os.mkdir
os.makedirs
os.rename
os.replace
os.stat
os.chmod
os.chown
os.getcwd
os.chdir
shutil
glob
tempfile
# archives and compression
zipfile
tarfile
gzip
bz2
lzma
# structured readers and writers
csv.reader
csv.DictReader
csv.writer
csv.DictWriter
pandas.read_csv
pandas.read_table
pandas.read_excel
pandas.read_parquet
pandas.read_feather
pandas.read_json
pandas.read_pickle
pd.read_csv
pd.read_table
pd.read_excel
pd.read_parquet
pd.read_feather
pd.read_json
pd.read_pickle
.to_csv
.to_excel
openpyxl
# serialization
numpy.load
numpy.save
numpy.savez
numpy.savez_compressed
np.load
np.save
np.savez
np.savez_compressed
torch.save
torch.load
pickle
pickle.load
pickle.dump
joblib.load
joblib.dump
json.load
yaml.load
yaml.safe_load
# databases
sqlite3.connect
";

#[derive(Debug, Clone, PartialEq, Eq)]
struct Pattern {
    text: String,
    /// Alternating name/dot pieces; `None` stands for the `.` operator.
    pieces: Vec<Option<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Blacklist {
    patterns: Vec<Pattern>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum BlacklistVerdict {
    Deterministic,
    Flagged { matched: Vec<String> },
}

impl BlacklistVerdict {
    pub fn is_flagged(&self) -> bool {
        matches!(self, BlacklistVerdict::Flagged { .. })
    }
}

impl Default for Blacklist {
    fn default() -> Self {
        Blacklist::parse(DEFAULT_BLACKLIST)
    }
}

impl Blacklist {
    /// One keyword per line; `#` starts a comment; dotted names allowed.
    pub fn parse(text: &str) -> Blacklist {
        let mut patterns = Vec::new();
        for line in text.lines() {
            let kw = line.split('#').next().unwrap_or("").trim();
            if kw.is_empty() {
                continue;
            }
            let mut pieces = Vec::new();
            for (i, part) in kw.split('.').enumerate() {
                if i > 0 {
                    pieces.push(None);
                }
                if !part.is_empty() {
                    pieces.push(Some(part.to_string()));
                }
            }
            if !pieces.is_empty() && !patterns.iter().any(|p: &Pattern| p.text == kw) {
                patterns.push(Pattern {
                    text: kw.to_string(),
                    pieces,
                });
            }
        }
        Blacklist { patterns }
    }

    pub fn keywords(&self) -> impl Iterator<Item = &str> {
        self.patterns.iter().map(|p| p.text.as_str())
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }
}

fn matches_at(tokens: &[Token], start: usize, pieces: &[Option<String>]) -> bool {
    if start + pieces.len() > tokens.len() {
        return false;
    }
    pieces.iter().zip(&tokens[start..]).all(|(p, t)| match p {
        None => t.kind == TokenKind::Op && t.text == ".",
        Some(name) => t.kind == TokenKind::Name && t.text == *name,
    })
}

/// Flag `text` if any keyword occurs as a token sequence outside strings and comments.
pub fn scan_blacklist(text: &str, blacklist: &Blacklist) -> BlacklistVerdict {
    let tokens = tokenize_lenient(text).tokens;
    let mut matched = BTreeSet::new();
    for p in &blacklist.patterns {
        if (0..tokens.len()).any(|i| matches_at(&tokens, i, &p.pieces)) {
            matched.insert(p.text.clone());
        }
    }
    if matched.is_empty() {
        BlacklistVerdict::Deterministic
    } else {
        BlacklistVerdict::Flagged {
            matched: matched.into_iter().collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flagged(text: &str) -> Vec<String> {
        match scan_blacklist(text, &Blacklist::default()) {
            BlacklistVerdict::Deterministic => vec![],
            BlacklistVerdict::Flagged { matched } => matched,
        }
    }

    #[test]
    fn random_shuffle() {
        assert_eq!(
            flagged("import random\nrandom.shuffle(x)"),
            vec!["random", "random.shuffle"]
        );
    }

    #[test]
    fn plain_function_is_deterministic() {
        assert!(flagged("def f(x):\n    return x\n").is_empty());
    }

    #[test]
    fn strings_and_comments_are_ignored() {
        assert!(flagged("s = 'random text'").is_empty());
        assert!(flagged("x = 1  # open the file").is_empty());
    }

    #[test]
    fn method_keywords_need_a_dot() {
        assert_eq!(flagged("data = fh.read()"), vec![".read"]);
        assert!(flagged("read = 1").is_empty());
        assert!(flagged("json.loads(s)").is_empty());
        assert_eq!(flagged("json.load(fh)"), vec!["json.load"]);
    }

    #[test]
    fn with_open() {
        assert_eq!(flagged("with open(p) as fh:\n    pass\n"), vec!["open"]);
    }

    #[test]
    fn custom_table() {
        let bl = Blacklist::parse("# c\nfoo.bar\n\nbaz  # trailing\n");
        assert_eq!(bl.keywords().collect::<Vec<_>>(), vec!["foo.bar", "baz"]);
        assert!(scan_blacklist("foo . bar()", &bl).is_flagged());
        assert!(!scan_blacklist("foo()", &bl).is_flagged());
    }
}
