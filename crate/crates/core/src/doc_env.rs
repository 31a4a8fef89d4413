//! Document search and lookup tools for multi-hop question answering.
//!
//! Tools are free; only the model calls that read their output are charged.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use thiserror::Error;

/// Sentences returned by a successful search.
pub const SEARCH_SENTENCES: usize = 5;
/// Titles listed when a search has no exact hit.
pub const SIMILAR_TITLES: usize = 5;

pub const NO_RESULTS: &str = "No results.";
pub const NO_MORE_RESULTS: &str = "No more results.";
pub const NO_DOCUMENT: &str = "Tool error: no document selected; call Search first.";

#[derive(Debug, Error)]
pub enum DocStoreError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: empty document (first line must be the title)")]
    EmptyDocument { path: String },
    #[error("duplicate document title {0:?}")]
    DuplicateTitle(String),
}

/// What a store returns for one query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchHit {
    Document { title: String, sentences: Vec<String> },
    Similar(Vec<String>),
    NoResults,
    /// Backend failure, passed to the agent as text.
    Error(String),
}

#[derive(Debug)]
pub enum DocStore {
    /// Immutable in-memory corpus: title -> ordered sentences.
    Local(BTreeMap<String, Vec<String>>),
    Live(LiveEncyclopedia),
}

impl DocStore {
    pub fn local(documents: impl IntoIterator<Item = (String, Vec<String>)>) -> Self {
        DocStore::Local(documents.into_iter().collect())
    }

    /// One document per `.txt` file: first line is the title, each following
    /// non-empty line is a sentence.
    pub fn load_dir(dir: &Path) -> Result<Self, DocStoreError> {
        let io = |source| DocStoreError::Io { path: dir.display().to_string(), source };
        let mut paths: Vec<_> = fs::read_dir(dir)
            .map_err(io)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "txt"))
            .collect();
        paths.sort();
        let mut docs = BTreeMap::new();
        for path in paths {
            let text = fs::read_to_string(&path)
                .map_err(|source| DocStoreError::Io { path: path.display().to_string(), source })?;
            let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
            let title = lines
                .next()
                .ok_or_else(|| DocStoreError::EmptyDocument { path: path.display().to_string() })?
                .to_string();
            let sentences: Vec<String> = lines.map(str::to_string).collect();
            if docs.insert(title.clone(), sentences).is_some() {
                return Err(DocStoreError::DuplicateTitle(title));
            }
        }
        Ok(DocStore::Local(docs))
    }

    pub fn len(&self) -> usize {
        match self {
            DocStore::Local(docs) => docs.len(),
            DocStore::Live(_) => 0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn query(&self, query: &str) -> SearchHit {
        match self {
            DocStore::Local(docs) => local_query(docs, query),
            DocStore::Live(live) => live.query(query),
        }
    }
}

fn local_query(docs: &BTreeMap<String, Vec<String>>, query: &str) -> SearchHit {
    let q = query.trim().to_lowercase();
    if docs.is_empty() || q.is_empty() {
        return SearchHit::NoResults;
    }
    if let Some((title, sentences)) = docs.iter().find(|(t, _)| t.to_lowercase() == q) {
        return SearchHit::Document { title: title.clone(), sentences: sentences.clone() };
    }
    let mut ranked: Vec<(bool, f64, &String)> = docs
        .keys()
        .map(|title| {
            let lower = title.to_lowercase();
            let prefix = lower.starts_with(&q) || lower.split_whitespace().any(|w| w.starts_with(&q));
            let whole = strsim::jaro_winkler(&q, &lower);
            let best_word = lower
                .split_whitespace()
                .map(|w| strsim::jaro_winkler(&q, w))
                .fold(0.0_f64, f64::max);
            (prefix, whole.max(best_word), title)
        })
        .collect();
    // prefix hits first, then similarity, then title
    ranked.sort_by(|a, b| b.0.cmp(&a.0).then(b.1.total_cmp(&a.1)).then(a.2.cmp(b.2)));
    SearchHit::Similar(ranked.into_iter().take(SIMILAR_TITLES).map(|(_, _, t)| t.clone()).collect())
}

/// Public encyclopedia adapter (MediaWiki action API). Excluded from tests.
#[derive(Debug)]
pub struct LiveEncyclopedia {
    endpoint: String,
    client: reqwest::blocking::Client,
}

impl LiveEncyclopedia {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Result<Self, reqwest::Error> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .user_agent("retrials-doc-env/0.1")
            .build()?;
        Ok(Self { endpoint: endpoint.into(), client })
    }

    pub fn wikipedia() -> Result<Self, reqwest::Error> {
        Self::new("https://en.wikipedia.org/w/api.php", Duration::from_secs(30))
    }

    fn get(&self, params: &[(&str, &str)]) -> Result<serde_json::Value, String> {
        self.client
            .get(&self.endpoint)
            .query(params)
            .send()
            .and_then(|r| r.error_for_status())
            .and_then(|r| r.json::<serde_json::Value>())
            .map_err(|e| e.to_string())
    }

    fn query(&self, query: &str) -> SearchHit {
        let page = self.get(&[
            ("action", "query"),
            ("prop", "extracts"),
            ("explaintext", "1"),
            ("redirects", "1"),
            ("format", "json"),
            ("titles", query),
        ]);
        let page = match page {
            Ok(v) => v,
            Err(e) => return SearchHit::Error(format!("Tool error: {e}")),
        };
        let found = page["query"]["pages"]
            .as_object()
            .and_then(|pages| pages.values().find(|p| p.get("missing").is_none()))
            .and_then(|p| Some((p["title"].as_str()?.to_string(), p["extract"].as_str()?.to_string())));
        if let Some((title, extract)) = found {
            let sentences = split_sentences(&extract);
            if !sentences.is_empty() {
                return SearchHit::Document { title, sentences };
            }
        }
        let search = self.get(&[
            ("action", "query"),
            ("list", "search"),
            ("format", "json"),
            ("srlimit", "5"),
            ("srsearch", query),
        ]);
        match search {
            Err(e) => SearchHit::Error(format!("Tool error: {e}")),
            Ok(v) => {
                let titles: Vec<String> = v["query"]["search"]
                    .as_array()
                    .map(|hits| hits.iter().filter_map(|h| h["title"].as_str().map(str::to_string)).collect())
                    .unwrap_or_default();
                if titles.is_empty() {
                    SearchHit::NoResults
                } else {
                    SearchHit::Similar(titles)
                }
            }
        }
    }
}

fn split_sentences(text: &str) -> Vec<String> {
    text.lines()
        .flat_map(|para| para.split_inclusive(". "))
        .map(str::trim)
        .filter(|s| !s.is_empty() && !s.starts_with("=="))
        .map(str::to_string)
        .collect()
}

/// Per-attempt tool state over a shared read-only store.
#[derive(Debug, Clone)]
pub struct DocEnv {
    store: Arc<DocStore>,
    current: Option<Vec<String>>,
    cursor: Option<(String, usize)>,
}

impl DocEnv {
    pub fn new(store: Arc<DocStore>) -> Self {
        Self { store, current: None, cursor: None }
    }

    /// Exact title hit: the document's first sentences. Otherwise a ranked
    /// list of similar titles. Every search resets the lookup cursor.
    pub fn search(&mut self, query: &str) -> String {
        self.cursor = None;
        match self.store.query(query) {
            SearchHit::Document { sentences, .. } => {
                let text = sentences.iter().take(SEARCH_SENTENCES).cloned().collect::<Vec<_>>().join(" ");
                self.current = Some(sentences);
                text
            }
            SearchHit::Similar(titles) => {
                self.current = None;
                let quoted: Vec<String> = titles.iter().map(|t| format!("{t:?}")).collect();
                format!("Could not find {:?}. Similar: [{}].", query.trim(), quoted.join(", "))
            }
            SearchHit::NoResults => {
                self.current = None;
                NO_RESULTS.to_string()
            }
            SearchHit::Error(e) => e,
        }
    }

    /// Next sentence of the current document containing `keyword`
    /// (case-insensitive). Repeating a keyword advances the cursor.
    pub fn lookup(&mut self, keyword: &str) -> String {
        let Some(sentences) = &self.current else {
            return NO_DOCUMENT.to_string();
        };
        let key = keyword.trim().to_lowercase();
        let start = match &self.cursor {
            Some((k, next)) if *k == key => *next,
            _ => 0,
        };
        let found = sentences
            .iter()
            .enumerate()
            .skip(start)
            .find(|(_, s)| s.to_lowercase().contains(&key));
        match found {
            Some((i, sentence)) => {
                self.cursor = Some((key, i + 1));
                sentence.clone()
            }
            None => {
                self.cursor = Some((key, sentences.len()));
                NO_MORE_RESULTS.to_string()
            }
        }
    }

    pub fn act(&mut self, action: &Action) -> Option<String> {
        match action {
            Action::Search(q) => Some(self.search(q)),
            Action::Lookup(k) => Some(self.lookup(k)),
            Action::Finish(_) => None,
        }
    }
}

/// Line-oriented tool protocol: `Search[...]`, `Lookup[...]`, `Finish[...]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    Search(String),
    Lookup(String),
    Finish(String),
}

/// Last action in `text`. Matching is on the bracketed verbs only, so prose
/// mentioning "search" is not an action.
pub fn parse_action(text: &str) -> Option<Action> {
    let mut best: Option<(usize, Action)> = None;
    for (verb, make) in [
        ("Search[", Action::Search as fn(String) -> Action),
        ("Lookup[", Action::Lookup),
        ("Finish[", Action::Finish),
    ] {
        if let Some(pos) = text.rfind(verb) {
            let rest = &text[pos + verb.len()..];
            if let Some(end) = rest.find(']') {
                let arg = rest[..end].trim().to_string();
                if best.as_ref().is_none_or(|(p, _)| pos > *p) {
                    best = Some((pos, make(arg)));
                }
            }
        }
    }
    best.map(|(_, a)| a)
}
