//! Prompt templates: plain-text assets laid out as
//! `prompts/<task>/<method>/<name>.txt`, with `{placeholder}` substitution.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::types::{Method, Task};

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("template {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Template names each method needs.
pub fn required_templates(method: Method) -> &'static [&'static str] {
    match method {
        Method::Io | Method::Cot => &["prompt"],
        Method::Tot => &["propose", "evaluate"],
        Method::Reflexion => &["answer", "reflect"],
    }
}

macro_rules! builtin_table {
    ($($task:literal / $method:literal / $name:literal),* $(,)?) => {
        fn builtin_text(task: &str, method: &str, name: &str) -> Option<&'static str> {
            match (task, method, name) {
                $(($task, $method, $name) => Some(include_str!(concat!(
                    "../../prompts/", $task, "/", $method, "/", $name, ".txt"
                ))),)*
                _ => None,
            }
        }
    };
}

builtin_table! {
    "game24"/"io"/"prompt", "game24"/"cot"/"prompt",
    "game24"/"tot"/"propose", "game24"/"tot"/"evaluate",
    "game24"/"reflexion"/"answer", "game24"/"reflexion"/"reflect",
    "humaneval"/"io"/"prompt", "humaneval"/"cot"/"prompt",
    "humaneval"/"tot"/"propose", "humaneval"/"tot"/"evaluate",
    "humaneval"/"reflexion"/"answer", "humaneval"/"reflexion"/"reflect",
    "hotpotqa"/"io"/"prompt", "hotpotqa"/"cot"/"prompt",
    "hotpotqa"/"tot"/"propose", "hotpotqa"/"tot"/"evaluate",
    "hotpotqa"/"reflexion"/"answer", "hotpotqa"/"reflexion"/"reflect",
}

/// The templates one (task, method) pair uses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSet {
    pub task: Task,
    pub method: Method,
    templates: BTreeMap<String, String>,
}

impl PromptSet {
    /// Templates compiled into the crate.
    pub fn builtin(task: Task, method: Method) -> Self {
        let templates = required_templates(method)
            .iter()
            .map(|name| {
                let text = builtin_text(task.as_str(), method.as_str(), name).expect("every builtin template exists");
                (name.to_string(), text.to_string())
            })
            .collect();
        Self { task, method, templates }
    }

    /// Reads `<dir>/<task>/<method>/<name>.txt` for every required name.
    pub fn load(dir: &Path, task: Task, method: Method) -> Result<Self, TemplateError> {
        let mut templates = BTreeMap::new();
        for name in required_templates(method) {
            let path = dir.join(task.as_str()).join(method.as_str()).join(format!("{name}.txt"));
            let text = fs::read_to_string(&path).map_err(|source| TemplateError::Io { path: path.clone(), source })?;
            templates.insert(name.to_string(), text);
        }
        Ok(Self { task, method, templates })
    }

    pub fn text(&self, name: &str) -> &str {
        self.templates
            .get(name)
            .unwrap_or_else(|| panic!("no template {name:?} for {}/{}", self.task, self.method))
    }

    pub fn render(&self, name: &str, vars: &[(&str, &str)]) -> String {
        render(self.text(name), vars)
    }

    /// Hex SHA-256 over every template's name and bytes.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (name, text) in &self.templates {
            h.update((name.len() as u64).to_le_bytes());
            h.update(name.as_bytes());
            h.update((text.len() as u64).to_le_bytes());
            h.update(text.as_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Single-pass substitution. Substituted values are never rescanned and
/// unknown `{names}` are left as written.
pub fn render(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let name_end = after.find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'));
        match name_end {
            Some(end) if after[end..].starts_with('}') => {
                let name = &after[..end];
                match vars.iter().find(|(k, _)| *k == name) {
                    Some((_, value)) => out.push_str(value),
                    None => {
                        out.push('{');
                        out.push_str(name);
                        out.push('}');
                    }
                }
                rest = &after[end + 1..];
            }
            _ => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}
