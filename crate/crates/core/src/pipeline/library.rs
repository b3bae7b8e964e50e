//! Fill-the-assertion cases for library-using programs, built from a task's
//! documented example and its reference solution.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::syntax::{scan_blacklist, Blacklist, BlacklistVerdict};

/// Input statements of an example and the stdout they print.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LibraryExample {
    pub inputs: Vec<String>,
    pub stdout: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LibraryTask {
    #[serde(default)]
    pub id: Option<String>,
    /// Task description, usually containing a `>>>` example.
    #[serde(default)]
    pub prompt: String,
    pub solution: String,
    /// Pre-extracted example; parsed from `prompt` when absent.
    #[serde(default)]
    pub example: Option<LibraryExample>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LibraryCase {
    pub source: String,
    pub driver: Vec<String>,
    pub expected: String,
    pub task: String,
    /// Problem text shown to a model.
    pub problem: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum Rejection {
    Blacklist { matched: Vec<String> },
    NoExample,
}

/// The first `>>>` block of `prompt`: its statements (with `...`
/// continuations) and the output lines after the last one, up to a blank
/// line, a closing docstring quote or the next prompt.
pub fn parse_docstring_example(prompt: &str) -> Option<LibraryExample> {
    let mut inputs: Vec<String> = Vec::new();
    let mut out: Vec<&str> = Vec::new();
    for raw in prompt.lines() {
        let line = raw.trim();
        if let Some(stmt) = line.strip_prefix(">>>") {
            if !out.is_empty() {
                break;
            }
            inputs.push(stmt.strip_prefix(' ').unwrap_or(stmt).to_string());
        } else if let (Some(cont), Some(last)) = (line.strip_prefix("..."), inputs.last_mut()) {
            if out.is_empty() {
                last.push('\n');
                last.push_str(cont.strip_prefix(' ').unwrap_or(cont));
            }
        } else if !inputs.is_empty() {
            if line.is_empty() || line.starts_with("\"\"\"") || line.starts_with("'''") {
                break;
            }
            out.push(line);
        }
    }
    (!inputs.is_empty() && !out.is_empty()).then(|| LibraryExample {
        inputs,
        stdout: out.join("\n"),
    })
}

/// Rewrite the final printing statement as a masked assertion.
fn driver_lines(inputs: &[String]) -> Vec<String> {
    let mut lines = inputs.to_vec();
    if let Some(last) = lines.pop() {
        let t = last.trim();
        let target = t
            .strip_prefix("print(")
            .and_then(|r| r.strip_suffix(')'))
            .unwrap_or(t);
        lines.push(format!("assert {target} == ????"));
    }
    lines
}

pub fn build_library_io_case(task: &LibraryTask, blacklist: &Blacklist) -> Result<LibraryCase, Rejection> {
    let example = match &task.example {
        Some(e) => Some(e.clone()),
        None => parse_docstring_example(&task.prompt),
    };
    let example = example
        .filter(|e| !e.inputs.is_empty() && !e.stdout.trim().is_empty())
        .ok_or(Rejection::NoExample)?;
    let mut matched = BTreeSet::new();
    let inputs = example.inputs.join("\n");
    for text in [task.solution.as_str(), task.prompt.as_str(), inputs.as_str()] {
        if let BlacklistVerdict::Flagged { matched: m } = scan_blacklist(text, blacklist) {
            matched.extend(m);
        }
    }
    if !matched.is_empty() {
        return Err(Rejection::Blacklist {
            matched: matched.into_iter().collect(),
        });
    }
    let driver = driver_lines(&example.inputs);
    let problem = format!(
        "Your task is to fill the assert statement.\n\n{}\n\n{}\n",
        task.solution.trim_end(),
        driver.join("\n")
    );
    Ok(LibraryCase {
        source: task.solution.clone(),
        driver,
        expected: example.stdout,
        task: "fill-the-assertion".into(),
        problem,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const PROMPT: &str = "from collections import Counter\nimport itertools\n\ndef task_func(d):\n    \"\"\"\n    Count the occurrence of each integer.\n\n    Example:\n    >>> d = {'a': [1, 2, 3, 1], 'b': [3, 4, 5], 'c': [1, 2]}\n    >>> count_dict = task_func(d)\n    >>> print(count_dict)\n    {1: 3, 2: 2, 3: 2, 4: 1, 5: 1}\n    \"\"\"\n";
    const SOLUTION: &str = "from collections import Counter\nimport itertools\n\ndef task_func(d):\n    count_dict = Counter(itertools.chain.from_iterable(d.values()))\n    return dict(count_dict)\n";

    #[test]
    fn counter_example() {
        let task = LibraryTask {
            id: None,
            prompt: PROMPT.into(),
            solution: SOLUTION.into(),
            example: None,
        };
        let case = build_library_io_case(&task, &Blacklist::default()).unwrap();
        assert_eq!(case.expected, "{1: 3, 2: 2, 3: 2, 4: 1, 5: 1}");
        assert_eq!(
            case.driver,
            vec![
                "d = {'a': [1, 2, 3, 1], 'b': [3, 4, 5], 'c': [1, 2]}",
                "count_dict = task_func(d)",
                "assert count_dict == ????",
            ]
        );
        assert!(case.problem.starts_with("Your task is to fill the assert statement."));
    }

    #[test]
    fn rejections() {
        let shuffled = LibraryTask {
            id: None,
            prompt: PROMPT.into(),
            solution: "import random\ndef task_func(d):\n    random.shuffle(d)\n    return d\n".into(),
            example: None,
        };
        assert!(matches!(
            build_library_io_case(&shuffled, &Blacklist::default()),
            Err(Rejection::Blacklist { matched }) if matched.contains(&"random.shuffle".to_string())
        ));
        let bare = LibraryTask {
            id: None,
            prompt: "def task_func(d):\n    \"\"\"No example.\"\"\"\n".into(),
            solution: SOLUTION.into(),
            example: None,
        };
        assert_eq!(build_library_io_case(&bare, &Blacklist::default()), Err(Rejection::NoExample));
    }
}
