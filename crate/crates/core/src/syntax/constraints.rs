//! Curriculum-level constraint checks.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ast::*;
use super::metrics::measure_complexity;

/// Methods the interpreter implements, per receiver type.
pub const METHOD_TABLE: &[(&str, &[&str])] = &[
    (
        "str",
        &[
            "rstrip", "lstrip", "strip", "split", "rsplit", "join", "upper", "lower", "replace",
            "find", "rfind", "count", "startswith", "endswith", "isalpha", "isdigit", "isalnum",
            "isspace", "islower", "isupper", "index", "rindex", "title", "capitalize", "zfill",
            "swapcase", "ljust", "rjust", "center", "partition", "removeprefix", "removesuffix",
            "splitlines",
        ],
    ),
    (
        "list",
        &[
            "append", "extend", "pop", "insert", "remove", "sort", "reverse", "index", "count",
            "copy", "clear",
        ],
    ),
    (
        "set",
        &[
            "add", "remove", "discard", "union", "intersection", "difference", "issubset",
            "issuperset", "pop", "copy", "symmetric_difference", "update", "isdisjoint", "clear",
        ],
    ),
    (
        "dict",
        &[
            "get", "keys", "values", "items", "pop", "update", "setdefault", "copy", "clear",
            "popitem",
        ],
    ),
    ("tuple", &["index", "count"]),
];

/// Free functions the interpreter implements.
pub const BUILTIN_FUNCTIONS: &[&str] = &[
    "len", "range", "enumerate", "zip", "sorted", "reversed", "filter", "map", "sum", "min",
    "max", "abs", "any", "all", "print", "str", "int", "float", "bool", "list", "tuple", "set",
    "dict", "ord", "chr", "round", "isinstance", "type", "divmod", "pow", "iter", "next", "repr",
];

pub fn methods_of(type_name: &str) -> Option<&'static [&'static str]> {
    METHOD_TABLE
        .iter()
        .find(|(t, _)| *t == type_name)
        .map(|(_, m)| *m)
}

fn is_known_method(name: &str) -> bool {
    METHOD_TABLE.iter().any(|(_, ms)| ms.contains(&name))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("unknown type `{0}`")]
    UnknownType(String),
    #[error("`{method}` is not a method of `{ty}`")]
    UnknownMethod { ty: String, method: String },
    #[error("level must be 1, 2 or 3 (got {0})")]
    BadLevel(String),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("missing key `{0}`")]
    MissingKey(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintSpec {
    pub level: u8,
    pub required_type: String,
    pub required_method: String,
    pub min_method_calls: usize,
    pub max_cf_depth: usize,
}

impl ConstraintSpec {
    /// Spec with the level's default counts.
    pub fn new(level: u8, ty: &str, method: &str) -> Result<ConstraintSpec, ConfigError> {
        if !(1..=3).contains(&level) {
            return Err(ConfigError::BadLevel(level.to_string()));
        }
        let methods = methods_of(ty).ok_or_else(|| ConfigError::UnknownType(ty.to_string()))?;
        if !methods.contains(&method) {
            return Err(ConfigError::UnknownMethod {
                ty: ty.to_string(),
                method: method.to_string(),
            });
        }
        Ok(ConstraintSpec {
            level,
            required_type: ty.to_string(),
            required_method: method.to_string(),
            min_method_calls: if level == 1 { 1 } else { 2 },
            max_cf_depth: level as usize,
        })
    }

    /// Parse `key=value` lines (keys: level, type, method, min_method_calls,
    /// max_cf_depth) or a JSON object with the same keys.
    pub fn parse(text: &str) -> Result<ConstraintSpec, ConfigError> {
        let mut pairs: Vec<(String, String, usize)> = Vec::new();
        if text.trim_start().starts_with('{') {
            let v: serde_json::Value =
                serde_json::from_str(text).map_err(|e| ConfigError::Malformed {
                    line: e.line(),
                    message: e.to_string(),
                })?;
            let obj = v.as_object().ok_or(ConfigError::Malformed {
                line: 1,
                message: "expected an object".into(),
            })?;
            for (k, v) in obj {
                let s = match v {
                    serde_json::Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                pairs.push((k.clone(), s, 1));
            }
        } else {
            for (i, raw) in text.lines().enumerate() {
                let line = raw.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Malformed {
                    line: i + 1,
                    message: format!("expected key=value, got {line:?}"),
                })?;
                pairs.push((k.trim().to_string(), v.trim().to_string(), i + 1));
            }
        }
        let get = |key: &str| pairs.iter().find(|(k, _, _)| k == key);
        let level_s = get("level").ok_or(ConfigError::MissingKey("level"))?;
        let level: u8 = level_s
            .1
            .parse()
            .map_err(|_| ConfigError::BadLevel(level_s.1.clone()))?;
        let ty = get("type").ok_or(ConfigError::MissingKey("type"))?;
        let method = get("method").ok_or(ConfigError::MissingKey("method"))?;
        let mut spec = ConstraintSpec::new(level, &ty.1, &method.1)?;
        for (k, v, line) in &pairs {
            let num = || {
                v.parse::<usize>().map_err(|_| ConfigError::Malformed {
                    line: *line,
                    message: format!("`{k}` must be a non-negative integer"),
                })
            };
            match k.as_str() {
                "level" | "type" | "method" => {}
                "min_method_calls" => spec.min_method_calls = num()?,
                "max_cf_depth" => spec.max_cf_depth = num()?,
                other => {
                    return Err(ConfigError::Malformed {
                        line: *line,
                        message: format!("unknown key `{other}`"),
                    })
                }
            }
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleResult {
    pub rule: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub passed: bool,
    pub rules: Vec<RuleResult>,
}

impl ConstraintReport {
    /// Details of the failed rules.
    pub fn violations(&self) -> Vec<&str> {
        self.rules
            .iter()
            .filter(|r| !r.passed)
            .map(|r| r.detail.as_str())
            .collect()
    }
}

struct Census {
    method_calls: Vec<String>,
    if_count: usize,
    for_count: usize,
    while_count: usize,
    ternaries: usize,
    comprehensions: usize,
}

fn census(tree: &SyntaxTree) -> Census {
    let mut c = Census {
        method_calls: Vec::new(),
        if_count: 0,
        for_count: 0,
        while_count: 0,
        ternaries: 0,
        comprehensions: 0,
    };
    tree.walk_stmts(&mut |s| {
        match &s.kind {
            StmtKind::If { .. } => c.if_count += 1,
            StmtKind::For { .. } => c.for_count += 1,
            StmtKind::While { .. } => c.while_count += 1,
            _ => {}
        }
        stmt_exprs(s, &mut |e| {
            walk_expr(e, &mut |x| match &x.kind {
                ExprKind::Call { func, .. } => {
                    if let ExprKind::Attribute { attr, .. } = &func.kind {
                        c.method_calls.push(attr.clone());
                    }
                }
                ExprKind::IfExp { .. } => c.ternaries += 1,
                ExprKind::ListComp { .. }
                | ExprKind::SetComp { .. }
                | ExprKind::DictComp { .. }
                | ExprKind::GeneratorExp { .. } => c.comprehensions += 1,
                _ => {}
            })
        });
    });
    c
}

pub fn validate_constraints(tree: &SyntaxTree, spec: &ConstraintSpec) -> ConstraintReport {
    let c = census(tree);
    let depth = measure_complexity(tree).cf_nesting_depth;
    let mut rules = Vec::new();
    let mut push = |rule: &str, passed: bool, detail: String| {
        rules.push(RuleResult {
            rule: rule.to_string(),
            passed,
            detail,
        })
    };

    let calls = c
        .method_calls
        .iter()
        .filter(|m| **m == spec.required_method)
        .count();
    push(
        "method-calls",
        calls >= spec.min_method_calls,
        format!(
            "`{}` called {calls} time(s), need at least {}",
            spec.required_method, spec.min_method_calls
        ),
    );

    if spec.level >= 2 {
        let others: BTreeSet<&str> = c
            .method_calls
            .iter()
            .map(String::as_str)
            .filter(|m| *m != spec.required_method && is_known_method(m))
            .collect();
        let ok = !others.is_empty();
        push(
            "additional-method",
            ok,
            if ok {
                format!(
                    "additional methods: {}",
                    others.into_iter().collect::<Vec<_>>().join(", ")
                )
            } else {
                "missing additional built-in method".to_string()
            },
        );
    }

    match spec.level {
        1 => {
            let any_cf = c.if_count + c.for_count + c.while_count + c.ternaries + c.comprehensions;
            push(
                "no-control-flow",
                any_cf == 0 && depth <= 1,
                if any_cf == 0 && depth <= 1 {
                    "no control flow".to_string()
                } else {
                    "control flow not allowed at level 1".to_string()
                },
            );
        }
        2 => {
            let has = c.if_count + c.for_count > 0;
            push(
                "shallow-control-flow",
                has,
                if has {
                    "has if/for".to_string()
                } else {
                    "missing if/for statement".to_string()
                },
            );
            push(
                "no-nesting",
                depth <= 2,
                if depth <= 2 {
                    format!("nesting depth {depth}")
                } else {
                    "nested control flow not allowed at level 2".to_string()
                },
            );
        }
        _ => {
            push(
                "nested-control-flow",
                depth >= 3,
                if depth >= 3 {
                    format!("nesting depth {depth}")
                } else {
                    "missing nested control flow".to_string()
                },
            );
            push(
                "max-depth",
                depth <= spec.max_cf_depth,
                format!("nesting depth {depth}, maximum {}", spec.max_cf_depth),
            );
        }
    }

    ConstraintReport {
        passed: rules.iter().all(|r| r.passed),
        rules,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;

    const LEVEL1: &str = "def f(s):\n    return s.rstrip()\nf('a ')\n";

    #[test]
    fn level1_program() {
        let tree = parse(LEVEL1).unwrap();
        let r = validate_constraints(&tree, &ConstraintSpec::new(1, "str", "rstrip").unwrap());
        assert!(r.passed, "{r:?}");
        let r = validate_constraints(&tree, &ConstraintSpec::new(3, "str", "rstrip").unwrap());
        assert!(!r.passed);
        assert!(r.violations().contains(&"missing nested control flow"));
    }

    #[test]
    fn config_errors() {
        assert_eq!(
            ConstraintSpec::new(1, "str", "append"),
            Err(ConfigError::UnknownMethod {
                ty: "str".into(),
                method: "append".into()
            })
        );
        assert!(matches!(
            ConstraintSpec::new(1, "widget", "x"),
            Err(ConfigError::UnknownType(_))
        ));
        assert!(matches!(ConstraintSpec::parse("level=4\ntype=str\nmethod=strip"), Err(ConfigError::BadLevel(_))));
    }

    #[test]
    fn parse_key_value_and_json() {
        let a = ConstraintSpec::parse("level=3\ntype=str\nmethod=rstrip\nmax_cf_depth=4\n").unwrap();
        let b = ConstraintSpec::parse(
            r#"{"level": 3, "type": "str", "method": "rstrip", "max_cf_depth": 4}"#,
        )
        .unwrap();
        assert_eq!(a, b);
        assert_eq!(a.min_method_calls, 2);
        assert_eq!(a.max_cf_depth, 4);
    }

    #[test]
    fn level2_rejects_nesting() {
        let src = "def f(xs):\n    for x in xs:\n        if x:\n            xs.append(x.upper())\n    return xs\n";
        let r = validate_constraints(&parse(src).unwrap(), &ConstraintSpec::new(2, "list", "append").unwrap());
        assert!(r.violations().contains(&"nested control flow not allowed at level 2"));
    }
}
