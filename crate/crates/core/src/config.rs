//! Flat `key = value` scenario files.
//!
//! ```text
//! # comment (also allowed after a value)
//! n      = 256
//! w      = abs                 # bare word or "quoted string"
//! f      = plateau(1)          # generator call, kept verbatim
//! svg    = true
//! gamma_schedule = [1e-2, 1e-3, 1e-4]
//! sweep.h = [0.05, 0.1, 0.3]   # one run per value; several sweeps form a product
//! ```
//!
//! Keys may appear once. Every key is checked against the list accepted by
//! the selected mode, and every error carries its line number.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: key `{key}` appears twice (first on line {first})")]
    Duplicate { line: usize, key: String, first: usize },
    #[error("line {line}: unknown key `{key}` for mode `{mode}`")]
    UnknownKey { line: usize, key: String, mode: String },
    #[error("line {line}: key `{key}`: {msg}")]
    Type { line: usize, key: String, msg: String },
    #[error("missing required key `{0}`")]
    Missing(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Bool(bool),
    Str(String),
    /// `name(args)`, stored as written.
    Call(String),
    List(Vec<Value>),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(v) => write!(f, "{v}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Str(s) => write!(f, "{s}"),
            Value::Call(c) => write!(f, "{c}"),
            Value::List(items) => {
                write!(f, "[")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, "]")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub value: Value,
    pub line: usize,
}

/// A parsed file: plain entries plus `sweep.` entries, both keyed in order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Config {
    pub entries: BTreeMap<String, Entry>,
    pub sweeps: BTreeMap<String, Entry>,
}

fn strip_comment(line: &str) -> &str {
    let mut in_quotes = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => in_quotes = !in_quotes,
            '#' if !in_quotes => return &line[..i],
            _ => {}
        }
    }
    line
}

fn split_top_level(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let (mut depth, mut start, mut in_quotes) = (0i32, 0usize, false);
    for (i, c) in s.char_indices() {
        match c {
            '"' => in_quotes = !in_quotes,
            '(' | '[' if !in_quotes => depth += 1,
            ')' | ']' if !in_quotes => depth -= 1,
            ',' if !in_quotes && depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

fn parse_value(text: &str, line: usize) -> Result<Value, ConfigError> {
    let t = text.trim();
    let err = |msg: String| ConfigError::Syntax { line, msg };
    if t.is_empty() {
        return Err(err("missing value".into()));
    }
    if let Some(inner) = t.strip_prefix('[') {
        let inner = inner
            .strip_suffix(']')
            .ok_or_else(|| err(format!("unterminated list `{t}`")))?;
        if inner.trim().is_empty() {
            return Ok(Value::List(Vec::new()));
        }
        return split_top_level(inner)
            .into_iter()
            .map(|p| parse_value(p, line))
            .collect::<Result<_, _>>()
            .map(Value::List);
    }
    if let Some(inner) = t.strip_prefix('"') {
        let inner = inner
            .strip_suffix('"')
            .ok_or_else(|| err(format!("unterminated string `{t}`")))?;
        return Ok(Value::Str(inner.to_string()));
    }
    match t {
        "true" => return Ok(Value::Bool(true)),
        "false" => return Ok(Value::Bool(false)),
        _ => {}
    }
    if let Ok(v) = t.parse::<f64>() {
        if !v.is_finite() {
            return Err(err(format!("`{t}` is not finite")));
        }
        return Ok(Value::Num(v));
    }
    if let Some(open) = t.find('(') {
        let name = &t[..open];
        let ident = !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if ident && t.ends_with(')') {
            return Ok(Value::Call(t.to_string()));
        }
        return Err(err(format!("malformed call `{t}`")));
    }
    if t.chars().all(|c| c.is_ascii_alphanumeric() || "_-./".contains(c)) {
        return Ok(Value::Str(t.to_string()));
    }
    Err(err(format!("cannot parse value `{t}`")))
}

fn valid_key(k: &str) -> bool {
    !k.is_empty() && k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Config::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = strip_comment(raw).trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                msg: format!("expected `key = value`, got `{body}`"),
            })?;
            let key = key.trim();
            let value = parse_value(value, line)?;
            let (map, name) = match key.strip_prefix("sweep.") {
                Some(k) => {
                    if !matches!(value, Value::List(ref v) if !v.is_empty()) {
                        return Err(ConfigError::Type {
                            line,
                            key: key.to_string(),
                            msg: "a sweep needs a nonempty list".into(),
                        });
                    }
                    (&mut cfg.sweeps, k)
                }
                None => (&mut cfg.entries, key),
            };
            if !valid_key(name) {
                return Err(ConfigError::Syntax {
                    line,
                    msg: format!("invalid key `{key}`"),
                });
            }
            if let Some(prev) = map.get(name) {
                return Err(ConfigError::Duplicate {
                    line,
                    key: key.to_string(),
                    first: prev.line,
                });
            }
            map.insert(name.to_string(), Entry { value, line });
        }
        Ok(cfg)
    }

    /// Rejects keys outside `allowed`, in plain entries and sweeps alike.
    pub fn check_keys(&self, mode: &str, allowed: &[&str]) -> Result<(), ConfigError> {
        for (k, e) in self.entries.iter().chain(&self.sweeps) {
            if !allowed.contains(&k.as_str()) {
                return Err(ConfigError::UnknownKey {
                    line: e.line,
                    key: k.clone(),
                    mode: mode.to_string(),
                });
            }
        }
        for (k, e) in &self.sweeps {
            if k == "mode" {
                return Err(ConfigError::Type {
                    line: e.line,
                    key: k.clone(),
                    msg: "the mode cannot be swept".into(),
                });
            }
        }
        Ok(())
    }

    /// Cartesian product of the sweeps over sorted key names, last key
    /// varying fastest. Without sweeps this is the single point `self`.
    pub fn expand(&self) -> Vec<Point> {
        let mut points = vec![Point {
            index: 0,
            overrides: Vec::new(),
            config: Config {
                entries: self.entries.clone(),
                sweeps: BTreeMap::new(),
            },
        }];
        for (key, entry) in &self.sweeps {
            let Value::List(values) = &entry.value else {
                unreachable!("checked at parse time")
            };
            let mut next = Vec::with_capacity(points.len() * values.len());
            for p in &points {
                for v in values {
                    let mut q = p.clone();
                    q.overrides.push((key.clone(), v.clone()));
                    q.config.entries.insert(
                        key.clone(),
                        Entry {
                            value: v.clone(),
                            line: entry.line,
                        },
                    );
                    next.push(q);
                }
            }
            points = next;
        }
        for (i, p) in points.iter_mut().enumerate() {
            p.index = i;
        }
        points
    }

    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key)
    }

    fn type_err(&self, key: &str, msg: String) -> ConfigError {
        ConfigError::Type {
            line: self.entries.get(key).map_or(0, |e| e.line),
            key: key.to_string(),
            msg,
        }
    }

    pub fn f64_opt(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.get(key).map(|e| &e.value) {
            None => Ok(None),
            Some(Value::Num(v)) => Ok(Some(*v)),
            Some(other) => Err(self.type_err(key, format!("expected a number, got `{other}`"))),
        }
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.f64_opt(key)?.unwrap_or(default))
    }

    pub fn f64_req(&self, key: &str) -> Result<f64, ConfigError> {
        self.f64_opt(key)?.ok_or_else(|| ConfigError::Missing(key.to_string()))
    }

    pub fn usize_opt(&self, key: &str) -> Result<Option<usize>, ConfigError> {
        match self.f64_opt(key)? {
            None => Ok(None),
            Some(v) if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 => Ok(Some(v as usize)),
            Some(v) => Err(self.type_err(key, format!("expected a nonnegative integer, got {v}"))),
        }
    }

    pub fn u64_opt(&self, key: &str) -> Result<Option<u64>, ConfigError> {
        match self.f64_opt(key)? {
            None => Ok(None),
            Some(v) if v >= 0.0 && v.fract() == 0.0 && v < 9.007_199_254_740_992e15 => Ok(Some(v as u64)),
            Some(v) => Err(self.type_err(key, format!("expected a nonnegative integer, got {v}"))),
        }
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.get(key).map(|e| &e.value) {
            None => Ok(default),
            Some(Value::Bool(b)) => Ok(*b),
            Some(other) => Err(self.type_err(key, format!("expected true or false, got `{other}`"))),
        }
    }

    pub fn str_opt(&self, key: &str) -> Result<Option<String>, ConfigError> {
        match self.get(key).map(|e| &e.value) {
            None => Ok(None),
            Some(Value::Str(s)) => Ok(Some(s.clone())),
            Some(other) => Err(self.type_err(key, format!("expected a word or string, got `{other}`"))),
        }
    }

    /// A generator call such as `plateau(1)`.
    pub fn call_req(&self, key: &str) -> Result<String, ConfigError> {
        match self.get(key).map(|e| &e.value) {
            None => Err(ConfigError::Missing(key.to_string())),
            Some(Value::Call(c)) => Ok(c.clone()),
            Some(other) => Err(self.type_err(key, format!("expected a generator call, got `{other}`"))),
        }
    }

    pub fn num_list_opt(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.get(key).map(|e| &e.value) {
            None => Ok(None),
            Some(Value::List(items)) => items
                .iter()
                .map(|v| match v {
                    Value::Num(x) => Ok(*x),
                    other => Err(self.type_err(key, format!("list entries must be numbers, got `{other}`"))),
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
            Some(other) => Err(self.type_err(key, format!("expected a list, got `{other}`"))),
        }
    }

    pub fn line_of(&self, key: &str) -> usize {
        self.get(key).map_or(0, |e| e.line)
    }

    /// Entries rendered as strings, for manifests.
    pub fn rendered(&self) -> BTreeMap<String, String> {
        self.entries
            .iter()
            .map(|(k, e)| (k.clone(), e.value.to_string()))
            .collect()
    }
}

/// One point of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub index: usize,
    pub overrides: Vec<(String, Value)>,
    pub config: Config,
}

impl Point {
    pub fn dir_name(&self) -> String {
        format!("point_{:03}", self.index)
    }
}
