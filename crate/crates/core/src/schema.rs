//! Schema language: class levels, ordinal attributes and numeric bins.
//!
//! A schema is written in a small line-oriented format:
//!
//! ```text
//! # comment
//! class P levels=Good,Average,Poor labels=1,2,3
//! attr GPA levels=Good,Average,Poor bins=[7.5,inf):Good,[6.5,7.5):Average,[5.0,6.5):Poor
//! attr PS levels=Good,Average,Poor
//! ```
//!
//! Level labels are matched case-insensitively everywhere; the declared
//! spelling is the canonical form.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchemaError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("`{owner}` declares level `{level}` twice")]
    DuplicateLevel { owner: String, level: String },
    #[error("`{0}` has an empty level list")]
    EmptyLevels(String),
    #[error("no class declaration")]
    MissingClass,
    #[error("class `{class}` has {levels} levels but {labels} numeric labels")]
    LabelCount {
        class: String,
        levels: usize,
        labels: usize,
    },
    #[error("class `{class}` repeats numeric label {label}")]
    DuplicateLabel { class: String, label: u32 },
    #[error("attribute `{attribute}`: bin references unknown level `{level}`")]
    UnknownBinLevel { attribute: String, level: String },
    #[error("attribute `{attribute}`: bin [{lo}, {hi}) is empty or not a number range")]
    InvalidBin { attribute: String, lo: f64, hi: f64 },
    #[error("attribute `{attribute}`: bins [{a_lo}, {a_hi}) and [{b_lo}, {b_hi}) overlap")]
    OverlappingBins {
        attribute: String,
        a_lo: f64,
        a_hi: f64,
        b_lo: f64,
        b_hi: f64,
    },
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("attribute `{0}` has no numeric bins")]
    NoBins(String),
    #[error("attribute `{attribute}`: value {value} is not a finite number")]
    NotFinite { attribute: String, value: f64 },
    #[error("attribute `{attribute}`: value {value} is outside every declared bin")]
    OutOfRange { attribute: String, value: f64 },
}

/// Case-folded form used for every label and name comparison.
pub(crate) fn fold(s: &str) -> String {
    s.trim().to_lowercase()
}

/// Half-open interval `[lo, hi)` over a raw score, mapped to a level index.
#[derive(Debug, Clone, PartialEq)]
pub struct Bin {
    pub lo: f64,
    pub hi: f64,
    pub level: usize,
}

impl Bin {
    pub fn contains(&self, raw: f64) -> bool {
        self.lo <= raw && raw < self.hi
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeDef {
    pub name: String,
    pub levels: Vec<String>,
    pub bins: Vec<Bin>,
}

impl AttributeDef {
    pub fn new(name: impl Into<String>, levels: &[&str]) -> Self {
        Self {
            name: name.into(),
            levels: levels.iter().map(|s| s.to_string()).collect(),
            bins: Vec::new(),
        }
    }

    pub fn arity(&self) -> usize {
        self.levels.len()
    }

    pub fn level_index(&self, label: &str) -> Option<usize> {
        let key = fold(label);
        self.levels.iter().position(|l| fold(l) == key)
    }

    pub fn has_bins(&self) -> bool {
        !self.bins.is_empty()
    }

    /// Maps a raw score to the level whose bin contains it.
    pub fn bin(&self, raw: f64) -> Result<usize, SchemaError> {
        if !self.has_bins() {
            return Err(SchemaError::NoBins(self.name.clone()));
        }
        if !raw.is_finite() {
            return Err(SchemaError::NotFinite {
                attribute: self.name.clone(),
                value: raw,
            });
        }
        self.bins
            .iter()
            .find(|b| b.contains(raw))
            .map(|b| b.level)
            .ok_or(SchemaError::OutOfRange {
                attribute: self.name.clone(),
                value: raw,
            })
    }
}

/// Class levels (best first) plus the ordered attribute list.
///
/// Declaration order of attributes is significant: it breaks ranking ties.
#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    class_name: String,
    class_levels: Vec<String>,
    class_labels: Option<Vec<u32>>,
    attributes: Vec<AttributeDef>,
}

impl Schema {
    /// Builds a schema and checks every invariant.
    pub fn new(
        class_name: impl Into<String>,
        class_levels: Vec<String>,
        class_labels: Option<Vec<u32>>,
        attributes: Vec<AttributeDef>,
    ) -> Result<Self, SchemaError> {
        let schema = Self {
            class_name: class_name.into(),
            class_levels,
            class_labels,
            attributes,
        };
        schema.check()?;
        Ok(schema)
    }

    fn check(&self) -> Result<(), SchemaError> {
        check_levels(&self.class_name, &self.class_levels)?;
        if let Some(labels) = &self.class_labels {
            if labels.len() != self.class_levels.len() {
                return Err(SchemaError::LabelCount {
                    class: self.class_name.clone(),
                    levels: self.class_levels.len(),
                    labels: labels.len(),
                });
            }
            for (i, l) in labels.iter().enumerate() {
                if labels[..i].contains(l) {
                    return Err(SchemaError::DuplicateLabel {
                        class: self.class_name.clone(),
                        label: *l,
                    });
                }
            }
        }

        let mut seen = vec![fold(&self.class_name)];
        for attr in &self.attributes {
            let key = fold(&attr.name);
            if seen.contains(&key) {
                return Err(SchemaError::DuplicateName(attr.name.clone()));
            }
            seen.push(key);
            check_levels(&attr.name, &attr.levels)?;
            check_bins(attr)?;
        }
        Ok(())
    }

    pub fn class_name(&self) -> &str {
        &self.class_name
    }

    pub fn class_levels(&self) -> &[String] {
        &self.class_levels
    }

    pub fn class_labels(&self) -> Option<&[u32]> {
        self.class_labels.as_deref()
    }

    pub fn class_arity(&self) -> usize {
        self.class_levels.len()
    }

    pub fn attributes(&self) -> &[AttributeDef] {
        &self.attributes
    }

    pub fn attribute(&self, index: usize) -> &AttributeDef {
        &self.attributes[index]
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        let key = fold(name);
        self.attributes.iter().position(|a| fold(&a.name) == key)
    }

    pub fn is_class_column(&self, name: &str) -> bool {
        fold(name) == fold(&self.class_name)
    }

    /// Resolves a class cell: either a level label or its numeric alias.
    pub fn class_index(&self, label: &str) -> Option<usize> {
        let key = fold(label);
        if let Some(i) = self.class_levels.iter().position(|l| fold(l) == key) {
            return Some(i);
        }
        let n: u32 = key.parse().ok()?;
        self.class_labels.as_ref()?.iter().position(|&l| l == n)
    }

    /// Renders the class level used when exporting data (alias if declared).
    pub fn class_cell(&self, index: usize) -> String {
        match &self.class_labels {
            Some(labels) => labels[index].to_string(),
            None => self.class_levels[index].clone(),
        }
    }

    /// Bins `raw` for the named attribute and returns the canonical level label.
    pub fn bin_numeric(&self, attribute: &str, raw: f64) -> Result<&str, SchemaError> {
        let idx = self
            .attribute_index(attribute)
            .ok_or_else(|| SchemaError::UnknownAttribute(attribute.to_string()))?;
        let attr = &self.attributes[idx];
        attr.bin(raw).map(|level| attr.levels[level].as_str())
    }

    /// Serializes back into the schema language. Parsing the output yields
    /// an equal schema.
    pub fn to_dsl(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "class {} levels={}",
            self.class_name,
            self.class_levels.join(",")
        )?;
        if let Some(labels) = &self.class_labels {
            let labels: Vec<String> = labels.iter().map(|l| l.to_string()).collect();
            write!(f, " labels={}", labels.join(","))?;
        }
        writeln!(f)?;
        for attr in &self.attributes {
            write!(f, "attr {} levels={}", attr.name, attr.levels.join(","))?;
            if attr.has_bins() {
                let bins: Vec<String> = attr
                    .bins
                    .iter()
                    .map(|b| format!("[{:?},{:?}):{}", b.lo, b.hi, attr.levels[b.level]))
                    .collect();
                write!(f, " bins={}", bins.join(","))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn check_levels(owner: &str, levels: &[String]) -> Result<(), SchemaError> {
    if levels.is_empty() {
        return Err(SchemaError::EmptyLevels(owner.to_string()));
    }
    for (i, level) in levels.iter().enumerate() {
        if levels[..i].iter().any(|l| fold(l) == fold(level)) {
            return Err(SchemaError::DuplicateLevel {
                owner: owner.to_string(),
                level: level.clone(),
            });
        }
    }
    Ok(())
}

fn check_bins(attr: &AttributeDef) -> Result<(), SchemaError> {
    for b in &attr.bins {
        if b.lo.is_nan() || b.hi.is_nan() || b.lo >= b.hi {
            return Err(SchemaError::InvalidBin {
                attribute: attr.name.clone(),
                lo: b.lo,
                hi: b.hi,
            });
        }
        if b.level >= attr.arity() {
            return Err(SchemaError::UnknownBinLevel {
                attribute: attr.name.clone(),
                level: format!("#{}", b.level),
            });
        }
    }
    let mut sorted: Vec<&Bin> = attr.bins.iter().collect();
    sorted.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    for pair in sorted.windows(2) {
        if pair[0].hi > pair[1].lo {
            return Err(SchemaError::OverlappingBins {
                attribute: attr.name.clone(),
                a_lo: pair[0].lo,
                a_hi: pair[0].hi,
                b_lo: pair[1].lo,
                b_hi: pair[1].hi,
            });
        }
    }
    Ok(())
}

/// Parses schema-language source into a validated [`Schema`].
pub fn parse_schema(text: &str) -> Result<Schema, SchemaError> {
    let mut class: Option<(String, Vec<String>, Option<Vec<u32>>)> = None;
    let mut attributes = Vec::new();

    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let syntax = |reason: String| SchemaError::Syntax {
            line: line_no,
            reason,
        };

        let mut tokens = line.split_whitespace();
        let keyword = tokens.next().unwrap_or_default();
        let name = tokens
            .next()
            .ok_or_else(|| syntax(format!("`{keyword}` needs a name")))?;
        if !is_identifier(name) {
            return Err(syntax(format!("`{name}` is not a valid identifier")));
        }

        let mut levels = None;
        let mut labels = None;
        let mut bins_src = None;
        for token in tokens {
            let (key, value) = token
                .split_once('=')
                .ok_or_else(|| syntax(format!("expected key=value, found `{token}`")))?;
            let slot = match (keyword, key) {
                (_, "levels") => &mut levels,
                ("class", "labels") => &mut labels,
                ("attr", "bins") => &mut bins_src,
                _ => return Err(syntax(format!("unexpected option `{key}` for `{keyword}`"))),
            };
            if slot.replace(value).is_some() {
                return Err(syntax(format!("option `{key}` given twice")));
            }
        }

        let levels: Vec<String> = match levels {
            Some(v) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect(),
            None => return Err(syntax(format!("`{name}` is missing levels="))),
        };

        match keyword {
            "class" => {
                if class.is_some() {
                    return Err(syntax("more than one class declaration".into()));
                }
                let labels = labels
                    .map(|v| {
                        v.split(',')
                            .map(|s| {
                                s.trim()
                                    .parse::<u32>()
                                    .map_err(|_| syntax(format!("label `{s}` is not a number")))
                            })
                            .collect::<Result<Vec<_>, _>>()
                    })
                    .transpose()?;
                class = Some((name.to_string(), levels, labels));
            }
            "attr" => {
                let mut attr = AttributeDef {
                    name: name.to_string(),
                    levels,
                    bins: Vec::new(),
                };
                if let Some(src) = bins_src {
                    attr.bins = parse_bins(&attr, src).map_err(|e| match e {
                        BinParse::Syntax(reason) => syntax(reason),
                        BinParse::Schema(e) => e,
                    })?;
                }
                attributes.push(attr);
            }
            other => return Err(syntax(format!("unknown declaration `{other}`"))),
        }
    }

    let (class_name, class_levels, class_labels) = class.ok_or(SchemaError::MissingClass)?;
    Schema::new(class_name, class_levels, class_labels, attributes)
}

enum BinParse {
    Syntax(String),
    Schema(SchemaError),
}

/// `[lo,hi):Level,[lo,hi):Level,...`
fn parse_bins(attr: &AttributeDef, src: &str) -> Result<Vec<Bin>, BinParse> {
    let mut bins = Vec::new();
    let mut rest = src;
    while !rest.is_empty() {
        let body = rest
            .strip_prefix('[')
            .ok_or_else(|| BinParse::Syntax(format!("bin must start with `[`: `{rest}`")))?;
        let close = body
            .find("):")
            .ok_or_else(|| BinParse::Syntax(format!("bin must end with `):level`: `{rest}`")))?;
        let (lo, hi) = body[..close]
            .split_once(',')
            .ok_or_else(|| BinParse::Syntax(format!("bin needs `lo,hi`: `{rest}`")))?;
        let number = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| BinParse::Syntax(format!("bin bound `{s}` is not a number")))
        };
        let (lo, hi) = (number(lo)?, number(hi)?);

        let after = &body[close + 2..];
        let (label, tail) = match after.find(",[") {
            Some(i) => (&after[..i], &after[i + 1..]),
            None => (after, ""),
        };
        let level = attr.level_index(label).ok_or_else(|| {
            BinParse::Schema(SchemaError::UnknownBinLevel {
                attribute: attr.name.clone(),
                level: label.to_string(),
            })
        })?;
        bins.push(Bin { lo, hi, level });
        rest = tail;
    }
    Ok(bins)
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_' || c == '.' || c == '-')
}
