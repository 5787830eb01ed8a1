//! The JSON spec file holding a channel, an optional design and metadata.
//!
//! Canonical form: keys sorted, two-space indentation, innermost numeric
//! arrays on one line, sizes as integers and probabilities as plain
//! decimals with 17 significant digits. Parsing a canonical file and writing
//! it back reproduces it byte for byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::prob::{validate_channel, Alphabets, ChannelSpec, InputDesign};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Meta {
    pub name: Option<String>,
    pub description: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpecFile {
    pub spec: ChannelSpec,
    pub design: Option<InputDesign>,
    pub meta: Meta,
}

fn parse_err(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse { location: location.into(), message: message.into() }
}

/// Escapes one JSON-pointer token.
fn token(s: &str) -> String {
    s.replace('~', "~0").replace('/', "~1")
}

fn object<'a>(v: &'a Value, path: &str) -> Result<&'a serde_json::Map<String, Value>> {
    v.as_object().ok_or_else(|| parse_err(path_or_root(path), "expected an object"))
}

fn path_or_root(path: &str) -> String {
    if path.is_empty() {
        "/".into()
    } else {
        path.into()
    }
}

fn check_keys(map: &serde_json::Map<String, Value>, path: &str, allowed: &[&str]) -> Result<()> {
    for k in map.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(parse_err(format!("{path}/{}", token(k)), format!("unknown field `{k}`")));
        }
    }
    Ok(())
}

fn required<'a>(map: &'a serde_json::Map<String, Value>, path: &str, key: &str) -> Result<&'a Value> {
    map.get(key).ok_or_else(|| parse_err(format!("{path}/{key}"), format!("missing required field `{key}`")))
}

fn size(v: &Value, path: &str) -> Result<usize> {
    match v.as_u64() {
        Some(n) if n >= 1 => Ok(n as usize),
        _ => Err(parse_err(path, "expected a positive integer")),
    }
}

fn number(v: &Value, path: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| parse_err(path, "expected a number"))
}

/// Reads a nested array of the given shape into a flat row-major vector.
fn nested(v: &Value, path: &str, shape: &[usize], out: &mut Vec<f64>) -> Result<()> {
    let Some((&len, rest)) = shape.split_first() else {
        out.push(number(v, path)?);
        return Ok(());
    };
    let arr = v.as_array().ok_or_else(|| parse_err(path, format!("expected an array of {len} entries")))?;
    if arr.len() != len {
        return Err(parse_err(path, format!("expected {len} entries, found {}", arr.len())));
    }
    for (i, item) in arr.iter().enumerate() {
        nested(item, &format!("{path}/{i}"), rest, out)?;
    }
    Ok(())
}

impl SpecFile {
    /// Builds and validates a spec file from a JSON value.
    pub fn from_value(root: &Value) -> Result<Self> {
        let top = object(root, "")?;
        check_keys(top, "", &["alphabets", "channel", "design", "meta"])?;

        let al = object(required(top, "", "alphabets")?, "/alphabets")?;
        check_keys(al, "/alphabets", &["x1", "x2", "y2", "y3", "z"])?;
        let dim = |k: &str| -> Result<usize> { size(required(al, "/alphabets", k)?, &format!("/alphabets/{k}")) };
        let a = Alphabets::new(dim("x1")?, dim("x2")?, dim("y2")?, dim("y3")?, dim("z")?);

        let mut law = Vec::with_capacity(a.law_len());
        nested(required(top, "", "channel")?, "/channel", &[a.x1, a.x2, a.y2, a.y3, a.z], &mut law)?;
        let spec = ChannelSpec::new(a, law)?;
        let mut report = validate_channel(&spec);

        let design = match top.get("design") {
            None => None,
            Some(dv) => {
                let d = object(dv, "/design")?;
                check_keys(d, "/design", &["comp_size", "p_x1", "p_x2", "q"])?;
                let comp = size(required(d, "/design", "comp_size")?, "/design/comp_size")?;
                let mut p_x1 = Vec::new();
                nested(required(d, "/design", "p_x1")?, "/design/p_x1", &[a.x1], &mut p_x1)?;
                let mut p_x2 = Vec::new();
                nested(required(d, "/design", "p_x2")?, "/design/p_x2", &[a.x2], &mut p_x2)?;
                let mut q = Vec::new();
                nested(required(d, "/design", "q")?, "/design/q", &[a.x2, a.y2, comp], &mut q)?;
                let design = InputDesign { p_x1, p_x2, comp_size: comp, q };
                report.extend(design.validate(a));
                Some(design)
            }
        };

        let mut meta = Meta::default();
        if let Some(mv) = top.get("meta") {
            let m = object(mv, "/meta")?;
            check_keys(m, "/meta", &["description", "name"])?;
            let text = |k: &str| -> Result<Option<String>> {
                m.get(k)
                    .map(|v| v.as_str().map(str::to_owned).ok_or_else(|| parse_err(format!("/meta/{k}"), "expected a string")))
                    .transpose()
            };
            meta = Meta { name: text("name")?, description: text("description")? };
        }

        report.into_result()?;
        Ok(SpecFile { spec, design, meta })
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text)
            .map_err(|e| parse_err(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
        Self::from_value(&v)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
        Self::parse_str(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_canonical_string())
            .map_err(|source| Error::Io { path: path.display().to_string(), source })
    }

    /// The design, or a usage error naming the command that needs it.
    pub fn require_design(&self, command: &str) -> Result<&InputDesign> {
        self.design
            .as_ref()
            .ok_or_else(|| Error::Usage(format!("`{command}` needs a `design` section in the spec file")))
    }

    pub fn to_canonical_string(&self) -> String {
        let a = self.spec.alphabets();
        let mut top = BTreeMap::new();
        let mut al = BTreeMap::new();
        for (k, v) in [("x1", a.x1), ("x2", a.x2), ("y2", a.y2), ("y3", a.y3), ("z", a.z)] {
            al.insert(k.to_string(), Node::Int(v as u64));
        }
        top.insert("alphabets".into(), Node::Obj(al));
        top.insert("channel".into(), shape_nodes(self.spec.law(), &[a.x1, a.x2, a.y2, a.y3, a.z]));
        if let Some(d) = &self.design {
            let mut dn = BTreeMap::new();
            dn.insert("comp_size".into(), Node::Int(d.comp_size as u64));
            dn.insert("p_x1".into(), shape_nodes(&d.p_x1, &[a.x1]));
            dn.insert("p_x2".into(), shape_nodes(&d.p_x2, &[a.x2]));
            dn.insert("q".into(), shape_nodes(&d.q, &[a.x2, a.y2, d.comp_size]));
            top.insert("design".into(), Node::Obj(dn));
        }
        let mut mn = BTreeMap::new();
        if let Some(s) = &self.meta.name {
            mn.insert("name".into(), Node::Str(s.clone()));
        }
        if let Some(s) = &self.meta.description {
            mn.insert("description".into(), Node::Str(s.clone()));
        }
        if !mn.is_empty() {
            top.insert("meta".into(), Node::Obj(mn));
        }
        let mut out = String::new();
        Node::Obj(top).write(&mut out, 0);
        out.push('\n');
        out
    }
}

enum Node {
    Obj(BTreeMap<String, Node>),
    Arr(Vec<Node>),
    Num(f64),
    Int(u64),
    Str(String),
}

fn shape_nodes(data: &[f64], shape: &[usize]) -> Node {
    match shape.split_first() {
        None => Node::Num(data[0]),
        Some((&len, rest)) => {
            let stride: usize = rest.iter().product();
            Node::Arr((0..len).map(|i| shape_nodes(&data[i * stride..(i + 1) * stride], rest)).collect())
        }
    }
}

impl Node {
    fn is_leaf(&self) -> bool {
        matches!(self, Node::Num(_) | Node::Int(_) | Node::Str(_))
    }

    fn write(&self, out: &mut String, indent: usize) {
        let pad = |n: usize| "  ".repeat(n);
        match self {
            Node::Num(x) => out.push_str(&format_decimal(*x)),
            Node::Int(n) => {
                let _ = write!(out, "{n}");
            }
            Node::Str(s) => out.push_str(&serde_json::to_string(s).expect("string serializes")),
            Node::Arr(items) if items.iter().all(Node::is_leaf) => {
                out.push('[');
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    it.write(out, indent);
                }
                out.push(']');
            }
            Node::Arr(items) => {
                out.push_str("[\n");
                for (i, it) in items.iter().enumerate() {
                    out.push_str(&pad(indent + 1));
                    it.write(out, indent + 1);
                    out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
                }
                out.push_str(&pad(indent));
                out.push(']');
            }
            Node::Obj(map) => {
                out.push_str("{\n");
                let n = map.len();
                for (i, (k, v)) in map.iter().enumerate() {
                    let _ = write!(out, "{}{}: ", pad(indent + 1), serde_json::to_string(k).expect("key serializes"));
                    v.write(out, indent + 1);
                    out.push_str(if i + 1 < n { ",\n" } else { "\n" });
                }
                out.push_str(&pad(indent));
                out.push('}');
            }
        }
    }
}

/// Plain decimal with 17 significant digits (`0` for zero).
pub fn format_decimal(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.16e}", x.abs());
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation");
    let exp: i32 = exp.parse().expect("exponent");
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let sign = if x < 0.0 { "-" } else { "" };
    if exp >= 0 {
        let int_len = exp as usize + 1;
        if int_len >= digits.len() {
            format!("{sign}{}{}.0", digits, "0".repeat(int_len - digits.len()))
        } else {
            format!("{sign}{}.{}", &digits[..int_len], &digits[int_len..])
        }
    } else {
        format!("{sign}0.{}{}", "0".repeat((-exp - 1) as usize), digits)
    }
}
