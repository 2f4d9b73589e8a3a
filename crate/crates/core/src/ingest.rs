//! Line-oriented file formats for schemas, objects, preferences and clusters.
//!
//! Schema:
//! ```text
//! # comment
//! attr brand
//! value Apple
//! value Lenovo
//! attr display numeric -inf inf
//! bin small -inf 13
//! bin large 13 inf
//! ```
//! Objects: `id,value1,...,valueD` (numeric fields may be raw numbers).
//! Preferences: `user_id,attribute,better,worse`; a line with only `user_id`
//! declares a user without preferences. Clusters: `cluster_id,user_id`.
//! Ids may carry a letter prefix (`o12`, `c3`). Blank lines and `#` comments
//! are ignored everywhere; a first line starting with `id`, `user`, or `cluster`
//! is treated as a header.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::ids::{ObjectId, UserId, ValueId};
use crate::profile::{ObjectRecord, UserProfile};
use crate::relation::PreferenceRelation;
use crate::schema::{Attribute, AttributeSchema, Bin, Binning};

fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn is_header(line: &str, words: &[&str]) -> bool {
    let first = line.split(',').next().unwrap_or("").trim().to_ascii_lowercase();
    words.contains(&first.as_str())
}

/// Parse an id with an optional alphabetic prefix.
pub fn parse_id(field: &str) -> Option<u64> {
    field
        .trim()
        .trim_start_matches(|c: char| c.is_ascii_alphabetic())
        .parse()
        .ok()
}

fn parse_f64(line: usize, s: &str) -> Result<f64> {
    s.parse().map_err(|_| parse_err(line, format!("`{s}` is not a number")))
}

pub fn parse_schema(text: &str) -> Result<AttributeSchema> {
    let mut attrs: Vec<Attribute> = Vec::new();
    for (n, l) in lines(text) {
        let words: Vec<&str> = l.split_whitespace().collect();
        match words.as_slice() {
            ["attr", name] => attrs.push(Attribute {
                name: name.to_string(),
                values: Vec::new(),
                binning: None,
            }),
            ["attr", name, "numeric", lo, hi] => attrs.push(Attribute {
                name: name.to_string(),
                values: Vec::new(),
                binning: Some(Binning {
                    lo: parse_f64(n, lo)?,
                    hi: parse_f64(n, hi)?,
                    bins: Vec::new(),
                }),
            }),
            ["value", name] => {
                let a = attrs.last_mut().ok_or_else(|| parse_err(n, "value before any attr"))?;
                if a.binning.is_some() {
                    return Err(parse_err(n, "numeric attributes take `bin` lines"));
                }
                a.values.push(name.to_string());
            }
            ["bin", name, lo, hi] => {
                let a = attrs.last_mut().ok_or_else(|| parse_err(n, "bin before any attr"))?;
                let b = a
                    .binning
                    .as_mut()
                    .ok_or_else(|| parse_err(n, "bin on a categorical attribute"))?;
                b.bins.push(Bin {
                    lo: parse_f64(n, lo)?,
                    hi: parse_f64(n, hi)?,
                });
                a.values.push(name.to_string());
            }
            _ => return Err(parse_err(n, format!("unrecognised schema line `{l}`"))),
        }
    }
    AttributeSchema::new(attrs)
}

fn fmt_bound(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x}")
    }
}

pub fn write_schema(schema: &AttributeSchema) -> String {
    let mut s = String::new();
    for a in schema.attributes() {
        match &a.binning {
            None => {
                let _ = writeln!(s, "attr {}", a.name);
                for v in &a.values {
                    let _ = writeln!(s, "value {v}");
                }
            }
            Some(b) => {
                let _ = writeln!(s, "attr {} numeric {} {}", a.name, fmt_bound(b.lo), fmt_bound(b.hi));
                for (v, bin) in a.values.iter().zip(&b.bins) {
                    let _ = writeln!(s, "bin {v} {} {}", fmt_bound(bin.lo), fmt_bound(bin.hi));
                }
            }
        }
    }
    s
}

/// Objects in file order; timestamps are 1-based line positions in the stream.
pub fn parse_objects(text: &str, schema: &AttributeSchema) -> Result<Vec<ObjectRecord>> {
    let mut out: Vec<ObjectRecord> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (k, (n, l)) in lines(text).enumerate() {
        if k == 0 && is_header(l, &["id", "object", "object_id"]) {
            continue;
        }
        let fields: Vec<&str> = l.split(',').map(str::trim).collect();
        if fields.len() != schema.len() + 1 {
            return Err(parse_err(
                n,
                format!("expected {} fields, found {}", schema.len() + 1, fields.len()),
            ));
        }
        let id = parse_id(fields[0]).ok_or_else(|| parse_err(n, format!("bad object id `{}`", fields[0])))?;
        if !seen.insert(id) {
            return Err(parse_err(n, format!("duplicate object id {id}")));
        }
        let values = schema
            .ids()
            .zip(&fields[1..])
            .map(|(d, f)| {
                schema.resolve(d, f).ok_or_else(|| Error::SchemaViolation {
                    line: n,
                    field: schema.attribute(d).name.clone(),
                    value: f.to_string(),
                })
            })
            .collect::<Result<Vec<ValueId>>>()?;
        let ts = out.len() as u64 + 1;
        out.push(ObjectRecord::new(ObjectId(id), values, ts));
    }
    Ok(out)
}

pub fn write_objects(objects: &[ObjectRecord], schema: &AttributeSchema) -> String {
    let mut s = String::from("id");
    for a in schema.attributes() {
        let _ = write!(s, ",{}", a.name);
    }
    s.push('\n');
    for o in objects {
        let _ = write!(s, "{}", o.id);
        for (d, v) in schema.ids().zip(o.values.iter()) {
            let _ = write!(s, ",{}", schema.value_name(d, *v));
        }
        s.push('\n');
    }
    s
}

/// Users sorted by id, each relation transitively closed.
pub fn parse_profiles(text: &str, schema: &AttributeSchema) -> Result<Vec<UserProfile>> {
    // user -> (first line, per-attribute edges)
    type Edges = Vec<Vec<(ValueId, ValueId)>>;
    let mut users: BTreeMap<u32, (usize, Edges)> = BTreeMap::new();
    for (k, (n, l)) in lines(text).enumerate() {
        if k == 0 && is_header(l, &["user", "user_id"]) {
            continue;
        }
        let fields: Vec<&str> = l.split(',').map(str::trim).collect();
        let uid = parse_id(fields[0])
            .and_then(|u| u32::try_from(u).ok())
            .ok_or_else(|| parse_err(n, format!("bad user id `{}`", fields[0])))?;
        let entry = users.entry(uid).or_insert_with(|| (n, vec![Vec::new(); schema.len()]));
        match fields.len() {
            1 => {}
            4 => {
                let d = schema.attribute_id(fields[1]).ok_or_else(|| Error::SchemaViolation {
                    line: n,
                    field: "attribute".into(),
                    value: fields[1].to_string(),
                })?;
                let value = |f: &str| {
                    schema.value_id(d, f).ok_or_else(|| Error::SchemaViolation {
                        line: n,
                        field: schema.attribute(d).name.clone(),
                        value: f.to_string(),
                    })
                };
                entry.1[d.index()].push((value(fields[2])?, value(fields[3])?));
            }
            k => return Err(parse_err(n, format!("expected 1 or 4 fields, found {k}"))),
        }
    }
    users
        .into_iter()
        .map(|(uid, (line, edges))| {
            let relations = schema
                .ids()
                .zip(edges)
                .map(|(d, e)| {
                    PreferenceRelation::from_edges(d, schema.domain_size(d), &e)
                        .map_err(|err| parse_err(line, format!("user {uid}: {err}")))
                })
                .collect::<Result<_>>()?;
            Ok(UserProfile::new(UserId(uid), relations))
        })
        .collect()
}

/// Hasse edges per user; users without any tuple get a lone id line.
pub fn write_profiles(users: &[UserProfile], schema: &AttributeSchema) -> String {
    let mut s = String::from("user_id,attribute,better,worse\n");
    for u in users {
        let mut any = false;
        for (d, r) in schema.ids().zip(&u.relations) {
            for (x, y) in r.hasse().edges() {
                any = true;
                let _ = writeln!(
                    s,
                    "{},{},{},{}",
                    u.id,
                    schema.attribute(d).name,
                    schema.value_name(d, x),
                    schema.value_name(d, y)
                );
            }
        }
        if !any {
            let _ = writeln!(s, "{}", u.id);
        }
    }
    s
}

/// Partition ordered by cluster id; each cluster's users ascending.
pub fn parse_clusters(text: &str) -> Result<Vec<Vec<UserId>>> {
    let mut map: BTreeMap<u64, Vec<UserId>> = BTreeMap::new();
    for (k, (n, l)) in lines(text).enumerate() {
        if k == 0 && is_header(l, &["cluster", "cluster_id"]) {
            continue;
        }
        let fields: Vec<&str> = l.split(',').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(parse_err(n, "expected `cluster_id,user_id`"));
        }
        let c = parse_id(fields[0]).ok_or_else(|| parse_err(n, format!("bad cluster id `{}`", fields[0])))?;
        let u = parse_id(fields[1])
            .and_then(|u| u32::try_from(u).ok())
            .ok_or_else(|| parse_err(n, format!("bad user id `{}`", fields[1])))?;
        map.entry(c).or_default().push(UserId(u));
    }
    Ok(map
        .into_values()
        .map(|mut v| {
            v.sort();
            v
        })
        .collect())
}

pub fn write_clusters(partition: &[Vec<UserId>]) -> String {
    let mut s = String::from("cluster_id,user_id\n");
    for (c, users) in partition.iter().enumerate() {
        for u in users {
            let _ = writeln!(s, "{c},{u}");
        }
    }
    s
}

fn read(path: &Path) -> Result<String> {
    Ok(std::fs::read_to_string(path)?)
}

pub fn load_schema(path: impl AsRef<Path>) -> Result<AttributeSchema> {
    parse_schema(&read(path.as_ref())?)
}

pub fn load_objects(path: impl AsRef<Path>, schema: &AttributeSchema) -> Result<Vec<ObjectRecord>> {
    parse_objects(&read(path.as_ref())?, schema)
}

pub fn load_profiles(path: impl AsRef<Path>, schema: &AttributeSchema) -> Result<Vec<UserProfile>> {
    parse_profiles(&read(path.as_ref())?, schema)
}

pub fn load_clusters(path: impl AsRef<Path>) -> Result<Vec<Vec<UserId>>> {
    parse_clusters(&read(path.as_ref())?)
}

/// Schema, users and objects as one loadable unit.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub schema: AttributeSchema,
    pub users: Vec<UserProfile>,
    pub objects: Vec<ObjectRecord>,
}

pub const SCHEMA_FILE: &str = "schema.txt";
pub const OBJECTS_FILE: &str = "objects.csv";
pub const PREFS_FILE: &str = "prefs.csv";

/// Write `schema.txt`, `objects.csv` and `prefs.csv` into `dir`.
pub fn save_dataset(dir: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(SCHEMA_FILE), write_schema(&data.schema))?;
    std::fs::write(dir.join(OBJECTS_FILE), write_objects(&data.objects, &data.schema))?;
    std::fs::write(dir.join(PREFS_FILE), write_profiles(&data.users, &data.schema))?;
    Ok(())
}

pub fn load_dataset(dir: impl AsRef<Path>) -> Result<Dataset> {
    let dir = dir.as_ref();
    let schema = load_schema(dir.join(SCHEMA_FILE))?;
    let objects = load_objects(dir.join(OBJECTS_FILE), &schema)?;
    let users = load_profiles(dir.join(PREFS_FILE), &schema)?;
    Ok(Dataset { schema, users, objects })
}

/// Object attribute lookup helper for error messages and reports.
pub fn describe(o: &ObjectRecord, schema: &AttributeSchema) -> String {
    schema
        .ids()
        .zip(o.values.iter())
        .map(|(d, v)| schema.value_name(d, *v).to_string())
        .collect::<Vec<_>>()
        .join(",")
}
