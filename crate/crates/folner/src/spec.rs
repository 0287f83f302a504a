//! Group-spec mini-language.
//!
//! Line grammar: `kind = <kind>` first, then `key = value` lines; semidirect
//! actions as `action <y> <z> -> <word over Z>`; `#` starts a comment.
//! Component groups (for semidirect/quotient) are written inline as
//! `<kind> key=value ...` with commas standing in for spaces inside values.
//!
//! Kinds and keys:
//! - `zd`: `d`, optional `names` (comma-separated), optional `images`
//!   (one row per generator, entries space-separated, rows split by `;`)
//! - `finite`: `elements`, `generators` (comma-separated), `table`
//!   (rows split by `;`, entries space-separated) or `table_file`
//! - `heisenberg`: no keys
//! - `lamplighter`: `p`
//! - `semidirect`: `N = <inline spec>`, `H = <inline spec>`, `action` lines
//! - `quotient`: `ambient = <inline spec>`, optional `quotient = <inline spec>`
//!   (defaults to the ambient group's built-in quotient, e.g. Heisenberg/center)

use crate::error::{Error, Result};
use crate::groups::Group;

#[derive(Clone, Debug)]
pub enum GroupSpec {
    Zd { d: usize, names: Option<Vec<String>>, images: Option<Vec<Vec<i64>>> },
    Finite { elements: Vec<String>, generators: Vec<String>, table: Vec<Vec<String>> },
    Heisenberg,
    Lamplighter { p: u32 },
    Semidirect { n: Box<GroupSpec>, h: Box<GroupSpec>, actions: Vec<(String, String, String)> },
    Quotient { ambient: Box<GroupSpec>, quotient: Option<Box<GroupSpec>> },
}

fn err_at(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::input(format!("line {line}: {msg}"))
}

fn parse_usize(line: usize, key: &str, v: &str) -> Result<usize> {
    v.parse().map_err(|_| err_at(line, format!("key {key}: `{v}` is not a non-negative integer")))
}

fn split_csv(v: &str) -> Vec<String> {
    v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

fn parse_images(line: usize, v: &str) -> Result<Vec<Vec<i64>>> {
    v.split(';')
        .map(|row| {
            row.split_whitespace()
                .map(|t| t.parse().map_err(|_| err_at(line, format!("key images: `{t}` is not an integer"))))
                .collect()
        })
        .collect()
}

/// One `key = value` map with duplicate detection; `kind` already consumed.
struct Body {
    entries: Vec<(usize, String, String)>,
    actions: Vec<(usize, String)>,
}

fn take(body: &mut Body, key: &str) -> Option<(usize, String)> {
    let pos = body.entries.iter().position(|(_, k, _)| k == key)?;
    let (line, _, v) = body.entries.remove(pos);
    Some((line, v))
}

fn require(body: &mut Body, key: &str, kind_line: usize) -> Result<(usize, String)> {
    take(body, key).ok_or_else(|| err_at(kind_line, format!("missing key `{key}`")))
}

fn finish(body: Body, kind: &str) -> Result<()> {
    if let Some((line, k, _)) = body.entries.first() {
        return Err(err_at(*line, format!("unknown key `{k}` for kind {kind}")));
    }
    if let Some((line, _)) = body.actions.first() {
        return Err(err_at(*line, format!("`action` lines are only valid for kind semidirect, not {kind}")));
    }
    Ok(())
}

fn assemble(kind: &str, kind_line: usize, mut body: Body) -> Result<GroupSpec> {
    match kind {
        "zd" => {
            let (dl, dv) = require(&mut body, "d", kind_line)?;
            let d = parse_usize(dl, "d", &dv)?;
            let names = take(&mut body, "names").map(|(_, v)| split_csv(&v));
            let images = take(&mut body, "images").map(|(l, v)| parse_images(l, &v)).transpose()?;
            finish(body, kind)?;
            Ok(GroupSpec::Zd { d, names, images })
        }
        "finite" => {
            let (_, ev) = require(&mut body, "elements", kind_line)?;
            let (_, gv) = require(&mut body, "generators", kind_line)?;
            let table_text = match take(&mut body, "table") {
                Some((_, v)) => v,
                None => {
                    let (l, path) = require(&mut body, "table_file", kind_line)?;
                    std::fs::read_to_string(&path)
                        .map_err(|e| err_at(l, format!("cannot read table_file `{path}`: {e}")))?
                        .lines()
                        .map(str::trim)
                        .filter(|s| !s.is_empty() && !s.starts_with('#'))
                        .collect::<Vec<_>>()
                        .join(";")
                }
            };
            let table = table_text
                .split(';')
                .map(|row| row.split_whitespace().map(str::to_string).collect::<Vec<_>>())
                .filter(|r| !r.is_empty())
                .collect();
            finish(body, kind)?;
            Ok(GroupSpec::Finite { elements: split_csv(&ev), generators: split_csv(&gv), table })
        }
        "heisenberg" => {
            finish(body, kind)?;
            Ok(GroupSpec::Heisenberg)
        }
        "lamplighter" => {
            let (pl, pv) = require(&mut body, "p", kind_line)?;
            let p = parse_usize(pl, "p", &pv)? as u32;
            finish(body, kind)?;
            Ok(GroupSpec::Lamplighter { p })
        }
        "semidirect" => {
            let (nl, nv) = require(&mut body, "N", kind_line)?;
            let (hl, hv) = require(&mut body, "H", kind_line)?;
            let n = parse_inline(nl, &nv)?;
            let h = parse_inline(hl, &hv)?;
            let mut actions = Vec::new();
            for (line, text) in std::mem::take(&mut body.actions) {
                let (lhs, word) = text
                    .split_once("->")
                    .ok_or_else(|| err_at(line, "action line must be `action <y> <z> -> <word>`"))?;
                let parts: Vec<&str> = lhs.split_whitespace().collect();
                if parts.len() != 2 {
                    return Err(err_at(line, "action line must name one H-generator and one N-generator"));
                }
                actions.push((parts[0].to_string(), parts[1].to_string(), word.trim().to_string()));
            }
            if actions.is_empty() {
                return Err(err_at(kind_line, "semidirect spec has no action lines"));
            }
            finish(body, kind)?;
            Ok(GroupSpec::Semidirect { n: Box::new(n), h: Box::new(h), actions })
        }
        "quotient" => {
            let (al, av) = require(&mut body, "ambient", kind_line)?;
            let ambient = parse_inline(al, &av)?;
            let quotient = take(&mut body, "quotient")
                .map(|(l, v)| parse_inline(l, &v).map(Box::new))
                .transpose()?;
            finish(body, kind)?;
            Ok(GroupSpec::Quotient { ambient: Box::new(ambient), quotient })
        }
        other => Err(err_at(kind_line, format!("unknown kind `{other}`"))),
    }
}

/// Inline sub-spec: `<kind> key=value ...`, commas standing in for spaces
/// inside values (e.g. `zd d=2 names=z1,z2 images=1 0;0,1` is not valid —
/// write `images=1,0;0,1`).
fn parse_inline(line: usize, text: &str) -> Result<GroupSpec> {
    let mut tokens = text.split_whitespace();
    let kind = tokens.next().ok_or_else(|| err_at(line, "empty inline group spec"))?;
    let mut body = Body { entries: Vec::new(), actions: Vec::new() };
    for tok in tokens {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| err_at(line, format!("inline spec token `{tok}` is not key=value")))?;
        let v = match k {
            // comma-separated rows/entries: commas inside images become spaces
            "images" | "table" => v.replace(',', " "),
            _ => v.to_string(),
        };
        body.entries.push((line, k.to_string(), v));
    }
    assemble(kind, line, body)
}

pub fn parse_group_spec(text: &str) -> Result<GroupSpec> {
    let mut kind: Option<(usize, String)> = None;
    let mut body = Body { entries: Vec::new(), actions: Vec::new() };
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("action ") {
            body.actions.push((line_no, rest.trim().to_string()));
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| err_at(line_no, "expected `key = value`"))?;
        let (k, v) = (k.trim(), v.trim());
        if k == "kind" {
            if kind.is_some() {
                return Err(err_at(line_no, "duplicate `kind`"));
            }
            kind = Some((line_no, v.to_string()));
        } else {
            if kind.is_none() {
                return Err(err_at(line_no, "`kind = <kind>` must come first"));
            }
            if body.entries.iter().any(|(_, ek, _)| ek == k) {
                return Err(err_at(line_no, format!("duplicate key `{k}`")));
            }
            body.entries.push((line_no, k.to_string(), v.to_string()));
        }
    }
    let (kind_line, kind) = kind.ok_or_else(|| Error::input("spec is missing `kind = <kind>`"))?;
    assemble(&kind, kind_line, body)
}

pub fn build_group(spec: &GroupSpec) -> Result<Group> {
    match spec {
        GroupSpec::Zd { d, names, images } => match names {
            Some(names) => Group::free_abelian_named(*d, names.clone(), images.clone()),
            None => {
                if images.is_some() {
                    return Err(Error::input("zd images require explicit names"));
                }
                Group::free_abelian(*d)
            }
        },
        GroupSpec::Finite { elements, generators, table } => {
            Group::finite_table(elements.clone(), generators.clone(), table.clone())
        }
        GroupSpec::Heisenberg => Group::heisenberg(),
        GroupSpec::Lamplighter { p } => Group::lamplighter(*p),
        GroupSpec::Semidirect { n, h, actions } => {
            Group::semidirect(build_group(n)?, build_group(h)?, actions)
        }
        GroupSpec::Quotient { ambient, quotient } => {
            let a = build_group(ambient)?;
            match quotient {
                Some(q) => {
                    let q = build_group(q)?;
                    a.with_quotient(q)
                }
                None => {
                    if a.quotient_group().is_none() {
                        return Err(Error::input(
                            "ambient group has no built-in quotient; give an explicit `quotient =` spec",
                        ));
                    }
                    Ok(a)
                }
            }
        }
    }
}

pub fn load_group(path: &str) -> Result<Group> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::input(format!("cannot read group spec `{path}`: {e}")))?;
    build_group(&parse_group_spec(&text)?)
}
