//! Text formats for models and bundles.
//!
//! Model files hold one `de^k = ...` line per generator plus `orientation`
//! and `volume`; complex structure, Hermitian form and `(n,0)`-form are
//! optional extra lines. Indices are 1-based.
//!
//! ```text
//! # Hopf surface
//! de^1 = e^{23}
//! de^2 = e^{31}
//! de^3 = e^{12}
//! de^4 = 0
//! orientation = 4 1 2 3
//! volume = 1
//! J e^1 = -e^4
//! J e^2 = e^3
//! J e^3 = -e^2
//! J e^4 = e^1
//! omega = e^{41} + e^{23}
//! ```
//!
//! Bundle files give the gauge algebra by brackets and pairing, then the
//! connection components:
//!
//! ```text
//! rank = 3
//! [T1,T2] = T3
//! [T2,T3] = T1
//! [T3,T1] = T2
//! c(T1,T1) = 1/2
//! c(T2,T2) = 1/2
//! c(T3,T3) = 1/2
//! theta^3 = (0.4-0.2i) e^1 + (0.4+0.2i) e^2
//! ```

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use hetsys_core::gauge::{Bundle, GaugeAlgebra, VForm};
use hetsys_core::hermitian::{psi_squared, ComplexStructure};
use hetsys_core::linalg::{CMat, RMat};
use hetsys_core::models::CatalogEntry;
use hetsys_core::{Form, LieModel, C64};

use crate::error::{CliError, CliResult};
use crate::grid::{parse_complex, parse_real};

struct Ctx<'a> {
    file: &'a str,
    line: usize,
}

impl Ctx<'_> {
    fn err(&self, msg: impl Into<String>) -> CliError {
        CliError::Parse {
            file: self.file.to_string(),
            line: self.line,
            msg: msg.into(),
        }
    }
}

/// Content lines as `(line number, key, value)`, comments stripped.
fn entries(text: &str) -> Vec<(usize, String, String)> {
    text.lines()
        .enumerate()
        .filter_map(|(k, raw)| {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                return None;
            }
            let (key, value) = line.split_once('=').unwrap_or((line, ""));
            Some((k + 1, key.trim().to_string(), value.trim().to_string()))
        })
        .collect()
}

/// Splits at top-level `+`/`-`, keeping signs and exponent notation intact.
fn split_terms(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut depth = 0i32;
    let mut prev: Option<char> = None;
    let mut prev2: Option<char> = None;
    for ch in s.chars() {
        match ch {
            '(' | '{' => depth += 1,
            ')' | '}' => depth -= 1,
            _ => {}
        }
        let exponent = matches!(prev, Some('e' | 'E')) && prev2.is_some_and(|c| c.is_ascii_digit() || c == '.');
        if (ch == '+' || ch == '-') && depth == 0 && !exponent && !cur.trim().is_empty() {
            out.push(cur.trim().to_string());
            cur.clear();
        }
        cur.push(ch);
        if !ch.is_whitespace() {
            prev2 = prev;
            prev = Some(ch);
        }
    }
    if !cur.trim().is_empty() {
        out.push(cur.trim().to_string());
    }
    out
}

/// Position where the basis symbol `prefix` starts inside a term.
fn basis_start(term: &str, prefix: char) -> Option<usize> {
    let chars: Vec<(usize, char)> = term.char_indices().collect();
    for (k, &(pos, ch)) in chars.iter().enumerate() {
        if ch != prefix {
            continue;
        }
        let before_ok = k == 0 || matches!(chars[k - 1].1, ' ' | '*' | ')' | '+' | '-');
        let after_ok = chars
            .get(k + 1)
            .is_some_and(|&(_, c)| c == '^' || c == '{' || c.is_ascii_digit());
        if before_ok && after_ok {
            return Some(pos);
        }
    }
    None
}

fn parse_coeff(s: &str) -> Result<C64, String> {
    let s = s.trim().trim_end_matches('*').trim();
    match s {
        "" | "+" => Ok(C64::new(1.0, 0.0)),
        "-" => Ok(C64::new(-1.0, 0.0)),
        _ => {
            if let Some(rest) = s.strip_prefix('-') {
                return Ok(-parse_coeff(rest)?);
            }
            if let Some(rest) = s.strip_prefix('+') {
                return parse_coeff(rest);
            }
            parse_complex(s)
        }
    }
}

/// 1-based labels after the basis symbol: `^{1,2}`, `{12}`, `12` or `^12`.
fn parse_labels(s: &str, multi_digit: bool) -> Result<Vec<usize>, String> {
    let s = s.trim().trim_start_matches('^');
    let s = s.strip_prefix('{').and_then(|r| r.strip_suffix('}')).unwrap_or(s);
    let parts: Vec<String> = if s.contains(',') {
        s.split(',').map(|p| p.trim().to_string()).collect()
    } else if multi_digit {
        vec![s.to_string()]
    } else {
        s.chars().map(String::from).collect()
    };
    parts
        .iter()
        .map(|p| match p.parse::<usize>() {
            Ok(0) | Err(_) => Err(format!("bad index `{}` (indices start at 1)", p)),
            Ok(v) => Ok(v - 1),
        })
        .collect()
}

/// Linear combination `Σ c · sym^{idx}` as `(0-based indices, coefficient)` pairs.
fn parse_combination(s: &str, prefix: char, multi_digit: bool) -> Result<Vec<(Vec<usize>, C64)>, String> {
    let s = s.trim();
    if s == "0" {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for term in split_terms(s) {
        match basis_start(&term, prefix) {
            Some(pos) => {
                let c = parse_coeff(&term[..pos])?;
                let idx = parse_labels(&term[pos + prefix.len_utf8()..], multi_digit)?;
                out.push((idx, c));
            }
            None => out.push((Vec::new(), parse_coeff(&term)?)),
        }
    }
    Ok(out)
}

/// A form of the given degree on `dim` generators, e.g. `2 e^{12} - (1+i) e^{34}`.
pub fn parse_form(s: &str, dim: usize, degree: usize) -> Result<Form, String> {
    let mut f = Form::zero(dim, degree);
    for (idx, c) in parse_combination(s, 'e', dim > 9)? {
        if idx.len() != degree {
            return Err(format!("expected a {}-form, found a term of degree {}", degree, idx.len()));
        }
        if let Some(&bad) = idx.iter().find(|&&i| i >= dim) {
            return Err(format!("index {} exceeds the dimension {}", bad + 1, dim));
        }
        let mut sorted = idx.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != idx.len() {
            return Err(String::from("repeated index in a basis element"));
        }
        f.add_term(&idx, c);
    }
    Ok(f)
}

fn key_index(key: &str, head: &str) -> Option<Result<usize, String>> {
    let rest = key.strip_prefix(head)?;
    let rest = rest.trim().trim_start_matches('^').trim();
    let rest = rest.strip_prefix('{').and_then(|r| r.strip_suffix('}')).unwrap_or(rest);
    Some(match rest.parse::<usize>() {
        Ok(0) | Err(_) => Err(format!("bad generator index in `{}`", key)),
        Ok(v) => Ok(v - 1),
    })
}

/// Parses a model file into a catalog entry; `name` labels the reports.
pub fn parse_model(text: &str, name: &str) -> CliResult<CatalogEntry> {
    let lines = entries(text);
    let mut de: BTreeMap<usize, (usize, String)> = BTreeMap::new();
    let mut orientation = None;
    let mut volume = 1.0;
    let mut j_lines: BTreeMap<usize, (usize, String)> = BTreeMap::new();
    let mut extra: BTreeMap<&str, (usize, String)> = BTreeMap::new();
    for (line, key, value) in &lines {
        let ctx = Ctx { file: name, line: *line };
        if let Some(k) = key_index(key, "de") {
            let k = k.map_err(|m| ctx.err(m))?;
            if de.insert(k, (*line, value.clone())).is_some() {
                return Err(ctx.err(format!("de^{} given twice", k + 1)));
            }
        } else if let Some(rest) = key.strip_prefix('J') {
            let k = key_index(rest.trim(), "e").unwrap_or_else(|| Err(format!("bad key `{}`", key)));
            let k = k.map_err(|m| ctx.err(m))?;
            j_lines.insert(k, (*line, value.clone()));
        } else {
            match key.as_str() {
                "orientation" => {
                    let idx: Result<Vec<usize>, _> = value
                        .split(|c: char| c == ',' || c.is_whitespace())
                        .filter(|p| !p.is_empty())
                        .map(|p| match p.parse::<usize>() {
                            Ok(0) | Err(_) => Err(ctx.err(format!("bad orientation entry `{}`", p))),
                            Ok(v) => Ok(v - 1),
                        })
                        .collect();
                    orientation = Some(idx?);
                }
                "volume" => volume = parse_real(value).map_err(|m| ctx.err(m))?,
                "omega" | "psi" | "mu" => {
                    let k: &'static str = match key.as_str() {
                        "omega" => "omega",
                        "psi" => "psi",
                        _ => "mu",
                    };
                    extra.insert(k, (*line, value.clone()));
                }
                _ => return Err(ctx.err(format!("unknown key `{}`", key))),
            }
        }
    }
    let dim = de.len();
    if dim == 0 {
        return Err(Ctx { file: name, line: 0 }.err("no structure equations"));
    }
    if dim < 4 || dim % 2 == 1 {
        return Err(Ctx { file: name, line: 0 }.err(format!("need an even real dimension of at least 4, got {}", dim)));
    }
    if de.keys().copied().ne(0..dim) {
        return Err(Ctx { file: name, line: 0 }.err("structure equations must cover de^1..de^m"));
    }
    let mut forms = Vec::with_capacity(dim);
    for (line, value) in de.values() {
        let ctx = Ctx { file: name, line: *line };
        forms.push(parse_form(value, dim, 2).map_err(|m| ctx.err(m))?);
    }
    let orientation = orientation.unwrap_or_else(|| (0..dim).collect());
    let model = Arc::new(LieModel::new(forms, orientation, volume)?);

    if j_lines.keys().copied().ne(0..dim) {
        return Err(Ctx { file: name, line: 0 }.err("the complex structure needs one `J e^k` line per generator"));
    }
    let mut jc = RMat::zeros(dim, dim);
    for (&k, (line, value)) in &j_lines {
        let ctx = Ctx { file: name, line: *line };
        let img = parse_form(value, dim, 1).map_err(|m| ctx.err(m))?;
        if img.imag_max() > 0.0 {
            return Err(ctx.err("J must be real"));
        }
        for i in 0..dim {
            jc[(i, k)] = img.coeffs()[i].re;
        }
    }
    let cs = Arc::new(ComplexStructure::new(model.clone(), jc)?);
    let n = cs.n();
    let get = |key: &str, degree: usize| -> CliResult<Option<Form>> {
        match extra.get(key) {
            Some((line, value)) => {
                let ctx = Ctx { file: name, line: *line };
                Ok(Some(parse_form(value, dim, degree).map_err(|m| ctx.err(m))?))
            }
            None => Ok(None),
        }
    };
    let omega = get("omega", 2)?.ok_or_else(|| Ctx { file: name, line: 0 }.err("missing `omega`"))?;
    let psi = match get("psi", n)? {
        Some(p) => p,
        None => cs
            .holomorphic_coframe()
            .iter()
            .fold(Form::constant(dim, C64::new(1.0, 0.0)), |acc, eta| acc.w(eta)),
    };
    let mu = match get("mu", dim)? {
        Some(m) => m,
        None => psi_squared(&psi, n)?,
    };
    let mut params = BTreeMap::new();
    params.insert(String::from("volume"), volume);
    Ok(CatalogEntry {
        name: name.to_string(),
        params,
        model,
        cs,
        omega,
        psi,
        mu,
        bundle: Bundle::trivial(GaugeAlgebra::su2(1.0), dim),
        notes: String::from("loaded from a model file"),
    })
}

fn parse_bracket_key(key: &str) -> Option<Result<(usize, usize), String>> {
    let inner = key.strip_prefix('[')?.strip_suffix(']')?;
    Some(parse_generator_pair(inner))
}

fn parse_pairing_key(key: &str) -> Option<Result<(usize, usize), String>> {
    let inner = key.strip_prefix("c(")?.strip_suffix(')')?;
    Some(parse_generator_pair(inner))
}

fn parse_generator_pair(inner: &str) -> Result<(usize, usize), String> {
    let (a, b) = inner
        .split_once(',')
        .ok_or_else(|| format!("expected two generators in `{}`", inner))?;
    let gen = |s: &str| -> Result<usize, String> {
        let s = s.trim();
        let rest = s.strip_prefix('T').ok_or_else(|| format!("expected a generator T_k, got `{}`", s))?;
        let idx = parse_labels(rest.trim_start_matches('_'), true)?;
        Ok(idx[0])
    };
    Ok((gen(a)?, gen(b)?))
}

/// Parses a bundle file over a model of real dimension `dim`.
pub fn parse_bundle(text: &str, dim: usize, file: &str) -> CliResult<Bundle> {
    let lines = entries(text);
    let mut rank = None;
    let mut preset: Option<GaugeAlgebra> = None;
    let mut name = String::from("custom");
    for (line, key, value) in &lines {
        let ctx = Ctx { file, line: *line };
        match key.as_str() {
            "rank" => rank = Some(value.parse::<usize>().map_err(|_| ctx.err("bad rank"))?),
            "name" => name = value.clone(),
            "algebra" => {
                let mut it = value.split_whitespace();
                let kind = it.next().unwrap_or("");
                let scale = match it.next() {
                    Some(v) => parse_real(v).map_err(|m| ctx.err(m))?,
                    None => 1.0,
                };
                preset = Some(match kind {
                    "su2" => GaugeAlgebra::su2(scale),
                    "su2+su2" => GaugeAlgebra::su2(scale).direct_sum(&GaugeAlgebra::su2(-scale)),
                    _ => return Err(ctx.err(format!("unknown algebra `{}`", kind))),
                });
            }
            _ => {}
        }
    }
    let r = match (&preset, rank) {
        (Some(a), Some(r)) if a.rank() != r => {
            return Err(Ctx { file, line: 0 }.err("rank disagrees with the algebra"));
        }
        (Some(a), _) => a.rank(),
        (None, Some(r)) if r > 0 => r,
        _ => return Err(Ctx { file, line: 0 }.err("missing `rank` or `algebra`")),
    };
    let mut f = vec![CMat::zeros(r, r); r];
    let mut pairing = CMat::zeros(r, r);
    let mut theta = vec![Form::zero(dim, 1); r];
    let check = |ctx: &Ctx, k: usize| if k < r { Ok(()) } else { Err(ctx.err(format!("generator T{} exceeds the rank {}", k + 1, r))) };
    for (line, key, value) in &lines {
        let ctx = Ctx { file, line: *line };
        if matches!(key.as_str(), "rank" | "name" | "algebra") {
            continue;
        }
        if let Some(ab) = parse_bracket_key(key) {
            let (a, b) = ab.map_err(|m| ctx.err(m))?;
            check(&ctx, a)?;
            check(&ctx, b)?;
            for (idx, c) in parse_combination(value, 'T', true).map_err(|m| ctx.err(m))? {
                if idx.len() != 1 {
                    return Err(ctx.err("a bracket must be a combination of generators"));
                }
                check(&ctx, idx[0])?;
                f[idx[0]][(a, b)] += c;
                f[idx[0]][(b, a)] -= c;
            }
        } else if let Some(ab) = parse_pairing_key(key) {
            let (a, b) = ab.map_err(|m| ctx.err(m))?;
            check(&ctx, a)?;
            check(&ctx, b)?;
            let v = parse_complex(value).map_err(|m| ctx.err(m))?;
            pairing[(a, b)] = v;
            pairing[(b, a)] = v;
        } else if let Some(k) = key_index(key, "theta") {
            let k = k.map_err(|m| ctx.err(m))?;
            check(&ctx, k)?;
            theta[k] = parse_form(value, dim, 1).map_err(|m| ctx.err(m))?;
        } else {
            return Err(ctx.err(format!("unknown key `{}`", key)));
        }
    }
    let algebra = match preset {
        Some(a) => a,
        None => GaugeAlgebra::new(&name, f, pairing)?,
    };
    Ok(Bundle::new(algebra, VForm::from_comps(theta)?)?)
}

/// Reads a model file; the entry is named after the file stem.
pub fn read_model(path: &Path) -> CliResult<CatalogEntry> {
    let text = std::fs::read_to_string(path)?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("model");
    parse_model(&text, name)
}

pub fn read_bundle(path: &Path, dim: usize) -> CliResult<Bundle> {
    let text = std::fs::read_to_string(path)?;
    parse_bundle(&text, dim, &path.display().to_string())
}
