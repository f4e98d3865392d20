//! File and inline formats: formulas, traces (line-per-token or a JSON
//! array of strings), lassos, environments and the register-automaton
//! JSON schema.

use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use datamon_core::ast::{DataEnv, DataValue, DataVar, Formula};
use datamon_core::parse::{parse_bexpr, parse_formula, parse_monitor};
use datamon_core::ra::{Label, LocKind, Location, RegisterAutomaton, Transition};
use datamon_core::render::render_bexpr;
use datamon_core::trace::{FiniteTrace, LassoTrace};

/// Reads a file, with `-` standing for standard input.
pub fn read_input(path: &str) -> Result<String> {
    if path == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .context("reading standard input")?;
        Ok(buf)
    } else {
        fs::read_to_string(Path::new(path)).with_context(|| format!("reading {path}"))
    }
}

pub fn load_formula(path: &str) -> Result<Formula> {
    let text = read_input(path)?;
    parse_formula(&text).map_err(|e| anyhow!("{path}:{e}"))
}

pub fn load_monitor(path: &str) -> Result<datamon_core::monitor::Monitor> {
    let text = read_input(path)?;
    parse_monitor(&text).map_err(|e| anyhow!("{path}:{e}"))
}

/// Parses an inline comma- (or whitespace-) separated trace.
pub fn parse_inline_trace(text: &str) -> FiniteTrace {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(DataValue::new)
        .collect()
}

/// Parses trace file content: a JSON array of strings when it starts with
/// `[`, otherwise one token per line (blank lines skipped).
pub fn parse_trace_file(text: &str) -> Result<FiniteTrace> {
    if text.trim_start().starts_with('[') {
        let tokens: Vec<String> = serde_json::from_str(text).context("trace JSON array")?;
        return Ok(tokens.iter().map(|t| DataValue::new(t)).collect());
    }
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let token = line.trim();
        if token.is_empty() {
            continue;
        }
        if token.split_whitespace().count() > 1 {
            bail!("trace line {}: expected one token per line", i + 1);
        }
        out.push(DataValue::new(token));
    }
    Ok(out)
}

/// Resolves a trace from the inline/file flag pair; inline wins.
pub fn resolve_trace(inline: &Option<String>, file: &Option<String>) -> Result<FiniteTrace> {
    match (inline, file) {
        (Some(text), _) => Ok(parse_inline_trace(text)),
        (None, Some(path)) => parse_trace_file(&read_input(path)?),
        (None, None) => bail!("a trace is required: pass --trace or --trace-file"),
    }
}

pub fn parse_lasso(text: &str) -> Result<LassoTrace> {
    LassoTrace::parse_str(text).map_err(|e| anyhow!("{e}"))
}

/// Parses `x=1,y=2` style environment bindings.
pub fn parse_env(text: &str) -> Result<DataEnv> {
    let mut pairs = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| anyhow!("environment binding `{part}` is not of the form var=value"))?;
        pairs.push((DataVar::new(k.trim()), DataValue::new(v.trim())));
    }
    Ok(DataEnv::from_pairs(pairs))
}

// ---- register automaton JSON schema ----

#[derive(Serialize, Deserialize)]
struct RaLocationJson {
    id: String,
    kind: String,
    accepting: bool,
}

#[derive(Serialize, Deserialize)]
struct RaTransitionJson {
    from: String,
    to: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    guard: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    guess: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eps: Option<bool>,
}

#[derive(Serialize, Deserialize)]
struct RaJson {
    locations: Vec<RaLocationJson>,
    registers: Vec<String>,
    initial: String,
    transitions: Vec<RaTransitionJson>,
}

/// Serializes an automaton. ε edges from existential locations are first
/// eliminated through a dummy guess into a reserved scratch register;
/// universal ε branching (the parallel-product gadget) has no counterpart
/// in the schema's guard/guess labels and is emitted as `"eps": true`.
pub fn ra_to_json(a: &RegisterAutomaton) -> Result<String> {
    let a = a.eliminate_existential_eps();
    let json = RaJson {
        locations: a
            .locations
            .iter()
            .map(|l| RaLocationJson {
                id: l.name.clone(),
                kind: match l.kind {
                    LocKind::Existential => "existential".into(),
                    LocKind::Universal => "universal".into(),
                },
                accepting: l.accepting,
            })
            .collect(),
        registers: a.registers.iter().map(|r| r.as_str().to_string()).collect(),
        initial: a.locations[a.initial].name.clone(),
        transitions: a
            .transitions
            .iter()
            .map(|t| RaTransitionJson {
                from: a.locations[t.from].name.clone(),
                to: a.locations[t.to].name.clone(),
                guard: match &t.label {
                    Label::Guard(b) => Some(render_bexpr(b)),
                    _ => None,
                },
                guess: match &t.label {
                    Label::Guess(r) => Some(a.registers[*r].as_str().to_string()),
                    _ => None,
                },
                eps: match &t.label {
                    Label::Eps => Some(true),
                    _ => None,
                },
            })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&json)?)
}

pub fn ra_from_json(text: &str) -> Result<RegisterAutomaton> {
    let json: RaJson = serde_json::from_str(text).context("register automaton JSON")?;
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    let mut locations = Vec::new();
    for (i, l) in json.locations.iter().enumerate() {
        if index.insert(l.id.clone(), i).is_some() {
            bail!("duplicate location id `{}`", l.id);
        }
        locations.push(Location {
            name: l.id.clone(),
            kind: match l.kind.as_str() {
                "existential" => LocKind::Existential,
                "universal" => LocKind::Universal,
                other => bail!("location `{}` has unknown kind `{other}`", l.id),
            },
            accepting: l.accepting,
        });
    }
    let registers: Vec<DataVar> = json.registers.iter().map(|r| DataVar::new(r)).collect();
    let initial = *index
        .get(&json.initial)
        .ok_or_else(|| anyhow!("initial location `{}` is not declared", json.initial))?;
    let mut transitions = Vec::new();
    for t in &json.transitions {
        let from = *index
            .get(&t.from)
            .ok_or_else(|| anyhow!("transition from unknown location `{}`", t.from))?;
        let to = *index
            .get(&t.to)
            .ok_or_else(|| anyhow!("transition to unknown location `{}`", t.to))?;
        let label = match (&t.guard, &t.guess, t.eps) {
            (Some(g), None, None) => {
                Label::Guard(parse_bexpr(g).map_err(|e| anyhow!("guard `{g}`: {e}"))?)
            }
            (None, Some(r), None) => {
                let idx = registers
                    .iter()
                    .position(|x| x.as_str() == r)
                    .ok_or_else(|| anyhow!("guess into undeclared register `{r}`"))?;
                Label::Guess(idx)
            }
            (None, None, Some(true)) => Label::Eps,
            _ => bail!(
                "transition {} -> {} must carry exactly one of guard, guess or eps",
                t.from,
                t.to
            ),
        };
        transitions.push(Transition { from, to, label });
    }
    let ra = RegisterAutomaton {
        initial,
        init_values: RegisterAutomaton::sentinel_values(registers.len()),
        registers,
        locations,
        transitions,
    };
    ra.validate().map_err(|e| anyhow!("{e}"))?;
    Ok(ra)
}

#[cfg(test)]
mod tests {
    use super::*;
    use datamon_core::monitor::synthesize;
    use datamon_core::ra::{monitor_to_ra, ra_member};

    #[test]
    fn trace_formats() {
        assert_eq!(parse_inline_trace("1,0,1").len(), 3);
        assert_eq!(parse_trace_file("a\nb\n\nc\n").unwrap().len(), 3);
        assert_eq!(parse_trace_file("[\"a\",\"b\"]").unwrap().len(), 2);
        assert!(parse_trace_file("a b\n").is_err());
    }

    #[test]
    fn env_parsing() {
        let env = parse_env("x=1, y = 2").unwrap();
        assert_eq!(env.lookup(&DataVar::new("x")).unwrap().as_str(), "1");
        assert_eq!(env.lookup(&DataVar::new("y")).unwrap().as_str(), "2");
        assert!(parse_env("nonsense").is_err());
    }

    #[test]
    fn ra_json_roundtrip_preserves_membership() {
        let f = parse_formula("exists x. <x=*> min X. <x=*> tt | <x!=*> X").unwrap();
        let ra = monitor_to_ra(&synthesize(&f).unwrap()).unwrap();
        let json = ra_to_json(&ra).unwrap();
        let back = ra_from_json(&json).unwrap();
        for w in ["1,0,1", "1,0,2", "1,1", ""] {
            let w = parse_inline_trace(w);
            assert_eq!(
                ra_member(&ra, &w).unwrap(),
                ra_member(&back, &w).unwrap(),
                "word {w:?}"
            );
        }
    }
}
