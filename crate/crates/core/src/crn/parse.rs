//! Model-file reader.
//!
//! ```text
//! # comment
//! species S1=1
//! species S2=40; S1 -> S1 + S2 @ 1.0
//! S2 -> @ 0.025
//! ```

use super::{Crn, CrnError, Reaction, State};

struct Statement<'a> {
    line: usize,
    column: usize,
    text: &'a str,
}

struct RawReaction<'a> {
    line: usize,
    lhs: Vec<(&'a str, usize)>,
    rhs: Vec<(&'a str, usize)>,
    rate: f64,
}

fn statements(text: &str) -> impl Iterator<Item = Statement<'_>> {
    text.lines().enumerate().flat_map(|(n, line)| {
        let code = line.split('#').next().unwrap_or("");
        let mut offset = 0;
        code.split(';').filter_map(move |chunk| {
            let start = offset;
            offset += chunk.len() + 1;
            let trimmed = chunk.trim_start();
            let lead = chunk.len() - trimmed.len();
            let trimmed = trimmed.trim_end();
            (!trimmed.is_empty()).then_some(Statement {
                line: n + 1,
                column: start + lead + 1,
                text: trimmed,
            })
        })
    })
}

fn syntax(st: &Statement<'_>, at: usize, message: impl Into<String>) -> CrnError {
    CrnError::Syntax {
        line: st.line,
        column: st.column + at,
        message: message.into(),
    }
}

fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Splits `A + B + C` into names with their column offsets inside the statement.
fn parse_side<'a>(
    st: &Statement<'a>,
    side: &'a str,
    base: usize,
) -> Result<Vec<(&'a str, usize)>, CrnError> {
    if side.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    let mut offset = 0;
    for term in side.split('+') {
        let lead = term.len() - term.trim_start().len();
        let name = term.trim();
        let at = base + offset + lead;
        offset += term.len() + 1;
        if name.is_empty() {
            return Err(syntax(st, at, "expected a species name"));
        }
        if name.starts_with(|c: char| c.is_ascii_digit()) {
            if name.trim_start_matches(|c: char| c.is_ascii_digit()).trim().is_empty() {
                return Err(syntax(st, at, format!("expected a species name, found `{name}`")));
            }
            return Err(syntax(
                st,
                at,
                format!("stoichiometric coefficients are not supported (`{name}`)"),
            ));
        }
        if !is_identifier(name) {
            return Err(syntax(st, at, format!("invalid species name `{name}`")));
        }
        out.push((name, at));
    }
    Ok(out)
}

/// Parses a model file. Species order follows declaration order.
pub fn parse_crn(text: &str) -> Result<Crn, CrnError> {
    let mut names: Vec<String> = Vec::new();
    let mut initial: Vec<u64> = Vec::new();
    let mut raw: Vec<RawReaction<'_>> = Vec::new();

    for st in statements(text) {
        if let Some(rest) = st.text.strip_prefix("species") {
            if rest.starts_with(|c: char| c.is_whitespace()) {
                let body = rest.trim();
                let at = st.text.len() - rest.trim_start().len();
                let (name, value) = body
                    .split_once('=')
                    .ok_or_else(|| syntax(&st, at, "expected `species <name>=<population>`"))?;
                let name = name.trim();
                if !is_identifier(name) {
                    return Err(syntax(&st, at, format!("invalid species name `{name}`")));
                }
                let value_at = at + body.find('=').unwrap_or(0) + 1;
                let value: u64 = value.trim().parse().map_err(|_| {
                    syntax(
                        &st,
                        value_at,
                        format!("expected a non-negative integer population, found `{}`", value.trim()),
                    )
                })?;
                if names.iter().any(|n| n == name) {
                    return Err(CrnError::DuplicateSpecies {
                        name: name.to_string(),
                        line: st.line,
                    });
                }
                names.push(name.to_string());
                initial.push(value);
                continue;
            }
        }

        let arrow = st
            .text
            .find("->")
            .ok_or_else(|| syntax(&st, 0, "expected a species declaration or a reaction `lhs -> rhs @ rate`"))?;
        let after = &st.text[arrow + 2..];
        let at_pos = after
            .find('@')
            .ok_or_else(|| syntax(&st, arrow + 2, "missing `@ <rate>`"))?;
        let rate_raw = &after[at_pos + 1..];
        let rate_text = rate_raw.trim();
        let rate_col = arrow + 2 + at_pos + 1 + (rate_raw.len() - rate_raw.trim_start().len());
        let rate: f64 = rate_text.parse().map_err(|_| {
            syntax(&st, rate_col, format!("expected a rate constant, found `{rate_text}`"))
        })?;
        if !rate.is_finite() {
            return Err(syntax(&st, rate_col, "rate constant must be finite"));
        }
        if rate <= 0.0 {
            return Err(CrnError::NonPositiveRate {
                rate,
                line: st.line,
            });
        }
        let lhs = parse_side(&st, &st.text[..arrow], 0)?;
        let rhs = parse_side(&st, &after[..at_pos], arrow + 2)?;
        raw.push(RawReaction {
            line: st.line,
            lhs,
            rhs,
            rate,
        });
    }

    let resolve = |side: &[(&str, usize)], line: usize| -> Result<Vec<usize>, CrnError> {
        let mut out: Vec<usize> = Vec::with_capacity(side.len());
        for &(name, _) in side {
            let idx = names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| CrnError::UnknownSpecies {
                    name: name.to_string(),
                    line,
                })?;
            if out.contains(&idx) {
                return Err(CrnError::RepeatedSpecies {
                    name: name.to_string(),
                    line,
                });
            }
            out.push(idx);
        }
        Ok(out)
    };

    let mut reactions = Vec::with_capacity(raw.len());
    for r in &raw {
        let reactants = resolve(&r.lhs, r.line)?;
        let products = resolve(&r.rhs, r.line)?;
        reactions.push(Reaction::new(reactants, products, r.rate)?);
    }
    Crn::new(names, reactions, State::new(initial))
}
