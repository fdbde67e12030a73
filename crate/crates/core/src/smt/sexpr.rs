//! Just enough s-expression reading for solver responses.

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexpr {
    Atom(String),
    List(Vec<Sexpr>),
}

impl Sexpr {
    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sexpr::Atom(a) => Some(a),
            Sexpr::List(_) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexpr]> {
        match self {
            Sexpr::List(l) => Some(l),
            Sexpr::Atom(_) => None,
        }
    }

    /// An integer literal: `5`, `(- 5)` or `-5`.
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Sexpr::Atom(a) => a.parse().ok(),
            Sexpr::List(l) => match l.as_slice() {
                [Sexpr::Atom(minus), inner] if minus == "-" => inner.as_int().map(|v| -v),
                _ => None,
            },
        }
    }
}

/// Net parenthesis depth change of `line`, ignoring string literals and
/// `|quoted|` symbols.
pub fn depth_change(line: &str) -> i64 {
    let mut depth = 0;
    let mut in_string = false;
    let mut in_symbol = false;
    for c in line.chars() {
        match c {
            '"' if !in_symbol => in_string = !in_string,
            '|' if !in_string => in_symbol = !in_symbol,
            '(' if !in_string && !in_symbol => depth += 1,
            ')' if !in_string && !in_symbol => depth -= 1,
            _ => {}
        }
    }
    depth
}

pub fn parse(text: &str) -> Result<Sexpr, String> {
    let mut chars = text.chars().peekable();
    let mut stack: Vec<Vec<Sexpr>> = Vec::new();
    let mut result = None;
    while let Some(&c) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '(' => {
                chars.next();
                stack.push(Vec::new());
            }
            ')' => {
                chars.next();
                let done = stack.pop().ok_or("unbalanced ')'")?;
                let e = Sexpr::List(done);
                match stack.last_mut() {
                    Some(parent) => parent.push(e),
                    None => {
                        result = Some(e);
                        break;
                    }
                }
            }
            _ => {
                let mut atom = String::new();
                if c == '"' || c == '|' {
                    let close = c;
                    atom.push(c);
                    chars.next();
                    for d in chars.by_ref() {
                        atom.push(d);
                        if d == close {
                            break;
                        }
                    }
                } else {
                    while let Some(&d) = chars.peek() {
                        if d.is_whitespace() || d == '(' || d == ')' {
                            break;
                        }
                        atom.push(d);
                        chars.next();
                    }
                }
                let e = Sexpr::Atom(atom);
                match stack.last_mut() {
                    Some(parent) => parent.push(e),
                    None => {
                        result = Some(e);
                        break;
                    }
                }
            }
        }
    }
    if !stack.is_empty() {
        return Err("unbalanced '('".into());
    }
    result.ok_or_else(|| "empty input".into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_models() {
        let e = parse("(\n  (define-fun v0_0 () Int\n    1)\n  (define-fun v1_1 () Int (- 3))\n)").unwrap();
        let items = e.as_list().unwrap();
        assert_eq!(items.len(), 2);
        let second = items[1].as_list().unwrap();
        assert_eq!(second[1].as_atom(), Some("v1_1"));
        assert_eq!(second[4].as_int(), Some(-3));
    }

    #[test]
    fn atoms_and_errors() {
        assert_eq!(parse("sat").unwrap(), Sexpr::Atom("sat".into()));
        assert!(parse("(a (b)").is_err());
        assert!(parse("").is_err());
        let e = parse("(error \"line 1: unknown (constant)\")").unwrap();
        assert_eq!(e.as_list().unwrap()[1].as_atom(), Some("\"line 1: unknown (constant)\""));
    }

    #[test]
    fn depth() {
        assert_eq!(depth_change("((a b)"), 1);
        assert_eq!(depth_change("(error \"(\")"), 0);
        assert_eq!(depth_change("|a)b|"), 0);
    }
}
