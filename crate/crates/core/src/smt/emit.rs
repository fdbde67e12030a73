use std::fmt::Write as _;

use crate::bmc::{Atom, Formula, Var};

fn int(out: &mut String, c: i64) {
    if c < 0 {
        let _ = write!(out, "(- {})", c.unsigned_abs());
    } else {
        let _ = write!(out, "{c}");
    }
}

fn atom(out: &mut String, a: &Atom) {
    match *a {
        Atom::Equals(v, c) => {
            let _ = write!(out, "(= {v} ");
            int(out, c);
            out.push(')');
        }
        Atom::Positive(v) => {
            let _ = write!(out, "(> {v} 0)");
        }
        Atom::NonNegative(v) => {
            let _ = write!(out, "(>= {v} 0)");
        }
        Atom::Offset { lhs, rhs, delta } => match delta {
            0 => {
                let _ = write!(out, "(= {lhs} {rhs})");
            }
            d if d > 0 => {
                let _ = write!(out, "(= {lhs} (+ {rhs} {d}))");
            }
            d => {
                let _ = write!(out, "(= {lhs} (- {rhs} {}))", d.unsigned_abs());
            }
        },
    }
}

fn nary(out: &mut String, op: &str, parts: &[Formula]) {
    let _ = write!(out, "({op}");
    for p in parts {
        out.push(' ');
        term_into(out, p);
    }
    out.push(')');
}

fn term_into(out: &mut String, f: &Formula) {
    match f {
        Formula::True => out.push_str("true"),
        Formula::False => out.push_str("false"),
        Formula::Atom(a) => atom(out, a),
        Formula::Not(inner) => {
            out.push_str("(not ");
            term_into(out, inner);
            out.push(')');
        }
        Formula::And(parts) => nary(out, "and", parts),
        Formula::Or(parts) => nary(out, "or", parts),
    }
}

/// The formula as an SMT-LIB term.
pub fn to_term(f: &Formula) -> String {
    let mut out = String::new();
    term_into(&mut out, f);
    out
}

/// `(assert <term>)` for a formula over integer variables (QF_LIA).
pub fn emit_smtlib(f: &Formula) -> String {
    format!("(assert {})", to_term(f))
}

pub fn declare(v: Var) -> String {
    format!("(declare-fun {v} () Int)")
}

/// Declarations for every variable of `f` followed by its assertion; a
/// self-contained script body.
pub fn emit_script(f: &Formula) -> String {
    let mut out = String::from("(set-logic QF_LIA)\n");
    for v in f.vars() {
        out.push_str(&declare(v));
        out.push('\n');
    }
    out.push_str(&emit_smtlib(f));
    out.push_str("\n(check-sat)\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: usize, i: usize) -> Var {
        Var::new(s, i)
    }

    #[test]
    fn atoms() {
        assert_eq!(emit_smtlib(&Formula::atom(Atom::Equals(v(0, 0), 1))), "(assert (= v0_0 1))");
        assert_eq!(to_term(&Formula::atom(Atom::Equals(v(2, 1), -3))), "(= v2_1 (- 3))");
        assert_eq!(to_term(&Formula::atom(Atom::Positive(v(0, 1)))), "(> v0_1 0)");
        assert_eq!(to_term(&Formula::atom(Atom::NonNegative(v(0, 1)))), "(>= v0_1 0)");
        assert_eq!(
            to_term(&Formula::atom(Atom::Offset { lhs: v(1, 1), rhs: v(0, 1), delta: 1 })),
            "(= v1_1 (+ v0_1 1))"
        );
        assert_eq!(
            to_term(&Formula::atom(Atom::Offset { lhs: v(1, 1), rhs: v(0, 1), delta: -1 })),
            "(= v1_1 (- v0_1 1))"
        );
        assert_eq!(
            to_term(&Formula::atom(Atom::Offset { lhs: v(1, 0), rhs: v(0, 0), delta: 0 })),
            "(= v1_0 v0_0)"
        );
    }

    #[test]
    fn connectives() {
        let a = Formula::atom(Atom::Positive(v(0, 0)));
        let b = Formula::atom(Atom::Positive(v(0, 1)));
        let f = Formula::not(Formula::and(vec![a.clone(), b.clone()]));
        assert_eq!(emit_smtlib(&f), "(assert (not (and (> v0_0 0) (> v0_1 0))))");
        assert_eq!(to_term(&Formula::Or(vec![a, b])), "(or (> v0_0 0) (> v0_1 0))");
        assert_eq!(to_term(&Formula::True), "true");
        assert_eq!(to_term(&Formula::False), "false");
    }

    #[test]
    fn deterministic() {
        let crn = crate::models::futile_cycle();
        let f = crate::bmc::encode_bmc(&crn, crate::crn::Target { species: 4, value: 45 }, 4);
        assert_eq!(emit_script(&f), emit_script(&f.clone()));
        assert!(emit_script(&f).contains("(declare-fun v4_5 () Int)"));
    }
}
