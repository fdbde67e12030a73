use std::collections::BTreeSet;
use std::time::Duration;

use crn_cex::bmc::{encode_bmc, encode_exclusion};
use crn_cex::smt::{emit_script, extract_witness, CheckResult, SatAnswer};
use crn_cex::{models, SmtError, SolverConfig, SolverSession, State, Target, UnrollContext};

fn session() -> SolverSession {
    SolverSession::spawn(SolverConfig::default()).expect("z3 on PATH")
}

#[test]
fn trivial_terms() {
    let mut s = session();
    s.push().unwrap();
    s.assert_term("(= 1 1)").unwrap();
    assert_eq!(s.check().unwrap(), SatAnswer::Sat);
    s.pop().unwrap();
    s.push().unwrap();
    s.assert_term("(= 1 2)").unwrap();
    assert_eq!(s.check().unwrap(), SatAnswer::Unsat);
    s.pop().unwrap();
    // Reusable after unsat.
    assert_eq!(s.check().unwrap(), SatAnswer::Sat);
    assert_eq!(s.depth(), 0);
}

#[test]
fn two_step_witness() {
    let crn = models::single_species();
    let target = Target { species: 1, value: 42 };
    let mut s = session();
    let f = encode_bmc(&crn, target, 2);
    let CheckResult::Sat(model) = s.check_formula(&f).unwrap() else {
        panic!("expected sat");
    };
    assert_eq!(model.get("v2_1"), Some(42));
    let ctx = UnrollContext::new(&crn, 2);
    let w = extract_witness(&model, &ctx).unwrap();
    assert_eq!(w.states(), &[State::from([1, 40]), State::from([1, 41]), State::from([1, 42])]);
    assert_eq!(w.reactions(), &[0, 0]);

    // The only loop-free witness: excluding it leaves nothing.
    let both = crn_cex::Formula::and(vec![f, encode_exclusion(&w)]);
    assert_eq!(s.check_formula(&both).unwrap(), CheckResult::Unsat);
}

#[test]
fn unsat_bounds() {
    let crn = models::single_species();
    let mut s = session();
    let zero = encode_bmc(&crn, Target { species: 1, value: 42 }, 0);
    assert_eq!(s.check_formula(&zero).unwrap(), CheckResult::Unsat);
    let parity = encode_bmc(&crn, Target { species: 1, value: 41 }, 2);
    assert_eq!(s.check_formula(&parity).unwrap(), CheckResult::Unsat);
}

#[test]
fn incremental_exclusions_yield_distinct_witnesses() {
    let crn = models::futile_cycle();
    let target = Target { species: 4, value: 49 };
    let k = 3;
    let ctx = UnrollContext::new(&crn, k);
    let vars: BTreeSet<_> = ctx.state_vars().into_iter().collect();
    let mut s = session();
    s.assert_formula(&encode_bmc(&crn, target, k)).unwrap();
    let mut seen = BTreeSet::new();
    for _ in 0..5 {
        match s.check().unwrap() {
            SatAnswer::Unsat => break,
            SatAnswer::Sat => {
                let w = extract_witness(&s.model(&vars).unwrap(), &ctx).unwrap();
                assert!(seen.insert(w.states().to_vec()), "repeated witness");
                s.assert_formula(&encode_exclusion(&w)).unwrap();
            }
        }
    }
    assert!(!seen.is_empty());
}

#[test]
fn script_is_answered_sat() {
    use std::io::Write;
    use std::process::{Command, Stdio};

    let crn = models::single_species();
    let script = emit_script(&encode_bmc(&crn, Target { species: 1, value: 42 }, 2));
    let mut child = Command::new("z3")
        .arg("-in")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .expect("z3 on PATH");
    child.stdin.take().unwrap().write_all(script.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "sat");
}

#[test]
fn solver_errors_are_reported() {
    let mut s = session();
    let err = s.assert_term("(= undeclared 1)").unwrap_err();
    assert!(matches!(err, SmtError::Solver { .. }), "{err}");
    // Still usable.
    s.push().unwrap();
    s.assert_term("(= 1 1)").unwrap();
    assert_eq!(s.check().unwrap(), SatAnswer::Sat);
    s.pop().unwrap();
}

#[test]
fn missing_binary() {
    let cfg = SolverConfig::from_command_line("definitely-not-a-solver-binary -in");
    assert!(matches!(SolverSession::spawn(cfg), Err(SmtError::Spawn { .. })));
}

#[test]
fn crash_is_not_unsat() {
    // `cat` echoes commands back instead of answering: a protocol error.
    let cfg = SolverConfig::from_command_line("cat").with_timeout(Duration::from_secs(5));
    assert!(SolverSession::spawn(cfg).is_err());
    // A process that exits immediately.
    let cfg = SolverConfig::from_command_line("true").with_timeout(Duration::from_secs(5));
    assert!(matches!(SolverSession::spawn(cfg), Err(SmtError::Crashed { .. })));
}

#[test]
fn timeout_is_an_error() {
    // `sleep` never answers.
    let cfg = SolverConfig::from_command_line("sleep 30").with_timeout(Duration::from_millis(300));
    assert!(matches!(SolverSession::spawn(cfg), Err(SmtError::Timeout { .. })));
}
