//! Divide-and-conquer witness search: the climb of the target species from
//! its initial value to θ is split into segments of `δ`, each solved as a
//! separate BMC instance starting where the previous one ended.

use std::collections::HashMap;

use log::debug;

use super::EngineError;
use crate::bmc::{encode_bmc_from, encode_exclusion, Formula, UnrollContext};
use crate::crn::{Crn, State, Target};
use crate::smt::{extract_witness, CheckResult, SolverSession};
use crate::witness::Witness;

/// Segment targets `η ± δ, η ± 2δ, ..., θ`.
pub fn segment_targets(crn: &Crn, target: Target, delta: u64) -> Result<Vec<u64>, EngineError> {
    if delta == 0 {
        return Err(EngineError::Config("divide-and-conquer step must be positive".into()));
    }
    let eta = crn.initial().get(target.species);
    let gap = eta.abs_diff(target.value);
    if gap % delta != 0 {
        return Err(EngineError::Config(format!(
            "step {delta} does not divide the distance {gap} between the initial population {eta} and {}",
            target.value
        )));
    }
    let n = gap / delta;
    Ok((1..=n)
        .map(|m| {
            if target.value >= eta {
                eta + m * delta
            } else {
                eta - m * delta
            }
        })
        .collect())
}

#[derive(Debug, Default)]
struct SegmentCache {
    bound: usize,
    found: Vec<Witness>,
    exhausted: bool,
    /// Index of the solution most recently handed out by variation.
    cursor: usize,
}

/// Stateful generator of concatenated witnesses.
#[derive(Debug)]
pub struct DncSearch {
    species: usize,
    delta: usize,
    targets: Vec<u64>,
    cap: usize,
    cache: HashMap<(usize, State), SegmentCache>,
    chain: Vec<Witness>,
    rotate: usize,
}

impl DncSearch {
    /// `cap` is the largest bound tried for a single segment.
    pub fn new(crn: &Crn, target: Target, delta: u64, cap: usize) -> Result<Self, EngineError> {
        Ok(DncSearch {
            species: target.species,
            delta: delta as usize,
            targets: segment_targets(crn, target, delta)?,
            cap: cap.max(delta as usize),
            cache: HashMap::new(),
            chain: Vec::new(),
            rotate: 0,
        })
    }

    pub fn segment_count(&self) -> usize {
        self.targets.len()
    }

    /// Segments of the most recent witness.
    pub fn segments(&self) -> &[Witness] {
        &self.chain
    }

    /// Solution number `index` of segment `m` from `start`, solving for it if
    /// needed. `None` once the segment is exhausted up to the cap.
    fn solution(
        &mut self,
        session: &mut SolverSession,
        crn: &Crn,
        m: usize,
        start: &State,
        index: usize,
    ) -> Result<Option<Witness>, EngineError> {
        let target = Target {
            species: self.species,
            value: self.targets[m],
        };
        let key = (m, start.clone());
        let delta = self.delta;
        let cap = self.cap;
        let entry = self.cache.entry(key).or_insert_with(|| SegmentCache {
            bound: delta,
            ..SegmentCache::default()
        });
        while entry.found.len() <= index {
            if entry.exhausted {
                return Ok(None);
            }
            let mut parts = vec![encode_bmc_from(crn, start, target, entry.bound)];
            parts.extend(
                entry
                    .found
                    .iter()
                    .filter(|w| w.len() == entry.bound)
                    .map(encode_exclusion),
            );
            match session.check_formula(&Formula::and(parts))? {
                CheckResult::Sat(model) => {
                    let ctx = UnrollContext::new(crn, entry.bound);
                    let w = extract_witness(&model, &ctx)?;
                    debug!("segment {m} at bound {}: {} -> {}", entry.bound, w.first(), w.last());
                    entry.found.push(w);
                }
                CheckResult::Unsat => {
                    entry.bound += 1;
                    if entry.bound > cap {
                        entry.exhausted = true;
                    }
                }
            }
        }
        Ok(Some(entry.found[index].clone()))
    }

    /// Completes the chain from segment `from` on with first solutions.
    fn complete(
        &mut self,
        session: &mut SolverSession,
        crn: &Crn,
        from: usize,
    ) -> Result<bool, EngineError> {
        self.chain.truncate(from);
        for m in from..self.targets.len() {
            let start = self.chain.last().map_or_else(|| crn.initial().clone(), |w| w.last().clone());
            match self.solution(session, crn, m, &start, 0)? {
                Some(w) => self.chain.push(w),
                None => return Ok(false),
            }
        }
        Ok(true)
    }

    fn concatenated(&self) -> Result<Witness, EngineError> {
        let mut it = self.chain.iter();
        let mut w = it.next().expect("at least one segment").clone();
        for seg in it {
            w = w.concat(seg)?;
        }
        Ok(w)
    }

    /// The next concatenated witness, or `None` when no segment can be varied.
    ///
    /// The first call chains first solutions. Later calls vary one segment
    /// (rotating through the segments) to its next solution and re-complete
    /// the chain after it.
    pub fn next_witness(
        &mut self,
        session: &mut SolverSession,
        crn: &Crn,
    ) -> Result<Option<Witness>, EngineError> {
        let n = self.targets.len();
        if n == 0 {
            return Ok(None);
        }
        if self.chain.is_empty() {
            return if self.complete(session, crn, 0)? {
                Ok(Some(self.concatenated()?))
            } else {
                self.chain.clear();
                Ok(None)
            };
        }
        let previous = self.chain.clone();
        for _ in 0..n {
            let m = (n - 1) - (self.rotate % n);
            self.rotate += 1;
            let start = previous[m].first().clone();
            let next = match self.cache.get_mut(&(m, start.clone())) {
                Some(c) => {
                    c.cursor += 1;
                    c.cursor
                }
                None => 1,
            };
            if let Some(w) = self.solution(session, crn, m, &start, next)? {
                self.chain = previous[..m].to_vec();
                self.chain.push(w);
                if self.complete(session, crn, m + 1)? {
                    return Ok(Some(self.concatenated()?));
                }
            }
        }
        self.chain = previous;
        Ok(None)
    }
}

/// The first divide-and-conquer witness, or `None` if some segment finds no
/// solution within `cap` transitions.
pub fn find_witness_dnc(
    session: &mut SolverSession,
    crn: &Crn,
    target: Target,
    delta: u64,
    cap: usize,
) -> Result<Option<Witness>, EngineError> {
    DncSearch::new(crn, target, delta, cap)?.next_witness(session, crn)
}
