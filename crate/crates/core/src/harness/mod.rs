//! Seeded verification suite: instance generation, a registry of invariant
//! checks, and shrinking of failures to smaller reproducers.

mod checks;
pub mod coverage;
pub mod generate;
pub mod oracles;

pub use checks::{registry, Check, Outcome};
pub use generate::{generate, golden_instances, Instance, InstanceDescriptor, InstanceSpec};

use crate::error::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Absolute threshold for identities on operator norms.
pub const TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", content = "reason", rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Skip(String),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Residual {
    pub name: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub check: String,
    pub instance: InstanceDescriptor,
    pub verdict: Verdict,
    pub residuals: Vec<Residual>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    /// Smallest still-failing reduction of the instance, when one exists.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<InstanceDescriptor>,
}

impl CheckResult {
    pub fn failed(&self) -> bool {
        self.verdict == Verdict::Fail
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub spec: InstanceSpec,
    pub summary: Summary,
    pub results: Vec<CheckResult>,
}

impl Report {
    pub fn ok(&self) -> bool {
        self.summary.failed == 0
    }
}

/// Stable per-check salt for the instance seed.
fn salt(id: &str) -> u64 {
    id.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

fn evaluate(check: &Check, inst: &Instance) -> (Verdict, Vec<Residual>, Option<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(inst.descriptor.seed ^ salt(check.id));
    match (check.run)(inst, &mut rng) {
        Ok(o) => (o.verdict, o.residuals, o.message),
        Err(e) => (Verdict::Fail, Vec::new(), Some(e.to_string())),
    }
}

/// Candidate reductions in order: drop a block, then lower a multiplicity.
fn reductions(d: &InstanceDescriptor) -> Vec<(Vec<usize>, Vec<usize>)> {
    let mut out = Vec::new();
    if d.blocks.len() > 1 {
        for i in 0..d.blocks.len() {
            let mut b = d.blocks.clone();
            let mut m = d.mults.clone();
            b.remove(i);
            m.remove(i);
            out.push((b, m));
        }
    }
    for i in 0..d.mults.len() {
        if d.mults[i] > 0 {
            let mut m = d.mults.clone();
            m[i] -= 1;
            out.push((d.blocks.clone(), m));
        }
    }
    out
}

/// Greedily replaces a failing instance by its first still-failing reduction.
pub fn shrink(check: &Check, inst: &Instance) -> Option<InstanceDescriptor> {
    let mut current = inst.descriptor.clone();
    let mut shrunk = false;
    'outer: loop {
        for (blocks, mults) in reductions(&current) {
            let label = format!("{} (shrunk)", inst.descriptor.label);
            let Ok(candidate) = Instance::build(&label, current.seed, &blocks, &mults, None) else {
                continue;
            };
            if evaluate(check, &candidate).0 == Verdict::Fail {
                current = candidate.descriptor;
                shrunk = true;
                continue 'outer;
            }
        }
        break;
    }
    shrunk.then_some(current)
}

pub fn run_check(check: &Check, inst: &Instance) -> CheckResult {
    let (verdict, residuals, message) = evaluate(check, inst);
    let counterexample = if verdict == Verdict::Fail { shrink(check, inst) } else { None };
    CheckResult {
        check: check.id.to_string(),
        instance: inst.descriptor.clone(),
        verdict,
        residuals,
        message,
        counterexample,
    }
}

/// Runs every registered check on the golden instances followed by the
/// generated ones; results come back in (instance, registration) order.
pub fn run_all(spec: &InstanceSpec) -> Result<Report> {
    let mut instances = golden_instances();
    instances.extend(generate(spec)?);
    let checks = registry();
    let jobs: Vec<(&Instance, &Check)> =
        instances.iter().flat_map(|i| checks.iter().map(move |c| (i, c))).collect();
    let results: Vec<CheckResult> = jobs.par_iter().map(|(i, c)| run_check(c, i)).collect();
    let count = |f: &dyn Fn(&Verdict) -> bool| results.iter().filter(|r| f(&r.verdict)).count();
    let summary = Summary {
        passed: count(&|v| *v == Verdict::Pass),
        failed: count(&|v| *v == Verdict::Fail),
        skipped: count(&|v| matches!(v, Verdict::Skip(_))),
    };
    Ok(Report { spec: spec.clone(), summary, results })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn every_invariant_has_a_check() {
        let covered: HashSet<&str> = registry().iter().flat_map(|c| c.covers.iter().copied()).collect();
        let missing: Vec<&str> =
            coverage::INVARIANTS.iter().map(|i| i.id).filter(|id| !covered.contains(id)).collect();
        assert!(missing.is_empty(), "invariants without a harness check: {missing:?}");
        let ids: HashSet<&str> = registry().iter().map(|c| c.id).collect();
        assert_eq!(ids.len(), registry().len());
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = InstanceSpec::new(0, 5);
        let a: Vec<_> = generate(&spec).unwrap().into_iter().map(|i| i.descriptor).collect();
        let b: Vec<_> = generate(&spec).unwrap().into_iter().map(|i| i.descriptor).collect();
        assert_eq!(a, b);
        assert!(InstanceSpec { max_blocks: 6, ..spec }.validate().is_err());
    }

    #[test]
    fn seed_zero_instance_is_fixed() {
        let d = &generate(&InstanceSpec::new(0, 1)).unwrap()[0].descriptor;
        let expected = InstanceDescriptor {
            label: "seed 0 #0".into(),
            seed: 3603520137613238436,
            blocks: vec![3, 3, 2],
            mults: vec![2, 2, 2],
            perm: vec![2, 1, 3],
        };
        assert_eq!(d, &expected);
    }

    #[test]
    fn generation_at_max_bounds_is_fast() {
        let spec = InstanceSpec { max_blocks: 5, ..InstanceSpec::new(42, 200) };
        let start = std::time::Instant::now();
        assert_eq!(generate(&spec).unwrap().len(), 200);
        assert!(start.elapsed().as_secs_f64() < 1.0, "{:?}", start.elapsed());
    }

    #[test]
    fn zero_module_checks_pass_or_skip() {
        let inst = Instance::build("zero", 7, &[1, 2], &[0, 0], None).unwrap();
        for c in registry() {
            let r = run_check(&c, &inst);
            assert!(!r.failed(), "{} failed on the zero module: {:?}", c.id, r.message);
        }
    }

    #[test]
    fn shrinking_reduces_a_planted_failure() {
        fn planted(inst: &Instance, _: &mut ChaCha8Rng) -> Result<Outcome> {
            // fails whenever some block has multiplicity at least 2
            let bad = inst.module.mults().iter().any(|&m| m >= 2);
            Ok(Outcome { verdict: if bad { Verdict::Fail } else { Verdict::Pass }, residuals: vec![], message: None })
        }
        let check = Check { id: "planted", covers: &[], run: planted };
        let inst = Instance::build("p", 3, &[1, 2, 1], &[3, 1, 2], None).unwrap();
        let r = run_check(&check, &inst);
        let cx = r.counterexample.unwrap();
        assert_eq!(cx.mults, vec![2]);
    }
}
