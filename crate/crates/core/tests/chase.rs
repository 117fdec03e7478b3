mod common;

use common::{load, rows};
use mdclean::md::{
    chase, chase_step, check_unique_clean_preconditions, enumerate_clean, enumerate_clean_within, find_clean,
    is_interaction_free, is_stable, lhs_matches, parse_log, replay_steps,
};
use mdclean::{ChasePolicy, ChaseStep, Error, MatchDep};

#[test]
fn policies_parse() {
    assert_eq!("md-order".parse::<ChasePolicy>().unwrap(), ChasePolicy::MdOrder);
    assert_eq!("reverse-md-order".parse::<ChasePolicy>().unwrap(), ChasePolicy::ReverseMdOrder);
    assert_eq!(
        "priority:phi2, phi1".parse::<ChasePolicy>().unwrap(),
        ChasePolicy::Priority(vec!["phi2".into(), "phi1".into()])
    );
    assert_eq!("random:42".parse::<ChasePolicy>().unwrap(), ChasePolicy::Random(42));
    assert!(matches!("random".parse::<ChasePolicy>(), Err(Error::Contract(_))));
    assert!(matches!("random:x".parse::<ChasePolicy>(), Err(Error::Contract(_))));
}

#[test]
fn random_policy_reaches_every_clean_instance() {
    let p = load("interacting.mdc");
    let all = enumerate_clean(&p.instance, &p.sigma, 16).unwrap();
    let mut reached = Vec::new();
    for seed in 0..40 {
        let policy = ChasePolicy::Random(seed);
        let trace = chase(&p.instance, &p.sigma, &policy).unwrap();
        assert_eq!(chase(&p.instance, &p.sigma, &policy).unwrap(), trace);
        assert!(is_stable(&trace.result, &p.sigma).unwrap());
        assert_eq!(replay_steps(&p.instance, &p.sigma, &trace.steps).unwrap().last(), Some(&trace.result));
        assert!(all.instances.contains(&trace.result));
        if !reached.contains(&trace.result) {
            reached.push(trace.result);
        }
    }
    assert_eq!(reached.len(), all.instances.len());
}

#[test]
fn priority_policy_matches_reverse_order() {
    let p = load("interacting.mdc");
    let priority = chase(&p.instance, &p.sigma, &"priority:phi2".parse().unwrap()).unwrap();
    let reverse = chase(&p.instance, &p.sigma, &ChasePolicy::ReverseMdOrder).unwrap();
    assert_eq!(priority, reverse);
    let unknown = ChasePolicy::Priority(vec!["phi9".into()]);
    assert!(matches!(chase(&p.instance, &p.sigma, &unknown), Err(Error::Contract(_))));
}

#[test]
fn single_steps() {
    let p = load("interacting.mdc");
    let phi1 = &p.sigma[0];
    let phi2 = &p.sigma[1];
    let (t1, t2, t3) = ("t1".into(), "t2".into(), "t3".into());
    assert!(lhs_matches(phi1, &p.instance, &t1, &t2).unwrap());
    assert!(!lhs_matches(phi1, &p.instance, &t1, &t1).unwrap());
    let d1 = chase_step(&p.instance, phi1, &t1, &t2).unwrap();
    assert_eq!(
        d1,
        rows(&p, "R", &[("t1", &["a1", "{b1,b2}", "c1"]), ("t2", &["a2", "{b1,b2}", "c2"]), ("t3", &["a3", "b3", "c3"])])
    );
    // The merged values are no longer similar to b3.
    assert!(matches!(chase_step(&d1, phi2, &t2, &t3), Err(Error::NotApplicable { .. })));
    assert!(matches!(chase_step(&d1, phi1, &t1, &t2), Err(Error::NotApplicable { .. })));
    assert!(matches!(chase_step(&d1, phi1, &t1, &"t9".into()), Err(Error::Contract(_))));
}

#[test]
fn logs_round_trip() {
    let p = load("interacting.mdc");
    let trace = chase(&p.instance, &p.sigma, &ChasePolicy::ReverseMdOrder).unwrap();
    let steps = parse_log(&trace.log()).unwrap();
    assert_eq!(steps, trace.steps);
    assert_eq!(replay_steps(&p.instance, &p.sigma, &steps).unwrap().last(), Some(&trace.result));
    assert!(matches!(parse_log("phi1 t1\n"), Err(Error::Parse { line: 1, .. })));
    assert!(matches!(parse_log("\nphi1 t1 t2 t3\n"), Err(Error::Parse { line: 2, .. })));
    let bogus = vec![ChaseStep { md: "phi3".into(), t1: "t1".into(), t2: "t2".into() }];
    assert!(matches!(replay_steps(&p.instance, &p.sigma, &bogus), Err(Error::Contract(_))));
}

#[test]
fn stable_project_is_its_own_clean_instance() {
    let p = load("stable.mdc");
    let trace = chase(&p.instance, &p.sigma, &ChasePolicy::MdOrder).unwrap();
    let e = enumerate_clean(&p.instance, &p.sigma, 8).unwrap();
    assert_eq!(e.instances, vec![trace.result.clone()]);
    assert!(is_stable(&trace.result, &p.sigma).unwrap());
    let pre = check_unique_clean_preconditions(&p.sigma, &p.schema).unwrap();
    // Unique here, though the sufficient conditions do not apply.
    assert!(!pre.guarantees_unique());
    assert_eq!(pre.non_preserving_domains, vec!["Flag".to_string()]);
}

#[test]
fn preconditions_report_domains() {
    let p = load("interacting.mdc");
    assert!(!is_interaction_free(&p.sigma));
    let pre = check_unique_clean_preconditions(&p.sigma, &p.schema).unwrap();
    assert!(!pre.guarantees_unique());
    assert_eq!(pre.non_preserving_domains, vec!["A".to_string(), "B".to_string(), "C".to_string()]);
    let bad = vec![MatchDep::new("x", vec![("A", "Z")], ("B", "B"))];
    assert!(matches!(check_unique_clean_preconditions(&bad, &p.schema), Err(Error::Validation(_))));
}

#[test]
fn enumeration_limits() {
    let p = load("interacting.mdc");
    let one = enumerate_clean(&p.instance, &p.sigma, 1).unwrap();
    assert!(one.truncated);
    assert_eq!(one.instances.len(), 1);
    let starved = enumerate_clean_within(&p.instance, &p.sigma, 10, 2).unwrap();
    assert!(starved.truncated);
    assert!(enumerate_clean(&p.instance, &p.sigma, 0).is_err());
    let all = enumerate_clean(&p.instance, &p.sigma, 10).unwrap();
    assert!(!all.truncated);
    let found = find_clean(&p.instance, &p.sigma, 1000, |d| d == &all.instances[1]).unwrap();
    assert_eq!(found.found.as_ref(), Some(&all.instances[1]));
    let none = find_clean(&p.instance, &p.sigma, 1000, |_| false).unwrap();
    assert!(none.found.is_none() && none.complete);
}
