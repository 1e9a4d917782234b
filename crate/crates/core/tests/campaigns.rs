use traceineq::ensembles::SamplerKind;
use traceineq::inequalities::InequalityId;
use traceineq::search::*;

#[test]
fn worker_count_independence() {
    for id in [InequalityId::Thm1, InequalityId::Eq3, InequalityId::Remark2, InequalityId::Lemma2] {
        let mut cfg = CampaignConfig::new(id, 3, 37, 12);
        cfg.s_values = vec![0.0, 0.5, 1.0];
        cfg.refine_steps = 3;
        let one = run_campaign(&cfg, 1).unwrap();
        for workers in [2, 4, 7] {
            assert_eq!(run_campaign(&cfg, workers).unwrap(), one, "{id} with {workers} workers");
        }
    }
}

#[test]
fn witnesses_reevaluate_exactly() {
    for id in InequalityId::ALL {
        let dim = if id == InequalityId::Lemma2 { 3 } else { 3 };
        let cfg = CampaignConfig::new(id, dim, 8, 4);
        let out = run_campaign(&cfg, 2).unwrap();
        let w = out.result.argmin_witness.expect("witness");
        let json = serde_json::to_string(&w).unwrap();
        let back: WitnessRecord = serde_json::from_str(&json).unwrap();
        let m = back.reevaluate().unwrap();
        assert!((m.value - w.margin).abs() <= 1e-12, "{id}: {} vs {}", m.value, w.margin);
        assert!(out.records.iter().filter_map(|r| r.margin).all(|v| v >= out.result.min_margin));
    }
}

#[test]
fn projection_is_idempotent_on_valid_inputs() {
    for id in [
        InequalityId::Thm1,
        InequalityId::Remark2,
        InequalityId::Lemma2,
        InequalityId::Lemma1Jensen,
        InequalityId::Remark4,
    ] {
        let cfg = CampaignConfig::new(id, 3, 1, 8);
        let domain = Domain::for_campaign(&cfg);
        for i in 0..5 {
            let inputs = draw_inputs(&cfg, i).unwrap();
            let projected = project(domain, &inputs).unwrap();
            assert_eq!(
                std::mem::discriminant(&inputs),
                std::mem::discriminant(&projected)
            );
            let (w0, w1) = (inputs.to_witness(), projected.to_witness());
            let flat = |w: &Witness| -> Vec<f64> {
                let v = serde_json::to_value(w).unwrap();
                let mut out = Vec::new();
                collect_numbers(&v, &mut out);
                out
            };
            for (x, y) in flat(&w0).iter().zip(flat(&w1).iter()) {
                assert!((x - y).abs() <= 1e-12, "{id}: {x} vs {y}");
            }
        }
    }
}

fn collect_numbers(v: &serde_json::Value, out: &mut Vec<f64>) {
    match v {
        serde_json::Value::Number(n) => out.push(n.as_f64().unwrap()),
        serde_json::Value::Array(a) => a.iter().for_each(|x| collect_numbers(x, out)),
        serde_json::Value::Object(o) => o.values().for_each(|x| collect_numbers(x, out)),
        _ => {}
    }
}

#[test]
fn refinement_is_monotone() {
    for id in [InequalityId::Thm1, InequalityId::Q1, InequalityId::Lemma2, InequalityId::Remark3] {
        let cfg = CampaignConfig::new(id, 3, 1, 2);
        let inputs = draw_inputs(&cfg, 0).unwrap();
        let s = if id.uses_s() { Some(0.5) } else { None };
        let start = evaluate(id, &inputs, s).unwrap().value;
        let out = refine(id, &inputs, s, 25, 0.05, 3, Domain::for_campaign(&cfg)).unwrap();
        assert_eq!(out.trajectory.len(), 25);
        assert!(out.trajectory.windows(2).all(|w| w[1] <= w[0]));
        assert!(out.margin.value <= start);
        assert_eq!(evaluate(id, &out.inputs, s).unwrap().value, out.margin.value);
    }
}

#[test]
fn refining_thm1_stays_nonnegative() {
    let cfg = CampaignConfig::new(InequalityId::Thm1, 3, 10, 77);
    for i in 0..10 {
        let inputs = draw_inputs(&cfg, i).unwrap();
        let out = refine(InequalityId::Thm1, &inputs, None, 40, 0.1, i, Domain::for_campaign(&cfg)).unwrap();
        assert!(out.margin.value >= -1e-9);
    }
}

#[test]
fn commuting_refinement_keeps_pairs_commuting() {
    let mut cfg = CampaignConfig::new(InequalityId::Thm2Trace, 3, 1, 3);
    cfg.sampler.kind = SamplerKind::CommutingPair;
    let inputs = draw_inputs(&cfg, 0).unwrap();
    let out = refine(InequalityId::Thm2Trace, &inputs, None, 20, 0.1, 5, Domain::for_campaign(&cfg)).unwrap();
    let Inputs::Pair(a, b) = out.inputs else { panic!() };
    assert!(traceineq::ensembles::commutator_norm(a.as_hermitian(), b.as_hermitian()) < 1e-10);
}

#[test]
fn unknown_inequality() {
    assert!(matches!(
        InequalityId::parse("nosuch"),
        Err(traceineq::Error::UnknownInequality(_))
    ));
}
