//! End-to-end runs of the library on small hand-built and synthetic inputs.

use iotnet::centrality::{influence_vector, top_k};
use iotnet::ingest::{division_concordance, parse_flows, DefaultPolicy};
use iotnet::netstats::full_report;
use iotnet::synth::{generate_growth_panel, generate_network, to_records, SynthConfig};
use iotnet::{
    aggregate_periods, build_matrix, input_shares, truncate, Error, FlowMatrix, IndustryCode, PeriodSpan, Scheme,
    ShareDirection, WeightKind,
};

const FLOWS: &str = "\
period,payer,payee,value,count
2019-01,01110,10110,100.0,4
2019-01,10110,01110,40.0,2
2019-02,10110,47110,250.5,10
2019-02,47110,10110,S,3
2019-03,47110,01110,80.0,S
2019-03,01120,47110,20.0,1
";

#[test]
fn flows_to_division_matrix_to_influence() {
    let records = parse_flows(FLOWS.as_bytes()).unwrap();
    let mapped = division_concordance(DefaultPolicy::Reject).apply(&records).unwrap();
    let span: PeriodSpan = "2019-01:2019-03".parse().unwrap();
    let m: FlowMatrix = build_matrix(&mapped, Scheme::Cpa105, WeightKind::Value, span, &[]).unwrap();
    let codes: Vec<&str> = m.nodes().iter().map(IndustryCode::as_str).collect();
    assert_eq!(codes, ["A01", "C10", "G47"]);
    // 01110 and 01120 merge into A01.
    let a01 = m.index_of(&IndustryCode::new(Scheme::Cpa105, "A01").unwrap()).unwrap();
    let g47 = m.index_of(&IndustryCode::new(Scheme::Cpa105, "G47").unwrap()).unwrap();
    assert_eq!(m.get(a01, g47), 20.0);
    assert_eq!(m.suppressed().len(), 1);

    let supplier = m.supplier_oriented();
    let report = full_report(&supplier);
    assert_eq!(report.n_nodes, 3);
    assert_eq!(report.n_edges, 5);

    let v = influence_vector(&input_shares(&supplier).unwrap(), 0.5).unwrap();
    assert!((v.values.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert_eq!(top_k(&v, 3).len(), 3);
}

#[test]
fn unmapped_code_is_a_mapping_error() {
    let flows = "period,payer,payee,value,count\n2019-01,01110,00999,1,1\n";
    let records = parse_flows(flows.as_bytes()).unwrap();
    match division_concordance(DefaultPolicy::Reject).apply(&records) {
        Err(Error::Mapping { codes }) => assert_eq!(codes, ["00999"]),
        other => panic!("unexpected {other:?}"),
    }
    let lenient = division_concordance(DefaultPolicy::Unclassified).apply(&records).unwrap();
    assert_eq!(lenient[0].payee.as_str(), iotnet::flow::UNCLASSIFIED);
}

#[test]
fn single_and_double_precision_agree() {
    let cfg = SynthConfig { n_industries: 60, edge_density_target: 0.1, seed: 3, months: 24, ..Default::default() };
    let net = generate_network(&cfg).unwrap();
    let m64 = truncate(&net.value.supplier_oriented(), 0.01, ShareDirection::Input).unwrap();
    let m32: FlowMatrix<f32> = m64.cast();
    let v64 = influence_vector(&input_shares(&m64).unwrap(), 0.5).unwrap();
    let v32 = influence_vector(&input_shares(&m32).unwrap(), 0.5_f32).unwrap();
    for (a, b) in v64.values.iter().zip(&v32.values) {
        assert!((a - f64::from(*b)).abs() < 1e-5 * a.max(1e-3), "{a} vs {b}");
    }
}

#[test]
fn synthetic_panel_rebuilds_from_its_own_records() {
    let cfg = SynthConfig { n_industries: 40, edge_density_target: 0.1, seed: 11, months: 24, ..Default::default() };
    let panel = generate_growth_panel(&generate_network(&cfg).unwrap(), &cfg).unwrap();
    let universe = iotnet::synth::industry_codes(40);
    let mut rebuilt = Vec::new();
    for month in &panel {
        let records = to_records(month).unwrap();
        let m: FlowMatrix =
            build_matrix(&records, Scheme::Sic5, WeightKind::Value, month.value.span(), &universe).unwrap();
        assert_eq!(m, month.value);
        rebuilt.push(m);
    }
    let year = aggregate_periods(&rebuilt[..12]).unwrap();
    assert_eq!(year.span(), PeriodSpan::year(2016).unwrap());
}
