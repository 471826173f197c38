use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use iotnet::centrality::{self, DegenerateRepair, InfluenceOptions, Solver};
use iotnet::correlate::{
    edge_share_correlations, growth_correlation_by_distance, industry_aggregate_correlations, write_curves_csv,
    AggregateMode, DistanceCurveOptions, GrowthBasis, GrowthPooling,
};
use iotnet::diffquant::{proportional_difference, scaled_percentage_difference, DifferenceMetric, ZeroPolicy};
use iotnet::ingest::{self, parse_concordance, DefaultPolicy};
use iotnet::macrobench::{benchmark_correlations, monthly_totals, share_in_year};
use iotnet::netstats::{full_report, REPORT_CSV_HEADER};
use iotnet::powerlaw::{self, bootstrap_pvalue, select_xmin};
use iotnet::synth::{self, SynthConfig};
use iotnet::{
    build_matrix, input_shares, share_matrix, truncate, Error, FlowMatrix, FlowRecord, Frequency, IndustryCode,
    PeriodSpan, Result, Scheme, ShareDirection, SourceTag, WeightKind, YearMonth,
};

use crate::manifest::{fresh_seed, RunManifest};
use crate::{
    BuildArgs, CentralityArgs, Cli, Command, CorrelateCommand, DiffArgs, GlobalOpts, MacroArgs, PlfitArgs, StatsArgs,
    SynthArgs,
};

pub(crate) fn dispatch(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.global.jobs {
        if jobs == 0 {
            return Err(Error::Usage("--jobs must be at least 1".into()));
        }
        // A second initialisation in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    let g = &cli.global;
    match cli.command {
        Command::Build(a) => build(g, a),
        Command::Stats(a) => stats(g, a),
        Command::Correlate(c) => correlate(g, c),
        Command::Centrality(a) => centrality_cmd(g, a),
        Command::Plfit(a) => plfit(g, a),
        Command::Diff(a) => diff(g, a),
        Command::Macro(a) => macro_cmd(g, a),
        Command::Synth(a) => synth_cmd(g, a),
    }
}

/// `<command>_<k1><v1>_<k2><v2>.<ext>` inside the output directory.
fn output_path(g: &GlobalOpts, command: &str, params: &[(&str, String)], ext: &str) -> PathBuf {
    let mut name = command.to_string();
    for (k, v) in params {
        name.push('_');
        name.push_str(k);
        name.push_str(&v.replace([':', '/', '\\', ' '], "-"));
    }
    g.out_dir.join(format!("{name}.{ext}"))
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn parse_direction(s: &str) -> Result<ShareDirection> {
    ShareDirection::parse(s)
}

fn parse_weight(s: &str) -> Result<WeightKind> {
    match s.to_ascii_lowercase().as_str() {
        "value" => Ok(WeightKind::Value),
        "count" => Ok(WeightKind::Count),
        other => Err(Error::Usage(format!("unknown weight kind {other:?}"))),
    }
}

fn load_matrix(run: &mut RunManifest, path: &Path) -> Result<FlowMatrix> {
    let bytes = run.read_input(path)?;
    ingest::read_matrix(&bytes[..])
}

fn load_flows(run: &mut RunManifest, path: &Path) -> Result<Vec<FlowRecord>> {
    let bytes = run.read_input(path)?;
    ingest::parse_flows(&bytes[..])
}

/// One matrix per month present in `records`, all on the union of codes.
fn monthly_matrices(records: &[FlowRecord], kind: WeightKind) -> Result<Vec<FlowMatrix>> {
    let first = records.first().ok_or_else(|| Error::Validation("flows file has no records".into()))?;
    let scheme = first.payer.scheme();
    let universe: Vec<IndustryCode> =
        records.iter().flat_map(|r| [r.payer.clone(), r.payee.clone()]).collect::<BTreeSet<_>>().into_iter().collect();
    let mut by_month: BTreeMap<YearMonth, Vec<FlowRecord>> = BTreeMap::new();
    for r in records {
        by_month.entry(r.period).or_default().push(r.clone());
    }
    by_month.iter().map(|(&m, rs)| build_matrix(rs, scheme, kind, PeriodSpan::month(m), &universe)).collect()
}

fn build(g: &GlobalOpts, a: BuildArgs) -> Result<()> {
    let mut run = RunManifest::new("build");
    let span: PeriodSpan = a.span.parse()?;
    let kind = parse_weight(&a.weight)?;
    let policy = if a.unclassified { DefaultPolicy::Unclassified } else { DefaultPolicy::Reject };
    let mut records = load_flows(&mut run, &a.flows)?;
    let mut scheme = Scheme::parse(&a.scheme)?;
    if let Some(path) = &a.concordance {
        let bytes = run.read_input(path)?;
        records = parse_concordance(&bytes[..], policy)?.apply(&records)?;
        scheme = Scheme::Cpa105;
    } else if a.division_concordance {
        records = ingest::division_concordance(policy).apply(&records)?;
        scheme = Scheme::Cpa105;
    }
    let mut m: FlowMatrix = build_matrix(&records, scheme, kind, span, &[])?;
    if let Some(tag) = &a.source {
        m = m.with_source(SourceTag::parse(tag)?);
    }
    if m.n() == 0 {
        eprintln!("warning: no records fall in span {span}; writing an empty matrix");
    }
    run.param("span", span);
    run.param("weight", kind);
    run.param("scheme", scheme);
    run.param("source", m.source());
    let out = a
        .out
        .map(|p| g.out_dir.join(p))
        .unwrap_or_else(|| output_path(g, "build", &[("", span.to_string()), ("", kind.to_string())], "json"));
    let bytes = csv_bytes(|w| ingest::write_matrix(&m, w))?;
    run.write_output(&out, &bytes)?;
    run.finish(&g.out_dir)?;
    Ok(())
}

fn stats(g: &GlobalOpts, a: StatsArgs) -> Result<()> {
    let mut run = RunManifest::new("stats");
    let by = parse_direction(&a.by)?;
    let mut body = format!("source,span,threshold,{REPORT_CSV_HEADER}\n");
    for path in &a.matrices {
        let m = load_matrix(&mut run, path)?.supplier_oriented();
        for &t in &a.thresholds {
            let report = full_report(&truncate(&m, t, by)?);
            body.push_str(&format!("{},{},{t},{}\n", m.source(), m.span(), report.csv_row()));
        }
    }
    let thresholds: Vec<String> = a.thresholds.iter().map(f64::to_string).collect();
    run.param("by", by);
    run.param("thresholds", thresholds.join(";"));
    let out = output_path(g, "stats", &[("by-", by.to_string()), ("threshold", thresholds.join("-"))], "csv");
    run.write_output(&out, body.as_bytes())?;
    run.finish(&g.out_dir)?;
    Ok(())
}

fn correlate(g: &GlobalOpts, c: CorrelateCommand) -> Result<()> {
    let mut run = RunManifest::new("correlate");
    let (out, body) = match c {
        CorrelateCommand::Edges { matrices, by } => {
            let by = parse_direction(&by)?;
            let mut items = Vec::new();
            for path in &matrices {
                let m = load_matrix(&mut run, path)?.supplier_oriented();
                items.push((m.span().start.year(), share_matrix(&m, by)?));
            }
            run.param("kind", "edges");
            run.param("by", by);
            let report = edge_share_correlations(&items)?;
            (output_path(g, "correlate", &[("edges", String::new()), ("by-", by.to_string())], "csv"), report.to_csv())
        }
        CorrelateCommand::Industry { matrices, mode } => {
            let mode = match mode.to_ascii_lowercase().as_str() {
                "levels" => AggregateMode::Levels,
                "growth" => AggregateMode::GrowthRates,
                other => return Err(Error::Usage(format!("unknown aggregate mode {other:?}"))),
            };
            let mut items = Vec::new();
            for path in &matrices {
                let m = load_matrix(&mut run, path)?;
                items.push((m.span().start.year(), m));
            }
            let label = if mode == AggregateMode::Levels { "levels" } else { "growth" };
            run.param("kind", "industry");
            run.param("mode", label);
            let report = industry_aggregate_correlations(&items, mode)?;
            (
                output_path(g, "correlate", &[("industry", String::new()), ("", label.to_string())], "csv"),
                report.to_csv(),
            )
        }
        CorrelateCommand::Distance { flows, basis, thresholds, pooling, min_pairs, max_distance } => {
            let basis = GrowthBasis::parse(&basis)?;
            let pooling = match pooling.to_ascii_lowercase().as_str() {
                "pooled" => GrowthPooling::Pooled,
                "per-pair-mean" | "per-pair" => GrowthPooling::PerPairMean,
                other => return Err(Error::Usage(format!("unknown pooling {other:?}"))),
            };
            let records = load_flows(&mut run, &flows)?;
            let monthly = monthly_matrices(&records, basis.weight_kind())?;
            let opts = DistanceCurveOptions { basis, pooling, min_pairs, max_distance };
            let curves = growth_correlation_by_distance(&monthly, &thresholds, opts)?;
            let ts: Vec<String> = thresholds.iter().map(f64::to_string).collect();
            run.param("kind", "distance");
            run.param("basis", format!("{basis:?}"));
            run.param("thresholds", ts.join(";"));
            run.param("pooling", format!("{pooling:?}"));
            run.param("min_pairs", min_pairs);
            run.param("max_distance", max_distance.map_or_else(|| "none".to_string(), |d| d.to_string()));
            let body = String::from_utf8(csv_bytes(|w| write_curves_csv(&curves, w))?).expect("utf-8 csv");
            (output_path(g, "correlate", &[("distance", String::new()), ("threshold", ts.join("-"))], "csv"), body)
        }
    };
    run.write_output(&out, body.as_bytes())?;
    run.finish(&g.out_dir)?;
    Ok(())
}

fn influence_of(
    m: &FlowMatrix,
    alpha_l: f64,
    threshold: f64,
    opts: InfluenceOptions,
) -> Result<centrality::InfluenceVector> {
    let m = m.supplier_oriented();
    let m = truncate(&m, threshold, ShareDirection::Input)?;
    centrality::influence_vector_with(&input_shares(&m)?, alpha_l, opts)
}

fn centrality_cmd(g: &GlobalOpts, a: CentralityArgs) -> Result<()> {
    let mut run = RunManifest::new("centrality");
    let solver = match a.solver.to_ascii_lowercase().as_str() {
        "direct" => Solver::Direct,
        "iterative" => Solver::iterative(),
        other => return Err(Error::Usage(format!("unknown solver {other:?}"))),
    };
    let repair = if a.self_loop_repair { DegenerateRepair::SelfLoop } else { DegenerateRepair::None };
    let m = load_matrix(&mut run, &a.matrix)?;
    let v = influence_of(&m, a.alpha_l, a.threshold, InfluenceOptions { solver, repair })?;
    if !v.column_stochastic {
        eprintln!("warning: some industries have no recorded inputs; the vector does not sum to one");
    }
    run.param("alpha_l", a.alpha_l);
    run.param("threshold", a.threshold);
    run.param("solver", &a.solver);
    run.param("self_loop_repair", a.self_loop_repair);
    run.param("top", a.top);
    let params = [("alpha-l", a.alpha_l.to_string()), ("threshold", a.threshold.to_string())];
    run.write_output(&output_path(g, "centrality", &params, "csv"), &csv_bytes(|w| v.write_csv(w))?)?;
    let curve = centrality::ccdf(&v.values)?;
    run.write_output(&output_path(g, "centrality_ccdf", &params, "csv"), &csv_bytes(|w| curve.write_csv(w))?)?;
    let ranking = centrality::top_k(&v, a.top);
    run.write_output(
        &output_path(g, "centrality_top", &params, "csv"),
        &csv_bytes(|w| centrality::write_top_k_csv(&ranking, w))?,
    )?;
    run.finish(&g.out_dir)?;
    Ok(())
}

fn read_values(bytes: &[u8]) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
    let header = rdr.headers().map_err(|e| Error::Parse { line: 1, message: e.to_string() })?;
    if header.iter().collect::<Vec<_>>() != ["value"] {
        return Err(Error::Schema("values file needs a single `value` column".into()));
    }
    rdr.records()
        .map(|row| {
            let row =
                row.map_err(|e| Error::Parse { line: e.position().map_or(0, |p| p.line()), message: e.to_string() })?;
            let line = row.position().map_or(0, |p| p.line());
            let s = row.get(0).unwrap_or_default();
            s.parse().map_err(|_| Error::Parse { line, message: format!("value {s:?} is not a number") })
        })
        .collect()
}

fn plfit(g: &GlobalOpts, a: PlfitArgs) -> Result<()> {
    let mut run = RunManifest::new("plfit");
    let seed = a.seed.unwrap_or_else(fresh_seed);
    run.seed = Some(seed);
    let mut params = Vec::new();
    let xs = match (&a.matrix, &a.values) {
        (Some(path), _) => {
            let mut m = load_matrix(&mut run, path)?;
            if let Some(q) = a.drop_quantile {
                m = powerlaw::drop_below_value_quantile(&m, q)?;
                run.param("drop_quantile", q);
                params.push(("drop", q.to_string()));
            }
            run.param("alpha_l", a.alpha_l);
            params.push(("alpha-l", a.alpha_l.to_string()));
            influence_of(&m, a.alpha_l, 0.0, InfluenceOptions::default())?.values
        }
        (None, Some(path)) => {
            let bytes = run.read_input(path)?;
            read_values(&bytes)?
        }
        (None, None) => return Err(Error::Usage("plfit needs --matrix or --values".into())),
    };
    run.param("reps", a.reps);
    params.push(("reps", a.reps.to_string()));
    params.push(("seed", seed.to_string()));
    let fit = select_xmin(&xs)?;
    let fit = fit.with_p_value(bootstrap_pvalue(&xs, &fit, a.reps, seed)?);
    let out = output_path(g, "plfit", &params, "csv");
    run.write_output(&out, &csv_bytes(|w| fit.write_csv(w, g.digits))?)?;
    run.finish(&g.out_dir)?;
    Ok(())
}

fn diff(g: &GlobalOpts, a: DiffArgs) -> Result<()> {
    let mut run = RunManifest::new("diff");
    let metric = DifferenceMetric::parse(&a.metric)?;
    let zero_policy = ZeroPolicy::parse(&a.zero_policy)?;
    let ma = load_matrix(&mut run, &a.a)?.supplier_oriented();
    let mb = load_matrix(&mut run, &a.b)?.supplier_oriented();
    let report = match metric {
        DifferenceMetric::Proportional => {
            if zero_policy != ZeroPolicy::BothNonzeroOnly {
                return Err(Error::Usage(
                    "proportional differences are only defined on cells nonzero in both tables".into(),
                ));
            }
            proportional_difference(&ma, &mb)?
        }
        DifferenceMetric::ScaledPercentage => scaled_percentage_difference(&ma, &mb, zero_policy)?,
    };
    let metric_label = match metric {
        DifferenceMetric::Proportional => "proportional",
        DifferenceMetric::ScaledPercentage => "scaled-percentage",
    };
    run.param("metric", metric_label);
    run.param("zero_policy", &a.zero_policy);
    let params = [("", metric_label.to_string()), ("", format!("{}-vs-{}", report.pair.0, report.pair.1))];
    run.write_output(
        &output_path(g, "diff", &params, "csv"),
        &csv_bytes(|w| report.write_quantiles_csv(w, g.digits))?,
    )?;
    run.write_output(&output_path(g, "diff_values", &params, "csv"), &csv_bytes(|w| report.write_values_csv(w))?)?;
    run.finish(&g.out_dir)?;
    Ok(())
}

fn indicator(run: &mut RunManifest, spec: &str, frequency: Frequency) -> Result<ingest::IndicatorSeries> {
    let (name, path) =
        spec.split_once('=').ok_or_else(|| Error::Usage(format!("indicator {spec:?} is not NAME=PATH")))?;
    let bytes = run.read_input(Path::new(path))?;
    ingest::parse_indicator(&bytes[..], name, frequency)
}

fn macro_cmd(g: &GlobalOpts, a: MacroArgs) -> Result<()> {
    let mut run = RunManifest::new("macro");
    let records = load_flows(&mut run, &a.flows)?;
    let mut matrices = monthly_matrices(&records, WeightKind::Value)?;
    matrices.extend(monthly_matrices(&records, WeightKind::Count)?);
    let totals = monthly_totals(&matrices)?;
    let mut indicators = Vec::new();
    for spec in &a.monthly {
        indicators.push(indicator(&mut run, spec, Frequency::Monthly)?);
    }
    for spec in &a.annual {
        indicators.push(indicator(&mut run, spec, Frequency::Annual)?);
    }
    if indicators.is_empty() {
        return Err(Error::Usage("macro needs at least one --monthly or --annual indicator".into()));
    }
    let modes = [AggregateMode::Levels, AggregateMode::GrowthRates];
    let mut table = benchmark_correlations(&totals, &indicators, a.covid_exclude, &modes)?;
    if let Some(year) = a.share_year {
        table.share_row = Some((year, share_in_year(&totals, &indicators, year)?));
        run.param("share_year", year);
    }
    run.param("covid_exclude", a.covid_exclude);
    let window = if a.covid_exclude { "covid-excluded" } else { "full" };
    let out = output_path(g, "macro", &[("", window.to_string())], "csv");
    run.write_output(&out, &csv_bytes(|w| table.write_csv(w, g.digits))?)?;
    run.finish(&g.out_dir)?;
    Ok(())
}

fn synth_cmd(g: &GlobalOpts, a: SynthArgs) -> Result<()> {
    let mut run = RunManifest::new("synth");
    let seed = a.seed.unwrap_or_else(fresh_seed);
    run.seed = Some(seed);
    let cfg = SynthConfig {
        n_industries: a.n,
        seed,
        strength_tail_gamma: a.gamma,
        edge_density_target: a.density,
        months: a.months,
        start: a.start.parse()?,
        shock_persistence: a.persistence,
        propagation_damping: a.damping,
        noise_scale: a.noise,
        suppression_rate: a.suppression,
    };
    let network = synth::generate_network(&cfg)?;
    let panel = synth::generate_growth_panel(&network, &cfg)?;
    let mut records = Vec::new();
    for month in &panel {
        records.extend(synth::to_records(month)?);
    }
    if cfg.suppression_rate > 0.0 {
        synth::suppress_records(&mut records, cfg.suppression_rate, seed);
    }
    for (k, v) in [
        ("n", a.n.to_string()),
        ("gamma", a.gamma.to_string()),
        ("density", a.density.to_string()),
        ("months", a.months.to_string()),
        ("start", a.start.clone()),
        ("persistence", a.persistence.to_string()),
        ("damping", a.damping.to_string()),
        ("noise", a.noise.to_string()),
        ("suppression", a.suppression.to_string()),
    ] {
        run.param(k, v);
    }
    let out = output_path(g, "synth", &[("seed", seed.to_string()), ("n", a.n.to_string())], "csv");
    run.write_output(&out, &csv_bytes(|w| ingest::serialize_flows(&records, w))?)?;
    run.finish(&g.out_dir)?;
    Ok(())
}
