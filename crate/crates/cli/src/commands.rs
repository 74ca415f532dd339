use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;

use fhp_core::catalog::{self, parse_utc, IngestSpec};
use fhp_core::diagnose::{
    ks_uniform_test_at, plotdata_table, residuals, serial_pairs, transformed_time_plotdata,
};
use fhp_core::estimate::{c_beta_extremes, FitOptions};
use fhp_core::simulate::{
    parse_study_table, run_replicate, simulate_fhp, simulate_fhp_thinning, study_table,
    summarize_study, ExpReading, MagnitudeLaw, SimConfig, SizeSummary, Stop, StudyOptions,
    StudyRow, DEFAULT_EPSILON,
};
use fhp_core::{compare_aic, fit, AicEntry, Catalog, FhpParams, FitRecord, FitResult, ModelKind};

use crate::output::{read_header, write_atomic, Outputs, Provenance};
use crate::{
    Command, CompareArgs, ConsistencyArgs, DiagnoseArgs, EtaReading, FitArgs, IngestArgs,
    InputArgs, SimulateArgs,
};

pub fn run(command: Command, line: &str) -> Result<()> {
    match command {
        Command::Ingest(a) => cmd_ingest(&a, line),
        Command::Fit(a) => cmd_fit(&a, line),
        Command::Simulate(a) => cmd_simulate(&a, line),
        Command::Diagnose(a) => cmd_diagnose(&a, line),
        Command::Consistency(a) => cmd_consistency(&a, line),
        Command::Compare(a) => cmd_compare(&a, line),
    }
}

fn file_stem(s: &str) -> String {
    let stem: String = s
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "._-".contains(c) { c } else { '_' })
        .collect();
    if stem.is_empty() { "catalog".into() } else { stem }
}

fn parse_fhp(s: &str) -> Result<FhpParams> {
    let v = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| anyhow!("parameters '{s}' are not numbers"))?;
    let [l, a, g, b, c] = v[..] else {
        bail!("expected five parameters λ₀,α,γ,β,c, got '{s}'");
    };
    let p = FhpParams::new(l, a, g, b, c);
    p.validate()?;
    Ok(p)
}

fn magnitude_law(eta: f64, xi: f64, m0: f64, reading: EtaReading) -> Result<MagnitudeLaw> {
    let reading = match reading {
        EtaReading::Rate => ExpReading::MeanInvEta,
        EtaReading::Mean => ExpReading::RateInvEta,
    };
    Ok(MagnitudeLaw::new(eta, xi, m0)?.with_reading(reading))
}

fn is_canonical(path: &Path) -> Result<bool> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    Ok(text.starts_with(&format!("# format={}", catalog::CANONICAL_FORMAT)))
}

/// Load the input catalog and record how it was obtained.
fn load_catalog(input: &InputArgs, prov: &mut Provenance) -> Result<Catalog> {
    prov.set("input", input.input.display());
    if is_canonical(&input.input)? {
        let mut cat = catalog::read_canonical_file(&input.input)
            .with_context(|| format!("cannot read catalog {}", input.input.display()))?;
        if let Some(label) = &input.label {
            let relabeled = Catalog::new(
                cat.events().to_vec(),
                cat.m0(),
                cat.t_start(),
                cat.t_end(),
                label.clone(),
            )?;
            cat = relabeled.with_meta(cat.meta().clone());
        }
        prov.set("input_format", "canonical");
        return Ok(cat);
    }
    let m0 = input
        .m0
        .ok_or_else(|| anyhow!("--m0 is required for CSV input"))?;
    let mut spec = IngestSpec::new(&input.input, m0);
    spec.time_column = input.time_column.clone();
    spec.magnitude_column = input.mag_column.clone();
    spec.lat_column = input.lat_column.clone();
    spec.lon_column = input.lon_column.clone();
    spec.region = input.region;
    if let Some(label) = &input.label {
        spec.label = label.clone();
    }
    let time = |s: &Option<String>, what: &str| -> Result<_> {
        s.as_deref()
            .map(|v| parse_utc(v).ok_or_else(|| anyhow!("--{what} '{v}' is not an ISO-8601 time")))
            .transpose()
    };
    let start = time(&input.start, "start")?;
    let end = time(&input.end, "end")?;
    if start.is_some() || end.is_some() {
        spec.period = Some((
            start.unwrap_or(chrono::DateTime::<chrono::Utc>::MIN_UTC),
            end.unwrap_or(chrono::DateTime::<chrono::Utc>::MAX_UTC),
        ));
    }
    prov.set("input_format", "csv");
    prov.set("m0", m0);
    prov.set("region", input.region.map_or("none".to_string(), |r| r.to_string()));
    prov.set("start", input.start.as_deref().unwrap_or("none"));
    prov.set("end", input.end.as_deref().unwrap_or("none"));
    prov.set(
        "columns",
        format!(
            "{},{},{},{}",
            spec.time_column, spec.magnitude_column, spec.lat_column, spec.lon_column
        ),
    );
    prov.set("label", &spec.label);
    Ok(catalog::ingest(&spec)?)
}

fn report(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn cmd_ingest(a: &IngestArgs, line: &str) -> Result<()> {
    let mut prov = Provenance::new(line, 0);
    let cat = load_catalog(&a.input, &mut prov)?;
    let summary = catalog::summarize(&cat)?;
    let stem = file_stem(cat.label());
    let mut out = Outputs::default();
    out.add(a.out.join(format!("{stem}.catalog")), catalog::write_canonical(&cat, &prov.pairs()));
    out.add(
        a.out.join(format!("{stem}_summary.txt")),
        prov.header() + &summary.to_record(),
    );
    print!("{}", summary.to_record());
    report(&out.commit()?);
    Ok(())
}

fn fmt_ci(ci: Option<&[(f64, f64)]>, j: usize) -> (String, String) {
    match ci {
        Some(c) => (c[j].0.to_string(), c[j].1.to_string()),
        None => ("NA".into(), "NA".into()),
    }
}

fn ci_table(f: &FitResult) -> String {
    let mut s = String::from("parameter,estimate,ci95_low,ci95_high,ci99_low,ci99_high\n");
    for (j, (name, v)) in f.model.param_names().iter().zip(f.theta()).enumerate() {
        let (a, b) = fmt_ci(f.ci95.as_deref(), j);
        let (c, d) = fmt_ci(f.ci99.as_deref(), j);
        let _ = writeln!(s, "{name},{v},{a},{b},{c},{d}");
    }
    s
}

fn c_beta_table(f: &FitResult) -> Option<String> {
    let p = f.params.fhp()?;
    let mut s = String::from("level,point,min,max\n");
    for level in [0.95, 0.99] {
        match c_beta_extremes(f, level) {
            Ok(e) => {
                let _ = writeln!(s, "{level},{},{},{}", e.point, e.min, e.max);
            }
            Err(_) => {
                let _ = writeln!(s, "{level},{},NA,NA", p.c_beta());
            }
        }
    }
    Some(s)
}

fn fit_summary(f: &FitResult, cat: &Catalog) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "model      {}", f.model);
    let _ = writeln!(s, "catalog    {} (N = {}, M0 = {})", f.label, f.n_events, cat.m0());
    let _ = writeln!(
        s,
        "starts     {} ({} converged, {} excluded); best is start {} after {} iterations",
        f.n_starts, f.n_converged, f.n_excluded, f.start_index, f.iterations
    );
    let _ = writeln!(s, "-loglik    {:.4}", f.neg_loglik);
    let _ = writeln!(s, "AIC        {:.4} (k = {})", f.aic, f.k);
    let _ = writeln!(s);
    let _ = writeln!(s, "{:<10} {:>12}  {:>25}  {:>25}", "parameter", "estimate", "95% CI", "99% CI");
    for (j, (name, v)) in f.model.param_names().iter().zip(f.theta()).enumerate() {
        let ci = |c: Option<&[(f64, f64)]>| match c {
            Some(c) => format!("({:.4}, {:.4})", c[j].0, c[j].1),
            None => "unavailable".to_string(),
        };
        let _ = writeln!(
            s,
            "{name:<10} {v:>12.5}  {:>25}  {:>25}",
            ci(f.ci95.as_deref()),
            ci(f.ci99.as_deref())
        );
    }
    if let Some(p) = f.params.fhp() {
        let _ = writeln!(s);
        let _ = writeln!(s, "c^beta     {:.4}", p.c_beta());
        for level in [0.95, 0.99] {
            if let Ok(e) = c_beta_extremes(f, level) {
                let _ = writeln!(s, "  {:.0}% extremes ({:.4}, {:.4})", level * 100.0, e.min, e.max);
            }
        }
    }
    if !f.hessian_pd {
        let _ = writeln!(s, "\nHessian is not positive definite; intervals unavailable");
    }
    if f.boundary {
        let _ = writeln!(s, "\nestimate is at a box boundary; intervals are approximate");
    }
    s
}

fn cmd_fit(a: &FitArgs, line: &str) -> Result<()> {
    let kind = match (a.restricted, a.model) {
        (false, k) => k,
        (true, ModelKind::Fhp | ModelKind::FhpRestricted) => ModelKind::FhpRestricted,
        (true, ModelKind::Etas) => bail!("--restricted applies to the FHP only"),
    };
    let mut prov = Provenance::new(line, a.seed);
    let cat = load_catalog(&a.input, &mut prov)?;
    prov.set("model", kind);
    prov.set("n_starts", a.n_starts);
    let opts = FitOptions {
        n_starts: a.n_starts,
        seed: a.seed,
        ..FitOptions::default()
    };
    let f = fit(kind, &cat, &opts).with_context(|| format!("fitting {kind} to {}", cat.label()))?;

    let stem = format!("{}_{}", file_stem(cat.label()), kind);
    let header = prov.header();
    let summary = fit_summary(&f, &cat);
    let mut out = Outputs::default();
    out.add(a.out.join(format!("{stem}.fit")), f.to_record(&prov.pairs()));
    out.add(a.out.join(format!("{stem}_ci.csv")), header.clone() + &ci_table(&f));
    if let Some(t) = c_beta_table(&f) {
        out.add(a.out.join(format!("{stem}_cbeta.csv")), header.clone() + &t);
    }
    out.add(a.out.join(format!("{stem}_summary.txt")), header + &summary);
    print!("{summary}");
    report(&out.commit()?);
    Ok(())
}

fn cmd_simulate(a: &SimulateArgs, line: &str) -> Result<()> {
    let params = parse_fhp(&a.params)?;
    let law = magnitude_law(a.eta, a.xi, a.m0, a.eta_as)?;
    let stop = match (a.n_events, a.t_max) {
        (Some(n), None) => Stop::Count(n),
        (None, Some(t)) => Stop::Horizon(t),
        _ => {
            let mut probe = SimConfig::new(params, Stop::Count(1), a.seed);
            probe.magnitude = law;
            if probe.is_supercritical() {
                bail!(
                    "supercritical configuration (branching ratio {}) needs --n-events or --t-max",
                    probe.branching_ratio().map_or("infinite".into(), |r| format!("{r:.4}"))
                );
            }
            bail!("give --n-events or --t-max");
        }
    };
    let label = a.label.clone().unwrap_or_else(|| format!("sim-{}", a.seed));
    let mut cfg = SimConfig::new(params, stop, a.seed);
    cfg.magnitude = law;
    cfg.event_cap = a.event_cap;
    cfg.label = label.clone();
    if cfg.is_supercritical() && matches!(stop, Stop::Horizon(_)) {
        eprintln!("warning: supercritical configuration; growth is limited only by --event-cap");
    }

    let mut prov = Provenance::new(line, a.seed);
    prov.set("params", &a.params);
    prov.set(
        "stop",
        match stop {
            Stop::Count(n) => format!("n_events={n}"),
            Stop::Horizon(t) => format!("t_max={t}"),
        },
    );
    prov.set("magnitude", format!("eta={},xi={},m0={},eta_as={:?}", a.eta, a.xi, a.m0, a.eta_as));
    prov.set("sampler", if a.thinning { "thinning" } else { "branching" });
    prov.set("event_cap", a.event_cap);

    let cat = if a.thinning {
        simulate_fhp_thinning(&cfg, DEFAULT_EPSILON)?
    } else {
        simulate_fhp(&cfg)?
    };
    let path = a.out.join(format!("{}.catalog", file_stem(&label)));
    let mut out = Outputs::default();
    out.add(path, catalog::write_canonical(&cat, &prov.pairs()));
    println!(
        "simulated {} events on [0, {}], branching ratio {}",
        cat.len(),
        cat.t_end(),
        cfg.branching_ratio().map_or("infinite".into(), |r| format!("{r:.4}"))
    );
    report(&out.commit()?);
    Ok(())
}

fn read_record(path: &Path) -> Result<FitRecord> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    FitRecord::parse(&text).with_context(|| format!("{} is not a fit record", path.display()))
}

fn cmd_diagnose(a: &DiagnoseArgs, line: &str) -> Result<()> {
    let record = read_record(&a.fit)?;
    let kind = record.model()?;
    let params = record.params()?;
    let seed = record.get("seed").and_then(|s| s.parse().ok()).unwrap_or(0);
    let mut prov = Provenance::new(line, seed);
    let cat = load_catalog(&a.input, &mut prov)?;
    prov.set("fit", a.fit.display());
    prov.set("model", kind);
    if let Some(n) = record.get("n_events") {
        if n != cat.len().to_string() {
            bail!("fit record has {n} events but the catalog has {}", cat.len());
        }
    }
    let res = residuals(&cat, kind, &params)?;
    let ks95 = ks_uniform_test_at(&res.uniforms, 0.05)?;
    let ks99 = ks_uniform_test_at(&res.uniforms, 0.01)?;
    let offset = usize::from(kind.is_restricted());
    let tau_n = res.taus.last().copied().unwrap_or(0.0);
    let count_gap = (tau_n - (cat.len() - offset) as f64).abs() / cat.len() as f64;

    let stem = format!("{}_{}", file_stem(cat.label()), kind);
    let header = prov.header();
    let mut out = Outputs::default();
    out.add(
        a.out.join(format!("{stem}_residuals.csv")),
        header.clone() + &plotdata_table(&transformed_time_plotdata(&res)),
    );
    let mut summary = String::new();
    if res.n >= 3 {
        let sp = serial_pairs(&res)?;
        out.add(a.out.join(format!("{stem}_serial.csv")), header.clone() + &sp.table());
        let _ = writeln!(summary, "serial_correlation={}", sp.correlation);
        let _ = writeln!(summary, "serial_p_value={}", sp.p_value);
    }
    let _ = writeln!(summary, "n={}", res.n);
    let _ = writeln!(summary, "tau_n={tau_n}");
    let _ = writeln!(summary, "tau_n_relative_gap={count_gap}");
    let _ = writeln!(summary, "mean_increment={}", res.mean_increment());
    let _ = writeln!(summary, "band_half_width_95={}", res.ks_band_95);
    let _ = writeln!(summary, "max_abs_tau_minus_i={}", res.max_deviation());
    let _ = writeln!(summary, "within_band_95={}", res.within_band());
    let _ = writeln!(summary, "ks_statistic={}", ks95.statistic);
    let _ = writeln!(summary, "ks_critical_95={}", ks95.critical);
    let _ = writeln!(summary, "ks_pass_95={}", ks95.pass);
    let _ = writeln!(summary, "ks_critical_99={}", ks99.critical);
    let _ = writeln!(summary, "ks_pass_99={}", ks99.pass);
    out.add(a.out.join(format!("{stem}_ks.txt")), header + &summary);
    print!("{summary}");
    report(&out.commit()?);
    Ok(())
}

const STUDY_FILE: &str = "consistency.csv";
const STUDY_SUMMARY_FILE: &str = "consistency_summary.csv";
/// Settings that must agree for a study to be resumed.
const STUDY_KEYS: [&str; 4] = ["config.truth", "config.n_starts", "config.magnitude", "run_seed"];

fn cmd_consistency(a: &ConsistencyArgs, line: &str) -> Result<()> {
    let truth = parse_fhp(&a.params)?;
    if a.sizes.is_empty() || a.sizes.contains(&0) || a.replicates == 0 {
        bail!("--sizes must be positive and --replicates at least 1");
    }
    let mut opts = StudyOptions::new(truth, a.sizes.clone(), a.replicates, a.seed);
    opts.fit = FitOptions {
        n_starts: a.n_starts,
        ..FitOptions::default()
    };
    opts.magnitude = magnitude_law(a.eta, a.xi, a.m0, a.eta_as)?;

    let mut prov = Provenance::new(line, a.seed);
    prov.set("truth", &a.params);
    prov.set("n_starts", a.n_starts);
    prov.set("magnitude", format!("eta={},xi={},m0={},eta_as={:?}", a.eta, a.xi, a.m0, a.eta_as));
    prov.set("sizes", a.sizes.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(","));
    prov.set("replicates", a.replicates);
    let header = prov.header();

    let table_path = a.out.join(STUDY_FILE);
    let mut rows: Vec<StudyRow> = Vec::new();
    if table_path.exists() {
        let text = std::fs::read_to_string(&table_path)?;
        let old = read_header(&text);
        let now = prov.pairs();
        for key in STUDY_KEYS {
            if Provenance::get(&old, key) != Provenance::get(&now, key) {
                bail!(
                    "{} was produced with a different {key}; use another --out to start afresh",
                    table_path.display()
                );
            }
        }
        rows = parse_study_table(&text)?;
        eprintln!("resuming: {} replicates already in {}", rows.len(), table_path.display());
    }

    let todo: Vec<(usize, usize)> = opts
        .cells()
        .into_iter()
        .filter(|&(n, r)| !rows.iter().any(|d| d.size == n && d.replicate == r))
        .collect();
    let batch = rayon::current_num_threads().max(1);
    for chunk in todo.chunks(batch) {
        let fresh: Vec<StudyRow> = chunk
            .par_iter()
            .map(|&(n, r)| run_replicate(&opts, n, r))
            .collect();
        rows.extend(fresh);
        rows.sort_by_key(|r| (r.size, r.replicate));
        write_atomic(&table_path, &(header.clone() + &study_table(&rows)))?;
        eprintln!("{}/{} replicates done", rows.len(), opts.cells().len().max(rows.len()));
    }
    if todo.is_empty() {
        write_atomic(&table_path, &(header.clone() + &study_table(&rows)))?;
    }

    let summary = SizeSummary::table(&summarize_study(&rows, &truth));
    let summary_path = a.out.join(STUDY_SUMMARY_FILE);
    write_atomic(&summary_path, &(header + &summary))?;
    print!("{summary}");
    report(&[table_path, summary_path]);
    Ok(())
}

fn cmd_compare(a: &CompareArgs, line: &str) -> Result<()> {
    if a.inputs.len() < 2 {
        bail!("compare needs at least two fit records");
    }
    let records = a
        .inputs
        .iter()
        .map(|p| read_record(p))
        .collect::<Result<Vec<_>>>()?;
    let catalog_of = |r: &FitRecord| (r.get("label").map(str::to_string), r.get("n_events").map(str::to_string));
    let first = catalog_of(&records[0]);
    for (r, p) in records.iter().zip(&a.inputs).skip(1) {
        if catalog_of(r) != first {
            bail!("{} was fitted to a different catalog than {}", p.display(), a.inputs[0].display());
        }
    }
    let entries = records
        .iter()
        .map(|r| r.aic_entry())
        .collect::<fhp_core::Result<Vec<AicEntry>>>()?;
    let cmp = compare_aic(&entries);

    let mut prov = Provenance::new(line, 0);
    prov.set(
        "inputs",
        a.inputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(","),
    );
    let header = prov.header();
    let mut ranking = String::from("rank,fit,k,neg_loglik,aic\n");
    for (i, e) in cmp.ranking.iter().enumerate() {
        let _ = writeln!(ranking, "{},{},{},{},{}", i + 1, e.label, e.k, e.neg_loglik, e.aic);
    }
    let mut deltas = String::from("first,second,delta_aic,significant\n");
    for d in &cmp.deltas {
        let _ = writeln!(deltas, "{},{},{},{}", d.first, d.second, d.delta, d.significant);
    }
    let mut out = Outputs::default();
    out.add(a.out.join("aic_ranking.csv"), header.clone() + &ranking);
    out.add(a.out.join("aic_deltas.csv"), header + &deltas);
    print!("{ranking}\n{deltas}");
    report(&out.commit()?);
    Ok(())
}
