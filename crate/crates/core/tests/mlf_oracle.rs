//! Mittag-Leffler evaluator against frozen high-precision values
//! (`tests/data/ml_oracle.csv`, produced by `tests/oracle/ml_oracle.py`).

use std::collections::BTreeMap;

use fhp_core::mlf::{Method, MittagLeffler};

struct Row {
    gamma: f64,
    delta: f64,
    x: f64,
    value: f64,
}

fn rows() -> Vec<Row> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/ml_oracle.csv");
    let mut rdr = csv::Reader::from_path(path).expect("oracle table");
    rdr.records()
        .map(|r| {
            let r = r.unwrap();
            let f = |i: usize| r[i].parse::<f64>().unwrap();
            Row {
                gamma: f(0),
                delta: f(1),
                x: f(2),
                value: f(3),
            }
        })
        .collect()
}

/// Relative error, or 0 when both sides are below the normal range.
fn rel_err(got: f64, want: f64) -> f64 {
    if want.abs() < f64::MIN_POSITIVE {
        return if got.abs() < f64::MIN_POSITIVE { 0.0 } else { f64::INFINITY };
    }
    ((got - want) / want).abs()
}

#[test]
fn matches_oracle_over_full_grid() {
    let mut worst: BTreeMap<(String, String, String), (f64, f64)> = BTreeMap::new();
    let mut plans: BTreeMap<(u64, u64), MittagLeffler> = BTreeMap::new();
    let mut failures = Vec::new();
    for row in rows() {
        let plan = plans
            .entry((row.gamma.to_bits(), row.delta.to_bits()))
            .or_insert_with(|| MittagLeffler::new(row.gamma, row.delta).unwrap());
        let method = plan.method_for(row.x);
        let got = plan.eval_neg(row.x);
        let err = rel_err(got, row.value);
        let key = (format!("{}", row.gamma), format!("{}", row.delta), format!("{method:?}"));
        let e = worst.entry(key).or_insert((0.0, 0.0));
        if err > e.0 {
            *e = (err, row.x);
        }
        if err > 1e-10 {
            failures.push(format!(
                "gamma={} delta={} x={} got={got:e} want={:e} rel={err:e}",
                row.gamma, row.delta, row.x, row.value
            ));
        }
    }
    for ((g, d, m), (e, x)) in &worst {
        println!("gamma={g:5} delta={d:5} {m:11} worst rel {e:.2e} at x={x:.4e}");
    }
    assert!(failures.is_empty(), "{} failures:\n{}", failures.len(), failures.join("\n"));
}

#[test]
fn contour_alone_is_accurate_in_its_band() {
    // Every oracle point inside (R_s, R_a) is also checked with the contour
    // forced, and both neighbouring methods at their own radii.
    for row in rows() {
        if row.gamma == 1.0 && row.delta == 1.0 {
            continue;
        }
        let plan = MittagLeffler::new(row.gamma, row.delta).unwrap();
        if row.x > plan.series_radius() && row.x < 2.0 * plan.asymptotic_radius() {
            let got = plan.eval_with(Method::Contour, row.x);
            assert!(
                rel_err(got, row.value) < 1e-10,
                "contour gamma={} delta={} x={}",
                row.gamma,
                row.delta,
                row.x
            );
        }
    }
}
