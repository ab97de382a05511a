mod common;

use approx::assert_relative_eq;
use clockwork_core::sweep::{
    default_oracle_grid, exclude_suboptimal, parse_values, Axis, CheckStatus, Metric, OutputFormat, RawConfig,
    RowStatus, ORACLE_TOLERANCE,
};
use clockwork_core::{
    clock_metrics, run_figure, run_oracle_check, run_sweep, ClockError, ClockParams, FigurePreset, Machines,
    SweepConfig,
};
use common::ideal;

fn sweep(base: ClockParams, axis: Axis, values: Vec<f64>) -> SweepConfig {
    SweepConfig {
        base,
        axis,
        values,
        outputs: Metric::ALL.to_vec(),
        format: OutputFormat::Csv,
        out_path: None,
        seed: 0,
    }
}

fn csv_text(cfg: &SweepConfig) -> String {
    let mut buf = Vec::new();
    run_sweep(cfg).unwrap().write_csv(&mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

/// Data rows of a CSV as header-keyed maps.
fn csv_rows(text: &str) -> Vec<std::collections::HashMap<String, String>> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    lines
        .map(|l| header.iter().cloned().zip(l.split(',').map(String::from)).collect())
        .collect()
}

#[test]
fn accuracy_increases_over_small_d() {
    let cfg = sweep(ideal(2, Machines::Infinite, 1.0, 1e3), Axis::D, vec![2.0, 3.0, 4.0, 5.0, 6.0]);
    let table = run_sweep(&cfg).unwrap();
    let ns: Vec<f64> = table.rows.iter().map(|r| r.get(Metric::N).unwrap()).collect();
    assert!(ns.windows(2).all(|w| w[1] > w[0]), "{ns:?}");
}

#[test]
fn effective_coupling_column() {
    // 10 (1 - 2^{-M}).
    let cfg = sweep(ideal(2, Machines::Finite(1), 1.0, 10.0), Axis::M, vec![1.0, 2.0, 3.0, 4.0]);
    let table = run_sweep(&cfg).unwrap();
    let cm: Vec<f64> = table.rows.iter().map(|r| r.get(Metric::CM).unwrap()).collect();
    for (a, b) in cm.iter().zip([5.0, 7.5, 8.75, 9.375]) {
        assert_relative_eq!(*a, b, max_relative = 1e-15);
    }
}

#[test]
fn empty_or_invalid_values_are_rejected() {
    let cfg = sweep(ideal(2, Machines::Infinite, 1.0, 1.0), Axis::D, vec![]);
    assert!(matches!(run_sweep(&cfg), Err(ClockError::Config(_))));
    assert!(matches!(parse_values(""), Err(ClockError::Config(_))));
    let cfg = sweep(ideal(2, Machines::Infinite, 1.0, 1.0), Axis::D, vec![2.0, 1.0]);
    assert!(run_sweep(&cfg).unwrap_err().is_validation());
    let cfg = sweep(ideal(2, Machines::Infinite, 1.0, 1.0), Axis::D, vec![2.5]);
    assert!(run_sweep(&cfg).unwrap_err().is_validation());
}

#[test]
fn value_lists_and_ranges() {
    assert_eq!(parse_values("2,3, 5").unwrap(), vec![2.0, 3.0, 5.0]);
    assert_eq!(parse_values("2:6:2").unwrap(), vec![2.0, 4.0, 6.0]);
    assert_eq!(parse_values("1,inf").unwrap(), vec![1.0, f64::INFINITY]);
    assert!(parse_values("5:1:1").is_err());
    assert!(parse_values("1:2").is_err());
}

#[test]
fn config_file_and_overrides() {
    let raw = RawConfig::from_json(
        r#"{"d": 4, "M": "inf", "c": 25, "beta_c": "inf", "axis": "d", "values": "2:5:1", "format": "json"}"#,
    )
    .unwrap();
    let flags = RawConfig { m: Some(serde_json::json!(3)), c: Some(10.0), ..Default::default() };
    let cfg = raw.overridden_by(flags).into_sweep().unwrap();
    assert_eq!(cfg.base.machines, Machines::Finite(3));
    assert_eq!(cfg.base.c, 10.0);
    assert_eq!(cfg.base.d, 4);
    assert_eq!(cfg.base.beta_c, f64::INFINITY);
    assert_eq!(cfg.values, vec![2.0, 3.0, 4.0, 5.0]);
    assert_eq!(cfg.format, OutputFormat::Json);
    assert_eq!(cfg.outputs, Metric::ALL.to_vec());

    assert!(matches!(RawConfig::from_json(r#"{"dd": 3}"#), Err(ClockError::Config(_))));
    let missing_axis = RawConfig::from_json(r#"{"values": [2, 3]}"#).unwrap();
    assert!(matches!(missing_axis.into_sweep(), Err(ClockError::Config(_))));
    let bad_axis = RawConfig::from_json(r#"{"axis": "x", "values": [2]}"#).unwrap();
    assert!(matches!(bad_axis.into_sweep(), Err(ClockError::Config(_))));
}

#[test]
fn csv_is_deterministic() {
    let cfg = sweep(ideal(3, Machines::Finite(4), 1.0, 25.0), Axis::C, vec![1.0, 10.0, 100.0, 1e3]);
    let a = csv_text(&cfg);
    let b = csv_text(&cfg);
    assert_eq!(a, b);
    assert!(a.contains("# seed=0"));
    assert!(a.contains("# tool_version="));
}

#[test]
fn emitted_rows_satisfy_metric_identities() {
    let cfg = sweep(
        ClockParams::new(2, Machines::Finite(3), 1.0, 50.0, 2.0, 0.1, 1.5, 3.0).unwrap(),
        Axis::D,
        (2..=12).map(f64::from).collect(),
    );
    let text = csv_text(&cfg);
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 11);
    for row in rows {
        assert_eq!(row["status"], "ok");
        let get = |k: &str| row[k].parse::<f64>().unwrap();
        let d = get("d");
        let (t_bar, delta_t) = (get("t_bar"), get("delta_t"));
        assert!(((t_bar / delta_t).powi(2) - get("N")).abs() <= 1e-9 * get("N"));
        assert!((1.0 / t_bar - get("R")).abs() <= 1e-9 * get("R"));
        assert!(((d - 1.0) * 1.5 * get("R") - get("epsilon")).abs() <= 1e-9 * get("epsilon"));
    }
}

#[test]
fn degenerate_points_become_rows() {
    let cfg = sweep(ideal(2, Machines::Finite(1), 1.0, 1.0), Axis::D, vec![2.0, 90.0]);
    let table = run_sweep(&cfg).unwrap();
    assert_eq!(table.rows[0].status, RowStatus::Ok);
    assert_eq!(table.rows[1].status, RowStatus::Degenerate);
    assert_eq!(table.rows[1].get(Metric::R), Some(0.0));
    assert_eq!(table.rows[1].get(Metric::N), None);
}

#[test]
fn json_output_round_trips() {
    let mut cfg = sweep(ideal(2, Machines::Infinite, 1.0, 5.0), Axis::G, vec![0.5, 2.0]);
    cfg.format = OutputFormat::Json;
    cfg.outputs = vec![Metric::N, Metric::R];
    let mut buf = Vec::new();
    run_sweep(&cfg).unwrap().write(&mut buf).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    let expect = clock_metrics(&ideal(2, Machines::Infinite, 2.0, 5.0)).unwrap();
    assert_relative_eq!(rows[1]["R"].as_f64().unwrap(), expect.r, max_relative = 1e-15);
    assert!(rows[0].get("t_bar").is_none());
}

#[test]
fn finite_machines_never_beat_infinite() {
    for d in 2..=60u64 {
        let inf = clock_metrics(&ideal(d, Machines::Infinite, 1.0, 25.0)).unwrap().n;
        for m in [1, 2, 5, 10] {
            if let Ok(fin) = clock_metrics(&ideal(d, Machines::Finite(m), 1.0, 25.0)) {
                assert!(fin.n <= inf * (1.0 + 1e-9), "d={d} M={m}: {} > {inf}", fin.n);
            }
        }
    }
}

fn is_unimodal(ys: &[f64]) -> bool {
    let peak = ys.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|p| p.0).unwrap();
    ys[..=peak].windows(2).all(|w| w[1] > w[0]) && ys[peak..].windows(2).all(|w| w[1] < w[0])
}

#[test]
fn fig5_upper_curve_has_single_maximum() {
    let fig = run_figure(FigurePreset::Fig5);
    let mut pts = fig.curve("M=inf,c=25");
    assert_eq!(pts.len(), 59);
    pts.sort_by_key(|p| p.d);
    let ns: Vec<f64> = pts.iter().map(|p| p.y).collect();
    assert!(is_unimodal(&ns));
    let peak = ns.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
    assert!(peak > 0 && peak < ns.len() - 1, "peak at the edge of the d range");
}

#[test]
fn fig8b_resolution_decreases() {
    let fig = run_figure(FigurePreset::Fig8b);
    let mut pts = fig.curve("M=inf");
    pts.sort_by_key(|p| p.d);
    assert!(pts.windows(2).all(|w| w[1].y < w[0].y));
    assert!(pts.iter().all(|p| p.x == p.d as f64));
}

#[test]
fn fig6_curves_rise_to_a_single_peak() {
    let fig = run_figure(FigurePreset::Fig6);
    assert!(fig.spec.exclude_suboptimal);
    for curve in &fig.spec.curves {
        let mut pts = fig.curve(&curve.id);
        pts.sort_by_key(|p| p.d);
        assert!(pts.len() >= 3, "{}", curve.id);
        let ns: Vec<f64> = pts.iter().map(|p| p.y).collect();
        assert!(is_unimodal(&ns), "{}: {ns:?}", curve.id);
        assert!(ns[1] > ns[0]);
    }
}

#[test]
fn suboptimal_exclusion_rule() {
    let rows = [(2, 1.0, 9.0), (3, 2.0, 8.0), (4, 3.0, 7.0), (5, 2.5, 6.0), (6, 4.0, 5.0)];
    assert_eq!(exclude_suboptimal(&rows), 3);
    let rising = [(2, 1.0, 9.0), (3, 2.0, 8.0)];
    assert_eq!(exclude_suboptimal(&rising), 2);
}

#[test]
fn figure_csv_declares_reconstruction() {
    let fig = run_figure(FigurePreset::Fig4);
    let mut buf = Vec::new();
    fig.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.contains("# figure=fig4"));
    assert!(text.contains("# reconstructed="));
    assert!(text.lines().any(|l| l == "curve_id,x,y"));
    let data = text.lines().filter(|l| !l.starts_with('#')).count() - 1;
    assert_eq!(data, fig.points.len());
    for id in ["M=inf,c=100", "M=inf,c=1000", "M=inf,c=10000", "M=1,c=1000", "M=5,c=1000"] {
        assert!(!fig.curve(id).is_empty(), "{id}");
    }
}

#[test]
fn figure_presets_parse() {
    for name in ["fig4", "fig5", "fig6", "fig8a", "fig8b", "fig9"] {
        let p: FigurePreset = name.parse().unwrap();
        assert_eq!(p.to_string(), name);
    }
    assert!("fig7".parse::<FigurePreset>().is_err());
}

#[test]
fn default_oracle_grid_passes() {
    let report = run_oracle_check(&default_oracle_grid(), 100);
    assert_eq!(report.rows.len(), 10);
    assert!(report.all_passed());
    for r in &report.rows {
        assert_eq!(r.status, CheckStatus::Pass);
        assert!(r.max_error.unwrap() <= ORACLE_TOLERANCE);
    }
    let simplest = &report.rows[0];
    assert_eq!((simplest.d, simplest.machines.as_str()), (2, "1"));
    assert!(simplest.max_error.unwrap() <= 1e-10);
}

#[test]
fn oversized_instance_is_skipped() {
    let big = ClockParams::zero_temperature(4, Machines::Finite(3), 1.0, 1.0).unwrap();
    let small = ClockParams::zero_temperature(2, Machines::Finite(1), 1.0, 1.0).unwrap();
    let report = run_oracle_check(&[big, small], 20);
    assert_eq!(report.rows[0].status, CheckStatus::Skipped);
    assert_eq!(report.rows[1].status, CheckStatus::Pass);
    assert!(report.all_passed());
    let mut buf = Vec::new();
    report.write_csv(&mut buf).unwrap();
    assert!(String::from_utf8(buf).unwrap().contains(",skipped,"));
}
