use std::fs;

use sirsd_koopman::dictionary::dictionary_d2;
use sirsd_koopman::export::{
    export_pipeline, model_json, parse_model_json, read_trajectory_csv, report_json,
};
use sirsd_koopman::scenarios::{run_long_measles, run_pipeline, DictChoice, Overrides, Preset};

#[test]
fn model_json_round_trips_exactly() {
    let out = run_pipeline(&Preset::Influenza.scenario(), DictChoice::D2).unwrap();
    let run = &out.runs[0];
    let text = model_json(&run.model, &run.dictionary).unwrap();
    let (model, labels) = parse_model_json(&text).unwrap();
    assert_eq!(labels, dictionary_d2().labels());
    assert_eq!(model.k, run.model.k);
    assert_eq!(model.dt, 0.1);
    assert_eq!(model.residual, run.model.residual);
    assert_eq!(model.eigenvalues, run.model.eigenvalues);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["K"].as_array().unwrap().len(), 12);
    assert_eq!(v["eigenvalues"].as_array().unwrap().len(), 12);
    assert!(v["eigenvalues"][0]["re"].is_number());
}

#[test]
fn model_json_rejects_garbage() {
    assert!(parse_model_json("{}").is_err());
    assert!(parse_model_json(r#"{"dictionary":{"name":"d1","labels":["s"]},"K":[[1,2]],"dt":0.1,"svd_tol":0,"residual":0}"#).is_err());
}

#[test]
fn exported_files_agree_with_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_pipeline(&Preset::Covid.scenario(), DictChoice::Both).unwrap();
    let written = export_pipeline(dir.path(), &out).unwrap();
    let names: Vec<String> = written
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(
        names,
        [
            "covid_nsfd.csv",
            "covid_koopman_d1.csv",
            "covid_d1_model.json",
            "covid_d1_report.json",
            "covid_koopman_d2.csv",
            "covid_d2_model.json",
            "covid_d2_report.json",
        ]
    );
    let truth = read_trajectory_csv(&dir.path().join("covid_nsfd.csv")).unwrap();
    assert_eq!(truth, out.truth);
    for run in &out.runs {
        let d = run.dictionary.name();
        let pred = read_trajectory_csv(&dir.path().join(format!("covid_koopman_{d}.csv"))).unwrap();
        assert_eq!(pred, run.prediction);
        let flags = run.report.negativity.to_array();
        for (c, flag) in flags.iter().enumerate() {
            let has_negative = pred.states.iter().any(|x| x.to_array()[c] < 0.0);
            assert_eq!(*flag, has_negative, "{d} compartment {c}");
        }
        let report: serde_json::Value = serde_json::from_str(
            &fs::read_to_string(dir.path().join(format!("covid_{d}_report.json"))).unwrap(),
        )
        .unwrap();
        assert_eq!(report["dictionary"], d);
        assert_eq!(report["negativity"]["s"], flags[0]);
        assert!(report["rmse"]["s"].as_f64().unwrap() >= 0.0);
    }
    assert!(out.run("d1").unwrap().report.negativity.s);
    assert!(out.run("d2").unwrap().report.total_rmse < out.run("d1").unwrap().report.total_rmse);
}

#[test]
fn long_measles_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let (out, warnings) = run_long_measles(&Overrides::default()).unwrap();
    assert!(warnings.is_empty());
    export_pipeline(dir.path(), &out).unwrap();
    for name in ["measles_long_nsfd.csv", "measles_long_koopman_d2.csv"] {
        let text = fs::read_to_string(dir.path().join(name)).unwrap();
        assert_eq!(text.lines().count(), 5001 + 1, "{name}");
    }
    let (model, _) = parse_model_json(
        &fs::read_to_string(dir.path().join("measles_long_d2_model.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(model.k.shape(), (12, 12));
    let report = &out.runs[0].report;
    assert_eq!(report.windows.len(), 2);
    assert!(report.windows.iter().all(|w| w.max_error.is_some()));
    let json = report_json(report).unwrap();
    assert!(json.contains("\"windows\""));
}
