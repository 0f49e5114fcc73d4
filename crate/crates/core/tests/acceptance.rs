//! Acceptance criteria, evaluated through the experiment harness at its
//! default configurations. Prints one PASS/FAIL line per criterion.

use std::time::{Duration, Instant};

use gnch_core::harness::{run_experiment, Experiment, ExperimentConfig, RunReport};

struct Criterion {
    id: u32,
    title: &'static str,
    experiment: Experiment,
    budget: Duration,
    /// Extra conditions on the report beyond the threshold verdicts.
    extra: fn(&RunReport) -> Result<(), String>,
}

fn no_extra(_: &RunReport) -> Result<(), String> {
    Ok(())
}

fn dispersion_matches_hand_value(r: &RunReport) -> Result<(), String> {
    let measured = r.summary["measured_speed"].as_f64().ok_or("missing measured_speed")?;
    // mu = 0.1, nu = 1/3, k = 2 pi: 1 / sqrt(1 + 0.1 (1/3) 4 pi^2) = 0.6572 to four digits.
    if ((measured - 0.6572) / 0.6572).abs() <= 1e-3 {
        Ok(())
    } else {
        Err(format!("measured speed {measured} is not within 1e-3 of 0.6572"))
    }
}

fn criteria() -> Vec<Criterion> {
    let secs = Duration::from_secs;
    vec![
        Criterion { id: 1, title: "operator symmetry, coercivity, round trip", experiment: Experiment::OperatorProps, budget: secs(10), extra: no_extra },
        Criterion { id: 2, title: "linear dispersion", experiment: Experiment::Dispersion, budget: secs(30), extra: dispersion_matches_hand_value },
        Criterion { id: 3, title: "expansion residual slopes", experiment: Experiment::ExpansionResidual, budget: secs(30), extra: no_extra },
        Criterion { id: 4, title: "direct vs condensed formulation", experiment: Experiment::FormulationEquivalence, budget: secs(10), extra: no_extra },
        Criterion { id: 5, title: "mass and mean conservation", experiment: Experiment::Conservation, budget: secs(60), extra: no_extra },
        Criterion { id: 6, title: "energy growth scaling", experiment: Experiment::EnergyGrowth, budget: secs(300), extra: no_extra },
        Criterion { id: 7, title: "twin stability", experiment: Experiment::StabilityTwin, budget: secs(300), extra: no_extra },
        Criterion { id: 8, title: "coupled vs decoupled convergence", experiment: Experiment::GnVsCl, budget: secs(900), extra: no_extra },
        Criterion { id: 9, title: "RK4 time order", experiment: Experiment::TimeOrder, budget: secs(120), extra: no_extra },
        Criterion { id: 10, title: "constant identities", experiment: Experiment::Constants, budget: secs(10), extra: no_extra },
    ]
}

fn evaluate(c: &Criterion, root: &std::path::Path) -> (bool, String) {
    let mut cfg = ExperimentConfig::defaults(c.experiment);
    let dir = root.join(c.experiment.name());
    cfg.set("output.dir", dir.to_str().expect("utf-8 temp path")).expect("output.dir is a valid key");
    let start = Instant::now();
    let report = match run_experiment(&cfg) {
        Ok(r) => r,
        Err(e) => return (false, format!("error: {e}")),
    };
    let elapsed = start.elapsed();
    let mut notes: Vec<String> = report
        .verdicts
        .iter()
        .map(|v| format!("{} {:.3e} ({} {:e})", v.criterion, v.metric, v.bound.name(), v.threshold_value))
        .collect();
    let mut pass = report.passed();
    if let Err(msg) = (c.extra)(&report) {
        pass = false;
        notes.push(msg);
    }
    if elapsed > c.budget {
        pass = false;
    }
    notes.push(format!("{:.2} s of {} s", elapsed.as_secs_f64(), c.budget.as_secs()));
    (pass, notes.join("; "))
}

#[test]
fn acceptance_criteria() {
    let root = tempfile::tempdir().unwrap();
    let mut failed = Vec::new();
    for c in criteria() {
        let (pass, detail) = evaluate(&c, root.path());
        println!("{} [{}] {}: {detail}", if pass { "PASS" } else { "FAIL" }, c.id, c.title);
        if !pass {
            failed.push(c.id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

#[test]
fn reports_reproduce_from_their_echoed_config() {
    let root = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::defaults(Experiment::StabilityTwin);
    cfg.set("output.dir", root.path().join("a").to_str().unwrap()).unwrap();
    cfg.set("regime.eps", "0.2").unwrap();
    run_experiment(&cfg).unwrap();

    let report = std::fs::read_to_string(root.path().join("a/report.jsonl")).unwrap();
    let header: serde_json::Value = serde_json::from_str(report.lines().next().unwrap()).unwrap();
    assert_eq!(header["kind"], "config");
    assert_eq!(header["thresholds"]["growth_max"], 10.0);
    let echoed: String = header["config"]
        .as_object()
        .unwrap()
        .iter()
        .map(|(k, v)| {
            let text = match v {
                serde_json::Value::String(_) if k == "output.dir" => root.path().join("b").to_str().unwrap().to_owned(),
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Array(xs) => xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","),
                other => other.to_string(),
            };
            format!("{k} = {text}\n")
        })
        .collect();
    let again = ExperimentConfig::parse_str(&echoed).unwrap();
    run_experiment(&again).unwrap();
    for name in ["stability_twin.csv", "stability_twin_0.csv", "stability_twin_1.csv", "stability_twin_2.csv"] {
        let a = std::fs::read(root.path().join("a").join(name)).unwrap();
        let b = std::fs::read(root.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between the original and the re-run");
    }
}
