use serde_json::Value;
use spectral_labels_demo::*;

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[test]
fn recovery_round_trip() {
    let v = parse(&recover_topics(30, 3, 5000, 5, 1.0, 7));
    assert!(v.get("error").is_none(), "{v}");
    assert_eq!(v["passes"], 3);
    assert_eq!(v["true_o"].as_array().unwrap().len(), 3);
    for (t, e) in v["true_o"].as_array().unwrap().iter().zip(v["est_o"].as_array().unwrap()) {
        assert_eq!(floats(t).len(), 30);
        assert!((floats(e).iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
    let r = recover(30, 10, 3, 5000, 5, 1.0, 7).unwrap();
    assert_eq!(floats(&v["mu_err"]), r.mu_err);
}

#[test]
fn recovery_errors_are_reported_as_json() {
    let v = parse(&recover_topics(3, 5, 100, 5, 1.0, 1));
    assert!(v["error"].is_string(), "{v}");
    let v = parse(&recover_topics(30, 3, 0, 5, 1.0, 1));
    assert!(v["error"].is_string());
}

#[test]
fn bound_curve_falls_as_root_n() {
    let v = parse(&bound_curve(1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 16.0, 3));
    let n = floats(&v["n"]);
    let pi = floats(&v["pi"]);
    assert!((n[1] - 4.0).abs() < 1e-9 && (n[2] - 16.0).abs() < 1e-9);
    assert!((pi[0] - (200.0 + 40.0 * 2f64.sqrt())).abs() < 1e-9);
    assert!((pi[0] / pi[1] - 2.0).abs() < 1e-9 && (pi[1] / pi[2] - 2.0).abs() < 1e-9);
    assert_eq!(v["eps1"], 1.0);
    assert!(parse(&bound_curve(1.0, 1.0, 1.0, 1.0, 1.0, 1.5, 1.0, 16.0, 3))["error"].is_string());
}

#[test]
fn power_method_recovers_clean_tensors() {
    for k in 1..=8 {
        let v = parse(&power_method(k, 0.0, k));
        for (a, b) in floats(&v["true_lambda"]).iter().zip(floats(&v["est_lambda"])) {
            assert!((a - b).abs() < 1e-8);
        }
        assert!(floats(&v["vector_err"]).iter().all(|e| *e < 1e-8));
    }
    let noisy = power(4, 0.01, 3).unwrap();
    assert!(noisy.vector_err.iter().all(|e| *e < 0.1));
    assert!(parse(&power_method(0, 0.0, 1))["error"].is_string());
}
