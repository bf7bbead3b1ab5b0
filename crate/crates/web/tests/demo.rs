use serde_json::Value;

fn parse(s: Result<String, String>) -> Value {
    serde_json::from_str(&s.unwrap()).unwrap()
}

#[test]
fn recovery_improves_with_rank_up_to_the_truth() {
    let low = parse(tensorreg_web::recovery(1, 120, 0.5, 0));
    let mid = parse(tensorreg_web::recovery(4, 120, 0.5, 0));
    assert_eq!(low["truth"].as_array().unwrap().len(), 20);
    assert_eq!(mid["estimate"][0].as_array().unwrap().len(), 16);
    assert!(mid["relative_error"].as_f64().unwrap() < low["relative_error"].as_f64().unwrap());
    assert!(mid["compression"].as_f64().unwrap() > 0.5);
}

#[test]
fn separable_estimate_tracks_truth() {
    let v = parse(tensorreg_web::separable(0.9, 0.5, 2000, 3));
    assert!(v["rows"]["max_error"].as_f64().unwrap() < 0.1);
    assert!(v["cols"]["max_error"].as_f64().unwrap() < 0.1);
    assert_eq!(v["rows"]["truth"][0][1].as_f64().unwrap(), 0.9);
}

#[test]
fn forecast_summary_has_every_horizon() {
    let v = parse(tensorreg_web::forecast(0.5, 120, 1));
    assert_eq!(v["tar_rmsfe"].as_array().unwrap().len(), 4);
    assert_eq!(v["series"].as_array().unwrap().len(), 120);
    assert!(tensorreg_web::separable(1.2, 0.5, 100, 0).is_err());
}
