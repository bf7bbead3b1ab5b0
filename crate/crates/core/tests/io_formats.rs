use proptest::prelude::*;
use tensorreg::dtf;
use tensorreg::ingest::{export_csv, ingest_csv, FillPolicy, IngestOptions, LabelOrder};
use tensorreg::report::{fit_from_json, fit_to_json};
use tensorreg::simulation::{rng_for, standard_normal_tensor};
use tensorreg::{fit, DenseTensor, RegressionSpec, TuckerRank};

fn panel_options() -> IngestOptions {
    IngestOptions {
        mode_columns: vec!["date".into(), "country".into(), "series".into()],
        value_column: "value".into(),
        fill: FillPolicy::Error,
        order: LabelOrder::FirstSeen,
    }
}

#[test]
fn macro_sized_panel_round_trips() {
    let mut rng = rng_for(1, 0);
    let values = standard_normal_tensor(vec![150 * 6 * 19], &mut rng).unwrap();
    let mut csv = String::from("date,country,series,value\n");
    let mut k = 0;
    for t in 0..150 {
        for c in 0..6 {
            for s in 0..19 {
                // values spanning many magnitudes exercise the 17-digit format
                let v = values.data()[k] * 10f64.powi((k % 9) as i32 - 4);
                csv.push_str(&format!("{}-{:02},C{},S{:02},{:e}\n", 1990 + t / 4, t % 4, c, s, v));
                k += 1;
            }
        }
    }
    let panel = ingest_csv(csv.as_bytes(), &panel_options()).unwrap();
    assert_eq!(panel.tensor.shape(), &[150, 6, 19]);
    assert_eq!(panel.labels[1][..2], ["C0".to_string(), "C1".to_string()]);
    let mut out = Vec::new();
    export_csv(&panel, &mut out).unwrap();
    assert_eq!(String::from_utf8(out.clone()).unwrap().lines().count(), 17101);
    let again = ingest_csv(out.as_slice(), &panel_options()).unwrap();
    assert_eq!(again, panel);
}

#[test]
fn long_rows_map_onto_a_hand_built_table() {
    let csv = "t,k,v\nb,y,4\na,x,1\nb,x,3\na,y,2\n";
    let opts = |order| IngestOptions {
        mode_columns: vec!["t".into(), "k".into()],
        value_column: "v".into(),
        fill: FillPolicy::Error,
        order,
    };
    let first_seen = ingest_csv(csv.as_bytes(), &opts(LabelOrder::FirstSeen)).unwrap();
    assert_eq!(first_seen.tensor, DenseTensor::from_matrix(&tensorreg::Matrix::from_row_slice(2, 2, &[4.0, 3.0, 2.0, 1.0])));
    let sorted = ingest_csv(csv.as_bytes(), &opts(LabelOrder::Lexicographic)).unwrap();
    assert_eq!(sorted.tensor, DenseTensor::from_matrix(&tensorreg::Matrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0])));
    assert_eq!(sorted.labels, vec![vec!["a", "b"], vec!["x", "y"]]);
}

#[test]
fn fit_report_round_trips() {
    let mut rng = rng_for(2, 0);
    let x = standard_normal_tensor(vec![30, 3, 4], &mut rng).unwrap();
    let y = standard_normal_tensor(vec![30, 2], &mut rng).unwrap();
    let f = fit(&x, &y, &RegressionSpec::new(TuckerRank::new(vec![2, 2], vec![1])).with_lambda(0.5)).unwrap();
    let v = fit_to_json(&f, Some(serde_json::json!({"note": "kept"})));
    assert_eq!(v["note"], "kept");
    let text = serde_json::to_string(&v).unwrap();
    let back = fit_from_json(&serde_json::from_str(&text).unwrap()).unwrap();
    assert_eq!(back.coefficient.core, f.coefficient.core);
    assert_eq!(back.intercept, f.intercept);
    assert_eq!(back.objective_trace, f.objective_trace);
    assert_eq!(back.spec.lambda, 0.5);
    assert_eq!(back.predict(&x).unwrap(), f.predict(&x).unwrap());
    let mut broken = v.clone();
    broken["format"] = "other".into();
    assert!(fit_from_json(&broken).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dtf_round_trips_bit_exactly(shape in prop::collection::vec(1usize..5, 1..5), seed in any::<u64>()) {
        let t = standard_normal_tensor(shape, &mut rng_for(seed, 0)).unwrap().map(|v| v * 1e7);
        let back = dtf::from_bytes(&dtf::to_bytes(&t)).unwrap();
        prop_assert_eq!(&back, &t);
        prop_assert_eq!(dtf::from_base64(&dtf::to_base64(&t)).unwrap(), t);
    }

    #[test]
    fn csv_values_are_lossless(bits in prop::collection::vec(any::<u64>(), 1..20)) {
        let vals: Vec<f64> = bits.into_iter().map(f64::from_bits).filter(|v| v.is_finite()).collect();
        prop_assume!(!vals.is_empty());
        let mut csv = String::from("t,v\n");
        for (i, v) in vals.iter().enumerate() {
            csv.push_str(&format!("{},{}\n", i, tensorreg::format::fmt_f64(*v)));
        }
        let opts = IngestOptions { mode_columns: vec!["t".into()], value_column: "v".into(), fill: FillPolicy::Error, order: LabelOrder::FirstSeen };
        let p = ingest_csv(csv.as_bytes(), &opts).unwrap();
        for (a, b) in p.tensor.data().iter().zip(&vals) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
