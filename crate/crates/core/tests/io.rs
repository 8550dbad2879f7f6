use chrono::{Duration, NaiveDate};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use std::fmt::Write as _;
use wavefrac::io::*;
use wavefrac::rng::rng_from_seed;

#[test]
fn shuffled_daily_file_is_sorted_on_ingest() {
    let start = NaiveDate::from_ymd_opt(2009, 9, 30).unwrap();
    let mut rows: Vec<(NaiveDate, f64)> = (0..100)
        .map(|i| (start + Duration::days(i), 20.0 + (i as f64 * 0.37).sin()))
        .collect();
    let oracle = {
        let mut r = rows.clone();
        r.sort_by_key(|x| x.0);
        r
    };
    rows.shuffle(&mut rng_from_seed(3));
    let mut body = String::from("Date,Open,High,Low,Close,Adj Close,Volume\n");
    for (d, c) in &rows {
        writeln!(body, "{},1,1,1,{c:?},1,1000", d.format("%Y-%m-%d")).unwrap();
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("IBM.csv");
    std::fs::write(&path, body).unwrap();

    let got = ingest_csv(&path, &IngestConfig::default()).unwrap();
    assert_eq!(got.series.ticker(), "IBM");
    assert_eq!(got.source_rows, 100);
    let want_values: Vec<f64> = oracle.iter().map(|r| r.1).collect();
    assert_eq!(got.series.values(), want_values.as_slice());
    let want_dates: Vec<Timestamp> = oracle.iter().map(|r| Timestamp::Date(r.0)).collect();
    assert_eq!(got.series.timestamps(), want_dates.as_slice());
}

#[test]
fn duplicate_dates_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dup.csv");
    std::fs::write(
        &path,
        "Date,Close\n2020-01-01,1.0\n2020-01-02,2.0\n2020-01-01,3.0\n",
    )
    .unwrap();
    let err = ingest_csv(&path, &IngestConfig::default()).unwrap_err();
    assert_eq!(err.kind(), "duplicate_timestamp");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn emitted_series_reads_back_bit_identical(values in prop::collection::vec(1e-300f64..1e300, 1000)) {
        let ts = TimeSeries::from_values("rt", values).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rt.csv");
        emit_table(&ts.to_table("Close"), &path, TableFormat::Csv).unwrap();
        let cfg = IngestConfig { ticker: Some("rt".into()), ..IngestConfig::default() };
        let back = ingest_csv(&path, &cfg).unwrap().series;
        let bits = |t: &TimeSeries| t.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&back), bits(&ts));
        prop_assert_eq!(back.timestamps(), ts.timestamps());
    }

    #[test]
    fn float_tables_round_trip(values in prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 1..200)) {
        let mut t = Table::new();
        t.push("x", Column::Float(values.clone()));
        let t = t.with_meta("note", "round trip");
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        emit_table(&t, &path, TableFormat::Csv).unwrap();
        let back = read_table_csv(&path).unwrap();
        let col = match back.column("x").unwrap() {
            Column::Float(v) => v.clone(),
            Column::Int(v) => v.iter().map(|&i| i as f64).collect(),
            Column::Text(_) => panic!("text column"),
        };
        prop_assert_eq!(col.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), values.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        prop_assert_eq!(back.meta, t.meta);
    }
}
