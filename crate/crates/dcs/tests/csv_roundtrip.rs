use dcs::table::ResultTable;

#[test]
fn emitted_tables_parse_back_within_1e_12() {
    let mut t = ResultTable::new(["sigma2", "dcs", "odd, \"quoted\" name"])
        .with_meta("config_hash", "abc123")
        .with_meta("seed", 7);
    let vals = [
        0.1,
        0.027812345678901,
        -1.0 / 7.0,
        6.02e23,
        -3.3e-17,
        1024.0,
        std::f64::consts::PI,
        1e-5,
        123456.789012345,
    ];
    for chunk in vals.chunks(3) {
        t.push(chunk.to_vec()).unwrap();
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    t.write(&path).unwrap();
    let back = ResultTable::read(&path).unwrap();
    assert_eq!(back.columns, t.columns);
    assert_eq!(back.metadata, t.metadata);
    for (r, s) in t.rows.iter().zip(&back.rows) {
        for (a, b) in r.iter().zip(s) {
            // 12 significant digits: absolute 1e-12 up to unit magnitude, half an
            // ulp of the 12th digit beyond it.
            let tol = if a.abs() <= 1.0 { 1e-12 } else { 5e-12 * a.abs() };
            assert!((a - b).abs() <= tol, "{a} vs {b}");
        }
    }
    assert_eq!(std::fs::read_to_string(&path).unwrap(), back.to_csv_string().unwrap());
}

#[test]
fn header_only_for_zero_rows() {
    let t = ResultTable::new(["a"]).with_meta("seed", 1);
    let s = t.to_csv_string().unwrap();
    assert_eq!(s, "# seed: 1\na\n");
    let back = ResultTable::parse(&s, std::path::Path::new("mem")).unwrap();
    assert!(back.rows.is_empty());
}

#[test]
fn unwritable_path_reports_it() {
    let t = ResultTable::new(["a"]);
    let err = t.write(std::path::Path::new("/nonexistent-dir/x.csv")).unwrap_err();
    assert!(err.to_string().contains("/nonexistent-dir/x.csv"));
}
