use hyperasym::cli::run;
use serde_json::Value;

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["hyperasym"];
    full.extend_from_slice(args);
    let code = run(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn level_out_of_range_is_a_usage_error() {
    let (code, _, err) = call(&["expand", "--level", "4"]);
    assert_eq!(code, 2);
    assert!(err.contains("--level"));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(call(&["integrate"]).0, 2);
}

#[test]
fn stokes_line_is_a_domain_error_with_json_on_stderr() {
    let (code, out, err) = call(&["--digits", "20", "expand", "--theta-over-pi", "1/2"]);
    assert_eq!(code, 3);
    assert!(out.is_empty());
    let v: Value = serde_json::from_str(err.trim()).unwrap();
    assert_eq!(v["error"], "on_stokes_line");
}

#[test]
fn unknown_builtin_is_a_validation_error() {
    let (code, _, err) = call(&["--builtin", "airy", "reference"]);
    assert_eq!(code, 3);
    assert!(err.contains("validation"));
}

#[test]
fn degenerate_level_one_report() {
    let (code, out, _) = call(&["--builtin", "degenerate_3_5", "--digits", "30", "--level", "1", "expand"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["schedule"], serde_json::json!([27, 22]));
    let e = v["abs_error"].as_f64().unwrap();
    assert!(e > 1.85e-7 && e < 7.4e-7, "{e}");
    assert_eq!(v["terms"].as_array().unwrap().len(), 27 + 22);
}

#[test]
fn json_output_is_byte_identical_across_runs() {
    let args = ["--digits", "25", "--level", "1", "expand"];
    let (_, a, _) = call(&args);
    let (_, b, _) = call(&args);
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn expand_csv_columns() {
    let (code, out, _) = call(&["--digits", "20", "--output", "csv", "expand"]);
    assert_eq!(code, 0);
    let mut lines = out.lines();
    assert_eq!(
        lines.next().unwrap(),
        "level_index,chain,r,term_re,term_im,abs_term,abs_running_remainder"
    );
    assert_eq!(lines.count(), 13);
}

#[test]
fn swallowtail_adjacency_rounds_to_zero_and_one() {
    let (code, out, _) = call(&[
        "--builtin", "swallowtail", "adjacency", "--candidate", "2:7", "--candidate", "3:11", "--orders", "50,51",
    ]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    let rounded: Vec<i64> = v["constants"].as_array().unwrap().iter().map(|k| k["rounded"].as_i64().unwrap()).collect();
    assert_eq!(rounded, vec![0, 1]);
}

#[test]
fn hyperterm_with_oracle() {
    let (code, out, _) = call(&[
        "--digits", "20", "--theta-over-pi", "0.1", "--modulus", "2", "--oracle", "hyperterm", "--column", "2.5,1,1,-0.1",
        "--column", "2.2,1,1.5,0.6",
    ]);
    assert_eq!(code, 0, "{out}");
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!(v["relative_discrepancy"].as_f64().unwrap() < 1e-8);
}

#[test]
fn bounds_with_oracle_hold() {
    let (code, out, _) = call(&["--digits", "25", "--oracle", "--output", "csv", "bounds", "--counts", "1,5,13"]);
    assert_eq!(code, 0, "{out}");
    for line in out.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(f[1] >= f[2]);
    }
}

#[test]
fn coefficients_both_routes() {
    let (_, perron, _) = call(&["--digits", "20", "--output", "csv", "coeffs", "--count", "5"]);
    let (_, trap, _) = call(&["--digits", "20", "--output", "csv", "coeffs", "--count", "5", "--route", "trapezoidal"]);
    let parse = |s: &str| -> Vec<f64> {
        s.lines().skip(1).flat_map(|l| l.split(',').skip(1).map(|x| x.parse::<f64>().unwrap()).collect::<Vec<_>>()).collect()
    };
    for (a, b) in parse(&perron).iter().zip(parse(&trap)) {
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }
}

#[test]
fn trace_csv_starts_at_the_saddle() {
    let (code, out, _) = call(&["--digits", "20", "--output", "csv", "trace", "--v-max", "2"]);
    assert_eq!(code, 0);
    let mut lines = out.lines();
    assert_eq!(lines.next().unwrap(), "v,re_t,im_t");
    let first: Vec<f64> = lines.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(first[0], 0.0);
    assert!((first[1] + 2f64.sqrt()).abs() < 1e-15);
}
