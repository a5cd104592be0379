//! External-interface checks: CLI subcommands and exit codes, CSV schema and
//! byte determinism, the JSON fixture format, and config-file loading with
//! flag overrides.

use std::process::Command;

use bernwidths::harness::{run_rates, ExperimentConfig};
use bernwidths::indexgrid::MultiIndex;
use bernwidths::polyspace::{PiecewisePoly, PiecewisePolyRecord};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bernwidths"))
}

#[test]
fn csv_schema_and_determinism() {
    let cfg = ExperimentConfig {
        alpha: vec![2.0, 2.0],
        p: 4.0,
        q: 1.0,
        n_min: 64,
        n_max: 4096,
        seed: 3,
        ..Default::default()
    };
    let a = run_rates(&cfg).unwrap();
    let b = run_rates(&cfg).unwrap();
    assert_eq!(
        a.csv, b.csv,
        "identical config and seed must emit identical bytes"
    );
    assert_eq!(a.plot, b.plot);

    let mut lines = a.csv.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("# bernwidths-"), "{header}");
    assert!(header.contains("config={"), "{header}");
    assert_eq!(
        lines.next().unwrap(),
        "n,k,regime,upper,lower,certificate,theory_exponent"
    );
    let first = lines.next().unwrap();
    let fields: Vec<&str> = first.split(',').collect();
    assert_eq!(fields.len(), 7);
    assert_eq!(fields[0], "64");
    assert_eq!(fields[2], "R2");
    assert_eq!(
        fields[5], "",
        "missing certificate must serialize as empty field"
    );
}

#[test]
fn piecewise_fixture_round_trip_through_catalog() {
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(31);
    let f = PiecewisePoly::random(
        MultiIndex::new(vec![1, 1]),
        MultiIndex::new(vec![1, 0]),
        &mut rng,
    );
    let dir = std::env::temp_dir().join("bernwidths-fixture-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("poly.json");
    std::fs::write(&path, serde_json::to_string(&f.to_record()).unwrap()).unwrap();

    // flat record fields
    let text = std::fs::read_to_string(&path).unwrap();
    let rec: PiecewisePolyRecord = serde_json::from_str(&text).unwrap();
    assert_eq!(rec.d, 2);
    assert_eq!(rec.kappa, vec![1, 1]);
    assert_eq!(rec.coefficients.len(), 4 * 2);

    // addressable from the catalog
    let g = bernwidths::moduli::catalog(&format!("piecewise-poly:{}", path.display()), 2).unwrap();
    for probe in [[0.2, 0.7], [0.9, 0.1]] {
        let want = f.eval(&probe).unwrap();
        assert!((g.eval(&probe) - want).abs() < 1e-12);
    }
}

#[test]
fn cli_exit_codes() {
    // inapplicable parameters: exit 2
    let out = bin()
        .args([
            "rates", "--alpha", "0.2,0.2", "--p", "4", "--q", "1", "--nmin", "64", "--nmax", "1024",
        ])
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("inapplicable"));

    // unknown suite: exit 2
    let out = bin()
        .args(["verify", "--suite", "nonsense"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // unknown catalog function: exit 2
    let out = bin()
        .args(["norm", "--func", "nope", "--alpha", "1", "--p", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // fault injection must break the projector identities: exit 1
    let out = bin()
        .args(["verify", "--suite", "projectors", "--inject-fault"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(
        text.contains("check=projectors.semigroup status=fail"),
        "{text}"
    );

    // healthy suite: exit 0
    let out = bin()
        .args(["verify", "--suite", "indexgrid"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn cli_rates_writes_files_and_config_overrides() {
    let dir = std::env::temp_dir().join("bernwidths-rates-test");
    std::fs::create_dir_all(&dir).unwrap();
    let config_path = dir.join("cfg.json");
    // config declares an inapplicable q; the flag override below repairs it
    std::fs::write(
        &config_path,
        r#"{"alpha":[1.0],"p":2.0,"q":8.0,"n_min":8,"n_max":512,"seed":5}"#,
    )
    .unwrap();
    let csv_path = dir.join("rates.csv");
    let out = bin()
        .args([
            "rates",
            "--config",
            config_path.to_str().unwrap(),
            "--q",
            "2",
            "--out",
            csv_path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(
        csv.contains("\"q\":2.0"),
        "flag must override the config file"
    );
    assert!(csv.contains("pass=true"));
    let plot = std::fs::read_to_string(format!("{}.plot", csv_path.display())).unwrap();
    assert!(plot.contains("# series: upper"));
    assert!(plot.contains("# series: lower"));
}

#[test]
fn cli_rates_with_certificate_column() {
    let dir = std::env::temp_dir().join("bernwidths-cert-test");
    std::fs::create_dir_all(&dir).unwrap();
    let config_path = dir.join("cert.json");
    std::fs::write(
        &config_path,
        r#"{"alpha":[1.0],"p":2.0,"q":2.0,"theta":2.0,"n_min":4,"n_max":16,"seed":7,"samples":1}"#,
    )
    .unwrap();
    let csv_path = dir.join("cert.csv");
    let out = bin()
        .args([
            "rates",
            "--config",
            config_path.to_str().unwrap(),
            "--cert",
            "--out",
            csv_path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    // every row of this sweep is desk-scale, so the certificate column is
    // populated with a positive value
    for line in csv
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with('n'))
    {
        let cert = line.split(',').nth(5).unwrap();
        assert!(!cert.is_empty(), "{line}");
        assert!(cert.parse::<f64>().unwrap() > 0.0);
    }
    let plot = std::fs::read_to_string(format!("{}.plot", csv_path.display())).unwrap();
    assert!(plot.contains("# series: certificate"), "{plot}");
}

#[test]
fn cli_widths_and_norm_reports() {
    let out = bin()
        .args([
            "widths",
            "--rho",
            "1,0.5,0.25",
            "--p",
            "1",
            "--q",
            "2",
            "--n",
            "2",
            "--trials",
            "50",
            "--seed",
            "7",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("exact=4.472135955000e-1"), "{text}");
    assert!(text.contains("oracle="));

    let out = bin()
        .args([
            "widths", "--rho", "1,0.5", "--p", "2", "--q", "2", "--n", "1", "--trials", "5",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("inapplicable (requires p<q)"));

    let out = bin()
        .args([
            "norm", "--func", "linear", "--alpha", "0.5", "--p", "1", "--theta", "2",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("nikolskii:"), "{text}");
    assert!(text.contains("besov(theta=2):"), "{text}");
}
