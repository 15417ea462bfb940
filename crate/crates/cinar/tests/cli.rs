use std::path::Path;
use std::process::{Command, Output};

use cinar::commands::FitOutput;
use cinar::simstudy::{replication_grid, run_study, StudyConfig};
use cinar::{read_grid, ModelSpec};
use cinar_core::{
    cls_estimate, cml_estimate, simulate_cinar, CinarParams, CmlOptions, Family, ModelOrder, SimConfig,
};

fn cinar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cinar"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_is_bit_identical_on_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&a, &b] {
        let out = cinar(&[
            "simulate", "--order", "1,1", "--theta", "0.1,0.1,0.1", "--family", "poisson",
            "--mu-eps", "1", "--n", "50,50", "--seed", "7", "--out", path(p),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let (ga, gb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ga, gb);
    let g = read_grid(&a, false).unwrap();
    assert_eq!((g.n1(), g.n2()), (50, 50));

    // Same grid as the library call.
    let p = CinarParams::poisson(ModelOrder::new(1, 1).unwrap(), vec![0.1; 3], 1.0).unwrap();
    assert_eq!(simulate_cinar(&SimConfig::new(p, 50, 50, 7)).unwrap(), g);
}

#[test]
fn invalid_theta_fails_before_output() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("g.csv");
    let out = cinar(&[
        "simulate", "--theta", "0.5,0.5,0.1", "--n", "10,10", "--out", path(&out_path),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_path.exists());
}

#[test]
fn bad_grid_cell_is_a_validation_error_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.csv");
    std::fs::write(&g, "1,2\n3,-1\n").unwrap();
    let out = cinar(&["fit", "--input", path(&g), "--method", "cls"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 2, column 2"));
}

#[test]
fn nb_simulation_meta_records_config() {
    let dir = tempfile::tempdir().unwrap();
    let (g, m) = (dir.path().join("g.csv"), dir.path().join("m.json"));
    let out = cinar(&[
        "simulate", "--theta", "0.2,0.2,0.5", "--family", "nb", "--mu-eps", "1", "--i-eps", "2",
        "--n", "20,30", "--seed", "11", "--out", path(&g), "--meta", path(&m),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let meta: serde_json::Value = serde_json::from_slice(&std::fs::read(&m).unwrap()).unwrap();
    assert_eq!(meta["schema_version"], 1);
    assert_eq!(meta["config"]["seed"], 11);
    assert_eq!(meta["config"]["model"]["family"], "nb");
    assert_eq!(meta["config"]["burn_in"], 100);
    // Marginal mean mu/(1 - alpha) with alpha = 0.9.
    assert!((meta["marginal_mean"].as_f64().unwrap() - 10.0).abs() < 1e-12);
}

#[test]
fn cls_json_equals_library_fit() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.csv");
    let f = dir.path().join("f.json");
    let out = cinar(&[
        "simulate", "--theta", "0.3,0.4,0.1", "--n", "40,40", "--seed", "5", "--out", path(&g),
    ]);
    assert!(out.status.success());
    let out = cinar(&["fit", "--input", path(&g), "--method", "cls", "--out", path(&f)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let fit: FitOutput = serde_json::from_slice(&std::fs::read(&f).unwrap()).unwrap();
    let grid = read_grid(&g, false).unwrap();
    let lib = cls_estimate(&grid, ModelOrder::new(1, 1).unwrap()).unwrap();
    assert_eq!(fit.fits, vec![lib]);
    assert_eq!(fit.schema_version, 1);
    assert_eq!(fit.grid.n1, 40);
}

#[test]
fn pinned_cml_fit_and_diagnose() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.csv");
    let f = dir.path().join("f.json");
    let d = dir.path().join("d.json");
    let pit = dir.path().join("pit.csv");
    assert!(cinar(&[
        "simulate", "--theta", "0.3,0.4,0", "--n", "40,40", "--seed", "9", "--out", path(&g),
    ])
    .status
    .success());
    let out = cinar(&[
        "fit", "--input", path(&g), "--method", "cml", "--fix", "theta11=0", "--out", path(&f),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let fit: FitOutput = serde_json::from_slice(&std::fs::read(&f).unwrap()).unwrap();
    let cml = &fit.fits[0];
    assert_eq!(cml.theta[2], 0.0);
    assert_eq!(cml.fixed, vec![2]);
    let se = cml.std_errors.as_ref().unwrap();
    assert!(se[2].is_none() && se[0].is_some() && se[3].is_some());
    assert_eq!(cml.n_params(), 3);

    let out = cinar(&[
        "diagnose", "--input", path(&g), "--fit", path(&f), "--bins", "5", "--out", path(&d),
        "--pit-csv", path(&pit),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rep: serde_json::Value = serde_json::from_slice(&std::fs::read(&d).unwrap()).unwrap();
    assert_eq!(rep["schema_version"], 1);
    assert!((rep["report"]["aic"].as_f64().unwrap() - cml.aic.unwrap()).abs() < 1e-6);
    let lines = std::fs::read_to_string(&pit).unwrap();
    assert_eq!(lines.lines().count(), 6);
}

#[test]
fn acf_window_zero_is_a_single_one() {
    let out = cinar(&["acf", "--order", "1,1", "--theta", "0.2,0.2,0.5", "--window", "0,0"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout), "l\\k,0\n0,1.000000\n");
}

#[test]
fn acf_closed_form_and_solver_paths_agree() {
    let run = |extra: &[&str]| {
        let mut a = vec!["acf", "--order", "1,1", "--theta", "0.2,0.2,0.5", "--window", "5,5"];
        a.extend_from_slice(extra);
        String::from_utf8(cinar(&a).stdout).unwrap()
    };
    let cells = |s: String| -> Vec<f64> {
        s.lines()
            .skip(1)
            .flat_map(|l| l.split(',').skip(1).map(|c| c.parse().unwrap()).collect::<Vec<f64>>())
            .collect()
    };
    let (a, b) = (cells(run(&[])), cells(run(&["--closed-form"])));
    assert_eq!(a.len(), 121);
    // Six printed decimals: one unit of rounding either way.
    assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= 1e-6 + 1e-12));
}

#[test]
fn closed_form_on_other_order_is_rejected() {
    let out = cinar(&[
        "acf", "--order", "2,1", "--theta", "0.1,0.1,0.1,0.1,0.1", "--closed-form",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn single_replication_equals_a_single_fit() {
    let dgp = ModelSpec {
        order: [1, 1],
        theta: vec![0.2, 0.3, 0.1],
        family: Family::Poisson,
        mu_eps: 1.0,
        i_eps: None,
    };
    let cfg = StudyConfig {
        dgp,
        sizes: vec![[30, 30]],
        reps: 1,
        seed: 42,
        burn_in: 100,
        arms: vec!["cml".parse().unwrap()],
        threads: Some(2),
    };
    let res = run_study(&cfg).unwrap();
    let grid = replication_grid(&cfg, [30, 30], 0).unwrap();
    let fit = cml_estimate(
        &grid,
        ModelOrder::new(1, 1).unwrap(),
        Family::Poisson,
        &CmlOptions {
            standard_errors: false,
            ..Default::default()
        },
    )
    .unwrap();
    let row = &res.rows[0];
    assert_eq!(row.reps_ok, 1);
    assert_eq!(row.names, ["mu_eps", "theta01", "theta10", "theta11"]);
    assert_eq!(row.mean[0], fit.mu_eps);
    assert_eq!(&row.mean[1..], fit.theta.as_slice());
}

#[test]
fn simstudy_csv_layout() {
    let out = cinar(&[
        "simstudy", "--theta", "0.2,0.2,0.5", "--family", "nb", "--i-eps", "2", "--n", "20,20",
        "--reps", "3", "--seed", "1", "--arms", "yw;p-cml;n-cml",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "arm,n1,n2,stat,reps_ok,reps_failed,not_converged,mu_eps,i_eps,theta01,theta10,theta11"
    );
    assert_eq!(lines.len(), 7);
    assert!(lines[1].starts_with("yw,20,20,mean,3,0,"));
    // Poisson CML has no dispersion column.
    let pcml: Vec<&str> = lines[3].split(',').collect();
    assert_eq!(pcml[8], "");
    let ncml: Vec<&str> = lines[5].split(',').collect();
    assert!(!ncml[8].is_empty());
}
