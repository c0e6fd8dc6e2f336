//! Files written by runs and studies.

use maxglm::grid::{parse_snapshot, read_snapshot, write_snapshot, Field, Grid2D, Location};
use maxglm::harness::{run, study_ap, study_convergence, InitialCondition, RkMethod, RunConfig, Scheme};

fn significant_digits(v: &str) -> usize {
    let mantissa = v.trim_start_matches('-').split(['e', 'E']).next().unwrap();
    mantissa.chars().filter(|c| c.is_ascii_digit()).count()
}

fn assert_csv(text: &str, header: &str) {
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(header));
    let ncol = header.split(',').count();
    let mut rows = 0;
    for line in lines {
        let cells: Vec<_> = line.split(',').collect();
        assert_eq!(cells.len(), ncol, "{line}");
        for c in cells.iter().filter(|c| !c.is_empty() && c.contains('e')) {
            assert_eq!(significant_digits(c), 17, "{c}");
            c.parse::<f64>().unwrap();
        }
        rows += 1;
    }
    assert!(rows > 0);
}

#[test]
fn run_writes_series_and_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        scheme: Scheme::Simm,
        nx: 10,
        ny: 10,
        ic: InitialCondition::GaussT2,
        t_end: 0.5,
        snapshot_every: 5,
        output_dir: Some(dir.path().to_path_buf()),
        ..RunConfig::default()
    };
    let out = run(&cfg).unwrap();
    let energy = std::fs::read_to_string(dir.path().join("energy.csv")).unwrap();
    assert_csv(&energy, "t,energy,rel_err");
    assert_eq!(energy.lines().count(), out.steps + 2);
    assert_csv(&std::fs::read_to_string(dir.path().join("divergence.csv")).unwrap(), "t,divB,divE");
    let summary = std::fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(summary.contains(&out.series.meta.config_hash));

    let (b, t) = read_snapshot(&dir.path().join("snapshot_000005_B.txt")).unwrap();
    assert_eq!((b.location, b.ncomp), (Location::Cell, 3));
    assert!(t > 0.0);
    let (phi, t_end) = read_snapshot(&dir.path().join(format!("snapshot_{:06}_phi.txt", out.steps))).unwrap();
    assert_eq!(phi.location, Location::Vertex);
    assert!((t_end - 0.5).abs() < 1e-15);

    // The written config is the validated one, with the default CFL filled in.
    let mut effective = cfg.clone();
    effective.validate().unwrap();
    let again = RunConfig::from_file(&dir.path().join("config.txt")).unwrap();
    assert_eq!(again, effective);
    assert_eq!(again.hash(), effective.hash());
}

#[test]
fn identical_configs_give_identical_files() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let cfg = RunConfig {
            nx: 8,
            ny: 8,
            ic: InitialCondition::GaussT2,
            t_end: 0.2,
            rk: RkMethod::Rk4,
            output_dir: Some(d.path().to_path_buf()),
            ..RunConfig::default()
        };
        run(&cfg).unwrap();
    }
    for f in ["energy.csv", "divergence.csv"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
}

#[test]
fn studies_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    study_convergence(Scheme::Simm, &[8, 16], RkMethod::High, Some(dir.path())).unwrap();
    let errors = std::fs::read_to_string(dir.path().join("errors.csv")).unwrap();
    assert_csv(
        &errors,
        "N,B1,B2,B3,phi,E1,E2,psi,order_B1,order_B2,order_B3,order_phi,order_E1,order_E2,order_psi",
    );
    study_ap(&[1e2, 1e3], Some(dir.path())).unwrap();
    let ap = std::fs::read_to_string(dir.path().join("ap.csv")).unwrap();
    assert_csv(&ap, "ch,eps,divB,divE,order_divB,order_divE");
}

#[test]
fn snapshot_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let g = Grid2D::new(5, 3, (0.0, 1.0), (-2.0, 0.5)).unwrap();
    let f = Field::sample_vector(g, Location::Vertex, |x, y| [x.sin() / 3.0, y * 1e-300, 1.0 / 7.0]);
    let path = dir.path().join("f.txt");
    write_snapshot(&path, &f, 0.125).unwrap();
    let (back, t) = read_snapshot(&path).unwrap();
    assert_eq!(back, f);
    assert_eq!(t, 0.125);
    assert!(parse_snapshot("# maxglm field snapshot\nnx = 2\n").is_err());
    assert!(read_snapshot(&dir.path().join("missing.txt")).is_err());
}
