use dbar::error::Error;
use dbar::pipeline::io::{read_grid, read_transform};
use dbar::pipeline::{roundtrip_volume, run_pipeline, Blob, Phantom, PhantomKind, RunConfig};

fn small() -> RunConfig {
    RunConfig {
        nx: 64,
        kgrid_n: 32,
        k_radius: 4.0,
        modes: 16,
        samples: 64,
        series_n: 8,
        radial_degree: 33,
        directions: 4,
        ..RunConfig::default()
    }
}

fn bump() -> Phantom {
    Phantom {
        kind: PhantomKind::Bump,
        blobs: vec![Blob {
            center: [0.05, 0.0],
            width: 0.5,
            b1: 0.2,
            b2: -0.15,
        }],
        support_radius: 0.8,
    }
}

#[test]
fn zero_phantom_reconstructs_exactly() {
    let out = run_pipeline(&small(), &Phantom::zero()).unwrap();
    assert!(out.t.grid().samples().iter().all(|v| v.norm() == 0.0));
    let e = &out.report.errors;
    assert_eq!((e.b1, e.b2, e.q), (0.0, 0.0, 0.0));
}

#[test]
fn report_does_not_depend_on_the_thread_count() {
    let cfg = small();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| roundtrip_volume(&cfg, &Phantom::calibrated()).unwrap())
    };
    let (a, b) = (run(1), run(3));
    assert_eq!(a.report.without_timings(), b.report.without_timings());
    assert_eq!(a.t, b.t);
}

#[test]
fn boundary_data_adds_error_to_the_volume_round_trip() {
    let cfg = small();
    for phantom in [Phantom::gauss(0.3, 0.15, 0.25), bump(), Phantom::calibrated()] {
        let volume = roundtrip_volume(&cfg, &phantom).unwrap().report.errors;
        let full = run_pipeline(&cfg, &phantom).unwrap().report.errors;
        assert!(volume.q <= full.q * 1.05, "{phantom:?}: volume {volume:?}, full {full:?}");
    }
}

#[test]
fn outputs_carry_the_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        output_dir: Some(dir.path().to_path_buf()),
        ..small()
    };
    let out = roundtrip_volume(&cfg, &Phantom::gauss(0.2, 0.1, 0.25)).unwrap();
    let hash = cfg.hash();
    for name in ["b1.grid", "q.grid", "t.grid", "q_rec.grid", "b1_rec.grid"] {
        assert_eq!(read_grid(&dir.path().join(name)).unwrap().config_hash, hash, "{name}");
    }
    let t = read_transform(&dir.path().join("t.grid"), 1.0).unwrap();
    assert_eq!(t, out.t);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["config_hash"], hash.as_str());
}

#[test]
fn invalid_config_is_a_precondition_error() {
    let cfg = RunConfig {
        samples: 16,
        ..small()
    };
    let err = run_pipeline(&cfg, &Phantom::zero()).unwrap_err();
    assert!(matches!(err, Error::Precondition(_)), "{err}");
}
