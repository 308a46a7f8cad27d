//! Public-API round trip through a pipeline workdir.

use bpod::config::CaseConfig;
use bpod::container::{self, Kind, Record};
use bpod::pipeline::{self, RunOptions, Stage};

fn tiny() -> CaseConfig {
    CaseConfig::from_text(
        "[case]\nname = wd\nn = 16\nre = 500\n[input]\noptimal_t_max = 20\n\
         [snapshots]\ncount = 40\ndt = 0.01\ndecay_threshold = 1e-2\n[models]\npod_rank = 8\noutput_projection_ranks = 3\n",
    )
    .unwrap()
}

#[test]
fn stages_stop_where_asked_and_records_load() {
    let dir = std::env::temp_dir().join(format!("bpod-workdir-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    let s = pipeline::run_pipeline(&tiny(), &dir, RunOptions { until: Stage::Bpod, quiet: true }).unwrap();
    assert_eq!(s.stages.last().unwrap().0, Stage::Bpod);
    assert!(!dir.join("roms").exists());

    let direct = Record::read(&dir.join("snapshots/direct.bpr")).unwrap();
    assert_eq!(direct.kind, Kind::DirectSnapshots);
    let set = container::snapshots_from_record(&direct).unwrap();
    assert_eq!(set.len(), 40);

    let pod = container::basis_from_record(&Record::read(&dir.join("modes/pod.bpr")).unwrap()).unwrap();
    let bal = container::basis_from_record(&Record::read(&dir.join("modes/bpod_s3.bpr")).unwrap()).unwrap();
    assert!(pod.cumulative_fractions().windows(2).all(|w| w[0] <= w[1]));
    assert!(bal.adjoint_modes.is_some());

    let manifest = pipeline::check_artifacts(&dir).unwrap();
    assert_eq!(manifest.get("stage.bpod").map(str::len), Some(64));
    assert_eq!(manifest.get("config_hash"), Some(tiny().hash().as_str()));
    std::fs::remove_dir_all(&dir).unwrap();
}
