//! Acceptance run: both bundled cases end to end, then every criterion.
//!
//! Prints one PASS/FAIL line per criterion. Exits nonzero on a FAIL only
//! when `BPOD_ACCEPTANCE_STRICT=1`, or on any error.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use bpod::config::CaseConfig;
use bpod::criteria::{self, Check};
use bpod::pipeline::{self, RunOptions};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run_case(file: &str, work: &Path) -> bpod::Result<Vec<Check>> {
    let cfg = CaseConfig::from_file(&configs().join(file))?;
    let dir = work.join(&cfg.name);
    let t0 = Instant::now();
    pipeline::run_pipeline(&cfg, &dir, RunOptions { quiet: true, ..Default::default() })?;
    println!("{file}: pipeline {:.1} s", t0.elapsed().as_secs_f64());
    Ok(criteria::verify_artifacts(&dir)?.1)
}

fn main() {
    let work = std::env::temp_dir().join(format!("bpod-acceptance-{}", std::process::id()));
    let strict = std::env::var("BPOD_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let result = (|| -> bpod::Result<Vec<Check>> {
        let mut checks = criteria::standalone(&CaseConfig::default())?;
        checks.extend(run_case("paper_a1b1.cfg", &work)?);
        checks.extend(run_case("paper_localized.cfg", &work)?);
        Ok(checks)
    })();
    let _ = std::fs::remove_dir_all(&work);
    let checks = match result {
        Ok(c) => c,
        Err(e) => {
            println!("ERROR {e}");
            std::process::exit(1);
        }
    };
    // criteria reported by both cases pass only if both halves pass
    let mut merged: BTreeMap<u8, Check> = BTreeMap::new();
    for c in checks {
        merged
            .entry(c.id)
            .and_modify(|m| {
                m.pass &= c.pass;
                m.detail = format!("{} | {}", m.detail, c.detail);
            })
            .or_insert(c);
    }
    for c in merged.values() {
        println!("{}", c.line());
    }
    let failed = merged.values().filter(|c| !c.pass).count();
    println!("acceptance: {} of {} criteria passed", merged.len() - failed, merged.len());
    if strict && failed > 0 {
        std::process::exit(1);
    }
}
