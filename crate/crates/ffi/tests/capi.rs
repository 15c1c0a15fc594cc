use std::ffi::{CStr, CString};
use std::ptr;

use tempojd_ffi::*;

fn last_error() -> String {
    let p = tjd_last_error();
    assert!(!p.is_null(), "expected an error message");
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn contacts() -> Vec<TjdContact> {
    // a 4-cycle touched once per step for 40 steps
    let mut out = Vec::new();
    for t in 0..40 {
        let (a, b) = [(0, 1), (1, 2), (2, 3), (3, 0)][t % 4];
        out.push(TjdContact {
            a,
            b,
            start: t as f64,
            end: t as f64 + 1.0,
        });
    }
    out
}

#[test]
fn network_to_modes_round_trip() {
    let c = contacts();
    let mut net = ptr::null_mut();
    unsafe {
        assert_eq!(
            tjd_network_from_contacts(4, c.as_ptr(), c.len(), 1.0, &mut net),
            TjdStatus::Ok
        );
        assert_eq!(tjd_network_node_count(net), 4);
        assert!(tjd_network_contact_count(net) > 0);

        let mut batch = ptr::null_mut();
        assert_eq!(tjd_batch_sample(net, 80, 3, 0.0, &mut batch), TjdStatus::Ok);
        assert_eq!(tjd_batch_len(batch), 80);
        assert_eq!(tjd_batch_node_count(batch), 4);
        let mut complete = ptr::null_mut();
        assert_eq!(tjd_batch_complete_only(batch, &mut complete), TjdStatus::Ok);
        assert!(tjd_batch_len(complete) <= 80);

        let mut jd = ptr::null_mut();
        assert_eq!(tjd_jd_run(batch, 1e-9, 100, &mut jd), TjdStatus::Ok);
        assert_eq!(tjd_jd_dim(jd), 4);
        assert_eq!(tjd_jd_sample_count(jd), 80);
        assert!(tjd_jd_sweeps(jd) >= 1);
        let mut basis = vec![0.0; 16];
        assert_eq!(tjd_jd_basis(jd, basis.as_mut_ptr(), 16), TjdStatus::Ok);
        // columns are orthonormal
        for i in 0..4 {
            for j in 0..4 {
                let dot: f64 = (0..4).map(|r| basis[r * 4 + i] * basis[r * 4 + j]).sum();
                assert!((dot - (i == j) as u8 as f64).abs() < 1e-10);
            }
        }
        let mut dev = vec![0.0; 80];
        assert_eq!(tjd_jd_deviations(jd, dev.as_mut_ptr(), 80), TjdStatus::Ok);
        assert!(dev.iter().all(|d| *d >= 0.0));

        let mut modes = ptr::null_mut();
        assert_eq!(tjd_modes_decompose(batch, 2, 1, &mut modes), TjdStatus::Ok);
        let k = tjd_modes_k(modes);
        assert!((1..=2).contains(&k));
        assert_eq!(tjd_modes_sample_count(modes), 80);
        let mut assign = vec![usize::MAX; 80];
        assert_eq!(tjd_modes_assignments(modes, assign.as_mut_ptr(), 80), TjdStatus::Ok);
        assert!(assign.iter().all(|&a| a < k));
        let total: usize = (0..k).map(|m| tjd_modes_member_count(modes, m)).sum();
        assert_eq!(total, 80);
        let first = assign[0];
        let mut hbar = vec![0.0; 16];
        assert_eq!(tjd_modes_hbar(modes, first, hbar.as_mut_ptr(), 16), TjdStatus::Ok);
        assert_eq!(
            tjd_modes_hbar(modes, 99, hbar.as_mut_ptr(), 16),
            TjdStatus::InvalidArgument
        );

        tjd_modes_free(modes);
        tjd_jd_free(jd);
        tjd_batch_free(complete);
        tjd_batch_free(batch);
        tjd_network_free(net);
    }
}

#[test]
fn null_and_bad_arguments_give_codes() {
    let mut batch = ptr::null_mut();
    unsafe {
        assert_eq!(
            tjd_batch_sample(ptr::null(), 10, 0, 0.0, &mut batch),
            TjdStatus::NullPointer
        );
        assert!(batch.is_null());
        assert!(last_error().contains("network"));
        assert_eq!(
            tjd_network_from_contacts(4, ptr::null(), 3, 1.0, &mut ptr::null_mut()),
            TjdStatus::NullPointer
        );
        let edges = [0usize, 1];
        assert_eq!(
            tjd_batch_sample_graph(2, edges.as_ptr(), 1, 0, 0, &mut batch),
            TjdStatus::InvalidArgument
        );
        assert!(last_error().contains("batch size"));
        assert_eq!(
            tjd_batch_sample_graph(2, edges.as_ptr(), 1, 5, 0, ptr::null_mut()),
            TjdStatus::NullPointer
        );
        let bad = [TjdContact {
            a: 0,
            b: 0,
            start: 0.0,
            end: 1.0,
        }];
        let mut net = ptr::null_mut();
        assert_ne!(
            tjd_network_from_contacts(2, bad.as_ptr(), 1, 1.0, &mut net),
            TjdStatus::Ok
        );
        assert!(net.is_null());
        assert_eq!(tjd_network_node_count(ptr::null()), 0);
        tjd_batch_free(ptr::null_mut());
        tjd_jd_free(ptr::null_mut());
        tjd_modes_free(ptr::null_mut());
    }
}

#[test]
fn errors_clear_on_success() {
    let edges = [0usize, 1, 1, 2];
    let mut batch = ptr::null_mut();
    unsafe {
        assert_eq!(
            tjd_batch_sample_graph(3, edges.as_ptr(), 2, 0, 0, &mut batch),
            TjdStatus::InvalidArgument
        );
        assert!(!tjd_last_error().is_null());
        assert_eq!(
            tjd_batch_sample_graph(3, edges.as_ptr(), 2, 5, 0, &mut batch),
            TjdStatus::Ok
        );
        assert!(tjd_last_error().is_null());
        tjd_batch_free(batch);
    }
}

#[test]
fn batch_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("b.csv").to_str().unwrap()).unwrap();
    let edges = [0usize, 1, 1, 2, 2, 0];
    unsafe {
        let mut batch = ptr::null_mut();
        assert_eq!(
            tjd_batch_sample_graph(3, edges.as_ptr(), 3, 20, 9, &mut batch),
            TjdStatus::Ok
        );
        assert_eq!(tjd_batch_save(batch, path.as_ptr()), TjdStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(tjd_batch_load(path.as_ptr(), &mut back), TjdStatus::Ok);
        assert_eq!(tjd_batch_len(back), 20);
        let missing = CString::new("/nonexistent/batch.csv").unwrap();
        let mut none = ptr::null_mut();
        assert_eq!(tjd_batch_load(missing.as_ptr(), &mut none), TjdStatus::DataError);
        assert!(none.is_null());
        tjd_batch_free(back);
        tjd_batch_free(batch);
    }
}

#[test]
fn pipeline_run_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = CString::new(
        r#"{"name":"g","seed":2,"input":{"kind":"graph","n_nodes":4,"edges":[[0,1],[1,2],[2,3],[3,0]]},
            "sample":{"m":40},"analysis":{"k_max":2}}"#,
    )
    .unwrap();
    let out = CString::new(dir.path().to_str().unwrap()).unwrap();
    unsafe {
        assert_eq!(
            tjd_pipeline_run(TjdCommand::Analyse, cfg.as_ptr(), out.as_ptr()),
            TjdStatus::Ok
        );
        assert!(dir.path().join("manifest.json").exists());
        assert!(dir.path().join("overall/shortest_path.dot").exists());
        assert_eq!(
            tjd_pipeline_run(TjdCommand::Sir, cfg.as_ptr(), out.as_ptr()),
            TjdStatus::InvalidArgument
        );
        let broken = CString::new("{not json").unwrap();
        assert_eq!(
            tjd_pipeline_run(TjdCommand::Analyse, broken.as_ptr(), out.as_ptr()),
            TjdStatus::DataError
        );
    }
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/tempojd.h")).unwrap();
    for name in [
        "tjd_version",
        "tjd_last_error",
        "tjd_network_load",
        "tjd_batch_sample",
        "tjd_jd_run",
        "tjd_jd_average",
        "tjd_modes_decompose",
        "tjd_pipeline_run",
        "typedef struct TjdNetwork TjdNetwork",
        "TJD_STATUS_NOT_CONVERGED = 4",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
