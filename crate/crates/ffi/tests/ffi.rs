use std::ffi::CStr;
use std::ptr;

use ggmsl_ffi::*;

fn opts(iterations: usize) -> GgmslRunOptions {
    GgmslRunOptions { iterations, seed: 11, burn_in: 0, prior_theta: 0.2, max_seconds: 0.0 }
}

fn last_error() -> String {
    let p = ggmsl_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn instance_to_auc_roundtrip() {
    unsafe {
        let mut g: *mut GgmslGraph = ptr::null_mut();
        let mut y: *mut GgmslData = ptr::null_mut();
        assert_eq!(ggmsl_generate_instance(GgmslGraphType::Cluster, 10, 100, 3, 0, &mut g, &mut y), GgmslStatus::Ok);
        let (mut n, mut p) = (0, 0);
        assert_eq!(ggmsl_data_shape(y, &mut n, &mut p), GgmslStatus::Ok);
        assert_eq!((n, p), (100, 10));
        let mut edges = 0;
        assert_eq!(ggmsl_graph_edge_count(g, &mut edges), GgmslStatus::Ok);
        assert!(edges > 0);

        for sampler in [GgmslSampler::Plbd, GgmslSampler::Plrj, GgmslSampler::SsO, GgmslSampler::Rj, GgmslSampler::Bd] {
            let mut inc: *mut GgmslInclusion = ptr::null_mut();
            assert_eq!(ggmsl_run_sampler(y, sampler, &opts(2000), &mut inc), GgmslStatus::Ok, "{sampler:?}");
            let mut a = f64::NAN;
            assert_eq!(ggmsl_auc(inc, g, &mut a), GgmslStatus::Ok);
            assert!(a > 0.6 && a <= 1.0, "{sampler:?} auc {a}");
            let mut m = f64::NAN;
            assert_eq!(ggmsl_mamse(inc, g, 0.5, &mut m), GgmslStatus::Ok);
            assert!((0.0..=1.0).contains(&m));
            let mut v = f64::NAN;
            assert_eq!(ggmsl_inclusion_get(inc, 0, 1, &mut v), GgmslStatus::Ok);
            assert!((0.0..=1.0).contains(&v));
            assert_eq!(ggmsl_inclusion_get(inc, 2, 2, &mut v), GgmslStatus::InvalidArgument);
            ggmsl_inclusion_free(inc);
        }
        ggmsl_graph_free(g);
        ggmsl_data_free(y);
    }
}

#[test]
fn graph_handle() {
    unsafe {
        let mut g: *mut GgmslGraph = ptr::null_mut();
        assert_eq!(ggmsl_graph_new(4, &mut g), GgmslStatus::Ok);
        assert_eq!(ggmsl_graph_add_edge(g, 0, 3), GgmslStatus::Ok);
        assert_eq!(ggmsl_graph_add_edge(g, 3, 0), GgmslStatus::Ok);
        let mut has = false;
        assert_eq!(ggmsl_graph_has_edge(g, 3, 0, &mut has), GgmslStatus::Ok);
        assert!(has);
        let mut count = 0;
        ggmsl_graph_edge_count(g, &mut count);
        assert_eq!(count, 1);
        assert_eq!(ggmsl_graph_add_edge(g, 1, 1), GgmslStatus::InvalidArgument);
        assert!(last_error().contains("self-loop"));
        assert_eq!(ggmsl_graph_add_edge(g, 0, 9), GgmslStatus::InvalidArgument);
        ggmsl_graph_free(g);
        ggmsl_graph_free(ptr::null_mut());
    }
}

#[test]
fn error_codes() {
    unsafe {
        let mut y: *mut GgmslData = ptr::null_mut();
        assert_eq!(ggmsl_data_new(ptr::null(), 2, 2, &mut y), GgmslStatus::NullPointer);
        assert!(last_error().contains("values"));
        let vals = [1.0, 2.0, 3.0, 4.0, 5.0, f64::NAN];
        assert_eq!(ggmsl_data_new(vals.as_ptr(), 3, 2, &mut y), GgmslStatus::InvalidArgument);
        assert_eq!(ggmsl_data_new(vals.as_ptr(), 2, 2, ptr::null_mut()), GgmslStatus::NullPointer);
        assert_eq!(ggmsl_data_new(vals.as_ptr(), 2, 2, &mut y), GgmslStatus::Ok);
        let mut inc: *mut GgmslInclusion = ptr::null_mut();
        assert_eq!(ggmsl_run_sampler(y, GgmslSampler::Plbd, &opts(0), &mut inc), GgmslStatus::InvalidArgument);
        assert_eq!(ggmsl_run_sampler(y, GgmslSampler::Plbd, ptr::null(), &mut inc), GgmslStatus::NullPointer);
        let mut bad = opts(10);
        bad.prior_theta = 1.5;
        assert_eq!(ggmsl_run_sampler(y, GgmslSampler::Plbd, &bad, &mut inc), GgmslStatus::InvalidArgument);
        assert!(inc.is_null());

        assert_eq!(ggmsl_run_sampler(y, GgmslSampler::Plbd, &opts(50), &mut inc), GgmslStatus::Ok);
        let mut g: *mut GgmslGraph = ptr::null_mut();
        ggmsl_graph_new(2, &mut g);
        let mut a = 0.0;
        // No true edges: AUC undefined.
        assert_eq!(ggmsl_auc(inc, g, &mut a), GgmslStatus::UndefinedMetric);
        let mut g3: *mut GgmslGraph = ptr::null_mut();
        ggmsl_graph_new(3, &mut g3);
        assert_eq!(ggmsl_auc(inc, g3, &mut a), GgmslStatus::DimensionMismatch);
        ggmsl_graph_free(g);
        ggmsl_graph_free(g3);
        ggmsl_inclusion_free(inc);
        ggmsl_data_free(y);
    }
    assert_eq!(ggmsl_abi_version(), GGMSL_ABI_VERSION);
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(dir.join("include/ggmsl.h")).unwrap();
    for f in ["ggmsl_run_sampler", "ggmsl_last_error", "GGMSL_STATUS_NULL_POINTER", "typedef struct GgmslData GgmslData"] {
        assert!(header.contains(f), "{f}");
    }
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"ggmsl.h\"\nint main(void) { GgmslRunOptions o = {100, 1, 0, 0.2, 0.0}; GgmslInclusion *p = 0;\n\
         return ggmsl_run_sampler(0, GGMSL_SAMPLER_PLBD, &o, &p) == GGMSL_STATUS_NULL_POINTER ? 0 : 1; }\n",
    )
    .unwrap();
    for (compiler, extra) in [("cc", vec!["-x", "c", "-std=c99"]), ("c++", vec!["-x", "c++"])] {
        let status = std::process::Command::new(compiler)
            .args(&extra)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-I"])
            .arg(dir.join("include"))
            .arg(&src)
            .status();
        match status {
            Ok(s) => assert!(s.success(), "{compiler} rejected the header"),
            Err(e) => eprintln!("skipping {compiler}: {e}"),
        }
    }
}
