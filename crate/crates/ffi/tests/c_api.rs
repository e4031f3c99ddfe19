use std::ffi::{CStr, CString};
use std::ptr;

use sidewalk_audit_ffi::*;

const LINE: &str = r#"{"type":"FeatureCollection","features":[
 {"type":"Feature","properties":{"highway":"residential"},
  "geometry":{"type":"LineString","coordinates":[[76.7794,30.7333],[76.7804,30.7333]]}},
 {"type":"Feature","properties":{"highway":"residential"},
  "geometry":{"type":"LineString","coordinates":[[76.7804,30.7333],[76.7814,30.7333]]}},
 {"type":"Feature","properties":{"highway":"primary"},
  "geometry":{"type":"LineString","coordinates":[[76.7814,30.7333],[76.7824,30.7333]]}}]}"#;

fn last_error() -> Option<String> {
    let p = swa_last_error_message();
    (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned())
}

#[test]
fn severity_weights_and_errors() {
    let mut w = 0.0;
    for (level, want) in [(1, 0.2), (2, 0.6), (3, 1.0)] {
        assert_eq!(unsafe { swa_severity_weight(level, &mut w) }, SwaStatus::Ok);
        assert_eq!(w, want);
    }
    assert_eq!(unsafe { swa_severity_weight(4, &mut w) }, SwaStatus::InvalidArgument);
    assert!(last_error().unwrap().contains('4'));
    assert_eq!(
        unsafe { swa_severity_weight(1, ptr::null_mut()) },
        SwaStatus::NullPointer
    );
    assert_eq!(unsafe { swa_severity_weight(1, &mut w) }, SwaStatus::Ok);
    assert!(last_error().is_none(), "success clears the message");
}

#[test]
fn haversine_rejects_bad_latitude() {
    let mut d = 0.0;
    assert_eq!(unsafe { swa_haversine(0.0, 0.0, 0.0, 1.0, &mut d) }, SwaStatus::Ok);
    assert!((d - 111_195.0).abs() < 10.0);
    assert_eq!(
        unsafe { swa_haversine(91.0, 0.0, 0.0, 1.0, &mut d) },
        SwaStatus::InvalidArgument
    );
}

#[test]
fn normalize_and_aggregate() {
    let raw = [-3.0, -1.0, 0.0, 0.4];
    let mut out = [0.0; 4];
    assert_eq!(
        unsafe { swa_normalize_scores(raw.as_ptr(), 4, out.as_mut_ptr()) },
        SwaStatus::Ok
    );
    assert!(out.iter().all(|v| *v > 0.0 && *v < 1.0));
    assert!(out.windows(2).all(|w| w[0] < w[1]));

    let scores = [0.2, 0.8];
    let lengths = [10.0, 30.0];
    let mut s = 0.0;
    assert_eq!(
        unsafe { swa_poi_sec_score(scores.as_ptr(), lengths.as_ptr(), 2, &mut s) },
        SwaStatus::Ok
    );
    assert!((s - 0.65).abs() < 1e-12);

    let counts = [1u64, 3];
    assert_eq!(
        unsafe { swa_poi_across_sector_score(scores.as_ptr(), counts.as_ptr(), 2, &mut s) },
        SwaStatus::Ok
    );
    assert!((s - 0.65).abs() < 1e-12);
    assert_eq!(
        unsafe { swa_poi_across_sector_score(ptr::null(), ptr::null(), 0, &mut s) },
        SwaStatus::Undefined
    );
}

#[test]
fn rating_statistics() {
    let a = [1.0, 2.0, 3.0, 4.0, 5.0];
    let b = [2.0, 1.0, 4.0, 3.0, 5.0];
    let (mut rho, mut p) = (0.0, 0.0);
    assert_eq!(
        unsafe { swa_spearman(a.as_ptr(), b.as_ptr(), 5, &mut rho, &mut p) },
        SwaStatus::Ok
    );
    assert!((rho - 0.8).abs() < 1e-12);
    assert!(p > 0.0 && p < 1.0);
    let c = [3.0; 5];
    assert_eq!(
        unsafe { swa_spearman(a.as_ptr(), c.as_ptr(), 5, &mut rho, &mut p) },
        SwaStatus::Undefined
    );

    let mut d = SwaDescriptive {
        mean: 0.0,
        sd: 0.0,
        min: 0.0,
        max: 0.0,
        n: 0,
    };
    assert_eq!(unsafe { swa_descriptive_stats(a.as_ptr(), 5, &mut d) }, SwaStatus::Ok);
    assert_eq!((d.mean, d.min, d.max, d.n), (3.0, 1.0, 5.0, 5));
    assert!((d.sd - 2.5f64.sqrt()).abs() < 1e-12);

    let x = [1u8, 2, 3, 4, 5];
    let mut k = 0.0;
    assert_eq!(
        unsafe { swa_weighted_kappa(x.as_ptr(), x.as_ptr(), 5, 5, &mut k) },
        SwaStatus::Ok
    );
    assert_eq!(k, 1.0);
    let bad = [6u8, 1, 1, 1, 1];
    assert_eq!(
        unsafe { swa_weighted_kappa(bad.as_ptr(), x.as_ptr(), 5, 5, &mut k) },
        SwaStatus::InvalidArgument
    );
}

#[test]
fn network_and_trace_handles() {
    let text = CString::new(LINE).unwrap();
    let mut net = ptr::null_mut();
    assert_eq!(unsafe { swa_network_load(text.as_ptr(), &mut net) }, SwaStatus::Ok);
    assert_eq!(unsafe { swa_network_node_count(net) }, 4);
    assert_eq!(unsafe { swa_network_edge_count(net) }, 3);

    let mut origin = u32::MAX;
    assert_eq!(
        unsafe { swa_network_nearest_node(net, 30.7333, 76.7794, &mut origin) },
        SwaStatus::Ok
    );

    let mut trace = ptr::null_mut();
    assert_eq!(
        unsafe { swa_trace_paths(net, origin, 150.0, &mut trace) },
        SwaStatus::Ok
    );
    let n = unsafe { swa_trace_edge_count(trace) };
    assert_eq!(n, 2);
    let mut small = [0u32; 1];
    assert_eq!(
        unsafe { swa_trace_edges(trace, small.as_mut_ptr(), 1) },
        SwaStatus::BufferTooSmall
    );
    let mut edges = vec![0u32; n];
    assert_eq!(unsafe { swa_trace_edges(trace, edges.as_mut_ptr(), n) }, SwaStatus::Ok);
    assert!(edges.windows(2).all(|w| w[0] < w[1]));

    assert_eq!(
        unsafe { swa_trace_paths(net, 99, 150.0, &mut trace) },
        SwaStatus::NotFound
    );
    unsafe {
        swa_trace_free(trace);
        swa_network_free(net);
    }
}

#[test]
fn malformed_network_is_a_parse_error() {
    let text = CString::new("{not json").unwrap();
    let mut net = ptr::null_mut();
    assert_eq!(unsafe { swa_network_load(text.as_ptr(), &mut net) }, SwaStatus::Parse);
    assert!(net.is_null());
    assert!(last_error().is_some());
    let bytes = [0xffu8, 0xfe, 0];
    assert_eq!(
        unsafe { swa_network_load(bytes.as_ptr().cast(), &mut net) },
        SwaStatus::InvalidUtf8
    );
}

#[test]
fn prompt_depends_on_road_type() {
    let tax = swa_taxonomy_builtin();
    let mut prompt = ptr::null_mut();
    let road = CString::new("residential").unwrap();
    assert_eq!(
        unsafe { swa_build_prompt(tax, road.as_ptr(), &mut prompt) },
        SwaStatus::Ok
    );
    let residential = unsafe { CStr::from_ptr(prompt) }.to_str().unwrap().to_owned();
    unsafe { swa_string_free(prompt) };
    assert!(residential.contains("treat the road itself as the pedestrian path"));

    let road = CString::new("primary").unwrap();
    assert_eq!(
        unsafe { swa_build_prompt(tax, road.as_ptr(), &mut prompt) },
        SwaStatus::Ok
    );
    let primary = unsafe { CStr::from_ptr(prompt) }.to_str().unwrap().to_owned();
    unsafe { swa_string_free(prompt) };
    assert!(primary.contains("curb ramps"));

    let road = CString::new("motorway").unwrap();
    assert_eq!(
        unsafe { swa_build_prompt(tax, road.as_ptr(), &mut prompt) },
        SwaStatus::InvalidArgument
    );
    unsafe { swa_taxonomy_free(tax) };
}

#[test]
fn taxonomy_round_trip_and_rejection() {
    let builtin = sidewalk_audit::labels::Taxonomy::builtin().to_json().unwrap();
    let text = CString::new(builtin).unwrap();
    let mut tax = ptr::null_mut();
    assert_eq!(unsafe { swa_taxonomy_load(text.as_ptr(), &mut tax) }, SwaStatus::Ok);
    unsafe { swa_taxonomy_free(tax) };
    let bad = CString::new("[]").unwrap();
    assert_ne!(unsafe { swa_taxonomy_load(bad.as_ptr(), &mut tax) }, SwaStatus::Ok);
}
