use std::cell::RefCell;
use std::fs;
use std::path::Path;
use std::rc::Rc;
use std::time::Duration;

use ddtriage_core::vt::{HttpResponse, Transport, VtCache, VtClient, VtError};
use ddtriage_core::{Family, FamilyClassifier};

fn fixture_body() -> String {
    fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/vt/mirai_like.json")).unwrap()
}

const MIRAI_SHA256: &str = "9bfa7449e2bb5e975f058ea5b70213769a60d0887991373544303115f142a533";

/// Replays scripted responses and records every request.
#[derive(Clone, Default)]
struct Scripted {
    responses: Rc<RefCell<Vec<HttpResponse>>>,
    calls: Rc<RefCell<Vec<(String, String)>>>,
}

impl Scripted {
    fn new(responses: Vec<HttpResponse>) -> Self {
        Scripted { responses: Rc::new(RefCell::new(responses)), calls: Rc::default() }
    }

    fn calls(&self) -> usize {
        self.calls.borrow().len()
    }
}

impl Transport for Scripted {
    fn get(&self, url: &str, api_key: &str) -> Result<HttpResponse, VtError> {
        self.calls.borrow_mut().push((url.to_string(), api_key.to_string()));
        let mut r = self.responses.borrow_mut();
        if r.is_empty() {
            return Err(VtError::Network("script exhausted".into()));
        }
        Ok(r.remove(0))
    }
}

fn ok(body: String) -> HttpResponse {
    HttpResponse { status: 200, body, retry_after: None }
}

fn client(t: Scripted, cache: &Path, key: Option<&str>) -> (VtClient<Scripted>, Rc<RefCell<Vec<Duration>>>) {
    let slept = Rc::new(RefCell::new(Vec::new()));
    let log = slept.clone();
    let c = VtClient::new(t, VtCache::new(cache), key.map(str::to_string))
        .with_min_interval(Duration::from_millis(0))
        .with_sleeper(Box::new(move |d| log.borrow_mut().push(d)));
    (c, slept)
}

#[test]
fn second_lookup_is_served_from_cache() {
    let tmp = tempfile::tempdir().unwrap();
    let t = Scripted::new(vec![ok(fixture_body())]);
    let (mut c, _) = client(t.clone(), tmp.path(), Some("k3y"));
    let first = c.fetch_report(MIRAI_SHA256).unwrap();
    assert!(!first.from_cache && first.known);
    assert_eq!(t.calls(), 1);
    let (url, key) = t.calls.borrow()[0].clone();
    assert!(url.ends_with(MIRAI_SHA256));
    assert_eq!(key, "k3y");

    for _ in 0..5 {
        let again = c.fetch_report(&MIRAI_SHA256.to_uppercase()).unwrap();
        assert!(again.from_cache);
        assert_eq!(again.verdicts, first.verdicts);
    }
    assert_eq!(t.calls(), 1);
    assert_eq!(fs::read_to_string(c.cache().path(MIRAI_SHA256)).unwrap(), fixture_body());
}

#[test]
fn cache_needs_no_key() {
    let tmp = tempfile::tempdir().unwrap();
    VtCache::new(tmp.path()).write(MIRAI_SHA256, &fixture_body()).unwrap();
    let t = Scripted::new(vec![]);
    let (mut c, _) = client(t.clone(), tmp.path(), None);
    assert!(!c.has_api_key());
    let v = c.fetch_report(MIRAI_SHA256).unwrap();
    assert!(v.from_cache);
    assert_eq!(t.calls(), 0);
    let other = "0".repeat(64);
    assert!(matches!(c.fetch_report(&other), Err(VtError::MissingApiKey(_))));
    assert_eq!(t.calls(), 0);
}

#[test]
fn single_vendor_labels_the_family() {
    let tmp = tempfile::tempdir().unwrap();
    let t = Scripted::new(vec![ok(fixture_body())]);
    let (mut c, _) = client(t, tmp.path(), Some("k"));
    let v = c.fetch_report(MIRAI_SHA256).unwrap();
    assert_eq!(FamilyClassifier::default().classify(&v.verdicts), Family::new("MIRAI"));
    assert_eq!(FamilyClassifier::new("Microsoft").classify(&v.verdicts), Family::new("GAFGYT"));
    assert_eq!(FamilyClassifier::new("ClamAV").classify(&v.verdicts), Family::unknown());
}

#[test]
fn rate_limit_is_retried_then_cached() {
    let tmp = tempfile::tempdir().unwrap();
    let limited = HttpResponse { status: 429, body: String::new(), retry_after: Some(7) };
    let t = Scripted::new(vec![limited.clone(), limited, ok(fixture_body())]);
    let (mut c, slept) = client(t.clone(), tmp.path(), Some("k"));
    let c = &mut c;
    assert!(c.fetch_report(MIRAI_SHA256).unwrap().known);
    assert_eq!(t.calls(), 3);
    assert!(slept.borrow().iter().filter(|d| **d == Duration::from_secs(7)).count() >= 2);
    assert!(c.cache().contains(MIRAI_SHA256));
}

#[test]
fn persistent_rate_limit_gives_up_without_caching() {
    let tmp = tempfile::tempdir().unwrap();
    let limited = HttpResponse { status: 429, body: String::new(), retry_after: Some(1) };
    let t = Scripted::new(vec![limited; 5]);
    let (c, _) = client(t.clone(), tmp.path(), Some("k"));
    let mut c = c.with_max_retries(3);
    assert!(matches!(c.fetch_report(MIRAI_SHA256), Err(VtError::RateLimited(3))));
    assert_eq!(t.calls(), 3);
    assert!(!c.cache().contains(MIRAI_SHA256));
}

#[test]
fn not_found_is_cached_as_unknown() {
    let tmp = tempfile::tempdir().unwrap();
    let t = Scripted::new(vec![HttpResponse { status: 404, body: String::new(), retry_after: None }]);
    let (mut c, _) = client(t.clone(), tmp.path(), Some("k"));
    let sha = "ab".repeat(32);
    assert!(!c.fetch_report(&sha).unwrap().known);
    assert!(!c.fetch_report(&sha).unwrap().known);
    assert_eq!(t.calls(), 1);
}

#[test]
fn requests_are_paced() {
    let tmp = tempfile::tempdir().unwrap();
    let t = Scripted::new(vec![ok(fixture_body()), ok(fixture_body())]);
    let (c, slept) = client(t, tmp.path(), Some("k"));
    let mut c = c.with_min_interval(Duration::from_secs(15));
    c.fetch_report(MIRAI_SHA256).unwrap();
    c.fetch_report(&"cd".repeat(32)).unwrap();
    let waits = slept.borrow();
    assert_eq!(waits.len(), 1);
    assert!(waits[0] > Duration::from_secs(14) && waits[0] <= Duration::from_secs(15));
}

#[test]
fn malformed_hashes_never_reach_the_network() {
    let tmp = tempfile::tempdir().unwrap();
    let t = Scripted::new(vec![]);
    let (mut c, _) = client(t.clone(), tmp.path(), Some("k"));
    for bad in ["", "xyz", &"g".repeat(64), &"a".repeat(63), "../../etc/passwd"] {
        assert!(matches!(c.fetch_report(bad), Err(VtError::BadHash(_))));
    }
    assert_eq!(t.calls(), 0);
}
