//! Reputation-service client: cached file reports and single-vendor family
//! labels.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub const API_KEY_ENV: &str = "VT_API_KEY";
pub const DEFAULT_ENDPOINT: &str = "https://www.virustotal.com/api/v3/files";
pub const DEFAULT_VENDOR: &str = "Kaspersky";
pub const DEFAULT_FAMILIES: &[&str] = &["mirai", "gafgyt", "tsunami"];

#[derive(Debug, Error)]
pub enum VtError {
    #[error("no API key and no cached report for {0}")]
    MissingApiKey(String),
    #[error("rate limited after {0} attempts")]
    RateLimited(u32),
    #[error("network error: {0}")]
    Network(String),
    #[error("unexpected HTTP status {0}")]
    Http(u16),
    #[error("invalid response: {0}")]
    InvalidResponse(String),
    #[error("cache error: {0}")]
    Cache(#[from] io::Error),
    #[error("not a sha256 hex digest: {0}")]
    BadHash(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
    /// Seconds from a `Retry-After` header.
    pub retry_after: Option<u64>,
}

/// One GET request. Implementations do no caching or retrying.
pub trait Transport {
    fn get(&self, url: &str, api_key: &str) -> Result<HttpResponse, VtError>;
}

pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new(timeout: Duration) -> Result<Self, VtError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| VtError::Network(e.to_string()))?;
        Ok(HttpTransport { client })
    }
}

impl Transport for HttpTransport {
    fn get(&self, url: &str, api_key: &str) -> Result<HttpResponse, VtError> {
        let resp = self
            .client
            .get(url)
            .header("x-apikey", api_key)
            .header("accept", "application/json")
            .send()
            .map_err(|e| VtError::Network(e.to_string()))?;
        let status = resp.status().as_u16();
        let retry_after =
            resp.headers().get("retry-after").and_then(|v| v.to_str().ok()).and_then(|v| v.trim().parse().ok());
        let body = resp.text().map_err(|e| VtError::Network(e.to_string()))?;
        Ok(HttpResponse { status, body, retry_after })
    }
}

/// Directory of raw service responses, one `<sha256>.json` per sample.
#[derive(Debug, Clone)]
pub struct VtCache {
    dir: PathBuf,
}

impl VtCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        VtCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, sha256: &str) -> PathBuf {
        self.dir.join(format!("{sha256}.json"))
    }

    pub fn contains(&self, sha256: &str) -> bool {
        self.path(sha256).is_file()
    }

    pub fn read(&self, sha256: &str) -> io::Result<Option<(String, DateTime<Utc>)>> {
        let path = self.path(sha256);
        match fs::read_to_string(&path) {
            Ok(body) => {
                let when = fs::metadata(&path)?.modified().map(DateTime::<Utc>::from).unwrap_or_else(|_| Utc::now());
                Ok(Some((body, when)))
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e),
        }
    }

    pub fn write(&self, sha256: &str, body: &str) -> io::Result<()> {
        fs::create_dir_all(&self.dir)?;
        let tmp = self.dir.join(format!(".{sha256}.json.tmp"));
        fs::write(&tmp, body)?;
        fs::rename(tmp, self.path(sha256))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VendorVerdicts {
    pub sha256: String,
    /// Vendor name to detection string, for vendors that flagged the sample.
    pub verdicts: BTreeMap<String, String>,
    /// False when the service has never seen the sample.
    pub known: bool,
    pub fetched_at: String,
    pub from_cache: bool,
}

const NOT_FOUND_BODY: &str = r#"{"error":{"code":"NotFoundError","message":"not found"}}"#;

fn is_not_found(v: &Value) -> bool {
    v.pointer("/error/code").and_then(Value::as_str) == Some("NotFoundError")
        || v.get("response_code").and_then(Value::as_i64) == Some(0)
}

/// Vendor verdicts from a raw report, in either the current
/// (`data.attributes.last_analysis_results`) or the legacy (`scans`) shape.
/// Returns `None` for a not-found report.
pub fn parse_report(body: &str) -> Result<Option<BTreeMap<String, String>>, VtError> {
    let v: Value = serde_json::from_str(body).map_err(|e| VtError::InvalidResponse(e.to_string()))?;
    if is_not_found(&v) {
        return Ok(None);
    }
    let results = v
        .pointer("/data/attributes/last_analysis_results")
        .or_else(|| v.get("scans"))
        .and_then(Value::as_object)
        .ok_or_else(|| VtError::InvalidResponse("no analysis results".into()))?;
    let mut out = BTreeMap::new();
    for (vendor, entry) in results {
        if let Some(result) = entry.get("result").and_then(Value::as_str) {
            if !result.is_empty() {
                out.insert(vendor.clone(), result.to_string());
            }
        }
    }
    Ok(Some(out))
}

pub type Sleeper = Box<dyn FnMut(Duration)>;

/// Cache-first report fetcher with a minimum delay between requests.
pub struct VtClient<T: Transport> {
    transport: T,
    cache: VtCache,
    api_key: Option<String>,
    endpoint: String,
    min_interval: Duration,
    max_retries: u32,
    sleep: Sleeper,
    last_request: Option<Instant>,
}

impl<T: Transport> VtClient<T> {
    pub fn new(transport: T, cache: VtCache, api_key: Option<String>) -> Self {
        VtClient {
            transport,
            cache,
            api_key: api_key.filter(|k| !k.trim().is_empty()),
            endpoint: DEFAULT_ENDPOINT.to_string(),
            min_interval: Duration::from_secs(15),
            max_retries: 3,
            sleep: Box::new(std::thread::sleep),
            last_request: None,
        }
    }

    pub fn with_endpoint(mut self, endpoint: impl Into<String>) -> Self {
        self.endpoint = endpoint.into();
        self
    }

    pub fn with_min_interval(mut self, d: Duration) -> Self {
        self.min_interval = d;
        self
    }

    pub fn with_max_retries(mut self, n: u32) -> Self {
        self.max_retries = n.max(1);
        self
    }

    pub fn with_sleeper(mut self, sleep: Sleeper) -> Self {
        self.sleep = sleep;
        self
    }

    pub fn cache(&self) -> &VtCache {
        &self.cache
    }

    pub fn transport(&self) -> &T {
        &self.transport
    }

    pub fn has_api_key(&self) -> bool {
        self.api_key.is_some()
    }

    fn pace(&mut self) {
        if let Some(last) = self.last_request {
            let since = last.elapsed();
            if since < self.min_interval {
                (self.sleep)(self.min_interval - since);
            }
        }
        self.last_request = Some(Instant::now());
    }

    pub fn fetch_report(&mut self, sha256: &str) -> Result<VendorVerdicts, VtError> {
        let sha256 = sha256.to_ascii_lowercase();
        if sha256.len() != 64 || !sha256.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(VtError::BadHash(sha256));
        }
        if let Some((body, when)) = self.cache.read(&sha256)? {
            let parsed = parse_report(&body)?;
            return Ok(VendorVerdicts {
                known: parsed.is_some(),
                verdicts: parsed.unwrap_or_default(),
                sha256,
                fetched_at: when.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                from_cache: true,
            });
        }
        let key = self.api_key.clone().ok_or_else(|| VtError::MissingApiKey(sha256.clone()))?;
        let url = format!("{}/{}", self.endpoint.trim_end_matches('/'), sha256);
        let mut attempts = 0;
        let body = loop {
            attempts += 1;
            self.pace();
            let resp = self.transport.get(&url, &key)?;
            match resp.status {
                200 => break resp.body,
                404 => break if resp.body.trim().is_empty() { NOT_FOUND_BODY.to_string() } else { resp.body },
                429 | 503 if attempts < self.max_retries => {
                    let wait =
                        resp.retry_after.map_or(self.min_interval.max(Duration::from_secs(1)), Duration::from_secs);
                    (self.sleep)(wait);
                }
                429 => return Err(VtError::RateLimited(attempts)),
                s => return Err(VtError::Http(s)),
            }
        };
        let parsed = parse_report(&body)?;
        self.cache.write(&sha256, &body)?;
        Ok(VendorVerdicts {
            known: parsed.is_some(),
            verdicts: parsed.unwrap_or_default(),
            sha256,
            fetched_at: Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            from_cache: false,
        })
    }
}

/// Family label, upper case: one of the configured families, `OTHER` or
/// `UNKNOWN`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Family(String);

impl Family {
    pub const OTHER: &'static str = "OTHER";
    pub const UNKNOWN: &'static str = "UNKNOWN";

    pub fn new(name: &str) -> Self {
        Family(name.trim().to_ascii_uppercase())
    }

    pub fn other() -> Self {
        Family(Self::OTHER.into())
    }

    pub fn unknown() -> Self {
        Family(Self::UNKNOWN.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// A named DDoS family rather than OTHER or UNKNOWN.
    pub fn is_known_family(&self) -> bool {
        self.0 != Self::OTHER && self.0 != Self::UNKNOWN
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyClassifier {
    pub vendor: String,
    pub families: Vec<String>,
}

impl Default for FamilyClassifier {
    fn default() -> Self {
        FamilyClassifier {
            vendor: DEFAULT_VENDOR.to_string(),
            families: DEFAULT_FAMILIES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl FamilyClassifier {
    pub fn new(vendor: impl Into<String>) -> Self {
        FamilyClassifier { vendor: vendor.into(), ..Default::default() }
    }

    /// Label from the chosen vendor's detection string only.
    pub fn classify(&self, verdicts: &BTreeMap<String, String>) -> Family {
        let detection =
            verdicts.iter().find(|(v, _)| v.eq_ignore_ascii_case(&self.vendor)).map(|(_, d)| d.to_ascii_lowercase());
        let Some(detection) = detection.filter(|d| !d.trim().is_empty()) else {
            return Family::unknown();
        };
        self.families
            .iter()
            .find(|f| detection.contains(&f.to_ascii_lowercase()))
            .map(|f| Family::new(f))
            .unwrap_or_else(Family::other)
    }
}

pub fn classify_family(verdicts: &BTreeMap<String, String>, vendor: &str) -> Family {
    FamilyClassifier::new(vendor).classify(verdicts)
}
