//! Curve lookup by LMFDB label: embedded table first, then a file cache, then
//! the public LMFDB API.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

const API_URL: &str = "https://www.lmfdb.org/api/ec_curvedata/";
const CACHE_ENV: &str = "CM_ADELIC_CACHE";

#[derive(Debug)]
pub enum LookupError {
    BadLabel(String),
    Unavailable(String),
    Corrupt(String),
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheEntry {
    label: String,
    ainvs: Vec<String>,
}

/// Accepts labels of the form `<conductor>.<class><number>`, e.g. `441.c2`.
pub fn is_valid_label(label: &str) -> bool {
    let Some((cond, rest)) = label.split_once('.') else {
        return false;
    };
    let letters = rest.chars().take_while(|c| c.is_ascii_lowercase()).count();
    let (class, number) = rest.split_at(letters);
    !cond.is_empty()
        && cond.chars().all(|c| c.is_ascii_digit())
        && !class.is_empty()
        && !number.is_empty()
        && number.chars().all(|c| c.is_ascii_digit())
}

pub fn cache_dir(explicit: Option<&Path>) -> Option<PathBuf> {
    if let Some(p) = explicit {
        return Some(p.to_path_buf());
    }
    if let Some(p) = std::env::var_os(CACHE_ENV).filter(|p| !p.is_empty()) {
        return Some(PathBuf::from(p));
    }
    dirs::cache_dir().map(|d| d.join("cm-adelic"))
}

fn cache_path(dir: &Path, label: &str) -> PathBuf {
    dir.join(format!("{label}.json"))
}

fn read_cache(dir: &Path, label: &str) -> Result<Option<Vec<String>>, LookupError> {
    let path = cache_path(dir, label);
    let text = match fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(LookupError::Corrupt(format!("{}: {e}", path.display()))),
    };
    let entry: CacheEntry =
        serde_json::from_str(&text).map_err(|e| LookupError::Corrupt(format!("{}: {e}", path.display())))?;
    if entry.label != label || entry.ainvs.len() != 5 {
        return Err(LookupError::Corrupt(format!("{}: entry does not describe {label}", path.display())));
    }
    Ok(Some(entry.ainvs))
}

/// Write-then-rename so concurrent readers never observe a partial file.
fn write_cache(dir: &Path, label: &str, ainvs: &[String]) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let entry = CacheEntry { label: label.to_string(), ainvs: ainvs.to_vec() };
    let tmp = dir.join(format!(".{label}.json.{}.tmp", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(serde_json::to_string_pretty(&entry)?.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, cache_path(dir, label))
}

fn fetch(label: &str) -> Result<Vec<String>, LookupError> {
    let agent = ureq::AgentBuilder::new().timeout(Duration::from_secs(20)).build();
    let response = agent
        .get(API_URL)
        .query("lmfdb_label", label)
        .query("_fields", "ainvs")
        .query("_format", "json")
        .call()
        .map_err(|e| LookupError::Unavailable(format!("LMFDB request failed: {e}")))?;
    let body: serde_json::Value =
        response.into_json().map_err(|e| LookupError::Unavailable(format!("LMFDB response unreadable: {e}")))?;
    parse_api_response(&body, label)
}

/// Extract the a-invariants from an `ec_curvedata` API response.
pub fn parse_api_response(body: &serde_json::Value, label: &str) -> Result<Vec<String>, LookupError> {
    let record = body
        .get("data")
        .and_then(|d| d.as_array())
        .and_then(|d| d.first())
        .ok_or_else(|| LookupError::Unavailable(format!("LMFDB has no curve labelled {label}")))?;
    let ainvs = record
        .get("ainvs")
        .and_then(|a| a.as_array())
        .ok_or_else(|| LookupError::Unavailable("LMFDB record has no ainvs field".into()))?;
    let out: Vec<String> = ainvs
        .iter()
        .map(|v| match v {
            serde_json::Value::Number(n) => Some(n.to_string()),
            serde_json::Value::String(s) => Some(s.clone()),
            _ => None,
        })
        .collect::<Option<_>>()
        .ok_or_else(|| LookupError::Unavailable("LMFDB ainvs are not integers".into()))?;
    if out.len() != 5 {
        return Err(LookupError::Unavailable(format!("LMFDB returned {} a-invariants", out.len())));
    }
    Ok(out)
}

/// a-invariants for `label` from the cache or, unless `offline`, from LMFDB.
pub fn lookup(label: &str, cache: Option<&Path>, offline: bool) -> Result<Vec<String>, LookupError> {
    if !is_valid_label(label) {
        return Err(LookupError::BadLabel(label.to_string()));
    }
    let dir = cache_dir(cache);
    if let Some(dir) = &dir {
        if let Some(ainvs) = read_cache(dir, label)? {
            return Ok(ainvs);
        }
    }
    if offline {
        return Err(LookupError::Unavailable(format!("{label} is not cached and the network is disabled")));
    }
    let ainvs = fetch(label)?;
    if let Some(dir) = &dir {
        if let Err(e) = write_cache(dir, label, &ainvs) {
            eprintln!("warning: could not cache {label}: {e}");
        }
    }
    Ok(ainvs)
}
