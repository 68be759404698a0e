//! Access traces and their text format.
//!
//! One access per line: `L <hex>` or `S <hex>`, optionally followed by
//! ` D<id>` for the issuing domain (default 1). `#` starts a comment.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cachecore::{AccessKind, Cache, CacheStats};
use crate::error::{Error, Result};
use crate::randfunc::SecurityDomain;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TraceEntry {
    pub kind: AccessKind,
    pub addr: u64,
    pub domain: SecurityDomain,
    /// Issue time in abstract cycles; only ordering is simulated.
    pub at: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub entries: Vec<TraceEntry>,
    /// Length of the program lifetime the entries are spread over.
    pub span: u64,
}

impl Trace {
    /// Entries issued back to back, one per cycle.
    pub fn sequential(items: impl IntoIterator<Item = (AccessKind, u64, SecurityDomain)>) -> Self {
        let entries: Vec<TraceEntry> = items
            .into_iter()
            .enumerate()
            .map(|(i, (kind, addr, domain))| TraceEntry { kind, addr, domain, at: i as u64 })
            .collect();
        let span = entries.len() as u64;
        Trace { entries, span }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn replay(&self, cache: &mut Cache) {
        for e in &self.entries {
            cache.access(e.addr, e.domain, e.kind);
        }
    }

    /// Writes the text format read by [`parse_trace`].
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.entries.len() * 24);
        for e in &self.entries {
            let k = match e.kind {
                AccessKind::Load => 'L',
                AccessKind::Store => 'S',
            };
            out.push_str(&format!("{k} {:#x} D{}\n", e.addr, e.domain.0));
        }
        out
    }
}

fn parse_line(line: &str) -> std::result::Result<Option<(AccessKind, u64, SecurityDomain)>, String> {
    let body = line.split('#').next().unwrap_or("").trim();
    if body.is_empty() {
        return Ok(None);
    }
    let mut parts = body.split_whitespace();
    let kind = match parts.next() {
        Some("L") | Some("l") => AccessKind::Load,
        Some("S") | Some("s") => AccessKind::Store,
        Some(other) => return Err(format!("unknown access kind {other:?}")),
        None => unreachable!(),
    };
    let addr_s = parts.next().ok_or("missing address")?;
    let digits = addr_s.trim_start_matches("0x").trim_start_matches("0X");
    let addr = u64::from_str_radix(digits, 16).map_err(|e| format!("bad address {addr_s:?}: {e}"))?;
    let domain = match parts.next() {
        None => SecurityDomain::VICTIM,
        Some(d) => {
            let id = d
                .strip_prefix('D')
                .or_else(|| d.strip_prefix('d'))
                .ok_or_else(|| format!("bad domain {d:?}, expected D<id>"))?;
            SecurityDomain(id.parse().map_err(|e| format!("bad domain {d:?}: {e}"))?)
        }
    };
    if let Some(extra) = parts.next() {
        return Err(format!("unexpected trailing field {extra:?}"));
    }
    Ok(Some((kind, addr, domain)))
}

/// Parses trace text; `path` is only used in error messages.
pub fn parse_trace(text: &str, path: &Path) -> Result<Trace> {
    let mut items = Vec::new();
    for (i, line) in text.lines().enumerate() {
        match parse_line(line) {
            Ok(Some(item)) => items.push(item),
            Ok(None) => {}
            Err(msg) => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    msg,
                })
            }
        }
    }
    if items.is_empty() {
        return Err(Error::EmptyTrace(path.to_path_buf()));
    }
    Ok(Trace::sequential(items))
}

pub fn load_trace(path: impl AsRef<Path>) -> Result<Trace> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trace(&text, path)
}

/// Replays `trace` on a copy of `snapshot` and returns the counters of
/// the replay alone.
pub fn replay_stats(snapshot: &Cache, trace: &Trace) -> CacheStats {
    let mut cache = snapshot.clone();
    cache.reset_stats();
    trace.replay(&mut cache);
    cache.stats().clone()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("t.trace")
    }

    #[test]
    fn two_entries() {
        let t = parse_trace("L 0x1000\nS 0x2000", p()).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.entries[1].kind, AccessKind::Store);
        assert_eq!(t.entries[1].addr, 0x2000);
        assert_eq!(t.entries[0].domain, SecurityDomain::VICTIM);
    }

    #[test]
    fn comment_only_is_empty() {
        assert!(matches!(parse_trace("# comment", p()), Err(Error::EmptyTrace(_))));
    }

    #[test]
    fn bad_kind_reports_line() {
        match parse_trace("X 0x1", p()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("{other:?}"),
        }
        match parse_trace("L 0x1\n\nL zz", p()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn domain_suffix_and_inline_comment() {
        let t = parse_trace("L 40 D7 # hot\nS 0x80 d0", p()).unwrap();
        assert_eq!(t.entries[0].domain, SecurityDomain(7));
        assert_eq!(t.entries[0].addr, 0x40);
        assert_eq!(t.entries[1].domain, SecurityDomain(0));
        assert!(parse_trace("L 40 7", p()).is_err());
    }

    #[test]
    fn text_round_trip() {
        let t = parse_trace("L 0x40 D3\nS 0xffff0000 D0\nL 0x1", p()).unwrap();
        assert_eq!(parse_trace(&t.to_text(), p()).unwrap(), t);
    }
}
