//! Bridge to the external PALP tools: export of records as weight-system
//! lines and import of Hodge numbers computed from them.
//!
//! Export grammar, one record per line:
//!
//! ```text
//! D_1 … D_s w_0 … w_n [/Z<μ>: e_0 … e_n]…
//! ```
//!
//! Block degrees come first, then the weights; torsion rows follow in the
//! quotient notation. Lines with `s ≥ 2` and torsion are written to a side
//! file as dataset lines instead.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use crate::classify::CyciRecord;
use crate::dataset::format_record;
use crate::error::{Error, Result};

/// Environment variable naming the PALP executable used for Hodge numbers.
pub const PALP_ENV: &str = "CYCI_PALP_NEF";
/// Extra arguments for that executable, whitespace separated.
pub const PALP_ARGS_ENV: &str = "CYCI_PALP_ARGS";

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PalpExport {
    pub lines: Vec<String>,
    pub side: Vec<String>,
}

/// The export line of a record, or `None` if it belongs in the side file.
pub fn export_line(r: &CyciRecord) -> Option<String> {
    let q = &r.matrix;
    if r.s >= 2 && !q.torsion_rows().is_empty() {
        return None;
    }
    let mut parts: Vec<String> = r.degrees.iter().map(u64::to_string).collect();
    parts.extend(q.weights().as_slice().iter().map(u64::to_string));
    let mut line = parts.join(" ");
    for row in q.torsion_rows() {
        let e: Vec<String> = row.entries().iter().map(u64::to_string).collect();
        line.push_str(&format!(" /Z{}: {}", row.order(), e.join(" ")));
    }
    Some(line)
}

pub fn export_palp(records: &[CyciRecord]) -> PalpExport {
    let mut out = PalpExport::default();
    for r in records {
        match export_line(r) {
            Some(l) => out.lines.push(l),
            None => out.side.push(format_record(r)),
        }
    }
    out
}

/// Parsed export line: degrees, weights and torsion rows.
pub type PalpLine = (Vec<u64>, Vec<u64>, Vec<(u64, Vec<u64>)>);

/// Parses an export line with `s` leading degrees.
pub fn parse_export_line(line: &str, s: usize) -> Result<PalpLine> {
    let err = |m: &str| Error::Parse { line: 0, msg: format!("{m}: {line:?}") };
    let mut chunks = line.split("/Z");
    let head: Vec<u64> = chunks
        .next()
        .unwrap_or("")
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| err("bad integer")))
        .collect::<Result<_>>()?;
    if head.len() <= s {
        return Err(err("too few entries"));
    }
    let (degrees, weights) = head.split_at(s);
    let mut torsion = Vec::new();
    for c in chunks {
        let (mu, rest) = c.split_once(':').ok_or_else(|| err("missing ':' in quotient"))?;
        let mu: u64 = mu.trim().parse().map_err(|_| err("bad order"))?;
        let e: Vec<u64> =
            rest.split_whitespace().map(|t| t.parse().map_err(|_| err("bad entry"))).collect::<Result<_>>()?;
        if e.len() != weights.len() {
            return Err(err("quotient length differs from weights"));
        }
        torsion.push((mu, e));
    }
    Ok((degrees.to_vec(), weights.to_vec(), torsion))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HodgePair {
    pub h11: u32,
    pub h21: u32,
}

fn palp_pair(s: &str) -> Option<HodgePair> {
    let rest = &s[s.find("H:")? + 2..];
    let nums: Vec<u32> = rest
        .split(|c: char| !c.is_ascii_digit())
        .filter(|t| !t.is_empty())
        .take(2)
        .filter_map(|t| t.parse().ok())
        .collect();
    (nums.len() == 2).then(|| HodgePair { h11: nums[0], h21: nums[1] })
}

/// Parses Hodge data. Accepted lines: `codim h11 h21`, or any line with a
/// PALP-style `H:h11,h21` field (then `codim` must be supplied). Blank lines
/// and `#` comments are skipped.
pub fn import_hodge(text: &str, codim: Option<usize>) -> Result<Vec<(usize, HodgePair)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let err = |m: &str| Error::Parse { line: i + 1, msg: format!("{m}: {t:?}") };
        if t.contains("H:") {
            let p = palp_pair(t).ok_or_else(|| err("unreadable H: field"))?;
            let c = codim.ok_or_else(|| err("codimension unknown for PALP output"))?;
            out.push((c, p));
            continue;
        }
        let nums: Vec<u32> =
            t.split_whitespace().map(|x| x.parse().map_err(|_| err("bad integer"))).collect::<Result<_>>()?;
        if nums.len() != 3 {
            return Err(err("expected `codim h11 h21`"));
        }
        out.push((nums[0] as usize, HodgePair { h11: nums[1], h21: nums[2] }));
    }
    Ok(out)
}

/// A plain list of Hodge pairs, `h11 h21` per line (commas allowed).
pub fn parse_pair_list(text: &str) -> Result<BTreeSet<HodgePair>> {
    let mut out = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let nums: Vec<u32> = t
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|x| !x.is_empty())
            .map(|x| x.parse().map_err(|_| Error::Parse { line: i + 1, msg: format!("bad integer in {t:?}") }))
            .collect::<Result<_>>()?;
        if nums.len() != 2 {
            return Err(Error::Parse { line: i + 1, msg: format!("expected `h11 h21`: {t:?}") });
        }
        out.insert(HodgePair { h11: nums[0], h21: nums[1] });
    }
    Ok(out)
}

/// Distinct Hodge pairs per codimension.
pub fn distinct_per_codim(entries: &[(usize, HodgePair)]) -> BTreeMap<usize, BTreeSet<HodgePair>> {
    let mut m: BTreeMap<usize, BTreeSet<HodgePair>> = BTreeMap::new();
    for &(c, p) in entries {
        m.entry(c).or_default().insert(p);
    }
    m
}

/// Pairs from codimension at least 2 absent from `hypersurface`, with the
/// codimensions realizing them.
pub fn new_pairs(
    entries: &[(usize, HodgePair)],
    hypersurface: &BTreeSet<HodgePair>,
) -> BTreeMap<HodgePair, BTreeSet<usize>> {
    let mut m: BTreeMap<HodgePair, BTreeSet<usize>> = BTreeMap::new();
    for &(c, p) in entries {
        if c >= 2 && !hypersurface.contains(&p) {
            m.entry(p).or_default().insert(c);
        }
    }
    m
}

/// Plain scatter table: `h11 h21 codims` with codimensions comma separated.
pub fn scatter_table(entries: &[(usize, HodgePair)]) -> String {
    let mut m: BTreeMap<HodgePair, BTreeSet<usize>> = BTreeMap::new();
    for &(c, p) in entries {
        m.entry(p).or_default().insert(c);
    }
    let mut s = String::from("# h11 h21 codims\n");
    for (p, cs) in m {
        let cs: Vec<String> = cs.iter().map(usize::to_string).collect();
        s.push_str(&format!("{} {} {}\n", p.h11, p.h21, cs.join(",")));
    }
    s
}

/// The configured PALP executable, if any.
pub fn palp_binary() -> Option<PathBuf> {
    std::env::var_os(PALP_ENV).map(PathBuf::from).filter(|p| p.exists())
}

/// Feeds export lines to the external binary and collects the Hodge pairs it
/// reports, one per `H:` line of its output.
pub fn run_palp(binary: &Path, lines: &[String], codim: usize) -> Result<Vec<(usize, HodgePair)>> {
    let args: Vec<String> =
        std::env::var(PALP_ARGS_ENV).map(|a| a.split_whitespace().map(str::to_string).collect()).unwrap_or_default();
    let mut child =
        Command::new(binary).args(&args).stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped()).spawn()?;
    {
        let mut stdin = child.stdin.take().expect("piped stdin");
        for l in lines {
            writeln!(stdin, "{l}")?;
        }
    }
    let out = child.wait_with_output()?;
    if !out.status.success() {
        return Err(Error::Verification(format!("{} exited with {}", binary.display(), out.status)));
    }
    let text = String::from_utf8_lossy(&out.stdout);
    Ok(text.lines().filter_map(palp_pair).map(|p| (codim, p)).collect())
}
