//! Versioned line format for records, sharded runs with per-weight-pair
//! checkpoints, manifests with SHA-256 checksums, and shard merging.
//!
//! A dataset line looks like
//!
//! ```text
//! C1 3 2 | 2 | 1 1 1 1 1 1 | 0 0 0 1 1 1 | 0 1 2 ; 3 4 5 | 3 3 | 1
//! ```
//!
//! holding schema tag, `d`, `s`, torsion orders, weights, torsion rows
//! (`;`-separated), partition blocks, free block degrees and the number of
//! partitions sharing that multidegree. Empty lists are written as `-`.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Read, Seek, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::algebra::{DegreeMatrix, NefPartition, TorsionRow, WeightVector};
use crate::classify::{classify_weight_pair, ClassifyOptions, CyciRecord, MuBound};
use crate::error::{Error, Result};
use crate::weights::assemble_weight_pairs;

pub const SCHEMA: &str = "C1";
pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

fn join<T: ToString>(v: &[T]) -> String {
    if v.is_empty() {
        "-".to_string()
    } else {
        v.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
    }
}

fn join_groups<T: ToString>(v: &[Vec<T>]) -> String {
    if v.is_empty() {
        "-".to_string()
    } else {
        v.iter().map(|g| join(g)).collect::<Vec<_>>().join(" ; ")
    }
}

/// Serializes a record as one dataset line (no trailing newline).
pub fn format_record(r: &CyciRecord) -> String {
    let q = &r.matrix;
    let orders: Vec<u64> = q.torsion_rows().iter().map(TorsionRow::order).collect();
    let rows: Vec<Vec<u64>> = q.torsion_rows().iter().map(|t| t.entries().to_vec()).collect();
    format!(
        "{SCHEMA} {} {} | {} | {} | {} | {} | {} | {}",
        r.d,
        r.s,
        join(&orders),
        join(q.weights().as_slice()),
        join_groups(&rows),
        join_groups(r.partition.blocks()),
        join(&r.degrees),
        r.partition_count
    )
}

fn parse_list<T: FromStr>(field: &str) -> std::result::Result<Vec<T>, String> {
    let field = field.trim();
    if field == "-" {
        return Ok(Vec::new());
    }
    field.split_whitespace().map(|t| t.parse().map_err(|_| format!("bad integer {t:?}"))).collect()
}

fn parse_groups<T: FromStr>(field: &str) -> std::result::Result<Vec<Vec<T>>, String> {
    if field.trim() == "-" {
        return Ok(Vec::new());
    }
    field.split(';').map(parse_list).collect()
}

/// Parses one dataset line; `lineno` is used in error messages.
pub fn parse_record(line: &str, lineno: usize) -> Result<CyciRecord> {
    let err = |msg: String| Error::Parse { line: lineno, msg };
    let fields: Vec<&str> = line.split('|').collect();
    if fields.len() != 7 {
        return Err(err(format!("expected 7 fields, found {}", fields.len())));
    }
    let head: Vec<&str> = fields[0].split_whitespace().collect();
    if head.len() != 3 || head[0] != SCHEMA {
        return Err(err(format!("bad header {:?}", fields[0].trim())));
    }
    let d: usize = head[1].parse().map_err(|_| err("bad d".into()))?;
    let s: usize = head[2].parse().map_err(|_| err("bad s".into()))?;
    let orders: Vec<u64> = parse_list(fields[1]).map_err(err)?;
    let weights: Vec<u64> = parse_list(fields[2]).map_err(err)?;
    let rows: Vec<Vec<u64>> = parse_groups(fields[3]).map_err(err)?;
    let blocks: Vec<Vec<usize>> = parse_groups(fields[4]).map_err(err)?;
    let degrees: Vec<u64> = parse_list(fields[5]).map_err(err)?;
    let partition_count: usize = fields[6].trim().parse().map_err(|_| err("bad partition count".into()))?;
    if orders.len() != rows.len() {
        return Err(err(format!("{} orders but {} torsion rows", orders.len(), rows.len())));
    }
    let wrap = |e: Error| err(e.to_string());
    let torsion =
        orders.iter().zip(rows).map(|(&m, e)| TorsionRow::new(m, e)).collect::<Result<Vec<_>>>().map_err(wrap)?;
    let matrix = DegreeMatrix::new(WeightVector::new(weights).map_err(wrap)?, torsion).map_err(wrap)?;
    let partition = NefPartition::new(blocks).map_err(wrap)?;
    if partition.num_indices() != matrix.columns() || partition.num_blocks() != s || degrees.len() != s {
        return Err(err("partition or degrees do not match the matrix".into()));
    }
    Ok(CyciRecord { d, s, matrix, degrees, partition, partition_count })
}

/// Reads a whole dataset, checking that lines strictly increase.
pub fn read_dataset(path: &Path) -> Result<Vec<CyciRecord>> {
    let mut out: Vec<CyciRecord> = Vec::new();
    for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r = parse_record(&line, i + 1)?;
        if out.last().is_some_and(|p| *p >= r) {
            return Err(Error::Parse { line: i + 1, msg: "records out of order".into() });
        }
        out.push(r);
    }
    Ok(out)
}

/// CSV rendering: header plus one row per record.
pub const CSV_HEADER: &str = "d,s,orders,weights,torsion,partition,degrees,count";

pub fn format_csv(r: &CyciRecord) -> String {
    let line = format_record(r);
    let fields: Vec<&str> = line.split('|').map(str::trim).collect();
    format!("{},{},{},{},{},{},{},{}", r.d, r.s, fields[1], fields[2], fields[3], fields[4], fields[5], fields[6])
}

/// `i/m`: the shard taking weight pairs with index congruent to `i` mod `m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ShardSpec {
    pub index: usize,
    pub count: usize,
}

impl ShardSpec {
    pub const WHOLE: ShardSpec = ShardSpec { index: 0, count: 1 };

    pub fn new(index: usize, count: usize) -> Result<Self> {
        if count == 0 || index >= count {
            return Err(Error::Argument(format!("invalid shard {index}/{count}")));
        }
        Ok(ShardSpec { index, count })
    }

    pub fn file_stem(&self) -> String {
        format!("shard-{}-of-{}", self.index, self.count)
    }
}

impl FromStr for ShardSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s.split_once('/').ok_or_else(|| Error::Argument(format!("shard spec {s:?} is not i/m")))?;
        let parse =
            |x: &str| x.trim().parse::<usize>().map_err(|_| Error::Argument(format!("shard spec {s:?} is not i/m")));
        ShardSpec::new(parse(a)?, parse(b)?)
    }
}

impl fmt::Display for ShardSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.index, self.count)
    }
}

#[derive(Clone, Debug)]
pub struct RunParams {
    pub d: usize,
    pub s: usize,
    pub mu_bound: MuBound,
    pub shard: ShardSpec,
}

impl RunParams {
    fn describe(&self) -> String {
        format!("d={} s={} mu_max={} shard={} version={}", self.d, self.s, self.mu_bound, self.shard, CODE_VERSION)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShardSummary {
    pub file: PathBuf,
    pub weight_pairs: usize,
    pub records: u64,
    pub sha256: String,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut h = Sha256::new();
    let mut f = File::open(path)?;
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let k = f.read(&mut buf)?;
        if k == 0 {
            break;
        }
        h.update(&buf[..k]);
    }
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

/// Runs one shard into `dir`, writing `<stem>.txt`, a checkpoint and a shard
/// manifest. With `resume`, continues after the last completed weight pair.
/// `stop_after` ends the run early after that many newly finished pairs,
/// leaving a resumable checkpoint.
pub fn run_shard(
    dir: &Path,
    params: &RunParams,
    resume: bool,
    stop_after: Option<usize>,
) -> Result<Option<ShardSummary>> {
    if params.d == 0 || params.s == 0 {
        return Err(Error::Argument(format!("need d >= 1 and s >= 1, got d={}, s={}", params.d, params.s)));
    }
    fs::create_dir_all(dir)?;
    let stem = params.shard.file_stem();
    let data_path = dir.join(format!("{stem}.txt"));
    let ckpt_path = dir.join(format!("{stem}.ckpt"));
    let header = format!("params {}", params.describe());

    let all = if params.s > params.d + 1 { Vec::new() } else { assemble_weight_pairs(params.d + params.s, params.s)? };
    let mine: Vec<(usize, _)> =
        all.into_iter().enumerate().filter(|(i, _)| i % params.shard.count == params.shard.index).collect();

    let mut done_upto: Option<usize> = None;
    let mut offset = 0u64;
    let mut records = 0u64;
    if resume && ckpt_path.exists() {
        let text = fs::read_to_string(&ckpt_path)?;
        let mut lines = text.lines();
        if lines.next() != Some(header.as_str()) {
            return Err(Error::Checkpoint(format!("{} was written with different parameters", ckpt_path.display())));
        }
        for l in lines {
            let parts: Vec<&str> = l.split_whitespace().collect();
            let bad = || Error::Checkpoint(format!("malformed checkpoint line {l:?}"));
            if parts.len() != 4 || parts[0] != "done" {
                return Err(bad());
            }
            done_upto = Some(parts[1].parse().map_err(|_| bad())?);
            offset = parts[2].parse().map_err(|_| bad())?;
            records = parts[3].parse().map_err(|_| bad())?;
        }
    }
    let mut data = OpenOptions::new().create(true).write(true).truncate(false).open(&data_path)?;
    data.set_len(offset)?;
    data.seek(std::io::SeekFrom::Start(offset))?;
    let mut data = BufWriter::new(data);
    let mut ckpt = if done_upto.is_some() {
        OpenOptions::new().append(true).open(&ckpt_path)?
    } else {
        let mut f = File::create(&ckpt_path)?;
        writeln!(f, "{header}")?;
        f
    };

    let todo: Vec<&(usize, _)> = mine.iter().filter(|(i, _)| done_upto.is_none_or(|u| *i > u)).collect();
    let limit = stop_after.unwrap_or(usize::MAX).min(todo.len());
    let opts = ClassifyOptions { mu_bound: params.mu_bound };
    let chunk = (4 * rayon::current_num_threads()).max(1);
    for batch in todo[..limit].chunks(chunk) {
        let results: Vec<Result<Vec<CyciRecord>>> =
            batch.par_iter().map(|(_, p)| classify_weight_pair(p, &opts)).collect();
        for ((idx, _), res) in batch.iter().zip(results) {
            for r in res? {
                writeln!(data, "{}", format_record(&r))?;
                records += 1;
            }
            data.flush()?;
            offset = data.get_ref().stream_position()?;
            writeln!(ckpt, "done {idx} {offset} {records}")?;
            ckpt.flush()?;
        }
    }
    if limit < todo.len() {
        return Ok(None);
    }
    drop(data);
    let summary =
        ShardSummary { file: data_path.clone(), weight_pairs: mine.len(), records, sha256: sha256_file(&data_path)? };
    let mut m = File::create(dir.join(format!("{stem}.manifest")))?;
    writeln!(m, "# cyci shard manifest v1")?;
    writeln!(m, "{header}")?;
    writeln!(m, "weight_pairs={}", summary.weight_pairs)?;
    writeln!(m, "records={}", summary.records)?;
    writeln!(m, "file={} sha256={}", data_path.file_name().unwrap().to_string_lossy(), summary.sha256)?;
    Ok(Some(summary))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Manifest {
    pub records: u64,
    pub sha256: String,
    pub shards: Vec<ShardSummary>,
}

/// Merges the `m` sorted shard files in `dir` into `dataset.txt` and writes
/// `manifest.txt`. Fails if a shard is missing or records collide.
pub fn merge_shards(dir: &Path, params: &RunParams) -> Result<Manifest> {
    let m = params.shard.count;
    let mut readers = Vec::with_capacity(m);
    let mut shards = Vec::with_capacity(m);
    for i in 0..m {
        let spec = ShardSpec::new(i, m)?;
        let path = dir.join(format!("{}.txt", spec.file_stem()));
        let man = dir.join(format!("{}.manifest", spec.file_stem()));
        if !man.exists() {
            return Err(Error::Checkpoint(format!("shard {spec} is incomplete (no {})", man.display())));
        }
        let text = fs::read_to_string(&man)?;
        let field = |k: &str| {
            text.split_whitespace()
                .find_map(|t| t.strip_prefix(k))
                .map(str::to_string)
                .ok_or_else(|| Error::Checkpoint(format!("{} lacks {k}", man.display())))
        };
        let sha = field("sha256=")?;
        if sha256_file(&path)? != sha {
            return Err(Error::Checkpoint(format!("checksum mismatch for {}", path.display())));
        }
        let records: u64 = field("records=")?.parse().map_err(|_| Error::Checkpoint("bad record count".into()))?;
        let weight_pairs: usize =
            field("weight_pairs=")?.parse().map_err(|_| Error::Checkpoint("bad pair count".into()))?;
        shards.push(ShardSummary { file: path.clone(), weight_pairs, records, sha256: sha });
        readers.push(BufReader::new(File::open(&path)?).lines().enumerate());
    }
    let out_path = dir.join("dataset.txt");
    let mut out = BufWriter::new(File::create(&out_path)?);
    let mut heap = BinaryHeap::new();
    let next = |k: usize, readers: &mut Vec<_>| -> Result<Option<(CyciRecord, String, usize)>> {
        let it: &mut std::iter::Enumerate<std::io::Lines<BufReader<File>>> = &mut readers[k];
        match it.next() {
            None => Ok(None),
            Some((i, line)) => {
                let line = line?;
                Ok(Some((parse_record(&line, i + 1)?, line, k)))
            }
        }
    };
    for k in 0..m {
        if let Some(e) = next(k, &mut readers)? {
            heap.push(Reverse(e));
        }
    }
    let mut last: Option<CyciRecord> = None;
    let mut total = 0u64;
    while let Some(Reverse((rec, line, k))) = heap.pop() {
        if last.as_ref().is_some_and(|l| *l >= rec) {
            return Err(Error::Verification(format!("duplicate or unsorted record across shards: {line}")));
        }
        writeln!(out, "{line}")?;
        total += 1;
        last = Some(rec);
        if let Some(e) = next(k, &mut readers)? {
            heap.push(Reverse(e));
        }
    }
    out.flush()?;
    drop(out);
    let sha256 = sha256_file(&out_path)?;
    let mut f = File::create(dir.join("manifest.txt"))?;
    let whole = RunParams { shard: ShardSpec::new(0, m)?, ..params.clone() };
    writeln!(f, "# cyci run manifest v1")?;
    writeln!(f, "params {} shards={m}", whole.describe().replace(&format!(" shard=0/{m}"), ""))?;
    writeln!(f, "records={total}")?;
    writeln!(f, "file=dataset.txt sha256={sha256}")?;
    for (i, s) in shards.iter().enumerate() {
        writeln!(f, "shard {i}/{m} records={} sha256={}", s.records, s.sha256)?;
    }
    Ok(Manifest { records: total, sha256, shards })
}
