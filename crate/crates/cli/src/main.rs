use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use cyci::classify::{count, ClassifyOptions, MuBound};
use cyci::dataset::{format_csv, merge_shards, read_dataset, run_shard, RunParams, ShardSpec, CSV_HEADER};
use cyci::maxcodim;
use cyci::palp::{distinct_per_codim, export_palp, import_hodge, new_pairs, parse_pair_list, scatter_table};
use cyci::tables::reference_count;

#[derive(Parser)]
#[command(
    name = "cyci",
    version,
    about = "Classify Calabi-Yau complete intersections in fake weighted projective spaces"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Lines,
    Csv,
    Palp,
}

#[derive(Subcommand)]
enum Cmd {
    /// Enumerate all families of dimension d and codimension s into a dataset.
    Classify {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        codim: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "lines")]
        format: Format,
        /// Largest torsion order: `auto` (sum of the weights), `<k>x` or a number.
        #[arg(long, default_value = "auto")]
        mu_max: MuBound,
        /// Run only shard i of m (weight pairs with index ≡ i mod m).
        #[arg(long)]
        shard: Option<ShardSpec>,
        /// Continue from the last checkpoint in --out.
        #[arg(long)]
        resume: bool,
    },
    /// Merge completed shard files into dataset.txt and manifest.txt.
    Merge {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        codim: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        shards: usize,
        #[arg(long, default_value = "auto")]
        mu_max: MuBound,
    },
    /// Print the number of families of dimension d and codimension s.
    Count {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        codim: usize,
        #[arg(long, default_value = "auto")]
        mu_max: MuBound,
    },
    /// Compare counts with the reference table, one line per cell.
    Verify {
        /// A dimension `d` or range `a..b` (inclusive).
        #[arg(long, default_value = "1..2")]
        dim: String,
        /// A codimension or range; defaults to every nonzero cell.
        #[arg(long)]
        codim: Option<String>,
        #[arg(long, default_value = "auto")]
        mu_max: MuBound,
        /// Reference table with lines `d s count`, replacing the built-in one.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Orbits of spanning point multisets for maximal codimension.
    Maxcodim {
        #[arg(long)]
        dim: usize,
        /// Also print each orbit's degree matrix and partition.
        #[arg(long)]
        matrices: bool,
    },
    /// Convert a dataset into weight-system lines for the external tool.
    ExportPalp {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Where records the tool cannot read go (default: <out>.side).
        #[arg(long)]
        side: Option<PathBuf>,
    },
    /// Aggregate Hodge pairs computed externally.
    ImportHodge {
        #[arg(long)]
        input: PathBuf,
        /// Codimension for inputs in the external tool's own output format.
        #[arg(long)]
        codim: Option<usize>,
        /// Hypersurface Hodge pairs (`h11 h21` per line) for the new-pairs report.
        #[arg(long)]
        hypersurface: Option<PathBuf>,
        /// Write the scatter table here.
        #[arg(long)]
        scatter: Option<PathBuf>,
    },
}

fn parse_range(s: &str) -> Result<(usize, usize)> {
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (a.trim().parse()?, b.trim().parse()?),
        None => {
            let v = s.trim().parse()?;
            (v, v)
        }
    };
    if a == 0 || a > b {
        bail!("invalid range {s:?}");
    }
    Ok((a, b))
}

fn write_converted(out: &std::path::Path, format: Format) -> Result<()> {
    let records = read_dataset(&out.join("dataset.txt"))?;
    match format {
        Format::Lines => {}
        Format::Csv => {
            let mut s = format!("{CSV_HEADER}\n");
            for r in &records {
                s.push_str(&format_csv(r));
                s.push('\n');
            }
            fs::write(out.join("dataset.csv"), s)?;
        }
        Format::Palp => {
            let e = export_palp(&records);
            fs::write(out.join("dataset.palp"), e.lines.iter().map(|l| format!("{l}\n")).collect::<String>())?;
            fs::write(out.join("dataset.palp.side"), e.side.iter().map(|l| format!("{l}\n")).collect::<String>())?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().context("thread pool")?;
    }
    match cli.cmd {
        Cmd::Classify { dim, codim, out, format, mu_max, shard, resume } => {
            let shard = shard.unwrap_or(ShardSpec::WHOLE);
            let params = RunParams { d: dim, s: codim, mu_bound: mu_max, shard };
            let summary = run_shard(&out, &params, resume, None)?.expect("run to completion");
            println!("shard {shard}: {} weight pairs, {} records", summary.weight_pairs, summary.records);
            if shard.count == 1 {
                let m = merge_shards(&out, &params)?;
                write_converted(&out, format)?;
                println!("dataset: {} records, sha256 {}", m.records, m.sha256);
            }
        }
        Cmd::Merge { dim, codim, out, shards, mu_max } => {
            let params = RunParams { d: dim, s: codim, mu_bound: mu_max, shard: ShardSpec::new(0, shards)? };
            let m = merge_shards(&out, &params)?;
            println!("dataset: {} records, sha256 {}", m.records, m.sha256);
        }
        Cmd::Count { dim, codim, mu_max } => {
            let c = if codim > dim + 1 { 0 } else { count(dim, codim, &ClassifyOptions { mu_bound: mu_max })? };
            println!("{c}");
        }
        Cmd::Verify { dim, codim, mu_max, table } => {
            let (d0, d1) = parse_range(&dim)?;
            let custom: Option<Vec<(usize, usize, u64)>> = match table {
                None => None,
                Some(p) => {
                    let text = fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
                    let mut v = Vec::new();
                    for (i, l) in text.lines().enumerate() {
                        let t = l.trim();
                        if t.is_empty() || t.starts_with('#') {
                            continue;
                        }
                        let n: Vec<u64> = t
                            .split_whitespace()
                            .map(str::parse)
                            .collect::<Result<_, _>>()
                            .with_context(|| format!("{}:{}", p.display(), i + 1))?;
                        if n.len() != 3 {
                            bail!("{}:{}: expected `d s count`", p.display(), i + 1);
                        }
                        v.push((n[0] as usize, n[1] as usize, n[2]));
                    }
                    Some(v)
                }
            };
            let expected = |d: usize, s: usize| match &custom {
                Some(v) => v.iter().find(|e| e.0 == d && e.1 == s).map(|e| e.2),
                None => reference_count(d, s),
            };
            let opts = ClassifyOptions { mu_bound: mu_max };
            let mut ok = true;
            for d in d0..=d1 {
                let (s0, s1) = match &codim {
                    Some(c) => parse_range(c)?,
                    None => (1, d + 1),
                };
                for s in s0..=s1 {
                    let Some(want) = expected(d, s) else {
                        println!("SKIP d={d} s={s}: no reference value");
                        continue;
                    };
                    let got = if s > d + 1 { 0 } else { count(d, s, &opts)? };
                    let tag = if got == want { "PASS" } else { "FAIL" };
                    ok &= got == want;
                    println!("{tag} d={d} s={s}: computed {got}, expected {want}");
                }
            }
            return Ok(ok);
        }
        Cmd::Maxcodim { dim, matrices } => {
            let (per, total) = maxcodim::count(dim)?;
            for (r, c) in per.iter().enumerate() {
                println!("r={r}: {c}");
            }
            println!("total: {total}");
            if matrices {
                for r in 0..=dim {
                    for m in maxcodim::orbits(dim, r) {
                        let (q, p) = maxcodim::to_degree_matrix(&m)?;
                        println!("{q}  {p}");
                    }
                }
            }
        }
        Cmd::ExportPalp { input, out, side } => {
            let records = read_dataset(&input)?;
            let e = export_palp(&records);
            let side = side.unwrap_or_else(|| {
                let mut s = out.clone().into_os_string();
                s.push(".side");
                PathBuf::from(s)
            });
            fs::write(&out, e.lines.iter().map(|l| format!("{l}\n")).collect::<String>())?;
            fs::write(&side, e.side.iter().map(|l| format!("{l}\n")).collect::<String>())?;
            println!("{} lines, {} to side file", e.lines.len(), e.side.len());
        }
        Cmd::ImportHodge { input, codim, hypersurface, scatter } => {
            let text = fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
            let entries = import_hodge(&text, codim)?;
            for (c, pairs) in distinct_per_codim(&entries) {
                println!("codim {c}: {} distinct pairs", pairs.len());
            }
            if let Some(h) = hypersurface {
                let hyp =
                    parse_pair_list(&fs::read_to_string(&h).with_context(|| format!("reading {}", h.display()))?)?;
                let new = new_pairs(&entries, &hyp);
                println!("new pairs: {}", new.len());
                for (p, cs) in new {
                    let cs: Vec<String> = cs.iter().map(usize::to_string).collect();
                    println!("({},{}) {}", p.h11, p.h21, cs.join(","));
                }
            }
            if let Some(s) = scatter {
                fs::write(s, scatter_table(&entries))?;
            }
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
