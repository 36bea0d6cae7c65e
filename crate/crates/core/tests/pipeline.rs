//! Whole-pipeline properties of classification output and datasets.

use std::collections::BTreeSet;
use std::fs;

use cyci::algebra::{is_almost_free, is_nef_partition, multidegree, picard_generator};
use cyci::classify::{classify, classify_weight_pair, ClassifyOptions, MuBound};
use cyci::dataset::{format_record, merge_shards, parse_record, read_dataset, run_shard, RunParams, ShardSpec};
use cyci::iso::canonical_degree_matrix;
use cyci::maxcodim::{orbits, to_degree_matrix};
use cyci::weights::assemble_weight_pairs;
use cyci::{DegreeMatrix, Error};

#[test]
fn every_record_revalidates() {
    for d in 1..=3 {
        for s in 1..=d + 1 {
            let recs = classify(d, s, &ClassifyOptions::default()).unwrap();
            for w in recs.windows(2) {
                assert!(w[0] < w[1], "records not strictly sorted");
            }
            for r in &recs {
                let q = &r.matrix;
                assert_eq!(q.dim(), d + s);
                assert_eq!(r.partition.num_blocks(), s);
                assert_eq!(r.degrees.len(), s);
                assert!(r.partition_count >= 1);
                assert!(is_almost_free(q).unwrap());
                assert!(is_nef_partition(q, &r.partition).unwrap());
                assert!(r.partition.blocks().iter().all(|b| b.len() >= 2));
                assert_eq!(canonical_degree_matrix(q).unwrap().0, *q);
                let lm = picard_generator(q).unwrap();
                assert!(r.degrees.iter().all(|&x| x % lm == 0));
                let md = multidegree(q, &r.partition).unwrap();
                assert!(md.iter().all(|c| c.torsion.iter().all(|&t| t == 0)));
                let free: Vec<u64> = md.iter().map(|c| c.free as u64).collect();
                assert_eq!(free, r.degrees);
            }
        }
    }
}

#[test]
fn large_weights_keep_kernel_entries_small() {
    let pairs = assemble_weight_pairs(5, 1).unwrap();
    let pair = pairs.iter().find(|p| p.weights.as_slice() == [1, 1, 2, 3, 14, 21]).unwrap();
    let recs = classify_weight_pair(pair, &ClassifyOptions::default()).unwrap();
    assert!(!recs.is_empty());
    for r in &recs {
        assert!(is_almost_free(&r.matrix).unwrap());
        assert_eq!(canonical_degree_matrix(&r.matrix).unwrap().0, r.matrix);
    }
}

#[test]
fn zero_cells_are_empty() {
    for d in 1..=3 {
        for s in d + 2..=d + 3 {
            assert!(classify(d, s, &ClassifyOptions::default()).unwrap().is_empty());
        }
    }
    assert!(matches!(classify(0, 1, &ClassifyOptions::default()), Err(Error::Argument(_))));
    assert_eq!("auto".parse::<MuBound>().unwrap(), MuBound::Auto);
    assert_eq!("2x".parse::<MuBound>().unwrap(), MuBound::Scaled(2));
    assert_eq!("40".parse::<MuBound>().unwrap(), MuBound::Fixed(40));
    assert!("x2".parse::<MuBound>().is_err());
}

#[test]
fn maximal_codimension_matches_orbits() {
    for d in 1..=4 {
        let recs = classify(d, d + 1, &ClassifyOptions::default()).unwrap();
        for r in &recs {
            assert!(r.matrix.weights().as_slice().iter().all(|&w| w == 1));
            assert!(r.matrix.torsion_rows().iter().all(|t| t.order() == 2));
        }
        let from_classify: BTreeSet<DegreeMatrix> = recs.into_iter().map(|r| r.matrix).collect();
        let mut from_orbits = BTreeSet::new();
        for r in 0..=d {
            for m in orbits(d, r) {
                let (q, p) = to_degree_matrix(&m).unwrap();
                assert!(is_almost_free(&q).unwrap());
                assert!(is_nef_partition(&q, &p).unwrap());
                from_orbits.insert(canonical_degree_matrix(&q).unwrap().0);
            }
        }
        assert_eq!(from_classify, from_orbits, "d={d}");
    }
}

#[test]
fn doubling_mu_max_changes_nothing_up_to_dimension_two() {
    for d in 1..=2 {
        for s in 1..=d + 1 {
            let a = classify(d, s, &ClassifyOptions::default()).unwrap();
            let b = classify(d, s, &ClassifyOptions { mu_bound: MuBound::Scaled(2) }).unwrap();
            assert_eq!(a, b);
        }
    }
}

#[test]
fn dataset_round_trip_through_dimension_three() {
    for d in 1..=3 {
        for s in 1..=d + 1 {
            for r in classify(d, s, &ClassifyOptions::default()).unwrap() {
                assert_eq!(parse_record(&format_record(&r), 1).unwrap(), r);
            }
        }
    }
}

fn params(shard: ShardSpec) -> RunParams {
    RunParams { d: 3, s: 1, mu_bound: MuBound::Auto, shard }
}

#[test]
fn shards_merge_to_the_single_shard_dataset() {
    let tmp = tempfile::tempdir().unwrap();
    let mut reference = None;
    for m in [1usize, 2, 8] {
        let dir = tmp.path().join(format!("m{m}"));
        for i in 0..m {
            run_shard(&dir, &params(ShardSpec::new(i, m).unwrap()), false, None).unwrap().unwrap();
        }
        let man = merge_shards(&dir, &params(ShardSpec::new(0, m).unwrap())).unwrap();
        assert_eq!(man.records, 1561);
        let bytes = fs::read(dir.join("dataset.txt")).unwrap();
        match &reference {
            None => reference = Some(bytes),
            Some(r) => assert!(*r == bytes, "m={m} differs"),
        }
        // concatenating and sorting shard files gives the same dataset
        let mut lines: Vec<_> = (0..m)
            .flat_map(|i| {
                let p = dir.join(format!("{}.txt", ShardSpec::new(i, m).unwrap().file_stem()));
                fs::read_to_string(p).unwrap().lines().map(|l| parse_record(l, 0).unwrap()).collect::<Vec<_>>()
            })
            .collect();
        lines.sort();
        assert_eq!(lines, read_dataset(&dir.join("dataset.txt")).unwrap());
    }
}

#[test]
fn resumed_run_reproduces_checksums() {
    let tmp = tempfile::tempdir().unwrap();
    let p = params(ShardSpec::WHOLE);
    let full = run_shard(&tmp.path().join("full"), &p, false, None).unwrap().unwrap();
    for stop in [1usize, 20, 100] {
        let dir = tmp.path().join(format!("stop{stop}"));
        assert!(run_shard(&dir, &p, false, Some(stop)).unwrap().is_none());
        // a partially written tail from a crash is discarded on resume
        fs::OpenOptions::new()
            .append(true)
            .open(dir.join("shard-0-of-1.txt"))
            .and_then(|mut f| std::io::Write::write_all(&mut f, b"C1 garbage"))
            .unwrap();
        let resumed = run_shard(&dir, &p, true, None).unwrap().unwrap();
        assert_eq!(resumed.sha256, full.sha256);
        assert_eq!(resumed.records, full.records);
    }
    let other = RunParams { mu_bound: MuBound::Fixed(7), ..p.clone() };
    let dir = tmp.path().join("stop1");
    assert!(matches!(run_shard(&dir, &other, true, None), Err(Error::Checkpoint(_))));
}

#[test]
fn merge_refuses_incomplete_shards() {
    let tmp = tempfile::tempdir().unwrap();
    let p = RunParams { d: 2, s: 1, mu_bound: MuBound::Auto, shard: ShardSpec::new(0, 2).unwrap() };
    run_shard(tmp.path(), &p, false, None).unwrap();
    assert!(matches!(merge_shards(tmp.path(), &p), Err(Error::Checkpoint(_))));
}
