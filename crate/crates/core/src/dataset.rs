//! Training records from focal/test pairs, token budgeting and the JSONL
//! dataset format with its stats sidecar.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::miner::{FocalTestPair, Origin};

pub const DEFAULT_BUDGET: usize = 512;

pub trait Tokenizer: Send + Sync {
    fn name(&self) -> &str;
    fn count(&self, text: &str) -> usize;
}

/// Counts maximal non-whitespace runs plus one token per newline, so that
/// joining two texts with `\n` adds exactly one token.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceTokenizer;

impl Tokenizer for WhitespaceTokenizer {
    fn name(&self) -> &str {
        "whitespace"
    }

    fn count(&self, text: &str) -> usize {
        text.split_whitespace().count() + text.matches('\n').count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub repo_id: String,
    pub focal_name: String,
    pub origin: Origin,
    pub text: String,
    #[serde(skip)]
    pub token_count: usize,
}

/// On-disk shape; field order is part of the format.
#[derive(Serialize)]
struct RecordLine<'a> {
    repo_id: &'a str,
    focal_name: &'a str,
    origin: Origin,
    text: &'a str,
}

#[derive(Deserialize)]
struct OwnedLine {
    repo_id: String,
    focal_name: String,
    origin: Origin,
    text: String,
}

pub fn record_text(pair: &FocalTestPair) -> String {
    format!("{}\n{}", pair.focal.text, pair.test.text)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OriginStats {
    pub n_repos: usize,
    pub n_focal_calls: usize,
    pub n_pairs: usize,
    pub n_tokens: usize,
    /// Pairs excluded for exceeding the budget.
    pub dropped: usize,
}

impl OriginStats {
    fn add(&mut self, o: &OriginStats) {
        self.n_repos += o.n_repos;
        self.n_focal_calls += o.n_focal_calls;
        self.n_pairs += o.n_pairs;
        self.n_tokens += o.n_tokens;
        self.dropped += o.dropped;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub mined: OriginStats,
    pub augmented: OriginStats,
    /// Field-wise sum of the per-origin rows.
    pub total: OriginStats,
    /// Repositories contributing any record, counted once.
    pub distinct_repos: usize,
    pub budget: usize,
    pub tokenizer: String,
    /// No tokenizer adapter was configured; counts are whitespace tokens.
    pub tokenizer_fallback: bool,
}

impl CorpusStats {
    pub fn origin(&self, o: Origin) -> &OriginStats {
        match o {
            Origin::Mined => &self.mined,
            Origin::Augmented => &self.augmented,
        }
    }

    /// Statistics of an emitted record set; `dropped` stays zero.
    pub fn from_records(records: &[DatasetRecord]) -> Self {
        let mut s = CorpusStats::default();
        let mut repos: BTreeMap<Origin, BTreeSet<&str>> = BTreeMap::new();
        let mut focals: BTreeMap<Origin, BTreeSet<(&str, &str)>> = BTreeMap::new();
        for r in records {
            let row = match r.origin {
                Origin::Mined => &mut s.mined,
                Origin::Augmented => &mut s.augmented,
            };
            row.n_pairs += 1;
            row.n_tokens += r.token_count;
            repos.entry(r.origin).or_default().insert(&r.repo_id);
            focals.entry(r.origin).or_default().insert((&r.repo_id, &r.focal_name));
        }
        for (o, set) in &repos {
            match o {
                Origin::Mined => s.mined.n_repos = set.len(),
                Origin::Augmented => s.augmented.n_repos = set.len(),
            }
        }
        for (o, set) in &focals {
            match o {
                Origin::Mined => s.mined.n_focal_calls = set.len(),
                Origin::Augmented => s.augmented.n_focal_calls = set.len(),
            }
        }
        s.distinct_repos = records.iter().map(|r| r.repo_id.as_str()).collect::<BTreeSet<_>>().len();
        s.retotal();
        s
    }

    fn retotal(&mut self) {
        let mut t = OriginStats::default();
        t.add(&self.mined);
        t.add(&self.augmented);
        self.total = t;
    }
}

/// One record per pair whose text fits in `budget` tokens. Without a
/// tokenizer the whitespace fallback is used and flagged in the stats.
pub fn build(
    pairs: &[FocalTestPair],
    budget: usize,
    tokenizer: Option<&dyn Tokenizer>,
) -> (Vec<DatasetRecord>, CorpusStats) {
    let fallback = WhitespaceTokenizer;
    let tok: &dyn Tokenizer = tokenizer.unwrap_or(&fallback);
    let mut records = Vec::with_capacity(pairs.len());
    let mut dropped = [0usize; 2];
    for p in pairs {
        let text = record_text(p);
        let token_count = tok.count(&text);
        if token_count > budget {
            dropped[p.origin as usize] += 1;
            continue;
        }
        records.push(DatasetRecord {
            repo_id: p.repo_id.clone(),
            focal_name: p.focal.name.clone(),
            origin: p.origin,
            text,
            token_count,
        });
    }
    let mut stats = CorpusStats::from_records(&records);
    stats.mined.dropped = dropped[Origin::Mined as usize];
    stats.augmented.dropped = dropped[Origin::Augmented as usize];
    stats.retotal();
    stats.budget = budget;
    stats.tokenizer = tok.name().to_string();
    stats.tokenizer_fallback = tokenizer.is_none();
    (records, stats)
}

/// `data.jsonl` -> `data.stats.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("stats.json")
}

/// Writes records as JSON lines and a stats sidecar derived from them.
pub fn serialize(records: &[DatasetRecord], out: &Path) -> Result<()> {
    serialize_with_stats(records, &CorpusStats::from_records(records), out)
}

pub fn serialize_with_stats(records: &[DatasetRecord], stats: &CorpusStats, out: &Path) -> Result<()> {
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = File::create(out).map_err(|e| Error::io(out, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        let line = RecordLine {
            repo_id: &r.repo_id,
            focal_name: &r.focal_name,
            origin: r.origin,
            text: &r.text,
        };
        serde_json::to_writer(&mut w, &line)?;
        w.write_all(b"\n").map_err(|e| Error::io(out, e))?;
    }
    w.flush().map_err(|e| Error::io(out, e))?;

    let side = sidecar_path(out);
    let json = serde_json::to_string_pretty(stats)?;
    fs::write(&side, json + "\n").map_err(|e| Error::io(&side, e))
}

/// Reads a dataset file back; token counts are recomputed with `tokenizer`
/// (whitespace when absent).
pub fn parse(path: &Path, tokenizer: Option<&dyn Tokenizer>) -> Result<Vec<DatasetRecord>> {
    let fallback = WhitespaceTokenizer;
    let tok: &dyn Tokenizer = tokenizer.unwrap_or(&fallback);
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let r: OwnedLine = serde_json::from_str(&line)?;
        out.push(DatasetRecord {
            token_count: tok.count(&r.text),
            repo_id: r.repo_id,
            focal_name: r.focal_name,
            origin: r.origin,
            text: r.text,
        });
    }
    Ok(out)
}

pub fn read_stats(dataset: &Path) -> Result<CorpusStats> {
    let side = sidecar_path(dataset);
    let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    Ok(serde_json::from_str(&text)?)
}
