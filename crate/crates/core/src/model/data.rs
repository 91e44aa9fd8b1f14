//! Grouped data and CSV ingestion.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

/// Binomial counts per group.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupedCounts {
    pub names: Vec<String>,
    pub successes: Vec<u64>,
    pub trials: Vec<u64>,
}

/// Gaussian summaries per group: size, mean, within-group sum of squares.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupedGaussian {
    pub names: Vec<String>,
    pub n: Vec<usize>,
    pub mean: Vec<f64>,
    pub sse: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum GroupedData {
    Counts(GroupedCounts),
    Gaussian(GroupedGaussian),
}

fn default_names(k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("g{i}")).collect()
}

impl GroupedCounts {
    pub fn new(successes: Vec<u64>, trials: Vec<u64>) -> Result<Self> {
        let names = default_names(successes.len());
        Self::with_names(names, successes, trials)
    }

    pub fn with_names(names: Vec<String>, successes: Vec<u64>, trials: Vec<u64>) -> Result<Self> {
        if successes.len() != trials.len() || names.len() != trials.len() {
            return Err(Error::Data("successes, trials and names differ in length".into()));
        }
        if trials.is_empty() {
            return Err(Error::Data("no groups".into()));
        }
        for (j, (&e, &n)) in successes.iter().zip(&trials).enumerate() {
            if n == 0 {
                return Err(Error::Data(format!("group {} has zero trials", names[j])));
            }
            if e > n {
                return Err(Error::Data(format!("group {} has {e} successes out of {n} trials", names[j])));
            }
        }
        Ok(GroupedCounts { names, successes, trials })
    }

    pub fn k(&self) -> usize {
        self.trials.len()
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        GroupedCounts {
            names: idx.iter().map(|&i| self.names[i].clone()).collect(),
            successes: idx.iter().map(|&i| self.successes[i]).collect(),
            trials: idx.iter().map(|&i| self.trials[i]).collect(),
        }
    }

    /// Reads `group,successes,trials` rows.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(csv_err)?.clone();
        let cols = column_indices(&headers, &["group", "successes", "trials"])?;
        let (mut names, mut succ, mut trials) = (Vec::new(), Vec::new(), Vec::new());
        for (i, rec) in rdr.records().enumerate() {
            let row = i + 2;
            let rec = rec.map_err(csv_err)?;
            names.push(field(&rec, cols[0], row)?.to_string());
            succ.push(parse_field::<u64>(&rec, cols[1], row, "successes")?);
            trials.push(parse_field::<u64>(&rec, cols[2], row, "trials")?);
        }
        check_unique(&names)?;
        Self::with_names(names, succ, trials)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv(open(path.as_ref())?)
    }
}

impl GroupedGaussian {
    pub fn new(n: Vec<usize>, mean: Vec<f64>, sse: Vec<f64>) -> Result<Self> {
        let names = default_names(n.len());
        Self::with_names(names, n, mean, sse)
    }

    pub fn with_names(names: Vec<String>, n: Vec<usize>, mean: Vec<f64>, mut sse: Vec<f64>) -> Result<Self> {
        if n.len() != mean.len() || n.len() != sse.len() || names.len() != n.len() {
            return Err(Error::Data("n, mean, sse and names differ in length".into()));
        }
        if n.is_empty() {
            return Err(Error::Data("no groups".into()));
        }
        for j in 0..n.len() {
            if n[j] == 0 {
                return Err(Error::Data(format!("group {} is empty", names[j])));
            }
            if !mean[j].is_finite() || !sse[j].is_finite() || sse[j] < 0.0 {
                return Err(Error::Data(format!("group {} has invalid summaries", names[j])));
            }
            if n[j] == 1 {
                sse[j] = 0.0;
            }
        }
        Ok(GroupedGaussian { names, n, mean, sse })
    }

    /// Summaries from raw observations, one slice per group.
    pub fn from_samples(groups: &[Vec<f64>]) -> Result<Self> {
        let names = default_names(groups.len());
        let mut n = Vec::new();
        let mut mean = Vec::new();
        let mut sse = Vec::new();
        for g in groups {
            let (c, m, s) = moments(g);
            n.push(c);
            mean.push(m);
            sse.push(s);
        }
        Self::with_names(names, n, mean, sse)
    }

    pub fn k(&self) -> usize {
        self.n.len()
    }

    pub fn total_n(&self) -> usize {
        self.n.iter().sum()
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        GroupedGaussian {
            names: idx.iter().map(|&i| self.names[i].clone()).collect(),
            n: idx.iter().map(|&i| self.n[i]).collect(),
            mean: idx.iter().map(|&i| self.mean[i]).collect(),
            sse: idx.iter().map(|&i| self.sse[i]).collect(),
        }
    }

    /// Multiplies every observation by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        GroupedGaussian {
            names: self.names.clone(),
            n: self.n.clone(),
            mean: self.mean.iter().map(|m| m * c).collect(),
            sse: self.sse.iter().map(|s| s * c * c).collect(),
        }
    }

    /// Reads raw `group,value` rows or summary `group,n,mean,sd` rows
    /// (`sd` with divisor `n − 1`). Groups keep their first-appearance order.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(csv_err)?.clone();
        if headers.iter().any(|h| h == "value") {
            let cols = column_indices(&headers, &["group", "value"])?;
            let mut order: Vec<String> = Vec::new();
            let mut index: HashMap<String, usize> = HashMap::new();
            let mut values: Vec<Vec<f64>> = Vec::new();
            for (i, rec) in rdr.records().enumerate() {
                let row = i + 2;
                let rec = rec.map_err(csv_err)?;
                let name = field(&rec, cols[0], row)?.to_string();
                let v = parse_field::<f64>(&rec, cols[1], row, "value")?;
                if !v.is_finite() {
                    return Err(Error::Data(format!("row {row}: value is not finite")));
                }
                let slot = *index.entry(name.clone()).or_insert_with(|| {
                    order.push(name);
                    values.push(Vec::new());
                    values.len() - 1
                });
                values[slot].push(v);
            }
            let mut g = Self::from_samples(&values)?;
            g.names = order;
            Ok(g)
        } else {
            let cols = column_indices(&headers, &["group", "n", "mean", "sd"])?;
            let (mut names, mut n, mut mean, mut sse) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
            for (i, rec) in rdr.records().enumerate() {
                let row = i + 2;
                let rec = rec.map_err(csv_err)?;
                names.push(field(&rec, cols[0], row)?.to_string());
                let nj = parse_field::<usize>(&rec, cols[1], row, "n")?;
                let sd = parse_field::<f64>(&rec, cols[3], row, "sd")?;
                if !(sd >= 0.0) {
                    return Err(Error::Data(format!("row {row}: sd must be non-negative")));
                }
                n.push(nj);
                mean.push(parse_field::<f64>(&rec, cols[2], row, "mean")?);
                sse.push(nj.saturating_sub(1) as f64 * sd * sd);
            }
            check_unique(&names)?;
            Self::with_names(names, n, mean, sse)
        }
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv(open(path.as_ref())?)
    }
}

impl GroupedData {
    pub fn k(&self) -> usize {
        match self {
            GroupedData::Counts(c) => c.k(),
            GroupedData::Gaussian(g) => g.k(),
        }
    }

    pub fn names(&self) -> &[String] {
        match self {
            GroupedData::Counts(c) => &c.names,
            GroupedData::Gaussian(g) => &g.names,
        }
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        match self {
            GroupedData::Counts(c) => GroupedData::Counts(c.subset(idx)),
            GroupedData::Gaussian(g) => GroupedData::Gaussian(g.subset(idx)),
        }
    }

    /// Per-group point estimates: observed proportions or sample means.
    pub fn group_estimates(&self) -> Vec<f64> {
        match self {
            GroupedData::Counts(c) => c.successes.iter().zip(&c.trials).map(|(&e, &n)| e as f64 / n as f64).collect(),
            GroupedData::Gaussian(g) => g.mean.clone(),
        }
    }
}

impl From<GroupedCounts> for GroupedData {
    fn from(c: GroupedCounts) -> Self {
        GroupedData::Counts(c)
    }
}

impl From<GroupedGaussian> for GroupedData {
    fn from(g: GroupedGaussian) -> Self {
        GroupedData::Gaussian(g)
    }
}

/// Count, mean and sum of squared deviations (Welford).
fn moments(xs: &[f64]) -> (usize, f64, f64) {
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let delta = x - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (x - mean);
    }
    (xs.len(), mean, m2.max(0.0))
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

fn csv_err(e: csv::Error) -> Error {
    match e.position() {
        Some(p) => Error::Data(format!("row {}: {e}", p.line())),
        None => Error::Data(e.to_string()),
    }
}

fn column_indices(headers: &csv::StringRecord, want: &[&str]) -> Result<Vec<usize>> {
    want.iter()
        .map(|w| {
            headers
                .iter()
                .position(|h| h.eq_ignore_ascii_case(w))
                .ok_or_else(|| Error::Data(format!("missing column {w:?}")))
        })
        .collect()
}

fn field(rec: &csv::StringRecord, col: usize, row: usize) -> Result<&str> {
    match rec.get(col) {
        Some(s) if !s.is_empty() => Ok(s),
        _ => Err(Error::Data(format!("row {row}: missing field"))),
    }
}

fn parse_field<T: std::str::FromStr>(rec: &csv::StringRecord, col: usize, row: usize, name: &str) -> Result<T> {
    let s = field(rec, col, row)?;
    s.parse()
        .map_err(|_| Error::Data(format!("row {row}: cannot parse {name} from {s:?}")))
}

fn check_unique(names: &[String]) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for n in names {
        if !seen.insert(n) {
            return Err(Error::Data(format!("group {n} appears twice")));
        }
    }
    Ok(())
}
