//! JSON rendering of posterior summaries.
//!
//! Numbers carry 17 significant digits. Probabilities are written in fixed
//! notation; values below [`PROB_FLOOR`] are written as zero and the report's
//! `probabilities_clamped` flag is set.

use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::error::{Error, Result};
use crate::inference::{Method, PosteriorSummary};
use crate::model::ModelSpec;
use crate::prior::{Prior, PriorSpec};

pub const PROB_FLOOR: f64 = 1e-12;

/// A general number, 17 significant digits; non-finite values become `null`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Num(pub f64);

/// A probability in fixed notation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prob(pub f64);

pub fn format_num(x: f64) -> String {
    if !x.is_finite() {
        return "null".into();
    }
    if x == 0.0 {
        return "0.0".into();
    }
    format!("{x:.16e}")
}

/// Fixed-notation probability with 17 significant digits, clamped to `[0, 1]`.
pub fn format_prob(p: f64) -> String {
    let p = p.clamp(0.0, 1.0);
    if p < PROB_FLOOR {
        return "0.0".into();
    }
    let exp = p.log10().floor() as i32;
    let decimals = (16 - exp).max(1) as usize;
    format!("{p:.decimals$}")
}

fn raw<S: Serializer>(s: String, ser: S) -> std::result::Result<S::Ok, S::Error> {
    RawValue::from_string(s).map_err(serde::ser::Error::custom)?.serialize(ser)
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        raw(format_num(self.0), ser)
    }
}

impl Serialize for Prob {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        raw(format_prob(self.0), ser)
    }
}

#[derive(Debug, Serialize)]
pub struct TopPartition {
    pub rgs: String,
    pub prob: Prob,
}

#[derive(Debug, Serialize)]
pub struct DiagnosticsReport {
    pub ess_logpost: Vec<Num>,
    pub ess_d: Vec<Num>,
    pub rhat_logpost: Num,
}

/// The result document of a partition test.
#[derive(Debug, Serialize)]
pub struct TestReport {
    pub k: usize,
    pub groups: Vec<String>,
    pub prior: String,
    pub resolved_prior: String,
    pub model: String,
    pub method: &'static str,
    pub top_partitions: Vec<TopPartition>,
    pub size_probs: Vec<Prob>,
    /// Rows of the pairwise-equality matrix.
    pub pairwise_equal: Vec<Vec<Prob>>,
    pub param_means: Option<Vec<Num>>,
    pub diagnostics: Option<DiagnosticsReport>,
    pub seeds: Vec<u64>,
    pub probabilities_clamped: bool,
}

impl TestReport {
    pub fn new(
        post: &PosteriorSummary,
        spec: &PriorSpec,
        prior: &Prior,
        model: &ModelSpec,
        groups: &[String],
        top: usize,
    ) -> Self {
        let k = post.k;
        let mut clamped = false;
        let mut prob = |p: f64| {
            clamped |= p > 0.0 && p < PROB_FLOOR;
            Prob(p)
        };
        let top_partitions = post.top(top).iter().map(|(p, w)| TopPartition { rgs: p.to_string(), prob: prob(*w) }).collect();
        let size_probs = post.size_probs.iter().map(|&p| prob(p)).collect();
        let pairwise_equal = (0..k).map(|i| (0..k).map(|j| prob(post.pairwise_equal[(i, j)])).collect()).collect();
        TestReport {
            k,
            groups: groups.to_vec(),
            prior: spec.to_string(),
            resolved_prior: prior.to_string(),
            model: model.to_string(),
            method: match post.method {
                Method::Exact => "exact",
                Method::Gibbs => "gibbs",
            },
            top_partitions,
            size_probs,
            pairwise_equal,
            param_means: post.param_means.as_ref().map(|m| m.iter().map(|&v| Num(v)).collect()),
            diagnostics: post.diagnostics.as_ref().map(|d| DiagnosticsReport {
                ess_logpost: d.ess_logpost.iter().map(|&v| Num(v)).collect(),
                ess_d: d.ess_d.iter().map(|&v| Num(v)).collect(),
                rhat_logpost: Num(d.rhat_logpost),
            }),
            seeds: post.seeds.clone(),
            probabilities_clamped: clamped,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Data(format!("serializing report: {e}")))
    }
}
