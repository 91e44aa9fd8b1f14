use std::fmt::Write as _;

use partitest::combinatorics::{bell, r_bell, r_stirling2, stirling2};
use partitest::inference::{exact_posterior, gibbs_run, PosteriorSummary, SamplerConfig};
use partitest::model::{GroupedCounts, GroupedData, GroupedGaussian, Likelihood, ModelSpec};
use partitest::partition::enumerate_partitions;
use partitest::report::{format_num, format_prob, TestReport};
use partitest::study::{run_study, RepRecord, StudyConfig};
use partitest::{Error, PriorSpec};

use crate::manifest::Run;
use crate::{Combinat, DataKind, EnumerateArgs, Failure, PriorsArgs, SimulateArgs, TestArgs};

const DEFAULT_PRIORS: [&str; 7] = ["uniform", "bb:1,1", "bb:1,k", "bb:1,k2", "dp:0.5", "dp:1", "dp:symmetric"];

/// Splits a comma-separated prior list, re-joining the commas inside `bb:A,B`.
pub fn split_priors(list: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for tok in list.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let starts_spec = tok == "uniform" || tok.contains(':');
        match out.last_mut() {
            Some(last) if !starts_spec => {
                last.push(',');
                last.push_str(tok);
            }
            _ => out.push(tok.to_string()),
        }
    }
    out
}

fn parse_prior(s: &str) -> Result<PriorSpec, Failure> {
    s.parse().map_err(|e: Error| Failure::usage(format!("bad prior spec '{s}': {e}")))
}

fn parse_model(s: &str) -> Result<ModelSpec, Failure> {
    s.parse().map_err(|e: Error| Failure::usage(format!("bad model spec '{s}': {e}")))
}

fn csv_body<S: serde::Serialize>(rows: impl IntoIterator<Item = S>) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Failure::from(Error::Data(e.to_string())))?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::from(Error::Data(e.to_string())))?;
    String::from_utf8(bytes).map_err(|e| Failure::from(Error::Data(e.to_string())))
}

fn invariant(ok: bool, what: impl FnOnce() -> String) -> Result<(), Failure> {
    if ok {
        Ok(())
    } else {
        Err(Error::Numerical(format!("invariant check failed: {}", what())).into())
    }
}

#[derive(serde::Serialize)]
struct PartitionRow {
    prior: String,
    resolved: String,
    rgs: String,
    n_blocks: usize,
    pmf: String,
    log_pmf: String,
}

#[derive(serde::Serialize)]
struct SizeRow {
    prior: String,
    resolved: String,
    d: usize,
    pmf: String,
    log_pmf: String,
}

pub fn priors(a: &PriorsArgs) -> Result<(), Failure> {
    let run = Run::start();
    let names: Vec<String> =
        if a.priors.is_empty() { DEFAULT_PRIORS.iter().map(|s| s.to_string()).collect() } else { a.priors.clone() };
    let mut resolved = Vec::new();
    for s in &names {
        let spec = parse_prior(s)?;
        resolved.push((spec, spec.resolve(a.k)?));
    }
    let body = if a.by_size {
        let mut rows = Vec::new();
        for (spec, prior) in &resolved {
            let probs = prior.size_distribution(a.k)?.probs;
            let total: f64 = probs.iter().sum();
            invariant((total - 1.0).abs() < 1e-9, || format!("{spec} size pmf sums to {total}"))?;
            for (i, p) in probs.iter().enumerate() {
                rows.push(SizeRow {
                    prior: spec.to_string(),
                    resolved: prior.to_string(),
                    d: i + 1,
                    pmf: format_prob(*p),
                    log_pmf: format_num(prior.log_pmf_size(i + 1, a.k)?),
                });
            }
        }
        csv_body(rows)?
    } else {
        let parts: Vec<_> = enumerate_partitions(a.k)?.collect();
        let mut rows = Vec::new();
        for (spec, prior) in &resolved {
            let mut total = 0.0;
            for p in &parts {
                let lp = prior.log_pmf(p);
                total += lp.exp();
                rows.push(PartitionRow {
                    prior: spec.to_string(),
                    resolved: prior.to_string(),
                    rgs: p.to_string(),
                    n_blocks: p.n_blocks(),
                    pmf: format_prob(lp.exp()),
                    log_pmf: format_num(lp),
                });
            }
            invariant((total - 1.0).abs() < 1e-9, || format!("{spec} pmf sums to {total}"))?;
        }
        csv_body(rows)?
    };
    if a.out.is_some() {
        for (spec, prior) in &resolved {
            println!("{spec} -> {prior}");
        }
    }
    run.finish("priors", a, None, &[], a.out.as_deref(), &body)
}

fn check_summary(post: &PosteriorSummary) -> Result<(), Failure> {
    let k = post.k;
    let total: f64 = post.partition_probs.iter().map(|(_, w)| w).sum();
    invariant((total - 1.0).abs() < 1e-9, || format!("partition probabilities sum to {total}"))?;
    let m = &post.pairwise_equal;
    for i in 0..k {
        invariant(m[(i, i)] == 1.0, || format!("diagonal entry {i} is {}", m[(i, i)]))?;
        for j in 0..k {
            let v = m[(i, j)];
            invariant((0.0..=1.0 + 1e-12).contains(&v) && v == m[(j, i)], || format!("pairwise entry ({i}, {j}) is {v}"))?;
        }
    }
    Ok(())
}

pub fn test(a: &TestArgs) -> Result<(), Failure> {
    let run = Run::start();
    let spec = parse_prior(&a.prior)?;
    let data: GroupedData = match a.kind {
        DataKind::Proportions => GroupedCounts::from_path(&a.input)?.into(),
        DataKind::Means => GroupedGaussian::from_path(&a.input)?.into(),
    };
    let k = data.k();
    if k < 2 {
        return Err(Error::Domain(format!("testing needs at least two groups, found {k}")).into());
    }
    let model = match (&a.model, a.kind) {
        (Some(m), _) => parse_model(m)?,
        (None, DataKind::Proportions) => ModelSpec::binomial(),
        (None, DataKind::Means) => ModelSpec::jzs(),
    };
    let prior = spec.resolve(k)?;
    let lik = Likelihood::new(model, &data)?;
    let post = if a.exact || (!a.force_mcmc && k <= a.exact_cap) {
        exact_posterior(&prior, &lik)?
    } else {
        let cfg = SamplerConfig {
            iterations: a.iterations,
            burnin: a.burnin,
            chains: a.chains,
            seed: a.seed,
            thin: a.thin,
            draw_parameters: true,
        };
        gibbs_run(&prior, &lik, &cfg)?
    };
    check_summary(&post)?;
    let body = TestReport::new(&post, &spec, &prior, &model, data.names(), a.top).to_json()? + "\n";
    run.finish("test", a, Some(a.seed), &[a.input.as_path()], a.out.as_deref(), &body)
}

pub fn simulate(a: &SimulateArgs) -> Result<(), Failure> {
    let run = Run::start();
    let priors = split_priors(&a.priors).iter().map(|s| parse_prior(s)).collect::<Result<Vec<_>, _>>()?;
    if priors.is_empty() {
        return Err(Failure::usage("--priors is empty"));
    }
    let model = parse_model(&a.model)?;
    let conditions: Vec<(usize, usize, f64)> = if a.full_grid {
        let mut v = Vec::new();
        for k in [5, 9] {
            for n in [50, 100, 250, 500] {
                for f in [0.0, 0.25, 0.5, 0.75, 1.0] {
                    v.push((k, n, f));
                }
            }
        }
        v
    } else {
        vec![(a.k, a.n, a.equalities)]
    };
    let mut records: Vec<RepRecord> = Vec::new();
    let mut summary = String::from("k,n,equality_fraction,method,fwer,false_null_rate,reps_ok,reps_failed\n");
    let mut failed = Vec::new();
    for (k, n, frac) in conditions {
        let cfg = StudyConfig {
            k,
            n_per_group: n,
            reps: a.reps,
            equality_fraction: frac,
            effect_step: a.effect_step,
            priors: priors.clone(),
            model,
            decision_threshold: a.threshold,
            seed: a.seed,
            exact_cap: a.exact_cap,
            sampler: SamplerConfig {
                iterations: a.iterations,
                burnin: a.burnin,
                chains: a.chains,
                seed: a.seed,
                thin: 1,
                draw_parameters: false,
            },
        };
        let res = run_study(&cfg)?;
        for s in &res.summaries {
            let fnr = s.false_null_rate.map(format_num).unwrap_or_default();
            let _ = writeln!(summary, "{k},{n},{frac},{},{},{fnr},{},{}", s.method, format_num(s.fwer), s.reps_ok, s.reps_failed);
        }
        if !res.passed {
            failed.push(format!("K={k}, n={n}, fraction={frac}: {} of {} reps failed", res.failed_reps, a.reps));
        }
        records.extend(res.records);
    }
    let body = csv_body(&records)?;
    if a.out.is_some() {
        print!("{summary}");
    }
    run.finish("simulate", a, Some(a.seed), &[], a.out.as_deref(), &body)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::Numerical(format!("too many failed replications: {}", failed.join("; "))).into())
    }
}

pub fn enumerate(a: &EnumerateArgs) -> Result<(), Failure> {
    let run = Run::start();
    let mut body = String::new();
    for p in enumerate_partitions(a.k)? {
        let _ = writeln!(body, "{p}");
    }
    run.finish("enumerate", a, None, &[], a.out.as_deref(), &body)
}

pub fn combinat(c: &Combinat) -> Result<(), Failure> {
    let v = match *c {
        Combinat::Bell { n } => bell(n)?,
        Combinat::Stirling2 { n, k } => stirling2(n, k)?,
        Combinat::RStirling { n, k, r } => r_stirling2(n, k, r)?,
        Combinat::RBell { n, r } => r_bell(n, r)?,
    };
    println!("{v}");
    Ok(())
}
