//! Agreement statistics for human ratings of generated guidance.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::{Error, Result};

pub const LIKERT_LEVELS: u8 = 5;
pub const RATINGS_CSV_HEADER: [&str; 4] = ["criterion", "rater", "item", "score"];
pub const NOT_AVAILABLE: &str = "n/a";

/// Largest sample for which [`spearman_permutation_p`] enumerates every
/// permutation.
pub const MAX_EXACT_PERMUTATION_N: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Criterion {
    Relevance,
    Accuracy,
    Usefulness,
}

impl Criterion {
    pub const ALL: [Criterion; 3] = [Criterion::Relevance, Criterion::Accuracy, Criterion::Usefulness];

    pub fn as_str(&self) -> &'static str {
        match self {
            Criterion::Relevance => "Relevance",
            Criterion::Accuracy => "Accuracy",
            Criterion::Usefulness => "Usefulness",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Criterion::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::invalid(format!("unknown criterion {s:?}")))
    }
}

/// Complete Likert ratings: every rater scored every item on every
/// criterion present.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingMatrix {
    criteria: Vec<Criterion>,
    raters: Vec<String>,
    items: Vec<u32>,
    scores: BTreeMap<(Criterion, String, u32), u8>,
}

impl RatingMatrix {
    pub fn criteria(&self) -> &[Criterion] {
        &self.criteria
    }

    pub fn raters(&self) -> &[String] {
        &self.raters
    }

    pub fn items(&self) -> &[u32] {
        &self.items
    }

    /// One rater's scores for `criterion`, in item order.
    pub fn rater_scores(&self, criterion: Criterion, rater: &str) -> Vec<u8> {
        self.items
            .iter()
            .map(|i| self.scores[&(criterion, rater.to_string(), *i)])
            .collect()
    }

    /// Every (rater, item) score for `criterion`.
    pub fn criterion_scores(&self, criterion: Criterion) -> Vec<u8> {
        self.raters
            .iter()
            .flat_map(|r| self.rater_scores(criterion, r))
            .collect()
    }
}

/// Reads a `criterion,rater,item,score` CSV and checks completeness.
pub fn parse_ratings_csv(text: &str) -> Result<RatingMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != RATINGS_CSV_HEADER {
        return Err(Error::schema(
            "line 1",
            format!("expected header {}", RATINGS_CSV_HEADER.join(",")),
        ));
    }
    let mut scores = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let bad = |msg: String| Error::schema(format!("line {line}"), msg);
        let criterion: Criterion = record[0].parse().map_err(|e: Error| bad(e.to_string()))?;
        let rater = record[1].to_string();
        if rater.is_empty() {
            return Err(bad("empty rater".into()));
        }
        let item: u32 = record[2]
            .parse()
            .map_err(|_| bad(format!("item {:?} is not an integer", &record[2])))?;
        let score: u8 = record[3]
            .parse()
            .ok()
            .filter(|s| (1..=LIKERT_LEVELS).contains(s))
            .ok_or_else(|| bad(format!("score {:?} outside 1..={LIKERT_LEVELS}", &record[3])))?;
        if scores.insert((criterion, rater.clone(), item), score).is_some() {
            return Err(bad(format!("duplicate rating for {criterion}, {rater}, item {item}")));
        }
    }
    if scores.is_empty() {
        return Err(Error::schema("ratings", "no rating rows"));
    }
    let criteria: BTreeSet<Criterion> = scores.keys().map(|k| k.0).collect();
    let raters: BTreeSet<String> = scores.keys().map(|k| k.1.clone()).collect();
    let items: BTreeSet<u32> = scores.keys().map(|k| k.2).collect();
    for c in &criteria {
        for r in &raters {
            for i in &items {
                if !scores.contains_key(&(*c, r.clone(), *i)) {
                    return Err(Error::schema(
                        "ratings",
                        format!("missing rating for {c}, {r}, item {i}"),
                    ));
                }
            }
        }
    }
    Ok(RatingMatrix {
        criteria: criteria.into_iter().collect(),
        raters: raters.into_iter().collect(),
        items: items.into_iter().collect(),
        scores,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Descriptive {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub sd: f64,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

pub fn descriptive_stats(values: &[f64]) -> Result<Descriptive> {
    if values.is_empty() {
        return Err(Error::invalid("no ratings to describe"));
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(Descriptive { mean, sd, min, max, n })
}

/// Rank correlation, or the marker for a constant input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Correlation {
    Defined { rho: f64, p: f64 },
    Undefined,
}

impl Correlation {
    pub fn rho(&self) -> Option<f64> {
        match self {
            Correlation::Defined { rho, .. } => Some(*rho),
            Correlation::Undefined => None,
        }
    }

    pub fn p(&self) -> Option<f64> {
        match self {
            Correlation::Defined { p, .. } => Some(*p),
            Correlation::Undefined => None,
        }
    }
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|a, b| values[*a].total_cmp(&values[*b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Positions start..end hold ranks start+1..=end.
        let avg = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

fn check_pair(a: &[f64], b: &[f64], min_len: usize) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "rating vectors differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    if a.len() < min_len {
        return Err(Error::invalid(format!(
            "need at least {min_len} paired ratings, got {}",
            a.len()
        )));
    }
    Ok(())
}

fn spearman_rho(a: &[f64], b: &[f64]) -> Option<f64> {
    pearson(&average_ranks(a), &average_ranks(b))
}

/// Spearman's rho with a two-sided p value from the t approximation on
/// `n - 2` degrees of freedom.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<Correlation> {
    check_pair(a, b, 3)?;
    let Some(rho) = spearman_rho(a, b) else {
        return Ok(Correlation::Undefined);
    };
    let df = (a.len() - 2) as f64;
    let p = if rho.abs() >= 1.0 {
        0.0
    } else {
        let t = rho * (df / (1.0 - rho * rho)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::invalid(e.to_string()))?;
        (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0)
    };
    Ok(Correlation::Defined { rho, p })
}

/// Exact two-sided permutation p value for Spearman's rho, enumerating all
/// orderings of `b`. Only for `n <= MAX_EXACT_PERMUTATION_N`.
pub fn spearman_permutation_p(a: &[f64], b: &[f64]) -> Result<Option<f64>> {
    check_pair(a, b, 3)?;
    if a.len() > MAX_EXACT_PERMUTATION_N {
        return Err(Error::invalid(format!(
            "exact permutation test limited to n <= {MAX_EXACT_PERMUTATION_N}"
        )));
    }
    let Some(observed) = spearman_rho(a, b) else {
        return Ok(None);
    };
    let ra = average_ranks(a);
    let mut rb = average_ranks(b);
    let (mut hits, mut total) = (0u64, 0u64);
    let tol = 1e-12;
    let mut visit = |perm: &[f64]| {
        total += 1;
        if pearson(&ra, perm).is_some_and(|r| r.abs() >= observed.abs() - tol) {
            hits += 1;
        }
    };
    // Heap's algorithm.
    let n = rb.len();
    let mut c = vec![0usize; n];
    visit(&rb);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                rb.swap(0, i);
            } else {
                rb.swap(c[i], i);
            }
            visit(&rb);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(Some(hits as f64 / total as f64))
}

/// Cohen's kappa with quadratic weights `(i - j)^2 / (k - 1)^2` over the
/// categories `1..=k`. Returns 0 when no disagreement is possible under
/// chance, i.e. both raters used the same single category.
pub fn weighted_kappa(a: &[u8], b: &[u8], k: u8) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "rating vectors differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::invalid("no paired ratings"));
    }
    if k < 2 {
        return Err(Error::invalid("need at least two categories"));
    }
    if let Some(bad) = a.iter().chain(b).find(|v| !(1..=k).contains(*v)) {
        return Err(Error::invalid(format!("rating {bad} outside 1..={k}")));
    }
    let k = k as usize;
    let mut observed = vec![vec![0u64; k]; k];
    let (mut rows, mut cols) = (vec![0u64; k], vec![0u64; k]);
    for (x, y) in a.iter().zip(b) {
        let (i, j) = (*x as usize - 1, *y as usize - 1);
        observed[i][j] += 1;
        rows[i] += 1;
        cols[j] += 1;
    }
    // Integer sums scaled by n^2 keep the ratio exact up to one division.
    let n = a.len() as u128;
    let (mut num, mut den) = (0u128, 0u128);
    for i in 0..k {
        for j in 0..k {
            let w = (i.abs_diff(j) as u128).pow(2);
            num += w * observed[i][j] as u128 * n;
            den += w * rows[i] as u128 * cols[j] as u128;
        }
    }
    if den == 0 {
        return Ok(0.0);
    }
    Ok(1.0 - num as f64 / den as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairAgreement {
    pub criterion: Criterion,
    pub pair: (String, String),
    pub correlation: Correlation,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingReport {
    pub descriptive: Vec<(Criterion, Descriptive)>,
    pub agreement: Vec<PairAgreement>,
}

pub fn rating_report(m: &RatingMatrix) -> Result<RatingReport> {
    let mut descriptive = Vec::new();
    let mut agreement = Vec::new();
    for c in m.criteria() {
        let all: Vec<f64> = m.criterion_scores(*c).into_iter().map(f64::from).collect();
        descriptive.push((*c, descriptive_stats(&all)?));
        let raters = m.raters();
        for i in 0..raters.len() {
            for j in i + 1..raters.len() {
                let a = m.rater_scores(*c, &raters[i]);
                let b = m.rater_scores(*c, &raters[j]);
                let fa: Vec<f64> = a.iter().map(|v| f64::from(*v)).collect();
                let fb: Vec<f64> = b.iter().map(|v| f64::from(*v)).collect();
                agreement.push(PairAgreement {
                    criterion: *c,
                    pair: (raters[i].clone(), raters[j].clone()),
                    correlation: spearman(&fa, &fb)?,
                    kappa: weighted_kappa(&a, &b, LIKERT_LEVELS)?,
                });
            }
        }
    }
    Ok(RatingReport { descriptive, agreement })
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::io("csv", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv writer emits utf-8"))
}

/// `criterion,mean,sd,min,max,n`
pub fn descriptive_csv(r: &RatingReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["criterion", "mean", "sd", "min", "max", "n"])?;
    for (c, d) in &r.descriptive {
        w.write_record([
            c.as_str(),
            &d.mean.to_string(),
            &d.sd.to_string(),
            &d.min.to_string(),
            &d.max.to_string(),
            &d.n.to_string(),
        ])?;
    }
    finish(w)
}

/// `criterion,pair,rho,p,kappa` with `n/a` for undefined correlations.
pub fn agreement_csv(r: &RatingReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["criterion", "pair", "rho", "p", "kappa"])?;
    let na = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_else(|| NOT_AVAILABLE.to_string());
    for a in &r.agreement {
        w.write_record([
            a.criterion.as_str(),
            &format!("{}-{}", a.pair.0, a.pair.1),
            &na(a.correlation.rho()),
            &na(a.correlation.p()),
            &a.kappa.to_string(),
        ])?;
    }
    finish(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn descriptive_examples() {
        let d = descriptive_stats(&[5.0; 6]).unwrap();
        assert_eq!((d.mean, d.sd, d.n), (5.0, 0.0, 6));
        let d = descriptive_stats(&[2.0, 4.0]).unwrap();
        assert_eq!(d.mean, 3.0);
        assert!((d.sd - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!((d.min, d.max), (2.0, 4.0));
        assert_eq!(descriptive_stats(&[3.0]).unwrap().sd, 0.0);
        assert!(descriptive_stats(&[]).is_err());
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 20.0, 5.0]), vec![2.0, 3.5, 3.5, 1.0]);
        assert_eq!(average_ranks(&[1.0, 1.0, 1.0]), vec![2.0; 3]);
    }

    #[test]
    fn spearman_extremes() {
        let v = [1.0, 3.0, 2.0, 5.0, 4.0];
        assert_eq!(spearman(&v, &v).unwrap(), Correlation::Defined { rho: 1.0, p: 0.0 });
        let rev: Vec<f64> = v.iter().map(|x| -x).collect();
        assert_eq!(spearman(&v, &rev).unwrap().rho(), Some(-1.0));
        assert_eq!(spearman(&v, &[5.0; 5]).unwrap(), Correlation::Undefined);
        assert!(spearman(&v, &v[..4]).is_err());
        assert!(spearman(&v[..2], &v[..2]).is_err());
    }

    #[test]
    fn spearman_p_reference() {
        // rho = 0.8 with n = 5: t = 0.8 * sqrt(3 / 0.36) = 2.3094, two-sided
        // p on 3 degrees of freedom is 0.1041 (standard t tables).
        let c = spearman(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 1.0, 4.0, 3.0, 5.0]).unwrap();
        let Correlation::Defined { rho, p } = c else {
            panic!("defined")
        };
        assert!((rho - 0.8).abs() < 1e-12);
        assert!((p - 0.1041).abs() < 5e-4, "p = {p}");
    }

    #[test]
    fn permutation_p() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        // Only the identity and the full reversal reach |rho| = 1.
        let p = spearman_permutation_p(&a, &a).unwrap().unwrap();
        assert!((p - 2.0 / 120.0).abs() < 1e-15);
        assert_eq!(spearman_permutation_p(&a, &[1.0; 5]).unwrap(), None);
        assert!(spearman_permutation_p(&[0.0; 12], &[0.0; 12]).is_err());
    }

    #[test]
    fn kappa_examples() {
        let v = [1, 2, 3, 4, 5, 3];
        assert_eq!(weighted_kappa(&v, &v, 5).unwrap(), 1.0);
        assert_eq!(weighted_kappa(&[5; 10], &[5; 10], 5).unwrap(), 0.0);
        assert!(weighted_kappa(&[6], &[1], 5).is_err());
        assert!(weighted_kappa(&[0], &[1], 5).is_err());
        assert!(weighted_kappa(&[1, 2], &[1], 5).is_err());
        // Complete disagreement at the extremes.
        assert_eq!(weighted_kappa(&[1, 5], &[5, 1], 5).unwrap(), -1.0);
    }

    #[test]
    fn ratings_csv_round() {
        let text =
            "criterion,rater,item,score\nRelevance,R1,1,5\nRelevance,R1,2,4\nRelevance,R2,1,5\nRelevance,R2,2,4\n";
        let m = parse_ratings_csv(text).unwrap();
        assert_eq!(m.raters(), ["R1".to_string(), "R2".to_string()]);
        let r = rating_report(&m);
        // Only two items: too short for a rank correlation.
        assert!(r.is_err());
        let missing = "criterion,rater,item,score\nRelevance,R1,1,5\nRelevance,R2,2,4\n";
        assert!(matches!(parse_ratings_csv(missing), Err(Error::Schema { .. })));
        assert!(parse_ratings_csv("criterion,rater,item,score\nRelevance,R1,1,6\n").is_err());
        assert!(parse_ratings_csv("criterion,rater,item,score\nClarity,R1,1,3\n").is_err());
        assert!(parse_ratings_csv("criterion,rater,item,score\n").is_err());
    }

    #[test]
    fn report_marks_constant_pairs() {
        let mut text = String::from("criterion,rater,item,score\n");
        for item in 1..=4 {
            text.push_str(&format!(
                "Relevance,R1,{item},5\nRelevance,R2,{item},5\nRelevance,R3,{item},{}\n",
                item
            ));
        }
        let r = rating_report(&parse_ratings_csv(&text).unwrap()).unwrap();
        let csv = agreement_csv(&r).unwrap();
        assert!(csv.contains("Relevance,R1-R2,n/a,n/a,0\n"));
        assert_eq!(r.agreement.len(), 3);
        let d = descriptive_csv(&r).unwrap();
        assert!(d.starts_with("criterion,mean,sd,min,max,n\nRelevance,"));
    }

    proptest! {
        #[test]
        fn spearman_invariant_under_monotone_maps(v in prop::collection::vec((1u8..=5, 1u8..=5), 3..40)) {
            let a: Vec<f64> = v.iter().map(|p| p.0 as f64).collect();
            let b: Vec<f64> = v.iter().map(|p| p.1 as f64).collect();
            let ta: Vec<f64> = a.iter().map(|x| x.powi(3) + 7.0).collect();
            let tb: Vec<f64> = b.iter().map(|x| x.exp()).collect();
            let base = spearman(&a, &b).unwrap();
            let moved = spearman(&ta, &tb).unwrap();
            match (base.rho(), moved.rho()) {
                (Some(x), Some(y)) => {
                    prop_assert!((-1.0..=1.0).contains(&x));
                    prop_assert!((x - y).abs() < 1e-12);
                }
                (None, None) => {}
                _ => prop_assert!(false, "definedness changed"),
            }
        }

        #[test]
        fn kappa_symmetric_and_bounded(v in prop::collection::vec((1u8..=5, 1u8..=5), 1..40)) {
            let a: Vec<u8> = v.iter().map(|p| p.0).collect();
            let b: Vec<u8> = v.iter().map(|p| p.1).collect();
            let ab = weighted_kappa(&a, &b, 5).unwrap();
            let ba = weighted_kappa(&b, &a, 5).unwrap();
            prop_assert!((ab - ba).abs() < 1e-15);
            prop_assert!((-1.0..=1.0).contains(&ab));
            if a.iter().any(|x| *x != a[0]) {
                prop_assert_eq!(weighted_kappa(&a, &a, 5).unwrap(), 1.0);
            }
        }
    }
}
