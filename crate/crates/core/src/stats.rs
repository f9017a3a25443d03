//! Pairwise comparison of experiment metrics under a normal approximation.
//!
//! Each metric of each experiment is summarised as `N(μ, σ)` over seeds. For
//! two experiments the score
//!
//! ```text
//! z = (μ1 − μ2) / sqrt(σ1² + σ2²)
//! ```
//!
//! gives `P(x1 < x2) = Φ(−z)`. `z < −1` marks the first experiment as
//! significantly smaller, `z > 1` as significantly greater.

use std::fmt;
use std::io;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    LowerIsBetter,
    HigherIsBetter,
}

/// Normal summary of one metric over seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricDist {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
    pub orientation: Orientation,
}

impl MetricDist {
    pub fn new(mean: f64, std: f64, n: usize) -> Self {
        Self {
            mean,
            std,
            n,
            orientation: Orientation::LowerIsBetter,
        }
    }

    /// Population mean and standard deviation of `samples`.
    pub fn from_samples(samples: &[f64]) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        Some(Self::new(mean, var.sqrt(), samples.len()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Better,
    Worse,
    Indistinguishable,
}

impl Verdict {
    pub fn arrow(self) -> &'static str {
        match self {
            Verdict::Better => "↑",
            Verdict::Worse => "↓",
            Verdict::Indistinguishable => "∼",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Better => "better",
            Verdict::Worse => "worse",
            Verdict::Indistinguishable => "indistinguishable",
        }
    }

    fn flip(self) -> Self {
        match self {
            Verdict::Better => Verdict::Worse,
            Verdict::Worse => Verdict::Better,
            Verdict::Indistinguishable => Verdict::Indistinguishable,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    pub z: f64,
    pub verdict: Verdict,
    /// `P(x1 < x2)` for independent draws.
    pub probability: f64,
}

/// `(μ1 − μ2) / sqrt(σ1² + σ2²)`. Two point masses compare as 0 when equal
/// and ±∞ otherwise.
pub fn z_score(x1: &MetricDist, x2: &MetricDist) -> f64 {
    let spread = (x1.std * x1.std + x2.std * x2.std).sqrt();
    let diff = x1.mean - x2.mean;
    if spread == 0.0 {
        if diff == 0.0 {
            return 0.0;
        }
        log::warn!("comparing degenerate distributions (σ = 0) with different means");
        return if diff > 0.0 { f64::INFINITY } else { f64::NEG_INFINITY };
    }
    diff / spread
}

/// Verdict for a lower-is-better metric.
pub fn verdict_for(z: f64) -> Verdict {
    if z < -1.0 {
        Verdict::Better
    } else if z > 1.0 {
        Verdict::Worse
    } else {
        Verdict::Indistinguishable
    }
}

pub fn compare(x1: &MetricDist, x2: &MetricDist) -> Comparison {
    let z = z_score(x1, x2);
    let verdict = match x1.orientation {
        Orientation::LowerIsBetter => verdict_for(z),
        Orientation::HigherIsBetter => verdict_for(z).flip(),
    };
    Comparison {
        z,
        verdict,
        probability: normal_cdf(-z),
    }
}

/// Standard normal CDF, Hart (1968) algorithm 5666 as arranged by West
/// (2005), "Better approximations to cumulative normal functions". Absolute
/// error is at double-precision level.
pub fn normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let ax = x.abs();
    let tail = if ax > 37.0 {
        0.0
    } else {
        let e = (-0.5 * ax * ax).exp();
        if ax < 7.071_067_811_865_47 {
            const P: [f64; 7] = [
                3.526_249_659_989_11e-2,
                0.700_383_064_443_688,
                6.373_962_203_531_65,
                33.912_866_078_383,
                112.079_291_497_871,
                221.213_596_169_931,
                220.206_867_912_376,
            ];
            const Q: [f64; 8] = [
                8.838_834_764_831_84e-2,
                1.755_667_163_182_64,
                16.064_177_579_207,
                86.780_732_202_946_1,
                296.564_248_779_674,
                637.333_633_378_831,
                793.826_512_519_948,
                440.413_735_824_752,
            ];
            let horner = |c: &[f64]| c.iter().fold(0.0, |acc, &k| acc * ax + k);
            e * horner(&P) / horner(&Q)
        } else {
            let mut b = ax + 0.65;
            b = ax + 4.0 / b;
            b = ax + 3.0 / b;
            b = ax + 2.0 / b;
            b = ax + 1.0 / b;
            e / b / 2.506_628_274_631
        }
    };
    if x > 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// The three reported metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    StepsToThreshold,
    #[serde(rename = "deviation_deg")]
    Deviation,
    #[serde(rename = "voltage_v")]
    Voltage,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::StepsToThreshold, Metric::Deviation, Metric::Voltage];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::StepsToThreshold => "steps_to_threshold",
            Metric::Deviation => "deviation_deg",
            Metric::Voltage => "voltage_v",
        }
    }
}

/// Per-experiment inputs to the comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentStats {
    pub name: String,
    pub reference: Option<String>,
    /// Over successful seeds only; `None` when no seed reached the threshold.
    pub steps: Option<MetricDist>,
    pub success_pct: f64,
    pub deviation: MetricDist,
    pub voltage: MetricDist,
}

impl ExperimentStats {
    fn metric(&self, m: Metric) -> Option<MetricDist> {
        match m {
            Metric::StepsToThreshold => self.steps,
            Metric::Deviation => Some(self.deviation),
            Metric::Voltage => Some(self.voltage),
        }
    }
}

/// One (experiment, metric) entry of the table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableCell {
    pub metric: Metric,
    pub dist: Option<MetricDist>,
    pub success_pct: Option<f64>,
    /// Absent for reference rows and for "n/a" step comparisons.
    pub z: Option<f64>,
    pub verdict: Option<Verdict>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub experiment: String,
    pub reference: Option<String>,
    pub cells: Vec<TableCell>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComparisonTable {
    pub rows: Vec<TableRow>,
}

fn compare_cell(metric: Metric, row: &ExperimentStats, reference: &ExperimentStats) -> (Option<f64>, Option<Verdict>) {
    match (row.metric(metric), reference.metric(metric)) {
        (Some(a), Some(b)) => {
            let c = compare(&a, &b);
            (Some(c.z), Some(c.verdict))
        }
        // Only the steps metric can be missing: a zero-success side.
        (Some(_), None) => (None, Some(Verdict::Better)),
        (None, Some(_)) => (None, Some(Verdict::Worse)),
        (None, None) => (None, Some(Verdict::Indistinguishable)),
    }
}

/// Compare every experiment that names a reference against it.
pub fn build_table(stats: &[ExperimentStats]) -> Result<ComparisonTable> {
    let mut rows = Vec::with_capacity(stats.len());
    for s in stats {
        let reference = match &s.reference {
            Some(name) => Some(
                stats
                    .iter()
                    .find(|r| &r.name == name)
                    .ok_or_else(|| Error::Config(format!("{}: unknown reference {name:?}", s.name)))?,
            ),
            None => None,
        };
        let cells = Metric::ALL
            .iter()
            .map(|&metric| {
                let (z, verdict) = match reference {
                    Some(r) => compare_cell(metric, s, r),
                    None => (None, None),
                };
                TableCell {
                    metric,
                    dist: s.metric(metric),
                    success_pct: (metric == Metric::StepsToThreshold).then_some(s.success_pct),
                    z,
                    verdict,
                }
            })
            .collect();
        rows.push(TableRow {
            experiment: s.name.clone(),
            reference: s.reference.clone(),
            cells,
        });
    }
    Ok(ComparisonTable { rows })
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ComparisonRecord {
    pub experiment: String,
    pub reference: Option<String>,
    pub metric: Metric,
    pub mu: Option<f64>,
    pub sigma: Option<f64>,
    pub success_pct: Option<f64>,
    pub z: Option<f64>,
    pub verdict: Option<Verdict>,
}

impl ComparisonTable {
    pub fn records(&self) -> Vec<ComparisonRecord> {
        self.rows
            .iter()
            .flat_map(|row| {
                row.cells.iter().map(move |c| ComparisonRecord {
                    experiment: row.experiment.clone(),
                    reference: row.reference.clone(),
                    metric: c.metric,
                    mu: c.dist.map(|d| d.mean),
                    sigma: c.dist.map(|d| d.std),
                    success_pct: c.success_pct,
                    z: c.z,
                    verdict: c.verdict,
                })
            })
            .collect()
    }

    /// `comparison.csv`: experiment, reference, metric, mu, sigma,
    /// success_pct, z, verdict.
    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for rec in self.records() {
            w.serialize(rec)?;
        }
        w.flush().map_err(|e| Error::io("comparison.csv", e))?;
        Ok(())
    }

    pub fn read_csv<R: io::Read>(reader: R) -> Result<Vec<ComparisonRecord>> {
        csv::Reader::from_reader(reader)
            .deserialize()
            .map(|r| r.map_err(Error::from))
            .collect()
    }

    /// Plain-text rendering with `μ ± σ`, success percentages, z and arrows.
    pub fn render(&self) -> String {
        let mut lines = vec![format!(
            "{:<36} | {:<28} | {:<10} | {:<14} | {:<10} | {:<14} | {:<10}",
            "experiment", "steps to threshold", "z", "deviation (°)", "z", "voltage (V)", "z"
        )];
        for row in &self.rows {
            let mut line = format!("{:<36}", row.experiment);
            for c in &row.cells {
                let value = match (c.metric, c.dist) {
                    (Metric::StepsToThreshold, None) => {
                        format!("n/a ± n/a ({:.0}%)", c.success_pct.unwrap_or(0.0))
                    }
                    (Metric::StepsToThreshold, Some(d)) => {
                        format!("{:.0} ± {:.0} ({:.0}%)", d.mean, d.std, c.success_pct.unwrap_or(0.0))
                    }
                    (_, Some(d)) => format!("{:.2} ± {:.2}", d.mean, d.std),
                    (_, None) => "n/a".to_string(),
                };
                let z = match (c.z, c.verdict) {
                    (Some(z), Some(v)) => format!("{z:.2} {}", v.arrow()),
                    (None, Some(v)) => format!("n/a {}", v.arrow()),
                    _ => String::new(),
                };
                let width = if c.metric == Metric::StepsToThreshold { 28 } else { 14 };
                line.push_str(&format!(" | {value:<width$} | {z:<10}"));
            }
            lines.push(line);
        }
        lines.join("\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(mean: f64, std: f64) -> MetricDist {
        MetricDist::new(mean, std, 10)
    }

    /// Simpson quadrature of the standard normal density from 0 to |x|.
    fn cdf_by_quadrature(x: f64) -> f64 {
        let n = 20_000;
        let h = x.abs() / n as f64;
        let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut s = pdf(0.0) + pdf(x.abs());
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * pdf(i as f64 * h);
        }
        let half = s * h / 3.0;
        if x >= 0.0 {
            0.5 + half
        } else {
            0.5 - half
        }
    }

    #[test]
    fn cdf_matches_quadrature() {
        for x in [-6.0, -3.3, -2.03, -1.0, -0.2, 0.0, 0.4, 1.0, 2.03, 3.7, 5.5] {
            let got = normal_cdf(x);
            let want = cdf_by_quadrature(x);
            assert!((got - want).abs() < 1e-10, "x={x}: {got} vs {want}");
        }
        assert_eq!(normal_cdf(40.0), 1.0);
        assert_eq!(normal_cdf(-40.0), 0.0);
        assert!((normal_cdf(8.0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn z_examples() {
        assert!((z_score(&d(2.91, 0.23), &d(6.88, 1.94)) + 2.03).abs() < 0.005);
        assert!((z_score(&d(3.84, 0.63), &d(21.47, 2.28)) + 7.45).abs() < 0.005);
        assert_eq!(z_score(&d(1.0, 0.3), &d(1.0, 0.3)), 0.0);
    }

    #[test]
    fn degenerate_distributions() {
        assert_eq!(z_score(&d(940_000.0, 0.0), &d(940_000.0, 0.0)), 0.0);
        assert_eq!(z_score(&d(2.0, 0.0), &d(1.0, 0.0)), f64::INFINITY);
        let c = compare(&d(1.0, 0.0), &d(2.0, 0.0));
        assert_eq!(c.z, f64::NEG_INFINITY);
        assert_eq!(c.verdict, Verdict::Better);
        assert_eq!(c.probability, 1.0);
    }

    #[test]
    fn verdict_thresholds() {
        let c = compare(&d(2.91, 0.23), &d(6.88, 1.94));
        assert_eq!(c.verdict, Verdict::Better);
        assert!((c.probability - 0.9788).abs() < 5e-4, "{}", c.probability);
        assert_eq!(verdict_for(0.85), Verdict::Indistinguishable);
        assert_eq!(verdict_for(1.10), Verdict::Worse);
        assert_eq!(verdict_for(-1.0), Verdict::Indistinguishable);
        let mut hi = d(5.0, 1.0);
        hi.orientation = Orientation::HigherIsBetter;
        assert_eq!(compare(&hi, &d(1.0, 1.0)).verdict, Verdict::Better);
    }

    #[test]
    fn samples_use_population_std() {
        let m = MetricDist::from_samples(&[1.0, 3.0]).unwrap();
        assert_eq!((m.mean, m.std, m.n), (2.0, 1.0, 2));
        assert!(MetricDist::from_samples(&[]).is_none());
    }

    fn exp(name: &str, reference: Option<&str>, steps: Option<(f64, f64)>, pct: f64) -> ExperimentStats {
        ExperimentStats {
            name: name.into(),
            reference: reference.map(Into::into),
            steps: steps.map(|(m, s)| d(m, s)),
            success_pct: pct,
            deviation: d(3.0, 0.2),
            voltage: d(10.0, 1.0),
        }
    }

    #[test]
    fn table_handles_zero_success_reference() {
        let stats = vec![
            exp("baseline", None, None, 0.0),
            exp("variant", Some("baseline"), Some((63_000.0, 22_825.0)), 100.0),
            exp("self", Some("self"), Some((40_000.0, 11_832.0)), 100.0),
        ];
        let t = build_table(&stats).unwrap();
        let base = &t.rows[0];
        assert!(base.cells.iter().all(|c| c.z.is_none() && c.verdict.is_none()));
        let v = &t.rows[1].cells[0];
        assert_eq!((v.z, v.verdict), (None, Some(Verdict::Better)));
        for c in &t.rows[2].cells {
            assert_eq!(c.z, Some(0.0));
            assert_eq!(c.verdict, Some(Verdict::Indistinguishable));
        }
        let text = t.render();
        assert!(text.contains("n/a ± n/a (0%)"));
        assert!(text.contains("40000 ± 11832 (100%)"));
        assert!(text.contains("n/a ↑"));
    }

    #[test]
    fn table_rejects_unknown_reference() {
        let stats = vec![exp("a", Some("nope"), None, 0.0)];
        assert!(matches!(build_table(&stats), Err(Error::Config(_))));
    }

    #[test]
    fn csv_columns() {
        let t = build_table(&[exp("a", None, None, 0.0), exp("b", Some("a"), None, 0.0)]).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "experiment,reference,metric,mu,sigma,success_pct,z,verdict"
        );
        assert_eq!(ComparisonTable::read_csv(buf.as_slice()).unwrap().len(), 6);
        assert!(text.contains("b,a,deviation_deg,3.0,0.2,,0.0,indistinguishable"));
    }
}
