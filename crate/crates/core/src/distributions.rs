//! Degree distributions: construction, sampling, size-biasing, conditioning,
//! augmentation and the empirical domination test.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::Stream;

/// Mass left beyond the stored support of lazily infinite laws.
pub const TRUNCATION: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailClass {
    Exponential,
    Subexponential,
    FiniteSupport,
    Undetermined,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DegreeDistribution {
    name: String,
    pmf: Vec<f64>,
    truncation_epsilon: f64,
    tail_class: TailClass,
    #[serde(skip)]
    cdf: Vec<f64>,
}

impl PartialEq for DegreeDistribution {
    fn eq(&self, other: &Self) -> bool {
        self.pmf == other.pmf && self.tail_class == other.tail_class
    }
}

impl DegreeDistribution {
    fn build(name: String, mut pmf: Vec<f64>, eps: f64, tail_class: TailClass) -> Self {
        while pmf.len() > 1 && *pmf.last().unwrap() == 0.0 {
            pmf.pop();
        }
        let mut cdf = Vec::with_capacity(pmf.len());
        let mut acc = 0.0;
        for &p in &pmf {
            acc += p;
            cdf.push(acc);
        }
        DegreeDistribution { name, pmf, truncation_epsilon: eps, tail_class, cdf }
    }

    /// Poisson(d), stored until the remaining mass drops below [`TRUNCATION`].
    pub fn poisson(d: f64) -> Result<Self> {
        if !(d >= 0.0) || d > 600.0 {
            return Err(Error::InvalidParameter(format!("poisson mean {d}")));
        }
        let mut pmf = vec![(-d).exp()];
        let mut acc = pmf[0];
        let mut k = 0usize;
        while 1.0 - acc >= TRUNCATION || (k as f64) < d {
            k += 1;
            let p = pmf[k - 1] * d / k as f64;
            pmf.push(p);
            acc += p;
            if d == 0.0 {
                break;
            }
        }
        let rest = (1.0 - acc).max(0.0);
        *pmf.last_mut().unwrap() += rest;
        Ok(Self::build(format!("poisson({d})"), pmf, rest, TailClass::Exponential))
    }

    /// P(k) = p (1-p)^k for k >= 0.
    pub fn geometric(p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidParameter(format!("geometric p {p}")));
        }
        let q = 1.0 - p;
        let mut pmf = vec![p];
        let mut tail = q;
        while tail >= TRUNCATION {
            pmf.push(p * tail);
            tail *= q;
        }
        *pmf.last_mut().unwrap() += tail;
        let class = if q == 0.0 { TailClass::FiniteSupport } else { TailClass::Exponential };
        Ok(Self::build(format!("geometric({p})"), pmf, tail, class))
    }

    pub fn point(k: usize) -> Self {
        let mut pmf = vec![0.0; k + 1];
        pmf[k] = 1.0;
        Self::build(format!("point({k})"), pmf, 0.0, TailClass::FiniteSupport)
    }

    /// p_k proportional to exp(-k^beta), stored until the remaining mass is
    /// below [`TRUNCATION`] or up to `kmax` if given. Declared subexponential
    /// for beta < 1.
    pub fn stretched_exponential(beta: f64, kmax: Option<usize>) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::InvalidParameter(format!("stretched exponent {beta}")));
        }
        // unnormalised weights until they are negligible relative to the head
        let mut w = Vec::new();
        let mut k = 0usize;
        loop {
            let x = (-(k as f64).powf(beta)).exp();
            w.push(x);
            if let Some(m) = kmax {
                if k >= m {
                    break;
                }
            } else if x < TRUNCATION * 1e-3 && k > 10 {
                break;
            }
            k += 1;
        }
        let z: f64 = w.iter().sum();
        // the omitted tail beyond the last atom, bounded by an integral
        let last = w.len() as f64;
        let omitted = tail_integral(beta, last) / z;
        let pmf: Vec<f64> = w.iter().map(|x| x / z).collect();
        let class = if beta < 1.0 { TailClass::Subexponential } else { TailClass::Exponential };
        let mut d = Self::build(format!("stretched({beta})"), pmf, omitted, class);
        d.truncation_epsilon = omitted;
        Ok(d)
    }

    /// A user table. Masses must sum to 1 within 1e-6; the tail class is inferred.
    pub fn table(pairs: &[(usize, f64)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidParameter("empty table".into()));
        }
        let kmax = pairs.iter().map(|p| p.0).max().unwrap();
        let mut pmf = vec![0.0; kmax + 1];
        for &(k, p) in pairs {
            if !(p >= 0.0) {
                return Err(Error::InvalidParameter(format!("negative mass at {k}")));
            }
            pmf[k] += p;
        }
        let s: f64 = pmf.iter().sum();
        if (s - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidParameter(format!("table sums to {s}")));
        }
        for p in pmf.iter_mut() {
            *p /= s;
        }
        let class = classify_tail(&pmf);
        Ok(Self::build("table".into(), pmf, (s - 1.0).abs(), class))
    }

    /// Read a `k,p` CSV table.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
        let mut pairs = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let k: usize = rec.get(0).unwrap_or("").trim().parse().map_err(|_| Error::Parse(format!("bad k in {rec:?}")))?;
            let p: f64 = rec.get(1).unwrap_or("").trim().parse().map_err(|_| Error::Parse(format!("bad p in {rec:?}")))?;
            pairs.push((k, p));
        }
        let mut d = Self::table(&pairs)?;
        d.name = format!("table({})", path.display());
        Ok(d)
    }

    /// Parse `poisson:3`, `poisson(3)`, `geometric:0.5`, `point:2`,
    /// `stretched:0.5`, `table:file.csv`.
    pub fn from_spec(spec: &str) -> Result<Self> {
        let s = spec.trim();
        let (name, arg) = if let Some(i) = s.find('(') {
            let arg = s[i + 1..].strip_suffix(')').ok_or_else(|| Error::Parse(spec.into()))?;
            (&s[..i], arg)
        } else if let Some(i) = s.find(':') {
            (&s[..i], &s[i + 1..])
        } else {
            return Err(Error::Parse(format!("distribution spec {spec}")));
        };
        let num = |a: &str| a.trim().parse::<f64>().map_err(|_| Error::Parse(format!("number in {spec}")));
        match name.trim() {
            "poisson" => Self::poisson(num(arg)?),
            "geometric" => Self::geometric(num(arg)?),
            "point" => Ok(Self::point(arg.trim().parse().map_err(|_| Error::Parse(spec.into()))?)),
            "stretched" => Self::stretched_exponential(num(arg)?, None),
            "table" => Self::from_csv(Path::new(arg.trim())),
            other => Err(Error::Parse(format!("unknown distribution {other}"))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }
    pub fn p(&self, k: usize) -> f64 {
        self.pmf.get(k).copied().unwrap_or(0.0)
    }
    pub fn max_k(&self) -> usize {
        self.pmf.len() - 1
    }
    pub fn truncation_epsilon(&self) -> f64 {
        self.truncation_epsilon
    }
    pub fn tail_class(&self) -> TailClass {
        self.tail_class
    }

    pub fn mean(&self) -> f64 {
        self.pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }

    pub fn second_moment(&self) -> f64 {
        self.pmf.iter().enumerate().map(|(k, p)| (k * k) as f64 * p).sum()
    }

    /// E[D(D-1)] / E[D].
    pub fn branching_rate(&self) -> f64 {
        let m = self.mean();
        if m == 0.0 {
            return 0.0;
        }
        let f: f64 = self.pmf.iter().enumerate().map(|(k, p)| (k * k.saturating_sub(1)) as f64 * p).sum();
        f / m
    }

    /// Flag for E D(D-2) > 0, the giant-component condition.
    pub fn supercritical(&self) -> bool {
        self.branching_rate() > 1.0
    }

    /// P(X >= k).
    pub fn tail(&self, k: usize) -> f64 {
        if k == 0 {
            return 1.0;
        }
        if k > self.max_k() {
            return 0.0;
        }
        self.pmf[k..].iter().sum()
    }

    /// mu'(k-1) = k mu(k) / sum_i i mu(i).
    pub fn size_biased(&self) -> Result<Self> {
        let m = self.mean();
        if !(m > 0.0) {
            return Err(Error::Degenerate("zero mean".into()));
        }
        let pmf: Vec<f64> = (1..self.pmf.len()).map(|k| k as f64 * self.pmf[k] / m).collect();
        let class = self.tail_class;
        Ok(Self::build(format!("size_biased({})", self.name), pmf, self.truncation_epsilon, class))
    }

    /// Restrict to k >= 1 and renormalise.
    pub fn condition_positive(&self) -> Result<Self> {
        let pos = 1.0 - self.pmf[0];
        if !(pos > 0.0) {
            return Err(Error::Degenerate("all mass at 0".into()));
        }
        let mut pmf: Vec<f64> = self.pmf.iter().map(|p| p / pos).collect();
        pmf[0] = 0.0;
        Ok(Self::build(format!("positive({})", self.name), pmf, self.truncation_epsilon / pos, self.tail_class))
    }

    /// The threshold k0 = max{k : sum_{j>=k} sqrt(p_j) >= 1/2}.
    pub fn augment_threshold(&self) -> Result<usize> {
        let mut acc = 0.0;
        for k in (0..self.pmf.len()).rev() {
            acc += self.pmf[k].sqrt();
            if acc >= 0.5 {
                return Ok(k);
            }
        }
        Err(Error::Degenerate("square-root tail never reaches 1/2 on the stored support".into()))
    }

    /// The augmented law: p_j/2 up to k0 and sqrt(p_j) above, normalised.
    pub fn augment(&self) -> Result<Self> {
        match self.tail_class {
            TailClass::Exponential | TailClass::FiniteSupport => {}
            _ => return Err(Error::NotExponentialTail),
        }
        let k0 = self.augment_threshold()?;
        let kmax = self.max_k();
        let mut w = vec![0.0; kmax + 1];
        if k0 < kmax {
            for j in 0..=kmax {
                w[j] = if j <= k0 { self.pmf[j] / 2.0 } else { self.pmf[j].sqrt() };
            }
        } else {
            for j in 0..k0 {
                w[j] = self.pmf[j] / 2.0;
            }
            w[k0] = self.pmf[k0].sqrt();
        }
        let z: f64 = w.iter().sum();
        if !z.is_finite() || z <= 0.0 {
            return Err(Error::NotExponentialTail);
        }
        let pmf: Vec<f64> = w.iter().map(|x| x / z).collect();
        let class = if self.tail_class == TailClass::FiniteSupport {
            TailClass::FiniteSupport
        } else {
            TailClass::Exponential
        };
        Ok(Self::build(format!("augmented({})", self.name), pmf, self.truncation_epsilon.sqrt() / z, class))
    }

    /// Normalising constant of [`augment`](Self::augment).
    pub fn augment_normaliser(&self) -> Result<f64> {
        let k0 = self.augment_threshold()?;
        let kmax = self.max_k();
        let z = if k0 < kmax {
            (0..=kmax).map(|j| if j <= k0 { self.pmf[j] / 2.0 } else { self.pmf[j].sqrt() }).sum()
        } else {
            (0..k0).map(|j| self.pmf[j] / 2.0).sum::<f64>() + self.pmf[k0].sqrt()
        };
        Ok(z)
    }

    /// One draw by inverse CDF; the folded tail lives in the last atom.
    pub fn draw(&self, rng: &mut Stream) -> usize {
        let u = rng.uniform() * self.cdf[self.cdf.len() - 1];
        let i = self.cdf.partition_point(|&c| c < u);
        i.min(self.pmf.len() - 1)
    }

    pub fn sample(&self, n: usize, rng: &mut Stream) -> Vec<usize> {
        (0..n).map(|_| self.draw(rng)).collect()
    }

    /// E[e^{eps X}] over the stored support.
    pub fn exp_moment(&self, eps: f64) -> f64 {
        self.pmf.iter().enumerate().map(|(k, p)| (eps * k as f64).exp() * p).sum()
    }
}

fn tail_integral(beta: f64, from: f64) -> f64 {
    // crude upper bound on int_from^inf exp(-x^beta) dx via a geometric series
    let x0 = (-from.powf(beta)).exp();
    let rate = beta * from.powf(beta - 1.0);
    if rate > 0.0 {
        x0 / rate
    } else {
        x0
    }
}

/// Classify the tail of a stored pmf.
///
/// Local decay rates of -ln p_k are measured on dyadic windows of the support.
/// A rate that holds steady or grows is exponential, a rate that keeps falling
/// is subexponential, anything else is undetermined. A table ending with a
/// non-negligible atom is finite-support.
pub fn classify_tail(pmf: &[f64]) -> TailClass {
    let kmax = match pmf.iter().rposition(|&p| p > 0.0) {
        Some(k) => k,
        None => return TailClass::Undetermined,
    };
    if pmf[kmax] >= 1e-9 {
        return TailClass::FiniteSupport;
    }
    // decay rates on windows [2^j, 2^{j+1}); the last entry carries the
    // truncated mass and is left out
    let kmax = kmax - 1;
    let mut rates = Vec::new();
    let mut lo = 1usize;
    while lo < kmax {
        let hi = (2 * lo).min(kmax);
        let a = (lo..=hi).find(|&k| pmf[k] > 0.0);
        let b = (lo..=hi).rev().find(|&k| pmf[k] > 0.0);
        if let (Some(a), Some(b)) = (a, b) {
            if b > a {
                rates.push((pmf[a].ln() - pmf[b].ln()) / (b - a) as f64);
            }
        }
        lo *= 2;
    }
    if rates.len() < 3 {
        return TailClass::Undetermined;
    }
    let r = &rates[rates.len() - 3..];
    // the eps ladder: the rate must stay above 2^-20 to count as exponential
    let floor = 2f64.powi(-20);
    if r[2] >= 0.95 * r[1] && r[2] >= floor {
        TailClass::Exponential
    } else if r[2] < r[1] && r[1] < r[0] && r[2] <= 0.85 * r[0] {
        TailClass::Subexponential
    } else {
        TailClass::Undetermined
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DominationReport {
    pub dominated: bool,
    /// first k where the empirical tail exceeds the reference tail
    pub worst_k: Option<usize>,
    /// every violating k
    pub violations: Vec<usize>,
    pub max_excess: f64,
}

/// Remove the `removal_budget` smallest samples and compare the empirical tail
/// P(X >= k) with the tail of `sharp` at every k.
pub fn domination_test(samples: &[usize], removal_budget: usize, sharp: &DegreeDistribution) -> Result<DominationReport> {
    let n = samples.len();
    if n == 0 {
        return Err(Error::InvalidParameter("no samples".into()));
    }
    if 3 * removal_budget > n {
        return Err(Error::OutsideHypothesis(format!("budget {removal_budget} exceeds n/3 for n = {n}")));
    }
    let mut xs = samples.to_vec();
    xs.sort_unstable();
    let kept = &xs[removal_budget..];
    let m = kept.len() as f64;
    let top = *kept.last().unwrap();
    let mut counts = vec![0usize; top + 2];
    for &x in kept {
        counts[x] += 1;
    }
    let mut violations = Vec::new();
    let mut max_excess = f64::NEG_INFINITY;
    let mut above = 0usize;
    let mut emp = vec![0.0; top + 2];
    for k in (0..=top + 1).rev() {
        above += counts[k];
        emp[k] = above as f64 / m;
    }
    for k in 1..=top + 1 {
        let excess = emp[k] - sharp.tail(k);
        if excess > max_excess {
            max_excess = excess;
        }
        if excess > 1e-12 {
            violations.push(k);
        }
    }
    Ok(DominationReport {
        dominated: violations.is_empty(),
        worst_k: violations.first().copied(),
        violations,
        max_excess,
    })
}
