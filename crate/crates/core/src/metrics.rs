//! Attacker success probabilities over server-compromise combinations.
//!
//! Servers are compromised independently, server `i` with probability
//! `risk_i`. An attacker holding the shares of the compromised servers
//! obtains a position whose precision depends only on how many distinct
//! refinement shares it collected ([`PrecisionModel`]).

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::placement::Placement;
use crate::shares::{Mode, ShareSet};

/// Largest server count accepted by the subset enumeration.
pub const ENUMERATION_LIMIT: usize = 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustRecord {
    pub server_id: String,
    pub risk: f64,
}

impl TrustRecord {
    pub fn new(server_id: impl Into<String>, risk: f64) -> Result<Self> {
        check_probability(risk, "risk")?;
        Ok(TrustRecord { server_id: server_id.into(), risk })
    }
}

fn check_probability(p: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{what} {p} outside [0, 1]")))
    }
}

/// Reads a trust database in CSV form with header `server_id,risk`.
pub fn read_trust_csv<R: Read>(reader: R) -> Result<Vec<TrustRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["server_id", "risk"] {
        return Err(Error::Parse { line: 1, msg: "expected header `server_id,risk`".into() });
    }
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<TrustRecord>().enumerate() {
        let line = i + 2;
        let rec = row.map_err(|e| Error::Parse { line, msg: e.to_string() })?;
        check_probability(rec.risk, "risk").map_err(|e| Error::Parse { line, msg: e.to_string() })?;
        out.push(rec);
    }
    if out.is_empty() {
        return Err(Error::Parse { line: 1, msg: "trust database lists no servers".into() });
    }
    Ok(out)
}

pub fn load_trust_csv(path: impl AsRef<Path>) -> Result<Vec<TrustRecord>> {
    read_trust_csv(std::fs::File::open(path)?)
}

/// One precision level of a privacy requirement: the attacker must reach a
/// precision of `phi` meters or better with probability strictly below `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RequirementLevel {
    pub phi: f64,
    pub p: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PrivacyRequirement {
    pub levels: Vec<RequirementLevel>,
}

impl PrivacyRequirement {
    pub fn new(levels: Vec<RequirementLevel>) -> Result<Self> {
        let req = PrivacyRequirement { levels };
        req.validate()?;
        Ok(req)
    }

    /// Probabilities in `[0, 1]`; finer precision levels never allow a
    /// higher probability than coarser ones.
    pub fn validate(&self) -> Result<()> {
        for l in &self.levels {
            check_probability(l.p, "threshold")?;
            if !(l.phi >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "precision level {} must be non-negative",
                    l.phi
                )));
            }
        }
        let mut sorted = self.levels.clone();
        sorted.sort_by(|a, b| a.phi.total_cmp(&b.phi));
        for w in sorted.windows(2) {
            if w[0].phi < w[1].phi && w[0].p > w[1].p {
                return Err(Error::InvalidParameter(format!(
                    "threshold {} at {} m exceeds threshold {} at the coarser {} m",
                    w[0].p, w[0].phi, w[1].p, w[1].phi
                )));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let req: PrivacyRequirement = serde_json::from_str(text)?;
        req.validate()?;
        Ok(req)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Precision (obfuscation radius, meters) reached after collecting
/// `0..=n` refinement shares, plus the precision gain of every share.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionModel {
    levels: Vec<f64>,
    gains: Vec<f64>,
}

impl PrecisionModel {
    /// Open-space shares: every share improves precision by `r0 / n`.
    pub fn homogeneous(r0: f64, n: usize) -> Self {
        let delta = r0 / n as f64;
        PrecisionModel {
            levels: (0..=n).map(|k| r0 * (n - k) as f64 / n as f64).collect(),
            gains: vec![delta; n],
        }
    }

    /// Shares each worth `gain` meters of precision, starting from `n * gain`.
    pub fn uniform_gain(gain: f64, n: usize) -> Self {
        PrecisionModel { levels: (0..=n).map(|k| (n - k) as f64 * gain).collect(), gains: vec![gain; n] }
    }

    /// Explicit precision after `0..=n` shares (e.g. constrained-space radii).
    pub fn from_levels(levels: Vec<f64>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidParameter("precision model needs at least one level".into()));
        }
        let gains = levels.windows(2).map(|w| w[0] - w[1]).collect();
        Ok(PrecisionModel { levels, gains })
    }

    pub fn for_share_set(set: &ShareSet) -> Self {
        match set.mode {
            Mode::Osps => Self::homogeneous(set.master.radius(), set.n()),
            Mode::Csps => {
                let mut levels = vec![set.master.radius()];
                levels.extend(set.refinements.iter().map(|s| s.radius.unwrap_or(0.0)));
                Self::from_levels(levels).expect("non-empty levels")
            }
        }
    }

    pub fn n(&self) -> usize {
        self.gains.len()
    }

    /// Precision after collecting `shares` shares.
    pub fn precision(&self, shares: usize) -> f64 {
        self.levels[shares.min(self.n())]
    }

    /// Precision gain contributed by share `j` (0-based).
    pub fn gain(&self, j: usize) -> f64 {
        self.gains[j]
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }
}

/// Attacker outcome when exactly `compromised` servers fall.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub compromised: usize,
    /// Probability-weighted average precision over all subsets of that size.
    pub phi: f64,
    /// Probability that exactly `compromised` servers fall.
    pub p_exact: f64,
    /// Probability that at least `compromised` servers fall.
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackCurve {
    /// One point per compromise count `1..=m`.
    pub points: Vec<CurvePoint>,
    /// Probability that no server falls.
    pub p_none: f64,
}

impl AttackCurve {
    /// Probability that the attacker reaches precision `phi` or better.
    pub fn prob_within(&self, phi: f64) -> f64 {
        let slack = 1e-9 * phi.abs().max(1.0);
        self.points.iter().filter(|pt| pt.phi <= phi + slack).map(|pt| pt.p).fold(0.0, f64::max)
    }

    /// Point carrying the most probability mass.
    pub fn peak(&self) -> Option<&CurvePoint> {
        self.points
            .iter()
            .max_by(|a, b| a.p_exact.total_cmp(&b.p_exact).then(b.compromised.cmp(&a.compromised)))
    }
}

/// Probability that at least `k_attack` of the servers are compromised.
pub fn prob_at_least_k(risks: &[f64], k_attack: usize) -> Result<f64> {
    if risks.is_empty() {
        return Err(Error::InvalidParameter("empty risk list".into()));
    }
    if k_attack == 0 || k_attack > risks.len() {
        return Err(Error::InvalidParameter(format!(
            "compromise count {k_attack} outside 1..={}",
            risks.len()
        )));
    }
    for &r in risks {
        check_probability(r, "risk")?;
    }
    Ok(exactly_k(risks)[k_attack..].iter().sum())
}

/// Distribution of the number of compromised servers.
pub fn exactly_k(risks: &[f64]) -> Vec<f64> {
    let mut dist = vec![0.0; risks.len() + 1];
    dist[0] = 1.0;
    for (i, &p) in risks.iter().enumerate() {
        for k in (0..=i + 1).rev() {
            let stay = dist[k] * (1.0 - p);
            let fall = if k > 0 { dist[k - 1] * p } else { 0.0 };
            dist[k] = stay + fall;
        }
    }
    dist
}

fn check_model(placement: &Placement, model: &PrecisionModel) -> Result<()> {
    if placement.assignment.len() != model.n() {
        return Err(Error::InvalidParameter(format!(
            "placement covers {} shares, precision model {}",
            placement.assignment.len(),
            model.n()
        )));
    }
    Ok(())
}

/// Attack curve by enumerating every subset of compromised servers.
pub fn attack_curve(placement: &Placement, model: &PrecisionModel) -> Result<AttackCurve> {
    check_model(placement, model)?;
    let m = placement.servers.len();
    if m > ENUMERATION_LIMIT {
        return Err(Error::TooManyServers { servers: m, limit: ENUMERATION_LIMIT });
    }
    let risks = placement.risks();
    let counts = placement.counts();

    let mut mass = vec![0.0; m + 1];
    let mut weighted = vec![0.0; m + 1];
    let mut subsets = vec![0.0; m + 1];
    let mut plain = vec![0.0; m + 1];
    for mask in 0u32..(1u32 << m) {
        let mut w = 1.0;
        let mut shares = 0;
        for i in 0..m {
            if mask & (1 << i) != 0 {
                w *= risks[i];
                shares += counts[i];
            } else {
                w *= 1.0 - risks[i];
            }
        }
        let k = mask.count_ones() as usize;
        let phi = model.precision(shares);
        mass[k] += w;
        weighted[k] += w * phi;
        subsets[k] += 1.0;
        plain[k] += phi;
    }
    Ok(assemble(mass, weighted, subsets, plain))
}

/// Same curve as [`attack_curve`], by dynamic programming over
/// (compromised servers, collected shares); no server-count bound.
pub fn attack_curve_dp(placement: &Placement, model: &PrecisionModel) -> Result<AttackCurve> {
    check_model(placement, model)?;
    let m = placement.servers.len();
    let n = model.n();
    let risks = placement.risks();
    let counts = placement.counts();

    // prob[k][s], and the number of subsets reaching (k, s).
    let mut prob = vec![vec![0.0; n + 1]; m + 1];
    let mut ways = vec![vec![0.0; n + 1]; m + 1];
    prob[0][0] = 1.0;
    ways[0][0] = 1.0;
    for (i, (&p, &c)) in risks.iter().zip(&counts).enumerate() {
        for k in (0..=i).rev() {
            for s in (0..=n - c).rev() {
                let (pw, ww) = (prob[k][s], ways[k][s]);
                if pw == 0.0 && ww == 0.0 {
                    continue;
                }
                prob[k + 1][s + c] += pw * p;
                ways[k + 1][s + c] += ww;
                prob[k][s] = pw * (1.0 - p);
            }
        }
    }
    let mut mass = vec![0.0; m + 1];
    let mut weighted = vec![0.0; m + 1];
    let mut subsets = vec![0.0; m + 1];
    let mut plain = vec![0.0; m + 1];
    for k in 0..=m {
        for s in 0..=n {
            let phi = model.precision(s);
            mass[k] += prob[k][s];
            weighted[k] += prob[k][s] * phi;
            subsets[k] += ways[k][s];
            plain[k] += ways[k][s] * phi;
        }
    }
    Ok(assemble(mass, weighted, subsets, plain))
}

fn assemble(mass: Vec<f64>, weighted: Vec<f64>, subsets: Vec<f64>, plain: Vec<f64>) -> AttackCurve {
    let m = mass.len() - 1;
    let mut at_least = vec![0.0; m + 2];
    for k in (0..=m).rev() {
        at_least[k] = at_least[k + 1] + mass[k];
    }
    let points = (1..=m)
        .map(|k| CurvePoint {
            compromised: k,
            // Impossible outcomes fall back to the plain subset average.
            phi: if mass[k] > 0.0 { weighted[k] / mass[k] } else { plain[k] / subsets[k] },
            p_exact: mass[k],
            p: at_least[k].min(1.0),
        })
        .collect();
    AttackCurve { points, p_none: mass[0] }
}

/// Exact distribution of the attacker's precision: `(phi, probability)`
/// for every reachable share count, finest precision last.
pub fn precision_distribution(placement: &Placement, model: &PrecisionModel) -> Result<Vec<(f64, f64)>> {
    check_model(placement, model)?;
    let n = model.n();
    let mut dist = vec![0.0; n + 1];
    dist[0] = 1.0;
    for (&p, &c) in placement.risks().iter().zip(&placement.counts()) {
        for s in (0..=n - c).rev() {
            let w = dist[s];
            if w == 0.0 {
                continue;
            }
            dist[s] = w * (1.0 - p);
            dist[s + c] += w * p;
        }
    }
    Ok(dist.into_iter().enumerate().map(|(s, p)| (model.precision(s), p)).collect())
}

/// Whether every requirement level holds: the attacker's probability of
/// reaching precision `phi_k` or better stays strictly below `p_k`. A
/// threshold of 1 places no constraint.
pub fn satisfies(curve: &AttackCurve, req: &PrivacyRequirement) -> bool {
    req.levels.iter().all(|l| l.p >= 1.0 || curve.prob_within(l.phi) < l.p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::placement::uniform_placement;
    use proptest::prelude::*;

    fn servers(risks: &[f64]) -> Vec<TrustRecord> {
        risks.iter().enumerate().map(|(i, &r)| TrustRecord::new(format!("ls{i}"), r).unwrap()).collect()
    }

    /// Direct sum over every subset, written independently of the library.
    fn brute_at_least(risks: &[f64], k: usize) -> f64 {
        let m = risks.len();
        let mut total = 0.0;
        for mask in 0usize..(1 << m) {
            if (mask.count_ones() as usize) < k {
                continue;
            }
            total +=
                (0..m).map(|i| if mask >> i & 1 == 1 { risks[i] } else { 1.0 - risks[i] }).product::<f64>();
        }
        total
    }

    #[test]
    fn two_fair_servers() {
        assert_eq!(prob_at_least_k(&[0.5, 0.5], 1).unwrap(), 0.75);
        assert_eq!(prob_at_least_k(&[0.5, 0.5], 2).unwrap(), 0.25);
    }

    #[test]
    fn three_servers_by_hand() {
        // Exactly two: .1*.2*.7 + .1*.3*.8 + .2*.3*.9 = .014 + .024 + .054;
        // all three: .006.
        let p = prob_at_least_k(&[0.1, 0.2, 0.3], 2).unwrap();
        assert!((p - 0.098).abs() < 1e-15, "{p}");
    }

    #[test]
    fn invalid_counts() {
        assert!(prob_at_least_k(&[], 1).is_err());
        assert!(prob_at_least_k(&[0.2], 0).is_err());
        assert!(prob_at_least_k(&[0.2], 2).is_err());
        assert!(prob_at_least_k(&[1.2], 1).is_err());
    }

    #[test]
    fn certain_compromise_of_single_server() {
        let pl = uniform_placement(4, &servers(&[1.0]));
        let curve = attack_curve(&pl, &PrecisionModel::homogeneous(100.0, 4)).unwrap();
        assert_eq!(curve.points.len(), 1);
        assert_eq!(curve.points[0].phi, 0.0);
        assert_eq!(curve.points[0].p, 1.0);
    }

    #[test]
    fn zero_risks_give_zero_probabilities() {
        let pl = uniform_placement(6, &servers(&[0.0, 0.0, 0.0]));
        let curve = attack_curve(&pl, &PrecisionModel::homogeneous(60.0, 6)).unwrap();
        assert!(curve.points.iter().all(|p| p.p == 0.0 && p.phi.is_finite()));
        assert_eq!(curve.p_none, 1.0);
    }

    #[test]
    fn five_server_risks_uniform_curve_matches_second_enumerator() {
        let risks = [0.4932, 0.3292, 0.2344, 0.1788, 0.0925];
        let pl = uniform_placement(15, &servers(&risks));
        let model = PrecisionModel::uniform_gain(1.0, 15);
        let curve = attack_curve(&pl, &model).unwrap();

        // Independent enumerator over k-combinations of the original list.
        let counts = [3usize; 5];
        for k in 1..=5 {
            let (mut mass, mut phi) = (0.0, 0.0);
            for mask in 0usize..32 {
                if mask.count_ones() as usize != k {
                    continue;
                }
                let w: f64 =
                    (0..5).map(|i| if mask >> i & 1 == 1 { risks[i] } else { 1.0 - risks[i] }).product();
                let shares: usize = (0..5).filter(|i| mask >> i & 1 == 1).map(|i| counts[i]).sum();
                mass += w;
                phi += w * (15 - shares) as f64;
            }
            let pt = curve.points[k - 1];
            assert!((pt.p_exact - mass).abs() < 1e-14);
            assert!((pt.phi - phi / mass).abs() < 1e-12);
            assert!((pt.p - brute_at_least(&risks, k)).abs() < 1e-14);
        }
        assert!((curve.points[1].p - 0.4007).abs() < 5e-5);
    }

    #[test]
    fn single_server_requirement() {
        let pl = uniform_placement(3, &servers(&[0.5]));
        let curve = attack_curve(&pl, &PrecisionModel::homogeneous(30.0, 3)).unwrap();
        let req = PrivacyRequirement::new(vec![RequirementLevel { phi: 30.0, p: 0.4 }]).unwrap();
        assert!(!satisfies(&curve, &req));
        let loose = PrivacyRequirement::new(vec![RequirementLevel { phi: 30.0, p: 0.6 }]).unwrap();
        assert!(satisfies(&curve, &loose));
    }

    #[test]
    fn vacuous_requirements() {
        let pl = uniform_placement(5, &servers(&[1.0, 0.3]));
        let curve = attack_curve(&pl, &PrecisionModel::homogeneous(50.0, 5)).unwrap();
        assert!(satisfies(&curve, &PrivacyRequirement::default()));
        let ones = PrivacyRequirement::new(
            [0.0, 10.0, 50.0].iter().map(|&phi| RequirementLevel { phi, p: 1.0 }).collect(),
        )
        .unwrap();
        assert!(satisfies(&curve, &ones));
    }

    #[test]
    fn requirement_validation() {
        let bad = PrivacyRequirement::new(vec![
            RequirementLevel { phi: 10.0, p: 0.5 },
            RequirementLevel { phi: 20.0, p: 0.2 },
        ]);
        assert!(bad.is_err());
        assert!(PrivacyRequirement::from_json(r#"{"levels":[{"phi":5,"p":1.5}]}"#).is_err());
        let ok =
            PrivacyRequirement::from_json(r#"{"levels":[{"phi":5,"p":0.1},{"phi":25,"p":0.3}]}"#).unwrap();
        assert_eq!(ok.levels.len(), 2);
    }

    #[test]
    fn trust_csv() {
        let text = "server_id,risk\nA,0.25\nB, 0.5\n";
        let recs = read_trust_csv(text.as_bytes()).unwrap();
        assert_eq!(recs[1], TrustRecord::new("B", 0.5).unwrap());
        let err = read_trust_csv("server_id,risk\nA,0.2\nB,2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        assert!(read_trust_csv("id,p\nA,0.1\n".as_bytes()).is_err());
    }

    #[test]
    fn csps_model_uses_generated_radii() {
        use crate::geometry::{Point, Vector};
        use crate::shares::{MasterShare, RefinementShare};
        let set = ShareSet {
            mode: Mode::Csps,
            master: MasterShare::new(Point::ORIGIN, 120.0),
            refinements: vec![
                RefinementShare::constrained(Vector::ZERO, 70.0),
                RefinementShare::constrained(Vector::ZERO, 0.0),
            ],
            delta_r: 50.0,
        };
        let model = PrecisionModel::for_share_set(&set);
        assert_eq!(model.levels(), &[120.0, 70.0, 0.0]);
        assert_eq!(model.gain(0), 50.0);
        assert_eq!(model.gain(1), 70.0);
    }

    fn risk_vec() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0..=1.0f64, 1..9)
    }

    proptest! {
        #[test]
        fn at_least_k_agrees_with_brute_force(risks in risk_vec()) {
            for k in 1..=risks.len() {
                let p = prob_at_least_k(&risks, k).unwrap();
                prop_assert!((p - brute_at_least(&risks, k)).abs() < 1e-12);
            }
        }

        #[test]
        fn at_least_k_is_monotone(risks in risk_vec(), bump in 0.0..1.0f64, which in 0usize..8) {
            let m = risks.len();
            for k in 1..m {
                prop_assert!(prob_at_least_k(&risks, k + 1).unwrap() <= prob_at_least_k(&risks, k).unwrap() + 1e-15);
            }
            let i = which % m;
            let mut higher = risks.clone();
            higher[i] = risks[i] + (1.0 - risks[i]) * bump;
            for k in 1..=m {
                prop_assert!(prob_at_least_k(&higher, k).unwrap() >= prob_at_least_k(&risks, k).unwrap() - 1e-15);
            }
        }

        #[test]
        fn complement_identity(risks in risk_vec()) {
            let none: f64 = risks.iter().map(|p| 1.0 - p).product();
            prop_assert!((prob_at_least_k(&risks, 1).unwrap() - (1.0 - none)).abs() < 1e-12);
        }

        #[test]
        fn curve_masses_sum_to_one(risks in risk_vec(), n in 1usize..20, seed in 0u64..1000) {
            use rand::Rng;
            let mut rng = crate::seeded_rng(seed);
            let srv = servers(&risks);
            let mut pl = uniform_placement(n, &srv);
            for a in pl.assignment.iter_mut() {
                *a = rng.random_range(0..srv.len());
            }
            let model = PrecisionModel::homogeneous(100.0, n);
            let curve = attack_curve(&pl, &model).unwrap();
            let exact: f64 = curve.points.iter().map(|p| p.p_exact).sum();
            prop_assert!(exact <= 1.0 + 1e-12);
            prop_assert!((exact + curve.p_none - 1.0).abs() < 1e-12);

            let dp = attack_curve_dp(&pl, &model).unwrap();
            for (a, b) in curve.points.iter().zip(&dp.points) {
                prop_assert!((a.p - b.p).abs() < 1e-12);
                prop_assert!((a.p_exact - b.p_exact).abs() < 1e-12);
                prop_assert!((a.phi - b.phi).abs() < 1e-9 * a.phi.abs().max(1.0));
            }
            let dist = precision_distribution(&pl, &model).unwrap();
            prop_assert!((dist.iter().map(|d| d.1).sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
