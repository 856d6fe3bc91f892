//! Gradual semantics: DF-QuAD and MLP-based.
//!
//! Both evaluators map a valid [`Qbaf`] to a total [`StrengthAssignment`].
//! DF-QuAD is defined recursively and is only evaluated on acyclic
//! frameworks. The MLP-based semantics is a synchronous fixed-point
//! iteration of an aggregation step (sum of supporter strengths minus sum of
//! attacker strengths) followed by a logistic influence step.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qbaf::{ArgumentId, Qbaf, QbafError};

#[derive(Debug, Error)]
pub enum SemanticsError {
    #[error("value {0} is outside [0, 1]")]
    OutOfRange(f64),
    #[error("framework contains a cycle through {0}")]
    CyclicFramework(ArgumentId),
    #[error("strengths did not converge within {iterations} iterations")]
    NonConvergent { iterations: usize },
    #[error("invalid semantics configuration: {0}")]
    InvalidConfig(String),
    #[error("{0} is not a topological order of the framework")]
    InvalidOrder(String),
    #[error(transparent)]
    Framework(#[from] QbafError),
}

/// Final strength of every argument of an evaluated framework.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StrengthAssignment(BTreeMap<ArgumentId, f64>);

impl StrengthAssignment {
    pub fn get(&self, id: &ArgumentId) -> Option<f64> {
        self.0.get(id).copied()
    }

    pub fn insert(&mut self, id: ArgumentId, value: f64) {
        self.0.insert(id, value);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ArgumentId, f64)> + '_ {
        self.0.iter().map(|(k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn retain(&mut self, mut keep: impl FnMut(&ArgumentId) -> bool) {
        self.0.retain(|k, _| keep(k));
    }
}

impl FromIterator<(ArgumentId, f64)> for StrengthAssignment {
    fn from_iter<I: IntoIterator<Item = (ArgumentId, f64)>>(iter: I) -> Self {
        StrengthAssignment(iter.into_iter().collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SemanticsKind {
    #[serde(rename = "dfquad")]
    DfQuad,
    #[serde(rename = "mlp")]
    MlpBased,
}

impl SemanticsKind {
    pub fn name(self) -> &'static str {
        match self {
            SemanticsKind::DfQuad => "dfquad",
            SemanticsKind::MlpBased => "mlp",
        }
    }
}

impl std::str::FromStr for SemanticsKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "dfquad" => Ok(SemanticsKind::DfQuad),
            "mlp" | "mlpbased" => Ok(SemanticsKind::MlpBased),
            _ => Err(format!("unknown semantics {s:?} (expected dfquad or mlp)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemanticsConfig {
    pub kind: SemanticsKind,
    pub convergence_epsilon: f64,
    pub max_iterations: usize,
    pub logit_clamp_epsilon: f64,
}

impl SemanticsConfig {
    pub fn new(kind: SemanticsKind) -> Self {
        SemanticsConfig {
            kind,
            convergence_epsilon: 1e-8,
            max_iterations: 1000,
            logit_clamp_epsilon: 1e-6,
        }
    }

    pub fn df_quad() -> Self {
        Self::new(SemanticsKind::DfQuad)
    }

    pub fn mlp() -> Self {
        Self::new(SemanticsKind::MlpBased)
    }

    pub fn validate(&self) -> Result<(), SemanticsError> {
        if !(self.convergence_epsilon > 0.0 && self.convergence_epsilon < 1.0) {
            return Err(SemanticsError::InvalidConfig(format!(
                "convergence_epsilon must lie in (0, 1), got {}",
                self.convergence_epsilon
            )));
        }
        if self.max_iterations < 1 {
            return Err(SemanticsError::InvalidConfig("max_iterations must be at least 1".into()));
        }
        if !(self.logit_clamp_epsilon > 0.0 && self.logit_clamp_epsilon < 0.5) {
            return Err(SemanticsError::InvalidConfig(format!(
                "logit_clamp_epsilon must lie in (0, 0.5), got {}",
                self.logit_clamp_epsilon
            )));
        }
        Ok(())
    }
}

impl Default for SemanticsConfig {
    fn default() -> Self {
        Self::df_quad()
    }
}

fn check_unit(v: f64) -> Result<f64, SemanticsError> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(SemanticsError::OutOfRange(v))
    }
}

/// Probabilistic sum `f(x, y) = x + y - x*y`.
fn prob_sum(x: f64, y: f64) -> f64 {
    x + y - x * y
}

/// DF-QuAD strength aggregation: 0 for no values, otherwise a left fold of
/// the probabilistic sum.
pub fn df_quad_aggregate(values: &[f64]) -> Result<f64, SemanticsError> {
    for &v in values {
        check_unit(v)?;
    }
    Ok(aggregate_unchecked(values.iter().copied()))
}

fn aggregate_unchecked(values: impl Iterator<Item = f64>) -> f64 {
    let mut it = values;
    match it.next() {
        None => 0.0,
        Some(first) => it.fold(first, prob_sum),
    }
}

/// DF-QuAD influence of the aggregated attack (`va`) and support (`vs`) on a
/// base score `v0`.
pub fn df_quad_influence(v0: f64, va: f64, vs: f64) -> Result<f64, SemanticsError> {
    check_unit(v0)?;
    check_unit(va)?;
    check_unit(vs)?;
    Ok(influence_unchecked(v0, va, vs))
}

fn influence_unchecked(v0: f64, va: f64, vs: f64) -> f64 {
    let diff = (vs - va).abs();
    if va >= vs {
        v0 - v0 * diff
    } else {
        v0 + (1.0 - v0) * diff
    }
}

/// Logistic influence for the MLP-based semantics:
/// `logistic(logit(beta) + alpha)`, with `beta` clipped to
/// `[clamp, 1 - clamp]` before the logit. A zero `alpha` returns `beta`
/// unchanged, so unconnected arguments keep their exact base score.
pub fn mlp_influence(beta: f64, alpha: f64, clamp: f64) -> f64 {
    if alpha == 0.0 {
        return beta;
    }
    let b = beta.clamp(clamp, 1.0 - clamp);
    logistic((b / (1.0 - b)).ln() + alpha)
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Adjacency by argument position, incoming edges sorted by source position.
struct Incidence {
    base: Vec<f64>,
    attackers: Vec<Vec<usize>>,
    supporters: Vec<Vec<usize>>,
}

impl Incidence {
    fn new(q: &Qbaf) -> Result<Self, SemanticsError> {
        q.ensure_valid()?;
        let n = q.len();
        let mut attackers = vec![Vec::new(); n];
        let mut supporters = vec![Vec::new(); n];
        let pos = |id: &ArgumentId| q.position(id).expect("validated endpoint");
        for (from, to) in q.attacks() {
            attackers[pos(to)].push(pos(from));
        }
        for (from, to) in q.supports() {
            supporters[pos(to)].push(pos(from));
        }
        for list in attackers.iter_mut().chain(supporters.iter_mut()) {
            list.sort_unstable();
        }
        let base = q
            .arguments()
            .iter()
            .map(|a| q.base_score(&a.id).expect("validated base score"))
            .collect();
        Ok(Incidence { base, attackers, supporters })
    }

    fn len(&self) -> usize {
        self.base.len()
    }

    /// Kahn's algorithm, lowest position first among ready arguments.
    fn topological_order(&self, q: &Qbaf) -> Result<Vec<usize>, SemanticsError> {
        let n = self.len();
        let mut indegree: Vec<usize> = (0..n)
            .map(|i| self.attackers[i].len() + self.supporters[i].len())
            .collect();
        let mut children = vec![Vec::new(); n];
        for i in 0..n {
            for &p in self.attackers[i].iter().chain(&self.supporters[i]) {
                children[p].push(i);
            }
        }
        let mut ready: std::collections::BTreeSet<usize> =
            (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(i) = ready.pop_first() {
            order.push(i);
            for &c in &children[i] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        if order.len() < n {
            let stuck = (0..n).find(|&i| indegree[i] > 0).expect("some argument left");
            return Err(SemanticsError::CyclicFramework(q.arguments()[stuck].id.clone()));
        }
        Ok(order)
    }

    fn assignment(&self, q: &Qbaf, values: &[f64]) -> StrengthAssignment {
        q.arguments()
            .iter()
            .zip(values)
            .map(|(a, &v)| (a.id.clone(), v))
            .collect()
    }
}

/// Evaluates `q` under DF-QuAD in topological order.
pub fn evaluate_df_quad(q: &Qbaf) -> Result<StrengthAssignment, SemanticsError> {
    let inc = Incidence::new(q)?;
    let order = inc.topological_order(q)?;
    Ok(df_quad_in_order(q, &inc, &order))
}

/// Evaluates `q` under DF-QuAD following a caller-supplied topological order.
pub fn evaluate_df_quad_with_order(
    q: &Qbaf,
    order: &[ArgumentId],
) -> Result<StrengthAssignment, SemanticsError> {
    let inc = Incidence::new(q)?;
    inc.topological_order(q)?;
    let bad = || SemanticsError::InvalidOrder(format!("{order:?}"));
    if order.len() != q.len() {
        return Err(bad());
    }
    let mut rank = vec![usize::MAX; q.len()];
    let mut positions = Vec::with_capacity(order.len());
    for (r, id) in order.iter().enumerate() {
        let p = q.position(id).ok_or_else(bad)?;
        if rank[p] != usize::MAX {
            return Err(bad());
        }
        rank[p] = r;
        positions.push(p);
    }
    for i in 0..q.len() {
        if inc.attackers[i].iter().chain(&inc.supporters[i]).any(|&p| rank[p] > rank[i]) {
            return Err(bad());
        }
    }
    Ok(df_quad_in_order(q, &inc, &positions))
}

fn df_quad_in_order(q: &Qbaf, inc: &Incidence, order: &[usize]) -> StrengthAssignment {
    let mut sigma = vec![f64::NAN; inc.len()];
    for &i in order {
        let va = aggregate_unchecked(inc.attackers[i].iter().map(|&p| sigma[p]));
        let vs = aggregate_unchecked(inc.supporters[i].iter().map(|&p| sigma[p]));
        sigma[i] = influence_unchecked(inc.base[i], va, vs);
    }
    inc.assignment(q, &sigma)
}

/// Evaluates `q` under the MLP-based semantics.
pub fn evaluate_mlp(q: &Qbaf, cfg: &SemanticsConfig) -> Result<StrengthAssignment, SemanticsError> {
    evaluate_mlp_counted(q, cfg).map(|(s, _)| s)
}

/// As [`evaluate_mlp`], also returning the number of synchronous iterations
/// performed, including the final one that detected convergence.
pub fn evaluate_mlp_counted(
    q: &Qbaf,
    cfg: &SemanticsConfig,
) -> Result<(StrengthAssignment, usize), SemanticsError> {
    cfg.validate()?;
    let inc = Incidence::new(q)?;
    let mut current = inc.base.clone();
    let mut next = vec![0.0; inc.len()];
    for iteration in 1..=cfg.max_iterations {
        let mut delta: f64 = 0.0;
        for i in 0..inc.len() {
            let support: f64 = inc.supporters[i].iter().map(|&p| current[p]).sum();
            let attack: f64 = inc.attackers[i].iter().map(|&p| current[p]).sum();
            next[i] = mlp_influence(inc.base[i], support - attack, cfg.logit_clamp_epsilon);
            delta = delta.max((next[i] - current[i]).abs());
        }
        std::mem::swap(&mut current, &mut next);
        if delta < cfg.convergence_epsilon {
            return Ok((inc.assignment(q, &current), iteration));
        }
    }
    Err(SemanticsError::NonConvergent { iterations: cfg.max_iterations })
}

/// Dispatches on `cfg.kind`.
pub fn evaluate(q: &Qbaf, cfg: &SemanticsConfig) -> Result<StrengthAssignment, SemanticsError> {
    match cfg.kind {
        SemanticsKind::DfQuad => evaluate_df_quad(q),
        SemanticsKind::MlpBased => evaluate_mlp(q, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_one() -> Qbaf {
        Qbaf::builder()
            .text("a", 0.5)
            .text("b", 0.4)
            .text("c", 0.2)
            .text("d", 0.7)
            .attack("b", "c")
            .attack("c", "d")
            .support("a", "c")
            .build()
            .unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() < tol
    }

    #[test]
    fn aggregate_examples() {
        assert_eq!(df_quad_aggregate(&[]).unwrap(), 0.0);
        assert_eq!(df_quad_aggregate(&[0.37]).unwrap(), 0.37);
        assert!(close(df_quad_aggregate(&[0.4, 0.5]).unwrap(), 0.7, 1e-12));
        assert!(close(df_quad_aggregate(&[0.2, 0.3, 0.5]).unwrap(), 0.72, 1e-12));
        assert!(matches!(df_quad_aggregate(&[0.2, 1.5]), Err(SemanticsError::OutOfRange(_))));
    }

    #[test]
    fn influence_examples() {
        assert!(close(df_quad_influence(0.2, 0.4, 0.5).unwrap(), 0.28, 1e-12));
        assert!(close(df_quad_influence(0.7, 0.28, 0.0).unwrap(), 0.504, 1e-12));
        assert_eq!(df_quad_influence(0.33, 0.9, 0.9).unwrap(), 0.33);
        assert!(df_quad_influence(-0.1, 0.0, 0.0).is_err());
    }

    #[test]
    fn mlp_influence_examples() {
        assert_eq!(mlp_influence(0.5, 0.0, 1e-6), 0.5);
        assert!(close(mlp_influence(0.2, 0.1, 1e-6), 0.216, 1e-3));
        let c = mlp_influence(0.2, 0.1, 1e-6);
        assert!(close(mlp_influence(0.7, -c, 1e-6), 0.653, 1e-3));
        // clamping keeps the extremes finite
        assert!(mlp_influence(0.0, 0.3, 1e-6) > 0.0);
        assert!(mlp_influence(1.0, -0.3, 1e-6) < 1.0);
    }

    #[test]
    fn example_one_df_quad() {
        let s = evaluate_df_quad(&example_one()).unwrap();
        for (id, want) in [("a", 0.5), ("b", 0.4), ("c", 0.28), ("d", 0.504)] {
            assert!(close(s.get(&id.into()).unwrap(), want, 1e-9), "{id}");
        }
    }

    #[test]
    fn example_one_mlp() {
        let s = evaluate_mlp(&example_one(), &SemanticsConfig::mlp()).unwrap();
        for (id, want) in [("a", 0.5), ("b", 0.4), ("c", 0.216), ("d", 0.653)] {
            assert!(close(s.get(&id.into()).unwrap(), want, 1e-3), "{id}");
        }
    }

    #[test]
    fn unconnected_arguments_keep_base_scores() {
        let q = Qbaf::builder().text("x", 0.0).text("y", 1.0).text("z", 0.42).build().unwrap();
        let d = evaluate_df_quad(&q).unwrap();
        let (m, iterations) = evaluate_mlp_counted(&q, &SemanticsConfig::mlp()).unwrap();
        assert_eq!(iterations, 1);
        for (id, b) in [("x", 0.0), ("y", 1.0), ("z", 0.42)] {
            assert_eq!(d.get(&id.into()), Some(b));
            assert_eq!(m.get(&id.into()), Some(b));
        }
    }

    #[test]
    fn cycles_are_rejected_by_df_quad() {
        let q = Qbaf::builder()
            .text("a", 0.5)
            .text("b", 0.5)
            .attack("a", "b")
            .support("b", "a")
            .build()
            .unwrap();
        assert!(matches!(evaluate_df_quad(&q), Err(SemanticsError::CyclicFramework(_))));
    }

    #[test]
    fn oscillating_cycle_is_non_convergent() {
        // two mutual strong attackers with extreme bases flip each other
        let q = Qbaf::builder()
            .text("a", 0.5)
            .text("b", 0.5)
            .text("c", 0.5)
            .attack("a", "b")
            .attack("b", "c")
            .attack("c", "a")
            .build()
            .unwrap();
        let cfg = SemanticsConfig { max_iterations: 3, ..SemanticsConfig::mlp() };
        assert!(matches!(evaluate_mlp(&q, &cfg), Err(SemanticsError::NonConvergent { iterations: 3 })));
    }

    #[test]
    fn invalid_frameworks_are_refused() {
        let q = Qbaf::builder().text("a", 2.0).build_unchecked();
        assert!(matches!(evaluate_df_quad(&q), Err(SemanticsError::Framework(_))));
        assert!(matches!(evaluate_mlp(&q, &SemanticsConfig::mlp()), Err(SemanticsError::Framework(_))));
    }

    #[test]
    fn config_bounds() {
        assert!(SemanticsConfig::mlp().validate().is_ok());
        assert!(SemanticsConfig { convergence_epsilon: 0.0, ..SemanticsConfig::mlp() }.validate().is_err());
        assert!(SemanticsConfig { max_iterations: 0, ..SemanticsConfig::mlp() }.validate().is_err());
        assert!(SemanticsConfig { logit_clamp_epsilon: 0.5, ..SemanticsConfig::mlp() }.validate().is_err());
    }

    #[test]
    fn explicit_orders() {
        let q = example_one();
        let ids = |v: &[&str]| v.iter().map(|&s| ArgumentId::from(s)).collect::<Vec<_>>();
        let a = evaluate_df_quad_with_order(&q, &ids(&["b", "a", "c", "d"])).unwrap();
        let b = evaluate_df_quad_with_order(&q, &ids(&["a", "b", "c", "d"])).unwrap();
        assert_eq!(a, b);
        assert!(evaluate_df_quad_with_order(&q, &ids(&["c", "a", "b", "d"])).is_err());
        assert!(evaluate_df_quad_with_order(&q, &ids(&["a", "b", "c"])).is_err());
    }
}
