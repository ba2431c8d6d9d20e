//! Diagnostics: action-gap deviation, RMS error against an oracle table and
//! the chain performance metric.

use crate::agents::{Agent, Head, Variant};
use crate::envs::{TabularMdp, LEFT};
use crate::error::{Error, Result};
use crate::mapping::LogMapping;
use crate::oracle::QTable;
use std::fmt;
use std::str::FromStr;

/// Offset added to regular values before mapping in [`KappaMode::LogBias`].
pub const LOG_BIAS_OFFSET: f64 = 1.0;

/// Which value tables supply the action gaps of κ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KappaMode {
    Regular,
    LogPlusOnly,
    LogMinOnly,
    LogBoth,
    LogBias,
}

impl KappaMode {
    pub const ALL: [KappaMode; 5] = [
        KappaMode::Regular,
        KappaMode::LogPlusOnly,
        KappaMode::LogMinOnly,
        KappaMode::LogBoth,
        KappaMode::LogBias,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KappaMode::Regular => "regular",
            KappaMode::LogPlusOnly => "log_plus_only",
            KappaMode::LogMinOnly => "log_min_only",
            KappaMode::LogBoth => "log_both",
            KappaMode::LogBias => "log_bias",
        }
    }
}

impl fmt::Display for KappaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KappaMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        KappaMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                format!("unknown kappa mode `{s}` (regular, log_plus_only, log_min_only, log_both, log_bias)")
            })
    }
}

/// Value tables κ can be computed from. `regular` holds regular-space
/// values; `plus` and `minus` hold mapped values of the two heads;
/// `mapping` is used by [`KappaMode::LogBias`].
#[derive(Debug, Clone, Copy, Default)]
pub struct GapTables<'a> {
    pub regular: Option<&'a QTable>,
    pub plus: Option<&'a QTable>,
    pub minus: Option<&'a QTable>,
    pub mapping: Option<&'a LogMapping>,
}

/// Non-zero action gaps of every non-terminal state.
pub fn nonzero_gaps(table: &QTable) -> Vec<f64> {
    (0..table.num_states())
        .filter(|&s| !table.is_terminal(s))
        .map(|s| table.action_gap(s))
        .filter(|&g| g > 0.0)
        .collect()
}

/// Population standard deviation of `log10` of a set of positive gaps.
pub fn log10_std(gaps: &[f64]) -> Result<f64> {
    if gaps.is_empty() {
        return Err(Error::NoActionGaps);
    }
    let logs: Vec<f64> = gaps.iter().map(|g| g.log10()).collect();
    let n = logs.len() as f64;
    let mean = logs.iter().sum::<f64>() / n;
    let var = logs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    Ok(var.sqrt())
}

/// Action-gap deviation κ of the tables selected by `mode`.
pub fn action_gap_deviation(values: &GapTables<'_>, mode: KappaMode) -> Result<f64> {
    let gaps = match mode {
        KappaMode::Regular => nonzero_gaps(need(values.regular, "missing regular table")?),
        KappaMode::LogPlusOnly => nonzero_gaps(need(values.plus, "missing plus table")?),
        KappaMode::LogMinOnly => nonzero_gaps(need(values.minus, "missing minus table")?),
        KappaMode::LogBoth => {
            let mut g = nonzero_gaps(need(values.plus, "missing plus table")?);
            g.extend(nonzero_gaps(need(values.minus, "missing minus table")?));
            g
        }
        KappaMode::LogBias => {
            let q = need(values.regular, "missing regular table")?;
            let m = values
                .mapping
                .ok_or(Error::WrongVariant { op: "action_gap_deviation", variant: "missing mapping" })?;
            log_bias_gaps(q, m)?
        }
    };
    log10_std(&gaps)
}

fn need<'a>(t: Option<&'a QTable>, what: &'static str) -> Result<&'a QTable> {
    t.ok_or(Error::WrongVariant { op: "action_gap_deviation", variant: what })
}

// gaps of f(Q + 1) from the regular gaps, exact where mapped values collide
fn log_bias_gaps(q: &QTable, m: &LogMapping) -> Result<Vec<f64>> {
    let mut gaps = Vec::new();
    for s in 0..q.num_states() {
        if q.is_terminal(s) {
            continue;
        }
        if let Some((best, second)) = q.top_two(s) {
            let g = m.shifted_difference(best, second, LOG_BIAS_OFFSET)?;
            if g > 0.0 {
                gaps.push(g);
            }
        }
    }
    Ok(gaps)
}

/// `f(Q + 1)` elementwise.
pub fn log_bias_table(q: &QTable, m: &LogMapping) -> Result<QTable> {
    q.try_map(|v| m.forward(v + LOG_BIAS_OFFSET))
}

/// κ of an agent's current tables. Regular and log-bias modes read the
/// regular-space values; `bias_mapping` is used for log-bias when the agent
/// has no mapping of its own.
pub fn agent_kappa(
    agent: &Agent,
    mdp: &TabularMdp,
    mode: KappaMode,
    bias_mapping: Option<&LogMapping>,
) -> Result<f64> {
    let regular = agent.q_table(mdp)?;
    let plus = if agent.variant().is_log() { Some(agent.stored_table(mdp, Head::Plus)?) } else { None };
    let minus = if agent.variant() == Variant::LogFull {
        Some(agent.stored_table(mdp, Head::Minus)?)
    } else {
        None
    };
    let tables = GapTables {
        regular: Some(&regular),
        plus: plus.as_ref(),
        minus: minus.as_ref(),
        mapping: agent.mapping(Head::Plus).or(bias_mapping),
    };
    action_gap_deviation(&tables, mode)
}

/// Root-mean-square difference over non-terminal state-action pairs.
pub fn rms_error(agent_values: &QTable, oracle: &QTable) -> Result<f64> {
    if agent_values.num_states() != oracle.num_states() || agent_values.num_actions() != oracle.num_actions() {
        return Err(Error::param("agent_values", "shape differs from the oracle table"));
    }
    let mut sum = 0.0;
    let mut n = 0usize;
    for s in 0..oracle.num_states() {
        if oracle.is_terminal(s) {
            continue;
        }
        for a in 0..oracle.num_actions() {
            let d = agent_values.get(s, a) - oracle.get(s, a);
            sum += d * d;
            n += 1;
        }
    }
    Ok(if n == 0 { 0.0 } else { (sum / n as f64).sqrt() })
}

/// Chain performance: 1 when the greedy policy picks LEFT in every interior
/// state. `degenerate` reports that at least one greedy choice came from a
/// tie broken toward the lowest index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optimality {
    pub score: f64,
    pub degenerate: bool,
}

pub fn chain_optimality(agent: &Agent, mdp: &TabularMdp) -> Result<Optimality> {
    if mdp.num_actions() != 2 {
        return Err(Error::param("mdp", "not a chain"));
    }
    let mut all_left = true;
    let mut degenerate = false;
    for s in 0..mdp.num_states() {
        let Some(pos) = agent.positions().get(s).copied().flatten() else { continue };
        let (a, tied) = agent.greedy_at(pos)?;
        degenerate |= tied;
        if a != LEFT {
            all_left = false;
            break;
        }
    }
    Ok(Optimality { score: if all_left { 1.0 } else { 0.0 }, degenerate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{AgentSpec, MappingParams, StepSchedule};
    use crate::envs::make_chain;
    use crate::oracle::value_iteration;

    fn det_chain_q(gamma: f64) -> (TabularMdp, QTable) {
        let mdp = make_chain(50, 0.0, 1.0, 0.0).unwrap();
        let q = value_iteration(&mdp, gamma, 1e-13).unwrap();
        (mdp, q)
    }

    #[test]
    fn identical_gaps_have_zero_kappa() {
        assert_eq!(log10_std(&[0.3, 0.3, 0.3]).unwrap(), 0.0);
        assert!(matches!(log10_std(&[]), Err(Error::NoActionGaps)));
    }

    #[test]
    fn deterministic_chain_kappa() {
        let (_, q) = det_chain_q(0.5);
        let tables = GapTables { regular: Some(&q), ..Default::default() };
        let k = action_gap_deviation(&tables, KappaMode::Regular).unwrap();
        assert!((k - 4.339_915_521_927_771).abs() < 1e-6, "{k}");

        let m = LogMapping::with_init(1.0, 200.0, 0.5, 0.0).unwrap();
        let mapped = q.try_map(|v| m.forward(v)).unwrap();
        let tables = GapTables { plus: Some(&mapped), ..Default::default() };
        let k = action_gap_deviation(&tables, KappaMode::LogPlusOnly).unwrap();
        assert!((k - 0.262_912_573_228_086_37).abs() < 1e-6, "{k}");

        let tables = GapTables { regular: Some(&q), mapping: Some(&m), ..Default::default() };
        let k = action_gap_deviation(&tables, KappaMode::LogBias).unwrap();
        assert!((k - 4.325_566_780_000_989).abs() < 1e-6, "{k}");
    }

    #[test]
    fn missing_table_is_an_error() {
        let (_, q) = det_chain_q(0.5);
        let tables = GapTables { regular: Some(&q), ..Default::default() };
        assert!(action_gap_deviation(&tables, KappaMode::LogBoth).is_err());
    }

    #[test]
    fn fresh_agent_rms_is_oracle_norm() {
        let (mdp, q) = det_chain_q(0.5);
        let spec = AgentSpec {
            variant: Variant::Regular,
            tile_width: 1,
            gamma: 0.5,
            mapping: MappingParams::default(),
            schedule: StepSchedule::alpha(0.1).unwrap(),
        };
        let agent = Agent::new(&spec, &mdp).unwrap();
        let r = rms_error(&agent.q_table(&mdp).unwrap(), &q).unwrap();
        assert!((r - 0.119_023_807_142_380_82).abs() < 1e-10, "{r}");
        assert_eq!(rms_error(&q, &q).unwrap(), 0.0);
    }

    #[test]
    fn fresh_agent_is_degenerate_but_optimal() {
        let mdp = make_chain(10, 0.25, 1.0, -1.0).unwrap();
        let spec = AgentSpec {
            variant: Variant::Regular,
            tile_width: 2,
            gamma: 0.9,
            mapping: MappingParams::default(),
            schedule: StepSchedule::alpha(0.1).unwrap(),
        };
        let agent = Agent::new(&spec, &mdp).unwrap();
        let o = chain_optimality(&agent, &mdp).unwrap();
        assert_eq!(o.score, 1.0);
        assert!(o.degenerate);
    }
}
