use std::collections::BTreeMap;

use crate::dynamics::Stability;

use super::sweep::{classify_behavior, SweepResult};
use super::ThgError;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSummary {
    pub id: String,
    pub family: String,
    pub regime: String,
    pub vaa: f64,
    pub stability: Stability,
    pub sweep: SweepResult,
}

pub const CROSSTAB_HEADER: &str = "horizon,regime,behavior,stability,count";
pub const SCATTER_HEADER: &str = "model,vaa,horizon,mean_reward";

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationReport {
    /// `(horizon, regime, behavior, stability) → count`, zero cells included.
    pub crosstab: BTreeMap<(usize, String, String, String), usize>,
    pub scatter: Vec<(String, f64, usize, f64)>,
}

impl PopulationReport {
    pub fn count(&self, horizon: usize, regime: &str, behavior: &str, stability: &str) -> usize {
        self.crosstab
            .get(&(horizon, regime.to_string(), behavior.to_string(), stability.to_string()))
            .copied()
            .unwrap_or(0)
    }

    pub fn crosstab_rows(&self) -> Vec<String> {
        self.crosstab
            .iter()
            .map(|((h, r, b, s), c)| format!("{h},{r},{b},{s},{c}"))
            .collect()
    }

    pub fn scatter_rows(&self) -> Vec<String> {
        self.scatter
            .iter()
            .map(|(m, v, h, r)| format!("{m},{v},{h},{r}"))
            .collect()
    }
}

const BEHAVIORS: [&str; 4] = ["timeout", "random", "solved", "unclassified"];
const STABILITIES: [&str; 2] = ["monostable", "multistable"];

pub fn population_report(models: &[ModelSummary]) -> Result<PopulationReport, ThgError> {
    if models.len() < 2 {
        return Err(ThgError::TooFewModels(models.len()));
    }
    let mut crosstab = BTreeMap::new();
    let mut scatter = Vec::new();
    for m in models {
        if m.sweep.model_id != m.id {
            return Err(ThgError::ModelMismatch {
                expected: m.id.clone(),
                found: m.sweep.model_id.clone(),
            });
        }
        for e in &m.sweep.entries {
            for b in BEHAVIORS {
                for s in STABILITIES {
                    crosstab
                        .entry((e.horizon, m.regime.clone(), b.to_string(), s.to_string()))
                        .or_insert(0);
                }
            }
            let behavior = classify_behavior(e).map_or("unclassified".to_string(), |b| b.to_string());
            *crosstab
                .entry((e.horizon, m.regime.clone(), behavior, m.stability.to_string()))
                .or_insert(0) += 1;
            scatter.push((m.id.clone(), m.vaa, e.horizon, e.mean_reward));
        }
    }
    Ok(PopulationReport { crosstab, scatter })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::EnvKind;
    use crate::thg::SweepEntry;

    fn summary(id: &str, mean: f64, stability: Stability) -> ModelSummary {
        ModelSummary {
            id: id.into(),
            family: "gru".into(),
            regime: "short".into(),
            vaa: if stability == Stability::Multistable { 1.0 } else { 0.5 },
            stability,
            sweep: SweepResult {
                model_id: id.into(),
                env: EnvKind::Tmaze,
                entries: vec![SweepEntry {
                    horizon: 10_000,
                    episodes: 100,
                    mean_reward: mean,
                    success_frac: 0.0,
                    reach_frac: 1.0,
                }],
            },
        }
    }

    #[test]
    fn two_by_two_diagonal() {
        let models = vec![
            summary("a", 4.0, Stability::Multistable),
            summary("b", 4.0, Stability::Multistable),
            summary("c", 1.9, Stability::Monostable),
            summary("d", 2.0, Stability::Monostable),
        ];
        let r = population_report(&models).unwrap();
        assert_eq!(r.count(10_000, "short", "solved", "multistable"), 2);
        assert_eq!(r.count(10_000, "short", "random", "monostable"), 2);
        assert_eq!(r.count(10_000, "short", "solved", "monostable"), 0);
        assert_eq!(r.count(10_000, "short", "random", "multistable"), 0);
        assert_eq!(r.scatter.len(), 4);
    }

    #[test]
    fn rejects_single_model_and_mismatch() {
        assert!(matches!(
            population_report(&[summary("a", 4.0, Stability::Multistable)]),
            Err(ThgError::TooFewModels(1))
        ));
        let mut bad = summary("b", 4.0, Stability::Multistable);
        bad.sweep.model_id = "z".into();
        assert!(matches!(
            population_report(&[summary("a", 4.0, Stability::Multistable), bad]),
            Err(ThgError::ModelMismatch { .. })
        ));
    }
}
