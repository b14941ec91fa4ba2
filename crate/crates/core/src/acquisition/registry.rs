use std::collections::BTreeMap;
use std::sync::Arc;

use super::strategies::{QueryByCommittee, RandomSampling, UncertaintySampling};
use super::{AcquisitionStrategy, Disagreement};
use crate::error::{Error, Result};
use crate::learners::LearnerKind;

/// Knobs a factory may read when building a strategy.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StrategyOptions {
    pub qbc_disagreement: Disagreement,
    /// Overrides the strategy's default target model when set.
    pub learner: Option<LearnerKind>,
}

pub type StrategyFactory = fn(&StrategyOptions) -> Result<Arc<dyn AcquisitionStrategy>>;

/// Name -> factory table of acquisition strategies.
#[derive(Clone)]
pub struct StrategyRegistry {
    factories: BTreeMap<String, StrategyFactory>,
}

impl std::fmt::Debug for StrategyRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.factories.keys()).finish()
    }
}

fn fixed_learner(name: &str, own: LearnerKind, opts: &StrategyOptions) -> Result<()> {
    match opts.learner {
        Some(kind) if kind != own => Err(Error::Config(format!(
            "strategy `{name}` scores with a {own} model, not {kind}"
        ))),
        _ => Ok(()),
    }
}

fn uncertainty(opts: &StrategyOptions) -> Result<Arc<dyn AcquisitionStrategy>> {
    fixed_learner("uncertainty", LearnerKind::Linear, opts)?;
    Ok(Arc::new(UncertaintySampling))
}

fn qbc(opts: &StrategyOptions) -> Result<Arc<dyn AcquisitionStrategy>> {
    fixed_learner("qbc", LearnerKind::Committee, opts)?;
    Ok(Arc::new(QueryByCommittee { disagreement: opts.qbc_disagreement }))
}

fn random(opts: &StrategyOptions) -> Result<Arc<dyn AcquisitionStrategy>> {
    Ok(Arc::new(RandomSampling { learner: opts.learner.unwrap_or(LearnerKind::Linear) }))
}

impl StrategyRegistry {
    pub fn empty() -> Self {
        Self { factories: BTreeMap::new() }
    }

    /// Registry holding `uncertainty`, `qbc` and `random`.
    pub fn builtin() -> Self {
        let mut reg = Self::empty();
        reg.register("uncertainty", uncertainty);
        reg.register("qbc", qbc);
        reg.register("random", random);
        reg
    }

    /// Adds or replaces a strategy.
    pub fn register(&mut self, name: &str, factory: StrategyFactory) {
        self.factories.insert(name.to_string(), factory);
    }

    pub fn contains(&self, name: &str) -> bool {
        self.factories.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    pub fn create(&self, name: &str, opts: &StrategyOptions) -> Result<Arc<dyn AcquisitionStrategy>> {
        let factory = self.factories.get(name).ok_or_else(|| {
            let known: Vec<&str> = self.names().collect();
            Error::Config(format!("unknown strategy `{name}` (known: {})", known.join(", ")))
        })?;
        factory(opts)
    }
}

impl Default for StrategyRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_names_resolve() {
        let reg = StrategyRegistry::builtin();
        assert_eq!(reg.names().collect::<Vec<_>>(), vec!["qbc", "random", "uncertainty"]);
        for name in ["qbc", "random", "uncertainty"] {
            assert_eq!(reg.create(name, &StrategyOptions::default()).unwrap().name(), name);
        }
        assert!(matches!(reg.create("bald", &StrategyOptions::default()), Err(Error::Config(_))));
    }

    #[test]
    fn learner_mismatch_is_a_config_error() {
        let reg = StrategyRegistry::builtin();
        let opts = StrategyOptions { learner: Some(LearnerKind::Linear), ..Default::default() };
        assert!(reg.create("qbc", &opts).is_err());
        let opts = StrategyOptions { learner: Some(LearnerKind::Committee), ..Default::default() };
        assert_eq!(reg.create("random", &opts).unwrap().learner_kind(), LearnerKind::Committee);
    }

    #[test]
    fn custom_strategies_can_be_registered() {
        let mut reg = StrategyRegistry::empty();
        reg.register("entropy", uncertainty);
        assert!(reg.contains("entropy"));
        assert_eq!(reg.create("entropy", &StrategyOptions::default()).unwrap().name(), "uncertainty");
    }
}
