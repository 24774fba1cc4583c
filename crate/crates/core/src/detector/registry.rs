use std::collections::BTreeMap;
use std::sync::Arc;

use super::DetectorPlugin;
use crate::detectors::{BandEnergy, PowerLaw};

/// Plugins by detector id.
#[derive(Clone, Default)]
pub struct Registry {
    plugins: BTreeMap<String, Arc<dyn DetectorPlugin>>,
}

impl Registry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// The built-in reference detectors.
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(Arc::new(BandEnergy::new()));
        r.register(Arc::new(PowerLaw::new()));
        r
    }

    /// Adds a plugin, replacing any with the same id.
    pub fn register(&mut self, plugin: Arc<dyn DetectorPlugin>) {
        self.plugins.insert(plugin.descriptor().detector_id.to_string(), plugin);
    }

    pub fn get(&self, detector_id: &str) -> Option<Arc<dyn DetectorPlugin>> {
        self.plugins.get(detector_id).cloned()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.plugins.keys().map(String::as_str)
    }
}
