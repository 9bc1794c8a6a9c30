//! Name-keyed registries for interchangeable strategies.
//!
//! Kernel families, ball approximations and solvers are registered under a
//! string name and selected at runtime from configuration.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

#[derive(Clone)]
pub struct Registry<T> {
    kind: &'static str,
    entries: BTreeMap<String, T>,
}

impl<T> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Registry { kind, entries: BTreeMap::new() }
    }

    /// Registers `item` under `name`, returning any entry it replaced.
    pub fn register(&mut self, name: &str, item: T) -> Option<T> {
        self.entries.insert(name.to_string(), item)
    }

    pub fn get(&self, name: &str) -> Result<&T> {
        self.entries.get(name).ok_or_else(|| {
            Error::Config(format!(
                "unknown {} '{}' (available: {})",
                self.kind,
                name,
                self.names().join(", ")
            ))
        })
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.keys().map(String::as_str).collect()
    }
}
