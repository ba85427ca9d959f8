//! Name → strategy lookup for the interchangeable numerical backends.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Something that can be registered under a stable name.
pub trait Named {
    fn name(&self) -> &'static str;
}

pub struct Registry<T: ?Sized + Named> {
    kind: &'static str,
    default: &'static str,
    entries: Vec<Arc<T>>,
}

impl<T: ?Sized + Named> Registry<T> {
    pub fn new(kind: &'static str, default: &'static str) -> Self {
        Registry { kind, default, entries: Vec::new() }
    }

    /// Adds a strategy, replacing any earlier one with the same name.
    pub fn register(&mut self, strategy: Arc<T>) -> &mut Self {
        self.entries.retain(|s| s.name() != strategy.name());
        self.entries.push(strategy);
        self
    }

    pub fn get(&self, name: &str) -> Result<Arc<T>> {
        self.entries.iter().find(|s| s.name() == name).cloned().ok_or_else(|| Error::UnknownStrategy {
            kind: self.kind,
            name: name.to_string(),
            available: self.names().join(", "),
        })
    }

    pub fn default_strategy(&self) -> Result<Arc<T>> {
        self.get(self.default)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|s| s.name()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    trait Greeter: Named {
        fn greet(&self) -> String;
    }

    struct Hello;
    impl Named for Hello {
        fn name(&self) -> &'static str {
            "hello"
        }
    }
    impl Greeter for Hello {
        fn greet(&self) -> String {
            "hi".into()
        }
    }

    #[test]
    fn lookup_by_name() {
        let mut reg: Registry<dyn Greeter> = Registry::new("greeter", "hello");
        reg.register(Arc::new(Hello));
        assert_eq!(reg.get("hello").unwrap().greet(), "hi");
        assert_eq!(reg.default_strategy().unwrap().greet(), "hi");
        let err = reg.get("nope").err().unwrap();
        assert!(err.to_string().contains("available: hello"));
    }
}
