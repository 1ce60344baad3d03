use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::testcase::TestCase;
use crate::heuristics::ObjectiveId;

/// The shortest covering test found so far for each covered objective.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Archive {
    entries: BTreeMap<ObjectiveId, TestCase>,
}

impl Archive {
    /// Records `test` as covering `objective`; returns whether the archive
    /// changed.
    pub fn offer(&mut self, objective: &ObjectiveId, test: &TestCase) -> bool {
        match self.entries.get(objective) {
            Some(current) if current.len() <= test.len() => false,
            _ => {
                self.entries.insert(objective.clone(), test.clone());
                true
            }
        }
    }

    pub fn get(&self, objective: &ObjectiveId) -> Option<&TestCase> {
        self.entries.get(objective)
    }

    pub fn contains(&self, objective: &ObjectiveId) -> bool {
        self.entries.contains_key(objective)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ObjectiveId, &TestCase)> {
        self.entries.iter()
    }

    /// Distinct archived tests, in objective order.
    pub fn tests(&self) -> Vec<&TestCase> {
        let mut out: Vec<&TestCase> = Vec::new();
        for t in self.entries.values() {
            if !out.contains(&t) {
                out.push(t);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::Value;
    use crate::search::testcase::{Arg, TestStmt};

    fn test_of(len: usize) -> TestCase {
        TestCase::new(
            (0..len)
                .map(|_| TestStmt::Invoke {
                    function: "f".into(),
                    args: vec![Arg::Lit(Value::Int(1))],
                })
                .collect(),
        )
    }

    #[test]
    fn keeps_the_shortest() {
        let o = ObjectiveId::Line {
            function: "f".into(),
            line: 2,
        };
        let mut a = Archive::default();
        assert!(a.offer(&o, &test_of(3)));
        assert!(!a.offer(&o, &test_of(4)));
        assert!(!a.offer(&o, &test_of(3)));
        assert!(a.offer(&o, &test_of(1)));
        assert_eq!(a.get(&o).unwrap().len(), 1);
    }
}
