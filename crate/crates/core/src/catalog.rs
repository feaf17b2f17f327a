//! Scenarios shipped with the library.

use crate::error::{Error, Result};
use crate::scenario::Scenario;

const BUNDLED: [(&str, &str); 9] = [
    ("trivial-n3", include_str!("../scenarios/trivial-n3.json")),
    ("expdecay-n2", include_str!("../scenarios/expdecay-n2.json")),
    ("expdecay-n3", include_str!("../scenarios/expdecay-n3.json")),
    ("expdecay-n4", include_str!("../scenarios/expdecay-n4.json")),
    ("expdecay-block", include_str!("../scenarios/expdecay-block.json")),
    ("laurent-n3", include_str!("../scenarios/laurent-n3.json")),
    ("pencil-sigma", include_str!("../scenarios/pencil-sigma.json")),
    ("pencil-p0", include_str!("../scenarios/pencil-p0.json")),
    ("huge-a", include_str!("../scenarios/huge-a.json")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(n, _)| *n)
}

/// Raw JSON of a bundled scenario.
pub fn source(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn parse(json: &str) -> Result<Scenario> {
    let s: Scenario = serde_json::from_str(json).map_err(|e| Error::InvalidSystem(format!("scenario: {e}")))?;
    s.validate()?;
    Ok(s)
}

pub fn load(name: &str) -> Result<Scenario> {
    parse(source(name).ok_or_else(|| Error::InvalidSystem(format!("no bundled scenario '{name}'")))?)
}

/// Bundled scenarios whose system carries a Laurent term.
pub fn laurent_scenarios() -> Vec<&'static str> {
    names()
        .filter(|n| load(n).and_then(|s| s.system_spec::<f64>()).is_ok_and(|s| s.laurent_order() > 0))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_scenarios_parse_and_build() {
        for n in names() {
            let s = load(n).unwrap();
            assert_eq!(s.name, n);
            s.system_spec::<f64>().unwrap();
        }
        assert_eq!(laurent_scenarios(), vec!["laurent-n3", "pencil-sigma"]);
    }
}
