//! The bundled Blackboard specification.

use archtrace_dsl::{parse_unit, resolve, Bundle, Diagnostic, ParsedUnit};

/// Units of the pattern: datatype, ports, interfaces, the four constraint
/// units and the configuration diagram.
pub const PATTERN: [(&str, &str); 9] = [
    ("probsol.arch", include_str!("../blackboard/probsol.arch")),
    ("ports.arch", include_str!("../blackboard/ports.arch")),
    ("bb.arch", include_str!("../blackboard/bb.arch")),
    ("ks.arch", include_str!("../blackboard/ks.arch")),
    ("behavior_bb.arch", include_str!("../blackboard/behavior_bb.arch")),
    ("behavior_ks.arch", include_str!("../blackboard/behavior_ks.arch")),
    ("activation.arch", include_str!("../blackboard/activation.arch")),
    ("connection.arch", include_str!("../blackboard/connection.arch")),
    ("diagram.arch", include_str!("../blackboard/diagram.arch")),
];

/// "Knowledge sources are active when required."
pub const ASSUMPTION: (&str, &str) = ("assumption.arch", include_str!("../blackboard/assumption.arch"));

/// "The original problem gets solved."
pub const GUARANTEE: (&str, &str) = ("guarantee.arch", include_str!("../blackboard/guarantee.arch"));

pub const ASSUMPTION_UNIT: &str = "Assumption";
pub const GUARANTEE_UNIT: &str = "Guarantee";

/// Parses named sources; diagnostics of a unit without a header carry the source name.
pub fn parse_sources(sources: &[(&str, &str)]) -> Result<Vec<ParsedUnit>, Vec<Diagnostic>> {
    let mut units = Vec::new();
    let mut diags = Vec::new();
    for (name, text) in sources {
        let (u, d) = parse_unit(text);
        diags.extend(d.into_iter().map(|mut d| {
            if d.unit.is_empty() {
                d.unit = name.to_string();
            }
            d
        }));
        units.extend(u);
    }
    if diags.iter().any(|d| d.is_error()) {
        Err(diags)
    } else {
        Ok(units)
    }
}

/// The pattern bundle.
pub fn pattern() -> (Option<Bundle>, Vec<Diagnostic>) {
    match parse_sources(&PATTERN) {
        Ok(units) => resolve(&units),
        Err(d) => (None, d),
    }
}

/// The pattern bundle together with the assumption and guarantee units.
pub fn theorem() -> (Option<Bundle>, Vec<Diagnostic>) {
    let mut all: Vec<(&str, &str)> = PATTERN.to_vec();
    all.push(ASSUMPTION);
    all.push(GUARANTEE);
    match parse_sources(&all) {
        Ok(units) => resolve(&units),
        Err(d) => (None, d),
    }
}
