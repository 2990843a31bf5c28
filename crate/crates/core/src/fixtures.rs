//! Reference snapshots and configurations used by tests and documentation.
//!
//! In `trace_k0_k2` every connected input carries the union of the outputs
//! feeding it, so every step is consistent.

use std::collections::BTreeMap;

use crate::model::{ArchConfiguration, ComponentSnapshot, ComponentUniverse, ConfigurationTrace};

fn snap(b: crate::model::SnapshotBuilder) -> ComponentSnapshot {
    b.build().expect("fixture snapshot is well formed")
}

/// Component `c2` with two local, three input and one output port.
pub fn component_c2() -> ComponentSnapshot {
    snap(
        ComponentSnapshot::builder("c2")
            .local("l0", &["4"])
            .local("l1", &["C"])
            .input("i0", &["Z"])
            .input("i1", &["A"])
            .input("i2", &["8"])
            .output("o0", &["9"]),
    )
}

fn k0_c1() -> ComponentSnapshot {
    snap(
        ComponentSnapshot::builder("c1")
            .local("l0", &["A"])
            .output("o0", &["9"])
            .input("i0", &["5"])
            .output("o1", &["A"])
            .output("o2", &["5"]),
    )
}

fn k0_c3() -> ComponentSnapshot {
    snap(
        ComponentSnapshot::builder("c3")
            .local("l0", &["F"])
            .input("i0", &["X"])
            .output("o0", &["9"])
            .input("i1", &["5"])
            .output("o1", &["8"]),
    )
}

/// Configuration `k0`: three components and three connections.
pub fn configuration_k0() -> (ComponentUniverse, ArchConfiguration) {
    let active = [k0_c1(), component_c2(), k0_c3()];
    let mut k0 = ArchConfiguration::new(active.clone(), BTreeMap::new());
    k0.connect(("c2", "i1"), ("c1", "o1"));
    k0.connect(("c3", "i1"), ("c1", "o2"));
    k0.connect(("c2", "i2"), ("c3", "o1"));
    (ComponentUniverse::new(active), k0)
}

/// Trace `k0, k1, k2` with consistent valuations.
pub fn trace_k0_k2() -> (ComponentUniverse, ConfigurationTrace) {
    let (_, k0) = configuration_k0();

    let k1_c1 = snap(
        ComponentSnapshot::builder("c1")
            .local("l0", &["A"])
            .output("o0", &["1"])
            .input("i0", &["8"])
            .output("o1", &["G"])
            .output("o2", &["7"]),
    );
    let k1_c2 = snap(
        ComponentSnapshot::builder("c2")
            .local("l0", &["4"])
            .local("l1", &["C"])
            .input("i0", &["G"])
            .output("o0", &["1"])
            .input("i1", &["G"])
            .input("i2", &["8"]),
    );
    let mut k1 = ArchConfiguration::new([k1_c1, k1_c2], BTreeMap::new());
    k1.connect(("c2", "i1"), ("c1", "o1"));

    let k2_c1 = snap(
        ComponentSnapshot::builder("c1")
            .local("l0", &["A"])
            .output("o0", &["5"])
            .input("i0", &["6"])
            .output("o1", &["K"])
            .output("o2", &["9"]),
    );
    let k2_c2 = snap(
        ComponentSnapshot::builder("c2")
            .local("l0", &["4"])
            .local("l1", &["C"])
            .input("i0", &["B"])
            .output("o0", &["2"])
            .input("i1", &["W"])
            .input("i2", &["6"]),
    );
    let k2_c4 = snap(
        ComponentSnapshot::builder("c4")
            .local("l0", &["4"])
            .input("i0", &["T"])
            .output("o0", &["4"])
            .input("i1", &["5"])
            .output("o1", &["B"]),
    );
    let mut k2 = ArchConfiguration::new([k2_c1, k2_c2, k2_c4], BTreeMap::new());
    k2.connect(("c4", "i1"), ("c1", "o0"));
    k2.connect(("c2", "i0"), ("c4", "o1"));

    let trace = ConfigurationTrace::new(vec![k0, k1, k2]).expect("nonempty");
    (trace.universe(), trace)
}
