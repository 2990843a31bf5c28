mod support;

use archtrace_dsl::ast::UnitKind;
use archtrace_dsl::{parse_unit, print_unit};
use proptest::prelude::*;
use support::unit;

fn roundtrip(kind: UnitKind) -> impl Strategy<Value = ()> {
    unit(kind).prop_map(|u| {
        let text = print_unit(&u);
        let (parsed, diags) = parse_unit(&text);
        assert!(diags.is_empty(), "{text}\n{diags:?}");
        assert_eq!(parsed.expect("unit").unit, u, "{text}");
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn datatype_units(_ in roundtrip(UnitKind::Datatype)) {}

    #[test]
    fn portspec_units(_ in roundtrip(UnitKind::Portspec)) {}

    #[test]
    fn interface_units(_ in roundtrip(UnitKind::Interface)) {}

    #[test]
    fn constraints_units(_ in roundtrip(UnitKind::Constraints)) {}

    #[test]
    fn diagram_units(_ in roundtrip(UnitKind::Diagram)) {}

    #[test]
    fn algebra_units(_ in roundtrip(UnitKind::Algebra)) {}

    #[test]
    fn trace_units(_ in roundtrip(UnitKind::Trace)) {}
}
