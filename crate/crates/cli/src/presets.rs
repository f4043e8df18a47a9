//! Bundled run configurations, selectable by name wherever a config path is
//! accepted.

pub const PRESETS: &[(&str, &str)] = &[
    ("testbed", include_str!("../presets/testbed.cfg")),
    (
        "testbed-session",
        include_str!("../presets/testbed-session.cfg"),
    ),
    (
        "transmittance-family",
        include_str!("../presets/transmittance-family.cfg"),
    ),
    (
        "distance-family",
        include_str!("../presets/distance-family.cfg"),
    ),
    (
        "constant-signal",
        include_str!("../presets/constant-signal.cfg"),
    ),
    ("noise-probe", include_str!("../presets/noise-probe.cfg")),
    ("constellation", include_str!("../presets/constellation.cfg")),
    ("eom-cubic", include_str!("../presets/eom-cubic.cfg")),
];

pub fn get(name: &str) -> Option<&'static str> {
    PRESETS
        .iter()
        .find(|(preset, _)| *preset == name)
        .map(|(_, text)| *text)
}

pub fn names() -> Vec<&'static str> {
    PRESETS.iter().map(|(name, _)| *name).collect()
}
