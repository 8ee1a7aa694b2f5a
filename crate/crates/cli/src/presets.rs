//! Scenarios bundled with the binary.

pub const PRESETS: &[(&str, &str)] = &[
    ("paper_fig1", include_str!("../presets/paper_fig1.json")),
    ("paper_fig3", include_str!("../presets/paper_fig3.json")),
];

pub fn find(name: &str) -> Option<&'static str> {
    let stem = name.strip_suffix(".json").unwrap_or(name);
    PRESETS.iter().find(|(n, _)| *n == stem).map(|(_, body)| *body)
}
