//! Configurations bundled into the binary, addressable as `preset:<name>`.

const PRESETS: [(&str, &str); 8] = [
    ("t21", include_str!("../presets/t21.json")),
    ("t22", include_str!("../presets/t22.json")),
    ("t31", include_str!("../presets/t31.json")),
    ("t32", include_str!("../presets/t32.json")),
    ("t52", include_str!("../presets/t52.json")),
    ("sweep", include_str!("../presets/sweep.json")),
    ("lemmas", include_str!("../presets/lemmas.json")),
    ("well", include_str!("../presets/well.json")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|p| p.0)
}

pub fn get(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|p| p.0 == name).map(|p| p.1)
}
