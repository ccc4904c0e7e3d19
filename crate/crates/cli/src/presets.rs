//! Bundled configurations, one per figure panel set.

macro_rules! presets {
    ($($name:literal),* $(,)?) => {
        /// `(name, TOML text)` of every bundled preset.
        pub const PRESETS: &[(&str, &str)] = &[$(($name, include_str!(concat!("../presets/", $name, ".toml")))),*];
    };
}

presets!(
    "fig2d", "fig2e", "fig2f", "fig2g", "fig2h", "figa1a", "figa1b", "figa1c", "figa1d", "figa1e", "figa1f", "figa1g",
    "figa1h", "figa1m", "figa1n", "figa1o", "figa1p", "fig5ab", "fig5cd", "fig5ef", "device", "hinge2g", "hinge2h",
);

pub fn get(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|p| p.0 == name).map(|p| p.1)
}

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|p| p.0)
}
