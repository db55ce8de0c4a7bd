//! Figure-preset configurations shipped with the repository (also present
//! as plain files under `configs/`).

use crate::config::{parse_config, ConfigError, ResolvedConfig};

/// Preset names in presentation order.
pub const NAMES: [&str; 7] = [
    "fig3",
    "fig4-N400",
    "fig4-N1000",
    "fig4-N10000",
    "fig5-N400",
    "fig5-N1000",
    "fig5-N10000",
];

/// Raw JSON for a preset.
pub fn preset_text(name: &str) -> Option<&'static str> {
    Some(match name {
        "fig3" => include_str!("../../../configs/fig3.json"),
        "fig4-N400" => include_str!("../../../configs/fig4-N400.json"),
        "fig4-N1000" => include_str!("../../../configs/fig4-N1000.json"),
        "fig4-N10000" => include_str!("../../../configs/fig4-N10000.json"),
        "fig5-N400" => include_str!("../../../configs/fig5-N400.json"),
        "fig5-N1000" => include_str!("../../../configs/fig5-N1000.json"),
        "fig5-N10000" => include_str!("../../../configs/fig5-N10000.json"),
        _ => return None,
    })
}

/// Loads and validates a preset.
pub fn load_preset(name: &str) -> Option<Result<ResolvedConfig, ConfigError>> {
    preset_text(name).map(parse_config)
}
