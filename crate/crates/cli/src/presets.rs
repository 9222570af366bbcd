//! Bundled experiment files.

pub const NAMES: [&str; 7] = [
    "fig1f_reflectivity",
    "fig1g_pl",
    "fig2_rabi",
    "fig3_crossfeed",
    "fig3h_temperature",
    "fig4d_lifetime",
    "fig4_g2",
];

pub fn text(name: &str) -> Option<&'static str> {
    Some(match name {
        "fig1f_reflectivity" => include_str!("../presets/fig1f_reflectivity.toml"),
        "fig1g_pl" => include_str!("../presets/fig1g_pl.toml"),
        "fig2_rabi" => include_str!("../presets/fig2_rabi.toml"),
        "fig3_crossfeed" => include_str!("../presets/fig3_crossfeed.toml"),
        "fig3h_temperature" => include_str!("../presets/fig3h_temperature.toml"),
        "fig4d_lifetime" => include_str!("../presets/fig4d_lifetime.toml"),
        "fig4_g2" => include_str!("../presets/fig4_g2.toml"),
        _ => return None,
    })
}

/// Parsed and validated preset.
pub fn load(name: &str) -> Result<cqed::experiments::ExperimentConfig, crate::CliError> {
    let t = text(name).ok_or_else(|| crate::CliError::Usage(format!("unknown preset `{name}`; known: {}", NAMES.join(", "))))?;
    let cfg = crate::config::parse_config(t)?;
    cfg.validate()?;
    Ok(cfg)
}
