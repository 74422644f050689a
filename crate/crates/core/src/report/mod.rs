//! Report assembly: the diagnostic panel for one output corpus and the
//! sweep table over decoding settings.

mod panel;
mod sweep;

pub use panel::{
    baselines, build_panel, lexicon_digest, panel_discriminator, sha256_hex, Absence, Baselines, DiagnosticPanelReport,
    InputInfo, Metric, OrderMetric, PanelConfig, RunMetadata, SentenceBleuSummary, PANEL_SCHEMA,
};
pub use sweep::{
    default_grid, panel_columns, panel_values, parse_grid, run_sweep, SweepMetadata, SweepOutcome, SweepRow,
    SweepTable, SWEEP_SCHEMA,
};

/// Pretty JSON with a trailing newline.
pub fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}
