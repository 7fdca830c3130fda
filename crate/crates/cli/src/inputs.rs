//! Input loading and synthetic-dataset emission.

use std::path::Path;

use nalgebra::DMatrix;

use habitlens_core::hedonic::TechnologyConfig;
use habitlens_core::panel::{
    self, ExclusionReason, GoodsCatalog, HouseholdPanel, IngestOptions,
};
use habitlens_core::synth::SynthDataset;

use crate::config::RunConfig;
use crate::{parse_window, CliError};

pub struct LoadedInputs {
    pub panels: Vec<HouseholdPanel>,
    pub excluded: Vec<(String, ExclusionReason)>,
    pub catalog: GoodsCatalog,
    pub attr_names: Vec<String>,
    /// J×K attribute matrix aligned with `attr_names` and the catalog.
    pub a: DMatrix<f64>,
}

pub fn load(cfg: &RunConfig) -> Result<LoadedInputs, CliError> {
    let (catalog, table_names, table) =
        panel::read_characteristics_file(&cfg.characteristics).map_err(CliError::from)?;

    let (attr_names, a) = match &cfg.technology {
        None => (table_names.clone(), table.clone()),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            let tc = TechnologyConfig::from_json(&text)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            let tech = tc
                .build(&table_names, &table)
                .map_err(|e| CliError::Input(e.to_string()))?;
            (tc.attributes.clone(), tech.matrix().clone())
        }
    };

    let events = panel::read_purchases_file(&cfg.purchases).map_err(CliError::from)?;
    let series = match &cfg.rates {
        Some(path) => Some(panel::read_rates_file(path).map_err(CliError::from)?),
        None => None,
    };
    let window = match &cfg.window {
        Some(w) => Some(parse_window(w)?),
        None => None,
    };
    let opts = IngestOptions {
        min_periods: cfg.min_periods,
        window,
        nominal: cfg.nominal,
    };
    let report = panel::ingest(&events, &catalog, series.as_ref(), &opts)
        .map_err(CliError::from)?;
    Ok(LoadedInputs {
        panels: report.panels,
        excluded: report.excluded,
        catalog,
        attr_names,
        a,
    })
}

/// Write a synthetic dataset in the ingestion schemas plus technology.json.
pub fn write_dataset(dataset: &SynthDataset, out: &Path) -> Result<(), String> {
    let start = chrono::NaiveDate::from_ymd_opt(2010, 1, 1).unwrap();
    let mut events = Vec::new();
    for panel in &dataset.panels {
        events.extend(habitlens_core::synth::panel_to_events(
            panel,
            &dataset.catalog,
            start,
        ));
    }
    let purchases = std::fs::File::create(out.join("purchases.csv"))
        .map_err(|e| format!("purchases.csv: {e}"))?;
    panel::write_purchases_csv(&events, purchases).map_err(|e| e.to_string())?;

    let characteristics = std::fs::File::create(out.join("characteristics.csv"))
        .map_err(|e| format!("characteristics.csv: {e}"))?;
    panel::write_characteristics_csv(
        &dataset.catalog,
        dataset.technology.attribute_names(),
        dataset.technology.matrix(),
        characteristics,
    )
    .map_err(|e| e.to_string())?;

    let names = dataset.technology.attribute_names();
    let tc = TechnologyConfig {
        attributes: names.to_vec(),
        habit_attributes: dataset
            .technology
            .habit_rows()
            .iter()
            .map(|&r| names[r].clone())
            .collect(),
        lags: dataset.technology.lags(),
        matrix_source: Some("characteristics.csv".into()),
    };
    let json = serde_json::to_string_pretty(&tc).map_err(|e| e.to_string())?;
    std::fs::write(out.join("technology.json"), json)
        .map_err(|e| format!("technology.json: {e}"))?;

    // A model set matched to the generated technology, so the dataset is
    // testable regardless of its attribute names.
    let models = habitlens_core::models::models_for_technology(&dataset.technology);
    let toml_text = habitlens_core::models::models_to_toml(&models).map_err(|e| e.to_string())?;
    std::fs::write(out.join("models.toml"), toml_text).map_err(|e| format!("models.toml: {e}"))
}
