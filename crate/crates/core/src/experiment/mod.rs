//! Scenario files, experiment drivers and their CSV/SVG output.

pub mod config;
pub mod plot;
pub mod report;
pub mod runner;

use std::path::{Path, PathBuf};

pub use config::{load_scenario, parse_scenario, Experiment, ScenarioConfig, SweepGrid};
pub use plot::{emit_plot, PlotKind};
pub use report::{format_sig, Cell, CsvTable, Report};
pub use runner::{run, to_report, Outcome, SweepResult, TableCache};

impl Experiment {
    /// Plot style that suits the experiment's CSV, if any.
    pub fn plot_kind(&self) -> Option<PlotKind> {
        match self {
            Experiment::Trace | Experiment::TraceDerivative | Experiment::EtaRatioSweep => Some(PlotKind::Line),
            Experiment::BlochSweep => Some(PlotKind::Heatmap),
            Experiment::FullProtectionTable => None,
        }
    }
}

/// Files written by [`write_outputs`].
#[derive(Debug, Clone)]
pub struct Written {
    pub csv: PathBuf,
    pub svg: Option<PathBuf>,
}

/// Writes `<stem>.csv` and, when asked and meaningful, `<stem>.svg`.
pub fn write_outputs(report: &Report, dir: &Path, stem: &str, plot: bool) -> crate::Result<Written> {
    std::fs::create_dir_all(dir)?;
    let csv = dir.join(format!("{stem}.csv"));
    report.save(&csv)?;
    let svg = match (plot, report.experiment.plot_kind()) {
        (true, Some(kind)) => {
            let path = dir.join(format!("{stem}.svg"));
            emit_plot(&csv, kind, &path)?;
            Some(path)
        }
        _ => None,
    };
    Ok(Written { csv, svg })
}
