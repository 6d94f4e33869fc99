//! Rolling one-step forecasts with unpenalized intercepts, scored by the
//! inverse-variance-weighted squared forecast error relative to the Lasso
//! with one lag.
//!
//! cargo run --release --example rolling_forecast -- [csv]
//!
//! Without a file argument a shifted design-A panel is simulated.

use nalgebra::DMatrix;
use varlasso::experiments::{run_forecast, ForecastConfig};
use varlasso::simulation::{make_design, simulate_var, DesignTag};
use varlasso::{read_panel_csv, TimeSeriesPanel};

fn main() -> varlasso::Result<()> {
    let panel = match std::env::args().nth(1) {
        Some(path) => read_panel_csv(path)?,
        None => {
            let sim = simulate_var(&make_design(DesignTag::A, 8, 400)?, 5, None)?;
            let shifted = sim.panel.data() + DMatrix::from_element(401, 8, 2.0);
            TimeSeriesPanel::new(shifted)?
        }
    };
    let cfg = ForecastConfig::new(vec![1, 2], 300, 50);
    let report = run_forecast(&panel, &cfg)?;
    print!("{}", report.table());
    Ok(())
}
