//! Design matrices, least-squares fits, forecasts and error metrics.

mod design;
mod ls;
mod metrics;
mod model;
mod qr;

pub use design::{build_design, regressor_block, Design, DesignSpec};
pub use ls::{fit_ls, FitResult, RANK_TOL};
pub use metrics::{confint, forecast_error, norm_quantile, rel_error, rmse_rel, rmsp};
pub use model::{
    estimate_latent, fit_amnar, fit_enar, fit_enr, fit_model, fit_nar, fit_with_latent, predict_one_step,
    rolling_one_step, Diagnostics, FitOptions, FitReport, LsmDiagnostics, ModelFit, WindowForecast,
};
