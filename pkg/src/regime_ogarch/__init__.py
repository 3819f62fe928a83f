"""Covariance forecasting with orthogonal GARCH, a two-state Markov
regime-switching extension and an EWMA baseline, plus minimum-variance
portfolio backtesting and forecast-evaluation statistics."""

from ._kernels import BACKEND as KERNEL_BACKEND
from .data_io import (NormalizationStats, ReturnPanel, WindowSpec,
                      log_returns, normalize, read_panel_csv,
                      rolling_windows, write_panel_csv)
from .errors import (ContractError, DataError, DegenerateAssetError,
                     DegenerateSeriesError, FilterDegeneracyError,
                     FitFailureError, InsufficientDataError,
                     InvalidPriceError, NonstationaryError,
                     RegimeOgarchError)
from .estimation import (LrTestResult, OptimizerConfig, chi2_sf, lr_test,
                         nelder_mead, numerical_std_errors)
from .evaluation import (DmTestResult, LossReport, dm_test, loss_functions,
                         realized_proxy)
from .ewma import EwmaState, ewma_forecast, ewma_run, ewma_update
from .garch import (GarchFit, GarchParams, garch_filter, garch_fit,
                    garch_forecast)
from .mrs_garch import (MrsGarchFit, MrsGarchParams, RegimeFilterState,
                        aggregate_lagged_variance, filter_step, initial_state,
                        mrs_filter, mrs_fit, mrs_forecast,
                        stationary_distribution)
from .pca import (CovarianceForecast, PcaBasis, reconstruct,
                  spectral_decompose, to_components)
from .pipeline import (BacktestConfig, BacktestResult, component_sweep,
                       run_backtest)
from .portfolio import (PerformanceReport, PortfolioWeights, gmvp,
                        horizon_covariance, performance_stats)
from .simulation import (RegimeBlockSpec, SquareWaveSpec, covariance_distance,
                         gen_regime_blocks, gen_square_wave, ten_dim_preset)

__version__ = "0.1.0"
