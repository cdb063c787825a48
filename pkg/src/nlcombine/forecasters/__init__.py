"""Constituent forecasting models: AR, seasonal ARIMA, MLP (RProp) and SVR."""

from .ar import ArModel, fit_ar
from .base import Forecaster, MinMaxScaler, forecast, lag_windows
from .config import TrainingConfig
from .mlp import MlpModel, fit_mlp
from .sarima import SarimaModel, fit_sarima
from .selection import select_hyperparameters
from .svr import SvrModel, fit_svr, fit_svr_xy, rbf_kernel

__all__ = [
    "ArModel", "Forecaster", "MinMaxScaler", "MlpModel", "SarimaModel", "SvrModel",
    "TrainingConfig", "fit_ar", "fit_mlp", "fit_sarima", "fit_svr", "fit_svr_xy",
    "forecast", "lag_windows", "rbf_kernel", "select_hyperparameters",
]
