"""Settler-mortality models: log GDP on expropriation protection, instrumented by log settler mortality.

All eight models are fitted in intercept mode, so the constant counts towards q.
"""
from dataclasses import dataclass
import logging
import os
from pathlib import Path

import pandas as pd

from pulse_iv.constants import DEFAULT_AJR_DATA, PULSE_AJR_DATA
from pulse_iv.data.dataset import ModelPartition, Schema, add_intercept, dataset_from_frame, read_table
from pulse_iv.data.design import DesignView
from pulse_iv.errors import MissingColumn
from pulse_iv.estimators import fuller_estimate, ols_estimate, tsls_estimate
from pulse_iv.inference import test_statistic
from pulse_iv.pulse.dual import PulseConfig, PulseMessage, pulse_estimate
from pulse_iv.utils import closest_name

_log = logging.getLogger(__name__)

TARGET = "logpgp95"
ENDOGENOUS = "avexpr"
INSTRUMENT = "logem4"
LATITUDE = "lat_abst"
CONTINENTS = ("africa", "asia", "other")

MESSAGES = {
    PulseMessage.NONE: "--",
    PulseMessage.OLS_ACCEPTED: "OLS Accepted",
    PulseMessage.TSLS_REJECTED_FALLBACK: "TSLS Rejected",
}


@dataclass(frozen=True)
class AjrModel:
    """Included exogenous regressors and an indicator whose rows are dropped before fitting."""

    name: str
    included: tuple[str, ...] = ()
    exclude: str | None = None


AJR_MODELS = (
    AjrModel("M1"),
    AjrModel("M2", (LATITUDE,)),
    AjrModel("M3", exclude="rich4"),
    AjrModel("M4", (LATITUDE,), exclude="rich4"),
    AjrModel("M5", exclude="africa"),
    AjrModel("M6", (LATITUDE,), exclude="africa"),
    AjrModel("M7", CONTINENTS),
    AjrModel("M8", (LATITUDE, *CONTINENTS)),
)


def ajr_data_path() -> Path:
    return Path(os.getenv(PULSE_AJR_DATA) or DEFAULT_AJR_DATA)


def ajr_view(frame: pd.DataFrame, model: AjrModel) -> DesignView:
    if model.exclude is not None:
        if model.exclude not in frame.columns:
            raise MissingColumn(model.exclude, suggestion=closest_name(model.exclude, list(frame.columns)))
        frame = frame[pd.to_numeric(frame[model.exclude], errors="coerce") != 1]
    schema = Schema(target=TARGET, endogenous=(ENDOGENOUS,), exogenous=(*model.included, INSTRUMENT))
    ds = dataset_from_frame(frame, schema)
    partition = ModelPartition.for_dataset(ds, included_exogenous=range(len(model.included)))
    ds, partition = add_intercept(ds, partition)
    return DesignView.from_dataset(ds, partition)


def replicate(path: str | Path | None = None, cfg: PulseConfig | None = None) -> pd.DataFrame:
    """One row per model with the avexpr coefficient of OLS, TSLS, Fuller(4) and PULSE."""
    cfg = cfg or PulseConfig()
    frame = read_table(str(path or ajr_data_path()))
    rows = []
    for model in AJR_MODELS:
        view = ajr_view(frame, model)
        pulse = pulse_estimate(view, cfg)
        test = test_statistic(view, pulse.alpha, cfg.test_config)
        rows.append(
            {
                "model": model.name,
                "n": view.n,
                "q": view.q,
                "ols": ols_estimate(view).alpha[0],
                "tsls": tsls_estimate(view).alpha[0],
                "ful": fuller_estimate(view, 4.0).alpha[0],
                "pulse": pulse.alpha[0],
                "message": MESSAGES[pulse.message],
                "test": test.statistic,
                "threshold": test.threshold,
            }
        )
        _log.info(f"{model.name}: n={view.n}, q={view.q}, lambda*={pulse.lambda_star:.6g}.")
    return pd.DataFrame(rows)
