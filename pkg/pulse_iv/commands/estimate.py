import argparse
import json
import logging
import math

from box import Box
import numpy as np
from tabulate import tabulate

from pulse_iv.commands.common import LoadedData, add_data_arguments, load_data
from pulse_iv.errors import PulseIVError
from pulse_iv.estimators.spec import EstimateResult, parse_estimator
from pulse_iv.fit import fit
from pulse_iv.inference.acceptance import test_statistic
from pulse_iv.inference.weak_instruments import RULE_OF_THUMB, weak_instrument_stat
from pulse_iv.pulse.dual import PulseConfig, PulseMessage
from pulse_iv.utils import render_template, to_jsonable

_log = logging.getLogger(__name__)

NAME = "estimate"
HELP = "Fit K-class estimators and PULSE on a CSV file"


def add_arguments(parser: argparse.ArgumentParser):
    add_data_arguments(parser)
    parser.add_argument(
        "--estimator",
        action="append",
        help="ols, tsls, kclass:K, anchor:L, liml, fuller:A, modified-tsls or pulse[:P]; repeatable",
    )
    parser.add_argument("--pmin", type=float, help="Level p_min of the PULSE test")
    parser.add_argument("--scaling", choices=["ar", "plain"], help="Scaling c(n) of the test statistic")
    parser.add_argument("--precision", type=int, help="Binary search precision N")
    parser.add_argument("--fallback", help="Estimator used when TSLS is rejected, or 'none'")
    parser.add_argument("--fast-start", action="store_true", default=None, help="Start the search at the analytic bound")
    parser.add_argument("--json", help="Also write the results to this JSON file")


def pulse_config(args: argparse.Namespace, config: Box) -> PulseConfig:
    """PULSE settings from flags, falling back to config.yaml."""
    defaults = config.get("pulse", {})
    fallback = args.fallback if args.fallback is not None else defaults.get("fallback", "fuller:4")
    if fallback is None or str(fallback).strip().lower() == "none":
        fallback = None
    return PulseConfig(
        p_min=args.pmin if args.pmin is not None else defaults.get("p_min", 0.05),
        precision=args.precision if args.precision is not None else defaults.get("precision", 2**20),
        fallback=fallback,
        scaling=args.scaling or defaults.get("scaling", "ar"),
        fast_start=bool(args.fast_start if args.fast_start is not None else defaults.get("fast_start", False)),
    )


def _test_columns(data: LoadedData, result: EstimateResult, cfg: PulseConfig) -> dict:
    try:
        test = test_statistic(data.view, result.alpha, cfg.test_config)
    except PulseIVError as e:
        _log.info(f"No test statistic for {result.estimator.label}: {e}")
        return {"statistic": math.nan, "threshold": math.nan, "accepted": None}
    return {"statistic": test.statistic, "threshold": test.threshold, "accepted": test.accepted}


def _pulse_messages(result: EstimateResult) -> list[str]:
    messages = []
    match result.pulse.message:
        case PulseMessage.TSLS_REJECTED_FALLBACK:
            messages.append(render_template("messages", "tsls_rejected"))
            messages.append(render_template("messages", "fallback_used", fallback=result.pulse.fallback.estimator.label))
        case PulseMessage.OLS_ACCEPTED:
            messages.append(render_template("messages", "ols_accepted"))
    return messages


def _weak_instruments(data: LoadedData):
    if data.view.d1 == 0 or data.view.n <= data.view.q:
        return None
    try:
        return weak_instrument_stat(data.view)
    except PulseIVError as e:
        _log.warning(f"Weak-instrument diagnostics unavailable: {e}")
        return None


def main(args: argparse.Namespace, config: Box) -> int:
    decimals = int(config.get("table_decimals", 4))
    digits = int(config.get("json_digits", 10))
    specs = [parse_estimator(e) for e in (args.estimator or config.get("estimators", ["ols", "tsls", "fuller:4", "pulse"]))]
    cfg = pulse_config(args, config)
    data = load_data(args, config)
    view = data.view

    print(
        render_template(
            "messages",
            "estimate_header",
            n=view.n,
            d1=view.d1,
            q1=view.q1,
            q=view.q,
            identification=view.identification.value,
            preprocessing=data.preprocessing,
        )
    )

    rows, messages, records = [], [], []
    for spec in specs:
        result = fit(view, spec, cfg)
        test = _test_columns(data, result, cfg)
        rows.append(
            [
                spec.label,
                *np.round(result.alpha, decimals),
                result.kappa_used,
                result.lambda_used,
                test["statistic"],
                test["threshold"],
                test["accepted"],
            ]
        )
        records.append({**result.as_dict(), "test": test})
        if result.pulse is not None:
            messages.extend(_pulse_messages(result))
            messages.append(
                render_template(
                    "messages",
                    "pulse_summary",
                    label=spec.label if spec.parameter is not None else f"PULSE({100 * cfg.p_min:g})",
                    lambda_star=f"{result.pulse.lambda_star:.{decimals}f}",
                    kappa_star="-" if result.pulse.kappa_star is None else f"{result.pulse.kappa_star:.{decimals}f}",
                    statistic=f"{result.pulse.test_at_solution.statistic:.{decimals}f}",
                    threshold=f"{result.pulse.test_at_solution.threshold:.{decimals}f}",
                    scaling=cfg.scaling.value,
                )
            )
            records[-1]["pulse"] = {
                "lambda_star": result.pulse.lambda_star,
                "kappa_star": result.pulse.kappa_star,
                "message": result.pulse.message.value,
                "fallback_used": result.pulse.fallback_used,
            }

    headers = ["estimator", *view.names, "kappa", "lambda", "test", "threshold", "accepted"]
    print(tabulate(rows, headers=headers, floatfmt=f".{decimals}f", missingval="-"))
    for message in messages:
        print(message)

    weak = _weak_instruments(data)
    if weak is not None:
        print(
            render_template(
                "messages",
                "weak_instruments",
                min_eigenvalue=f"{weak.min_eigenvalue:.{decimals}f}",
                passes=weak.rule_of_thumb_pass,
                rule_of_thumb=f"{RULE_OF_THUMB:g}",
            )
        )

    if args.json:
        output = {
            "n": view.n,
            "q": view.q,
            "identification": view.identification.value,
            "preprocessing": data.preprocessing,
            "p_min": cfg.p_min,
            "scaling": cfg.scaling.value,
            "estimates": records,
            "weak_instruments": None
            if weak is None
            else {"g_matrix": weak.g_matrix, "min_eigenvalue": weak.min_eigenvalue, "passes": weak.rule_of_thumb_pass},
        }
        with open(args.json, "w", encoding="utf-8") as file:
            json.dump(to_jsonable(output, digits), file, indent=2)
        _log.info(f"Wrote {args.json}.")
    return 0
