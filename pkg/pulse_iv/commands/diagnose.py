import argparse
import logging

from box import Box
import numpy as np
from tabulate import tabulate

from pulse_iv.commands.common import add_data_arguments, load_data
from pulse_iv.errors import InsufficientRows
from pulse_iv.inference.weak_instruments import RULE_OF_THUMB, weak_instrument_stat
from pulse_iv.utils import render_template

_log = logging.getLogger(__name__)

NAME = "diagnose"
HELP = "Print the identification class and weak-instrument diagnostics"


def add_arguments(parser: argparse.ArgumentParser):
    add_data_arguments(parser)


def main(args: argparse.Namespace, config: Box) -> int:
    decimals = int(config.get("table_decimals", 4))
    data = load_data(args, config)
    view, partition = data.view, data.partition
    print(
        render_template(
            "messages",
            "diagnose",
            identification=view.identification.value,
            degree=view.identification_degree,
            q2=partition.q2,
            d1=view.d1,
            condition=", ".join(f"{name} {value:.3e}" for name, value in view.condition.items()),
        )
    )
    if view.d1 == 0:
        _log.info("No included endogenous regressors, skipping G_n.")
        return 0
    if view.n <= view.q:
        raise InsufficientRows(f"G_n needs n > q, got n={view.n}, q={view.q}")

    report = weak_instrument_stat(view)
    labels = view.names[: view.d1]
    print(tabulate(np.round(report.g_matrix, decimals), headers=labels, showindex=labels, floatfmt=f".{decimals}f"))
    print(
        render_template(
            "messages",
            "weak_instruments",
            min_eigenvalue=f"{report.min_eigenvalue:.{decimals}f}",
            passes=report.rule_of_thumb_pass,
            rule_of_thumb=f"{RULE_OF_THUMB:g}",
        )
    )
    return 0
