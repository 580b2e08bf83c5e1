"""Flags and loading shared by the commands that read a CSV file."""
import argparse
from dataclasses import dataclass
import logging

from box import Box

from pulse_iv.data.dataset import (
    Dataset,
    ModelPartition,
    Role,
    Schema,
    add_intercept,
    as_names,
    center,
    load_csv,
)
from pulse_iv.data.design import DesignView
from pulse_iv.errors import InvalidSpec
from pulse_iv.utils import load_structured_file

_log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LoadedData:
    dataset: Dataset
    partition: ModelPartition
    view: DesignView
    preprocessing: str


def add_data_arguments(parser: argparse.ArgumentParser):
    parser.add_argument("--data", required=True, help="CSV file with a header row")
    parser.add_argument("--schema", help="YAML/JSON file with target, endogenous, included_exogenous, instruments")
    parser.add_argument("--target", help="Response column")
    parser.add_argument("--endogenous", help="Comma-separated endogenous regressors")
    parser.add_argument("--included-exogenous", help="Comma-separated exogenous regressors in the target equation")
    parser.add_argument("--instruments", help="Comma-separated excluded exogenous variables")
    group = parser.add_mutually_exclusive_group()
    group.add_argument(
        "--center",
        dest="preprocessing",
        action="store_const",
        const="center",
        help="Mean-center every column (default)",
    )
    group.add_argument(
        "--intercept",
        dest="preprocessing",
        action="store_const",
        const="intercept",
        help="Append a constant to the regressors and the instruments instead of centering",
    )


def _schema_fields(args: argparse.Namespace) -> dict:
    fields = {}
    if args.schema:
        fields.update(load_structured_file(args.schema))
    for key in ("target", "endogenous", "included_exogenous", "instruments"):
        value = getattr(args, key)
        if value is not None:
            fields[key] = value
    if not fields.get("target"):
        raise InvalidSpec("A target column is needed (--target or --schema)")
    return fields


def load_data(args: argparse.Namespace, config: Box) -> LoadedData:
    """Read --data with the schema flags and build the design for the target equation."""
    fields = _schema_fields(args)
    included = as_names(fields.get("included_exogenous", ()))
    instruments = as_names(fields.get("instruments", ()))
    schema = Schema(
        target=str(fields["target"]),
        endogenous=tuple(as_names(fields.get("endogenous", ()))),
        exogenous=(*included, *instruments),
    )
    ds = load_csv(args.data, schema)
    partition = ModelPartition.for_dataset(ds, included_exogenous=range(len(included)))

    preprocessing = args.preprocessing or config.get("preprocessing", "center")
    match preprocessing:
        case "center":
            ds = center(ds, tuple(Role))
        case "intercept":
            ds, partition = add_intercept(ds, partition)
        case _:
            raise InvalidSpec(f"Unknown preprocessing '{preprocessing}', use center or intercept")
    _log.info(f"Design with n={ds.n}, d1={partition.d1}, q1={partition.q1}, q={ds.q} ({preprocessing}).")
    return LoadedData(
        dataset=ds,
        partition=partition,
        view=DesignView.from_dataset(ds, partition),
        preprocessing=preprocessing,
    )
