import argparse
import json
import logging
from pathlib import Path

from box import Box

from pulse_iv import __version__
from pulse_iv.sem.model import InterventionSpec, load_sem, sem_sample
from pulse_iv.utils import load_structured_file, render_template

_log = logging.getLogger(__name__)

NAME = "simulate"
HELP = "Sample observed data from a linear SEM"


def add_arguments(parser: argparse.ArgumentParser):
    parser.add_argument("--sem", required=True, help="SEM config file (JSON or YAML)")
    parser.add_argument("--n", type=int, required=True, help="Number of rows")
    parser.add_argument("--seed", type=int, required=True, help="Non-negative seed")
    parser.add_argument("--intervene", help="Intervention file, overrides the block in the SEM config")
    parser.add_argument("--out", required=True, help="Output CSV file")


def manifest_path(out: str | Path) -> Path:
    out = Path(out)
    return out.with_name(f"{out.stem}_manifest.json")


def _intervention(path: str) -> InterventionSpec:
    content = load_structured_file(path)
    return InterventionSpec.from_mapping(content.get("intervention", content))


def main(args: argparse.Namespace, config: Box) -> int:
    model, intervention = load_sem(args.sem)
    if args.intervene:
        intervention = _intervention(args.intervene)
    ds = sem_sample(model, args.n, args.seed, intervention)

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    # Default float formatting writes the shortest repr, so values read back bit-for-bit.
    ds.to_frame().to_csv(out, index=False)
    manifest = {
        "sem": str(args.sem),
        "n": args.n,
        "seed": args.seed,
        "intervention": intervention.as_dict(),
        "columns": list(ds.to_frame().columns),
        "version": __version__,
    }
    with open(manifest_path(out), "w", encoding="utf-8") as file:
        json.dump(manifest, file, indent=2)

    print(
        render_template(
            "messages",
            "simulated",
            n=ds.n,
            path=str(out),
            seed=args.seed,
            intervention=intervention.kind.value,
        )
    )
    return 0
