import argparse
from pathlib import Path

from dotenv import load_dotenv
from tabulate import tabulate

from pulse_iv.experiments.empirical import ajr_data_path, replicate

load_dotenv()

parser = argparse.ArgumentParser(description="Return of expropriation protection on log GDP, models M1-M8")
parser.add_argument("--data", default=None, help="Settler-mortality CSV (default $PULSE_AJR_DATA or data/ajr.csv)")
args = parser.parse_args()

path = Path(args.data) if args.data else ajr_data_path()
if not path.exists():
    print(f"Dataset {path} not found, nothing to replicate.")
    raise SystemExit(0)

table = replicate(path)
print(tabulate(table, headers="keys", showindex=False, floatfmt=".4f"))
