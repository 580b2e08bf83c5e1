import logging
import os
import sys

from pulse_iv.constants import PULSE_LOG_LEVEL

__version__ = "0.3.0"

root = logging.getLogger()
if not any(getattr(h, "_pulse_iv", False) for h in root.handlers):
    root.setLevel(os.getenv(PULSE_LOG_LEVEL, "WARNING").upper())
    handler = logging.StreamHandler(sys.stdout)
    handler._pulse_iv = True
    formatter = logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')
    handler.setFormatter(formatter)
    root.addHandler(handler)
