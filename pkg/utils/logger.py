import logging
import os
import sys
from logging.handlers import RotatingFileHandler

from dotenv import load_dotenv

load_dotenv()

LOG_FILE = os.getenv("LOG_FILE")
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO").upper()

log = logging.getLogger("lwr")
log.setLevel(getattr(logging, LOG_LEVEL, logging.INFO))
log.propagate = False

formatter = logging.Formatter("%(asctime)s | %(levelname)s | %(name)s | %(message)s")

if not log.handlers:
    # --- Console handler ---
    console_handler = logging.StreamHandler(sys.stdout)
    console_handler.setFormatter(formatter)
    log.addHandler(console_handler)

    # --- File handler (opt-in, UTF-8 safe) ---
    if LOG_FILE:
        file_handler = RotatingFileHandler(
            LOG_FILE,
            maxBytes=5_000_000,
            backupCount=5,
            encoding="utf-8"
        )
        file_handler.setFormatter(formatter)
        log.addHandler(file_handler)
