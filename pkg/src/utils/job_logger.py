#!/usr/bin/env python3
"""
Job Logger
Handles run summaries for each CLI command.
"""

import json
import os
from datetime import datetime
from pathlib import Path

LOG_DIR_ENV = 'DRUM_LOG_DIR'


def log_dir():
    return Path(os.getenv(LOG_DIR_ENV, 'logs'))


class JobLogger:
    """Handles run summary persistence"""

    def __init__(self, logs_dir=None):
        self.logs_dir = Path(logs_dir) if logs_dir else log_dir()
        self.logs_dir.mkdir(parents=True, exist_ok=True)

    def save_job_summary(self, summary):
        """Save run summary to JSON file"""
        timestamp = datetime.now().strftime("%Y%m%d_%H%M%S_%f")
        summary_file = self.logs_dir / f"job_summary_{timestamp}.json"

        with open(summary_file, 'w') as f:
            json.dump(summary, f, indent=2)

        # Also save latest summary
        latest_file = self.logs_dir / "latest_job_summary.json"
        with open(latest_file, 'w') as f:
            json.dump(summary, f, indent=2)

        return str(summary_file)
