#!/usr/bin/env python3
"""
File Tracker
Records output file hashes so replays can be checked for byte-identical results.
"""

import hashlib
import json
import logging
import os
from datetime import datetime

from src.utils.job_logger import log_dir


class FileTracker:
    """Handles output tracking and hash generation"""

    def __init__(self, tracking_file=None):
        self.tracking_file = tracking_file or str(log_dir() / "output_manifest.json")
        self.file_tracking = self.load_file_tracking()

    def load_file_tracking(self):
        """Load tracking data from JSON file"""
        if os.path.exists(self.tracking_file):
            try:
                with open(self.tracking_file, 'r') as f:
                    return json.load(f)
            except json.JSONDecodeError:
                logging.warning("⚠️ Corrupted output manifest, starting fresh")
        return {}

    def save_file_tracking(self):
        """Save tracking data to JSON file"""
        os.makedirs(os.path.dirname(self.tracking_file) or '.', exist_ok=True)
        with open(self.tracking_file, 'w') as f:
            json.dump(self.file_tracking, f, indent=2, sort_keys=True)

    def get_file_hash(self, file_path):
        """Generate SHA-256 hash of file content"""
        hash_sha256 = hashlib.sha256()
        with open(file_path, "rb") as f:
            for chunk in iter(lambda: f.read(4096), b""):
                hash_sha256.update(chunk)
        return hash_sha256.hexdigest()

    def get_tracking_info(self, file_key):
        return self.file_tracking.get(file_key)

    def record_output(self, file_path, command, run_key):
        """Store the hash of an output written by command for run_key.

        Returns True if the same run_key produced identical bytes before,
        False if it produced different bytes, None on first sight.
        """
        file_key = f"{os.path.abspath(file_path)}::{run_key}"
        file_hash = self.get_file_hash(file_path)
        previous = self.get_tracking_info(file_key)
        reproduced = None if previous is None else previous['hash'] == file_hash

        self.file_tracking[file_key] = {
            'command': command,
            'hash': file_hash,
            'written_at': datetime.now().isoformat(),
            'file_path': str(file_path),
        }
        self.save_file_tracking()
        if reproduced is False:
            logging.warning(f"⚠️ {file_path} differs from the previous run with the same config and seed")
        return reproduced
