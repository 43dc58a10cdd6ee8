"""
Path helper utilities for MagnetoSense.
Ensures correct paths for data files and directories.
"""

import os
import sys
import logging

logger = logging.getLogger(__name__)

DATA_SUBDIRECTORIES = ["runs", "studies", "configs"]


def data_root():
    """Root of the artifact tree; MAGNETOSENSE_DATA_DIR overrides the default 'data'"""
    return os.getenv("MAGNETOSENSE_DATA_DIR", "data")


def fix_path_issues():
    """Fix common path issues by ensuring all required directories exist"""
    root = data_root()
    for sub in DATA_SUBDIRECTORIES:
        os.makedirs(os.path.join(root, sub), exist_ok=True)

    # Add the project root to Python path so 'src' imports resolve
    project_root = os.path.normpath(get_absolute_path(""))
    if project_root not in sys.path:
        sys.path.insert(0, project_root)
        logger.info(f"Added {project_root} to Python path")

    return True


def ensure_data_directory(data_type=None, base=None):
    """Ensure data directory exists and return its path"""
    root = base if base is not None else data_root()
    directory = os.path.join(root, data_type) if data_type else root
    os.makedirs(directory, exist_ok=True)
    return directory


def get_absolute_path(relative_path):
    """Convert relative path to absolute path"""
    base_dir = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
    return os.path.join(base_dir, relative_path)
