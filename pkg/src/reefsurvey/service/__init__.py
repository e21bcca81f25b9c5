"""HTTP facade for the labeling and teleoperation workflows."""

from .app import create_app

__all__ = ["create_app"]
