"""Gimbal-tracking fiducial landing: geometry, detection model, controller and simulator."""

__version__ = "0.1.0"
