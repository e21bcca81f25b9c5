"""Desk-scale seafloor survey workbench.

Generates simulated reef environments, renders segmentation/depth frames,
composes the SegDepth false-color representation, and drives a robot with
an expert rule, a behavior-cloned policy, or coverage baselines so the
approaches can be benchmarked against each other.
"""

__version__ = "0.1.0"
