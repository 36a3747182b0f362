"""Quantitative whole-body diffusion MRI analysis.

Turns pre-/post-treatment multi-station b-value volumes into bone-lesion
delineations, TDV and gADC biomarkers, and a rule-based treatment-response
classification, with the statistics needed to validate those biomarkers and
a synthetic phantom generator for fully verifiable fixtures.
"""

__version__ = "0.1.0"
