"""
DP-SQLP: continual release of user-level differentially private histograms
over keyed record streams.
"""

__version__ = "0.1.0"
