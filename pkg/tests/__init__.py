"""
Test package for the semantic relay optimizer.

This package contains tests for the network and semantic models, the
alternating optimizer and its blocks, the grid oracle, the experiment
drivers and the command line.
"""

# Test package marker
__test_package__ = True
