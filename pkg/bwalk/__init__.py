"""
bwalk: Billiard Walk and Hit-and-Run samplers for uniform sampling of
bounded regions, with Boundary Oracles for polytopes, quadrics and special
test bodies, Dikin preconditioning, uniformity diagnostics and a scenario
runner.
"""

__version__ = "1.0.0"
