"""
rul2stage
=========

Two-stage early remaining-useful-life prediction for lithium-ion cells.

LAYERS (each may import only from the ones before it):
- contracts      immutable types and the error family
- dataio         cell CSV store, normalization, fleet splits
- synthgen       synthetic degradation fleets
- windows        sliding windows, health-state labels, RUL targets
- nn             recurrent network engine, Adam, training, checkpoints
- fpc            stage 1: health-state model and FPC trigger
- rulpred        stage 2: RUL model and curves
- eval           metrics, fleet evaluation, baseline harness, reports
- observability  metrics collector and audit log (side channel)
- config, cli    run configuration and command line
"""

__version__ = "0.1.0"
