"""Numerical construction of the one-parameter family of G2-holonomy
metrics on deformations of the cone over S^3 x S^3.

The package is organized around five pieces:

* :mod:`g2cone.exterior` -- exterior algebra on the invariant coframe;
  builds the defining 3-form, evaluates the closure conditions and
  re-derives the torsion-free flow from them (the independent oracle).
* :mod:`g2cone.flow` -- the shape ODE system, its first integral, the
  radial/tangential split on S^3, the desingularized chart at the
  singular arc, discrete symmetries and scalar monitors.
* :mod:`g2cone.shoot` -- power-series launch off the singular orbit,
  eigenvector launch off the singular arc, adaptive integration,
  convergence detection and asymptotically-conic fits.
* :mod:`g2cone.analysis` -- stationary directions, linearizations,
  small eigenproblems, and the classical closed-form solutions used as
  exactness oracles.
* :mod:`g2cone.cli` -- the ``g2cone`` command with the verification
  suites and artifact emission (CSV / JSON / SVG).
"""

from .exterior import DerivVector, KForm, ShapeState
from .flow import ChartPoint, MonitorVector, SphereState
from .shoot import ALCFit, SeriesStart, Trajectory

__version__ = "0.1.0"

__all__ = [
    "KForm",
    "ShapeState",
    "DerivVector",
    "SphereState",
    "ChartPoint",
    "MonitorVector",
    "SeriesStart",
    "Trajectory",
    "ALCFit",
    "__version__",
]
