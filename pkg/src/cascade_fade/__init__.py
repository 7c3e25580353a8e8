"""Sum-of-sinusoids simulators for cascaded Rayleigh fading channels.

Submodules
----------
specfun     Bessel functions, erf and adaptive quadrature.
channel     Simulator configuration, random realizations and sample generation.
theory      Closed-form correlations, envelope distributions, LCR and AFD.
estimators  Empirical estimators for generated series.
harness     Config parsing, experiment runs, CSV output, benchmarks, CLI.
"""

__version__ = "0.1.0"
