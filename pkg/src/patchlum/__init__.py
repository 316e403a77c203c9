"""Purcell-enhanced patch-antenna unipolar emitter simulator and fitter."""

__version__ = "0.1.0"
