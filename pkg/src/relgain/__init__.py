"""Relativistic gain-term quadrature, Fourier-side gradient norms and bound audits."""
import os

# prefer OpenMP/workqueue over a possibly mismatched TBB runtime
os.environ.setdefault("NUMBA_THREADING_LAYER_PRIORITY", "omp workqueue tbb")

__version__ = "0.1.0"
