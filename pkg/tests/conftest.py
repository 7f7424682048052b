"""Shared test configuration.

Pin BLAS pools to one thread before numpy loads anywhere: the bit-for-bit
reproducibility assertions in this suite compare reductions that must not
depend on how a threaded BLAS splits a matvec.
"""

import os

for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")
