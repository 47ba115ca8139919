"""Chain-loop backend selection and the common dispatch surface.

Two interchangeable implementations of the per-step chain loop exist: a
compiled extension (``adaptmh._loop``) and a pure-Python fallback
(``adaptmh._loop_py``).  They are bit-identical by construction — same
random stream, same floating-point operation order — so the choice is purely
a speed matter.  The compiled loop is used when importable; set
``ADAPTMH_BACKEND=python`` or ``=compiled`` to force one (forcing the
compiled loop when the extension is missing is an error, not a silent
fallback).
"""

import math
import os

import numpy as np

from . import _loop_py
from .am import AmConfig
from .errors import BackendUnavailable, DimensionMismatch, DomainError, InvalidState
from .mh import ProposalParams
from .mhcma import MhCmaConfig

try:
    from . import _loop as _compiled
except ImportError:  # extension not built; the fallback still works
    _compiled = None

ENV_VAR = "ADAPTMH_BACKEND"

ADAPTER_IDS = {"fixed": 0, "am": 1, "mhcma": 2}


def available_backends():
    """Names of the loop implementations importable right now."""
    names = ["python"]
    if _compiled is not None:
        names.insert(0, "compiled")
    return tuple(names)


def active_backend(override=None):
    """Resolve which backend a run will use.

    Priority: explicit ``override`` argument, then the ``ADAPTMH_BACKEND``
    environment variable, then the fastest available.
    """
    choice = override or os.environ.get(ENV_VAR, "").strip().lower()
    if choice in ("", None):
        return "compiled" if _compiled is not None else "python"
    if choice == "python":
        return "python"
    if choice == "compiled":
        if _compiled is None:
            raise BackendUnavailable(
                "compiled backend requested but adaptmh._loop is not importable; "
                "build the extension or unset " + ENV_VAR
            )
        return "compiled"
    raise DomainError(f"unknown backend {choice!r}")


def _adapter_fields(adapter_cfg):
    """Flatten an adapter config into the loop argument tuple."""
    if isinstance(adapter_cfg, AmConfig):
        return ("am", 1.0, adapter_cfg.C0,
                adapter_cfg.t0, adapter_cfg.s_d, adapter_cfg.eps,
                0.5, 1.0, 0.5, 1.0, 2.0)
    if isinstance(adapter_cfg, MhCmaConfig):
        return ("mhcma", adapter_cfg.sigma0, adapter_cfg.C0,
                1, 1.0, 1.0,
                adapter_cfg.p_target, adapter_cfg.c_c, adapter_cfg.c1_0,
                adapter_cfg.beta0, adapter_cfg.gamma)
    if isinstance(adapter_cfg, ProposalParams):
        return ("fixed", adapter_cfg.sigma, adapter_cfg.C,
                1, 1.0, 1.0,
                0.5, 1.0, 0.5, 1.0, 2.0)
    raise DomainError(
        f"adapter_cfg must be AmConfig, MhCmaConfig or ProposalParams, "
        f"got {type(adapter_cfg).__name__}"
    )


def adapter_kind(adapter_cfg):
    """Short kind name ('fixed' | 'am' | 'mhcma') of an adapter config."""
    return _adapter_fields(adapter_cfg)[0]


def run_chain(rng, n_steps, x0, target, adapter_cfg, backend=None):
    """Run one chain with a private generator and return the raw columns.

    Parameters
    ----------
    rng : numpy.random.Generator
        Private stream for this chain; consumed (dim + 1 draws per step).
    n_steps : int
    x0 : array_like, shape (dim,)
        Starting state; must have positive target density.
    target : TargetDensity
    adapter_cfg : AmConfig | MhCmaConfig | ProposalParams
        What to adapt (or a fixed proposal).
    backend : str, optional
        'compiled' | 'python'; default per :func:`active_backend`.

    Returns
    -------
    dict of ndarray
        Columns x, alpha, accepted, sigma, log_det_c, adaptation_gap, tau,
        cov_sup_norm, path_mahal_sq, each of length ``n_steps``.
    """
    n_steps = int(n_steps)
    if n_steps < 1:
        raise DomainError(f"n_steps must be >= 1, got {n_steps}")
    x0 = np.ascontiguousarray(x0, dtype=float)
    if x0.ndim != 1:
        raise DimensionMismatch("x0 must be a vector")
    d = x0.shape[0]
    if d != target.dim:
        raise DimensionMismatch(f"x0 dim {d} vs target dim {target.dim}")
    kind, sigma0, c0, am_t0, am_s_d, am_eps, pt, cc, c10, b0, gam = (
        _adapter_fields(adapter_cfg)
    )
    if c0.dim != d:
        raise DimensionMismatch(f"shape-matrix dim {c0.dim} vs state dim {d}")
    if target.log_density(x0) == -math.inf:
        raise InvalidState("x0 has zero target density")

    impl = _compiled if active_backend(backend) == "compiled" else _loop_py
    pack = target.pack
    return impl.run_chain(
        rng, n_steps, x0,
        pack.kind_id, pack.means, pack.chols, pack.log_norms,
        pack.log_weights, pack.banana_b, pack.banana_v,
        ADAPTER_IDS[kind], float(sigma0), np.ascontiguousarray(c0.mat),
        int(am_t0), float(am_s_d), float(am_eps),
        float(pt), float(cc), float(c10), float(b0), float(gam),
    )
