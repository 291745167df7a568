"""Shared tensor primitives: l-inf/range projection, orthonormal 2-D DCT,
sign-gradient helpers, and reproducible RNG streams.

Conventions used throughout the package:

* Images are numpy float64 arrays of shape (channels, height, width) with
  values in [0, 1]. Gradients and perturbations share the shape but are
  unconstrained. Batches stack along one extra leading axis.
* All randomness flows through ``stream(seed, *path)``: a Philox
  (counter-based) generator keyed by a root seed and a hierarchical path of
  non-negative integers and/or strings. Identical (seed, path) pairs produce
  identical sequences on every platform; distinct paths give independent
  streams via numpy's SeedSequence spawning. This makes every randomised
  result a pure function of (inputs, seed, path), independent of scheduling.
"""

import hashlib

import numpy as np
import scipy.fft


class ContractViolation(ValueError):
    """An operation was called outside its documented contract."""


class ZeroGradientError(ValueError):
    """An all-zero tensor was passed where a direction is required."""


# ---------------------------------------------------------------------------
# projection


def project(x: np.ndarray, x_nat: np.ndarray, epsilon: float) -> np.ndarray:
    """Clamp ``x`` into the l-inf ball of radius ``epsilon`` around ``x_nat``
    intersected with the pixel range [0, 1].

    Componentwise ``min(max(x, x_nat - eps, 0), x_nat + eps, 1)``. Idempotent
    and monotone in ``x``.
    """
    x = np.asarray(x, dtype=np.float64)
    x_nat = np.asarray(x_nat, dtype=np.float64)
    if x.shape != x_nat.shape:
        raise ContractViolation(f"shape mismatch: {x.shape} vs {x_nat.shape}")
    if not 0.0 <= epsilon <= 1.0:
        raise ContractViolation(f"epsilon must be in [0, 1], got {epsilon}")
    out = np.maximum(np.maximum(x, x_nat - epsilon), 0.0)
    return np.minimum(np.minimum(out, x_nat + epsilon), 1.0)


# ---------------------------------------------------------------------------
# orthonormal 2-D DCT (per channel, applied over the last two axes)


def dct2(x: np.ndarray) -> np.ndarray:
    """Orthonormal (unitary) 2-D DCT-II over the last two axes.

    Unitary normalisation makes the transform an exact l2 isometry, so the
    round trip with :func:`idct2` and Parseval's identity hold to floating
    point precision. Output is not range-clamped.
    """
    return scipy.fft.dctn(np.asarray(x, dtype=np.float64), type=2,
                          axes=(-2, -1), norm="ortho")


def idct2(coeffs: np.ndarray) -> np.ndarray:
    """Inverse of :func:`dct2` (orthonormal 2-D DCT-III over the last two axes)."""
    return scipy.fft.idctn(np.asarray(coeffs, dtype=np.float64), type=2,
                           axes=(-2, -1), norm="ortho")


# ---------------------------------------------------------------------------
# sign-gradient helpers


def sign(g: np.ndarray) -> np.ndarray:
    """Componentwise sign, mapping each entry to -1, 0, or +1."""
    return np.sign(np.asarray(g, dtype=np.float64))


def l1_normalize(g: np.ndarray) -> np.ndarray:
    """Return ``g / ||g||_1``. Raises :class:`ZeroGradientError` on zero input;
    callers decide the policy (e.g. momentum updates keep the previous state)."""
    g = np.asarray(g, dtype=np.float64)
    norm = float(np.abs(g).sum())
    if norm == 0.0:
        raise ZeroGradientError("cannot normalize an all-zero tensor")
    return g / norm


# ---------------------------------------------------------------------------
# RNG streams


def _path_word(part) -> int:
    if isinstance(part, (bool,)):
        raise TypeError("bool is not a valid stream path element")
    if isinstance(part, (int, np.integer)):
        if part < 0:
            raise ValueError(f"stream path ints must be non-negative, got {part}")
        return int(part)
    if isinstance(part, str):
        return int.from_bytes(hashlib.sha256(part.encode()).digest()[:8], "little")
    raise TypeError(f"unsupported stream path element: {part!r}")


def stream(seed: int, *path) -> np.random.Generator:
    """Return a Philox generator for the child stream addressed by ``path``.

    Path elements are non-negative ints or strings (strings are mapped to
    stable 64-bit words via SHA-256). Streams with distinct paths are
    independent by SeedSequence construction.
    """
    ss = np.random.SeedSequence(entropy=int(seed),
                                spawn_key=tuple(_path_word(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *path) -> int:
    """Collapse (seed, path) into a single 64-bit seed for nested components."""
    ss = np.random.SeedSequence(entropy=int(seed),
                                spawn_key=tuple(_path_word(p) for p in path))
    return int(ss.generate_state(1, np.uint64)[0])
