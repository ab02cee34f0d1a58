"""Dense third-order tensors and labelled tensor datasets.

Tensors are plain ``numpy.ndarray`` objects of shape ``(I1, I2, I3)`` and
dtype ``float64``.  C-order storage makes mode 3 the fastest-varying index,
so every tube ``a[i1, i2, :]`` is contiguous and ``a.ravel()`` yields the
tube-contiguous linearization used everywhere in the package (design-matrix
rows, the STRM file payload, feature ranking ties).
"""
from dataclasses import dataclass

import numpy as np


def as_tensor3(a, name="tensor"):
    """Validate ``a`` as a finite real third-order tensor.

    Returns a C-contiguous float64 array; raises ``ValueError`` otherwise.
    """
    arr = np.asarray(a)
    if np.iscomplexobj(arr):
        raise ValueError(f"{name} must be real, got dtype {arr.dtype}")
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    if arr.ndim != 3:
        raise ValueError(f"{name} must be third-order, got shape {arr.shape}")
    if min(arr.shape) < 1:
        raise ValueError(f"{name} has an empty mode: shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains NaN or Inf entries")
    return arr


def _check_same_shape(a, b):
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")


def frontal_slice(a, i3):
    """The ``I1 x I2`` matrix ``a[:, :, i3]`` (0-based)."""
    return a[:, :, i3]


def tube(a, i1, i2):
    """The length-``I3`` mode-3 vector ``a[i1, i2, :]`` (0-based)."""
    return a[i1, i2, :]


def inner_product(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _check_same_shape(a, b)
    return float(np.dot(a.ravel(), b.ravel()))


def l1_norm(a):
    return float(np.abs(a).sum())


def fro_norm(a):
    return float(np.linalg.norm(np.ravel(a)))


def vectorize(a):
    """Tube-contiguous linearization: index ``(i1*I2 + i2)*I3 + i3``."""
    return np.ravel(np.asarray(a, dtype=np.float64), order="C").copy()


def tensorize3(v, dims):
    v = np.asarray(v, dtype=np.float64)
    dims = tuple(int(d) for d in dims)
    if len(dims) != 3:
        raise ValueError(f"dims must have three entries, got {dims}")
    if v.ndim != 1 or v.size != int(np.prod(dims)):
        raise ValueError(
            f"vector of length {v.size} cannot be folded into {dims}"
        )
    return v.reshape(dims).copy()


@dataclass(frozen=True)
class LabeledDataset:
    """``M`` feature tensors stacked as ``samples[m]`` with labels in {-1, +1}."""

    samples: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        samples = np.ascontiguousarray(self.samples, dtype=np.float64)
        labels = np.asarray(self.labels)
        if samples.ndim != 4:
            raise ValueError(
                "samples must be an (M, I1, I2, I3) array, "
                f"got shape {samples.shape}"
            )
        if samples.shape[0] < 1:
            raise ValueError("dataset must hold at least one sample")
        if not np.isfinite(samples).all():
            raise ValueError("samples contain NaN or Inf entries")
        if labels.shape != (samples.shape[0],):
            raise ValueError(
                f"expected {samples.shape[0]} labels, got shape {labels.shape}"
            )
        if not np.isin(labels, (-1, 1)).all():
            bad = labels[~np.isin(labels, (-1, 1))][0]
            raise ValueError(f"labels must be -1 or +1, found {bad!r}")
        samples.setflags(write=False)
        labels = labels.astype(np.int64)
        labels.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "labels", labels)

    @property
    def n_samples(self):
        return self.samples.shape[0]

    @property
    def dims(self):
        return self.samples.shape[1:]

    def subset(self, indices):
        indices = np.asarray(indices, dtype=np.int64)
        return LabeledDataset(self.samples[indices], self.labels[indices])

    def design_matrix(self):
        """``M x I`` matrix whose rows are the vectorized samples."""
        return self.samples.reshape(self.n_samples, -1)
