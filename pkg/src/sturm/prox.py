"""Proximal operators of the tubal nuclear norm and of the l1 norm."""
import numpy as np

from .spectral import dft_mode3, idft_mode3
from .tensor_core import as_tensor3
from .tsvd import slicewise


def _check_mu(mu):
    if mu < 0:
        raise ValueError(f"threshold must be non-negative, got {mu}")


def svt(m, mu):
    """Singular value thresholding of one (possibly complex) matrix."""
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    s = np.maximum(s - mu, 0.0)
    r = int(np.count_nonzero(s))
    return (u[:, :r] * s[:r]) @ vh[:r, :]


def prox_tnn(t, mu):
    """argmin_Z  mu * ||Z||_TNN + 1/2 ||Z - t||_F^2.

    FFT along mode 3, shrink the singular values of every spectral slice by
    ``mu``, inverse FFT.
    """
    _check_mu(mu)
    t = as_tensor3(t)
    if mu == 0:
        return t.copy()
    (z,) = slicewise(lambda m: (svt(m, mu),), dft_mode3(t), i3=t.shape[2])
    return idft_mode3(z)


def prox_l1(t, mu):
    """Elementwise soft-thresholding ``sign(t) * max(|t| - mu, 0)``."""
    _check_mu(mu)
    t = np.asarray(t, dtype=np.float64)
    return np.sign(t) * np.maximum(np.abs(t) - mu, 0.0)
