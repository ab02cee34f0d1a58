"""Discrete Fourier transform along mode 3.

Convention: unnormalized forward transform, ``1/I3`` on the inverse (the
numpy ``fft``/``ifft`` pair).  The ``1/I3`` factor in the tubal nuclear norm
is applied in :mod:`sturm.tsvd`, never here.
"""
import numpy as np

from .tensor_core import as_tensor3

#: Imaginary residue (relative to ``max(1, max|real part|)``) tolerated when
#: returning from the spectral domain.
IMAG_TOL = 1e-10


def dft_mode3(a):
    """Complex ``(I1, I2, I3)`` spectrum, one FFT per tube."""
    a = as_tensor3(a)
    return np.fft.fft(a, axis=2)


def idft_mode3(s):
    """Inverse of :func:`dft_mode3`, returning a real tensor.

    Raises ``ValueError`` when the spectrum is not conjugate symmetric along
    mode 3, i.e. the inverse has a non-negligible imaginary part.
    """
    s = np.asarray(s)
    if s.ndim != 3:
        raise ValueError(f"spectrum must be third-order, got shape {s.shape}")
    out = np.fft.ifft(s, axis=2)
    real = np.ascontiguousarray(out.real)
    resid = float(np.abs(out.imag).max(initial=0.0))
    scale = max(1.0, float(np.abs(real).max(initial=0.0)))
    if resid > IMAG_TOL * scale:
        raise ValueError(
            "spectrum violates conjugate symmetry along mode 3: "
            f"imaginary residue {resid:.3e} after inverse transform"
        )
    return real


def half_spectrum_indices(i3):
    """Spectral indices ``0..floor(I3/2)``; the rest are conjugate mirrors."""
    return range(i3 // 2 + 1)


def mirror_index(k, i3):
    return (i3 - k) % i3
