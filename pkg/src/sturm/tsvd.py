"""t-product algebra, t-SVD, tubal rank and the tubal nuclear norm.

Every operation runs in the mode-3 Fourier domain.  Only spectral slices
``0..floor(I3/2)`` are computed; slice ``I3-k`` is the complex conjugate of
slice ``k`` for real input, so it is filled in by mirroring.  Self-mirrored
slices (``k = 0`` and ``k = I3/2``) are real and are handled in real
arithmetic, which keeps every inverse transform exactly real.
"""
from dataclasses import dataclass

import numpy as np

from .spectral import dft_mode3, half_spectrum_indices, idft_mode3, mirror_index
from .tensor_core import as_tensor3

DEFAULT_RANK_TOL = 1e-10


def _self_mirrored(k, i3):
    return mirror_index(k, i3) == k


def slicewise(fn, *spectra, i3):
    """Apply ``fn`` to matching spectral slices and rebuild a full spectrum.

    ``fn`` maps one matrix per input spectrum to a tuple of output matrices.
    """
    outs = None
    for k in half_spectrum_indices(i3):
        args = [s[:, :, k] for s in spectra]
        if _self_mirrored(k, i3):
            args = [m.real for m in args]
        res = fn(*args)
        if outs is None:
            outs = [np.zeros(r.shape + (i3,), dtype=np.complex128) for r in res]
        for out, r in zip(outs, res):
            out[:, :, k] = r
            j = mirror_index(k, i3)
            if j != k:
                out[:, :, j] = np.conj(r)
    return outs


def t_product(a, b):
    """t-product ``a * b`` of ``I1 x I2 x I3`` and ``I2 x J4 x I3`` tensors."""
    a = as_tensor3(a, "a")
    b = as_tensor3(b, "b")
    if a.shape[1] != b.shape[0] or a.shape[2] != b.shape[2]:
        raise ValueError(
            f"t-product needs a (I1, I2, I3) and b (I2, J4, I3); "
            f"got {a.shape} and {b.shape}"
        )
    i3 = a.shape[2]
    (prod,) = slicewise(lambda x, y: (x @ y,), dft_mode3(a), dft_mode3(b), i3=i3)
    return idft_mode3(prod)


def conj_transpose(a):
    """Transpose every frontal slice, then reverse the order of slices 2..I3."""
    a = as_tensor3(a)
    out = np.transpose(a, (1, 0, 2))
    order = [0] + list(range(a.shape[2] - 1, 0, -1))
    return np.ascontiguousarray(out[:, :, order])


def identity_tensor(i, i3):
    if i < 1 or i3 < 1:
        raise ValueError(f"identity tensor needs positive sizes, got {i}, {i3}")
    out = np.zeros((i, i, i3))
    out[:, :, 0] = np.eye(i)
    return out


@dataclass(frozen=True)
class TsvdFactors:
    U: np.ndarray
    S: np.ndarray
    V: np.ndarray

    def reconstruct(self):
        return t_product(t_product(self.U, self.S), conj_transpose(self.V))


def _slice_svd(k):
    def svd(m):
        try:
            u, s, vh = np.linalg.svd(m, full_matrices=True)
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError(
                f"SVD failed on spectral slice {k}: {exc}"
            ) from exc
        sigma = np.zeros(m.shape, dtype=np.float64)
        sigma[: s.size, : s.size] = np.diag(s)
        return u, sigma, vh.conj().T

    return svd


def t_svd(a):
    """Full t-SVD ``a = U * S * V^T`` computed slice by slice in the spectrum.

    Spectral singular values are sorted non-increasing within each slice.
    """
    a = as_tensor3(a)
    spec = dft_mode3(a)
    i3 = a.shape[2]
    parts = {}
    for k in half_spectrum_indices(i3):
        m = spec[:, :, k]
        parts[k] = _slice_svd(k)(m.real if _self_mirrored(k, i3) else m)
    u_hat = np.zeros((a.shape[0], a.shape[0], i3), dtype=np.complex128)
    s_hat = np.zeros(a.shape, dtype=np.complex128)
    v_hat = np.zeros((a.shape[1], a.shape[1], i3), dtype=np.complex128)
    for k, (u, s, v) in parts.items():
        for full, part in ((u_hat, u), (s_hat, s), (v_hat, v)):
            full[:, :, k] = part
            full[:, :, mirror_index(k, i3)] = np.conj(part)
    return TsvdFactors(idft_mode3(u_hat), idft_mode3(s_hat), idft_mode3(v_hat))


def spectral_singular_values(a):
    """``(min(I1, I2), I3)`` array of singular values of every spectral slice."""
    a = as_tensor3(a)
    spec = dft_mode3(a)
    return np.stack(
        [np.linalg.svd(spec[:, :, k], compute_uv=False) for k in range(a.shape[2])],
        axis=1,
    )


def tubal_rank(a, tol=DEFAULT_RANK_TOL):
    """Number of singular tubes whose Frobenius norm exceeds ``tol * smax``.

    ``smax`` is the largest singular value over all spectral slices.  The
    paper assumes ``I1 >= I2``; any shape is accepted here and the result is
    bounded by ``min(I1, I2)``.
    """
    if tol < 0:
        raise ValueError(f"tol must be non-negative, got {tol}")
    sv = spectral_singular_values(a)
    smax = sv.max(initial=0.0)
    if smax == 0.0:
        return 0
    # Parseval: the time-domain tube S(i,i,:) has norm sqrt(sum_k s_ik^2 / I3).
    tube_norms = np.sqrt((sv**2).sum(axis=1) / sv.shape[1])
    return int((tube_norms > tol * smax).sum())


def tnn(a):
    """Tubal nuclear norm: mean over spectral slices of their nuclear norms."""
    sv = spectral_singular_values(a)
    return float(sv.sum() / sv.shape[1])
