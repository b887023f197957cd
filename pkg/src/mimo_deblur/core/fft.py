"""Mixed-radix discrete Fourier transforms with a Bluestein fallback.

Lengths are split by their smallest prime factor (decimation in time) until
a prime length remains. Small primes use an explicit DFT matrix; larger ones
are rewritten as a circular convolution of power-of-two length (Bluestein's
chirp-z trick), which the mixed-radix path then evaluates. All transforms are
unnormalized in the forward direction and work on the trailing axis in
complex128.
"""

from functools import lru_cache

import numpy as np

# prime lengths up to this bound use a dense DFT matrix
_DIRECT_MAX = 16


@lru_cache(maxsize=None)
def _smallest_factor(n: int) -> int:
    if n % 2 == 0:
        return 2
    factor = 3
    while factor * factor <= n:
        if n % factor == 0:
            return factor
        factor += 2
    return n


@lru_cache(maxsize=64)
def _dft_matrix(n: int) -> np.ndarray:
    k = np.arange(n)
    matrix = np.exp(-2j * np.pi * np.outer(k, k) / n)
    matrix.flags.writeable = False
    return matrix


@lru_cache(maxsize=64)
def _twiddles(radix: int, n: int) -> np.ndarray:
    """W_n^(r*k) for r < radix, k < n, shape (radix, n)."""
    table = np.exp(-2j * np.pi * np.outer(np.arange(radix), np.arange(n)) / n)
    table.flags.writeable = False
    return table


@lru_cache(maxsize=64)
def _chirp(n: int) -> np.ndarray:
    k = np.arange(n)
    # k^2 mod 2n keeps the phase argument small for long transforms
    chirp = np.exp(-1j * np.pi * ((k * k) % (2 * n)) / n)
    chirp.flags.writeable = False
    return chirp


def _fft_last(x: np.ndarray) -> np.ndarray:
    n = x.shape[-1]
    if n == 1:
        return x.copy()
    radix = _smallest_factor(n)
    if radix == n:
        if n <= _DIRECT_MAX:
            return x @ _dft_matrix(n)
        return _bluestein(x)
    m = n // radix
    # sub[..., j, r] = x[j * radix + r]; transform each residue class r
    sub = x.reshape(*x.shape[:-1], m, radix)
    partial = _fft_last(np.swapaxes(sub, -1, -2))
    expanded = partial[..., np.arange(n) % m]
    return np.einsum("...rn,rn->...n", expanded, _twiddles(radix, n))


def _ifft_last(x: np.ndarray) -> np.ndarray:
    return np.conj(_fft_last(np.conj(x))) / x.shape[-1]


def _bluestein(x: np.ndarray) -> np.ndarray:
    n = x.shape[-1]
    size = 1 << (2 * n - 1).bit_length()
    chirp = _chirp(n)

    a = np.zeros(x.shape[:-1] + (size,), dtype=np.complex128)
    a[..., :n] = x * chirp

    b = np.zeros(size, dtype=np.complex128)
    b[:n] = np.conj(chirp)
    b[size - n + 1:] = np.conj(chirp[1:])[::-1]

    circular = _ifft_last(_fft_last(a) * _fft_last(b))
    return circular[..., :n] * chirp


def fft(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """1-D DFT along ``axis`` for any length >= 1."""
    data = np.moveaxis(np.asarray(x, dtype=np.complex128), axis, -1)
    return np.moveaxis(_fft_last(data), -1, axis)


def ifft(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Inverse of :func:`fft` (carries the 1/n factor)."""
    data = np.moveaxis(np.asarray(x, dtype=np.complex128), axis, -1)
    return np.moveaxis(_ifft_last(data), -1, axis)


def fft2(x: np.ndarray) -> np.ndarray:
    """2-D DFT over the last two axes."""
    return fft(fft(x, axis=-1), axis=-2)


def ifft2(x: np.ndarray) -> np.ndarray:
    return ifft(ifft(x, axis=-1), axis=-2)
