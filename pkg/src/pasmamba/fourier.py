"""Centered 2D DFT and the amplitude/phase split of a spectrum.

Convention used everywhere in the package: the forward transform is
unnormalized, the inverse carries 1/(H*W), and spectra are centered so the
DC bin sits at ``(H // 2, W // 2)``. All functions act on the last two axes,
so stacks of images (e.g. NCHW feature maps) are transformed plane by plane.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

AXES = (-2, -1)
#: residue above which an inverse transform is rejected as non-real
IMAG_TOLERANCE = 1e-6
#: bins with amplitude below this count as zero (phase 0, no phase gradient)
ZERO_AMPLITUDE = 1e-12


class ConjugateSymmetryError(ValueError):
    """The spectrum is not the transform of a real image."""


def dft2_centered(img) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    return np.fft.fftshift(np.fft.fft2(img, axes=AXES), axes=AXES)


def idft2_complex(spec) -> np.ndarray:
    """Inverse of :func:`dft2_centered` without discarding the imaginary part."""
    spec = np.asarray(spec, dtype=np.complex128)
    return np.fft.ifft2(np.fft.ifftshift(spec, axes=AXES), axes=AXES)


def idft2_centered(spec, tol: float = IMAG_TOLERANCE) -> np.ndarray:
    """Inverse centered DFT returning a real image.

    Raises
    ------
    ConjugateSymmetryError
        If the largest imaginary residue exceeds ``tol``.
    """
    z = idft2_complex(spec)
    residue = float(np.max(np.abs(z.imag))) if z.size else 0.0
    if residue > tol:
        raise ConjugateSymmetryError(
            f"imaginary residue {residue:.3e} exceeds {tol:.1e}; spectrum is not Hermitian"
        )
    return np.ascontiguousarray(z.real)


def conjugate_partner(spec) -> np.ndarray:
    """``conj(X[-k])`` for every centered bin ``k`` (indices taken modulo size)."""
    u = np.fft.ifftshift(np.asarray(spec, dtype=np.complex128), axes=AXES)
    flipped = np.roll(np.flip(u, axis=AXES), shift=(1, 1), axis=AXES)
    return np.fft.fftshift(np.conj(flipped), axes=AXES)


def hermitian_part(spec) -> np.ndarray:
    """Project a centered spectrum onto the spectra of real images."""
    spec = np.asarray(spec, dtype=np.complex128)
    return 0.5 * (spec + conjugate_partner(spec))


def wrap_phase(phase) -> np.ndarray:
    """Map angles into (-pi, pi]."""
    phase = np.asarray(phase, dtype=np.float64)
    wrapped = np.mod(phase + np.pi, 2.0 * np.pi) - np.pi
    # mod lands exactly on -pi for odd multiples of pi; move those to +pi
    return np.where(wrapped <= -np.pi, np.pi, wrapped)


@dataclass
class AmpPhase:
    amplitude: np.ndarray
    phase: np.ndarray

    def __post_init__(self):
        self.amplitude = np.asarray(self.amplitude, dtype=np.float64)
        self.phase = np.asarray(self.phase, dtype=np.float64)
        if self.amplitude.shape != self.phase.shape:
            raise ValueError(
                f"amplitude shape {self.amplitude.shape} != phase shape {self.phase.shape}"
            )


def decompose(spec) -> AmpPhase:
    """Polar split; zero bins get phase 0 and phases lie in (-pi, pi]."""
    spec = np.asarray(spec, dtype=np.complex128)
    amp = np.abs(spec)
    phase = np.arctan2(spec.imag, spec.real)
    phase = np.where(phase <= -np.pi, np.pi, phase)
    phase = np.where(amp == 0.0, 0.0, phase)
    return AmpPhase(amp, phase)


def recompose(ap: AmpPhase) -> np.ndarray:
    if np.any(ap.amplitude < 0):
        raise ValueError("amplitude must be nonnegative")
    return ap.amplitude * np.cos(ap.phase) + 1j * (ap.amplitude * np.sin(ap.phase))
