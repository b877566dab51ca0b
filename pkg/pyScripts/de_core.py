"""
de_core.py - Primitivas de expansión de diferencias en el dominio de píxeles.

Un par (p1, p2) se transforma en (h, l): h = mayor - menor >= 0 y
l = floor((p1 + p2) / 2). El orden (qué posición tenía el píxel mayor) se
guarda aparte como bit de orden, que es el "1" de la matriz M_ava.

Incluye versiones escalares (HlPair) y vectorizadas sobre arrays numpy, que son
las que usa el reparto de imágenes.
"""

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

import config
from errors import NotAvailable, OverflowedPair

PIXEL_MAX = config.PIXEL_MAX


class PairOrder(IntEnum):
    """Qué píxel del par era el mayor (FIRST también en empates)."""
    FIRST = 0
    SECOND = 1


@dataclass(frozen=True)
class HlPair:
    h: int
    l: int


# --------------------------------------------------------
# Escalares
# --------------------------------------------------------
def pair_to_hl(p1, p2):
    """
    Returns:
        (HlPair, PairOrder)
    """
    p1, p2 = int(p1), int(p2)
    order = PairOrder.FIRST if p1 >= p2 else PairOrder.SECOND
    return HlPair(h=abs(p1 - p2), l=(p1 + p2) // 2), order


def hl_to_pair(hl, order):
    """Inversa de pair_to_hl; el mayor se coloca según order."""
    big = hl.l + (hl.h + 1) // 2
    small = hl.l - hl.h // 2
    if big > PIXEL_MAX or small < 0 or hl.h < 0:
        raise OverflowedPair(f"(h={hl.h}, l={hl.l}) sale de [0, {PIXEL_MAX}]")
    if order == PairOrder.FIRST:
        return big, small
    return small, big


def expansion_bound(l):
    """min(2(255 - l), 2l + 1): cota de la diferencia marcada."""
    return min(2 * (PIXEL_MAX - l), 2 * l + 1)


def is_available(hl, h_fid=config.H_FID_INFINITE):
    """
    Un par admite un bit si tanto h como 2h+1 respetan la cota de
    desbordamiento y además h <= h_fid.
    """
    bound = expansion_bound(hl.l)
    return hl.h <= bound and 2 * hl.h + 1 <= bound and hl.h <= h_fid


def de_embed_h(h, bit, l=None, h_fid=config.H_FID_INFINITE):
    """
    h' = 2h + bit. Si se da l, se exige que el par sea disponible.
    """
    if bit not in (0, 1):
        raise ValueError(f"bit {bit} no binario")
    if l is not None and not is_available(HlPair(h, l), h_fid):
        raise NotAvailable(f"par (h={h}, l={l}) no disponible")
    return 2 * h + bit


def de_extract_h(h_marked):
    """Returns: (bit, h) con bit = LSB(h') y h = floor(h'/2)."""
    if h_marked < 0:
        raise ValueError(f"h'={h_marked} negativo")
    return h_marked & 1, h_marked >> 1


# --------------------------------------------------------
# Vectorizadas
# --------------------------------------------------------
def pairs_to_hl(first, second):
    """
    Args:
        first, second: arrays de píxeles del mismo tamaño
    Returns:
        (h, l, order) con order = PairOrder por elemento
    """
    first = np.asarray(first, dtype=np.int64)
    second = np.asarray(second, dtype=np.int64)
    h = np.abs(first - second)
    l = (first + second) // 2
    order = np.where(first >= second, PairOrder.FIRST, PairOrder.SECOND)
    return h, l, order.astype(np.uint8)


def hl_to_pairs(h, l, order):
    """Inversa vectorizada; OverflowedPair si algún par sale de rango."""
    h = np.asarray(h, dtype=np.int64)
    l = np.asarray(l, dtype=np.int64)
    big = l + (h + 1) // 2
    small = l - h // 2
    if np.any(big > PIXEL_MAX) or np.any(small < 0) or np.any(h < 0):
        raise OverflowedPair("algún par reconstruido sale de [0, 255]")
    first_big = np.asarray(order) == PairOrder.FIRST
    first = np.where(first_big, big, small)
    second = np.where(first_big, small, big)
    return first, second


def availability_mask(h, l, h_fid=config.H_FID_INFINITE):
    """Versión vectorizada de is_available."""
    h = np.asarray(h, dtype=np.int64)
    l = np.asarray(l, dtype=np.int64)
    bound = np.minimum(2 * (PIXEL_MAX - l), 2 * l + 1)
    return (h <= bound) & (2 * h + 1 <= bound) & (h <= h_fid)
