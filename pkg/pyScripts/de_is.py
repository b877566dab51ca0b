"""
de_is.py - Expansión de diferencias dentro de una parte (DE-IS).

El accionista inserta datos entre cada residuo c y el primo ID de su propia
clave, sin reconstruir la imagen:

  h_L = ID - c,   c'' = 2*h_L + b_L,   b_L = k XOR b_s

Las posiciones que no llevan bit se etiquetan en la clave con ID-1 (par), de
modo que la extracción y la recuperación saben qué posiciones saltar sin
guardar la longitud. Recorrido fila-mayor; el flujo de claves consume un bit
por bit insertado.
"""

import logging
from dataclasses import replace

import numpy as np

from errors import (DimensionMismatch, InconsistentShares, KeyNotPristine,
                    ResidueOutOfRange, RoleMismatch, ValueOutOfRange)
from keying import SisKeyMatrix, keystream_bits
from sharing_pipeline import ImageShare, ShareRole

log = logging.getLogger("DE-IS")


def deis_available(c, prime):
    """
    Una posición admite un bit si c'' = 2(ID - c) + 1 sigue por debajo de ID.

    Con ID impar esto equivale a c > (ID + 1) / 2.
    """
    c, prime = int(c), int(prime)
    if not 0 <= c < prime:
        raise ResidueOutOfRange(f"c={c} fuera de [0, {prime})")
    return 2 * (prime - c) + 1 < prime


def deis_available_mask(residues, primes):
    """Versión vectorizada de deis_available."""
    residues = np.asarray(residues, dtype=np.int64)
    primes = np.asarray(primes, dtype=np.int64)
    if np.any(residues < 0) or np.any(residues >= primes):
        raise ResidueOutOfRange("algún residuo no es menor que su primo")
    return 2 * (primes - residues) + 1 < primes


def deis_capacity(share, key):
    """Número de posiciones disponibles de una parte (capacidad DE-IS)."""
    return int(np.count_nonzero(deis_available_mask(share.residues, key.primes)))


def _check_pair(share, key):
    if share.shape != key.shape:
        raise DimensionMismatch(f"parte {share.shape} frente a clave {key.shape}")
    if share.shareholder_index != key.shareholder_index:
        raise InconsistentShares(
            f"parte del accionista {share.shareholder_index} con clave "
            f"del accionista {key.shareholder_index}")


def deis_embed(share, key, payload, ks):
    """
    Args:
        share: ImageShare PLAIN o HDE_MARKED
        key: SisKeyMatrix prístina del mismo accionista
        payload: bits a insertar (se trunca a la capacidad)
        ks: KeyStream de ocultación
    Returns:
        (ImageShare DEIS_MARKED, SisKeyMatrix etiquetada, bits insertados)
    """
    if share.role not in (ShareRole.PLAIN, ShareRole.HDE_MARKED):
        raise RoleMismatch(f"deis_embed sobre una parte {share.role.name}")
    if not key.is_pristine:
        raise KeyNotPristine(f"la clave {key.shareholder_index} ya está etiquetada")
    _check_pair(share, key)
    payload = np.asarray(payload, dtype=np.int64).reshape(-1)
    if np.any((payload != 0) & (payload != 1)):
        raise ValueOutOfRange("la carga útil debe ser binaria")

    residues = share.residues.astype(np.int64).reshape(-1)
    primes = key.primes.astype(np.int64).reshape(-1)
    available = deis_available_mask(residues, primes)
    positions = np.flatnonzero(available)

    count = min(payload.size, positions.size)
    if payload.size > positions.size:
        log.warning("Carga útil truncada: %d de %d bits caben en la parte %d",
                    positions.size, payload.size, share.shareholder_index)
    used = positions[:count]

    b_l = keystream_bits(ks, count).astype(np.int64) ^ payload[:count]
    marked = residues.copy()
    marked[used] = 2 * (primes[used] - residues[used]) + b_l

    labeled = primes - 1
    labeled[used] = primes[used]

    out_share = replace(share, role=ShareRole.DEIS_MARKED,
                        residues=marked.reshape(share.shape).astype(share.residues.dtype),
                        embedded_count=count, prior_role=share.role)
    out_key = SisKeyMatrix(key.shareholder_index,
                           labeled.reshape(key.shape).astype(key.primes.dtype))
    log.debug("DE-IS: %d bits en la parte %d (capacidad %d)",
              count, share.shareholder_index, positions.size)
    return out_share, out_key, count


def _check_marked(marked, labeled_key):
    if marked.role != ShareRole.DEIS_MARKED:
        raise RoleMismatch(f"se esperaba una parte DEIS_MARKED, no {marked.role.name}")
    _check_pair(marked, labeled_key)


def deis_extract(marked, labeled_key, ks):
    """Bits insertados, en orden de inserción."""
    _check_marked(marked, labeled_key)
    residues = marked.residues.astype(np.int64).reshape(-1)
    primes = labeled_key.primes.astype(np.int64).reshape(-1)
    used = np.flatnonzero(primes & 1)
    k = keystream_bits(ks, used.size).astype(np.int64)
    return ((residues[used] & 1) ^ k).astype(np.uint8)


def deis_recover(marked, labeled_key):
    """
    Deshace DE-IS: c = ID - floor(c''/2) en entradas impares y ID = e + 1 en
    las pares.

    Returns:
        (ImageShare con el rol previo, SisKeyMatrix prístina)
    """
    _check_marked(marked, labeled_key)
    residues = marked.residues.astype(np.int64)
    primes = labeled_key.primes.astype(np.int64)
    used = (primes & 1).astype(bool)

    restored = np.where(used, primes - residues // 2, residues)
    pristine = np.where(used, primes, primes + 1)

    prior = marked.prior_role if marked.prior_role is not None else ShareRole.PLAIN
    share = ImageShare(role=prior, shareholder_index=marked.shareholder_index,
                       residues=restored.astype(marked.residues.dtype))
    key = SisKeyMatrix(labeled_key.shareholder_index,
                       pristine.astype(labeled_key.primes.dtype))
    return share, key
