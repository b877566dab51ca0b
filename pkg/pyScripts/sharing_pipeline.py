"""
sharing_pipeline.py - Operaciones del repartidor sobre imágenes completas.

Flujo:
  1. preprocess_image: desordena los pares horizontales, clasifica cada par con
     de_core y sustituye los pares disponibles por (h, l).
  2. share_image: reparte cada posición con su matriz de primos (crt_core).
  3. hde_embed: expansión de diferencias homomórfica sobre las partes; la
     imagen reconstruida queda marcada sin que el repartidor vea el secreto.
  4. reconstruct_image / hde_extract_restore: reconstrucción con t partes,
     extracción de la carga útil y restauración exacta.

Convenciones:
  - Par j de la fila y = columnas (2j, 2j+1). Índice de par = y * (W/2) + j.
  - Todo lo que guarda SideInfo (M_ava, orden de inserción) vive en el
    dominio desordenado: el par desordenado k es el par original forward[k].
  - En un par disponible, la columna izquierda guarda h y la derecha l.
"""

import logging
from dataclasses import dataclass, replace
from enum import IntEnum

import numpy as np

import config
from crt_core import exact_dtype, lift_array, reconstruct_array, share_array
from de_core import PairOrder, availability_mask, hl_to_pairs, pairs_to_hl
from errors import (DimensionMismatch, InconsistentShares, InsufficientShares,
                    LabeledKey, MixedRoles, OddWidth, PayloadTooLarge,
                    RoleMismatch, SideInfoMismatch, ValueOutOfRange)
from keying import gen_permutation

log = logging.getLogger("Reparto")


class ShareRole(IntEnum):
    PLAIN = 0
    HDE_MARKED = 1
    DEIS_MARKED = 2


@dataclass
class ImageShare:
    """
    Parte de imagen de un accionista.

    Attributes:
        role: ShareRole
        shareholder_index: 1..n
        residues: matriz H×W de residuos
        embedded_count: bits DE-IS insertados (solo DEIS_MARKED)
        prior_role: rol anterior a DE-IS, para deis_recover
    """
    role: ShareRole
    shareholder_index: int
    residues: np.ndarray
    embedded_count: int = 0
    prior_role: ShareRole = None

    @property
    def shape(self):
        return self.residues.shape

    def copy(self):
        return replace(self, residues=self.residues.copy())


@dataclass
class SideInfo:
    """Información lateral del repartidor."""
    m_ava: np.ndarray
    scramble_seed: int
    h_fid: float
    payload_length: int = 0

    @property
    def shape(self):
        return self.m_ava.shape

    @property
    def available_pairs(self):
        """Máscara (H, W/2) de pares disponibles."""
        return (self.m_ava[:, 0::2] | self.m_ava[:, 1::2]).astype(bool)

    @property
    def pair_order(self):
        """PairOrder por par, leído de la posición del "1" en M_ava."""
        return np.where(self.m_ava[:, 1::2] == 1, PairOrder.SECOND,
                        PairOrder.FIRST).astype(np.uint8)

    @property
    def available_count(self):
        return int(np.count_nonzero(self.available_pairs))


@dataclass
class PreprocessedImage:
    """Imagen en dominio desordenado: (h, l) en pares disponibles, píxeles en el resto."""
    values: np.ndarray

    @property
    def shape(self):
        return self.values.shape


# --------------------------------------------------------
# Utilidades de pares
# --------------------------------------------------------
def _split_pairs(matrix):
    """(H, W) -> columnas izquierda y derecha, cada una (H, W/2)."""
    return matrix[:, 0::2], matrix[:, 1::2]


def _join_pairs(left, right):
    height, half = left.shape
    out = np.empty((height, 2 * half), dtype=np.result_type(left, right))
    out[:, 0::2] = left
    out[:, 1::2] = right
    return out


def _scramble(matrix, permutation):
    """Reordena los pares: el par k del resultado es el par forward[k]."""
    left, right = _split_pairs(matrix)
    shape = left.shape
    left = left.reshape(-1)[permutation.forward].reshape(shape)
    right = right.reshape(-1)[permutation.forward].reshape(shape)
    return _join_pairs(left, right)


def _unscramble(matrix, permutation):
    left, right = _split_pairs(matrix)
    shape = left.shape
    out_left = np.empty(left.size, dtype=left.dtype)
    out_right = np.empty(right.size, dtype=right.dtype)
    out_left[permutation.forward] = left.reshape(-1)
    out_right[permutation.forward] = right.reshape(-1)
    return _join_pairs(out_left.reshape(shape), out_right.reshape(shape))


def _permutation_for(shape, seed):
    height, width = shape
    return gen_permutation(seed, height * (width // 2))


def _first_pairs(mask, count):
    """Los `count` primeros True de mask en orden fila-mayor (máscara nueva)."""
    flat = mask.reshape(-1)
    chosen = np.zeros(flat.size, dtype=bool)
    chosen[np.flatnonzero(flat)[:count]] = True
    return chosen.reshape(mask.shape)


# --------------------------------------------------------
# Preprocesado
# --------------------------------------------------------
def preprocess_image(img, h_fid=config.H_FID, scramble_seed=0):
    """
    Returns:
        (PreprocessedImage, SideInfo)
    """
    img = np.asarray(img)
    if img.ndim != 2:
        raise DimensionMismatch(f"se esperaba una imagen 2D, forma {img.shape}")
    height, width = img.shape
    if width % 2:
        raise OddWidth(f"ancho {width} impar")
    if img.size and (img.min() < 0 or img.max() > config.PIXEL_MAX):
        raise ValueOutOfRange("píxeles fuera de [0, 255]")

    permutation = _permutation_for(img.shape, scramble_seed)
    scrambled = _scramble(img.astype(np.int64), permutation)
    first, second = _split_pairs(scrambled)

    h, l, order = pairs_to_hl(first, second)
    available = availability_mask(h, l, h_fid)

    values = _join_pairs(np.where(available, h, first),
                         np.where(available, l, second))
    m_ava = _join_pairs(available & (order == PairOrder.FIRST),
                        available & (order == PairOrder.SECOND)).astype(np.uint8)

    side = SideInfo(m_ava=m_ava, scramble_seed=int(scramble_seed), h_fid=h_fid)
    log.info("Preprocesado %dx%d: %d de %d pares disponibles (h_fid=%s)",
             height, width, side.available_count, h.size, h_fid)
    return PreprocessedImage(values=values), side


# --------------------------------------------------------
# Reparto
# --------------------------------------------------------
def _check_keys(keys, shape):
    for key in keys:
        if key.shape != shape:
            raise DimensionMismatch(
                f"clave {key.shareholder_index} de forma {key.shape}, se esperaba {shape}")
        if not key.is_pristine:
            raise LabeledKey(f"la clave {key.shareholder_index} está etiquetada")


def share_image(pre, keys, randomness, params):
    """
    Reparte la imagen preprocesada: c^i = (valor + r*q0) mod ID^i.

    Returns:
        lista de ImageShare (PLAIN), una por clave y en su orden
    """
    _check_keys(keys, pre.shape)
    if randomness.shape != pre.shape:
        raise DimensionMismatch(
            f"R de forma {randomness.shape}, se esperaba {pre.shape}")

    moduli = np.stack([k.primes for k in keys])
    residues = share_array(pre.values, randomness.r, moduli, params.q0)
    shares = [ImageShare(role=ShareRole.PLAIN, shareholder_index=k.shareholder_index,
                         residues=residues[i]) for i, k in enumerate(keys)]
    log.debug("Imagen repartida en %d partes", len(shares))
    return shares


def _keys_for(shares, keys):
    """Claves ordenadas como las partes, emparejadas por índice de accionista."""
    by_index = {k.shareholder_index: k for k in keys}
    matched = []
    for share in shares:
        key = by_index.get(share.shareholder_index)
        if key is None:
            raise InconsistentShares(
                f"falta la clave del accionista {share.shareholder_index}")
        matched.append(key)
    return matched


def _distinct_holders(shares, t):
    """
    Una parte por accionista, en el orden recibido. Repetir una parte no
    cuenta para el umbral; dos partes distintas con el mismo índice son
    inconsistentes.
    """
    seen = {}
    for share in shares:
        first = seen.setdefault(share.shareholder_index, share)
        if first is not share and (first.role != share.role
                                   or first.shape != share.shape
                                   or not np.array_equal(first.residues, share.residues)):
            raise InconsistentShares(
                f"dos partes distintas del accionista {share.shareholder_index}")
    if len(seen) < t:
        raise InsufficientShares(
            f"{len(seen)} accionistas distintos en {len(shares)} partes, umbral t={t}")
    return list(seen.values())


def _t_smallest_product(moduli, t):
    """Producto exacto de los t menores primos de cada posición."""
    ordered = np.sort(moduli, axis=0).astype(exact_dtype(moduli.max(), t))
    return np.prod(ordered[:t], axis=0)


# --------------------------------------------------------
# HDE-ED
# --------------------------------------------------------
def hde_embed(shares, keys, side, payload, params):
    """
    Inserta la carga útil en las partes mediante suma homomórfica.

    Para cada par consumido (fila-mayor en dominio desordenado) y cada parte,
    en la posición h: d = (c + b) mod ID y c' = (c + d) mod ID, es decir la
    parte de 2g + b.

    Si 2g + 1 no cabe bajo el producto de los t menores primos de la posición,
    el par se degrada: se borra en M_ava y sus partes se corrigen con una
    constante homomórfica para que pasen a guardar los píxeles originales.
    El bit pasa al siguiente par disponible.

    Returns:
        (lista de ImageShare HDE_MARKED, SideInfo actualizado)
    """
    payload = np.asarray(payload, dtype=np.int64).reshape(-1)
    if np.any((payload != 0) & (payload != 1)):
        raise ValueOutOfRange("la carga útil debe ser binaria")
    roles = {s.role for s in shares}
    if roles != {ShareRole.PLAIN}:
        raise RoleMismatch(f"hde_embed requiere partes PLAIN, recibidas {sorted(roles)}")
    shares = _distinct_holders(shares, params.t)
    shape = shares[0].shape
    if side.shape != shape:
        raise SideInfoMismatch(f"M_ava de forma {side.shape}, partes {shape}")
    if payload.size > side.available_count:
        raise PayloadTooLarge(
            f"{payload.size} bits para {side.available_count} pares disponibles")

    keys = _keys_for(shares, keys)
    _check_keys(keys, shape)
    moduli = np.stack([k.primes for k in keys])
    residues = np.stack([s.residues for s in shares]).astype(np.int64)

    g = lift_array(residues, moduli, params.t)
    limit = _t_smallest_product(moduli, params.t)
    g_left, g_right = _split_pairs(g)
    limit_left, limit_right = _split_pairs(limit)

    available = side.available_pairs
    fits = available & (2 * g_left + 1 < limit_left)
    consumed = _first_pairs(fits, payload.size)
    if np.count_nonzero(consumed) < payload.size:
        raise PayloadTooLarge(
            f"{payload.size} bits para {np.count_nonzero(fits)} pares utilizables")

    # Solo se degradan los pares recorridos antes del último bit
    if payload.size:
        last = np.flatnonzero(consumed.reshape(-1))[-1]
        reached = (np.arange(available.size) <= last).reshape(available.shape)
    else:
        reached = np.zeros_like(available)
    demoted = available & ~fits & reached

    left = residues[:, :, 0::2]
    right = residues[:, :, 1::2]
    mod_left = moduli[:, :, 0::2]
    mod_right = moduli[:, :, 1::2]

    if np.any(demoted):
        log.warning("%d pares degradados por desbordamiento", np.count_nonzero(demoted))
        q0 = params.q0
        h_val = (g_left % q0).astype(np.int64)
        l_val = (g_right % q0).astype(np.int64)
        orders = side.pair_order
        safe_h = np.where(demoted, h_val, 0)
        safe_l = np.where(demoted, l_val, 0)
        raw_first, raw_second = hl_to_pairs(safe_h, safe_l, orders)
        for gv, limit_v, raw, val, res, mod in (
                (g_left, limit_left, raw_first, h_val, left, mod_left),
                (g_right, limit_right, raw_second, l_val, right, mod_right)):
            delta = (raw - val) % q0
            # g + delta debe seguir bajo el producto de los t menores
            delta = np.where(gv + delta < limit_v, delta, delta - q0).astype(np.int64)
            delta = np.where(demoted, delta, 0)
            res[...] = (res + delta[np.newaxis]) % mod

    bits = np.zeros(available.shape, dtype=np.int64)
    bits[consumed] = payload
    mask = consumed[np.newaxis]
    d = (left + bits[np.newaxis]) % mod_left
    left[...] = np.where(mask, (left + d) % mod_left, left)

    m_ava = side.m_ava.copy()
    m_ava[:, 0::2][demoted] = 0
    m_ava[:, 1::2][demoted] = 0
    new_side = replace(side, m_ava=m_ava, payload_length=int(payload.size))

    marked = [ImageShare(role=ShareRole.HDE_MARKED,
                         shareholder_index=s.shareholder_index,
                         residues=residues[i].astype(s.residues.dtype))
              for i, s in enumerate(shares)]
    log.info("HDE-ED: %d bits insertados en %d partes", payload.size, len(marked))
    return marked, new_side


# --------------------------------------------------------
# Reconstrucción
# --------------------------------------------------------
def reconstruct_image(shares, keys, params, side):
    """
    Reconstruye la imagen (marcada si las partes son HDE_MARKED) con las t
    primeras partes de accionistas distintos; el resto solo se usa para
    comprobar consistencia.

    Returns:
        matriz uint8 H×W
    """
    shares = _distinct_holders(shares, params.t)
    roles = {s.role for s in shares}
    if len(roles) > 1:
        raise MixedRoles(f"partes con roles distintos: {sorted(roles)}")
    if ShareRole.DEIS_MARKED in roles:
        raise RoleMismatch("partes DE-IS: recuperar con deis_recover antes de reconstruir")
    shape = shares[0].shape
    if any(s.shape != shape for s in shares):
        raise DimensionMismatch("partes de tamaños distintos")
    if side.shape != shape:
        raise SideInfoMismatch(f"M_ava de forma {side.shape}, partes {shape}")

    keys = _keys_for(shares, keys)
    _check_keys(keys, shape)
    moduli = np.stack([k.primes for k in keys])
    residues = np.stack([s.residues for s in shares]).astype(np.int64)
    values = reconstruct_array(residues, moduli, params.q0, params.t)

    first, second = _split_pairs(values)
    available = side.available_pairs
    big_first, big_second = hl_to_pairs(np.where(available, first, 0),
                                        np.where(available, second, 0),
                                        side.pair_order)
    scrambled = _join_pairs(np.where(available, big_first, first),
                            np.where(available, big_second, second))
    if scrambled.size and scrambled.max() > config.PIXEL_MAX:
        raise InconsistentShares("valor reconstruido fuera de [0, 255]")

    image = _unscramble(scrambled, _permutation_for(shape, side.scramble_seed))
    log.info("Imagen %s reconstruida con %d partes", "marcada" if
             ShareRole.HDE_MARKED in roles else "original", len(shares))
    return image.astype(np.uint8)


def hde_extract_restore(marked_img, side):
    """
    Extrae la carga útil de la imagen marcada y restaura la original.

    Returns:
        (bits uint8, imagen uint8)
    """
    marked_img = np.asarray(marked_img)
    if marked_img.shape != side.shape:
        raise SideInfoMismatch(
            f"imagen {marked_img.shape} frente a M_ava {side.shape}")
    if side.payload_length > side.available_count:
        raise SideInfoMismatch(
            f"payload_length={side.payload_length} supera los "
            f"{side.available_count} pares disponibles")

    permutation = _permutation_for(marked_img.shape, side.scramble_seed)
    scrambled = _scramble(marked_img.astype(np.int64), permutation)
    first, second = _split_pairs(scrambled)

    orders = side.pair_order
    _, l, _ = pairs_to_hl(first, second)
    h_marked = np.where(orders == PairOrder.FIRST, first - second, second - first)

    consumed = _first_pairs(side.available_pairs, side.payload_length)
    if np.any(h_marked[consumed] < 0):
        raise SideInfoMismatch("orden de M_ava incompatible con la imagen marcada")
    bits = (h_marked[consumed] & 1).astype(np.uint8)

    restored_first, restored_second = hl_to_pairs(
        np.where(consumed, h_marked >> 1, 0), np.where(consumed, l, 0), orders)
    scrambled = _join_pairs(np.where(consumed, restored_first, first),
                            np.where(consumed, restored_second, second))
    image = _unscramble(scrambled, permutation)
    log.info("HDE-ED: %d bits extraídos", bits.size)
    return bits, image.astype(np.uint8)
