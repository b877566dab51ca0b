"""
keying.py - Generación determinista del material de claves.

Todo se deriva de una semilla de 64 bits mediante el generador Philox de numpy
(basado en contador, identificador config.PRNG_ID en las cabeceras). Cada uso
abre un flujo independiente etiquetado con config.STREAM_*:

  - Matrices de primos por accionista (clave SIS).
  - Matriz pública de aleatorizadores R.
  - Flujo de bits de la clave de ocultación (DE-IS).
  - Permutación de pares de píxeles (desordenado).
"""

import logging
from dataclasses import dataclass

import numpy as np

import config
from crt_core import exact_dtype
from errors import OddWidth, PoolTooSmall, SubsetConditionViolated

log = logging.getLogger("Claves")


def stream_generator(seed, stream):
    """Generator Philox para (semilla, etiqueta de flujo)."""
    sequence = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, int(stream)])
    return np.random.Generator(np.random.Philox(sequence))


@dataclass
class SisKeyMatrix:
    """
    Clave SIS de un accionista: matriz H×W de primos del conjunto.

    Durante DE-IS algunas entradas pasan a primo-1 (etiqueta par); en estado
    prístino todas son primos impares.
    """
    shareholder_index: int
    primes: np.ndarray

    @property
    def shape(self):
        return self.primes.shape

    @property
    def is_pristine(self):
        return bool(np.all(self.primes & 1))

    def copy(self):
        return SisKeyMatrix(self.shareholder_index, self.primes.copy())


@dataclass
class PublicRandomness:
    """Matriz pública R de aleatorizadores, entradas en [0, r_bound)."""
    r: np.ndarray

    @property
    def shape(self):
        return self.r.shape


@dataclass(frozen=True)
class KeyStream:
    """Clave de ocultación: flujo de bits reproducible a partir de la semilla."""
    seed: int


@dataclass
class ScramblePermutation:
    """
    Permutación de índices de pares. El par desordenado k es el par original
    forward[k].
    """
    seed: int
    forward: np.ndarray

    @property
    def inverse(self):
        inverse = np.empty_like(self.forward)
        inverse[self.forward] = np.arange(self.forward.size)
        return inverse


# --------------------------------------------------------
# Claves SIS
# --------------------------------------------------------
def gen_sis_keys(params, height, width, seed):
    """
    Genera las n matrices de primos.

    En cada posición se elige al azar un subconjunto ordenado de n primos
    distintos del conjunto; el primo j-ésimo va al accionista j+1.

    Returns:
        lista de n SisKeyMatrix
    """
    if width % 2:
        raise OddWidth(f"ancho {width} impar")
    pool = np.asarray(params.pool, dtype=np.int64)
    if pool.size < params.n:
        raise PoolTooSmall(f"{pool.size} primos para n={params.n}")

    rng = stream_generator(seed, config.STREAM_KEYS)
    positions = height * width
    # Prefijo de una permutación uniforme por posición = muestreo sin reemplazo
    order = np.argsort(rng.random((positions, pool.size)), axis=1)[:, :params.n]
    chosen = pool[order]

    ordered = np.sort(chosen, axis=1).astype(exact_dtype(pool[-1], params.t))
    smallest = np.prod(ordered[:, :params.t], axis=1)
    largest = np.prod(ordered[:, params.n - (params.t - 1):], axis=1)
    if np.any(smallest <= params.q0 * largest):
        raise SubsetConditionViolated("algún subconjunto asignado no cumple el umbral")

    keys = []
    for j in range(params.n):
        primes = chosen[:, j].reshape(height, width).copy()
        keys.append(SisKeyMatrix(shareholder_index=j + 1, primes=primes))
    log.debug("Claves SIS generadas: %d matrices %dx%d", params.n, height, width)
    return keys


def positionwise_distinct(keys):
    """True si en cada posición los n primos asignados son distintos."""
    stack = np.stack([k.primes for k in keys])
    ordered = np.sort(stack, axis=0)
    return bool(np.all(ordered[1:] != ordered[:-1]))


# --------------------------------------------------------
# Aleatoriedad pública
# --------------------------------------------------------
def gen_public_randomness(params, height, width, seed):
    """Matriz R con entradas uniformes en [0, r_bound)."""
    rng = stream_generator(seed, config.STREAM_RANDOMNESS)
    r = rng.integers(0, params.r_bound, size=(height, width), dtype=np.int64)
    return PublicRandomness(r=r)


# --------------------------------------------------------
# Flujo de bits de ocultación
# --------------------------------------------------------
def keystream_bits(ks, count):
    """
    Primeros `count` bits del flujo. El bit i es el bit (i mod 64) de la
    palabra i // 64 de Philox, así que cualquier prefijo es estable.
    """
    count = int(count)
    if count <= 0:
        return np.zeros(0, dtype=np.uint8)
    words = -(-count // 64)
    bit_generator = stream_generator(ks.seed, config.STREAM_KEYSTREAM).bit_generator
    raw = bit_generator.random_raw(words).astype("<u8")
    bits = np.unpackbits(raw.view(np.uint8), bitorder="little")
    return bits[:count].astype(np.uint8)


# --------------------------------------------------------
# Desordenado de pares
# --------------------------------------------------------
def gen_permutation(seed, pair_count):
    """Permutación uniforme (Fisher-Yates) de los índices de pares."""
    rng = stream_generator(seed, config.STREAM_SCRAMBLE)
    forward = rng.permutation(int(pair_count)).astype(np.int64)
    return ScramblePermutation(seed=int(seed), forward=forward)
