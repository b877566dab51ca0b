"""
crt_core.py - Reparto de secreto (t, n) de Asmuth-Bloom con aritmética exacta.

Un valor m en [0, q0) se eleva a g = m + r*q0 y cada accionista guarda
g mod q_i. Con t residuos cualesquiera el teorema chino del resto recupera g
y de ahí m = g mod q0.

Dos variantes de cada operación:
  - Escalar (ScalarShare): sympy para primalidad y combinación CRT.
  - Matricial (arrays numpy de forma (k, H, W)): algoritmo de Garner
    vectorizado, usado por el reparto de imágenes completas.
"""

import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np
from sympy import isprime
from sympy.ntheory.modular import crt

import config
from errors import (DuplicateModulus, InconsistentShares, InsufficientShares,
                    ModulusMismatch, NotPrime, PoolOutOfRange, PoolTooSmall,
                    RandomizerOutOfRange, ThresholdConditionViolated,
                    ValueOutOfRange)

log = logging.getLogger("CRT")

# Por encima de este número de bits los productos no caben en int64
_INT64_SAFE_BITS = 62


@dataclass(frozen=True)
class SisParams:
    """Parámetros globales validados del esquema."""
    w: int
    t: int
    n: int
    q0: int
    pool: tuple
    u: int
    r_bound: int

    @property
    def residue_limit(self):
        """Cota superior de cualquier residuo o primo: 2^(w+1)."""
        return 1 << (self.w + 1)

    def to_dict(self):
        return {"w": self.w, "t": self.t, "n": self.n, "q0": self.q0,
                "pool": list(self.pool)}


@dataclass(frozen=True)
class ScalarShare:
    """Parte i-ésima (q_i, s_i) de un valor."""
    modulus: int
    residue: int

    def __post_init__(self):
        if not 0 <= self.residue < self.modulus:
            raise ValueOutOfRange(
                f"residuo {self.residue} fuera de [0, {self.modulus})")


# --------------------------------------------------------
# Parámetros
# --------------------------------------------------------
def subset_condition_holds(primes, q0, t):
    """
    Condición umbral de Asmuth-Bloom sobre un conjunto de primos:
    producto de los t menores > q0 * producto de los t-1 mayores.
    """
    ordered = sorted(int(p) for p in primes)
    smallest = math.prod(ordered[:t])
    largest = math.prod(ordered[len(ordered) - (t - 1):]) if t > 1 else 1
    return smallest > q0 * largest


def validate_params(w=config.W_BITS, t=config.THRESHOLD, n=config.N_SHAREHOLDERS,
                    q0=config.Q0, pool=config.PRIME_POOL):
    """
    Valida un candidato de parámetros y deriva u y r_bound.

    La condición umbral sobre el conjunto completo domina a la de cualquier
    subconjunto de n primos: sus t menores no pueden tener menor producto ni
    sus t-1 mayores mayor producto que los del conjunto completo. Por eso
    basta comprobarla aquí para que toda asignación de keying sea válida.

    Returns:
        SisParams validado.
    """
    w, t, n, q0 = int(w), int(t), int(n), int(q0)
    if w < 1:
        raise PoolOutOfRange(f"w={w} debe ser positivo")
    if t < 2 or n <= t:
        raise ThresholdConditionViolated(
            f"se requiere 2 <= t < n (t={t}, n={n})")

    low, high = 1 << w, 1 << (w + 1)
    if not isprime(q0):
        raise NotPrime(f"q0={q0} no es primo")
    if not low <= q0 <= high:
        raise PoolOutOfRange(f"q0={q0} fuera de [{low}, {high}]")

    primes = [int(p) for p in pool]
    if len(set(primes)) != len(primes):
        raise DuplicateModulus(f"primos repetidos en el conjunto {primes}")
    primes.sort()
    for p in primes:
        if not isprime(p):
            raise NotPrime(f"{p} no es primo")
        if not low < p < high:
            raise PoolOutOfRange(f"{p} fuera de ({low}, {high})")
        if p <= q0:
            raise PoolOutOfRange(f"{p} no es mayor que q0={q0}")
    if len(primes) < n:
        raise PoolTooSmall(f"{len(primes)} primos para n={n} accionistas")

    u = math.prod(primes[:t])
    bound = q0 * math.prod(primes[len(primes) - (t - 1):])
    if not u > bound:
        raise ThresholdConditionViolated(
            f"u={u} no supera q0 * prod(t-1 mayores)={bound}")

    r_bound = u // (2 * q0)
    if r_bound < 1:
        raise ThresholdConditionViolated(f"r_bound={r_bound} < 1")

    log.debug("Parámetros válidos: t=%d n=%d q0=%d u=%d r_bound=%d",
              t, n, q0, u, r_bound)
    return SisParams(w=w, t=t, n=n, q0=q0, pool=tuple(primes), u=u,
                     r_bound=r_bound)


def default_params():
    """Parámetros de config.py ya validados."""
    return validate_params()


def all_subsets_hold(params):
    """Enumera todos los subconjuntos de n primos del conjunto (tamaños pequeños)."""
    return all(subset_condition_holds(subset, params.q0, params.t)
               for subset in itertools.combinations(params.pool, params.n))


# --------------------------------------------------------
# Operaciones escalares
# --------------------------------------------------------
def _check_distinct(moduli):
    if len(set(moduli)) != len(moduli):
        raise DuplicateModulus(f"módulos repetidos: {list(moduli)}")


def share_scalar(m, r, moduli, q0, r_bound):
    """
    Reparte un valor: g = m + r*q0 y la parte i es g mod moduli[i].

    Args:
        m: valor en [0, q0)
        r: aleatorizador en [0, r_bound)
        moduli: primos distintos, uno por accionista
    Returns:
        lista de ScalarShare en el orden de moduli
    """
    if not 0 <= m < q0:
        raise ValueOutOfRange(f"m={m} fuera de [0, {q0})")
    if not 0 <= r < r_bound:
        raise RandomizerOutOfRange(f"r={r} fuera de [0, {r_bound})")
    moduli = [int(q) for q in moduli]
    _check_distinct(moduli)
    g = m + r * q0
    return [ScalarShare(q, g % q) for q in moduli]


def lift_scalar(shares, t):
    """
    Recupera g combinando las t primeras partes y comprueba el resto.

    Returns:
        g como entero de Python (exacto)
    """
    shares = list(shares)
    if len(shares) < t:
        raise InsufficientShares(f"{len(shares)} partes para umbral t={t}")
    moduli = [s.modulus for s in shares]
    _check_distinct(moduli)

    head = shares[:t]
    combined = crt([s.modulus for s in head], [s.residue for s in head])
    if combined is None:
        raise InconsistentShares("el sistema de congruencias no tiene solución")
    g = int(combined[0])

    for extra in shares[t:]:
        if g % extra.modulus != extra.residue:
            raise InconsistentShares(
                f"la parte mod {extra.modulus} no concuerda con g")
    return g


def reconstruct_scalar(shares, q0, t):
    """Valor secreto g mod q0 a partir de al menos t partes."""
    return lift_scalar(shares, t) % q0


def homomorphic_add(a, b):
    """Suma de dos partes con el mismo módulo (homomorfismo aditivo)."""
    if a.modulus != b.modulus:
        raise ModulusMismatch(f"{a.modulus} != {b.modulus}")
    return ScalarShare(a.modulus, (a.residue + b.residue) % a.modulus)


# --------------------------------------------------------
# Operaciones matriciales
# --------------------------------------------------------
def exact_dtype(max_modulus, count):
    """int64 si el producto de `count` módulos cabe sin desbordar, si no object."""
    bits = int(max_modulus).bit_length() * int(count)
    return np.int64 if bits <= _INT64_SAFE_BITS else object


def share_array(values, r, moduli, q0):
    """
    Reparte una matriz de valores contra una pila de matrices de primos.

    Args:
        values: (H, W) valores en [0, q0)
        r: (H, W) aleatorizadores
        moduli: (k, H, W) primos por accionista y posición
    Returns:
        (k, H, W) residuos
    """
    moduli = np.asarray(moduli)
    g = np.asarray(values, dtype=np.int64) + np.asarray(r, dtype=np.int64) * q0
    return g[np.newaxis, ...] % moduli


def _inverse_table(distinct):
    """table[i, j] = distinct[i]^-1 mod distinct[j] (0 en la diagonal)."""
    size = len(distinct)
    table = np.zeros((size, size), dtype=np.int64)
    for i, a in enumerate(distinct):
        for j, m in enumerate(distinct):
            if i == j:
                continue
            try:
                table[i, j] = pow(int(a), -1, int(m))
            except ValueError:
                raise DuplicateModulus(f"{a} y {m} no son coprimos") from None
    return table


def lift_array(residues, moduli, t):
    """
    Garner vectorizado: recupera g en cada posición con las t primeras capas.

    Las capas adicionales (k > t) solo se usan para comprobar consistencia.

    Args:
        residues: (k, ...) residuos
        moduli: (k, ...) primos, distintos entre capas en cada posición
    Returns:
        g con la forma de una capa (int64, u object si no cabe)
    """
    residues = np.asarray(residues)
    moduli = np.asarray(moduli)
    k = residues.shape[0]
    if k < t:
        raise InsufficientShares(f"{k} partes para umbral t={t}")
    if residues.shape != moduli.shape:
        raise ModulusMismatch("residuos y módulos con formas distintas")
    for i in range(k):
        for j in range(i + 1, k):
            if np.any(moduli[i] == moduli[j]):
                raise DuplicateModulus(
                    f"las capas {i} y {j} comparten módulo en alguna posición")

    distinct = np.unique(moduli)
    index = np.searchsorted(distinct, moduli)
    inverse = _inverse_table(distinct)

    dtype = exact_dtype(distinct[-1], t)
    res = residues.astype(dtype)
    mod = moduli.astype(dtype)

    coeffs = []
    for i in range(t):
        x = res[i] % mod[i]
        for j, v in enumerate(coeffs):
            inv = inverse[index[j], index[i]].astype(dtype)
            x = ((x - v) % mod[i]) * inv % mod[i]
        coeffs.append(x)

    g = np.zeros(res.shape[1:], dtype=dtype)
    radix = np.ones(res.shape[1:], dtype=dtype)
    for i, v in enumerate(coeffs):
        g = g + v * radix
        radix = radix * mod[i]

    for i in range(t, k):
        if np.any(g % mod[i] != res[i]):
            raise InconsistentShares(f"la capa {i} no concuerda con la reconstrucción")
    return g


def reconstruct_array(residues, moduli, q0, t):
    """Valores g mod q0 por posición (int64)."""
    return (lift_array(residues, moduli, t) % q0).astype(np.int64)
